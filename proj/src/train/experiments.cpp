#include "touchdigits/train/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>

#include "touchdigits/models/models.hpp"
#include "touchdigits/preprocess/completion.hpp"
#include "touchdigits/util/error.hpp"

namespace touchdigits::train {
namespace {

std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = r;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

std::vector<CurvePoint> completion_curve(const nn::Checkpoint& checkpoint, std::span<const Glyph> glyphs,
                                         std::span<const double> fractions) {
  if (fractions.empty() || fractions.back() != 1.0) {
    throw InvalidArgument("completion fractions must end with 1.0");
  }
  for (std::size_t i = 0; i < fractions.size(); ++i) {
    if (!(fractions[i] >= 0.0 && fractions[i] <= 1.0)) throw InvalidArgument("completion fractions must lie in [0, 1]");
    if (i > 0 && fractions[i] < fractions[i - 1]) throw InvalidArgument("completion fractions must be sorted");
  }
  const auto net = nn::make_network(checkpoint);
  std::vector<CurvePoint> curve;
  std::vector<Glyph> prefixes(glyphs.size());
  for (double f : fractions) {
    for (std::size_t i = 0; i < glyphs.size(); ++i) prefixes[i] = preprocess::completion_prefix(glyphs[i], f);
    const auto set = encode_set(prefixes, checkpoint.spec, checkpoint.normalization, true);
    curve.push_back({f, evaluate(net, set).accuracy});
  }
  return curve;
}

void write_curve_csv(const std::vector<CurvePoint>& curve, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "fraction,accuracy\n" << std::setprecision(10);
  for (const auto& p : curve) out << p.fraction << ',' << p.accuracy << '\n';
  if (!out) throw IoError("cannot write " + path.string());
}

image::Image plot_curve(const std::vector<CurvePoint>& curve) {
  constexpr long kW = 480, kH = 340, kLeft = 50, kRight = 20, kTop = 30, kBottom = 40;
  constexpr image::Rgb kGrid{225, 225, 225};
  constexpr image::Rgb kLine{31, 90, 180};
  image::Image img(kW, kH);
  const long pw = kW - kLeft - kRight;
  const long ph = kH - kTop - kBottom;
  auto px = [&](double f) { return kLeft + static_cast<long>(std::lround(f * static_cast<double>(pw))); };
  auto py = [&](double a) { return kTop + ph - static_cast<long>(std::lround(a * static_cast<double>(ph))); };

  for (int k = 0; k <= 10; ++k) {
    const double v = k / 10.0;
    img.line(px(v), kTop, px(v), kTop + ph, kGrid);
    img.line(kLeft, py(v), kLeft + pw, py(v), kGrid);
  }
  img.line(kLeft, kTop, kLeft, kTop + ph, image::kBlack);
  img.line(kLeft, kTop + ph, kLeft + pw, kTop + ph, image::kBlack);
  for (int k = 0; k <= 10; k += 2) {
    std::ostringstream label;
    label << std::fixed << std::setprecision(1) << k / 10.0;
    const std::string s = label.str();
    img.text(px(k / 10.0) - image::Image::text_width(s, 2) / 2, kTop + ph + 8, s, image::kBlack, 2);
    img.text(kLeft - 8 - image::Image::text_width(s, 2), py(k / 10.0) - 5, s, image::kBlack, 2);
  }
  img.text(kLeft, 8, "ACCURACY VS COMPLETION", image::kBlack, 2);
  for (std::size_t i = 0; i < curve.size(); ++i) {
    const long x = px(curve[i].fraction);
    const long y = py(curve[i].accuracy);
    if (i > 0) img.line(px(curve[i - 1].fraction), py(curve[i - 1].accuracy), x, y, kLine);
    img.fill_rect(x - 2, y - 2, 5, 5, kLine);
  }
  return img;
}

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw InvalidArgument("spearman needs equal-length samples");
  if (x.size() < 2) return 0.0;
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

std::vector<AblationRow> ablation_run(const TrainConfig& base, const data::Dataset& dataset,
                                      const TrainCallbacks& callbacks) {
  const auto parts = data::apply_split(dataset, data::split(dataset, base.split_seed));
  std::vector<AblationRow> rows;
  for (const std::string mode : {"distance", "angle", "both"}) {
    TrainConfig cfg = base;
    cfg.model = "polar1d";
    cfg.input_mode = mode;
    const auto result = train(cfg, parts.train, parts.validation, callbacks);
    AblationRow row;
    row.input_mode = mode;
    row.test_accuracy = evaluate(result.checkpoint, parts.test).accuracy;
    row.parameters = nn::count_parameters(result.checkpoint.spec);
    row.best_epoch = result.best_epoch;
    row.epochs_run = result.history.size();
    rows.push_back(row);
  }
  return rows;
}

nlohmann::json to_json(const std::vector<AblationRow>& rows) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& r : rows) {
    out.push_back({{"input_mode", r.input_mode},
                   {"test_accuracy", r.test_accuracy},
                   {"parameters", r.parameters},
                   {"best_epoch", r.best_epoch},
                   {"epochs_run", r.epochs_run}});
  }
  return out;
}

std::vector<GalleryEntry> error_gallery(const nn::Checkpoint& checkpoint, std::span<const Glyph> glyphs,
                                        std::size_t k) {
  if (k < 1) throw InvalidArgument("gallery size must be at least 1");
  const Metrics m = evaluate(checkpoint, glyphs);
  std::vector<GalleryEntry> errors;
  for (std::size_t i = 0; i < glyphs.size(); ++i) {
    const int pred = m.predictions[i];
    if (pred == glyphs[i].label) continue;
    GalleryEntry e;
    e.id = glyphs[i].id;
    e.label = glyphs[i].label;
    e.predicted = pred;
    e.confidence = m.probabilities[i * 10 + static_cast<std::size_t>(pred)];
    errors.push_back(e);
  }
  std::stable_sort(errors.begin(), errors.end(),
                   [](const GalleryEntry& a, const GalleryEntry& b) { return a.confidence > b.confidence; });
  if (errors.size() > k) errors.resize(k);
  for (auto& e : errors) {
    const auto it = std::find_if(glyphs.begin(), glyphs.end(), [&](const Glyph& g) { return g.id == e.id; });
    e.bitmap = preprocess::rasterize(*it);
  }
  return errors;
}

image::Image render_gallery(const std::vector<GalleryEntry>& entries, std::size_t columns) {
  constexpr long kScale = 3;
  constexpr long kCell = 28 * kScale;
  constexpr long kCaption = 14;
  constexpr long kPad = 6;
  if (entries.empty()) {
    image::Image img(160, 40);
    img.text(10, 12, "NO ERRORS", image::kBlack, 3);
    return img;
  }
  columns = std::max<std::size_t>(1, std::min(columns, entries.size()));
  const std::size_t rows = (entries.size() + columns - 1) / columns;
  image::Image img(columns * (kCell + kPad) + kPad, rows * (kCell + kCaption + kPad) + kPad);
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const long x0 = kPad + static_cast<long>(i % columns) * (kCell + kPad);
    const long y0 = kPad + static_cast<long>(i / columns) * (kCell + kCaption + kPad);
    for (std::size_t r = 0; r < 28; ++r) {
      for (std::size_t c = 0; c < 28; ++c) {
        const auto v = static_cast<std::uint8_t>(std::lround(255.0 * (1.0 - entries[i].bitmap.at(r, c))));
        img.fill_rect(x0 + static_cast<long>(c) * kScale, y0 + static_cast<long>(r) * kScale, kScale, kScale,
                      {v, v, v});
      }
    }
    const std::string caption = "T" + std::to_string(entries[i].label) + " P" +
                                std::to_string(entries[i].predicted) + " " +
                                std::to_string(static_cast<int>(std::lround(100.0 * entries[i].confidence))) + "%";
    img.text(x0, y0 + kCell + 3, caption, {180, 20, 20}, 2);
  }
  return img;
}

nlohmann::json to_json(const std::vector<GalleryEntry>& entries) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& e : entries) {
    out.push_back({{"id", e.id}, {"label", e.label}, {"predicted", e.predicted}, {"confidence", e.confidence}});
  }
  return out;
}

}  // namespace touchdigits::train
