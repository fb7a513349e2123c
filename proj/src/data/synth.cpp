#include "touchdigits/data/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "touchdigits/preprocess/polar.hpp"
#include "touchdigits/preprocess/spline.hpp"
#include "touchdigits/util/error.hpp"

namespace touchdigits::data {
namespace {

using preprocess::Point2;
using preprocess::Stroke;
using preprocess::TouchPoint;

constexpr double kTemplateCenter = 150.0;
constexpr double kStrokeGapMin = 120.0;  // ms between strokes
constexpr double kStrokeGapMax = 350.0;

Stroke poly(std::initializer_list<std::pair<double, double>> pts) {
  Stroke s;
  for (const auto& [x, y] : pts) s.points.push_back({x, y, 0.0});
  return s;
}

std::vector<Template> make_templates() {
  std::vector<Template> t;
  // 0: counter-clockwise oval from the top.
  {
    Stroke s;
    for (int i = 0; i <= 20; ++i) {
      const double a = std::numbers::pi / 2 + 2 * std::numbers::pi * i / 20.0 * 1.04;
      s.points.push_back({std::round(150 + 80 * std::cos(a)), std::round(150 - 110 * std::sin(a)), 0.0});
    }
    t.push_back({0, {s}});
  }
  t.push_back({1, {poly({{150, 40}, {150, 150}, {150, 260}})}});
  t.push_back({1, {poly({{110, 85}, {150, 40}, {150, 150}, {150, 260}})}});
  t.push_back({2, {poly({{75, 95}, {100, 55}, {150, 40}, {200, 55}, {220, 95}, {205, 140},
                         {150, 190}, {80, 260}, {150, 260}, {225, 260}})}});
  t.push_back({3, {poly({{80, 60}, {150, 40}, {215, 70}, {210, 120}, {150, 145}, {215, 175},
                         {220, 225}, {150, 260}, {75, 240}})}});
  t.push_back({4, {poly({{170, 40}, {120, 115}, {70, 190}, {150, 190}, {230, 190}}),
                   poly({{180, 110}, {180, 185}, {180, 260}})}});
  t.push_back({4, {poly({{175, 260}, {175, 150}, {175, 40}, {120, 115}, {70, 190}, {150, 190}, {235, 190}})}});
  t.push_back({5, {poly({{95, 40}, {90, 135}, {150, 120}, {210, 150}, {220, 205}, {180, 255},
                         {120, 260}, {75, 235}}),
                   poly({{95, 40}, {155, 40}, {215, 40}})}});
  t.push_back({5, {poly({{215, 40}, {155, 40}, {95, 40}, {90, 135}, {150, 120}, {210, 150},
                         {220, 205}, {180, 255}, {120, 260}, {75, 235}})}});
  t.push_back({6, {poly({{200, 50}, {150, 40}, {100, 80}, {80, 160}, {90, 230}, {150, 260},
                         {205, 230}, {210, 180}, {160, 150}, {110, 165}, {85, 200}})}});
  t.push_back({7, {poly({{75, 45}, {150, 45}, {225, 45}, {180, 150}, {130, 260}})}});
  t.push_back({7, {poly({{75, 45}, {150, 45}, {225, 45}, {180, 150}, {130, 260}}),
                   poly({{110, 150}, {155, 150}, {200, 150}})}});
  t.push_back({8, {poly({{205, 70}, {150, 40}, {95, 65}, {100, 115}, {150, 145}, {210, 185},
                         {205, 240}, {150, 260}, {95, 240}, {90, 185}, {150, 145}, {200, 110},
                         {205, 70}})}});
  t.push_back({9, {poly({{215, 80}, {180, 45}, {120, 45}, {90, 90}, {110, 130}, {170, 135},
                         {215, 90}, {210, 160}, {195, 260}})}});
  return t;
}

struct Affine {
  double a = 1, b = 0, c = 0, d = 1;  // row-major 2x2
  double tx = 0, ty = 0;

  Point2 apply(double x, double y) const {
    const double u = x - kTemplateCenter;
    const double v = y - kTemplateCenter;
    return {kTemplateCenter + a * u + b * v + tx, kTemplateCenter + c * u + d * v + ty};
  }
};

Affine random_affine(std::mt19937_64& rng, const NoiseProfile& p, double& scale) {
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_real_distribution<double> scale_dist(p.scale_min, p.scale_max);
  const double theta = unit(rng) * p.max_rotation_deg * std::numbers::pi / 180.0;
  const double shear = unit(rng) * p.max_shear;
  scale = p.scale_min == p.scale_max ? p.scale_min : scale_dist(rng);
  const double tx = unit(rng) * p.max_translation;
  const double ty = unit(rng) * p.max_translation;
  const double cs = std::cos(theta);
  const double sn = std::sin(theta);
  // rotation * shear * scale
  Affine m;
  m.a = scale * cs;
  m.b = scale * (cs * shear - sn);
  m.c = scale * sn;
  m.d = scale * (sn * shear + cs);
  m.tx = tx;
  m.ty = ty;
  return m;
}

// Rounds to 1/per_unit; integers stay exact.
double round_to(double v, double per_unit) { return std::round(v * per_unit) / per_unit; }

// Touch samples along the path at `hz`, with speed dipping towards both
// ends. Returns positions and times relative to the stroke start (ms).
std::vector<TouchPoint> resample(const std::vector<Point2>& path, double speed, const NoiseProfile& p) {
  std::vector<double> s(path.size(), 0.0);
  for (std::size_t i = 1; i < path.size(); ++i) {
    s[i] = s[i - 1] + std::hypot(path[i].x - path[i - 1].x, path[i].y - path[i - 1].y);
  }
  const double total = s.back();
  if (total <= 0.0) return {{path.front().x, path.front().y, 0.0}};

  // Time at each dense vertex for unit mean speed.
  std::vector<double> time(path.size(), 0.0);
  for (std::size_t i = 1; i < path.size(); ++i) {
    const double u = 0.5 * (s[i] + s[i - 1]) / total;
    const double c = std::cos(std::numbers::pi * u);
    const double rel = 1.0 - p.speed_swing * c * c;
    time[i] = time[i - 1] + (s[i] - s[i - 1]) / rel;
  }
  double duration = time.back() / speed;
  // Never exceed the point budget: samples at 0, 1/hz, ... plus the end.
  const double max_duration = static_cast<double>(p.max_points_per_stroke - 2) / p.sample_hz;
  if (duration > max_duration) duration = max_duration;
  const double to_seconds = duration / time.back();

  std::vector<TouchPoint> out;
  const std::size_t steps = static_cast<std::size_t>(std::floor(duration * p.sample_hz));
  std::size_t j = 1;
  for (std::size_t k = 0; k <= steps; ++k) {
    const double tk = static_cast<double>(k) / p.sample_hz;
    while (j + 1 < path.size() && time[j] * to_seconds < tk) ++j;
    const double t0 = time[j - 1] * to_seconds;
    const double t1 = time[j] * to_seconds;
    const double w = t1 > t0 ? std::clamp((tk - t0) / (t1 - t0), 0.0, 1.0) : 1.0;
    out.push_back({path[j - 1].x + w * (path[j].x - path[j - 1].x),
                   path[j - 1].y + w * (path[j].y - path[j - 1].y), tk * 1000.0});
  }
  if (duration * p.sample_hz - static_cast<double>(steps) > 1e-9) {
    out.push_back({path.back().x, path.back().y, duration * 1000.0});
  }
  return out;
}

}  // namespace

NoiseProfile NoiseProfile::zero() {
  NoiseProfile p;
  p.max_rotation_deg = 0.0;
  p.scale_min = 1.0;
  p.scale_max = 1.0;
  p.max_shear = 0.0;
  p.max_translation = 0.0;
  p.point_sigma = 0.0;
  p.sample_hz = 0.0;
  p.speed_swing = 0.0;
  return p;
}

const std::vector<Template>& digit_templates() {
  static const std::vector<Template> templates = make_templates();
  return templates;
}

Dataset synth_generate(std::size_t count, std::uint64_t seed, const NoiseProfile& profile) {
  if (count == 0) throw InvalidArgument("synthetic dataset needs count > 0");
  if (profile.scale_min <= 0.0 || profile.scale_max < profile.scale_min) {
    throw InvalidArgument("noise profile scale range is invalid");
  }
  if (profile.sample_hz > 0.0 &&
      (profile.speed_min <= 0.0 || profile.speed_max < profile.speed_min || profile.max_points_per_stroke < 3)) {
    throw InvalidArgument("noise profile speed settings are invalid");
  }
  const auto& templates = digit_templates();
  std::array<std::vector<const Template*>, 10> variants;
  for (const auto& t : templates) variants[static_cast<std::size_t>(t.label)].push_back(&t);

  Dataset ds;
  ds.provenance = "synthetic: count=" + std::to_string(count) + " seed=" + std::to_string(seed);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> speed_dist(profile.speed_min, profile.speed_max);
  std::uniform_real_distribution<double> gap_dist(kStrokeGapMin, kStrokeGapMax);
  std::normal_distribution<double> noise(0.0, 1.0);

  for (std::size_t i = 0; i < count; ++i) {
    Glyph g;
    g.id = i;
    g.subject_id = kSyntheticSubject;
    g.label = static_cast<int>(i % 10);
    const auto& options = variants[static_cast<std::size_t>(g.label)];
    const Template& tpl = *options[static_cast<std::size_t>(rng() % options.size())];
    g.input_method = (rng() & 1U) ? preprocess::InputMethod::thumb : preprocess::InputMethod::finger;
    double scale = 1.0;
    const Affine map = random_affine(rng, profile, scale);
    const double speed = profile.sample_hz > 0.0 ? speed_dist(rng) : 0.0;
    double sigma = profile.point_sigma * scale;
    if (g.input_method == preprocess::InputMethod::thumb) sigma *= profile.thumb_sigma_factor;

    double clock = 0.0;
    for (const auto& stroke : tpl.strokes) {
      std::vector<Point2> vertices;
      for (const auto& p : stroke.points) vertices.push_back(map.apply(p.x, p.y));

      std::vector<TouchPoint> points;
      if (profile.sample_hz <= 0.0) {
        // Vertices as they are, timed at one pixel per millisecond.
        double t = 0.0;
        for (std::size_t k = 0; k < vertices.size(); ++k) {
          if (k > 0) t += std::hypot(vertices[k].x - vertices[k - 1].x, vertices[k].y - vertices[k - 1].y);
          points.push_back({vertices[k].x, vertices[k].y, t});
        }
      } else {
        const auto path = preprocess::sample_catmull_rom(vertices, [](std::size_t, double chord) {
          return static_cast<std::size_t>(std::ceil(chord / 2.0)) + 1;
        });
        points = resample(path, speed, profile);
      }

      Stroke out;
      for (auto& p : points) {
        if (sigma > 0.0) {
          p.x += sigma * noise(rng);
          p.y += sigma * noise(rng);
        }
        out.points.push_back({round_to(p.x, 100.0), round_to(p.y, 100.0), round_to(clock + p.t, 1000.0)});
      }
      clock = out.points.back().t + (profile.sample_hz > 0.0 ? gap_dist(rng) : 200.0);
      g.strokes.push_back(std::move(out));
    }
    ds.glyphs.push_back(std::move(g));
  }
  return ds;
}

}  // namespace touchdigits::data
