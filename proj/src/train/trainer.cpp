#include "touchdigits/train/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <numeric>

#include "touchdigits/models/models.hpp"
#include "touchdigits/nn/optimizer.hpp"
#include "touchdigits/preprocess/features.hpp"
#include "touchdigits/preprocess/spline.hpp"
#include "touchdigits/train/evaluate.hpp"
#include "touchdigits/util/error.hpp"

namespace touchdigits::train {
namespace {

constexpr std::size_t kBitmapDefaultEpochs = 10;
constexpr std::size_t kPolarDefaultEpochs = 200;

// Independent streams for initialization, shuffling and dropout.
constexpr std::uint64_t kShuffleStream = 0x9E3779B97F4A7C15ULL;
constexpr std::uint64_t kDropoutStream = 0xD1B54A32D192ED03ULL;

nn::Tensor<float> gather(const nn::Tensor<float>& inputs, std::span<const std::size_t> rows) {
  const std::size_t sample = inputs.size() / inputs.dim(0);
  nn::Shape shape = inputs.shape();
  shape[0] = rows.size();
  nn::Tensor<float> out(shape);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::memcpy(out.data() + i * sample, inputs.data() + rows[i] * sample, sample * sizeof(float));
  }
  return out;
}

}  // namespace

TrainConfig TrainConfig::resolved() const {
  TrainConfig c = *this;
  const auto spec = models::build_model(c.model, c.input_mode);
  c.model = spec.name;
  c.input_mode = spec.input_mode;
  const bool bitmap = spec.name == "bitmap2d";
  if (!c.max_epochs) c.max_epochs = bitmap ? kBitmapDefaultEpochs : kPolarDefaultEpochs;
  if (!c.early_stopping) c.early_stopping = !bitmap;
  if (*c.max_epochs < 1) throw InvalidArgument("max_epochs must be at least 1");
  if (c.patience < 1) throw InvalidArgument("patience must be at least 1");
  if (c.batch_size < 1) throw InvalidArgument("batch size must be at least 1");
  nn::OptimizerState{c.base_learning_rate, c.momentum, c.decay_rate, 0, c.nesterov}.validate();
  return c;
}

nlohmann::json to_json(const TrainConfig& c) {
  nlohmann::json j{{"model", c.model},
                   {"input_mode", c.input_mode},
                   {"base_learning_rate", c.base_learning_rate},
                   {"momentum", c.momentum},
                   {"decay_rate", c.decay_rate},
                   {"batch_size", c.batch_size},
                   {"patience", c.patience},
                   {"nesterov", c.nesterov},
                   {"seed", c.seed},
                   {"split_seed", c.split_seed},
                   {"dataset", c.dataset}};
  j["max_epochs"] = c.max_epochs ? nlohmann::json(*c.max_epochs) : nlohmann::json(nullptr);
  j["early_stopping"] = c.early_stopping ? nlohmann::json(*c.early_stopping) : nlohmann::json(nullptr);
  return j;
}

EarlyStopping::EarlyStopping(std::size_t patience) : patience_(patience) {
  if (patience < 1) throw InvalidArgument("patience must be at least 1");
}

bool EarlyStopping::observe(std::size_t epoch, double score) {
  if (best_epoch_ == 0 || score > best_) {
    best_ = score;
    best_epoch_ = epoch;
    since_best_ = 0;
    return true;
  }
  ++since_best_;
  return false;
}

std::array<double, 10> class_median_arclength(std::span<const preprocess::Glyph> glyphs) {
  std::array<std::vector<double>, 10> lengths;
  for (const auto& g : glyphs) {
    if (g.label >= 0 && g.label <= 9) lengths[static_cast<std::size_t>(g.label)].push_back(preprocess::arclength(g));
  }
  std::array<double, 10> out{};
  for (std::size_t c = 0; c < 10; ++c) {
    auto& v = lengths[c];
    if (v.empty()) continue;
    std::sort(v.begin(), v.end());
    const std::size_t mid = v.size() / 2;
    out[c] = v.size() % 2 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
  }
  return out;
}

TrainResult train(const TrainConfig& config, std::span<const preprocess::Glyph> train_set,
                  std::span<const preprocess::Glyph> validation, const TrainCallbacks& callbacks) {
  const TrainConfig cfg = config.resolved();
  if (train_set.empty()) throw InvalidArgument("training split is empty");
  if (validation.empty()) throw InvalidArgument("validation split is empty");
  const nn::ModelSpec spec = models::build_model(cfg.model, cfg.input_mode);

  nn::FeatureNormalization norm;
  if (spec.name == "polar1d") norm = preprocess::fit_length_normalization(train_set);
  const EncodedSet train_data = encode_set(train_set, spec, norm, false);
  const EncodedSet val_data = encode_set(validation, spec, norm, true);
  if (train_data.size() == 0) throw InvalidArgument("no training glyph has a usable encoding");

  nn::Network<float> net(spec);
  net.initialize(cfg.seed);
  nn::SgdMomentum<float> optimizer(
      nn::OptimizerState{cfg.base_learning_rate, cfg.momentum, cfg.decay_rate, 0, cfg.nesterov});
  nn::Rng shuffle_rng(cfg.seed ^ kShuffleStream);
  nn::Rng dropout_rng(cfg.seed ^ kDropoutStream);

  TrainResult result;
  result.skipped = train_data.skipped;
  EarlyStopping stopper(cfg.patience);
  auto best_params = net.params();
  std::vector<std::size_t> order(train_data.size());
  std::iota(order.begin(), order.end(), 0);

  for (std::size_t epoch = 1; epoch <= *cfg.max_epochs; ++epoch) {
    optimizer.state().epoch_index = epoch - 1;
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[shuffle_rng() % i]);

    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t b = std::min(cfg.batch_size, order.size() - start);
      const std::span<const std::size_t> rows(order.data() + start, b);
      std::vector<int> labels(b);
      for (std::size_t k = 0; k < b; ++k) labels[k] = train_data.labels[rows[k]];
      nn::ForwardTrace<float> trace;
      const auto probs = net.forward(gather(train_data.inputs, rows), nn::Mode::train, &dropout_rng, &trace);
      const double loss = nn::mean_cross_entropy(probs, labels);
      if (!std::isfinite(loss)) {
        throw NumericError("non-finite training loss at epoch " + std::to_string(epoch) + ", batch starting at " +
                           std::to_string(start));
      }
      loss_sum += loss * static_cast<double>(b);
      optimizer.step(net.params(), net.backward(trace, labels));
    }

    HistoryRow row;
    row.epoch = epoch;
    row.train_loss = loss_sum / static_cast<double>(order.size());
    row.val_accuracy = evaluate(net, val_data).accuracy;
    row.lr_eff = optimizer.state().effective_learning_rate();
    result.history.push_back(row);
    if (callbacks.on_epoch) callbacks.on_epoch(row);

    if (stopper.observe(epoch, row.val_accuracy)) best_params = net.params();
    if (*cfg.early_stopping && stopper.should_stop()) {
      result.stopped_early = epoch < *cfg.max_epochs;
      break;
    }
  }

  net.params() = best_params;
  result.best_epoch = stopper.best_epoch();
  result.best_val_accuracy = stopper.best_score();
  result.checkpoint = nn::make_checkpoint(net);
  result.checkpoint.normalization = norm;
  result.checkpoint.class_median_arclength = class_median_arclength(train_set);
  result.checkpoint.seed = cfg.seed;
  result.checkpoint.metadata = {{"config", to_json(cfg)},
                                {"best_epoch", result.best_epoch},
                                {"best_val_accuracy", result.best_val_accuracy},
                                {"epochs_run", result.history.size()},
                                {"train_count", train_data.size()},
                                {"validation_count", val_data.size()}};
  return result;
}

TrainResult train(const TrainConfig& config, const data::Dataset& dataset, const TrainCallbacks& callbacks) {
  const auto parts = data::apply_split(dataset, data::split(dataset, config.split_seed));
  TrainResult result = train(config, parts.train, parts.validation, callbacks);
  result.checkpoint.metadata["dataset_provenance"] = dataset.provenance;
  return result;
}

void write_history_csv(const std::vector<HistoryRow>& history, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "epoch,train_loss,val_accuracy,lr_eff\n" << std::setprecision(10);
  for (const auto& r : history) {
    out << r.epoch << ',' << r.train_loss << ',' << r.val_accuracy << ',' << r.lr_eff << '\n';
  }
  if (!out) throw IoError("cannot write " + path.string());
}

}  // namespace touchdigits::train
