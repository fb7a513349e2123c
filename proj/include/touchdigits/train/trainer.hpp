#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "touchdigits/data/dataset.hpp"
#include "touchdigits/data/split.hpp"
#include "touchdigits/nn/checkpoint.hpp"

namespace touchdigits::train {

struct TrainConfig {
  std::string model = "polar1d";
  std::string input_mode = "both";  // ignored by bitmap2d
  double base_learning_rate = 0.01;
  double momentum = 0.9;
  double decay_rate = 0.95;
  std::size_t batch_size = 64;
  // Unset fields take the model's default: bitmap2d trains a fixed 10
  // epochs, polar1d trains up to 200 epochs with early stopping.
  std::optional<std::size_t> max_epochs;
  std::optional<bool> early_stopping;
  std::size_t patience = 18;
  bool nesterov = false;
  std::uint64_t seed = 1;
  std::uint64_t split_seed = 1;
  std::string dataset;  // informational; recorded in checkpoint metadata

  // Copy with model defaults filled in and values validated.
  TrainConfig resolved() const;
};

nlohmann::json to_json(const TrainConfig& config);

// Stops once `patience` epochs pass without a strictly better score.
class EarlyStopping {
 public:
  explicit EarlyStopping(std::size_t patience);

  // Records the score for a 1-based epoch; returns true when it improved.
  bool observe(std::size_t epoch, double score);
  bool should_stop() const { return since_best_ >= patience_; }
  std::size_t best_epoch() const { return best_epoch_; }
  double best_score() const { return best_; }

 private:
  std::size_t patience_;
  std::size_t best_epoch_ = 0;
  std::size_t since_best_ = 0;
  double best_ = 0.0;
};

struct HistoryRow {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_accuracy = 0.0;
  double lr_eff = 0.0;
};

struct TrainResult {
  nn::Checkpoint checkpoint;  // parameters of the best validation epoch
  std::vector<HistoryRow> history;
  std::size_t best_epoch = 0;
  double best_val_accuracy = 0.0;
  bool stopped_early = false;
  std::size_t skipped = 0;  // training glyphs without a usable encoding
};

struct TrainCallbacks {
  std::function<void(const HistoryRow&)> on_epoch;
};

// Trains on `train_set`, selecting the epoch by accuracy on `validation`.
// A non-finite loss throws NumericError; empty sets throw InvalidArgument.
TrainResult train(const TrainConfig& config, std::span<const preprocess::Glyph> train_set,
                  std::span<const preprocess::Glyph> validation, const TrainCallbacks& callbacks = {});

// Splits with config.split_seed and trains on the train and validation buckets.
TrainResult train(const TrainConfig& config, const data::Dataset& dataset,
                  const TrainCallbacks& callbacks = {});

void write_history_csv(const std::vector<HistoryRow>& history, const std::filesystem::path& path);

// Median glyph arclength per label; 0 for absent labels.
std::array<double, 10> class_median_arclength(std::span<const preprocess::Glyph> glyphs);

}  // namespace touchdigits::train
