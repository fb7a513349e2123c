#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "touchdigits/preprocess/raster.hpp"
#include "touchdigits/train/evaluate.hpp"
#include "touchdigits/train/trainer.hpp"
#include "touchdigits/util/image.hpp"

namespace touchdigits::train {

// --- accuracy versus completion ------------------------------------------

struct CurvePoint {
  double fraction = 0.0;
  double accuracy = 0.0;
};

// Evaluates arclength prefixes of every glyph. Fractions must be sorted,
// within [0, 1] and end with 1.0; the 1.0 entry goes through the same path
// as evaluate() and therefore matches it exactly.
std::vector<CurvePoint> completion_curve(const nn::Checkpoint& checkpoint,
                                         std::span<const Glyph> glyphs,
                                         std::span<const double> fractions);

void write_curve_csv(const std::vector<CurvePoint>& curve, const std::filesystem::path& path);
image::Image plot_curve(const std::vector<CurvePoint>& curve);

// Spearman rank correlation with average ranks for ties; 0 when either
// side is constant.
double spearman(std::span<const double> x, std::span<const double> y);

// --- feature ablation -----------------------------------------------------

struct AblationRow {
  std::string input_mode;
  double test_accuracy = 0.0;
  std::size_t parameters = 0;
  std::size_t best_epoch = 0;
  std::size_t epochs_run = 0;
};

// Trains polar models on distance, angle and both inputs with identical
// seeds and split, and reports test accuracy.
std::vector<AblationRow> ablation_run(const TrainConfig& base, const data::Dataset& dataset,
                                      const TrainCallbacks& callbacks = {});

nlohmann::json to_json(const std::vector<AblationRow>& rows);

// --- misclassification gallery --------------------------------------------

struct GalleryEntry {
  std::uint64_t id = 0;
  int label = 0;
  int predicted = 0;
  double confidence = 0.0;  // probability of the wrong prediction
  preprocess::Bitmap28 bitmap;
};

// Up to k misclassified glyphs, most confident first. k must be at least 1.
std::vector<GalleryEntry> error_gallery(const nn::Checkpoint& checkpoint, std::span<const Glyph> glyphs,
                                        std::size_t k);

// Grid of enlarged bitmaps captioned "T<true> P<pred> <confidence%>".
image::Image render_gallery(const std::vector<GalleryEntry>& entries, std::size_t columns = 8);
nlohmann::json to_json(const std::vector<GalleryEntry>& entries);

}  // namespace touchdigits::train
