#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <fstream>

#include "touchdigits/data/synth.hpp"
#include "touchdigits/models/models.hpp"
#include "touchdigits/train/evaluate.hpp"
#include "touchdigits/train/experiments.hpp"
#include "touchdigits/train/trainer.hpp"
#include "touchdigits/util/error.hpp"
#include "touchdigits/util/log.hpp"

using namespace touchdigits;
using namespace touchdigits::train;

namespace {

std::filesystem::path temp_path(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "touchdigits_test_train";
  std::filesystem::create_directories(dir);
  return dir / name;
}

// A checkpoint whose output is dominated by class `c` for every input.
nn::Checkpoint constant_model(const nn::ModelSpec& spec, int c) {
  nn::Network<float> net(spec);
  net.initialize(1);
  auto& last = net.params()[spec.layers.size() - 2];
  last.biases[static_cast<std::size_t>(c)] = 100.0f;
  return nn::make_checkpoint(net);
}

TrainConfig tiny_polar(std::size_t epochs) {
  TrainConfig c;
  c.model = "polar1d";
  c.input_mode = "both";
  c.max_epochs = epochs;
  c.seed = 5;
  c.split_seed = 6;
  return c;
}

}  // namespace

TEST_CASE("early stopping with constant validation accuracy from epoch 5") {
  EarlyStopping stop(18);
  std::size_t epoch = 0;
  while (!stop.should_stop()) {
    ++epoch;
    REQUIRE(epoch <= 100);
    stop.observe(epoch, epoch <= 5 ? 0.1 * static_cast<double>(epoch) : 0.5);
  }
  CHECK(epoch == 23);
  CHECK(stop.best_epoch() == 5);
}

TEST_CASE("early stopping never triggers while accuracy strictly improves") {
  EarlyStopping stop(18);
  for (std::size_t epoch = 1; epoch <= 200; ++epoch) {
    CHECK(stop.observe(epoch, static_cast<double>(epoch)));
    CHECK_FALSE(stop.should_stop());
  }
  CHECK_THROWS_AS(EarlyStopping(0), InvalidArgument);
}

TEST_CASE("config defaults follow the model") {
  TrainConfig c;
  c.model = "bitmap2d";
  auto r = c.resolved();
  CHECK(*r.max_epochs == 10);
  CHECK_FALSE(*r.early_stopping);
  c.model = "polar1d";
  r = c.resolved();
  CHECK(*r.early_stopping);
  CHECK(r.patience == 18);
  CHECK(r.momentum == 0.9);
  CHECK(r.decay_rate == 0.95);
  c.patience = 0;
  CHECK_THROWS_AS(c.resolved(), InvalidArgument);
}

TEST_CASE("metrics of a constant predictor on a balanced set") {
  std::vector<int> labels;
  for (int i = 0; i < 50; ++i) labels.push_back(i % 10);
  nn::Tensor<float> probs({50, 10});
  for (std::size_t i = 0; i < 50; ++i) probs[i * 10] = 1.0f;
  const auto m = compute_metrics(probs, labels);
  CHECK(m.accuracy == doctest::Approx(0.10));
  for (std::size_t c = 0; c < 10; ++c) {
    CHECK(m.confusion[c][0] == 5);
    std::size_t row = 0;
    for (auto v : m.confusion[c]) row += v;
    CHECK(row == 5);
  }
  CHECK(m.recall[0] == 1.0);
  CHECK(m.precision[0] == doctest::Approx(0.1));
}

TEST_CASE("metrics of a perfect oracle") {
  std::vector<int> labels{3, 1, 4, 1, 5, 9, 2, 6};
  nn::Tensor<float> probs({labels.size(), 10});
  for (std::size_t i = 0; i < labels.size(); ++i) probs[i * 10 + static_cast<std::size_t>(labels[i])] = 1.0f;
  const auto m = compute_metrics(probs, labels);
  CHECK(m.accuracy == 1.0);
  CHECK(m.loss == doctest::Approx(0.0));
  std::size_t trace = 0;
  for (std::size_t c = 0; c < 10; ++c) trace += m.confusion[c][c];
  CHECK(trace == labels.size());
}

TEST_CASE("evaluate rejects labels outside 0-9 and is repeatable") {
  auto ds = data::synth_generate(60, 3);
  const auto ck = constant_model(models::build_polar_model(preprocess::PolarInput::both), 0);
  const auto a = evaluate(ck, ds.glyphs);
  const auto b = evaluate(ck, ds.glyphs);
  CHECK(a.accuracy == doctest::Approx(0.10));
  CHECK(a.accuracy == b.accuracy);
  CHECK(a.probabilities == b.probabilities);
  ds.glyphs[4].label = 11;
  CHECK_THROWS_AS(evaluate(ck, ds.glyphs), InvalidArgument);
}

TEST_CASE("training is deterministic and records the decayed learning rate") {
  const auto ds = data::synth_generate(200, 21);
  const auto a = train::train(tiny_polar(3), ds);
  const auto b = train::train(tiny_polar(3), ds);
  REQUIRE(a.history.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(a.history[i].epoch == i + 1);
    CHECK(a.history[i].train_loss == b.history[i].train_loss);
    CHECK(a.history[i].val_accuracy == b.history[i].val_accuracy);
    CHECK(a.history[i].lr_eff == doctest::Approx(0.01 * std::pow(0.95, static_cast<double>(i))));
  }
  CHECK(nn::serialize_checkpoint(a.checkpoint) == nn::serialize_checkpoint(b.checkpoint));
  double best = 0.0;
  for (const auto& r : a.history) best = std::max(best, r.val_accuracy);
  CHECK(a.best_val_accuracy == best);
  CHECK(a.checkpoint.normalization.length_std > 0.0);
  CHECK(a.checkpoint.class_median_arclength[1] > 0.0);

  auto other = tiny_polar(3);
  other.seed = 99;
  CHECK(nn::serialize_checkpoint(train::train(other, ds).checkpoint) != nn::serialize_checkpoint(a.checkpoint));
}

TEST_CASE("the best epoch's parameters are returned") {
  const auto ds = data::synth_generate(200, 22);
  const auto parts = data::apply_split(ds, data::split(ds, 6));
  const auto result = train::train(tiny_polar(4), parts.train, parts.validation);
  const auto m = evaluate(result.checkpoint, parts.validation);
  CHECK(m.accuracy == result.history[result.best_epoch - 1].val_accuracy);
}

TEST_CASE("stalled validation accuracy stops after exactly `patience` epochs") {
  const auto ds = data::synth_generate(100, 23);
  auto cfg = tiny_polar(50);
  cfg.base_learning_rate = 1e-12;  // parameters effectively frozen
  cfg.patience = 3;
  const auto r = train::train(cfg, ds);
  CHECK(r.history.size() == 4);
  CHECK(r.best_epoch == 1);
  CHECK(r.stopped_early);
}

TEST_CASE("training errors") {
  const auto ds = data::synth_generate(50, 1);
  const std::vector<preprocess::Glyph> none;
  CHECK_THROWS_AS(train::train(tiny_polar(1), none, ds.glyphs), InvalidArgument);
  CHECK_THROWS_AS(train::train(tiny_polar(1), ds.glyphs, none), InvalidArgument);
  auto diverge = tiny_polar(2);
  diverge.base_learning_rate = 1e30;
  CHECK_THROWS_AS(train::train(diverge, ds), NumericError);
}

TEST_CASE("history CSV layout") {
  const std::vector<HistoryRow> rows{{1, 2.25, 0.5, 0.01}, {2, 1.5, 0.75, 0.0095}};
  write_history_csv(rows, temp_path("history.csv"));
  std::ifstream in(temp_path("history.csv"));
  std::string header, first;
  std::getline(in, header);
  std::getline(in, first);
  CHECK(header == "epoch,train_loss,val_accuracy,lr_eff");
  CHECK(first == "1,2.25,0.5,0.01");
}

TEST_CASE("completion curve endpoints") {
  const auto ds = data::synth_generate(200, 31);
  const auto parts = data::apply_split(ds, data::split(ds, 2));
  const auto result = train::train(tiny_polar(2), parts.train, parts.validation);
  const std::vector<double> fractions{0.0, 0.5, 1.0};
  const auto curve = completion_curve(result.checkpoint, parts.test, fractions);
  REQUIRE(curve.size() == 3);
  CHECK(curve[2].accuracy == evaluate(result.checkpoint, parts.test).accuracy);
  // One touch point carries no information: every glyph gets the same answer.
  const auto zero = completion_curve(constant_model(result.checkpoint.spec, 4), parts.test, fractions);
  CHECK(zero[0].accuracy == doctest::Approx(0.10));

  const std::vector<double> unsorted{0.5, 0.2, 1.0};
  CHECK_THROWS_AS(completion_curve(result.checkpoint, parts.test, unsorted), InvalidArgument);
  const std::vector<double> no_end{0.2, 0.5};
  CHECK_THROWS_AS(completion_curve(result.checkpoint, parts.test, no_end), InvalidArgument);
}

TEST_CASE("bitmap completion prefixes at zero are a centered dot") {
  const auto ds = data::synth_generate(40, 32);
  const std::vector<double> fractions{0.0, 1.0};
  const auto curve = completion_curve(constant_model(models::build_bitmap_model(), 7), ds.glyphs, fractions);
  CHECK(curve[0].accuracy == doctest::Approx(0.10));
}

TEST_CASE("spearman correlation") {
  const std::vector<double> x{1, 2, 3, 4};
  const std::vector<double> up{0.1, 0.4, 0.5, 0.9};
  const std::vector<double> down{4, 3, 2, 1};
  const std::vector<double> ties{1, 1, 2, 2};
  const std::vector<double> flat{1, 1, 1, 1};
  CHECK(spearman(x, up) == doctest::Approx(1.0));
  CHECK(spearman(x, down) == doctest::Approx(-1.0));
  CHECK(spearman(x, ties) == doctest::Approx(4.0 / std::sqrt(20.0)));
  CHECK(spearman(x, flat) == 0.0);
}

TEST_CASE("error gallery contract") {
  const auto ds = data::synth_generate(100, 41);
  const auto spec = models::build_polar_model(preprocess::PolarInput::angle);
  std::vector<preprocess::Glyph> only_threes;
  for (const auto& g : ds.glyphs) {
    if (g.label == 3) only_threes.push_back(g);
  }
  const auto threes = constant_model(spec, 3);
  CHECK(error_gallery(threes, only_threes, 5).empty());

  const auto all = error_gallery(threes, ds.glyphs, 1000);
  CHECK(all.size() == 90);
  for (std::size_t i = 0; i < all.size(); ++i) {
    CHECK(all[i].predicted != all[i].label);
    if (i > 0) CHECK(all[i - 1].confidence >= all[i].confidence);
  }
  CHECK(error_gallery(threes, ds.glyphs, 7).size() == 7);
  CHECK_THROWS_AS(error_gallery(threes, ds.glyphs, 0), InvalidArgument);

  const auto sheet = render_gallery(error_gallery(threes, ds.glyphs, 10), 5);
  image::write_png(sheet, temp_path("gallery.png"));
  const auto back = image::read_png(temp_path("gallery.png"));
  CHECK(back.width() == sheet.width());
  CHECK(back.data() == sheet.data());
  CHECK(render_gallery({}).width() > 0);
}

TEST_CASE("curve plot renders") {
  const std::vector<CurvePoint> curve{{0.0, 0.1}, {0.5, 0.6}, {1.0, 0.95}};
  const auto img = plot_curve(curve);
  image::write_png(img, temp_path("curve.png"));
  CHECK(std::filesystem::file_size(temp_path("curve.png")) > 100);
  write_curve_csv(curve, temp_path("curve.csv"));
  std::ifstream in(temp_path("curve.csv"));
  std::string header;
  std::getline(in, header);
  CHECK(header == "fraction,accuracy");
}

TEST_CASE("ablation trains the three polar inputs") {
  const auto ds = data::synth_generate(150, 51);
  auto cfg = tiny_polar(1);
  const auto rows = ablation_run(cfg, ds);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].input_mode == "distance");
  CHECK(rows[1].input_mode == "angle");
  CHECK(rows[2].input_mode == "both");
  CHECK(rows[0].parameters == 287530);
  CHECK(rows[1].parameters == 287530);
  CHECK(rows[2].parameters == 287690);
}
