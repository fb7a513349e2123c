#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>

#include "touchdigits/preprocess/completion.hpp"
#include "touchdigits/preprocess/features.hpp"
#include "touchdigits/preprocess/polar.hpp"
#include "touchdigits/preprocess/raster.hpp"
#include "touchdigits/preprocess/spline.hpp"
#include "touchdigits/util/error.hpp"
#include "touchdigits/util/log.hpp"

using namespace touchdigits;
using namespace touchdigits::preprocess;

namespace {

Stroke stroke_of(std::initializer_list<std::array<double, 3>> pts) {
  Stroke s;
  for (const auto& p : pts) s.points.push_back({p[0], p[1], p[2]});
  return s;
}

Glyph glyph_of(std::vector<Stroke> strokes) {
  Glyph g;
  g.label = 3;
  g.strokes = std::move(strokes);
  return g;
}

// Wandering random stroke with distinct consecutive points.
Stroke random_stroke(std::mt19937_64& rng, std::size_t n, double step = 12.0) {
  std::normal_distribution<double> turn(0.0, 0.6);
  std::uniform_real_distribution<double> len(0.3 * step, step);
  Stroke s;
  double x = 150, y = 200, heading = 0.3;
  for (std::size_t i = 0; i < n; ++i) {
    s.points.push_back({x, y, 16.0 * static_cast<double>(i)});
    heading += turn(rng);
    const double l = len(rng);
    x += l * std::cos(heading);
    y += l * std::sin(heading);
  }
  return s;
}

Glyph random_glyph(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> strokes(1, 3);
  std::uniform_int_distribution<std::size_t> points(2, 60);
  Glyph g;
  const int k = strokes(rng);
  for (int i = 0; i < k; ++i) g.strokes.push_back(random_stroke(rng, points(rng)));
  return g;
}

Glyph transformed(Glyph g, double scale, double dx, double dy) {
  for (auto& s : g.strokes) {
    for (auto& p : s.points) {
      p.x = p.x * scale + dx;
      p.y = p.y * scale + dy;
    }
  }
  return g;
}

double max_pixel_diff(const Bitmap28& a, const Bitmap28& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.pixels.size(); ++i) {
    worst = std::max(worst, static_cast<double>(std::abs(a.pixels[i] - b.pixels[i])));
  }
  return worst;
}

}  // namespace

TEST_CASE("dedupe collapses repeated coordinates keeping the earliest time") {
  const auto out = dedupe_stroke(stroke_of({{0, 0, 0}, {0, 0, 16}, {1, 0, 33}}));
  CHECK(out == stroke_of({{0, 0, 0}, {1, 0, 33}}));

  const auto distinct = stroke_of({{0, 0, 0}, {1, 0, 16}, {1, 1, 33}});
  CHECK(dedupe_stroke(distinct) == distinct);

  CHECK(dedupe_stroke(stroke_of({{5, 5, 0}, {5, 5, 10}, {5, 5, 20}})) == stroke_of({{5, 5, 0}}));
}

TEST_CASE("polar vectors use an upward-positive angle") {
  auto seq = to_polar_sequence(stroke_of({{0, 0, 0}, {1, 0, 16}}));
  CHECK(seq.vectors[0].angle == 0.0);
  CHECK(seq.vectors[0].length == 1.0);

  seq = to_polar_sequence(stroke_of({{0, 0, 0}, {0, -1, 16}}));
  CHECK(seq.vectors[0].angle == doctest::Approx(std::numbers::pi / 2));
  CHECK(seq.vectors[0].length == 1.0);

  seq = to_polar_sequence(stroke_of({{0, 0, 0}, {3, 4, 16}}));
  CHECK(seq.vectors[0].length == doctest::Approx(5.0));
  CHECK(seq.vectors[0].angle == doctest::Approx(-0.9273).epsilon(1e-4));
  CHECK(seq.vectors.size() == kPolarLength);
  CHECK(seq.true_length == 1);

  CHECK_THROWS_WITH_AS(to_polar_sequence(stroke_of({{2, 2, 0}, {2, 2, 5}})), "degenerate stroke",
                       InvalidArgument);
}

TEST_CASE("pad_or_truncate pads with zeros and truncates with a warning") {
  std::vector<std::string> warnings;
  auto previous = log::set_warning_sink([&](const std::string& m) { warnings.push_back(m); });

  auto seq = pad_or_truncate(std::vector<PolarVector>(10, {0.5, 2.0}));
  CHECK(seq.true_length == 10);
  CHECK(seq.vectors.size() == 130);
  for (std::size_t i = 10; i < 130; ++i) CHECK(seq.vectors[i] == PolarVector{0.0, 0.0});

  std::vector<PolarVector> exact(130, {0.1, 1.0});
  seq = pad_or_truncate(exact);
  CHECK(seq.vectors == exact);
  CHECK(seq.dropped == 0);
  CHECK(warnings.empty());

  std::vector<PolarVector> longer;
  for (int i = 0; i < 140; ++i) longer.push_back({0.0, static_cast<double>(i)});
  seq = pad_or_truncate(longer);
  CHECK(seq.true_length == 130);
  CHECK(seq.dropped == 10);
  CHECK(seq.vectors.back().length == 129.0);
  CHECK(warnings.size() == 1);

  log::set_warning_sink(previous);
}

TEST_CASE("longest stroke selection") {
  const auto only = stroke_of({{0, 0, 0}, {5, 5, 10}});
  CHECK(longest_stroke(glyph_of({only})) == only);

  const auto short_one = stroke_of({{0, 0, 0}, {40, 0, 10}});
  const auto long_one = stroke_of({{0, 0, 0}, {0, 220, 10}});
  CHECK(longest_stroke(glyph_of({short_one, long_one})) == long_one);

  // A mirror image has exactly the same arclength; the first stroke wins.
  std::mt19937_64 rng(4);
  const Stroke a = random_stroke(rng, 20);
  Stroke b = a;
  for (auto& p : b.points) p.x = -p.x;
  CHECK(arclength(a) == arclength(b));
  CHECK(&longest_stroke(glyph_of({a, b})) != nullptr);
  CHECK(longest_stroke(glyph_of({a, b})) == a);
  CHECK(longest_stroke(glyph_of({b, a})) == b);
}

TEST_CASE("arclength of simple strokes") {
  CHECK(arclength(stroke_of({{4, 4, 0}})) == 0.0);
  CHECK(arclength(stroke_of({{0, 0, 0}, {3, 4, 10}})) == doctest::Approx(5.0).epsilon(1e-12));
  const double line = arclength(stroke_of({{0, 0, 0}, {10, 5, 10}, {20, 10, 20}}));
  CHECK(std::abs(line - std::hypot(20.0, 10.0)) / std::hypot(20.0, 10.0) < 1e-6);
}

TEST_CASE("interpolated arclength is at least the chord sum") {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    const Stroke s = random_stroke(rng, 3 + trial % 20);
    double chords = 0.0;
    for (std::size_t i = 0; i + 1 < s.points.size(); ++i) {
      chords += std::hypot(s.points[i + 1].x - s.points[i].x, s.points[i + 1].y - s.points[i].y);
    }
    CHECK(arclength(s) >= chords * (1.0 - 1e-12));
  }
}

TEST_CASE("catmull-rom passes through every touch point") {
  std::mt19937_64 rng(3);
  const Stroke s = random_stroke(rng, 12);
  std::vector<Point2> pts;
  for (const auto& p : s.points) pts.push_back({p.x, p.y});
  const auto dense = sample_catmull_rom(pts, [](std::size_t, double) { return 10; });
  REQUIRE(dense.size() == 11 * 10 + 1);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    CHECK(dense[i * 10].x == doctest::Approx(pts[i].x));
    CHECK(dense[i * 10].y == doctest::Approx(pts[i].y));
  }
}

TEST_CASE("a single touch renders a centered dot") {
  const auto bmp = rasterize(glyph_of({stroke_of({{250, 310, 0}})}));
  const auto com = center_of_mass(bmp);
  CHECK(std::abs(com.x - 14.0) <= 0.5);
  CHECK(std::abs(com.y - 14.0) <= 0.5);
  float peak = 0.0f;
  for (float v : bmp.pixels) peak = std::max(peak, v);
  CHECK(peak > 0.0f);
}

TEST_CASE("a vertical line fills a ~20 pixel column through the center") {
  Stroke line;
  for (int i = 0; i <= 30; ++i) line.points.push_back({100.0, 50.0 + 10.0 * i, 16.0 * i});
  const auto bmp = rasterize(glyph_of({line}));
  std::size_t r0 = 28, r1 = 0, c0 = 28, c1 = 0;
  for (std::size_t r = 0; r < 28; ++r) {
    for (std::size_t c = 0; c < 28; ++c) {
      if (bmp.at(r, c) > 0.0f) {
        r0 = std::min(r0, r);
        r1 = std::max(r1, r);
        c0 = std::min(c0, c);
        c1 = std::max(c1, c);
      }
    }
  }
  const std::size_t height = r1 - r0 + 1;
  CHECK(height >= 20);
  CHECK(height <= 23);
  CHECK(c0 >= 12);
  CHECK(c1 <= 15);
  const auto com = center_of_mass(bmp);
  CHECK(com.x == doctest::Approx(14.0).epsilon(0.02));
  CHECK(com.y == doctest::Approx(14.0).epsilon(0.02));
}

TEST_CASE("bitmaps are 28x28 in [0, 1] with ink for any glyph") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 40; ++trial) {
    const auto bmp = rasterize(random_glyph(rng));
    bool inked = false;
    for (float v : bmp.pixels) {
      CHECK(v >= 0.0f);
      CHECK(v <= 1.0f);
      inked = inked || v > 0.0f;
    }
    CHECK(inked);
    const auto com = center_of_mass(bmp);
    CHECK(std::abs(com.x - 14.0) < 0.5);
    CHECK(std::abs(com.y - 14.0) < 0.5);
  }
  CHECK_THROWS_AS(rasterize(Glyph{}), InvalidArgument);
}

TEST_CASE("completion prefix endpoints") {
  std::mt19937_64 rng(8);
  const Glyph g = random_glyph(rng);
  CHECK(completion_prefix(g, 1.0) == g);
  const Glyph first = completion_prefix(g, 0.0);
  REQUIRE(first.strokes.size() == 1);
  REQUIRE(first.strokes[0].points.size() == 1);
  CHECK(first.strokes[0].points[0] == g.strokes[0].points[0]);
  CHECK_THROWS_AS(completion_prefix(g, 1.5), InvalidArgument);
}

TEST_CASE("half of a 100 px line is a 50 px prefix") {
  Stroke line;
  for (int i = 0; i <= 100; ++i) line.points.push_back({20.0 + i, 40.0, 10.0 * i});
  const Glyph g = glyph_of({line});
  CHECK(arclength(g) == doctest::Approx(100.0).epsilon(1e-9));
  const double half = arclength(completion_prefix(g, 0.5));
  CHECK(std::abs(half - 50.0) <= 1.0);
}

TEST_CASE("property: scaling leaves angles unchanged and multiplies lengths") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 30; ++trial) {
    const Stroke s = random_stroke(rng, 5 + trial);
    const auto base = to_polar_sequence(s);
    for (const double scale : {0.5, 2.0, 4.0}) {
      Stroke scaled = s;
      for (auto& p : scaled.points) {
        p.x *= scale;
        p.y *= scale;
      }
      const auto seq = to_polar_sequence(scaled);
      for (std::size_t i = 0; i < base.true_length; ++i) {
        CHECK(seq.vectors[i].angle == base.vectors[i].angle);
        CHECK(seq.vectors[i].length == base.vectors[i].length * scale);
      }
    }
    Stroke odd = s;
    for (auto& p : odd.points) {
      p.x *= 1.37;
      p.y *= 1.37;
    }
    const auto seq = to_polar_sequence(odd);
    for (std::size_t i = 0; i < base.true_length; ++i) {
      CHECK(seq.vectors[i].angle == doctest::Approx(base.vectors[i].angle).epsilon(1e-12));
      CHECK(seq.vectors[i].length == doctest::Approx(base.vectors[i].length * 1.37).epsilon(1e-12));
    }
  }
}

TEST_CASE("property: translation changes neither polar vectors nor bitmaps") {
  std::mt19937_64 rng(33);
  for (int trial = 0; trial < 30; ++trial) {
    const Glyph g = random_glyph(rng);
    const Glyph moved = transformed(g, 1.0, 37.25, -112.5);
    CHECK(max_pixel_diff(rasterize(g), rasterize(moved)) <= 1e-6);
    const auto a = to_polar_sequence(longest_stroke(g));
    const auto b = to_polar_sequence(longest_stroke(moved));
    for (std::size_t i = 0; i < a.true_length; ++i) {
      CHECK(b.vectors[i].angle == doctest::Approx(a.vectors[i].angle).epsilon(1e-9));
      CHECK(b.vectors[i].length == doctest::Approx(a.vectors[i].length).epsilon(1e-9));
    }
  }
}

TEST_CASE("property: n distinct points give n-1 vectors") {
  std::mt19937_64 rng(5);
  for (std::size_t n = 2; n <= 131; n += 7) {
    const auto seq = to_polar_sequence(random_stroke(rng, n));
    CHECK(seq.true_length == n - 1);
  }
}

TEST_CASE("property: rasterizing normalized coordinates is idempotent") {
  std::mt19937_64 rng(44);
  for (int trial = 0; trial < 30; ++trial) {
    const Glyph g = random_glyph(rng);
    const Glyph normalized = normalize_for_raster(g);
    CHECK(max_pixel_diff(rasterize(normalized), rasterize(g)) <= 1e-6);
    CHECK(max_pixel_diff(render(normalized), rasterize(g)) <= 1e-6);
  }
}

TEST_CASE("property: completion prefixes are nested") {
  std::mt19937_64 rng(55);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto is_prefix = [](const Glyph& a, const Glyph& b) {
    if (a.strokes.size() > b.strokes.size()) return false;
    for (std::size_t s = 0; s < a.strokes.size(); ++s) {
      const auto& pa = a.strokes[s].points;
      const auto& pb = b.strokes[s].points;
      if (pa.size() > pb.size()) return false;
      if (s + 1 < a.strokes.size() && pa.size() != pb.size()) return false;
      for (std::size_t i = 0; i < pa.size(); ++i) {
        if (!(pa[i] == pb[i])) return false;
      }
    }
    return true;
  };
  for (int trial = 0; trial < 60; ++trial) {
    const Glyph g = random_glyph(rng);
    double a = u(rng), b = u(rng);
    if (a > b) std::swap(a, b);
    CHECK(is_prefix(completion_prefix(g, a), completion_prefix(g, b)));
    CHECK(is_prefix(completion_prefix(g, b), g));
  }
}

TEST_CASE("polar encoding scales angles by pi and standardizes lengths") {
  const Glyph g = glyph_of({stroke_of({{0, 0, 0}, {0, -4, 10}, {6, -4, 20}})});
  const nn::FeatureNormalization norm{2.0, 2.0};
  const auto both = encode_polar(g, PolarInput::both, norm);
  CHECK(both.shape() == nn::Shape{130, 2});
  CHECK(both[0] == doctest::Approx(0.5));   // straight up
  CHECK(both[1] == doctest::Approx(1.0));   // (4 - 2) / 2
  CHECK(both[2] == doctest::Approx(0.0));   // rightward
  CHECK(both[3] == doctest::Approx(2.0));   // (6 - 2) / 2
  CHECK(both[4] == 0.0f);
  CHECK(encode_polar(g, PolarInput::angle, norm).shape() == nn::Shape{130, 1});
  CHECK(encode_polar(g, PolarInput::distance, norm)[0] == doctest::Approx(1.0));

  const Glyph dot = glyph_of({stroke_of({{3, 3, 0}})});
  CHECK_THROWS_AS(encode_polar(dot, PolarInput::both, norm), InvalidArgument);
  const auto zeros = encode_polar(dot, PolarInput::both, norm, true);
  for (float v : zeros.values()) CHECK(v == 0.0f);

  CHECK(parse_polar_input("length") == PolarInput::distance);
  CHECK_THROWS_AS(parse_polar_input("speed"), InvalidArgument);
}

TEST_CASE("length normalization statistics") {
  const Glyph g = glyph_of({stroke_of({{0, 0, 0}, {2, 0, 1}, {2, 4, 2}})});
  const std::vector<Glyph> glyphs{g};
  const auto norm = fit_length_normalization(glyphs);
  CHECK(norm.length_mean == doctest::Approx(3.0));
  CHECK(norm.length_std == doctest::Approx(1.0));
}
