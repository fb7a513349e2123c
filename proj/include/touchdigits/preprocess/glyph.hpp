#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace touchdigits::preprocess {

// Screen coordinates in pixels (x rightward, y downward) and a timestamp in
// milliseconds from the start of the glyph.
struct TouchPoint {
  double x = 0.0;
  double y = 0.0;
  double t = 0.0;
  bool operator==(const TouchPoint&) const = default;
};

// Samples recorded during one continuous contact.
struct Stroke {
  std::vector<TouchPoint> points;
  bool operator==(const Stroke&) const = default;
};

enum class InputMethod { finger, thumb };

std::string to_string(InputMethod method);
InputMethod parse_input_method(const std::string& name);

struct Glyph {
  std::uint64_t id = 0;
  std::string subject_id;
  int label = 0;
  InputMethod input_method = InputMethod::finger;
  std::vector<Stroke> strokes;
  bool valid = true;

  std::size_t point_count() const;
  bool operator==(const Glyph&) const = default;
};

}  // namespace touchdigits::preprocess
