#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "touchdigits/preprocess/glyph.hpp"

namespace touchdigits::data {

using preprocess::Glyph;

inline constexpr int kDatasetVersion = 1;
// Subject id used by generated glyphs; never listed in `subjects`.
inline constexpr const char* kSyntheticSubject = "synthetic";

enum class Sex { male, female, unspecified };
enum class Handedness { left, right, unspecified };

struct SubjectMeta {
  std::string id;
  int age = 0;
  Sex sex = Sex::unspecified;
  Handedness handedness = Handedness::unspecified;
  std::string nationality;
  bool operator==(const SubjectMeta&) const = default;
};

struct Dataset {
  std::string provenance;
  std::vector<SubjectMeta> subjects;
  std::vector<Glyph> glyphs;
};

struct LoadOptions {
  bool include_invalid = false;  // keep glyphs flagged invalid
};

// Parses and validates a dataset document. Malformed records throw
// FormatError naming the glyph id and field. Glyphs whose timestamps go
// backwards are flagged invalid with a warning.
Dataset dataset_from_json(const nlohmann::json& doc, const LoadOptions& options = {});
nlohmann::json dataset_to_json(const Dataset& dataset);

// Reads plain or gzip-compressed JSON (detected from content).
Dataset load_dataset(const std::filesystem::path& path, const LoadOptions& options = {});
// Writes gzip when the path ends in ".gz". Output is byte-for-byte
// deterministic for a given dataset.
void save_dataset(const Dataset& dataset, const std::filesystem::path& path);

std::string to_string(Sex sex);
std::string to_string(Handedness handedness);

}  // namespace touchdigits::data
