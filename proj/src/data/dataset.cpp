#include "touchdigits/data/dataset.hpp"

#include <zlib.h>

#include <cmath>
#include <limits>
#include <fstream>
#include <set>
#include <sstream>

#include "touchdigits/util/error.hpp"
#include "touchdigits/util/log.hpp"

namespace touchdigits::data {
namespace {

using nlohmann::json;

bool non_negative_integer(const json& v) {
  return v.is_number_unsigned() || (v.is_number_integer() && v.get<long long>() >= 0);
}

std::string glyph_label(const json& g, std::size_t index) {
  if (g.is_object() && g.contains("id") && non_negative_integer(g["id"])) {
    return "glyph " + std::to_string(g["id"].get<std::uint64_t>());
  }
  return "glyph #" + std::to_string(index);
}

[[noreturn]] void bad(const std::string& where, const std::string& field, const std::string& what) {
  throw FormatError(where + ": field '" + field + "' " + what);
}

const json& require(const json& obj, const std::string& where, const char* field) {
  auto it = obj.find(field);
  if (it == obj.end()) bad(where, field, "is missing");
  return *it;
}

double finite_number(const json& v, const std::string& where, const std::string& field) {
  if (!v.is_number()) bad(where, field, "must be a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) bad(where, field, "must be finite");
  return d;
}

Sex parse_sex(const std::string& s, const std::string& where) {
  if (s == "male") return Sex::male;
  if (s == "female") return Sex::female;
  if (s == "unspecified") return Sex::unspecified;
  bad(where, "sex", "must be male, female or unspecified");
}

Handedness parse_handedness(const std::string& s, const std::string& where) {
  if (s == "left") return Handedness::left;
  if (s == "right") return Handedness::right;
  if (s == "unspecified") return Handedness::unspecified;
  bad(where, "handedness", "must be left, right or unspecified");
}

SubjectMeta parse_subject(const json& s, std::size_t index) {
  std::string where = "subject #" + std::to_string(index);
  if (!s.is_object()) throw FormatError(where + ": must be an object");
  SubjectMeta m;
  const json& id = require(s, where, "id");
  if (!id.is_string() || id.get<std::string>().empty()) bad(where, "id", "must be a non-empty string");
  m.id = id.get<std::string>();
  where = "subject " + m.id;
  if (m.id == kSyntheticSubject) bad(where, "id", "uses the reserved synthetic subject id");
  if (s.contains("age")) {
    if (!s["age"].is_number_integer() || s["age"].get<long long>() < 0) {
      bad(where, "age", "must be a non-negative integer");
    }
    m.age = s["age"].get<int>();
  }
  if (s.contains("sex")) {
    if (!s["sex"].is_string()) bad(where, "sex", "must be a string");
    m.sex = parse_sex(s["sex"].get<std::string>(), where);
  }
  if (s.contains("handedness")) {
    if (!s["handedness"].is_string()) bad(where, "handedness", "must be a string");
    m.handedness = parse_handedness(s["handedness"].get<std::string>(), where);
  }
  if (s.contains("nationality")) {
    if (!s["nationality"].is_string()) bad(where, "nationality", "must be a string");
    m.nationality = s["nationality"].get<std::string>();
  }
  return m;
}

Glyph parse_glyph(const json& g, std::size_t index) {
  const std::string where = glyph_label(g, index);
  if (!g.is_object()) throw FormatError(where + ": must be an object");
  Glyph out;
  const json& id = require(g, where, "id");
  if (!non_negative_integer(id)) bad(where, "id", "must be a non-negative integer");
  out.id = id.get<std::uint64_t>();

  const json& subject = require(g, where, "subject_id");
  if (!subject.is_string() || subject.get<std::string>().empty()) {
    bad(where, "subject_id", "must be a non-empty string");
  }
  out.subject_id = subject.get<std::string>();

  const json& label = require(g, where, "label");
  if (!label.is_number_integer() || label.get<long long>() < 0 || label.get<long long>() > 9) {
    bad(where, "label", "must be an integer digit 0-9");
  }
  out.label = label.get<int>();

  if (g.contains("input_method")) {
    const json& m = g["input_method"];
    if (!m.is_string() || (m != "finger" && m != "thumb")) {
      bad(where, "input_method", "must be finger or thumb");
    }
    out.input_method = preprocess::parse_input_method(m.get<std::string>());
  }
  if (g.contains("valid")) {
    if (!g["valid"].is_boolean()) bad(where, "valid", "must be a boolean");
    out.valid = g["valid"].get<bool>();
  }

  const json& strokes = require(g, where, "strokes");
  if (!strokes.is_array() || strokes.empty()) bad(where, "strokes", "must be a non-empty array");
  for (std::size_t s = 0; s < strokes.size(); ++s) {
    const std::string field = "strokes[" + std::to_string(s) + "]";
    if (!strokes[s].is_array() || strokes[s].empty()) bad(where, field, "must be a non-empty array of points");
    preprocess::Stroke stroke;
    for (std::size_t i = 0; i < strokes[s].size(); ++i) {
      const json& p = strokes[s][i];
      const std::string pf = field + "[" + std::to_string(i) + "]";
      if (!p.is_object()) bad(where, pf, "must be an object {x, y, t}");
      preprocess::TouchPoint tp;
      tp.x = finite_number(require(p, where, "x"), where, pf + ".x");
      tp.y = finite_number(require(p, where, "y"), where, pf + ".y");
      tp.t = finite_number(require(p, where, "t"), where, pf + ".t");
      stroke.points.push_back(tp);
    }
    out.strokes.push_back(std::move(stroke));
  }
  return out;
}

bool timestamps_monotone(const Glyph& g) {
  double last = -std::numeric_limits<double>::infinity();
  for (const auto& s : g.strokes) {
    for (const auto& p : s.points) {
      if (p.t < last) return false;
      last = p.t;
    }
  }
  return true;
}

std::string read_maybe_gzip(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw IoError("dataset not found: " + path.string());
  gzFile f = gzopen(path.string().c_str(), "rb");
  if (f == nullptr) throw IoError("cannot open dataset: " + path.string());
  std::string text;
  char buf[1 << 16];
  int n = 0;
  while ((n = gzread(f, buf, sizeof buf)) > 0) text.append(buf, static_cast<std::size_t>(n));
  const bool failed = n < 0;
  gzclose(f);
  if (failed) throw IoError("cannot decompress dataset: " + path.string());
  return text;
}

}  // namespace

std::string to_string(Sex sex) {
  switch (sex) {
    case Sex::male: return "male";
    case Sex::female: return "female";
    case Sex::unspecified: return "unspecified";
  }
  return "unspecified";
}

std::string to_string(Handedness handedness) {
  switch (handedness) {
    case Handedness::left: return "left";
    case Handedness::right: return "right";
    case Handedness::unspecified: return "unspecified";
  }
  return "unspecified";
}

Dataset dataset_from_json(const nlohmann::json& doc, const LoadOptions& options) {
  if (!doc.is_object()) throw FormatError("dataset: top level must be an object");
  const json& version = require(doc, "dataset", "version");
  if (!version.is_number_integer() || version.get<int>() != kDatasetVersion) {
    bad("dataset", "version", "must be " + std::to_string(kDatasetVersion));
  }
  Dataset ds;
  if (doc.contains("provenance")) {
    if (!doc["provenance"].is_string()) bad("dataset", "provenance", "must be a string");
    ds.provenance = doc["provenance"].get<std::string>();
  }
  const json& subjects = require(doc, "dataset", "subjects");
  const json& glyphs = require(doc, "dataset", "glyphs");
  if (!subjects.is_array()) bad("dataset", "subjects", "must be an array");
  if (!glyphs.is_array()) bad("dataset", "glyphs", "must be an array");

  std::set<std::string> subject_ids;
  for (std::size_t i = 0; i < subjects.size(); ++i) {
    SubjectMeta m = parse_subject(subjects[i], i);
    if (!subject_ids.insert(m.id).second) bad("subject " + m.id, "id", "is duplicated");
    ds.subjects.push_back(std::move(m));
  }

  std::set<std::uint64_t> glyph_ids;
  for (std::size_t i = 0; i < glyphs.size(); ++i) {
    Glyph g = parse_glyph(glyphs[i], i);
    const std::string where = "glyph " + std::to_string(g.id);
    if (!glyph_ids.insert(g.id).second) bad(where, "id", "is duplicated");
    if (g.subject_id != kSyntheticSubject && subject_ids.count(g.subject_id) == 0) {
      bad(where, "subject_id", "references unknown subject '" + g.subject_id + "'");
    }
    if (g.valid && !timestamps_monotone(g)) {
      g.valid = false;
      log::warn(where + ": timestamps go backwards; flagged invalid");
    }
    if (g.valid || options.include_invalid) ds.glyphs.push_back(std::move(g));
  }
  return ds;
}

nlohmann::json dataset_to_json(const Dataset& dataset) {
  json doc;
  doc["version"] = kDatasetVersion;
  doc["provenance"] = dataset.provenance;
  doc["subjects"] = json::array();
  for (const auto& s : dataset.subjects) {
    doc["subjects"].push_back({{"id", s.id},
                               {"age", s.age},
                               {"sex", to_string(s.sex)},
                               {"handedness", to_string(s.handedness)},
                               {"nationality", s.nationality}});
  }
  doc["glyphs"] = json::array();
  for (const auto& g : dataset.glyphs) {
    json strokes = json::array();
    for (const auto& s : g.strokes) {
      json pts = json::array();
      for (const auto& p : s.points) pts.push_back({{"x", p.x}, {"y", p.y}, {"t", p.t}});
      strokes.push_back(std::move(pts));
    }
    doc["glyphs"].push_back({{"id", g.id},
                             {"subject_id", g.subject_id},
                             {"label", g.label},
                             {"input_method", preprocess::to_string(g.input_method)},
                             {"valid", g.valid},
                             {"strokes", std::move(strokes)}});
  }
  return doc;
}

Dataset load_dataset(const std::filesystem::path& path, const LoadOptions& options) {
  const std::string text = read_maybe_gzip(path);
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError(path.string() + ": not valid JSON (" + e.what() + ")");
  }
  return dataset_from_json(doc, options);
}

void save_dataset(const Dataset& dataset, const std::filesystem::path& path) {
  // One subject or glyph per line keeps large files diff-able.
  const json doc = dataset_to_json(dataset);
  std::ostringstream out;
  out << "{\"version\":" << doc["version"].dump() << ",\n\"provenance\":" << doc["provenance"].dump()
      << ",\n\"subjects\":[";
  for (std::size_t i = 0; i < doc["subjects"].size(); ++i) {
    out << (i == 0 ? "\n" : ",\n") << doc["subjects"][i].dump();
  }
  out << "],\n\"glyphs\":[";
  for (std::size_t i = 0; i < doc["glyphs"].size(); ++i) {
    out << (i == 0 ? "\n" : ",\n") << doc["glyphs"][i].dump();
  }
  out << "]}\n";
  const std::string text = out.str();

  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  if (path.extension() == ".gz") {
    gzFile f = gzopen(path.string().c_str(), "wb9");
    if (f == nullptr) throw IoError("cannot write dataset: " + path.string());
    const int written = gzwrite(f, text.data(), static_cast<unsigned>(text.size()));
    if (gzclose(f) != Z_OK || written != static_cast<int>(text.size())) {
      throw IoError("cannot write dataset: " + path.string());
    }
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write dataset: " + path.string());
  f << text;
  if (!f) throw IoError("cannot write dataset: " + path.string());
}

}  // namespace touchdigits::data
