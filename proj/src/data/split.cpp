#include "touchdigits/data/split.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "touchdigits/util/error.hpp"
#include "touchdigits/util/log.hpp"

namespace touchdigits::data {
namespace {

constexpr std::size_t kBuckets = 3;

void check_proportions(const std::array<double, 3>& p) {
  double sum = 0.0;
  for (double v : p) {
    if (!(v >= 0.0)) throw InvalidArgument("split proportions must be non-negative");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw InvalidArgument("split proportions must sum to 1");
}

// Fisher-Yates with an explicit draw so the order only depends on the
// engine's output sequence.
template <typename T>
void seeded_shuffle(std::vector<T>& items, std::mt19937_64& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(items[i - 1], items[j]);
  }
}

SplitAssignment split_by_subject(const Dataset& dataset, std::uint64_t seed,
                                 const std::array<double, 3>& proportions) {
  std::map<std::string, std::vector<std::uint64_t>> by_subject;
  for (const auto& g : dataset.glyphs) by_subject[g.subject_id].push_back(g.id);
  std::vector<std::string> subjects;
  for (const auto& [id, _] : by_subject) subjects.push_back(id);
  std::mt19937_64 rng(seed);
  seeded_shuffle(subjects, rng);

  const auto target = largest_remainder(dataset.glyphs.size(), proportions);
  std::array<std::size_t, 3> filled{};
  SplitAssignment out;
  out.seed = seed;
  for (const auto& subject : subjects) {
    // Subject goes to the bucket furthest below its target.
    std::size_t best = 0;
    double best_gap = -std::numeric_limits<double>::infinity();
    for (std::size_t b = 0; b < kBuckets; ++b) {
      const double gap = static_cast<double>(target[b]) - static_cast<double>(filled[b]);
      if (gap > best_gap) {
        best_gap = gap;
        best = b;
      }
    }
    for (auto id : by_subject[subject]) out.bucket_of[id] = static_cast<Bucket>(best);
    filled[best] += by_subject[subject].size();
  }
  return out;
}

}  // namespace

std::string to_string(Bucket bucket) {
  switch (bucket) {
    case Bucket::train: return "train";
    case Bucket::validation: return "validation";
    case Bucket::test: return "test";
  }
  return "train";
}

std::array<std::size_t, 3> largest_remainder(std::size_t n, const std::array<double, 3>& proportions) {
  check_proportions(proportions);
  std::array<std::size_t, 3> sizes{};
  std::array<double, 3> remainder{};
  std::size_t assigned = 0;
  for (std::size_t b = 0; b < kBuckets; ++b) {
    const double exact = static_cast<double>(n) * proportions[b];
    sizes[b] = static_cast<std::size_t>(std::floor(exact + 1e-9));
    remainder[b] = exact - static_cast<double>(sizes[b]);
    assigned += sizes[b];
  }
  std::array<std::size_t, 3> order{0, 1, 2};
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (std::abs(remainder[a] - remainder[b]) > 1e-9) return remainder[a] > remainder[b];
    return a > b;
  });
  for (std::size_t k = 0; assigned < n; ++k, ++assigned) ++sizes[order[k % kBuckets]];
  return sizes;
}

SplitAssignment split(const Dataset& dataset, std::uint64_t seed, const SplitOptions& options) {
  if (dataset.glyphs.empty()) throw InvalidArgument("cannot split an empty dataset");
  check_proportions(options.proportions);
  if (options.group_by_subject) return split_by_subject(dataset, seed, options.proportions);

  std::array<std::vector<std::uint64_t>, 10> by_class;
  for (const auto& g : dataset.glyphs) by_class.at(static_cast<std::size_t>(g.label)).push_back(g.id);

  const auto target = largest_remainder(dataset.glyphs.size(), options.proportions);
  // Per-class floors, then distribute the leftovers so bucket totals hit
  // the global targets with at most one extra glyph per class and bucket.
  std::array<std::array<std::size_t, 3>, 10> counts{};
  std::array<std::array<double, 3>, 10> fraction{};
  std::array<std::size_t, 10> extra{};
  std::array<long, 3> deficit{};
  for (std::size_t b = 0; b < kBuckets; ++b) deficit[b] = static_cast<long>(target[b]);
  for (std::size_t c = 0; c < 10; ++c) {
    const std::size_t n = by_class[c].size();
    if (n > 0 && n < 5) {
      log::warn("class " + std::to_string(c) + " has only " + std::to_string(n) +
                " glyphs; split proportions are best effort");
    }
    std::size_t used = 0;
    for (std::size_t b = 0; b < kBuckets; ++b) {
      const double exact = static_cast<double>(n) * options.proportions[b];
      counts[c][b] = static_cast<std::size_t>(std::floor(exact + 1e-9));
      fraction[c][b] = exact - static_cast<double>(counts[c][b]);
      used += counts[c][b];
      deficit[b] -= static_cast<long>(counts[c][b]);
    }
    extra[c] = n - used;
  }
  std::array<std::size_t, 10> class_order;
  std::iota(class_order.begin(), class_order.end(), 0);
  std::stable_sort(class_order.begin(), class_order.end(),
                   [&](std::size_t a, std::size_t b) { return extra[a] > extra[b]; });
  for (std::size_t c : class_order) {
    std::array<bool, 3> given{};
    for (std::size_t k = 0; k < extra[c]; ++k) {
      std::size_t best = kBuckets;
      for (std::size_t b = 0; b < kBuckets; ++b) {
        if (given[b]) continue;
        if (best == kBuckets || deficit[b] > deficit[best] ||
            (deficit[b] == deficit[best] && fraction[c][b] >= fraction[c][best])) {
          best = b;
        }
      }
      given[best] = true;
      ++counts[c][best];
      --deficit[best];
    }
  }

  SplitAssignment out;
  out.seed = seed;
  std::mt19937_64 rng(seed);
  for (std::size_t c = 0; c < 10; ++c) {
    auto ids = by_class[c];
    std::sort(ids.begin(), ids.end());
    seeded_shuffle(ids, rng);
    std::size_t i = 0;
    for (std::size_t b = 0; b < kBuckets; ++b) {
      for (std::size_t k = 0; k < counts[c][b]; ++k) out.bucket_of[ids[i++]] = static_cast<Bucket>(b);
    }
  }
  return out;
}

SplitGlyphs apply_split(const Dataset& dataset, const SplitAssignment& assignment) {
  SplitGlyphs out;
  for (const auto& g : dataset.glyphs) {
    auto it = assignment.bucket_of.find(g.id);
    if (it == assignment.bucket_of.end()) {
      throw InvalidArgument("glyph " + std::to_string(g.id) + " has no split bucket");
    }
    switch (it->second) {
      case Bucket::train: out.train.push_back(g); break;
      case Bucket::validation: out.validation.push_back(g); break;
      case Bucket::test: out.test.push_back(g); break;
    }
  }
  return out;
}

}  // namespace touchdigits::data
