#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <variant>
#include <vector>

#include "imbf/corpus.hpp"
#include "imbf/error.hpp"
#include "imbf/rng.hpp"

namespace imbf {

struct RatioImbalance {
  int minority_class = 0;
  double ratio = 1.0;  // minority/majority, in (0, 1]
};

struct StepImbalance {
  std::vector<int> minority_classes;
  uint64_t target_size = 0;
};

struct LongTailImbalance {
  double mu = 1.0;  // decay constant, in (0, 1]
};

struct ImbalanceSpec {
  std::variant<RatioImbalance, StepImbalance, LongTailImbalance> variant;
  uint64_t seed = 0;
};

namespace detail {

// Removes samples of one class down to `target`, chosen uniformly at random;
// relative order of all surviving samples is untouched.
inline LabeledCorpus downsample_classes(const LabeledCorpus& corpus,
                                        const std::vector<uint64_t>& targets, uint64_t seed) {
  std::vector<std::vector<size_t>> by_class(static_cast<size_t>(corpus.num_classes));
  for (size_t i = 0; i < corpus.samples.size(); ++i) {
    by_class[static_cast<size_t>(corpus.samples[i].label)].push_back(i);
  }
  std::vector<char> keep(corpus.samples.size(), 1);
  for (size_t c = 0; c < by_class.size(); ++c) {
    const auto& idx = by_class[c];
    const uint64_t target = targets[c];
    if (target >= idx.size()) continue;
    SplitMix64 rng(mix_seed(seed, c));
    std::vector<char> class_keep(idx.size(), 0);
    for (size_t pos : sample_indices(idx.size(), static_cast<size_t>(target), rng)) {
      class_keep[pos] = 1;
    }
    for (size_t k = 0; k < idx.size(); ++k) {
      if (!class_keep[k]) keep[idx[k]] = 0;
    }
  }
  LabeledCorpus out;
  out.num_classes = corpus.num_classes;
  out.class_names = corpus.class_names;
  for (size_t i = 0; i < corpus.samples.size(); ++i) {
    if (keep[i]) out.samples.push_back(corpus.samples[i]);
  }
  return out;
}

}  // namespace detail

// Two-class only: the designated minority class is cut to
// floor(ratio * majority_count); the other class is untouched.
inline LabeledCorpus apply_ratio_imbalance(const LabeledCorpus& corpus, const RatioImbalance& spec,
                                           uint64_t seed) {
  if (corpus.num_classes != 2) {
    throw data_error(ErrorCode::NotTwoClasses, "ratio imbalance requires exactly 2 classes, got " +
                                                   std::to_string(corpus.num_classes));
  }
  if (spec.minority_class < 0 || spec.minority_class >= 2) {
    throw config_error(ErrorCode::BadConfig, "ratio imbalance: minority_class must be 0 or 1");
  }
  if (!(spec.ratio > 0.0 && spec.ratio <= 1.0)) {
    throw config_error(ErrorCode::BadConfig, "ratio imbalance: ratio must be in (0,1]");
  }
  const auto counts = class_histogram(corpus);
  const size_t minority = static_cast<size_t>(spec.minority_class);
  const size_t majority = 1 - minority;
  const uint64_t target =
      static_cast<uint64_t>(std::floor(spec.ratio * static_cast<double>(counts[majority])));
  if (target > counts[minority]) {
    const double achievable =
        static_cast<double>(counts[minority]) / static_cast<double>(counts[majority]);
    throw data_error(ErrorCode::InfeasibleRatio,
                     "ratio " + std::to_string(spec.ratio) +
                         " infeasible: cannot add samples; achievable maximum is " +
                         std::to_string(achievable));
  }
  std::vector<uint64_t> targets = counts;
  targets[minority] = target;
  return detail::downsample_classes(corpus, targets, seed);
}

// Each designated minority class is cut to exactly target_size.
inline LabeledCorpus apply_step_imbalance(const LabeledCorpus& corpus, const StepImbalance& spec,
                                          uint64_t seed) {
  const auto counts = class_histogram(corpus);
  std::vector<uint64_t> targets = counts;
  for (int c : spec.minority_classes) {
    if (c < 0 || c >= corpus.num_classes) {
      throw config_error(ErrorCode::BadConfig,
                         "step imbalance: class index out of range: " + std::to_string(c));
    }
    if (spec.target_size > counts[static_cast<size_t>(c)]) {
      throw data_error(ErrorCode::StepTargetTooLarge,
                       "step imbalance: target " + std::to_string(spec.target_size) +
                           " exceeds count of class " + std::to_string(c) + " (" +
                           std::to_string(counts[static_cast<size_t>(c)]) + ")");
    }
    targets[static_cast<size_t>(c)] = spec.target_size;
  }
  return detail::downsample_classes(corpus, targets, seed);
}

// Exponential-decay cut: classes ranked by descending original count (ties by
// ascending class index); the class at rank i is cut to
// max(1, floor(N_max * mu^i)), capped at its original count.
inline LabeledCorpus apply_longtail_imbalance(const LabeledCorpus& corpus,
                                              const LongTailImbalance& spec, uint64_t seed) {
  if (!(spec.mu > 0.0 && spec.mu <= 1.0)) {
    throw config_error(ErrorCode::BadConfig, "longtail imbalance: mu must be in (0,1]");
  }
  const auto counts = class_histogram(corpus);
  if (counts.empty()) return corpus;
  std::vector<size_t> rank(counts.size());
  std::iota(rank.begin(), rank.end(), size_t{0});
  std::stable_sort(rank.begin(), rank.end(), [&](size_t a, size_t b) {
    if (counts[a] != counts[b]) return counts[a] > counts[b];
    return a < b;
  });
  const double n_max = static_cast<double>(counts[rank[0]]);
  std::vector<uint64_t> targets = counts;
  for (size_t i = 0; i < rank.size(); ++i) {
    const double raw = std::floor(n_max * std::pow(spec.mu, static_cast<double>(i)));
    const uint64_t want = std::max<uint64_t>(1, static_cast<uint64_t>(raw));
    targets[rank[i]] = std::min<uint64_t>(want, counts[rank[i]]);
  }
  return detail::downsample_classes(corpus, targets, seed);
}

inline LabeledCorpus apply_imbalance(const LabeledCorpus& corpus, const ImbalanceSpec& spec) {
  return std::visit(
      [&](const auto& v) -> LabeledCorpus {
        using V = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<V, RatioImbalance>) {
          return apply_ratio_imbalance(corpus, v, spec.seed);
        } else if constexpr (std::is_same_v<V, StepImbalance>) {
          return apply_step_imbalance(corpus, v, spec.seed);
        } else {
          return apply_longtail_imbalance(corpus, v, spec.seed);
        }
      },
      spec.variant);
}

}  // namespace imbf
