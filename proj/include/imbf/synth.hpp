#pragma once

#include <cstdint>
#include <string>

#include "imbf/corpus.hpp"
#include "imbf/error.hpp"
#include "imbf/rng.hpp"

namespace imbf {

// Synthetic text-classification task. Each class owns a disjoint token block
// of size vocab_size / num_classes; its token distribution is
//   p_c = (1 - shift) * ((1 - separation) * uniform + separation * peaked_c)
//       + shift * uniform
// where peaked_c is uniform over the class block. `shift` mixes in
// class-independent noise and is how distribution-shifted (OOD) test sets are
// produced.
struct SynthSpec {
  int num_classes = 2;
  uint64_t vocab_size = 1000;
  uint64_t doc_length = 20;
  uint64_t samples_per_class = 100;
  double separation = 1.0;
  double shift = 0.0;
  uint64_t seed = 0;
};

inline void validate(const SynthSpec& spec) {
  if (spec.num_classes <= 0) throw config_error(ErrorCode::BadConfig, "synth: num_classes must be positive");
  if (spec.vocab_size < static_cast<uint64_t>(spec.num_classes)) {
    throw config_error(ErrorCode::BadConfig, "synth: vocab_size must be >= num_classes");
  }
  if (spec.doc_length == 0) throw config_error(ErrorCode::BadConfig, "synth: doc_length must be positive");
  if (spec.samples_per_class == 0) {
    throw config_error(ErrorCode::BadConfig, "synth: samples_per_class must be positive");
  }
  if (spec.separation < 0.0 || spec.separation > 1.0) {
    throw config_error(ErrorCode::BadConfig, "synth: separation must be in [0,1]");
  }
  if (spec.shift < 0.0 || spec.shift > 1.0) {
    throw config_error(ErrorCode::BadConfig, "synth: shift must be in [0,1]");
  }
}

inline uint64_t class_block_size(const SynthSpec& spec) {
  return spec.vocab_size / static_cast<uint64_t>(spec.num_classes);
}

inline LabeledCorpus generate_synthetic(const SynthSpec& spec) {
  validate(spec);
  const uint64_t block = class_block_size(spec);
  // Collapsing the mixture: a token is drawn from the class block with
  // probability (1 - shift) * separation, otherwise uniformly from the vocab.
  const double w_peak = (1.0 - spec.shift) * spec.separation;
  LabeledCorpus corpus;
  corpus.num_classes = spec.num_classes;
  for (int c = 0; c < spec.num_classes; ++c) corpus.class_names.push_back("c" + std::to_string(c));
  corpus.samples.reserve(static_cast<size_t>(spec.samples_per_class) *
                         static_cast<size_t>(spec.num_classes));
  for (int c = 0; c < spec.num_classes; ++c) {
    SplitMix64 rng(mix_seed(spec.seed, static_cast<uint64_t>(c)));
    const uint64_t block_start = static_cast<uint64_t>(c) * block;
    for (uint64_t s = 0; s < spec.samples_per_class; ++s) {
      Sample sample;
      sample.label = c;
      sample.tokens.reserve(spec.doc_length);
      for (uint64_t t = 0; t < spec.doc_length; ++t) {
        if (rng.next_double() < w_peak) {
          sample.tokens.push_back(block_start + rng.next_below(block));
        } else {
          sample.tokens.push_back(rng.next_below(spec.vocab_size));
        }
      }
      corpus.samples.push_back(std::move(sample));
    }
  }
  return corpus;
}

}  // namespace imbf
