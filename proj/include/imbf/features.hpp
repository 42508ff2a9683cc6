#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "imbf/corpus.hpp"
#include "imbf/error.hpp"
#include "imbf/hash.hpp"
#include "imbf/matrix.hpp"

namespace imbf {

// Dense per-sample feature vectors plus aligned labels.
struct FeatureMatrix {
  Matrix<double> values;
  std::vector<int> labels;
  size_t num_classes = 0;

  size_t rows() const { return values.rows(); }
  size_t dim() const { return values.cols(); }
};

// Hashed bag of 1..ngram_max-grams. Bucket index for an n-gram is the FNV-1a
// hash of its token-id tuple (8 bytes little-endian per id) modulo dim;
// counts are then L2-normalized per row. An empty token list stays the zero
// vector.
inline FeatureMatrix featurize(const LabeledCorpus& corpus, size_t dim, size_t ngram_max) {
  if (dim < 2) throw config_error(ErrorCode::BadConfig, "featurize: dim must be >= 2");
  if (ngram_max < 1) throw config_error(ErrorCode::BadConfig, "featurize: ngram_max must be >= 1");
  FeatureMatrix fm;
  fm.values = Matrix<double>(corpus.samples.size(), dim);
  fm.num_classes = static_cast<size_t>(corpus.num_classes);
  fm.labels.reserve(corpus.samples.size());
  for (size_t r = 0; r < corpus.samples.size(); ++r) {
    const auto& tokens = corpus.samples[r].tokens;
    double* row = fm.values.row(r);
    for (size_t n = 1; n <= ngram_max && n <= tokens.size(); ++n) {
      for (size_t start = 0; start + n <= tokens.size(); ++start) {
        const uint64_t h = fnv1a64_ids(tokens.data() + start, n);
        row[h % dim] += 1.0;
      }
    }
    double norm_sq = 0.0;
    for (size_t c = 0; c < dim; ++c) norm_sq += row[c] * row[c];
    if (norm_sq > 0.0) {
      const double inv = 1.0 / std::sqrt(norm_sq);
      for (size_t c = 0; c < dim; ++c) row[c] *= inv;
    }
    fm.labels.push_back(corpus.samples[r].label);
  }
  return fm;
}

inline ClassHistogram label_histogram(const FeatureMatrix& fm, size_t num_classes) {
  ClassHistogram counts(num_classes, 0);
  for (int label : fm.labels) {
    if (label < 0 || static_cast<size_t>(label) >= num_classes) {
      throw data_error(ErrorCode::LabelOutOfRange,
                       "label " + std::to_string(label) + " out of range");
    }
    counts[static_cast<size_t>(label)]++;
  }
  return counts;
}

// Gathers the given rows into a batch of the model's scalar type.
template <typename T>
Matrix<T> gather_batch(const FeatureMatrix& fm, const size_t* indices, size_t count) {
  Matrix<T> batch(count, fm.dim());
  for (size_t i = 0; i < count; ++i) {
    const double* src = fm.values.row(indices[i]);
    T* dst = batch.row(i);
    for (size_t c = 0; c < fm.dim(); ++c) dst[c] = static_cast<T>(src[c]);
  }
  return batch;
}

}  // namespace imbf
