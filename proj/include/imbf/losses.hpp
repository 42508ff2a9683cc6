#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "imbf/corpus.hpp"
#include "imbf/error.hpp"
#include "imbf/matrix.hpp"

namespace imbf {

// Per-class loss weights, normalized so they sum to the number of classes;
// that keeps weighted losses on the same scale as unweighted cross-entropy.
struct ClassWeights {
  std::vector<double> w;
};

namespace detail {

inline ClassWeights normalize_weights(std::vector<double> raw) {
  double sum = 0.0;
  for (double v : raw) sum += v;
  const double scale = static_cast<double>(raw.size()) / sum;
  for (double& v : raw) v *= scale;
  return {std::move(raw)};
}

inline void require_positive_counts(const ClassHistogram& hist, const char* who) {
  for (size_t c = 0; c < hist.size(); ++c) {
    if (hist[c] == 0) {
      throw data_error(ErrorCode::ZeroCountClass,
                       std::string(who) + ": class " + std::to_string(c) + " has no samples");
    }
  }
}

}  // namespace detail

// w_c proportional to 1 / n_c.
inline ClassWeights inverse_frequency_weights(const ClassHistogram& hist) {
  detail::require_positive_counts(hist, "inverse_frequency_weights");
  std::vector<double> raw(hist.size());
  for (size_t c = 0; c < hist.size(); ++c) raw[c] = 1.0 / static_cast<double>(hist[c]);
  return detail::normalize_weights(std::move(raw));
}

struct EffectiveNumberSpec {
  double beta = 0.999;  // in [0, 1)
};

// E_n = (1 - beta^n) / (1 - beta); beta = 0 degenerates to E_n = 1.
inline double effective_number(uint64_t n, double beta) {
  if (beta == 0.0) return 1.0;
  return (1.0 - std::pow(beta, static_cast<double>(n))) / (1.0 - beta);
}

// w_c proportional to 1 / E_{n_c}.
inline ClassWeights effective_number_weights(const ClassHistogram& hist,
                                             const EffectiveNumberSpec& spec) {
  if (spec.beta < 0.0 || spec.beta >= 1.0) {
    throw config_error(ErrorCode::BadConfig, "effective_number_weights: beta must be in [0,1)");
  }
  detail::require_positive_counts(hist, "effective_number_weights");
  std::vector<double> raw(hist.size());
  for (size_t c = 0; c < hist.size(); ++c) raw[c] = 1.0 / effective_number(hist[c], spec.beta);
  return detail::normalize_weights(std::move(raw));
}

// Label-distribution-aware margins with logit scale. margins[c] is subtracted
// from the true-class logit before softmax, enlarging minority margins.
struct LdamSpec {
  double max_margin = 0.5;
  double scale = 30.0;
  std::vector<double> margins;
};

// margins[c] = C / n_c^(1/4), with C chosen so the largest margin (the rarest
// class's) equals max_margin.
inline LdamSpec ldam_margins(const ClassHistogram& hist, double max_margin, double scale = 30.0) {
  if (max_margin < 0.0) {
    throw config_error(ErrorCode::BadConfig, "ldam_margins: max_margin must be non-negative");
  }
  detail::require_positive_counts(hist, "ldam_margins");
  uint64_t min_count = hist[0];
  for (uint64_t n : hist) min_count = std::min(min_count, n);
  const double c_norm = max_margin * std::pow(static_cast<double>(min_count), 0.25);
  LdamSpec spec;
  spec.max_margin = max_margin;
  spec.scale = scale;
  spec.margins.resize(hist.size());
  for (size_t c = 0; c < hist.size(); ++c) {
    spec.margins[c] = c_norm / std::pow(static_cast<double>(hist[c]), 0.25);
  }
  return spec;
}

template <typename T>
struct LossResult {
  double loss = 0.0;
  Matrix<T> dlogits;
};

namespace detail {

template <typename T>
void check_loss_inputs(const Matrix<T>& logits, const std::vector<int>& labels,
                       const ClassWeights* weights) {
  if (labels.size() != logits.rows()) {
    throw runtime_error(ErrorCode::DimMismatch, "loss: labels length != batch rows");
  }
  const int k = static_cast<int>(logits.cols());
  for (int y : labels) {
    if (y < 0 || y >= k) {
      throw data_error(ErrorCode::LabelOutOfRange, "loss: label " + std::to_string(y) +
                                                       " out of range [0," + std::to_string(k) + ")");
    }
  }
  if (weights && weights->w.size() != logits.cols()) {
    throw runtime_error(ErrorCode::DimMismatch, "loss: weights length != num classes");
  }
  for (size_t i = 0; i < logits.size(); ++i) {
    if (!std::isfinite(static_cast<double>(logits.data()[i]))) {
      throw runtime_error(ErrorCode::NonFiniteValue, "loss: non-finite logit");
    }
  }
}

}  // namespace detail

// Mean weighted softmax cross-entropy, stabilized by max-subtraction.
//   loss      = (1/B) * sum_b w_{y_b} * (-log softmax(z_b)[y_b])
//   dlogits_b = (w_{y_b}/B) * (softmax(z_b) - onehot(y_b))
// Row softmax is computed in double regardless of T.
template <typename T>
LossResult<T> softmax_cross_entropy(const Matrix<T>& logits, const std::vector<int>& labels,
                                    const ClassWeights* weights = nullptr) {
  detail::check_loss_inputs(logits, labels, weights);
  const size_t batch = logits.rows();
  const size_t k = logits.cols();
  LossResult<T> result;
  result.dlogits = Matrix<T>(batch, k);
  if (batch == 0) return result;
  const double inv_batch = 1.0 / static_cast<double>(batch);
  double loss = 0.0;
  std::vector<double> p(k);
  for (size_t b = 0; b < batch; ++b) {
    const T* z = logits.row(b);
    double zmax = static_cast<double>(z[0]);
    for (size_t j = 1; j < k; ++j) zmax = std::max(zmax, static_cast<double>(z[j]));
    double denom = 0.0;
    for (size_t j = 0; j < k; ++j) {
      p[j] = std::exp(static_cast<double>(z[j]) - zmax);
      denom += p[j];
    }
    const size_t y = static_cast<size_t>(labels[b]);
    const double w = weights ? weights->w[y] : 1.0;
    loss += w * (std::log(denom) - (static_cast<double>(z[y]) - zmax));
    T* d = result.dlogits.row(b);
    const double g = w * inv_batch;
    for (size_t j = 0; j < k; ++j) {
      d[j] = static_cast<T>(g * (p[j] / denom - (j == y ? 1.0 : 0.0)));
    }
  }
  result.loss = loss * inv_batch;
  return result;
}

// LDAM loss: the true-class logit is shifted down by its class margin, every
// logit is scaled by s, and weighted cross-entropy is taken on the result;
// the chain factor s is applied to the returned gradient. With zero margins
// and s = 1 this is bit-identical to softmax_cross_entropy.
template <typename T>
LossResult<T> ldam_loss(const Matrix<T>& logits, const std::vector<int>& labels,
                        const LdamSpec& spec, const ClassWeights* weights = nullptr) {
  if (spec.margins.size() != logits.cols()) {
    throw runtime_error(ErrorCode::DimMismatch, "ldam_loss: margins length != num classes");
  }
  detail::check_loss_inputs(logits, labels, weights);
  const T s = static_cast<T>(spec.scale);
  Matrix<T> shifted = logits;
  for (size_t b = 0; b < shifted.rows(); ++b) {
    const size_t y = static_cast<size_t>(labels[b]);
    shifted(b, y) = shifted(b, y) - static_cast<T>(spec.margins[y]);
    T* row = shifted.row(b);
    for (size_t j = 0; j < shifted.cols(); ++j) row[j] = s * row[j];
  }
  LossResult<T> result = softmax_cross_entropy(shifted, labels, weights);
  for (size_t i = 0; i < result.dlogits.size(); ++i) {
    result.dlogits.data()[i] = s * result.dlogits.data()[i];
  }
  return result;
}

}  // namespace imbf
