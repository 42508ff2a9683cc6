#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "imbf/error.hpp"
#include "imbf/matrix.hpp"
#include "imbf/rng.hpp"

namespace imbf {

// Feed-forward classifier with three named parameter-group roles:
// backbone[0..k) (the layers frozen in stage 1), final (the last encoder
// layer, trained in stage 1), and head (the classifier).
struct ModelSpec {
  size_t input_dim = 0;
  std::vector<size_t> backbone_dims;  // may be empty
  size_t final_dim = 0;
  size_t num_classes = 0;
};

inline void validate(const ModelSpec& spec) {
  if (spec.input_dim == 0 || spec.final_dim == 0 || spec.num_classes == 0) {
    throw config_error(ErrorCode::BadConfig, "model: all dims must be positive");
  }
  for (size_t d : spec.backbone_dims) {
    if (d == 0) throw config_error(ErrorCode::BadConfig, "model: backbone dims must be positive");
  }
}

template <typename T>
struct ParamGroup {
  std::string name;
  Matrix<T> weight;        // fan_in x fan_out
  std::vector<T> bias;     // fan_out
  bool trainable = true;

  bool operator==(const ParamGroup&) const = default;
};

template <typename T>
struct ParamSet {
  std::vector<ParamGroup<T>> groups;  // backbone0..k-1, final, head

  size_t input_dim() const { return groups.front().weight.rows(); }
  size_t num_classes() const { return groups.back().weight.cols(); }
  size_t num_layers() const { return groups.size(); }
  ParamGroup<T>& head() { return groups.back(); }
  const ParamGroup<T>& head() const { return groups.back(); }

  bool operator==(const ParamSet&) const = default;
};

enum class TrainableSelector { FinalAndHead, All };

namespace detail {

// Glorot-uniform draw, generated in double then narrowed to T.
template <typename T>
void glorot_fill(Matrix<T>& w, uint64_t seed) {
  const double limit = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
  SplitMix64 rng(seed);
  for (size_t i = 0; i < w.size(); ++i) {
    w.data()[i] = static_cast<T>(limit * (2.0 * rng.next_double() - 1.0));
  }
}

}  // namespace detail

// Weights Glorot-uniform (group g seeded with mix_seed(seed, g)), biases zero,
// every group trainable.
template <typename T>
ParamSet<T> init_model(const ModelSpec& spec, uint64_t seed) {
  validate(spec);
  std::vector<size_t> dims;
  dims.push_back(spec.input_dim);
  for (size_t d : spec.backbone_dims) dims.push_back(d);
  dims.push_back(spec.final_dim);
  dims.push_back(spec.num_classes);

  ParamSet<T> params;
  for (size_t g = 0; g + 1 < dims.size(); ++g) {
    ParamGroup<T> group;
    if (g < spec.backbone_dims.size()) {
      group.name = "backbone" + std::to_string(g);
    } else if (g == spec.backbone_dims.size()) {
      group.name = "final";
    } else {
      group.name = "head";
    }
    group.weight = Matrix<T>(dims[g], dims[g + 1]);
    detail::glorot_fill(group.weight, mix_seed(seed, g));
    group.bias.assign(dims[g + 1], T{0});
    group.trainable = true;
    params.groups.push_back(std::move(group));
  }
  return params;
}

template <typename T>
struct ForwardCache {
  Matrix<T> input;
  std::vector<Matrix<T>> pre;  // pre-activations per layer; last entry = logits
  std::vector<Matrix<T>> act;  // relu outputs per hidden layer
};

template <typename T>
struct ForwardResult {
  Matrix<T> logits;
  ForwardCache<T> cache;
};

template <typename T>
ForwardResult<T> forward(const ParamSet<T>& params, const Matrix<T>& batch) {
  if (batch.cols() != params.input_dim()) {
    throw runtime_error(ErrorCode::DimMismatch,
                        "forward: batch dim " + std::to_string(batch.cols()) +
                            " != model input dim " + std::to_string(params.input_dim()));
  }
  ForwardCache<T> cache;
  cache.input = batch;
  const Matrix<T>* current = &cache.input;
  for (size_t g = 0; g < params.groups.size(); ++g) {
    const auto& group = params.groups[g];
    Matrix<T> z(current->rows(), group.weight.cols());
    gemm(*current, group.weight, z);
    add_row_vector(z, group.bias);
    cache.pre.push_back(std::move(z));
    if (g + 1 < params.groups.size()) {
      Matrix<T> a = cache.pre.back();
      for (size_t i = 0; i < a.size(); ++i) {
        if (a.data()[i] < T{0}) a.data()[i] = T{0};
      }
      cache.act.push_back(std::move(a));
      current = &cache.act.back();
    }
  }
  return {cache.pre.back(), std::move(cache)};
}

template <typename T>
struct GradientGroup {
  Matrix<T> weight;
  std::vector<T> bias;
};

template <typename T>
using GradientSet = std::vector<GradientGroup<T>>;

// Exact analytic gradients w.r.t. every group, frozen ones included; freezing
// is enforced by the optimizer, not here. dlogits carries whatever batch
// normalization the loss applied, so these are plain chain-rule products.
template <typename T>
GradientSet<T> backward(const ParamSet<T>& params, const ForwardCache<T>& cache,
                        const Matrix<T>& dlogits) {
  const size_t num_groups = params.groups.size();
  if (!dlogits.same_shape(cache.pre.back())) {
    throw runtime_error(ErrorCode::DimMismatch, "backward: dlogits shape mismatch");
  }
  GradientSet<T> grads(num_groups);
  Matrix<T> delta = dlogits;
  for (size_t g = num_groups; g-- > 0;) {
    const auto& group = params.groups[g];
    const Matrix<T>& layer_input = (g == 0) ? cache.input : cache.act[g - 1];
    grads[g].weight = Matrix<T>(group.weight.rows(), group.weight.cols());
    gemm_at_b(layer_input, delta, grads[g].weight);
    grads[g].bias = column_sums(delta);
    if (g > 0) {
      Matrix<T> dinput(delta.rows(), group.weight.rows());
      gemm_a_bt(delta, group.weight, dinput);
      // relu gate: pass gradient only where the pre-activation was positive
      const Matrix<T>& pre = cache.pre[g - 1];
      for (size_t i = 0; i < dinput.size(); ++i) {
        if (pre.data()[i] <= T{0}) dinput.data()[i] = T{0};
      }
      delta = std::move(dinput);
    }
  }
  return grads;
}

template <typename T>
void set_trainable(ParamSet<T>& params, TrainableSelector selector) {
  for (size_t g = 0; g < params.groups.size(); ++g) {
    if (selector == TrainableSelector::All) {
      params.groups[g].trainable = true;
    } else {
      params.groups[g].trainable = (g + 2 >= params.groups.size());  // final and head
    }
  }
}

// Replaces the head with a freshly initialized final_dim x num_classes_new
// group; every other group is untouched.
template <typename T>
void reinit_head(ParamSet<T>& params, size_t num_classes_new, uint64_t seed) {
  if (num_classes_new == 0) {
    throw config_error(ErrorCode::BadConfig, "reinit_head: num_classes must be positive");
  }
  auto& head = params.head();
  const size_t final_dim = head.weight.rows();
  head.weight = Matrix<T>(final_dim, num_classes_new);
  detail::glorot_fill(head.weight, mix_seed(seed, params.groups.size() - 1));
  head.bias.assign(num_classes_new, T{0});
}

}  // namespace imbf
