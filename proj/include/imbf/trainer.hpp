#pragma once

#include <algorithm>
#include <cstdint>
#include <future>
#include <optional>
#include <string>
#include <vector>

#include "imbf/error.hpp"
#include "imbf/features.hpp"
#include "imbf/losses.hpp"
#include "imbf/metrics.hpp"
#include "imbf/model.hpp"
#include "imbf/optim.hpp"

namespace imbf {

// Loss selection as it appears in run configs:
//   loss = "ce" | "wce-invfreq" | "wce-effnum" | "ldam"
// with optional beta, max_margin, s. `ldam_weighting` composes LDAM with
// class weights; it is off by default.
struct LossSpec {
  enum class Kind { Ce, WceInvFreq, WceEffNum, Ldam };
  enum class LdamWeighting { None, InvFreq, EffNum };

  Kind kind = Kind::Ce;
  double beta = 0.999;       // effective-number beta
  double max_margin = 0.5;   // LDAM
  double scale = 30.0;       // LDAM logit scale s
  LdamWeighting ldam_weighting = LdamWeighting::None;
};

inline std::string to_string(LossSpec::Kind kind) {
  switch (kind) {
    case LossSpec::Kind::Ce: return "ce";
    case LossSpec::Kind::WceInvFreq: return "wce-invfreq";
    case LossSpec::Kind::WceEffNum: return "wce-effnum";
    case LossSpec::Kind::Ldam: return "ldam";
  }
  return "?";
}

inline LossSpec::Kind loss_kind_from_string(const std::string& s) {
  if (s == "ce") return LossSpec::Kind::Ce;
  if (s == "wce-invfreq") return LossSpec::Kind::WceInvFreq;
  if (s == "wce-effnum") return LossSpec::Kind::WceEffNum;
  if (s == "ldam") return LossSpec::Kind::Ldam;
  throw config_error(ErrorCode::BadConfig, "unknown loss: " + s);
}

// Class weights and margins are derived from the training histogram once,
// before the first epoch, and reused for every batch of the stage.
struct ResolvedLoss {
  LossSpec spec;
  std::optional<ClassWeights> weights;
  std::optional<LdamSpec> ldam;
};

inline ResolvedLoss resolve_loss(const LossSpec& spec, const ClassHistogram& hist) {
  ResolvedLoss r;
  r.spec = spec;
  switch (spec.kind) {
    case LossSpec::Kind::Ce:
      break;
    case LossSpec::Kind::WceInvFreq:
      r.weights = inverse_frequency_weights(hist);
      break;
    case LossSpec::Kind::WceEffNum:
      r.weights = effective_number_weights(hist, {spec.beta});
      break;
    case LossSpec::Kind::Ldam:
      r.ldam = ldam_margins(hist, spec.max_margin, spec.scale);
      if (spec.ldam_weighting == LossSpec::LdamWeighting::InvFreq) {
        r.weights = inverse_frequency_weights(hist);
      } else if (spec.ldam_weighting == LossSpec::LdamWeighting::EffNum) {
        r.weights = effective_number_weights(hist, {spec.beta});
      }
      break;
  }
  return r;
}

template <typename T>
LossResult<T> apply_loss(const ResolvedLoss& loss, const Matrix<T>& logits,
                         const std::vector<int>& labels) {
  const ClassWeights* w = loss.weights ? &*loss.weights : nullptr;
  if (loss.ldam) return ldam_loss(logits, labels, *loss.ldam, w);
  return softmax_cross_entropy(logits, labels, w);
}

struct StageConfig {
  double learning_rate = 1e-4;
  uint32_t epochs = 3;
  size_t batch_size = 16;
  LossSpec loss;
  TrainableSelector trainable = TrainableSelector::All;
  uint64_t shuffle_seed = 0;
};

inline void validate(const StageConfig& cfg) {
  if (!(cfg.learning_rate > 0.0)) {
    throw config_error(ErrorCode::BadConfig, "stage: learning_rate must be positive");
  }
  if (cfg.epochs < 1) throw config_error(ErrorCode::BadConfig, "stage: epochs must be >= 1");
  if (cfg.batch_size < 1) throw config_error(ErrorCode::BadConfig, "stage: batch_size must be >= 1");
}

struct EpochTrace {
  std::vector<double> mean_loss;  // one entry per epoch
};

// One training stage: seeded shuffle per epoch, fixed-size mini-batches with
// the last partial batch kept, forward -> loss -> backward -> adam_step.
// The per-epoch shuffle is seeded with (shuffle_seed, run_seed, global epoch
// index); epoch_offset makes a later stage continue the epoch numbering of an
// earlier one, so chained stages shuffle exactly like one long stage.
template <typename T>
EpochTrace train_stage(ParamSet<T>& params, AdamState<T>& adam, const FeatureMatrix& train,
                       const StageConfig& cfg, uint64_t run_seed = 0, uint32_t epoch_offset = 0) {
  validate(cfg);
  if (train.rows() == 0) {
    throw data_error(ErrorCode::EmptyTrainingSet, "train_stage: empty training set");
  }
  if (train.dim() != params.input_dim()) {
    throw runtime_error(ErrorCode::DimMismatch, "train_stage: feature dim != model input dim");
  }
  set_trainable(params, cfg.trainable);
  const ClassHistogram hist = label_histogram(train, params.num_classes());
  const ResolvedLoss loss = resolve_loss(cfg.loss, hist);

  EpochTrace trace;
  const size_t n = train.rows();
  std::vector<int> batch_labels;
  for (uint32_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const uint64_t epoch_seed =
        mix_seed(mix_seed(cfg.shuffle_seed, run_seed), epoch_offset + epoch);
    const std::vector<size_t> order = shuffled_indices(n, epoch_seed);
    double loss_sum = 0.0;
    for (size_t start = 0; start < n; start += cfg.batch_size) {
      const size_t count = std::min(cfg.batch_size, n - start);
      Matrix<T> batch = gather_batch<T>(train, order.data() + start, count);
      batch_labels.clear();
      for (size_t i = 0; i < count; ++i) batch_labels.push_back(train.labels[order[start + i]]);
      auto fwd = forward(params, batch);
      auto result = apply_loss(loss, fwd.logits, batch_labels);
      auto grads = backward(params, fwd.cache, result.dlogits);
      adam_step(params, grads, adam, cfg.learning_rate);
      loss_sum += result.loss * static_cast<double>(count);
    }
    trace.mean_loss.push_back(loss_sum / static_cast<double>(n));
  }
  return trace;
}

template <typename T>
std::vector<int> predict(const ParamSet<T>& params, const FeatureMatrix& features,
                         size_t batch_size = 256) {
  std::vector<int> pred;
  pred.reserve(features.rows());
  std::vector<size_t> idx(features.rows());
  for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  for (size_t start = 0; start < features.rows(); start += batch_size) {
    const size_t count = std::min(batch_size, features.rows() - start);
    Matrix<T> batch = gather_batch<T>(features, idx.data() + start, count);
    auto fwd = forward(params, batch);
    for (size_t b = 0; b < count; ++b) {
      const T* row = fwd.logits.row(b);
      size_t best = 0;
      for (size_t j = 1; j < fwd.logits.cols(); ++j) {
        if (row[j] > row[best]) best = j;
      }
      pred.push_back(static_cast<int>(best));
    }
  }
  return pred;
}

template <typename T>
ConfusionMatrix evaluate(const ParamSet<T>& params, const FeatureMatrix& test) {
  if (test.rows() == 0) throw data_error(ErrorCode::EmptyEvaluation, "evaluate: empty test set");
  const std::vector<int> pred = predict(params, test);
  return confusion(test.labels, pred, params.num_classes());
}

// The three strategies compared in the experiments. The two-stage plan first
// trains only the final layer and head with the stage-1 loss, then unfreezes
// everything and resumes with the stage-2 loss.
struct TrainPlan {
  enum class Strategy { Vanilla, Ldam, TwoStage };

  Strategy strategy = Strategy::Vanilla;
  std::optional<StageConfig> stage1;  // TwoStage only
  StageConfig stage2;                 // the single stage of Vanilla/Ldam
  std::vector<uint64_t> seeds = {1, 2, 3, 4, 5};
  bool reinit_head = true;
  bool reset_optimizer_between_stages = true;

  static TrainPlan vanilla(StageConfig stage) {
    TrainPlan p;
    p.strategy = Strategy::Vanilla;
    stage.loss.kind = LossSpec::Kind::Ce;
    stage.trainable = TrainableSelector::All;
    p.stage2 = std::move(stage);
    return p;
  }

  static TrainPlan ldam(StageConfig stage) {
    TrainPlan p;
    p.strategy = Strategy::Ldam;
    stage.loss.kind = LossSpec::Kind::Ldam;
    stage.trainable = TrainableSelector::All;
    p.stage2 = std::move(stage);
    return p;
  }

  static TrainPlan two_stage(StageConfig s1, StageConfig s2) {
    TrainPlan p;
    p.strategy = Strategy::TwoStage;
    s1.trainable = TrainableSelector::FinalAndHead;
    s2.trainable = TrainableSelector::All;
    s2.loss.kind = LossSpec::Kind::Ce;
    p.stage1 = std::move(s1);
    p.stage2 = std::move(s2);
    return p;
  }

  std::string strategy_name() const {
    switch (strategy) {
      case Strategy::Vanilla: return "vanilla";
      case Strategy::Ldam: return "ldam";
      case Strategy::TwoStage: return "two-stage";
    }
    return "?";
  }
};

inline TrainPlan::Strategy strategy_from_string(const std::string& s) {
  if (s == "vanilla") return TrainPlan::Strategy::Vanilla;
  if (s == "ldam") return TrainPlan::Strategy::Ldam;
  if (s == "two-stage") return TrainPlan::Strategy::TwoStage;
  throw config_error(ErrorCode::BadConfig, "unknown strategy: " + s);
}

inline void validate(const TrainPlan& plan) {
  if (plan.seeds.empty()) throw config_error(ErrorCode::BadConfig, "plan: seeds must be non-empty");
  if (plan.strategy == TrainPlan::Strategy::TwoStage) {
    if (!plan.stage1) throw config_error(ErrorCode::BadConfig, "plan: two-stage needs stage1");
    validate(*plan.stage1);
  }
  validate(plan.stage2);
}

// Everything one seed produced: the trained parameters and per-stage traces.
struct TrainedRun {
  uint64_t seed = 0;
  ParamSet<float> params;
  std::vector<EpochTrace> traces;
};

// Executes the plan's stages for one seed, starting from the pretrained
// parameters (head re-initialized for the target task by default).
inline TrainedRun run_single_seed(const TrainPlan& plan, const ParamSet<float>& pretrained,
                                  const FeatureMatrix& train, uint64_t seed) {
  const size_t target_classes = train.num_classes;
  TrainedRun run;
  run.seed = seed;
  run.params = pretrained;
  if (plan.reinit_head) {
    reinit_head(run.params, target_classes, seed);
  } else if (run.params.num_classes() != target_classes) {
    throw config_error(ErrorCode::BadConfig,
                       "plan: checkpoint head has " + std::to_string(run.params.num_classes()) +
                           " classes but data has " + std::to_string(target_classes) +
                           " (enable reinit_head)");
  }
  AdamState<float> adam = AdamState<float>::zeros_like(run.params);
  uint32_t epoch_offset = 0;
  if (plan.strategy == TrainPlan::Strategy::TwoStage) {
    run.traces.push_back(train_stage(run.params, adam, train, *plan.stage1, seed, 0));
    epoch_offset = plan.stage1->epochs;
    if (plan.reset_optimizer_between_stages) {
      adam = AdamState<float>::zeros_like(run.params);
    }
  }
  run.traces.push_back(train_stage(run.params, adam, train, plan.stage2, seed, epoch_offset));
  return run;
}

// Training phase only; evaluation is separate so callers can defer reading
// test data until training has completed.
inline std::vector<TrainedRun> train_plan_runs(const TrainPlan& plan,
                                               const ParamSet<float>& pretrained,
                                               const FeatureMatrix& train, size_t jobs = 1) {
  validate(plan);
  std::vector<TrainedRun> runs(plan.seeds.size());
  if (jobs <= 1 || plan.seeds.size() <= 1) {
    for (size_t i = 0; i < plan.seeds.size(); ++i) {
      runs[i] = run_single_seed(plan, pretrained, train, plan.seeds[i]);
    }
    return runs;
  }
  // Distinct seeds are independent; results land in seed order regardless of
  // completion order.
  std::vector<std::future<void>> pending;
  size_t next = 0;
  while (next < plan.seeds.size()) {
    pending.clear();
    const size_t wave = std::min(jobs, plan.seeds.size() - next);
    for (size_t j = 0; j < wave; ++j) {
      const size_t i = next + j;
      pending.push_back(std::async(std::launch::async, [&, i] {
        runs[i] = run_single_seed(plan, pretrained, train, plan.seeds[i]);
      }));
    }
    for (auto& f : pending) f.get();
    next += wave;
  }
  return runs;
}

struct RunPlanResult {
  std::vector<RunReport> reports;
  std::vector<TrainedRun> runs;
};

// Algorithm: for each seed, load the pretrained model, re-init the head,
// run the strategy's stage(s), then test on the test set.
inline RunPlanResult run_plan(const TrainPlan& plan, const ParamSet<float>& pretrained,
                              const FeatureMatrix& train, const FeatureMatrix& test,
                              size_t jobs = 1) {
  RunPlanResult result;
  result.runs = train_plan_runs(plan, pretrained, train, jobs);
  for (const auto& run : result.runs) {
    result.reports.push_back(
        make_run_report(plan.strategy_name(), run.seed, evaluate(run.params, test)));
  }
  return result;
}

// Trains a fresh model on a balanced source task with cross-entropy; the
// result serves as "the pretrained model" for every downstream plan.
inline ParamSet<float> pretrain(const ModelSpec& spec, const FeatureMatrix& source_train,
                                const StageConfig& cfg, uint64_t seed) {
  if (cfg.trainable != TrainableSelector::All) {
    throw config_error(ErrorCode::BadConfig, "pretrain: trainable must be All");
  }
  if (cfg.loss.kind != LossSpec::Kind::Ce) {
    throw config_error(ErrorCode::BadConfig, "pretrain: loss must be ce");
  }
  ParamSet<float> params = init_model<float>(spec, seed);
  AdamState<float> adam = AdamState<float>::zeros_like(params);
  train_stage(params, adam, source_train, cfg, seed, 0);
  return params;
}

struct SweepGrid {
  std::vector<uint32_t> epochs_set;
  std::vector<double> lr_set;
  enum class Metric { MicroF1, MacroF1 } selection_metric = Metric::MicroF1;
};

struct SweepRow {
  uint32_t epochs = 0;
  double lr = 0.0;
  double micro_f1 = 0.0;
  double macro_f1 = 0.0;
  double top1_error = 0.0;
};

struct SweepResult {
  StageConfig best;
  std::vector<SweepRow> table;
};

// One run per (epochs, lr) cell, trained on `train` with the plan's first
// seed and scored on `val`. The grid is applied to the plan's final stage.
// Ties resolve to the lower learning rate, then fewer epochs.
inline SweepResult sweep(const SweepGrid& grid, const TrainPlan& plan_template,
                         const ParamSet<float>& pretrained, const FeatureMatrix& train,
                         const FeatureMatrix& val, size_t jobs = 1) {
  if (grid.epochs_set.empty() || grid.lr_set.empty()) {
    throw config_error(ErrorCode::BadConfig, "sweep: grid must be non-empty");
  }
  validate(plan_template);
  SweepResult result;
  size_t best_index = 0;
  double best_metric = -1.0;
  for (uint32_t e : grid.epochs_set) {
    for (double lr : grid.lr_set) {
      TrainPlan plan = plan_template;
      plan.stage2.epochs = e;
      plan.stage2.learning_rate = lr;
      plan.seeds = {plan_template.seeds.front()};
      RunPlanResult run = run_plan(plan, pretrained, train, val, jobs);
      const RunReport& report = run.reports.front();
      SweepRow row{e, lr, report.micro_f1, report.macro_f1, report.top1_error};
      const double metric =
          grid.selection_metric == SweepGrid::Metric::MicroF1 ? row.micro_f1 : row.macro_f1;
      const size_t index = result.table.size();
      result.table.push_back(row);
      const auto& best_row = result.table[best_index];
      const bool better =
          metric > best_metric ||
          (metric == best_metric &&
           (lr < best_row.lr || (lr == best_row.lr && e < best_row.epochs)));
      if (index == 0 || better) {
        best_metric = metric;
        best_index = index;
      }
    }
  }
  result.best = plan_template.stage2;
  result.best.epochs = result.table[best_index].epochs;
  result.best.learning_rate = result.table[best_index].lr;
  return result;
}

}  // namespace imbf
