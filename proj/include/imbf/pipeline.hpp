#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "imbf/checkpoint.hpp"
#include "imbf/config.hpp"
#include "imbf/corpus.hpp"
#include "imbf/features.hpp"
#include "imbf/imbalance.hpp"
#include "imbf/manifest.hpp"
#include "imbf/metrics.hpp"
#include "imbf/model.hpp"
#include "imbf/report.hpp"
#include "imbf/synth.hpp"
#include "imbf/trainer.hpp"

namespace imbf {

inline std::string corpus_to_tsv(const LabeledCorpus& corpus) {
  std::ostringstream out;
  for (const auto& s : corpus.samples) {
    out << corpus.class_names[static_cast<size_t>(s.label)] << '\t';
    for (size_t i = 0; i < s.tokens.size(); ++i) {
      if (i) out << ' ';
      out << 't' << s.tokens[i];
    }
    out << '\n';
  }
  return out.str();
}

inline uint64_t corpus_fingerprint(const LabeledCorpus& corpus) {
  const std::string tsv = corpus_to_tsv(corpus);
  return fnv1a64(tsv.data(), tsv.size());
}

// ---- config schema ----------------------------------------------------------

// Every key any command understands. Shared config files carry sections for
// several commands, so validation is against the full catalog.
inline const std::set<std::string>& known_config_keys() {
  static const std::set<std::string> keys = {
      "data.source", "data.train", "data.test", "data.max_tokens",
      "data.synth.classes", "data.synth.vocab", "data.synth.doc_length",
      "data.synth.samples_per_class", "data.synth.test_samples_per_class",
      "data.synth.separation", "data.synth.shift", "data.synth.ood_shift", "data.synth.seed",
      "imbalance.variant", "imbalance.ratio", "imbalance.minority_class",
      "imbalance.minority_classes", "imbalance.target_size", "imbalance.mu", "imbalance.seed",
      "split.train_fraction", "split.seed",
      "features.dim", "features.ngram_max",
      "model.backbone", "model.final_dim", "model.seed",
      "pretrain.source", "pretrain.train", "pretrain.classes", "pretrain.vocab",
      "pretrain.doc_length", "pretrain.samples_per_class", "pretrain.separation",
      "pretrain.data_seed", "pretrain.seed", "pretrain.lr", "pretrain.epochs",
      "pretrain.batch_size", "pretrain.shuffle_seed",
      "plan.strategy", "plan.seeds", "plan.pretrained", "plan.reinit_head",
      "plan.reset_optimizer_between_stages",
      "train.lr", "train.epochs", "train.batch_size", "train.max_margin", "train.s",
      "train.beta", "train.weighting", "train.shuffle_seed",
      "stage1.loss", "stage1.lr", "stage1.epochs", "stage1.batch_size", "stage1.max_margin",
      "stage1.s", "stage1.beta", "stage1.weighting", "stage1.shuffle_seed",
      "sweep.epochs", "sweep.lrs", "sweep.metric", "sweep.val_fraction", "sweep.seed",
  };
  return keys;
}

inline void validate_config_keys(const KeyValueConfig& cfg) {
  cfg.require_known_keys(known_config_keys());
}

// ---- config section builders -----------------------------------------------

inline SynthSpec synth_spec_from_config(const KeyValueConfig& cfg, const std::string& prefix) {
  SynthSpec spec;
  spec.num_classes = static_cast<int>(cfg.get_u64(prefix + "classes", 2));
  spec.vocab_size = cfg.get_u64(prefix + "vocab", 2000);
  spec.doc_length = cfg.get_u64(prefix + "doc_length", 30);
  spec.samples_per_class = cfg.get_u64(prefix + "samples_per_class", 1000);
  spec.separation = cfg.get_double(prefix + "separation", 0.8);
  spec.shift = cfg.get_double(prefix + "shift", 0.0);
  spec.seed = cfg.get_u64(prefix + "seed", 7);
  validate(spec);
  return spec;
}

inline std::optional<ImbalanceSpec> imbalance_from_config(const KeyValueConfig& cfg) {
  const std::string variant = cfg.get_string("imbalance.variant", "none");
  if (variant == "none") return std::nullopt;
  ImbalanceSpec spec;
  spec.seed = cfg.get_u64("imbalance.seed", 13);
  if (variant == "ratio") {
    RatioImbalance r;
    r.minority_class = static_cast<int>(cfg.get_u64("imbalance.minority_class", 1));
    r.ratio = cfg.get_double("imbalance.ratio");
    spec.variant = r;
  } else if (variant == "step") {
    StepImbalance s;
    for (uint64_t c : cfg.get_u64_list("imbalance.minority_classes")) {
      s.minority_classes.push_back(static_cast<int>(c));
    }
    s.target_size = cfg.get_u64("imbalance.target_size");
    spec.variant = s;
  } else if (variant == "longtail") {
    spec.variant = LongTailImbalance{cfg.get_double("imbalance.mu", 0.85)};
  } else {
    throw config_error(ErrorCode::BadConfig, "imbalance.variant: unknown variant " + variant);
  }
  return spec;
}

struct FeaturizerConfig {
  size_t dim = 4096;
  size_t ngram_max = 2;
  size_t max_tokens = 128;
};

inline FeaturizerConfig featurizer_from_config(const KeyValueConfig& cfg) {
  FeaturizerConfig fc;
  fc.dim = cfg.get_u64("features.dim", 4096);
  fc.ngram_max = cfg.get_u64("features.ngram_max", 2);
  fc.max_tokens = cfg.get_u64("data.max_tokens", 128);
  if (fc.dim < 2) throw config_error(ErrorCode::BadConfig, "features.dim must be >= 2");
  return fc;
}

// Default architecture: two "pretrained" backbone layers plus one trainable
// final layer, 4096 -> 256 -> 128 -> 64 -> K.
inline ModelSpec model_from_config(const KeyValueConfig& cfg, size_t input_dim,
                                   size_t num_classes) {
  ModelSpec spec;
  spec.input_dim = input_dim;
  const std::string backbone = cfg.get_string("model.backbone", "256,128");
  if (!backbone.empty() && backbone != "none") {
    std::istringstream in(backbone);
    std::string item;
    while (std::getline(in, item, ',')) {
      if (item.empty()) continue;
      spec.backbone_dims.push_back(std::stoull(item));
    }
  }
  spec.final_dim = cfg.get_u64("model.final_dim", 64);
  spec.num_classes = num_classes;
  validate(spec);
  return spec;
}

inline StageConfig stage_from_config(const KeyValueConfig& cfg, const std::string& prefix,
                                     LossSpec::Kind default_loss) {
  StageConfig stage;
  stage.learning_rate = cfg.get_double(prefix + "lr", prefix == "stage1." ? 1e-4 : 1e-3);
  stage.epochs = static_cast<uint32_t>(cfg.get_u64(prefix + "epochs", 3));
  stage.batch_size = cfg.get_u64(prefix + "batch_size", 16);
  stage.shuffle_seed = cfg.get_u64(prefix + "shuffle_seed", 0);
  stage.loss.kind = default_loss;
  if (prefix == "stage1.") {
    stage.loss.kind = loss_kind_from_string(cfg.get_string(prefix + "loss", "ldam"));
  }
  stage.loss.max_margin = cfg.get_double(prefix + "max_margin", 0.5);
  stage.loss.scale = cfg.get_double(prefix + "s", 30.0);
  stage.loss.beta = cfg.get_double(prefix + "beta", 0.999);
  const std::string weighting = cfg.get_string(prefix + "weighting", "none");
  if (weighting == "none") {
    stage.loss.ldam_weighting = LossSpec::LdamWeighting::None;
  } else if (weighting == "invfreq") {
    stage.loss.ldam_weighting = LossSpec::LdamWeighting::InvFreq;
  } else if (weighting == "effnum") {
    stage.loss.ldam_weighting = LossSpec::LdamWeighting::EffNum;
  } else {
    throw config_error(ErrorCode::BadConfig, prefix + "weighting: unknown value " + weighting);
  }
  validate(stage);
  return stage;
}

inline TrainPlan plan_from_config(const KeyValueConfig& cfg, const std::string& strategy) {
  TrainPlan plan;
  const StageConfig main_stage = stage_from_config(
      cfg, "train.",
      strategy == "ldam" ? LossSpec::Kind::Ldam : LossSpec::Kind::Ce);
  switch (strategy_from_string(strategy)) {
    case TrainPlan::Strategy::Vanilla:
      plan = TrainPlan::vanilla(main_stage);
      break;
    case TrainPlan::Strategy::Ldam:
      plan = TrainPlan::ldam(main_stage);
      break;
    case TrainPlan::Strategy::TwoStage:
      plan = TrainPlan::two_stage(stage_from_config(cfg, "stage1.", LossSpec::Kind::Ldam),
                                  main_stage);
      break;
  }
  if (cfg.has("plan.seeds")) plan.seeds = cfg.get_u64_list("plan.seeds");
  plan.reinit_head = cfg.get_bool("plan.reinit_head", true);
  plan.reset_optimizer_between_stages = cfg.get_bool("plan.reset_optimizer_between_stages", true);
  validate(plan);
  return plan;
}

// ---- data resolution --------------------------------------------------------

struct ResolvedCorpus {
  LabeledCorpus corpus;
  std::string path;  // "<synthetic>" or "<split>" for in-memory data
  std::string fingerprint;
};

struct ResolvedTrainData {
  ResolvedCorpus train;
  // Present when a single TSV was split 85/15 (or per split.train_fraction):
  // the held-out half, kept in memory so no test file is ever read early.
  std::optional<LabeledCorpus> held_out_test;
};

inline ResolvedTrainData resolve_train_corpus(const KeyValueConfig& cfg) {
  ResolvedTrainData out;
  const std::string source = cfg.get_string("data.source", "synth");
  if (source == "tsv") {
    out.train.path = cfg.get_string("data.train");
    const size_t max_tokens = cfg.get_u64("data.max_tokens", 128);
    LabeledCorpus full = load_corpus(out.train.path, max_tokens);
    if (cfg.has("data.test")) {
      out.train.corpus = std::move(full);
      out.train.fingerprint = fingerprint_hex(file_fingerprint(out.train.path));
    } else {
      const double fraction = cfg.get_double("split.train_fraction", 0.85);
      const uint64_t seed = cfg.get_u64("split.seed", 17);
      auto [train_half, test_half] = split(full, fraction, seed);
      out.train.corpus = std::move(train_half);
      out.held_out_test = std::move(test_half);
      out.train.fingerprint = fingerprint_hex(corpus_fingerprint(out.train.corpus));
    }
  } else if (source == "synth") {
    const SynthSpec spec = synth_spec_from_config(cfg, "data.synth.");
    out.train.corpus = generate_synthetic(spec);
    out.train.path = "<synthetic>";
    out.train.fingerprint = fingerprint_hex(corpus_fingerprint(out.train.corpus));
  } else {
    throw config_error(ErrorCode::BadConfig, "data.source: unknown source " + source);
  }
  return out;
}

// Called only after training has finished, so a test file is never read
// before every stage completes.
inline ResolvedCorpus resolve_test_corpus(const KeyValueConfig& cfg,
                                          const ResolvedTrainData& data,
                                          const std::vector<std::string>& train_classes) {
  ResolvedCorpus out;
  if (data.held_out_test) {
    out.corpus = align_classes(*data.held_out_test, train_classes);
    out.path = "<split>";
    out.fingerprint = fingerprint_hex(corpus_fingerprint(out.corpus));
    return out;
  }
  if (cfg.has("data.test")) {
    out.path = cfg.get_string("data.test");
    const size_t max_tokens = cfg.get_u64("data.max_tokens", 128);
    out.corpus = align_classes(load_corpus(out.path, max_tokens), train_classes);
    out.fingerprint = fingerprint_hex(file_fingerprint(out.path));
  } else {
    SynthSpec spec = synth_spec_from_config(cfg, "data.synth.");
    spec.samples_per_class = cfg.get_u64("data.synth.test_samples_per_class", 500);
    spec.seed = mix_seed(spec.seed, 1);
    out.corpus = align_classes(generate_synthetic(spec), train_classes);
    out.path = "<synthetic>";
    out.fingerprint = fingerprint_hex(corpus_fingerprint(out.corpus));
  }
  return out;
}

// ---- commands ---------------------------------------------------------------

inline void ensure_out_dir(const std::filesystem::path& out) {
  std::error_code ec;
  std::filesystem::create_directories(out, ec);
  if (ec || !std::filesystem::is_directory(out)) {
    throw data_error(ErrorCode::IoFailure, "cannot create output directory: " + out.string());
  }
}

template <typename WriteFn>
void write_text_file(const std::filesystem::path& path, WriteFn&& fn) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw data_error(ErrorCode::IoFailure, "cannot write: " + path.string());
  fn(out);
  if (!out) throw data_error(ErrorCode::IoFailure, "write failed: " + path.string());
}

// gen: synthesize train/test (and an optional distribution-shifted OOD test)
// in the TSV format, plus the training histogram.
inline void cmd_gen(const KeyValueConfig& cfg, const std::filesystem::path& out_dir) {
  validate_config_keys(cfg);
  const SynthSpec train_spec = synth_spec_from_config(cfg, "data.synth.");
  SynthSpec test_spec = train_spec;
  test_spec.samples_per_class = cfg.get_u64("data.synth.test_samples_per_class", 500);
  test_spec.seed = mix_seed(train_spec.seed, 1);
  std::optional<SynthSpec> ood_spec;
  if (cfg.has("data.synth.ood_shift")) {
    ood_spec = test_spec;
    ood_spec->shift = cfg.get_double("data.synth.ood_shift");
    ood_spec->seed = mix_seed(train_spec.seed, 2);
    validate(*ood_spec);
  }
  ensure_out_dir(out_dir);

  const LabeledCorpus train = generate_synthetic(train_spec);
  save_corpus(train, out_dir / "train.tsv");
  save_corpus(generate_synthetic(test_spec), out_dir / "test.tsv");
  if (ood_spec) save_corpus(generate_synthetic(*ood_spec), out_dir / "test_ood.tsv");
  write_text_file(out_dir / "histogram.csv", [&](std::ostream& os) { write_histogram_csv(train, os); });
  write_histogram_csv(train, std::cout);
}

// imbalance: apply the configured transform to a training TSV; the test file
// is never touched.
inline void cmd_imbalance(const KeyValueConfig& cfg, const std::filesystem::path& out_dir) {
  validate_config_keys(cfg);
  const std::string in_path = cfg.get_string("data.train");
  const size_t max_tokens = cfg.get_u64("data.max_tokens", 128);
  const auto spec = imbalance_from_config(cfg);
  if (!spec) {
    throw config_error(ErrorCode::BadConfig, "imbalance: imbalance.variant must not be none");
  }
  const LabeledCorpus corpus = load_corpus(in_path, max_tokens);
  const LabeledCorpus imbalanced = apply_imbalance(corpus, *spec);
  ensure_out_dir(out_dir);
  save_corpus(imbalanced, out_dir / "train_imbalanced.tsv");
  write_text_file(out_dir / "histogram.csv",
                  [&](std::ostream& os) { write_histogram_csv(imbalanced, os); });
  write_histogram_csv(imbalanced, std::cout);
}

// pretrain: train a fresh model on a balanced source task with CE and save
// the checkpoint all downstream plans start from.
inline void cmd_pretrain(const KeyValueConfig& cfg, const std::filesystem::path& out_dir) {
  validate_config_keys(cfg);
  const FeaturizerConfig fc = featurizer_from_config(cfg);
  const std::string source = cfg.get_string("pretrain.source", "synth");
  LabeledCorpus corpus;
  std::string data_path = "<synthetic>";
  if (source == "tsv") {
    data_path = cfg.get_string("pretrain.train");
    corpus = load_corpus(data_path, fc.max_tokens);
  } else if (source == "synth") {
    SynthSpec spec;
    spec.num_classes = static_cast<int>(cfg.get_u64("pretrain.classes", 4));
    spec.vocab_size = cfg.get_u64("pretrain.vocab", cfg.get_u64("data.synth.vocab", 2000));
    spec.doc_length = cfg.get_u64("pretrain.doc_length", cfg.get_u64("data.synth.doc_length", 30));
    spec.samples_per_class = cfg.get_u64("pretrain.samples_per_class", 1000);
    spec.separation = cfg.get_double("pretrain.separation", 1.0);
    spec.seed = cfg.get_u64("pretrain.data_seed", 101);
    validate(spec);
    corpus = generate_synthetic(spec);
  } else {
    throw config_error(ErrorCode::BadConfig, "pretrain.source: unknown source " + source);
  }
  StageConfig stage;
  stage.learning_rate = cfg.get_double("pretrain.lr", 1e-3);
  stage.epochs = static_cast<uint32_t>(cfg.get_u64("pretrain.epochs", 2));
  stage.batch_size = cfg.get_u64("pretrain.batch_size", 32);
  stage.shuffle_seed = cfg.get_u64("pretrain.shuffle_seed", 0);
  validate(stage);
  const uint64_t seed = cfg.get_u64("pretrain.seed", cfg.get_u64("model.seed", 1));
  const ModelSpec model_spec =
      model_from_config(cfg, fc.dim, static_cast<size_t>(corpus.num_classes));

  const auto start = std::chrono::steady_clock::now();
  const FeatureMatrix features = featurize(corpus, fc.dim, fc.ngram_max);
  const ParamSet<float> params = pretrain(model_spec, features, stage, seed);
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  ensure_out_dir(out_dir);
  save_checkpoint_file(params, out_dir / "pretrained.ckpt");
  write_text_file(out_dir / "classes.txt", [&](std::ostream& os) {
    for (const auto& name : corpus.class_names) os << name << '\n';
  });
  RunManifest manifest;
  manifest.strategy = "pretrain";
  manifest.seeds = {seed};
  manifest.plan = {{"stage", stage_to_json(stage)}};
  manifest.model = model_to_json(model_spec);
  manifest.features = {{"dim", fc.dim}, {"ngram_max", fc.ngram_max}, {"max_tokens", fc.max_tokens}};
  manifest.train_path = data_path;
  manifest.train_fingerprint = fingerprint_hex(corpus_fingerprint(corpus));
  manifest.class_names = corpus.class_names;
  manifest.train_histogram = class_histogram(corpus);
  manifest.checkpoints = {"pretrained.ckpt"};
  manifest.wall_clock_seconds = wall;
  write_manifest(manifest, out_dir / "manifest.json");
}

// train: run one strategy across the plan's seeds, then evaluate. The test
// corpus is not read until every stage has finished.
inline void cmd_train(const KeyValueConfig& cfg, const std::string& strategy,
                      const std::filesystem::path& out_dir, size_t jobs = 1) {
  validate_config_keys(cfg);
  const FeaturizerConfig fc = featurizer_from_config(cfg);
  const TrainPlan plan = plan_from_config(cfg, strategy);
  const auto imbalance = imbalance_from_config(cfg);
  const std::string pretrained_path = cfg.get_string("plan.pretrained");
  const ParamSet<float> pretrained = load_checkpoint_file(pretrained_path);
  if (pretrained.input_dim() != fc.dim) {
    throw config_error(ErrorCode::BadConfig,
                       "plan.pretrained: checkpoint input dim " +
                           std::to_string(pretrained.input_dim()) +
                           " does not match features.dim " + std::to_string(fc.dim));
  }

  ResolvedTrainData data = resolve_train_corpus(cfg);
  ResolvedCorpus& train = data.train;
  std::optional<double> ratio;
  if (imbalance) {
    train.corpus = apply_imbalance(train.corpus, *imbalance);
    if (const auto* r = std::get_if<RatioImbalance>(&imbalance->variant)) ratio = r->ratio;
    train.fingerprint = fingerprint_hex(corpus_fingerprint(train.corpus));
  }

  const auto start = std::chrono::steady_clock::now();
  const FeatureMatrix train_features = featurize(train.corpus, fc.dim, fc.ngram_max);
  std::vector<TrainedRun> runs = train_plan_runs(plan, pretrained, train_features, jobs);

  const ResolvedCorpus test = resolve_test_corpus(cfg, data, train.corpus.class_names);
  const FeatureMatrix test_features = featurize(test.corpus, fc.dim, fc.ngram_max);
  std::vector<RunReport> reports;
  for (const auto& run : runs) {
    reports.push_back(
        make_run_report(plan.strategy_name(), run.seed, evaluate(run.params, test_features)));
  }
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  ensure_out_dir(out_dir);
  write_text_file(out_dir / "reports.csv",
                  [&](std::ostream& os) { write_reports_csv(os, reports); });
  write_text_file(out_dir / "aggregate.csv",
                  [&](std::ostream& os) { write_aggregate_csv(os, aggregate(reports)); });
  write_text_file(out_dir / "classes.txt", [&](std::ostream& os) {
    for (const auto& name : train.corpus.class_names) os << name << '\n';
  });

  RunManifest manifest;
  manifest.strategy = plan.strategy_name();
  manifest.seeds = plan.seeds;
  manifest.plan = plan_to_json(plan);
  ModelSpec model_spec;
  model_spec.input_dim = fc.dim;
  for (size_t g = 0; g + 2 < pretrained.groups.size(); ++g) {
    model_spec.backbone_dims.push_back(pretrained.groups[g].weight.cols());
  }
  model_spec.final_dim = pretrained.groups[pretrained.groups.size() - 2].weight.cols();
  model_spec.num_classes = static_cast<size_t>(train.corpus.num_classes);
  manifest.model = model_to_json(model_spec);
  manifest.features = {{"dim", fc.dim}, {"ngram_max", fc.ngram_max}, {"max_tokens", fc.max_tokens}};
  manifest.train_path = train.path;
  manifest.train_fingerprint = train.fingerprint;
  manifest.test_path = test.path;
  manifest.test_fingerprint = test.fingerprint;
  manifest.class_names = train.corpus.class_names;
  manifest.train_histogram = class_histogram(train.corpus);
  manifest.imbalance_ratio = ratio;
  manifest.wall_clock_seconds = wall;
  for (const auto& run : runs) {
    const std::string name = "seed" + std::to_string(run.seed) + ".ckpt";
    save_checkpoint_file(run.params, out_dir / name);
    manifest.checkpoints.push_back(name);
    std::vector<std::vector<double>> per_stage;
    for (const auto& t : run.traces) per_stage.push_back(t.mean_loss);
    manifest.epoch_traces.push_back(std::move(per_stage));
  }
  write_manifest(manifest, out_dir / "manifest.json");
}

// sweep: grid over (epochs, lr) for the plan's final stage, scored on a
// held-out validation slice of the training data.
inline void cmd_sweep(const KeyValueConfig& cfg, const std::string& strategy,
                      const std::filesystem::path& out_dir, size_t jobs = 1) {
  validate_config_keys(cfg);
  const FeaturizerConfig fc = featurizer_from_config(cfg);
  const TrainPlan plan = plan_from_config(cfg, strategy);
  const auto imbalance = imbalance_from_config(cfg);
  const ParamSet<float> pretrained = load_checkpoint_file(cfg.get_string("plan.pretrained"));
  SweepGrid grid;
  for (uint64_t e : cfg.get_u64_list("sweep.epochs")) grid.epochs_set.push_back(static_cast<uint32_t>(e));
  grid.lr_set = cfg.get_double_list("sweep.lrs");
  const std::string metric = cfg.get_string("sweep.metric", "micro_f1");
  if (metric == "micro_f1") {
    grid.selection_metric = SweepGrid::Metric::MicroF1;
  } else if (metric == "macro_f1") {
    grid.selection_metric = SweepGrid::Metric::MacroF1;
  } else {
    throw config_error(ErrorCode::BadConfig, "sweep.metric: unknown metric " + metric);
  }
  const double val_fraction = cfg.get_double("sweep.val_fraction", 0.15);
  const uint64_t split_seed = cfg.get_u64("sweep.seed", 23);

  ResolvedTrainData data = resolve_train_corpus(cfg);
  LabeledCorpus train_corpus = std::move(data.train.corpus);
  if (imbalance) train_corpus = apply_imbalance(train_corpus, *imbalance);

  const auto [fit_corpus, val_corpus] = split(train_corpus, 1.0 - val_fraction, split_seed);
  const FeatureMatrix fit = featurize(fit_corpus, fc.dim, fc.ngram_max);
  const FeatureMatrix val = featurize(val_corpus, fc.dim, fc.ngram_max);
  const SweepResult result = sweep(grid, plan, pretrained, fit, val, jobs);

  ensure_out_dir(out_dir);
  write_text_file(out_dir / "sweep.csv", [&](std::ostream& os) {
    os << "epochs,lr,micro_f1,macro_f1,top1_error\n";
    for (const auto& row : result.table) {
      os << row.epochs << ',' << row.lr << ',' << format_metric(row.micro_f1) << ','
         << format_metric(row.macro_f1) << ',' << format_metric(row.top1_error) << '\n';
    }
  });
  write_text_file(out_dir / "best.cfg", [&](std::ostream& os) {
    os << "train.epochs = " << result.best.epochs << '\n';
    os << "train.lr = " << result.best.learning_rate << '\n';
  });
}

// eval: score a saved checkpoint on a test TSV.
inline void cmd_eval(const KeyValueConfig& cfg, const std::filesystem::path& ckpt,
                     const std::filesystem::path& test_path,
                     const std::optional<std::filesystem::path>& classes_path,
                     const std::filesystem::path& out_dir) {
  validate_config_keys(cfg);
  const FeaturizerConfig fc = featurizer_from_config(cfg);
  const ParamSet<float> params = load_checkpoint_file(ckpt);
  LabeledCorpus corpus = load_corpus(test_path, fc.max_tokens);
  if (classes_path) {
    std::ifstream in(*classes_path);
    if (!in) throw data_error(ErrorCode::MissingFile, "cannot open classes file: " + classes_path->string());
    std::vector<std::string> names;
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!line.empty()) names.push_back(line);
    }
    corpus = align_classes(corpus, names);
  }
  if (params.input_dim() != fc.dim) {
    throw config_error(ErrorCode::BadConfig, "eval: checkpoint input dim does not match features.dim");
  }
  const FeatureMatrix features = featurize(corpus, fc.dim, fc.ngram_max);
  const RunReport report = make_run_report("eval", 0, evaluate(params, features));
  ensure_out_dir(out_dir);
  write_text_file(out_dir / "eval.csv",
                  [&](std::ostream& os) { write_reports_csv(os, {report}); });
}

// report: comparison tables and plot data across run directories.
inline void cmd_report(const std::vector<std::filesystem::path>& run_dirs,
                       const std::filesystem::path& out_dir, bool improvements = true) {
  if (run_dirs.empty()) {
    throw config_error(ErrorCode::BadConfig, "report: at least one run dir required");
  }
  std::vector<RunDirData> dirs;
  for (const auto& d : run_dirs) dirs.push_back(read_run_dir(d));
  ensure_out_dir(out_dir);
  write_text_file(out_dir / "table1.csv",
                  [&](std::ostream& os) { write_table1_csv(os, dirs, improvements); });
  write_text_file(out_dir / "per_class.csv",
                  [&](std::ostream& os) { write_per_class_csv(os, dirs); });
  bool all_have_ratio = true;
  for (const auto& d : dirs) all_have_ratio = all_have_ratio && d.imbalance_ratio.has_value();
  if (all_have_ratio) {
    write_text_file(out_dir / "ratio_curve.csv",
                    [&](std::ostream& os) { write_ratio_curve_csv(os, dirs); });
  }
}

}  // namespace imbf
