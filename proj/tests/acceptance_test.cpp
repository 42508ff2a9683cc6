// Acceptance suite: one test per criterion, each printing its own pass/fail
// line through the gtest reporter.

#include <gtest/gtest.h>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "fd_util.hpp"
#include "imbf/pipeline.hpp"

using namespace imbf;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::filesystem::path config_dir() {
  const char* env = std::getenv("IMBF_CONFIG_DIR");
  if (env) return env;
#ifdef IMBF_CONFIG_DIR_DEFAULT
  return std::filesystem::path(IMBF_CONFIG_DIR_DEFAULT);
#else
  return std::filesystem::path("configs");
#endif
}

std::string cli_path() {
  const char* env = std::getenv("IMBF_CLI");
  if (env) return env;
#ifdef IMBF_CLI_DEFAULT
  return IMBF_CLI_DEFAULT;
#else
  return "";
#endif
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  EXPECT_TRUE(in) << "missing " << path;
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

LabeledCorpus uniform_corpus(int num_classes, uint64_t per_class) {
  LabeledCorpus c;
  c.num_classes = num_classes;
  for (int i = 0; i < num_classes; ++i) c.class_names.push_back("c" + std::to_string(i));
  uint64_t token = 0;
  for (int label = 0; label < num_classes; ++label) {
    for (uint64_t s = 0; s < per_class; ++s) c.samples.push_back({label, {token++}});
  }
  return c;
}

// Shared fixture for the end-to-end trend tests: the shipped two-class config,
// its pretrained checkpoint, and the balanced in-distribution test set.
struct TrendSetup {
  KeyValueConfig cfg;
  SynthSpec base_spec;
  LabeledCorpus base_corpus;
  FeatureMatrix test_features;
  ParamSet<float> pretrained;
  FeaturizerConfig fc;
  uint64_t imbalance_seed = 0;
  int minority_class = 1;
};

const TrendSetup& trend_setup() {
  static const TrendSetup setup = [] {
    TrendSetup s;
    s.cfg = KeyValueConfig::from_file(config_dir() / "twoclass.cfg");
    s.fc = featurizer_from_config(s.cfg);
    s.base_spec = synth_spec_from_config(s.cfg, "data.synth.");
    s.base_corpus = generate_synthetic(s.base_spec);
    s.imbalance_seed = s.cfg.get_u64("imbalance.seed", 13);
    s.minority_class = static_cast<int>(s.cfg.get_u64("imbalance.minority_class", 1));

    SynthSpec test_spec = s.base_spec;
    test_spec.samples_per_class = s.cfg.get_u64("data.synth.test_samples_per_class", 500);
    test_spec.seed = mix_seed(s.base_spec.seed, 1);
    s.test_features = featurize(generate_synthetic(test_spec), s.fc.dim, s.fc.ngram_max);

    SynthSpec source_spec;
    source_spec.num_classes = static_cast<int>(s.cfg.get_u64("pretrain.classes", 4));
    source_spec.vocab_size = s.base_spec.vocab_size;
    source_spec.doc_length = s.base_spec.doc_length;
    source_spec.samples_per_class = s.cfg.get_u64("pretrain.samples_per_class", 1500);
    source_spec.separation = s.cfg.get_double("pretrain.separation", 1.0);
    source_spec.seed = s.cfg.get_u64("pretrain.data_seed", 101);
    const FeatureMatrix source = featurize(generate_synthetic(source_spec), s.fc.dim, s.fc.ngram_max);
    StageConfig pre_cfg;
    pre_cfg.learning_rate = s.cfg.get_double("pretrain.lr", 2e-3);
    pre_cfg.epochs = static_cast<uint32_t>(s.cfg.get_u64("pretrain.epochs", 2));
    pre_cfg.batch_size = s.cfg.get_u64("pretrain.batch_size", 32);
    const ModelSpec model_spec =
        model_from_config(s.cfg, s.fc.dim, static_cast<size_t>(source_spec.num_classes));
    s.pretrained = pretrain(model_spec, source, pre_cfg, s.cfg.get_u64("pretrain.seed", 99));
    return s;
  }();
  return setup;
}

double mean_minority_f1(const std::vector<RunReport>& reports, int minority) {
  double sum = 0.0;
  for (const auto& r : reports) sum += r.per_class[static_cast<size_t>(minority)].f1;
  return sum / static_cast<double>(reports.size());
}

double mean_micro_f1(const std::vector<RunReport>& reports) {
  double sum = 0.0;
  for (const auto& r : reports) sum += r.micro_f1;
  return sum / static_cast<double>(reports.size());
}

}  // namespace

// Criterion 1: long-tail transform, N_max=600, mu=0.85, 20 classes -> tail 27.
TEST(Acceptance, C01_LongTailReproduction) {
  const auto start = Clock::now();
  const auto corpus = uniform_corpus(20, 600);
  const auto hist = class_histogram(apply_longtail_imbalance(corpus, {0.85}, 11));
  EXPECT_EQ(hist[19], 27u);
  for (size_t c = 0; c + 1 < hist.size(); ++c) EXPECT_GE(hist[c], hist[c + 1]);
  EXPECT_LT(seconds_since(start), 1.0);
}

// Criterion 2: step transform, 10 minority classes to exactly 59, majorities
// in 591..600 untouched.
TEST(Acceptance, C02_StepReproduction) {
  LabeledCorpus corpus;
  corpus.num_classes = 20;
  std::vector<uint64_t> original(20);
  uint64_t token = 0;
  for (int c = 0; c < 20; ++c) {
    corpus.class_names.push_back("c" + std::to_string(c));
    original[c] = 591 + static_cast<uint64_t>((c * 7) % 10);
    for (uint64_t s = 0; s < original[c]; ++s) corpus.samples.push_back({c, {token++}});
  }
  StepImbalance spec;
  for (int c = 10; c < 20; ++c) spec.minority_classes.push_back(c);
  spec.target_size = 59;
  const auto hist = class_histogram(apply_step_imbalance(corpus, spec, 3));
  for (int c = 0; c < 10; ++c) EXPECT_EQ(hist[c], original[c]);
  for (int c = 10; c < 20; ++c) EXPECT_EQ(hist[c], 59u);
}

namespace {

// Central differences are invalid across the relu kink; models are drawn
// with randomized biases and re-drawn if any hidden pre-activation sits
// within a guard band of zero.
bool clear_of_relu_kinks(const ParamSet<double>& params, const Matrix<double>& batch) {
  const auto out = forward(params, batch);
  for (size_t layer = 0; layer + 1 < out.cache.pre.size(); ++layer) {
    const auto& pre = out.cache.pre[layer];
    for (size_t i = 0; i < pre.size(); ++i) {
      if (std::fabs(pre.data()[i]) < 1e-3) return false;
    }
  }
  return true;
}

}  // namespace

// Criterion 3: gradient suite, 50 random small models x {CE, weighted CE,
// LDAM}, every parameter within relative 1e-4 of central differences.
TEST(Acceptance, C03_GradientSuite) {
  const auto start = Clock::now();
  SplitMix64 rng(90210);
  size_t checked = 0;
  int models_checked = 0;
  while (models_checked < 50) {
    const size_t k = 2 + rng.next_below(3);
    ModelSpec spec{2 + rng.next_below(3), {2 + rng.next_below(2)}, 2 + rng.next_below(2), k};
    auto params = init_model<double>(spec, 4000 + static_cast<uint64_t>(models_checked));
    for (auto& g : params.groups) {
      for (auto& b : g.bias) b = 0.5 * (2.0 * rng.next_double() - 1.0);
    }
    const size_t batch_size = 2 + rng.next_below(3);
    Matrix<double> batch(batch_size, spec.input_dim);
    for (size_t i = 0; i < batch.size(); ++i) batch.data()[i] = 2.0 * rng.next_double() - 1.0;
    if (!clear_of_relu_kinks(params, batch)) continue;
    ++models_checked;
    std::vector<int> labels;
    ClassHistogram hist(k, 1);
    for (size_t b = 0; b < batch_size; ++b) {
      labels.push_back(static_cast<int>(rng.next_below(k)));
      hist[static_cast<size_t>(labels.back())] += 2;
    }
    const auto weights = inverse_frequency_weights(hist);
    const auto ldam = ldam_margins(hist, 0.5, 3.0);
    for (int which = 0; which < 3; ++which) {
      auto loss_of = [&](const ParamSet<double>& p) {
        const auto out = forward(p, batch);
        if (which == 0) return softmax_cross_entropy(out.logits, labels).loss;
        if (which == 1) return softmax_cross_entropy(out.logits, labels, &weights).loss;
        return ldam_loss(out.logits, labels, ldam).loss;
      };
      const auto out = forward(params, batch);
      LossResult<double> lr;
      if (which == 0) {
        lr = softmax_cross_entropy(out.logits, labels);
      } else if (which == 1) {
        lr = softmax_cross_entropy(out.logits, labels, &weights);
      } else {
        lr = ldam_loss(out.logits, labels, ldam);
      }
      const auto grads = backward(params, out.cache, lr.dlogits);
      for (size_t g = 0; g < params.groups.size(); ++g) {
        auto check = [&](double* theta, double analytic) {
          const double saved = *theta;
          const double fd = central_difference(
              [&](double v) {
                *theta = v;
                return loss_of(params);
              },
              saved);
          *theta = saved;
          ASSERT_LT(relative_error(analytic, fd), 1e-4);
          ++checked;
        };
        for (size_t i = 0; i < params.groups[g].weight.size(); ++i) {
          check(params.groups[g].weight.data() + i, grads[g].weight.data()[i]);
        }
        for (size_t i = 0; i < params.groups[g].bias.size(); ++i) {
          check(params.groups[g].bias.data() + i, grads[g].bias[i]);
        }
      }
    }
  }
  EXPECT_GT(checked, 1000u);
  EXPECT_LT(seconds_since(start), 30.0);
}

// Criterion 4: freeze suite.
TEST(Acceptance, C04_FreezeSuite) {
  FeatureMatrix train;
  train.values = Matrix<double>(24, 8);
  train.num_classes = 2;
  SplitMix64 rng(4242);
  for (size_t i = 0; i < train.values.size(); ++i) train.values.data()[i] = rng.next_double();
  for (size_t i = 0; i < 24; ++i) train.labels.push_back(static_cast<int>(i % 2));

  auto params = init_model<float>({8, {6, 5}, 4, 2}, 12);
  const auto before = params;
  auto adam = AdamState<float>::zeros_like(params);
  StageConfig stage;
  stage.learning_rate = 0.05;
  stage.epochs = 2;
  stage.batch_size = 6;
  stage.trainable = TrainableSelector::FinalAndHead;
  train_stage(params, adam, train, stage);
  for (size_t g = 0; g < 2; ++g) {
    EXPECT_EQ(params.groups[g].weight, before.groups[g].weight);
    EXPECT_EQ(params.groups[g].bias, before.groups[g].bias);
    EXPECT_EQ(adam.groups[g].step, 0u);
  }
  // Unfreeze: a subsequent stage must move at least one backbone parameter.
  stage.trainable = TrainableSelector::All;
  stage.epochs = 1;
  train_stage(params, adam, train, stage);
  EXPECT_FALSE(params.groups[0].weight == before.groups[0].weight);
}

// Criterion 5: reduction identities.
TEST(Acceptance, C05_ReductionIdentities) {
  // LDAM(margins=0, s=1) equals CE within 1e-12 on 1000 random batches.
  SplitMix64 rng(515);
  for (int trial = 0; trial < 1000; ++trial) {
    const size_t k = 2 + rng.next_below(4);
    const size_t batch = 1 + rng.next_below(5);
    Matrix<double> logits(batch, k);
    for (size_t i = 0; i < logits.size(); ++i) logits.data()[i] = 10.0 * rng.next_double() - 5.0;
    std::vector<int> labels;
    for (size_t b = 0; b < batch; ++b) labels.push_back(static_cast<int>(rng.next_below(k)));
    LdamSpec spec;
    spec.scale = 1.0;
    spec.margins.assign(k, 0.0);
    const auto ce = softmax_cross_entropy(logits, labels);
    const auto ld = ldam_loss(logits, labels, spec);
    ASSERT_NEAR(ce.loss, ld.loss, 1e-12);
    for (size_t i = 0; i < ce.dlogits.size(); ++i) {
      ASSERT_NEAR(ce.dlogits.data()[i], ld.dlogits.data()[i], 1e-12);
    }
  }

  // Neutralized TwoStage bit-equals a Vanilla run of the combined epochs.
  FeatureMatrix train;
  train.values = Matrix<double>(30, 6);
  train.num_classes = 2;
  for (size_t i = 0; i < train.values.size(); ++i) train.values.data()[i] = rng.next_double();
  for (size_t i = 0; i < 30; ++i) train.labels.push_back(static_cast<int>(rng.next_below(2)));
  FeatureMatrix test = train;

  const auto pretrained = init_model<float>({6, {5}, 4, 2}, 88);
  StageConfig s1;
  s1.learning_rate = 0.02;
  s1.epochs = 2;
  s1.batch_size = 8;
  s1.loss.kind = LossSpec::Kind::Ldam;
  s1.loss.max_margin = 0.0;  // forces all margins to zero
  s1.loss.scale = 1.0;
  StageConfig s2 = s1;
  s2.loss = LossSpec{};
  s2.epochs = 3;
  auto neutralized = TrainPlan::two_stage(s1, s2);
  neutralized.stage1->trainable = TrainableSelector::All;
  neutralized.reset_optimizer_between_stages = false;
  neutralized.seeds = {3, 4};

  StageConfig merged = s2;
  merged.epochs = 5;
  auto vanilla = TrainPlan::vanilla(merged);
  vanilla.seeds = {3, 4};

  const auto rt = run_plan(neutralized, pretrained, train, test);
  const auto rv = run_plan(vanilla, pretrained, train, test);
  for (size_t i = 0; i < rt.runs.size(); ++i) {
    EXPECT_EQ(rt.runs[i].params, rv.runs[i].params);
  }
}

// Criterion 6: closed-form oracles.
TEST(Acceptance, C06_ClosedFormOracles) {
  // Effective number vs incremental geometric summation, every n up to 1e4.
  for (const double beta : {0.9, 0.99, 0.999}) {
    long double sum = 0.0L, term = 1.0L;
    for (uint64_t n = 1; n <= 10000; ++n) {
      sum += term;
      term *= static_cast<long double>(beta);
      ASSERT_NEAR(effective_number(n, beta), static_cast<double>(sum), 1e-12)
          << "beta=" << beta << " n=" << n;
    }
  }
  // LDAM margins hand values.
  const auto margins = ldam_margins({16, 256}, 0.5);
  EXPECT_NEAR(margins.margins[0], 0.5, 1e-12);
  EXPECT_NEAR(margins.margins[1], 0.25, 1e-12);
  // Micro F1 equals trace/total on 1000 random confusion matrices, exactly.
  SplitMix64 rng(616);
  for (int trial = 0; trial < 1000; ++trial) {
    const size_t k = 2 + rng.next_below(8);
    ConfusionMatrix cm(k);
    for (size_t i = 0; i < cm.m.size(); ++i) cm.m[i] = rng.next_below(50);
    if (cm.total() == 0) cm.at(0, 0) = 1;
    ASSERT_EQ(micro_f1(cm), static_cast<double>(cm.trace()) / static_cast<double>(cm.total()));
  }
}

// Criterion 7: end-to-end trend on the shipped two-class config. Two-stage
// beats vanilla on minority-class F1 at ratio 0.1 and the gap shrinks as the
// ratio rises through {0.1, 0.4, 0.7}.
TEST(Acceptance, C07_EndToEndTrend) {
  const auto start = Clock::now();
  const TrendSetup& s = trend_setup();
  auto vanilla = plan_from_config(s.cfg, "vanilla");
  auto two_stage = plan_from_config(s.cfg, "two-stage");

  std::vector<double> gaps;
  std::vector<double> minority_vanilla;
  for (const double ratio : {0.1, 0.4, 0.7}) {
    RatioImbalance imb{s.minority_class, ratio};
    const auto train_corpus = apply_ratio_imbalance(s.base_corpus, imb, s.imbalance_seed);
    const auto train = featurize(train_corpus, s.fc.dim, s.fc.ngram_max);
    const auto rv = run_plan(vanilla, s.pretrained, train, s.test_features, 2);
    const auto rt = run_plan(two_stage, s.pretrained, train, s.test_features, 2);
    const double fv = mean_minority_f1(rv.reports, s.minority_class);
    const double ft = mean_minority_f1(rt.reports, s.minority_class);
    gaps.push_back(ft - fv);
    minority_vanilla.push_back(fv);
  }
  // Two-stage wins on the minority class at the extreme ratio.
  EXPECT_GT(gaps[0], 0.0) << "two-stage minority F1 must exceed vanilla at ratio 0.1";
  // The improvement diminishes as the imbalance ratio increases.
  EXPECT_GE(gaps[0], gaps[1]);
  EXPECT_GE(gaps[1], gaps[2]);
  EXPECT_LT(seconds_since(start), 120.0);
}

// Criterion 8: OOD trend. With the shift-0.3 test set at ratio 0.1, two-stage
// mean micro F1 is at least vanilla's.
TEST(Acceptance, C08_OodTrend) {
  const auto start = Clock::now();
  const TrendSetup& s = trend_setup();
  SynthSpec ood_spec = s.base_spec;
  ood_spec.samples_per_class = s.cfg.get_u64("data.synth.test_samples_per_class", 500);
  ood_spec.shift = s.cfg.get_double("data.synth.ood_shift", 0.3);
  ood_spec.seed = mix_seed(s.base_spec.seed, 2);
  const auto ood = featurize(generate_synthetic(ood_spec), s.fc.dim, s.fc.ngram_max);

  RatioImbalance imb{s.minority_class, 0.1};
  const auto train_corpus = apply_ratio_imbalance(s.base_corpus, imb, s.imbalance_seed);
  const auto train = featurize(train_corpus, s.fc.dim, s.fc.ngram_max);
  const auto vanilla = run_plan(plan_from_config(s.cfg, "vanilla"), s.pretrained, train, ood, 2);
  const auto two_stage =
      run_plan(plan_from_config(s.cfg, "two-stage"), s.pretrained, train, ood, 2);
  EXPECT_GE(mean_micro_f1(two_stage.reports), mean_micro_f1(vanilla.reports));
  EXPECT_LT(seconds_since(start), 60.0);
}

namespace {

int run_cli_cmd(const std::string& args) {
  const std::string cmd = "\"" + cli_path() + "\" " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// Small CLI pipeline shared by C09/C10; rebuilt only when absent (ctest runs
// each criterion in its own process).
std::filesystem::path determinism_base() {
  return std::filesystem::temp_directory_path() / "imbf_determinism";
}

void ensure_determinism_artifacts(bool force = false) {
  const auto base = determinism_base();
  if (force) std::filesystem::remove_all(base);
  if (std::filesystem::exists(base / "run1" / "reports.csv")) return;
  std::filesystem::create_directories(base);
  const auto cfg_path = base / "small.cfg";
  {
    std::ofstream cfg(cfg_path);
    cfg << "data.source = synth\n"
           "data.synth.classes = 2\n"
           "data.synth.vocab = 200\n"
           "data.synth.doc_length = 12\n"
           "data.synth.samples_per_class = 120\n"
           "data.synth.test_samples_per_class = 60\n"
           "data.synth.separation = 0.9\n"
           "data.synth.seed = 5\n"
           "imbalance.variant = ratio\n"
           "imbalance.ratio = 0.3\n"
           "imbalance.minority_class = 1\n"
           "imbalance.seed = 6\n"
           "features.dim = 64\n"
           "features.ngram_max = 2\n"
           "model.backbone = 16\n"
           "model.final_dim = 8\n"
           "pretrain.classes = 2\n"
           "pretrain.samples_per_class = 100\n"
           "pretrain.vocab = 200\n"
           "pretrain.doc_length = 12\n"
           "pretrain.seed = 9\n"
           "pretrain.epochs = 1\n"
           "plan.seeds = 1,2,3\n"
           "train.epochs = 1\n"
           "train.lr = 0.005\n"
           "stage1.epochs = 1\n"
           "stage1.lr = 0.005\n";
    cfg << "plan.pretrained = " << (base / "pre" / "pretrained.ckpt").string() << "\n";
  }
  ASSERT_EQ(run_cli_cmd("--config " + cfg_path.string() + " --out " + (base / "pre").string() +
                        " pretrain"),
            0);
  ASSERT_EQ(run_cli_cmd("--config " + cfg_path.string() + " --out " + (base / "run1").string() +
                        " train --strategy two-stage"),
            0);
}

}  // namespace

// Criterion 9: byte-identical report CSVs on rerun with identical config and
// seeds, via the real CLI.
TEST(Acceptance, C09_Determinism) {
  ASSERT_FALSE(cli_path().empty()) << "IMBF_CLI not set";
  ensure_determinism_artifacts(true);
  const auto base = determinism_base();
  const auto cfg_path = base / "small.cfg";
  ASSERT_EQ(run_cli_cmd("--config " + cfg_path.string() + " --out " + (base / "run2").string() +
                        " train --strategy two-stage"),
            0);
  EXPECT_EQ(read_file(base / "run1" / "reports.csv"), read_file(base / "run2" / "reports.csv"));
  EXPECT_FALSE(read_file(base / "run1" / "reports.csv").empty());
  EXPECT_EQ(read_file(base / "run1" / "aggregate.csv"), read_file(base / "run2" / "aggregate.csv"));

  // gen is deterministic too.
  ASSERT_EQ(run_cli_cmd("--config " + cfg_path.string() + " --out " + (base / "gen1").string() +
                        " gen"),
            0);
  ASSERT_EQ(run_cli_cmd("--config " + cfg_path.string() + " --out " + (base / "gen2").string() +
                        " gen"),
            0);
  EXPECT_EQ(read_file(base / "gen1" / "train.tsv"), read_file(base / "gen2" / "train.tsv"));
}

// Criterion 10: Table-1-format reproduction via the report command.
TEST(Acceptance, C10_TableFormat) {
  ASSERT_FALSE(cli_path().empty()) << "IMBF_CLI not set";
  ensure_determinism_artifacts();
  const auto base = determinism_base();
  const auto cfg_path = base / "small.cfg";
  auto run = [&](const std::string& args) { return run_cli_cmd(args); };
  ASSERT_EQ(run("--config " + cfg_path.string() + " --out " + (base / "runv").string() +
                " train --strategy vanilla"),
            0);
  ASSERT_EQ(run("--out " + (base / "rep").string() + " report " + (base / "runv").string() + " " +
                (base / "run1").string()),
            0);
  const std::string table = read_file(base / "rep" / "table1.csv");
  ASSERT_FALSE(table.empty());
  std::istringstream lines(table);
  std::string header, vanilla_row, two_stage_row;
  std::getline(lines, header);
  std::getline(lines, vanilla_row);
  std::getline(lines, two_stage_row);
  EXPECT_EQ(header,
            "strategy,micro_f1,micro_f1_improvement,"
            "f1_c0,f1_c0_improvement,f1_c1,f1_c1_improvement");
  EXPECT_EQ(vanilla_row.rfind("vanilla,", 0), 0u);
  EXPECT_EQ(two_stage_row.rfind("two-stage,", 0), 0u);

  // Improvement column equals the difference of per-strategy means.
  const auto vanilla_reports = read_reports_csv(base / "runv" / "reports.csv");
  const auto two_stage_reports = read_reports_csv(base / "run1" / "reports.csv");
  auto mean_micro = [](const std::vector<RunReport>& rs) {
    double s = 0.0;
    for (const auto& r : rs) s += r.micro_f1;
    return s / static_cast<double>(rs.size());
  };
  std::istringstream row(two_stage_row);
  std::string cell;
  std::getline(row, cell, ',');  // strategy
  std::getline(row, cell, ',');  // micro_f1
  const double reported_micro = std::stod(cell);
  std::getline(row, cell, ',');  // improvement
  const double reported_improvement = std::stod(cell);
  EXPECT_NEAR(reported_improvement, mean_micro(two_stage_reports) - mean_micro(vanilla_reports),
              2e-5);
  EXPECT_NEAR(reported_micro, mean_micro(two_stage_reports), 2e-5);
}
