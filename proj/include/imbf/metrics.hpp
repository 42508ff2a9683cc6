#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include "imbf/error.hpp"

namespace imbf {

// K x K gold-by-predicted count matrix.
struct ConfusionMatrix {
  size_t k = 0;
  std::vector<uint64_t> m;  // row-major, m[gold * k + pred]

  ConfusionMatrix() = default;
  explicit ConfusionMatrix(size_t classes) : k(classes), m(classes * classes, 0) {}

  uint64_t& at(size_t gold, size_t pred) { return m[gold * k + pred]; }
  uint64_t at(size_t gold, size_t pred) const { return m[gold * k + pred]; }

  uint64_t total() const {
    uint64_t t = 0;
    for (uint64_t v : m) t += v;
    return t;
  }
  uint64_t trace() const {
    uint64_t t = 0;
    for (size_t i = 0; i < k; ++i) t += at(i, i);
    return t;
  }
};

inline ConfusionMatrix confusion(const std::vector<int>& gold, const std::vector<int>& pred,
                                 size_t k) {
  if (gold.size() != pred.size()) {
    throw runtime_error(ErrorCode::DimMismatch, "confusion: gold/pred length mismatch");
  }
  ConfusionMatrix cm(k);
  for (size_t i = 0; i < gold.size(); ++i) {
    if (gold[i] < 0 || static_cast<size_t>(gold[i]) >= k || pred[i] < 0 ||
        static_cast<size_t>(pred[i]) >= k) {
      throw data_error(ErrorCode::LabelOutOfRange, "confusion: class index out of range");
    }
    cm.at(static_cast<size_t>(gold[i]), static_cast<size_t>(pred[i]))++;
  }
  return cm;
}

struct Prf {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// Zero-division convention: a vanished denominator yields 0.
inline Prf per_class_prf(const ConfusionMatrix& cm, size_t c) {
  uint64_t tp = cm.at(c, c), fp = 0, fn = 0;
  for (size_t i = 0; i < cm.k; ++i) {
    if (i == c) continue;
    fp += cm.at(i, c);
    fn += cm.at(c, i);
  }
  Prf out;
  out.precision = (tp + fp) ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
  out.recall = (tp + fn) ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
  out.f1 = (out.precision + out.recall) > 0.0
               ? 2.0 * out.precision * out.recall / (out.precision + out.recall)
               : 0.0;
  return out;
}

namespace detail {
inline void require_nonempty(const ConfusionMatrix& cm) {
  if (cm.k == 0 || cm.total() == 0) {
    throw data_error(ErrorCode::EmptyEvaluation, "metrics: empty confusion matrix");
  }
}
}  // namespace detail

// Micro F1 from pooled tp/fp/fn. For single-label classification this equals
// trace/total exactly.
inline double micro_f1(const ConfusionMatrix& cm) {
  detail::require_nonempty(cm);
  const uint64_t tp = cm.trace();
  const uint64_t fp = cm.total() - tp;
  const uint64_t fn = cm.total() - tp;
  return static_cast<double>(2 * tp) / static_cast<double>(2 * tp + fp + fn);
}

inline double macro_f1(const ConfusionMatrix& cm) {
  detail::require_nonempty(cm);
  double sum = 0.0;
  for (size_t c = 0; c < cm.k; ++c) sum += per_class_prf(cm, c).f1;
  return sum / static_cast<double>(cm.k);
}

inline double top1_error(const ConfusionMatrix& cm) {
  detail::require_nonempty(cm);
  return 1.0 - static_cast<double>(cm.trace()) / static_cast<double>(cm.total());
}

// Everything the harness records for one (strategy, seed) run.
struct RunReport {
  std::string strategy;
  uint64_t seed = 0;
  ConfusionMatrix confusion;
  std::vector<Prf> per_class;
  double micro_f1 = 0.0;
  double macro_f1 = 0.0;
  double top1_error = 0.0;
};

inline RunReport make_run_report(const std::string& strategy, uint64_t seed,
                                 const ConfusionMatrix& cm) {
  RunReport r;
  r.strategy = strategy;
  r.seed = seed;
  r.confusion = cm;
  for (size_t c = 0; c < cm.k; ++c) r.per_class.push_back(per_class_prf(cm, c));
  r.micro_f1 = micro_f1(cm);
  r.macro_f1 = macro_f1(cm);
  r.top1_error = top1_error(cm);
  return r;
}

// Mean and standard error (sample standard deviation / sqrt(n); 0 for n = 1).
struct MetricStat {
  std::string name;
  double mean = 0.0;
  double std_err = 0.0;
};

struct AggregateReport {
  size_t num_seeds = 0;
  std::vector<MetricStat> metrics;
};

namespace detail {

inline MetricStat stat_of(const std::string& name, const std::vector<double>& values) {
  MetricStat s;
  s.name = name;
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    const double stddev = std::sqrt(ss / static_cast<double>(values.size() - 1));
    s.std_err = stddev / std::sqrt(static_cast<double>(values.size()));
  }
  return s;
}

}  // namespace detail

inline AggregateReport aggregate(const std::vector<RunReport>& reports) {
  if (reports.empty()) {
    throw data_error(ErrorCode::EmptyEvaluation, "aggregate: no reports");
  }
  const size_t k = reports.front().per_class.size();
  for (const auto& r : reports) {
    if (r.per_class.size() != k) {
      throw runtime_error(ErrorCode::DimMismatch, "aggregate: report shapes differ");
    }
  }
  AggregateReport agg;
  agg.num_seeds = reports.size();
  auto collect = [&](const std::string& name, auto getter) {
    std::vector<double> values;
    values.reserve(reports.size());
    for (const auto& r : reports) values.push_back(getter(r));
    agg.metrics.push_back(detail::stat_of(name, values));
  };
  collect("micro_f1", [](const RunReport& r) { return r.micro_f1; });
  collect("macro_f1", [](const RunReport& r) { return r.macro_f1; });
  collect("top1_error", [](const RunReport& r) { return r.top1_error; });
  for (size_t c = 0; c < k; ++c) {
    collect("precision_c" + std::to_string(c),
            [c](const RunReport& r) { return r.per_class[c].precision; });
    collect("recall_c" + std::to_string(c),
            [c](const RunReport& r) { return r.per_class[c].recall; });
    collect("f1_c" + std::to_string(c), [c](const RunReport& r) { return r.per_class[c].f1; });
  }
  return agg;
}

// Metric values are printed with 5 decimal places everywhere.
inline std::string format_metric(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.5f", v);
  return buf;
}

// Per-class block, then a summary block, each with its own header.
inline void write_reports_csv(std::ostream& out, const std::vector<RunReport>& reports) {
  out << "strategy,seed,class,precision,recall,f1\n";
  for (const auto& r : reports) {
    for (size_t c = 0; c < r.per_class.size(); ++c) {
      out << r.strategy << ',' << r.seed << ',' << c << ','
          << format_metric(r.per_class[c].precision) << ',' << format_metric(r.per_class[c].recall)
          << ',' << format_metric(r.per_class[c].f1) << '\n';
    }
  }
  out << "strategy,seed,micro_f1,macro_f1,top1_error\n";
  for (const auto& r : reports) {
    out << r.strategy << ',' << r.seed << ',' << format_metric(r.micro_f1) << ','
        << format_metric(r.macro_f1) << ',' << format_metric(r.top1_error) << '\n';
  }
}

inline void write_aggregate_csv(std::ostream& out, const AggregateReport& agg) {
  out << "metric,mean,stderr\n";
  for (const auto& m : agg.metrics) {
    out << m.name << ',' << format_metric(m.mean) << ',' << format_metric(m.std_err) << '\n';
  }
}

}  // namespace imbf
