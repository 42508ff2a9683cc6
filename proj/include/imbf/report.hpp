#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "imbf/error.hpp"
#include "imbf/manifest.hpp"
#include "imbf/metrics.hpp"

namespace imbf {

// One run directory: a strategy's multi-seed reports plus the manifest
// context the comparison tables need.
struct RunDirData {
  std::filesystem::path dir;
  std::string strategy;
  std::vector<RunReport> reports;
  std::optional<double> imbalance_ratio;
  std::vector<std::string> class_names;
  std::vector<uint64_t> train_histogram;
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(line);
  while (std::getline(in, item, ',')) out.push_back(item);
  return out;
}

}  // namespace detail

// Parses the two-block reports.csv written by write_reports_csv.
inline std::vector<RunReport> read_reports_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw data_error(ErrorCode::MissingFile, "cannot open reports: " + path.string());
  std::string line;
  bool in_summary = false;
  // (strategy, seed) in first-appearance order
  std::vector<std::pair<std::string, uint64_t>> order;
  std::map<std::pair<std::string, uint64_t>, RunReport> by_run;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line == "strategy,seed,class,precision,recall,f1") {
      in_summary = false;
      continue;
    }
    if (line == "strategy,seed,micro_f1,macro_f1,top1_error") {
      in_summary = true;
      continue;
    }
    const auto fields = detail::split_csv_line(line);
    if (fields.size() != (in_summary ? 5u : 6u)) {
      throw data_error(ErrorCode::IoFailure, "bad reports row: " + line);
    }
    const std::pair<std::string, uint64_t> key{fields[0], std::stoull(fields[1])};
    auto it = by_run.find(key);
    if (it == by_run.end()) {
      order.push_back(key);
      it = by_run.emplace(key, RunReport{}).first;
      it->second.strategy = key.first;
      it->second.seed = key.second;
    }
    RunReport& r = it->second;
    if (in_summary) {
      r.micro_f1 = std::stod(fields[2]);
      r.macro_f1 = std::stod(fields[3]);
      r.top1_error = std::stod(fields[4]);
    } else {
      const size_t c = std::stoull(fields[2]);
      if (r.per_class.size() <= c) r.per_class.resize(c + 1);
      r.per_class[c] = {std::stod(fields[3]), std::stod(fields[4]), std::stod(fields[5])};
    }
  }
  std::vector<RunReport> out;
  for (const auto& key : order) out.push_back(by_run.at(key));
  if (out.empty()) throw data_error(ErrorCode::EmptyFile, "no reports in " + path.string());
  return out;
}

inline RunDirData read_run_dir(const std::filesystem::path& dir) {
  RunDirData data;
  data.dir = dir;
  data.reports = read_reports_csv(dir / "reports.csv");
  data.strategy = data.reports.front().strategy;
  const auto manifest_path = dir / "manifest.json";
  if (std::filesystem::exists(manifest_path)) {
    const auto j = read_manifest_json(manifest_path);
    const auto& d = j.at("data");
    if (d.contains("imbalance_ratio")) data.imbalance_ratio = d["imbalance_ratio"].get<double>();
    if (d.contains("class_names")) data.class_names = d["class_names"].get<std::vector<std::string>>();
    if (d.contains("train_histogram")) {
      data.train_histogram = d["train_histogram"].get<std::vector<uint64_t>>();
    }
  }
  return data;
}

namespace detail {

inline double mean_micro_f1(const RunDirData& d) {
  double sum = 0.0;
  for (const auto& r : d.reports) sum += r.micro_f1;
  return sum / static_cast<double>(d.reports.size());
}

inline double mean_class_f1(const RunDirData& d, size_t c) {
  double sum = 0.0;
  for (const auto& r : d.reports) sum += r.per_class[c].f1;
  return sum / static_cast<double>(d.reports.size());
}

inline const RunDirData* find_vanilla(const std::vector<RunDirData>& dirs) {
  for (const auto& d : dirs) {
    if (d.strategy == "vanilla") return &d;
  }
  return nullptr;
}

inline std::string class_label(const std::vector<std::string>& names, size_t c) {
  return c < names.size() ? names[c] : "c" + std::to_string(c);
}

}  // namespace detail

// Table-1-style comparison: one row per strategy, micro F1 and per-class F1
// with improvement-over-vanilla columns (the vanilla row's improvement cells
// stay empty).
inline void write_table1_csv(std::ostream& out, const std::vector<RunDirData>& dirs,
                             bool improvements = true) {
  if (dirs.empty()) throw data_error(ErrorCode::EmptyEvaluation, "report: no run dirs");
  const size_t k = dirs.front().reports.front().per_class.size();
  for (const auto& d : dirs) {
    if (d.reports.front().per_class.size() != k) {
      throw data_error(ErrorCode::DimMismatch, "report: class counts differ across run dirs");
    }
  }
  const RunDirData* vanilla = detail::find_vanilla(dirs);
  if (improvements && !vanilla) {
    throw data_error(ErrorCode::MissingBaseline,
                     "report: improvements requested but no vanilla baseline run present");
  }
  const auto& names = dirs.front().class_names;
  out << "strategy,micro_f1,micro_f1_improvement";
  for (size_t c = 0; c < k; ++c) {
    const std::string label = detail::class_label(names, c);
    out << ",f1_" << label << ",f1_" << label << "_improvement";
  }
  out << '\n';
  for (const auto& d : dirs) {
    const bool is_baseline = vanilla && &d == vanilla;
    out << d.strategy << ',' << format_metric(detail::mean_micro_f1(d)) << ',';
    if (improvements && !is_baseline) {
      out << format_metric(detail::mean_micro_f1(d) - detail::mean_micro_f1(*vanilla));
    }
    for (size_t c = 0; c < k; ++c) {
      out << ',' << format_metric(detail::mean_class_f1(d, c)) << ',';
      if (improvements && !is_baseline) {
        out << format_metric(detail::mean_class_f1(d, c) - detail::mean_class_f1(*vanilla, c));
      }
    }
    out << '\n';
  }
}

// Fig-2-style plot data: micro/macro/per-class F1 as a function of the
// imbalance ratio, one row per (ratio, strategy, metric).
inline void write_ratio_curve_csv(std::ostream& out, const std::vector<RunDirData>& dirs) {
  struct Row {
    double ratio;
    std::string strategy;
    std::string metric;
    double mean;
    double std_err;
  };
  std::vector<Row> rows;
  for (const auto& d : dirs) {
    if (!d.imbalance_ratio) {
      throw data_error(ErrorCode::BadConfig,
                       "report: run dir lacks an imbalance ratio: " + d.dir.string());
    }
    const auto agg = aggregate(d.reports);
    for (const auto& m : agg.metrics) {
      if (m.name == "micro_f1" || m.name == "macro_f1" || m.name.rfind("f1_c", 0) == 0) {
        rows.push_back({*d.imbalance_ratio, d.strategy, m.name, m.mean, m.std_err});
      }
    }
  }
  std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
    if (a.ratio != b.ratio) return a.ratio < b.ratio;
    if (a.strategy != b.strategy) return a.strategy < b.strategy;
    return a.metric < b.metric;
  });
  out << "imbalance_ratio,strategy,metric,mean,stderr\n";
  for (const auto& r : rows) {
    out << format_metric(r.ratio) << ',' << r.strategy << ',' << r.metric << ','
        << format_metric(r.mean) << ',' << format_metric(r.std_err) << '\n';
  }
}

// Fig-4/5/6-style per-class bar data, classes sorted by descending training
// frequency; improvement column is per-class F1 mean minus vanilla's.
inline void write_per_class_csv(std::ostream& out, const std::vector<RunDirData>& dirs) {
  if (dirs.empty()) throw data_error(ErrorCode::EmptyEvaluation, "report: no run dirs");
  const size_t k = dirs.front().reports.front().per_class.size();
  const auto& hist = dirs.front().train_histogram;
  const auto& names = dirs.front().class_names;
  const RunDirData* vanilla = detail::find_vanilla(dirs);
  std::vector<size_t> order(k);
  std::iota(order.begin(), order.end(), size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    const uint64_t ca = a < hist.size() ? hist[a] : 0;
    const uint64_t cb = b < hist.size() ? hist[b] : 0;
    if (ca != cb) return ca > cb;
    return a < b;
  });
  out << "class,name,train_count,strategy,f1_mean,f1_stderr,f1_improvement\n";
  for (size_t c : order) {
    for (const auto& d : dirs) {
      const auto agg = aggregate(d.reports);
      double mean = 0.0, std_err = 0.0;
      for (const auto& m : agg.metrics) {
        if (m.name == "f1_c" + std::to_string(c)) {
          mean = m.mean;
          std_err = m.std_err;
        }
      }
      out << c << ',' << detail::class_label(names, c) << ','
          << (c < hist.size() ? hist[c] : 0) << ',' << d.strategy << ',' << format_metric(mean)
          << ',' << format_metric(std_err) << ',';
      if (vanilla && &d != vanilla) {
        out << format_metric(mean - detail::mean_class_f1(*vanilla, c));
      }
      out << '\n';
    }
  }
}

}  // namespace imbf
