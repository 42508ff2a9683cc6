#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "imbf/error.hpp"
#include "imbf/hash.hpp"
#include "imbf/rng.hpp"

namespace imbf {

struct Sample {
  int label = 0;
  std::vector<uint64_t> tokens;
};

// Ordered collection of (label, token-sequence) samples plus a class catalog.
// Class indices are contiguous in [0, num_classes); class_names maps them back
// to the original label strings.
struct LabeledCorpus {
  std::vector<Sample> samples;
  int num_classes = 0;
  std::vector<std::string> class_names;

  size_t size() const { return samples.size(); }
};

using ClassHistogram = std::vector<uint64_t>;

inline ClassHistogram class_histogram(const LabeledCorpus& corpus) {
  ClassHistogram counts(static_cast<size_t>(corpus.num_classes), 0);
  for (const auto& s : corpus.samples) counts[static_cast<size_t>(s.label)]++;
  return counts;
}

namespace detail {

inline std::string to_lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

// Token identity is a pure function of the token string, so the same word
// maps to the same id in every file (train and test corpora are loaded
// independently). Tokens in the exported synthetic form t<id> parse back to
// their original id; anything else is FNV-1a hashed.
inline std::vector<uint64_t> tokenize(const std::string& text, size_t max_tokens) {
  std::vector<uint64_t> ids;
  std::istringstream in(text);
  std::string tok;
  while (ids.size() < max_tokens && in >> tok) {
    const std::string lower = to_lower(tok);
    uint64_t id = 0;
    bool synth_form = lower.size() > 1 && lower.size() <= 20 && lower[0] == 't';
    for (size_t i = 1; synth_form && i < lower.size(); ++i) {
      if (lower[i] < '0' || lower[i] > '9') {
        synth_form = false;
      } else {
        id = id * 10 + static_cast<uint64_t>(lower[i] - '0');
      }
    }
    ids.push_back(synth_form ? id : fnv1a64(lower));
  }
  return ids;
}

}  // namespace detail

// Parses `label<TAB>text` lines. Labels become contiguous class indices in
// first-appearance order; text is lowercased, whitespace-tokenized and
// truncated to max_tokens.
inline LabeledCorpus load_corpus(const std::filesystem::path& path, size_t max_tokens) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw data_error(ErrorCode::MissingFile, "cannot open corpus file: " + path.string());
  }
  LabeledCorpus corpus;
  std::unordered_map<std::string, int> label_ids;
  std::string line;
  size_t line_no = 0;
  size_t parsed = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const size_t tab = line.find('\t');
    if (tab == std::string::npos) {
      throw data_error(ErrorCode::MalformedLine,
                       path.string() + ": line " + std::to_string(line_no) + ": missing TAB");
    }
    const std::string label = line.substr(0, tab);
    auto [it, inserted] = label_ids.emplace(label, corpus.num_classes);
    if (inserted) {
      corpus.num_classes++;
      corpus.class_names.push_back(label);
    }
    Sample s;
    s.label = it->second;
    s.tokens = detail::tokenize(line.substr(tab + 1), max_tokens);
    corpus.samples.push_back(std::move(s));
    ++parsed;
  }
  if (parsed == 0) {
    throw data_error(ErrorCode::EmptyFile, "corpus file has no samples: " + path.string());
  }
  return corpus;
}

// One sample per line, `label<TAB>text`, LF endings, token-ids rendered t<id>.
inline void save_corpus(const LabeledCorpus& corpus, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw data_error(ErrorCode::IoFailure, "cannot write corpus file: " + path.string());
  for (const auto& s : corpus.samples) {
    out << corpus.class_names[static_cast<size_t>(s.label)] << '\t';
    for (size_t i = 0; i < s.tokens.size(); ++i) {
      if (i) out << ' ';
      out << 't' << s.tokens[i];
    }
    out << '\n';
  }
  if (!out) throw data_error(ErrorCode::IoFailure, "write failed: " + path.string());
}

inline void write_histogram_csv(const LabeledCorpus& corpus, std::ostream& out) {
  const auto counts = class_histogram(corpus);
  out << "class,name,count\n";
  for (size_t c = 0; c < counts.size(); ++c) {
    out << c << ',' << corpus.class_names[c] << ',' << counts[c] << '\n';
  }
}

// Stratified split: per class, floor(train_fraction * n_c) samples go to the
// train half (seeded choice), the remainder to test. Original sample order is
// preserved in both halves.
inline std::pair<LabeledCorpus, LabeledCorpus> split(const LabeledCorpus& corpus,
                                                     double train_fraction, uint64_t seed) {
  if (corpus.samples.empty()) {
    throw data_error(ErrorCode::EmptyFile, "split: corpus is empty");
  }
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw config_error(ErrorCode::BadConfig, "split: train_fraction must be in (0,1)");
  }
  std::vector<std::vector<size_t>> by_class(static_cast<size_t>(corpus.num_classes));
  for (size_t i = 0; i < corpus.samples.size(); ++i) {
    by_class[static_cast<size_t>(corpus.samples[i].label)].push_back(i);
  }
  std::vector<char> in_train(corpus.samples.size(), 0);
  for (size_t c = 0; c < by_class.size(); ++c) {
    const auto& idx = by_class[c];
    const size_t take = static_cast<size_t>(train_fraction * static_cast<double>(idx.size()));
    SplitMix64 rng(mix_seed(seed, c));
    for (size_t pos : sample_indices(idx.size(), take, rng)) in_train[idx[pos]] = 1;
  }
  LabeledCorpus train, test;
  train.num_classes = test.num_classes = corpus.num_classes;
  train.class_names = test.class_names = corpus.class_names;
  for (size_t i = 0; i < corpus.samples.size(); ++i) {
    (in_train[i] ? train : test).samples.push_back(corpus.samples[i]);
  }
  return {std::move(train), std::move(test)};
}

// Remaps a corpus's class indices to match a reference class-name order
// (used to align an independently loaded test file with the training corpus).
inline LabeledCorpus align_classes(const LabeledCorpus& corpus,
                                   const std::vector<std::string>& reference_names) {
  std::unordered_map<std::string, int> ref;
  for (size_t i = 0; i < reference_names.size(); ++i) {
    ref.emplace(reference_names[i], static_cast<int>(i));
  }
  LabeledCorpus out;
  out.num_classes = static_cast<int>(reference_names.size());
  out.class_names = reference_names;
  out.samples.reserve(corpus.samples.size());
  for (const auto& s : corpus.samples) {
    const auto& name = corpus.class_names[static_cast<size_t>(s.label)];
    auto it = ref.find(name);
    if (it == ref.end()) {
      throw data_error(ErrorCode::UnknownClass, "class not present in training data: " + name);
    }
    out.samples.push_back({it->second, s.tokens});
  }
  return out;
}

}  // namespace imbf
