#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "prokd/corpus/corpus.hpp"
#include "prokd/corpus/label_scheme.hpp"
#include "prokd/model/ner_model.hpp"

namespace prokd::eval {

using Labels = std::vector<std::vector<int>>;

struct TagStats {
  std::size_t tp = 0, fp = 0, fn = 0;
  std::size_t support = 0;  // gold count
  double precision = 0.0, recall = 0.0, f1 = 0.0;
};

// Accuracy of predictions on one surface form.
struct ShiftTokenRow {
  std::string surface;
  std::size_t occurrences = 0;
  std::size_t correct = 0;
  double accuracy = 0.0;
  std::string gold_majority;
};

struct MetricsReport {
  std::string mode = "token";  // "token" or "span"
  std::vector<std::string> tags;
  TagStats overall;
  std::map<std::string, TagStats> per_tag;  // non-O tags (token mode) or entity types (span mode)
  std::size_t gold_entities = 0;
  std::size_t predicted_entities = 0;
  std::vector<std::vector<std::size_t>> confusion;  // [gold][predicted]
  std::vector<ShiftTokenRow> shift_tokens;

  nlohmann::json to_json() const;
  static MetricsReport from_json(const nlohmann::json& j);
};

// P/R/F1 from counts; F1 = 0 when P + R = 0.
void finish(TagStats& s);

// Micro-averaged token-level scores over non-O tags, per-tag breakdown,
// entity counts (B- tags) and the full confusion matrix.
MetricsReport token_f1(std::span<const int> predicted, std::span<const int> gold, const corpus::LabelScheme& scheme);
MetricsReport token_f1(const Labels& predicted, const Labels& gold, const corpus::LabelScheme& scheme);

// Exact-match entity spans (diagnostic only).
MetricsReport span_f1(const Labels& predicted, const Labels& gold, const corpus::LabelScheme& scheme);

// Empirical tag distribution of one surface form under the given tags.
std::map<std::string, double> label_preference(const corpus::Corpus& corpus, const Labels& tags,
                                               const std::string& surface, const corpus::LabelScheme& scheme);
std::map<std::string, double> label_preference(const corpus::Corpus& labeled, const std::string& surface,
                                               const corpus::LabelScheme& scheme);

// Per-surface accuracy of `predicted` against `gold` over every occurrence.
std::vector<ShiftTokenRow> shift_token_accuracy(const corpus::Corpus& corpus, const Labels& predicted,
                                                const Labels& gold, std::span<const std::string> surfaces,
                                                const corpus::LabelScheme& scheme);

// Argmax tags of a model on every sentence (dropout off).
Labels predict(model::NerModel& model, const corpus::Corpus& corpus);
// Labels stored in a labeled corpus.
Labels gold_labels(const corpus::Corpus& labeled);

// Seeds of one configuration.
struct RunGroup {
  std::string name;
  std::vector<MetricsReport> seeds;
};

struct Comparison {
  std::vector<std::string> groups;
  std::vector<std::string> metrics;           // row names
  std::vector<std::vector<double>> medians;   // [metric][group]
  std::vector<std::vector<double>> deltas;    // [metric][group], against group 0

  nlohmann::json to_json() const;
  std::string to_text() const;
};

// Seed-wise medians of overall P/R/F1, per-tag F1 and shift-token accuracy,
// with deltas against the first group. Needs at least two reports in total.
Comparison compare_runs(std::span<const RunGroup> groups);

double median(std::vector<double> v);

}  // namespace prokd::eval
