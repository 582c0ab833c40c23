#include "prokd/evaluation/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <iomanip>
#include <set>
#include <sstream>
#include <tuple>

#include "prokd/error.hpp"
#include "prokd/losses/losses.hpp"

namespace prokd::eval {

using corpus::LabelScheme;

void finish(TagStats& s) {
  const double pd = static_cast<double>(s.tp + s.fp);
  const double rd = static_cast<double>(s.tp + s.fn);
  s.precision = pd > 0 ? static_cast<double>(s.tp) / pd : 0.0;
  s.recall = rd > 0 ? static_cast<double>(s.tp) / rd : 0.0;
  s.f1 = s.precision + s.recall > 0 ? 2.0 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
}

MetricsReport token_f1(std::span<const int> predicted, std::span<const int> gold, const LabelScheme& scheme) {
  if (predicted.size() != gold.size())
    throw Error("evaluation", "prediction length " + std::to_string(predicted.size()) + " does not match gold " +
                                  std::to_string(gold.size()));
  const std::size_t t = scheme.size();
  MetricsReport r;
  r.tags = scheme.tags();
  r.confusion.assign(t, std::vector<std::size_t>(t, 0));
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const int g = gold[i], p = predicted[i];
    if (g < 0 || p < 0 || static_cast<std::size_t>(g) >= t || static_cast<std::size_t>(p) >= t)
      throw Error("evaluation", "tag index out of range");
    ++r.confusion[g][p];
    if (scheme.is_begin(g)) ++r.gold_entities;
    if (scheme.is_begin(p)) ++r.predicted_entities;
  }
  for (std::size_t k = 1; k < t; ++k) {
    TagStats s;
    for (std::size_t j = 0; j < t; ++j) {
      s.support += r.confusion[k][j];
      if (j == k) s.tp = r.confusion[k][k];
      else {
        s.fn += r.confusion[k][j];
        s.fp += r.confusion[j][k];
      }
    }
    finish(s);
    r.overall.tp += s.tp;
    r.overall.fp += s.fp;
    r.overall.fn += s.fn;
    r.overall.support += s.support;
    r.per_tag[scheme.tag(static_cast<int>(k))] = s;
  }
  finish(r.overall);
  return r;
}

namespace {

std::vector<int> flatten(const Labels& l) {
  std::vector<int> out;
  for (const auto& s : l) out.insert(out.end(), s.begin(), s.end());
  return out;
}

void check_aligned(const Labels& predicted, const Labels& gold) {
  if (predicted.size() != gold.size())
    throw Error("evaluation", "prediction has " + std::to_string(predicted.size()) + " sentences, gold has " +
                                  std::to_string(gold.size()));
  for (std::size_t i = 0; i < gold.size(); ++i)
    if (predicted[i].size() != gold[i].size())
      throw Error("evaluation", "length mismatch in sentence " + std::to_string(i));
}

using Span = std::tuple<std::size_t, std::size_t, std::size_t, std::size_t>;  // sentence, type, start, end

std::set<Span> spans(const Labels& labels, const LabelScheme& scheme) {
  std::set<Span> out;
  for (std::size_t s = 0; s < labels.size(); ++s) {
    const auto& l = labels[s];
    std::size_t i = 0;
    while (i < l.size()) {
      if (l[i] == LabelScheme::outside) {
        ++i;
        continue;
      }
      const std::size_t type = scheme.type_of(l[i]);
      std::size_t j = i + 1;
      while (j < l.size() && scheme.is_inside(l[j]) && scheme.type_of(l[j]) == type) ++j;
      out.emplace(s, type, i, j);
      i = j;
    }
  }
  return out;
}

}  // namespace

MetricsReport token_f1(const Labels& predicted, const Labels& gold, const LabelScheme& scheme) {
  check_aligned(predicted, gold);
  const auto p = flatten(predicted), g = flatten(gold);
  return token_f1(p, g, scheme);
}

MetricsReport span_f1(const Labels& predicted, const Labels& gold, const LabelScheme& scheme) {
  check_aligned(predicted, gold);
  MetricsReport r = token_f1(predicted, gold, scheme);
  r.mode = "span";
  r.per_tag.clear();
  r.overall = {};
  const auto ps = spans(predicted, scheme), gs = spans(gold, scheme);
  r.gold_entities = gs.size();
  r.predicted_entities = ps.size();
  for (std::size_t type = 0; type < scheme.entity_types().size(); ++type) {
    TagStats s;
    for (const auto& sp : gs)
      if (std::get<1>(sp) == type) {
        ++s.support;
        ps.count(sp) ? ++s.tp : ++s.fn;
      }
    for (const auto& sp : ps)
      if (std::get<1>(sp) == type && !gs.count(sp)) ++s.fp;
    finish(s);
    r.overall.tp += s.tp;
    r.overall.fp += s.fp;
    r.overall.fn += s.fn;
    r.overall.support += s.support;
    r.per_tag[scheme.entity_types()[type]] = s;
  }
  finish(r.overall);
  return r;
}

std::map<std::string, double> label_preference(const corpus::Corpus& corpus, const Labels& tags,
                                               const std::string& surface, const LabelScheme& scheme) {
  if (tags.size() != corpus.size()) throw Error("evaluation", "label preference: tag/corpus size mismatch");
  std::map<std::string, double> counts;
  std::size_t total = 0;
  for (std::size_t s = 0; s < corpus.size(); ++s) {
    const auto& toks = corpus.sentences[s].tokens;
    if (tags[s].size() != toks.size()) throw Error("evaluation", "label preference: sentence length mismatch");
    for (std::size_t i = 0; i < toks.size(); ++i)
      if (toks[i] == surface) {
        counts[scheme.tag(tags[s][i])] += 1.0;
        ++total;
      }
  }
  if (total == 0) throw Error("evaluation", "surface '" + surface + "' does not occur in the corpus");
  for (auto& [tag, c] : counts) c /= static_cast<double>(total);
  return counts;
}

std::map<std::string, double> label_preference(const corpus::Corpus& labeled, const std::string& surface,
                                               const LabelScheme& scheme) {
  return label_preference(labeled, gold_labels(labeled), surface, scheme);
}

std::vector<ShiftTokenRow> shift_token_accuracy(const corpus::Corpus& corpus, const Labels& predicted,
                                                const Labels& gold, std::span<const std::string> surfaces,
                                                const LabelScheme& scheme) {
  check_aligned(predicted, gold);
  std::vector<ShiftTokenRow> rows;
  for (const auto& surface : surfaces) {
    ShiftTokenRow row;
    row.surface = surface;
    std::vector<std::size_t> gold_counts(scheme.size(), 0);
    for (std::size_t s = 0; s < corpus.size(); ++s) {
      const auto& toks = corpus.sentences[s].tokens;
      for (std::size_t i = 0; i < toks.size(); ++i) {
        if (toks[i] != surface) continue;
        ++row.occurrences;
        ++gold_counts[gold[s][i]];
        if (predicted[s][i] == gold[s][i]) ++row.correct;
      }
    }
    if (row.occurrences > 0) {
      row.accuracy = static_cast<double>(row.correct) / static_cast<double>(row.occurrences);
      const auto best = std::max_element(gold_counts.begin(), gold_counts.end()) - gold_counts.begin();
      row.gold_majority = scheme.tag(static_cast<int>(best));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

Labels predict(model::NerModel& model, const corpus::Corpus& corpus) {
  Labels out;
  out.reserve(corpus.size());
  for (const auto& s : corpus.sentences) out.push_back(loss::hard_labels(model.probabilities(s)));
  return out;
}

Labels gold_labels(const corpus::Corpus& labeled) {
  Labels out;
  out.reserve(labeled.size());
  for (const auto& s : labeled.sentences) {
    if (!s.labeled()) throw Error("evaluation", "corpus has unlabeled sentences");
    out.push_back(s.labels);
  }
  return out;
}

namespace {

nlohmann::json stats_json(const TagStats& s) {
  return {{"tp", s.tp}, {"fp", s.fp}, {"fn", s.fn}, {"support", s.support},
          {"precision", s.precision}, {"recall", s.recall}, {"f1", s.f1}};
}

TagStats stats_from(const nlohmann::json& j) {
  TagStats s;
  s.tp = j.at("tp");
  s.fp = j.at("fp");
  s.fn = j.at("fn");
  s.support = j.at("support");
  s.precision = j.at("precision");
  s.recall = j.at("recall");
  s.f1 = j.at("f1");
  return s;
}

}  // namespace

nlohmann::json MetricsReport::to_json() const {
  nlohmann::json j;
  j["format"] = "prokd-metrics v1";
  j["mode"] = mode;
  j["tags"] = tags;
  j["overall"] = stats_json(overall);
  j["per_tag"] = nlohmann::json::object();
  for (const auto& [tag, s] : per_tag) j["per_tag"][tag] = stats_json(s);
  j["gold_entities"] = gold_entities;
  j["predicted_entities"] = predicted_entities;
  j["confusion"] = confusion;
  j["shift_tokens"] = nlohmann::json::array();
  for (const auto& row : shift_tokens)
    j["shift_tokens"].push_back({{"surface", row.surface},
                                 {"occurrences", row.occurrences},
                                 {"correct", row.correct},
                                 {"accuracy", row.accuracy},
                                 {"gold_majority", row.gold_majority}});
  return j;
}

MetricsReport MetricsReport::from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "prokd-metrics v1") throw Error("evaluation", "not a prokd-metrics v1 document");
  MetricsReport r;
  r.mode = j.at("mode");
  r.tags = j.at("tags").get<std::vector<std::string>>();
  r.overall = stats_from(j.at("overall"));
  for (const auto& [tag, s] : j.at("per_tag").items()) r.per_tag[tag] = stats_from(s);
  r.gold_entities = j.at("gold_entities");
  r.predicted_entities = j.at("predicted_entities");
  r.confusion = j.at("confusion").get<std::vector<std::vector<std::size_t>>>();
  for (const auto& row : j.at("shift_tokens")) {
    ShiftTokenRow s;
    s.surface = row.at("surface");
    s.occurrences = row.at("occurrences");
    s.correct = row.at("correct");
    s.accuracy = row.at("accuracy");
    s.gold_majority = row.at("gold_majority");
    r.shift_tokens.push_back(s);
  }
  return r;
}

double median(std::vector<double> v) {
  if (v.empty()) throw Error("evaluation", "median of an empty list");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

namespace {

// Flat metric map of one report, in a stable order.
std::vector<std::pair<std::string, double>> metric_rows(const MetricsReport& r) {
  std::vector<std::pair<std::string, double>> rows{
      {"precision", r.overall.precision}, {"recall", r.overall.recall}, {"f1", r.overall.f1}};
  for (const auto& tag : r.tags) {
    auto it = r.per_tag.find(tag);
    if (it != r.per_tag.end()) rows.emplace_back("f1:" + tag, it->second.f1);
  }
  std::size_t occ = 0, correct = 0;
  for (const auto& s : r.shift_tokens) {
    rows.emplace_back("shift:" + s.surface, s.accuracy);
    occ += s.occurrences;
    correct += s.correct;
  }
  if (!r.shift_tokens.empty())
    rows.emplace_back("shift_accuracy", occ ? static_cast<double>(correct) / static_cast<double>(occ) : 0.0);
  return rows;
}

}  // namespace

Comparison compare_runs(std::span<const RunGroup> groups) {
  std::size_t reports = 0;
  const MetricsReport* first = nullptr;
  for (const auto& g : groups) {
    if (g.seeds.empty()) throw Error("evaluation", "run group '" + g.name + "' has no reports");
    for (const auto& r : g.seeds) {
      if (!first) first = &r;
      else if (r.tags != first->tags || r.mode != first->mode)
        throw Error("evaluation", "cannot compare reports with different label schemes");
      ++reports;
    }
  }
  if (reports < 2) throw Error("evaluation", "comparison needs at least two reports");

  Comparison c;
  for (const auto& [name, v] : metric_rows(*first)) c.metrics.push_back(name);
  for (const auto& g : groups) c.groups.push_back(g.name);
  c.medians.assign(c.metrics.size(), std::vector<double>(groups.size(), 0.0));
  c.deltas = c.medians;
  for (std::size_t gi = 0; gi < groups.size(); ++gi) {
    std::vector<std::vector<double>> values(c.metrics.size());
    for (const auto& r : groups[gi].seeds) {
      const auto rows = metric_rows(r);
      if (rows.size() != c.metrics.size()) throw Error("evaluation", "reports disagree in shift-token rows");
      for (std::size_t m = 0; m < rows.size(); ++m) values[m].push_back(rows[m].second);
    }
    for (std::size_t m = 0; m < c.metrics.size(); ++m) c.medians[m][gi] = median(values[m]);
  }
  for (std::size_t m = 0; m < c.metrics.size(); ++m)
    for (std::size_t gi = 0; gi < groups.size(); ++gi) c.deltas[m][gi] = c.medians[m][gi] - c.medians[m][0];
  return c;
}

nlohmann::json Comparison::to_json() const {
  nlohmann::json j;
  j["format"] = "prokd-comparison v1";
  j["groups"] = groups;
  j["metrics"] = metrics;
  j["medians"] = medians;
  j["deltas"] = deltas;
  return j;
}

std::string Comparison::to_text() const {
  std::size_t name_w = 6;
  for (const auto& m : metrics) name_w = std::max(name_w, m.size());
  std::size_t col_w = 16;
  for (const auto& g : groups) col_w = std::max(col_w, g.size() + 2);
  std::ostringstream out;
  out << "# prokd-comparison v1 (median over seeds; delta against " << groups.front() << ")\n";
  out << std::left << std::setw(static_cast<int>(name_w)) << "metric";
  for (const auto& g : groups) out << std::right << std::setw(static_cast<int>(col_w)) << g;
  out << '\n';
  char cell[64];
  for (std::size_t m = 0; m < metrics.size(); ++m) {
    out << std::left << std::setw(static_cast<int>(name_w)) << metrics[m];
    for (std::size_t g = 0; g < groups.size(); ++g) {
      if (g == 0) std::snprintf(cell, sizeof(cell), "%.4f", medians[m][g]);
      else std::snprintf(cell, sizeof(cell), "%.4f (%+.4f)", medians[m][g], deltas[m][g]);
      out << std::right << std::setw(static_cast<int>(col_w)) << cell;
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace prokd::eval
