#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "loss_cases.hpp"
#include "prokd/corpus/conll.hpp"
#include "prokd/corpus/synthetic.hpp"
#include "prokd/diffcore/graph.hpp"
#include "prokd/evaluation/metrics.hpp"
#include "prokd/losses/losses.hpp"
#include "prokd/prototypes/prototype_set.hpp"
#include "prokd/training/config.hpp"
#include "prokd/training/pipeline.hpp"

using namespace prokd;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

// Collects named sub-checks of one criterion.
struct Checks {
  std::vector<std::string> failures;
  std::size_t count = 0;
  void expect(bool ok, const std::string& what) {
    ++count;
    if (!ok) failures.push_back(what);
  }
};

struct Outcome {
  bool pass;
  std::string detail;
};

Outcome from(const Checks& c, const std::string& summary) {
  if (c.failures.empty()) return {true, summary};
  std::string d = std::to_string(c.failures.size()) + "/" + std::to_string(c.count) + " failed: " + c.failures[0];
  for (std::size_t i = 1; i < c.failures.size() && i < 4; ++i) d += "; " + c.failures[i];
  return {false, d};
}

std::string fmt(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

double scalar(const std::function<diff::Var(diff::Graph&)>& f) {
  diff::Graph g;
  return f(g).value().item();
}

// 1. Gradient soundness.
Outcome gradients() {
  const auto t0 = Clock::now();
  double worst = 0.0;
  std::string worst_name;
  std::size_t checked = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed)
    for (const auto& c : testing::loss_cases(seed)) {
      const auto r = c.check();
      checked += r.entries_checked;
      if (r.max_error > worst) {
        worst = r.max_error;
        worst_name = c.name + " seed " + std::to_string(seed);
      }
    }
  const double secs = seconds_since(t0);
  char err[32];
  std::snprintf(err, sizeof(err), "%.2e", worst);
  const std::string d = "max relative error " + std::string(err) + " (" + worst_name + "), " +
                        std::to_string(checked) + " entries, " + fmt(secs, 1) + " s";
  return {worst < 1e-4 && secs < 60.0, d};
}

// 2. Equation examples.
Outcome examples() {
  Checks c;
  const double e = std::exp(1.0);
  {
    diff::Graph g;
    const auto s = diff::softmax_rows(g.constant(diff::Tensor::matrix({{0, 0}}))).value();
    c.expect(s[0] == 0.5 && s[1] == 0.5, "softmax([0,0])");
    const auto n = diff::l2_normalize_rows(g.constant(diff::Tensor::matrix({{3, 4}}))).value();
    c.expect(std::abs(n[0] - 0.6) < 1e-15 && std::abs(n[1] - 0.8) < 1e-15, "l2([3,4])");
  }
  {
    const std::vector<int> gold{0, 4, 8};
    diff::Tensor onehot = diff::Tensor::matrix(3, 9);
    for (std::size_t i = 0; i < 3; ++i) onehot.at(i, gold[i]) = 1.0;
    c.expect(scalar([&](diff::Graph& g) { return loss::teacher_ce(g.constant(onehot), gold); }) == 0.0,
             "CE perfect prediction");
    const auto uniform = diff::Tensor::matrix(3, 9, 1.0 / 9.0);
    c.expect(std::abs(scalar([&](diff::Graph& g) { return loss::teacher_ce(g.constant(uniform), gold); }) -
                      std::log(9.0)) < 1e-12,
             "CE uniform = ln 9");
    c.expect(std::abs(scalar([&](diff::Graph& g) { return loss::self_train_ce(g.constant(uniform), gold); }) -
                      std::log(9.0)) < 1e-12,
             "self-training CE uniform = ln 9");
  }
  {
    proto::PrototypeSet a("src", 1, 1, 0.5);
    a.update({diff::Tensor::matrix({{0}}), {true}, {1}});
    a.update({diff::Tensor::matrix({{2}}), {true}, {1}});
    c.expect(a.centroid(0)[0] == 1.0, "moving average midpoint");
    proto::PrototypeSet b("src", 1, 1, 0.001);
    b.update({diff::Tensor::matrix({{0}}), {true}, {1}});
    b.update({diff::Tensor::matrix({{1}}), {true}, {1}});
    c.expect(std::abs(b.centroid(0)[0] - 0.001) < 1e-15, "moving average lambda 0.001");
  }
  {
    const auto h = diff::Tensor::matrix({{1, 0}, {0, 1}});
    const std::vector<int> lab{0, 0};
    const auto m = proto::compute_source_prototypes(h, lab, 1);
    c.expect(m.values.at(0, 0) == 0.5 && m.values.at(0, 1) == 0.5, "two-point centroid");
    std::mt19937_64 rng(11);
    const auto hh = testing::random_matrix(rng, 60, 5);
    std::vector<int> labels(60);
    diff::Tensor p = diff::Tensor::matrix(60, 4);
    for (std::size_t i = 0; i < 60; ++i) {
      labels[i] = static_cast<int>(rng() % 4);
      p.at(i, labels[i]) = 1.0;
    }
    const auto hard = proto::compute_source_prototypes(hh, labels, 4), soft = proto::compute_target_prototypes(hh, p);
    double gap = 0;
    for (std::size_t i = 0; i < hard.values.size(); ++i) gap = std::max(gap, std::abs(hard.values[i] - soft.values[i]));
    c.expect(gap < 1e-12 && hard.present == soft.present, "hard-label degeneracy of the weighted centroid");
    const auto u = proto::compute_target_prototypes(diff::Tensor::matrix({{1, 2}, {5, -1}}),
                                                    diff::Tensor::matrix({{0.5, 0.5}, {0.5, 0.5}}));
    c.expect(std::abs(u.values.at(0, 0) - 3) < 1e-12 && std::abs(u.values.at(1, 1) - 0.5) < 1e-12,
             "uniform weights give the global mean");
  }
  {
    proto::PrototypeSet s("x", 2, 2, 0.5);
    s.update({diff::Tensor::matrix({{0, 0}, {1, 0}}), {true, true}, {1, 1}});
    const std::vector<double> h{0, 0};
    const auto rho = proto::prototype_probability(h, s, 1.0);
    c.expect(std::abs(rho[0] - 0.7311) < 1e-4 && std::abs(rho[1] - 0.2689) < 1e-4, "prototype probability 0.7311");
    c.expect(std::abs(rho[0] - 1.0 / (1.0 + std::exp(-1.0))) < 1e-12, "prototype probability closed form");
  }
  {
    const auto z = diff::Tensor::matrix({{1, 0}, {0, 1}});
    const std::vector<std::size_t> labels{0, 1};
    loss::FusionConfig f;
    f.tau1 = 1.0;
    f.negatives = loss::NegativeMode::within_language;
    const double v = scalar([&](diff::Graph& g) { return loss::class_alignment(g.constant(z), g.constant(z), labels, f); });
    c.expect(std::abs(v / 2.0 + std::log(e / (e + 2.0))) < 1e-12 && std::abs(v / 2.0 - 0.5514) < 1e-4,
             "class alignment per-class term 0.5514");
  }
  {
    const auto p = diff::Tensor::matrix({{1, 0}}), q = diff::Tensor::matrix({{0, 1}});
    c.expect(scalar([&](diff::Graph& g) { return loss::kd_mse(g.constant(p), g.constant(q)); }) == 2.0, "KD MSE = 2");
    c.expect(scalar([&](diff::Graph& g) { return loss::kd_mse(g.constant(p), g.constant(p)); }) == 0.0, "KD MSE = 0");
  }
  {
    const std::vector<double> rho{0.9, 0.1}, p{0.5, 0.5};
    const auto eta = loss::hybrid_label(rho, p, 0.7);
    c.expect(std::abs(eta[0] - 0.78) < 1e-12 && std::abs(eta[1] - 0.22) < 1e-12, "hybrid label [0.78, 0.22]");
    c.expect(loss::hybrid_label(rho, p, 1.0) == rho && loss::hybrid_label(rho, p, 0.0) == p, "hybrid endpoints");
    c.expect(loss::hard_label(std::vector<double>{0.2, 0.5, 0.3}) == 1, "hard label argmax");
    c.expect(loss::hard_label(std::vector<double>{0.5, 0.5}) == 0, "hard label tie");
  }
  {
    c.expect(loss::alpha_schedule(0, 10) == 1.0, "alpha(0) = 1");
    c.expect(loss::alpha_schedule(10, 10) == 0.0, "alpha(E) = 0");
    c.expect(loss::alpha_schedule(5, 10) == 0.75, "alpha(5, 10) = 0.75");
    auto one = [](double v) { return [v](diff::Graph& g) { return g.constant(diff::Tensor::scalar(v)); }; };
    c.expect(scalar([&](diff::Graph& g) { return loss::teacher_total(one(1.0)(g), one(0.5)(g)); }) == 1.5,
             "teacher total 1.5");
    c.expect(std::abs(scalar([&](diff::Graph& g) { return loss::student_total(one(2.0)(g), one(0.4)(g), 0.5); }) -
                      1.2) < 1e-15,
             "student total 1.2");
  }
  return from(c, std::to_string(c.count) + " examples");
}

// 3. Property sweeps, 1000 random inputs each.
Outcome properties() {
  Checks c;
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::size_t bad_alpha = 0, bad_eta = 0, bad_rho = 0, bad_argmax = 0;
  for (int t = 0; t < 1000; ++t) {
    const std::size_t emax = 1 + rng() % 100;
    bool ok = loss::alpha_schedule(0, emax) == 1.0 && loss::alpha_schedule(emax, emax) == 0.0;
    for (std::size_t e = 0; e < emax; ++e) ok = ok && loss::alpha_schedule(e + 1, emax) < loss::alpha_schedule(e, emax);
    bad_alpha += !ok;
  }
  for (int t = 0; t < 1000; ++t) {
    const std::size_t k = 2 + rng() % 9;
    const auto eta = loss::hybrid_label(testing::random_distribution(rng, k), testing::random_distribution(rng, k),
                                        unit(rng));
    double s = 0;
    bool nonneg = true;
    for (double v : eta) s += v, nonneg = nonneg && v >= 0;
    bad_eta += !(nonneg && std::abs(s - 1.0) <= 1e-12);
  }
  for (int t = 0; t < 1000; ++t) {
    const std::size_t k = 2 + rng() % 8, d = 1 + rng() % 6;
    proto::PrototypeSet s("x", k, d, 0.5);
    s.update({testing::random_matrix(rng, k, d, -3, 3), std::vector<bool>(k, true), std::vector<double>(k, 1.0)});
    const auto h = testing::random_matrix(rng, 1, d, -3, 3);
    const auto rho = proto::prototype_probability(h.row(0), s, 0.1 + unit(rng));
    std::vector<double> dist(k);
    for (std::size_t a = 0; a < k; ++a) {
      double d2 = 0;
      for (std::size_t j = 0; j < d; ++j) d2 += std::pow(h.at(0, j) - s.centroids().at(a, j), 2);
      dist[a] = std::sqrt(d2);
    }
    bool ok = true;
    for (std::size_t a = 0; a < k; ++a)
      for (std::size_t b = 0; b < k; ++b)
        if (dist[a] < dist[b]) ok = ok && rho[a] > rho[b];
    bad_rho += !ok;
  }
  for (int t = 0; t < 1000; ++t) {
    const std::size_t k = 2 + rng() % 9;
    auto eta = testing::random_distribution(rng, k);
    const int before = loss::hard_label(eta);
    const double scale = std::exp(14.0 * unit(rng) - 7.0);
    for (auto& v : eta) v *= scale;
    bad_argmax += loss::hard_label(eta) != before;
  }
  c.expect(bad_alpha == 0, "alpha monotone/endpoints (" + std::to_string(bad_alpha) + " bad)");
  c.expect(bad_eta == 0, "eta distribution (" + std::to_string(bad_eta) + " bad)");
  c.expect(bad_rho == 0, "rho monotone (" + std::to_string(bad_rho) + " bad)");
  c.expect(bad_argmax == 0, "argmax scale invariance (" + std::to_string(bad_argmax) + " bad)");
  return from(c, "4 sweeps x 1000 inputs, no violations");
}

struct Experiment {
  std::vector<train::AblationSeedResult> seeds;
  double seconds = 0;
};

double pooled_shift_accuracy(const eval::MetricsReport& r) {
  std::size_t occ = 0, correct = 0;
  for (const auto& s : r.shift_tokens) occ += s.occurrences, correct += s.correct;
  return occ ? static_cast<double>(correct) / static_cast<double>(occ) : 0.0;
}

template <class F>
double median_over(const Experiment& x, F f) {
  std::vector<double> v;
  for (const auto& s : x.seeds) v.push_back(f(s));
  return eval::median(v);
}

// 4. Teacher ablation direction.
Outcome teacher_direction(const Experiment& x) {
  const double with = median_over(x, [](const auto& s) { return s.teacher.overall.f1; });
  const double without = median_over(x, [](const auto& s) { return s.teacher_no_ca.overall.f1; });
  return {with - without > 0 && x.seconds < 600.0,
          "median target F1 " + fmt(with) + " vs w/o CA " + fmt(without) + ", margin " + fmt(with - without) +
              ", experiment " + fmt(x.seconds, 0) + " s"};
}

// 5. Self-training direction on shift tokens.
Outcome shift_direction(const Experiment& x) {
  const double prokd = median_over(x, [](const auto& s) { return pooled_shift_accuracy(s.students.at("ProKD")); });
  const double teacher = median_over(x, [](const auto& s) { return pooled_shift_accuracy(s.teacher); });
  const double no_st = median_over(x, [](const auto& s) { return pooled_shift_accuracy(s.students.at("w/o ST")); });
  bool has_rows = true;
  for (const auto& s : x.seeds) has_rows = has_rows && !s.students.at("ProKD").shift_tokens.empty();
  return {has_rows && prokd > teacher && prokd > no_st,
          "median shift accuracy ProKD " + fmt(prokd) + ", snapshot teacher " + fmt(teacher) + ", w/o ST " +
              fmt(no_st)};
}

// 6. Ablation ordering.
Outcome ablation_order(const Experiment& x) {
  auto med = [&](const std::string& v) {
    return median_over(x, [&](const auto& s) { return s.students.at(v).overall.f1; });
  };
  const double p = med("ProKD");
  std::string d = "median target F1 ProKD " + fmt(p);
  bool ok = true;
  for (const std::string v : {"w/o CA", "w/o ST", "w/o PK", "w/o CL"}) {
    const double m = med(v);
    const bool ties = v == "w/o PK" || v == "w/o CL";
    const bool pass = ties ? p >= m : p > m;
    ok = ok && pass;
    d += ", " + v + " " + fmt(m) + (pass ? "" : " (violated)");
  }
  return {ok, d};
}

// 7 and 9. Two complete runs; gold access log checked after training.
Outcome determinism(const train::RunConfig& cfg, bool& gold_untouched, std::string& gold_detail) {
  std::string json[2];
  gold_untouched = true;
  std::size_t log_entries = 0;
  for (int run = 0; run < 2; ++run) {
    auto data = train::load_dataset(cfg);
    auto r = train::run_pipeline(data.inputs, cfg);
    log_entries += data.gold.access_log().size();
    gold_untouched = gold_untouched && data.gold.access_log().empty();
    nlohmann::json j;
    j["teacher"] = train::evaluate_target(r.teacher.model, data).to_json();
    j["student"] = train::evaluate_target(r.student.model, data).to_json();
    j["teacher_report"] = r.teacher.report.to_json(false);
    j["student_report"] = r.student.report.to_json(false);
    json[run] = j.dump(2);
  }
  gold_detail = "gold-store entries during training: " + std::to_string(log_entries);
  return {json[0] == json[1], "metric JSON " + std::string(json[0] == json[1] ? "identical" : "differs") + " (" +
                                  std::to_string(json[0].size()) + " bytes)"};
}

// 8. Parser conformance.
Outcome parser() {
  Checks c;
  const corpus::LabelScheme scheme;
  corpus::SyntheticSpec spec;
  spec.source_train = 1000;
  spec.shift_table = {{"zeta", *scheme.index("I-ORG"), 0.67, *scheme.index("B-LOC"), 0.6}};
  const auto g = corpus::generate_synthetic(spec, scheme);
  std::ostringstream out;
  corpus::write_conll(out, g.source_train, scheme);
  std::istringstream in(out.str());
  corpus::ConllOptions opt;
  opt.split = g.source_train.split;
  const auto back = corpus::parse_conll(in, scheme, opt);
  c.expect(g.source_train.size() == 1000, "corpus size");
  c.expect(back == g.source_train, "round trip equality");
  std::ostringstream again;
  corpus::write_conll(again, back, scheme);
  c.expect(again.str() == out.str(), "round trip bytes");

  const std::string crafted =
      "Anna B-PER\nlives O\nin O\nOslo I-LOC\n\n"  // line 4
      "Acme B-ORG\nCorp I-LOC\n\n"                 // line 7
      "x O\ny I-MISC\nz I-MISC\n\n"                // line 10
      "I-PER I-PER\n\n"                            // line 13
      "w B-ZZZ\n";                                 // line 15
  std::vector<std::size_t> lines;
  try {
    std::istringstream bad(crafted);
    corpus::parse_conll(bad, scheme, {});
  } catch (const corpus::ConllError& e) {
    for (const auto& i : e.issues()) lines.push_back(i.line);
  }
  std::sort(lines.begin(), lines.end());
  c.expect(lines == std::vector<std::size_t>{4, 7, 10, 13, 15}, "violation line numbers");
  return from(c, "1000-sentence round trip exact; violations at lines 4, 7, 10, 13, 15");
}

}  // namespace

int main() {
  train::RunConfig desk = train::load_config(PROKD_DESK_CONFIG);
  int failures = 0;
  auto report = [&](int n, const Outcome& o) {
    std::cout << "criterion " << n << ": " << (o.pass ? "PASS" : "FAIL") << "  " << o.detail << std::endl;
    failures += !o.pass;
  };

  report(1, gradients());
  report(2, examples());
  report(3, properties());

  Experiment x;
  const auto t0 = Clock::now();
  for (std::uint64_t seed : {1, 2, 3, 4, 5}) x.seeds.push_back(train::run_ablation_seed(desk, seed));
  x.seconds = seconds_since(t0);
  report(4, teacher_direction(x));
  report(5, shift_direction(x));
  report(6, ablation_order(x));

  bool gold_untouched = false;
  std::string gold_detail;
  report(7, determinism(train::seeded(desk, 1), gold_untouched, gold_detail));
  report(8, parser());
  report(9, {gold_untouched, gold_detail});

  std::cout << (failures ? std::to_string(failures) + " criteria failed" : std::string("all criteria passed"))
            << std::endl;
  return failures ? 1 : 0;
}
