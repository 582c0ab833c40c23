#include "prokd/training/pipeline.hpp"

#include <cstdio>
#include <sstream>

#include "prokd/corpus/conll.hpp"
#include "prokd/corpus/synthetic.hpp"
#include "prokd/error.hpp"

namespace prokd::train {

using corpus::Corpus;

namespace {

std::string majority(const std::map<std::string, double>& pref) {
  std::string best;
  double p = -1.0;
  for (const auto& [tag, v] : pref)
    if (v > p) {
      p = v;
      best = tag;
    }
  return best;
}

void fill_source_majority(Dataset& d) {
  for (const auto& s : d.shift_surfaces) {
    bool present = false;
    for (const auto& sent : d.inputs.source_train.sentences)
      for (const auto& t : sent.tokens) present = present || t == s;
    if (present) d.source_majority[s] = majority(eval::label_preference(d.inputs.source_train, s, d.inputs.scheme));
  }
}

}  // namespace

Dataset load_dataset(const RunConfig& cfg) {
  validate(cfg);
  Dataset d;
  d.inputs.scheme = corpus::LabelScheme(cfg.data.entity_types);
  const auto& scheme = d.inputs.scheme;
  Corpus test_gold;
  if (cfg.data.synthetic) {
    auto gen = corpus::generate_synthetic(cfg.synthetic, scheme);
    d.inputs.source_train = std::move(gen.source_train);
    d.inputs.source_dev = std::move(gen.source_dev);
    d.inputs.target_train = std::move(gen.target_train);
    test_gold = std::move(gen.target_test);
    for (const auto& e : cfg.synthetic.shift_table) d.shift_surfaces.push_back(e.surface);
  } else {
    corpus::ConllOptions opt;
    opt.max_length = cfg.max_length;
    opt.split = corpus::Split::train;
    d.inputs.source_train = corpus::read_conll_file(cfg.data.source_train, scheme, opt);
    opt.split = corpus::Split::dev;
    d.inputs.source_dev = corpus::read_conll_file(cfg.data.source_dev, scheme, opt);
    opt.split = corpus::Split::train;
    opt.labeled = false;
    d.inputs.target_train = corpus::read_conll_file(cfg.data.target_train, scheme, opt);
    if (!cfg.data.target_test.empty()) {
      opt.labeled = true;
      opt.split = corpus::Split::test;
      test_gold = corpus::read_conll_file(cfg.data.target_test, scheme, opt);
    }
  }
  d.inputs.vocab = shared_vocabulary(d.inputs.source_train, d.inputs.source_dev, d.inputs.target_train);
  if (test_gold.size() > 0) {
    d.gold.seal(target_test_key, eval::gold_labels(test_gold));
    d.target_test = test_gold.without_labels();
  }
  fill_source_majority(d);
  return d;
}

eval::MetricsReport evaluate_target(model::NerModel& model, Dataset& data, const std::string& accessor) {
  if (!data.gold.contains(target_test_key)) throw Error("evaluation", "no target test set was loaded");
  const auto predicted = eval::predict(model, data.target_test);
  const auto& gold = data.gold.open(target_test_key, accessor);
  auto report = eval::token_f1(predicted, gold, data.inputs.scheme);
  for (auto& row : eval::shift_token_accuracy(data.target_test, predicted, gold, data.shift_surfaces,
                                              data.inputs.scheme)) {
    auto it = data.source_majority.find(row.surface);
    if (row.occurrences > 0 && it != data.source_majority.end() && it->second != row.gold_majority)
      report.shift_tokens.push_back(std::move(row));
  }
  return report;
}

PipelineResult run_pipeline(const TrainingInputs& in, const RunConfig& cfg, std::ostream* log) {
  auto teacher = train_teacher(in.source_train, in.source_dev, in.target_train, in.vocab, in.scheme, cfg, log);
  auto snapshot = snapshot_teacher(teacher.model, in.target_train);
  auto student = distill_student(snapshot, in.target_train, in.vocab, in.scheme, cfg, &in.source_dev, log);
  return {std::move(teacher), std::move(snapshot), std::move(student)};
}

AblationSwitches switches_for(const std::string& variant) {
  AblationSwitches s;
  if (variant == "ProKD") return s;
  if (variant == "w/o CA") s.no_ca = true;
  else if (variant == "w/o ST") s.no_st = true;
  else if (variant == "w/o PK") s.no_pk = true;
  else if (variant == "w/o CL") s.no_cl = true;
  else throw ConfigError("unknown ablation variant '" + variant + "'");
  return s;
}

RunConfig seeded(RunConfig cfg, std::uint64_t seed) {
  cfg.seed = seed;
  cfg.synthetic.seed = seed;
  return cfg;
}

AblationSeedResult run_ablation_seed(const RunConfig& base, std::uint64_t seed) {
  const RunConfig cfg = seeded(base, seed);
  Dataset data = load_dataset(cfg);
  const auto& in = data.inputs;
  AblationSeedResult out;
  out.seed = seed;

  std::map<bool, std::pair<TeacherResult, TeacherSnapshot>> teachers;
  for (bool no_ca : {false, true}) {
    RunConfig c = cfg;
    c.ablation = {};
    c.ablation.no_ca = no_ca;
    auto t = train_teacher(in.source_train, in.source_dev, in.target_train, in.vocab, in.scheme, c);
    auto snap = snapshot_teacher(t.model, in.target_train);
    out.source_dev_f1[no_ca ? "teacher w/o CA" : "teacher"] = t.report.selected_dev_f1.value_or(0.0);
    (no_ca ? out.teacher_no_ca : out.teacher) = evaluate_target(t.model, data);
    teachers.emplace(no_ca, std::make_pair(std::move(t), std::move(snap)));
  }
  for (const auto& variant : ablation_variants) {
    RunConfig c = cfg;
    c.ablation = switches_for(variant);
    const auto& snap = teachers.at(c.ablation.no_ca).second;
    auto s = distill_student(snap, in.target_train, in.vocab, in.scheme, c, &in.source_dev);
    out.source_dev_f1[variant] = s.report.selected_dev_f1.value_or(0.0);
    out.students[variant] = evaluate_target(s.model, data);
  }
  return out;
}

AblationStudy run_ablation(const RunConfig& cfg) {
  AblationStudy study;
  for (auto seed : cfg.seeds) study.seeds.push_back(run_ablation_seed(cfg, seed));
  std::vector<eval::RunGroup> students, teachers{{"teacher", {}}, {"teacher w/o CA", {}}};
  for (const auto& v : ablation_variants) {
    eval::RunGroup g{v, {}};
    for (const auto& s : study.seeds) g.seeds.push_back(s.students.at(v));
    students.push_back(std::move(g));
  }
  for (const auto& s : study.seeds) {
    teachers[0].seeds.push_back(s.teacher);
    teachers[1].seeds.push_back(s.teacher_no_ca);
  }
  study.students = eval::compare_runs(students);
  study.teachers = eval::compare_runs(teachers);
  return study;
}

nlohmann::json AblationStudy::to_json() const {
  nlohmann::json j;
  j["format"] = "prokd-ablation v1";
  j["students"] = students.to_json();
  j["teachers"] = teachers.to_json();
  j["seeds"] = nlohmann::json::array();
  for (const auto& s : seeds) {
    nlohmann::json r;
    r["seed"] = s.seed;
    r["teacher"] = s.teacher.to_json();
    r["teacher_no_ca"] = s.teacher_no_ca.to_json();
    for (const auto& [v, m] : s.students) r["students"][v] = m.to_json();
    r["source_dev_f1"] = s.source_dev_f1;
    j["seeds"].push_back(std::move(r));
  }
  return j;
}

GridResult grid_search(const RunConfig& cfg, const GridSpec& grid, const TrainingInputs& in) {
  if (grid.size() == 0) throw ConfigError("grid search over an empty grid");
  GridResult result;
  double best_student = -1.0, best_teacher = -1.0;
  for (double lambda : grid.lambda)
    for (double tau1 : grid.tau1) {
      RunConfig tc = cfg;
      tc.lambda = lambda;
      tc.fusion.tau1 = tau1;
      auto teacher = train_teacher(in.source_train, in.source_dev, in.target_train, in.vocab, in.scheme, tc);
      const auto snap = snapshot_teacher(teacher.model, in.target_train);
      for (double tau2 : grid.tau2)
        for (double gamma : grid.gamma) {
          RunConfig c = tc;
          c.fusion.tau2 = tau2;
          c.fusion.gamma = gamma;
          auto student = distill_student(snap, in.target_train, in.vocab, in.scheme, c, &in.source_dev);
          GridRow row{lambda, tau1, tau2, gamma, teacher.report.selected_dev_f1.value_or(0.0),
                      student.report.selected_dev_f1.value_or(0.0)};
          if (row.student_dev_f1 > best_student ||
              (row.student_dev_f1 == best_student && row.teacher_dev_f1 > best_teacher)) {
            best_student = row.student_dev_f1;
            best_teacher = row.teacher_dev_f1;
            result.best = result.rows.size();
            result.best_config = c;
          }
          result.rows.push_back(row);
        }
    }
  return result;
}

nlohmann::json GridResult::to_json() const {
  nlohmann::json j;
  j["format"] = "prokd-grid v1";
  j["best"] = best;
  j["rows"] = nlohmann::json::array();
  for (const auto& r : rows)
    j["rows"].push_back({{"lambda", r.lambda}, {"tau1", r.tau1}, {"tau2", r.tau2}, {"gamma", r.gamma},
                         {"teacher_dev_f1", r.teacher_dev_f1}, {"student_dev_f1", r.student_dev_f1}});
  return j;
}

std::string GridResult::to_tsv() const {
  std::ostringstream out;
  out << "# prokd-grid v1\nlambda\ttau1\ttau2\tgamma\tteacher_dev_f1\tstudent_dev_f1\tbest\n";
  char line[256];
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    std::snprintf(line, sizeof(line), "%g\t%g\t%g\t%g\t%.6f\t%.6f\t%s\n", r.lambda, r.tau1, r.tau2, r.gamma,
                  r.teacher_dev_f1, r.student_dev_f1, i == best ? "*" : "");
    out << line;
  }
  return out.str();
}

}  // namespace prokd::train
