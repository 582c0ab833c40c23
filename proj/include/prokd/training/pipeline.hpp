#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "prokd/corpus/gold_store.hpp"
#include "prokd/evaluation/metrics.hpp"
#include "prokd/training/trainer.hpp"

namespace prokd::train {

// Everything training may see: labeled source data and unlabeled target text.
struct TrainingInputs {
  corpus::LabelScheme scheme;
  corpus::Corpus source_train;
  corpus::Corpus source_dev;
  corpus::Corpus target_train;  // unlabeled
  model::Vocabulary vocab;
};

// Training inputs plus the evaluation-only side: target test text, its gold
// labels sealed in `gold` under "target.test", and the surfaces whose tag
// preference shifts between the languages.
struct Dataset {
  TrainingInputs inputs;
  corpus::Corpus target_test;  // unlabeled
  corpus::GoldStore gold;
  std::vector<std::string> shift_surfaces;
  // Source-train label preference per shift surface.
  std::map<std::string, std::string> source_majority;
};

inline constexpr const char* target_test_key = "target.test";

// Synthetic generation or CoNLL files, per cfg.data.
Dataset load_dataset(const RunConfig& cfg);

// Token-level metrics of a model on the target test set, with the shift-token
// table restricted to surfaces whose target majority tag differs from the
// source majority tag. Opens the gold store under `accessor`.
eval::MetricsReport evaluate_target(model::NerModel& model, Dataset& data, const std::string& accessor = "evaluate");

struct PipelineResult {
  TeacherResult teacher;
  TeacherSnapshot snapshot;
  StudentResult student;
};

// Teacher, snapshot, student. Never touches target gold labels.
PipelineResult run_pipeline(const TrainingInputs& inputs, const RunConfig& cfg, std::ostream* log = nullptr);

// Names of the five configurations compared by the ablation study.
inline const std::vector<std::string> ablation_variants{"ProKD", "w/o CA", "w/o ST", "w/o PK", "w/o CL"};
AblationSwitches switches_for(const std::string& variant);

// Config with the run seed and the synthetic data seed set to `seed`.
RunConfig seeded(RunConfig cfg, std::uint64_t seed);

// Results of all five variants for one seed. Teachers are shared where the
// switches allow (only w/o CA changes the teacher).
struct AblationSeedResult {
  std::uint64_t seed = 0;
  eval::MetricsReport teacher;        // ProKD teacher on target test
  eval::MetricsReport teacher_no_ca;  // w/o-CA teacher on target test
  std::map<std::string, eval::MetricsReport> students;
  std::map<std::string, double> source_dev_f1;  // teachers and students
};

AblationSeedResult run_ablation_seed(const RunConfig& cfg, std::uint64_t seed);

struct AblationStudy {
  std::vector<AblationSeedResult> seeds;
  eval::Comparison students;  // ProKD first, then the ablations
  eval::Comparison teachers;  // ProKD teacher vs w/o-CA teacher
  nlohmann::json to_json() const;
};

AblationStudy run_ablation(const RunConfig& cfg);

struct GridRow {
  double lambda = 0, tau1 = 0, tau2 = 0, gamma = 0;
  double teacher_dev_f1 = 0;
  double student_dev_f1 = 0;
};

struct GridResult {
  std::vector<GridRow> rows;
  std::size_t best = 0;
  RunConfig best_config;
  nlohmann::json to_json() const;
  std::string to_tsv() const;
};

// Exhaustive search over the grid, scored by the student's source-dev F1
// (ties: teacher dev F1, then grid order). Takes training inputs only, so
// target test data cannot influence the choice.
GridResult grid_search(const RunConfig& cfg, const GridSpec& grid, const TrainingInputs& inputs);

}  // namespace prokd::train
