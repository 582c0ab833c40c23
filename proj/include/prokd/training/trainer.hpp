#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "prokd/corpus/corpus.hpp"
#include "prokd/losses/losses.hpp"
#include "prokd/model/ner_model.hpp"
#include "prokd/prototypes/prototype_set.hpp"
#include "prokd/training/config.hpp"
#include "prokd/training/snapshot.hpp"

namespace prokd::train {

struct EpochRecord {
  std::size_t epoch = 0;
  loss::LossBundle mean;  // batch-mean of every term seen this epoch
  double alpha = 1.0;
  std::optional<double> source_dev_f1;
  std::size_t batches = 0;
  std::size_t alignment_batches = 0;  // batches with the alignment term
  std::size_t skipped_alignment = 0;  // batches where alignment had < 2 labels
  std::size_t fallback_batches = 0;   // self-training forced off
  diff::Tensor source_prototypes;
  diff::Tensor target_prototypes;
  double seconds = 0.0;
};

struct TrainReport {
  std::string phase;  // "teacher" or "student"
  std::vector<EpochRecord> epochs;
  std::size_t selected_epoch = 0;
  std::optional<double> selected_dev_f1;
  std::size_t fallback_batches = 0;
  double learning_rate = 0.0;
  double paper_learning_rate = 0.0;

  std::vector<double> alpha_trajectory() const;
  // Timing fields are omitted when `timing` is false so the output is
  // reproducible byte for byte.
  nlohmann::json to_json(bool timing = true) const;
};

struct TeacherResult {
  model::NerModel model;
  TrainReport report;
  proto::PrototypeSet source_prototypes;
  proto::PrototypeSet target_prototypes;
};

struct StudentResult {
  model::NerModel model;
  TrainReport report;
  proto::PrototypeSet prototypes;
};

// One table over both languages: source train and dev, then target train.
model::Vocabulary shared_vocabulary(const corpus::Corpus& source_train, const corpus::Corpus& source_dev,
                                    const corpus::Corpus& target_train);

// Cross-entropy on source batches plus class alignment against the paired
// target batch; keeps the epoch with the best source-dev F1. `target` must be
// unlabeled. Per-batch loss records go to `log` as JSON lines.
TeacherResult train_teacher(const corpus::Corpus& source, const corpus::Corpus& source_dev,
                            const corpus::Corpus& target, const model::Vocabulary& vocab,
                            const corpus::LabelScheme& scheme, const RunConfig& cfg, std::ostream* log = nullptr);

// KD towards the frozen snapshot mixed with self-training on hybrid
// prototype/teacher pseudo-labels under the alpha schedule. The final epoch
// is the result. `source_dev`, if given, is scored per epoch for reporting.
StudentResult distill_student(const TeacherSnapshot& snapshot, const corpus::Corpus& target,
                              const model::Vocabulary& vocab, const corpus::LabelScheme& scheme,
                              const RunConfig& cfg, const corpus::Corpus* source_dev = nullptr,
                              std::ostream* log = nullptr);

// alpha for epoch e of an E-epoch student run: alpha_schedule(e, E - 1), so
// the first epoch is pure distillation and the last pure self-training;
// overridden by the w/o-ST (1) and w/o-CL (0.5) switches.
double student_alpha(std::size_t epoch, const RunConfig& cfg);

}  // namespace prokd::train
