#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "prokd/corpus/synthetic.hpp"
#include "prokd/losses/losses.hpp"
#include "prokd/model/ner_model.hpp"

namespace prokd::train {

// Reference values of the original large-scale setup, recorded in reports.
struct PaperValues {
  static constexpr double teacher_learning_rate = 5e-5;
  static constexpr double student_learning_rate = 1e-5;
  static constexpr std::size_t batch_size = 128;
  static constexpr std::size_t max_length = 128;
};

struct DataConfig {
  bool synthetic = true;
  std::vector<std::string> entity_types{"PER", "LOC", "ORG", "MISC"};
  // CoNLL files, used when `synthetic` is false.
  std::string source_train;
  std::string source_dev;
  std::string target_train;
  std::string target_test;
};

// How the class-alignment gradient reaches the encoder. `moving_average`
// differentiates C = lambda * C_batch + (1 - lambda) * C_old as written;
// `straight_through` uses the moving-average value with the gradient of the
// batch centroid.
enum class AlignmentGradient { moving_average, straight_through };

struct TeacherConfig {
  double learning_rate = 5e-3;
  std::size_t epochs = 10;
  // Epochs of plain cross-entropy before class alignment starts.
  std::size_t alignment_warmup = 1;
  AlignmentGradient gradient = AlignmentGradient::moving_average;
};

struct StudentConfig {
  double learning_rate = 1e-3;
  std::size_t epochs = 10;
  // Epochs before student prototypes are tracked; self-training batches fall
  // back to pure distillation until every prototype exists.
  std::size_t prototype_warmup = 1;
};

struct AblationSwitches {
  bool no_ca = false;  // drop class alignment
  bool no_st = false;  // alpha fixed at 1
  bool no_pk = false;  // gamma fixed at 1
  bool no_cl = false;  // alpha fixed at 0.5
  friend bool operator==(const AblationSwitches&, const AblationSwitches&) = default;
};

struct GridSpec {
  std::vector<double> lambda;
  std::vector<double> tau1;
  std::vector<double> tau2;
  std::vector<double> gamma;
  std::size_t size() const { return lambda.size() * tau1.size() * tau2.size() * gamma.size(); }
};

struct RunConfig {
  std::uint64_t seed = 1;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};  // ablation runs
  std::size_t batch_size = 32;
  std::size_t max_length = 64;
  DataConfig data;
  corpus::SyntheticSpec synthetic;
  model::EncoderConfig encoder;
  TeacherConfig teacher;
  StudentConfig student;
  double lambda = 0.001;
  bool exclude_outside = false;
  loss::FusionConfig fusion;
  AblationSwitches ablation;
  GridSpec grid{{0.001, 0.005, 0.0001, 0.0005}, {0.5, 0.6, 0.7, 0.8, 0.9}, {0.5, 0.6, 0.7, 0.8, 0.9}, {0.7, 0.8, 0.9}};
};

std::string to_string(AlignmentGradient g);

// Throws ConfigError naming the offending key.
void validate(const RunConfig& cfg);

// INI text with sections [run] [data] [synthetic] [encoder] [teacher]
// [student] [prototypes] [fusion] [ablation] [grid]. Missing keys keep their
// defaults; unknown sections or keys are rejected.
RunConfig parse_config(std::istream& in);
RunConfig load_config(const std::string& path);
// Every field, doubles in shortest round-trip form; parse_config of the
// output reproduces the config exactly.
void write_config(std::ostream& out, const RunConfig& cfg);
void save_config(const std::string& path, const RunConfig& cfg);

}  // namespace prokd::train
