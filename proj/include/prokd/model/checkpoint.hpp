#pragma once

#include <iosfwd>
#include <string>

#include "prokd/corpus/label_scheme.hpp"
#include "prokd/model/ner_model.hpp"

namespace prokd::model {

// Checkpoint layout:
//   line 1  "PROKD-CHECKPOINT v1"
//   line 2  JSON metadata: encoder config, label tags, vocabulary, and the
//           name/shape of every parameter in storage order
//   rest    raw little-endian float64 parameter values in that order
// Loading reproduces every parameter bit-exactly.
void save_checkpoint(std::ostream& out, const NerModel& model, const corpus::LabelScheme& scheme);
void save_checkpoint_file(const std::string& path, const NerModel& model, const corpus::LabelScheme& scheme);

struct LoadedModel {
  NerModel model;
  corpus::LabelScheme scheme;
};

LoadedModel load_checkpoint(std::istream& in);
LoadedModel load_checkpoint_file(const std::string& path);

}  // namespace prokd::model
