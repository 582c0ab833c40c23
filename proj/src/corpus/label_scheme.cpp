#include "prokd/corpus/label_scheme.hpp"

#include "prokd/error.hpp"

namespace prokd::corpus {

LabelScheme::LabelScheme(std::vector<std::string> entity_types) : types_(std::move(entity_types)) {
  if (types_.empty()) throw Error("corpus", "label scheme needs at least one entity type");
  tags_.push_back("O");
  for (const auto& t : types_) {
    tags_.push_back("B-" + t);
    tags_.push_back("I-" + t);
  }
  for (std::size_t i = 0; i < tags_.size(); ++i) {
    if (!index_.emplace(tags_[i], static_cast<int>(i)).second)
      throw Error("corpus", "duplicate entity type in label scheme: " + tags_[i]);
  }
}

std::optional<int> LabelScheme::index(std::string_view tag) const {
  auto it = index_.find(std::string(tag));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

}  // namespace prokd::corpus
