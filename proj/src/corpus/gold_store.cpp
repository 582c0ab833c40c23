#include "prokd/corpus/gold_store.hpp"

#include "prokd/error.hpp"

namespace prokd::corpus {

void GoldStore::seal(const std::string& key, Labels labels) { sealed_[key] = std::move(labels); }

const GoldStore::Labels& GoldStore::open(const std::string& key, std::string_view accessor) {
  log_.push_back(std::string(accessor) + ":" + key);
  auto it = sealed_.find(key);
  if (it == sealed_.end()) throw Error("corpus", "no sealed gold labels under '" + key + "'");
  return it->second;
}

}  // namespace prokd::corpus
