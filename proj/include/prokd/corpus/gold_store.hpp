#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace prokd::corpus {

// Evaluation-only holder for target-language gold labels. Every read is
// logged with the accessor's name so tests can audit that training never
// touches it.
class GoldStore {
 public:
  using Labels = std::vector<std::vector<int>>;

  void seal(const std::string& key, Labels labels);
  bool contains(const std::string& key) const { return sealed_.count(key) != 0; }
  const Labels& open(const std::string& key, std::string_view accessor);

  const std::vector<std::string>& access_log() const noexcept { return log_; }
  void clear_log() { log_.clear(); }

 private:
  std::map<std::string, Labels> sealed_;
  std::vector<std::string> log_;
};

}  // namespace prokd::corpus
