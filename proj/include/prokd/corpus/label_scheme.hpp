#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace prokd::corpus {

// BIO tag inventory: index 0 is O, then B-t, I-t for each entity type in order.
class LabelScheme {
 public:
  LabelScheme() : LabelScheme({"PER", "LOC", "ORG", "MISC"}) {}
  explicit LabelScheme(std::vector<std::string> entity_types);

  const std::vector<std::string>& entity_types() const noexcept { return types_; }
  const std::vector<std::string>& tags() const noexcept { return tags_; }
  std::size_t size() const noexcept { return tags_.size(); }

  std::optional<int> index(std::string_view tag) const;
  const std::string& tag(int index) const { return tags_.at(static_cast<std::size_t>(index)); }

  static constexpr int outside = 0;
  int begin_of(std::size_t type) const { return static_cast<int>(1 + 2 * type); }
  int inside_of(std::size_t type) const { return static_cast<int>(2 + 2 * type); }
  bool is_begin(int tag) const { return tag > 0 && tag % 2 == 1; }
  bool is_inside(int tag) const { return tag > 0 && tag % 2 == 0; }
  // Entity type index of a non-O tag.
  std::size_t type_of(int tag) const { return static_cast<std::size_t>((tag - 1) / 2); }

  friend bool operator==(const LabelScheme& a, const LabelScheme& b) { return a.types_ == b.types_; }

 private:
  std::vector<std::string> types_;
  std::vector<std::string> tags_;
  std::unordered_map<std::string, int> index_;
};

}  // namespace prokd::corpus
