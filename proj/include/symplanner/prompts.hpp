#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace symplanner::prompts {

enum class Kind { Generation, ActionParsing, IterativeCorrection, ContrastiveRanking, PlanRating };

/// A prompt asset: the instruction text and worked examples, followed by a
/// query section with `{{slot}}` placeholders.
class Template {
 public:
  Template(std::string file_name, std::string text);

  const std::string& file_name() const { return file_name_; }
  /// Version tag taken from the file name, e.g. "v1".
  std::string version() const;
  const std::string& text() const { return text_; }
  /// Everything before the query section.
  std::string_view instructions() const;
  /// Slot names in order of first appearance.
  std::vector<std::string> slots() const;

  /// Substitutes every slot. Throws ConfigError for missing or unknown slots.
  std::string fill(const std::map<std::string, std::string>& values) const;

 private:
  std::string file_name_;
  std::string text_;
  std::size_t query_start_;
};

const Template& get(Kind kind);

namespace detail {
struct Asset {
  const char* file_name;
  const char* text;
};
const std::vector<Asset>& assets();
}  // namespace detail

}  // namespace symplanner::prompts
