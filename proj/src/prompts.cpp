#include "symplanner/prompts.hpp"

#include <algorithm>

#include "symplanner/core.hpp"

namespace symplanner::prompts {

namespace {

constexpr std::string_view kOpen = "{{";
constexpr std::string_view kClose = "}}";

std::string_view file_for(Kind kind) {
  switch (kind) {
    case Kind::Generation: return "generation.v1.txt";
    case Kind::ActionParsing: return "action_parsing.v1.txt";
    case Kind::IterativeCorrection: return "iterative_correction.v1.txt";
    case Kind::ContrastiveRanking: return "contrastive_ranking.v1.txt";
    case Kind::PlanRating: return "plan_rating.v1.txt";
  }
  return {};
}

}  // namespace

Template::Template(std::string file_name, std::string text)
    : file_name_(std::move(file_name)), text_(std::move(text)) {
  // The plan-rating examples contain "### Input:" themselves, so that asset
  // marks its query with "## Query:".
  query_start_ = text_.rfind("\n\n## Query:");
  if (query_start_ == std::string::npos) query_start_ = text_.rfind("\n\n### Input:");
  if (query_start_ == std::string::npos) throw ConfigError("prompt " + file_name_ + " has no query section");
}

std::string Template::version() const {
  auto dot = file_name_.find('.');
  auto last = file_name_.rfind('.');
  if (dot == std::string::npos || last == dot) return "";
  return file_name_.substr(dot + 1, last - dot - 1);
}

std::string_view Template::instructions() const {
  return std::string_view(text_).substr(0, query_start_);
}

std::vector<std::string> Template::slots() const {
  std::vector<std::string> out;
  std::size_t pos = query_start_;
  while ((pos = text_.find(kOpen, pos)) != std::string::npos) {
    auto end = text_.find(kClose, pos);
    if (end == std::string::npos) break;
    auto name = text_.substr(pos + 2, end - pos - 2);
    if (std::find(out.begin(), out.end(), name) == out.end()) out.push_back(name);
    pos = end + 2;
  }
  return out;
}

std::string Template::fill(const std::map<std::string, std::string>& values) const {
  auto names = slots();
  for (const auto& [k, v] : values) {
    if (std::find(names.begin(), names.end(), k) == names.end()) {
      throw ConfigError("prompt " + file_name_ + " has no slot '" + k + "'");
    }
  }
  std::string out(instructions());
  std::size_t pos = query_start_;
  while (true) {
    auto open = text_.find(kOpen, pos);
    if (open == std::string::npos) {
      out.append(text_, pos, std::string::npos);
      break;
    }
    auto close = text_.find(kClose, open);
    out.append(text_, pos, open - pos);
    auto name = text_.substr(open + 2, close - open - 2);
    auto it = values.find(name);
    if (it == values.end()) throw ConfigError("prompt " + file_name_ + ": slot '" + name + "' not filled");
    out += it->second;
    pos = close + 2;
  }
  return out;
}

const Template& get(Kind kind) {
  static const std::vector<Template> templates = [] {
    std::vector<Template> out;
    for (auto k : {Kind::Generation, Kind::ActionParsing, Kind::IterativeCorrection,
                   Kind::ContrastiveRanking, Kind::PlanRating}) {
      auto name = file_for(k);
      const auto& all = detail::assets();
      auto it = std::find_if(all.begin(), all.end(), [&](const auto& a) { return name == a.file_name; });
      if (it == all.end()) throw ConfigError("missing prompt asset " + std::string(name));
      out.emplace_back(it->file_name, it->text);
    }
    return out;
  }();
  return templates.at(static_cast<std::size_t>(kind));
}

}  // namespace symplanner::prompts
