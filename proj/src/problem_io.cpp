#include "symplanner/problem_io.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "symplanner/blocksworld.hpp"

namespace symplanner {

namespace {

struct SExpr {
  std::string atom;
  std::vector<SExpr> list;
  bool is_list = false;
};

class SExprReader {
 public:
  explicit SExprReader(std::string_view text) : text_(text) {}

  SExpr read() {
    skip();
    if (pos_ >= text_.size()) throw ConfigError("pddl: unexpected end of input");
    if (text_[pos_] == '(') {
      ++pos_;
      SExpr e;
      e.is_list = true;
      while (true) {
        skip();
        if (pos_ >= text_.size()) throw ConfigError("pddl: unbalanced parentheses");
        if (text_[pos_] == ')') {
          ++pos_;
          return e;
        }
        e.list.push_back(read());
      }
    }
    if (text_[pos_] == ')') throw ConfigError("pddl: unexpected ')'");
    SExpr e;
    while (pos_ < text_.size() && !std::isspace(static_cast<unsigned char>(text_[pos_])) &&
           text_[pos_] != '(' && text_[pos_] != ')') {
      e.atom += static_cast<char>(std::tolower(static_cast<unsigned char>(text_[pos_++])));
    }
    return e;
  }

 private:
  void skip() {
    while (pos_ < text_.size()) {
      if (std::isspace(static_cast<unsigned char>(text_[pos_]))) {
        ++pos_;
      } else if (text_[pos_] == ';') {
        while (pos_ < text_.size() && text_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

Atom literal(const SExpr& e) {
  if (!e.is_list || e.list.empty() || e.list[0].is_list) throw ConfigError("pddl: expected a ground literal");
  std::vector<std::string> args;
  for (std::size_t i = 1; i < e.list.size(); ++i) {
    if (e.list[i].is_list) throw ConfigError("pddl: nested literal arguments are not supported");
    args.push_back(e.list[i].atom);
  }
  // PlanBench spells the nullary hand predicate "handempty"; some generators
  // use "arm-empty".
  auto name = e.list[0].atom;
  if (name == "arm-empty" || name == "armempty") name = "handempty";
  if (name == "on-table") name = "ontable";
  return Atom(name, std::move(args));
}

}  // namespace

nlohmann::json problem_to_json(const Problem& p) {
  return {{"objects", p.objects()},
          {"init", p.init().atoms.to_strings()},
          {"goal", p.goal().atoms.to_strings()},
          {"domain", p.domain()}};
}

Problem problem_from_json(const nlohmann::json& j) {
  try {
    auto domain = j.value("domain", std::string("blocksworld"));
    if (domain != "blocksworld") throw ConfigError("unsupported domain '" + domain + "'");
    blocksworld::Vocabulary vocab(j.at("objects").get<std::vector<std::string>>());
    State init{AtomSet::from_strings(j.at("init").get<std::vector<std::string>>())};
    Goal goal{AtomSet::from_strings(j.at("goal").get<std::vector<std::string>>())};
    return blocksworld::make_problem(vocab, std::move(init), std::move(goal));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("problem json: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("problem json: ") + e.what());
  }
}

Problem load_problem(const std::filesystem::path& path) {
  auto text = read_file(path);
  try {
    return problem_from_json(nlohmann::json::parse(text));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

Problem import_pddl_problem(std::string_view pddl) {
  auto root = SExprReader(pddl).read();
  if (!root.is_list || root.list.empty() || root.list[0].atom != "define") {
    throw ConfigError("pddl: expected (define ...)");
  }
  std::vector<std::string> objects;
  std::vector<Atom> init;
  std::vector<Atom> goal;
  for (std::size_t i = 1; i < root.list.size(); ++i) {
    const auto& sec = root.list[i];
    if (!sec.is_list || sec.list.empty()) continue;
    const auto& head = sec.list[0].atom;
    if (head == ":objects") {
      for (std::size_t k = 1; k < sec.list.size(); ++k) {
        const auto& tok = sec.list[k].atom;
        if (tok == "-") {
          ++k;  // skip the type name
          continue;
        }
        objects.push_back(tok);
      }
    } else if (head == ":init") {
      for (std::size_t k = 1; k < sec.list.size(); ++k) init.push_back(literal(sec.list[k]));
    } else if (head == ":goal") {
      if (sec.list.size() != 2) throw ConfigError("pddl: malformed :goal");
      const auto& g = sec.list[1];
      if (g.is_list && !g.list.empty() && g.list[0].atom == "and") {
        for (std::size_t k = 1; k < g.list.size(); ++k) goal.push_back(literal(g.list[k]));
      } else {
        goal.push_back(literal(g));
      }
    }
  }
  return blocksworld::make_problem(blocksworld::Vocabulary(objects), State{AtomSet(init)},
                                   Goal{AtomSet(goal)});
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    auto last = line.find_last_not_of(" \t\r");
    out.push_back(line.substr(first, last - first + 1));
  }
  return out;
}

}  // namespace symplanner
