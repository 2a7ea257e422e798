#include "symplanner/blocksworld.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <set>

namespace symplanner::blocksworld {

namespace {

const std::vector<std::string> kPalette = {"red",   "blue",  "orange", "yellow", "green",
                                           "purple", "white", "black", "pink",   "cyan"};

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool is_word_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_';
}

/// Lowercased word tokens with punctuation removed.
std::vector<std::string> words(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (is_word_char(c)) {
      cur += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

/// Drops "the" and "block" which carry no information in PlanBench text.
std::vector<std::string> content_words(std::string_view text) {
  auto w = words(text);
  std::erase_if(w, [](const std::string& t) { return t == "the" || t == "block"; });
  return w;
}

using Tokens = std::vector<std::string>;

bool starts_with(const Tokens& t, std::size_t pos, std::initializer_list<std::string_view> seq) {
  if (t.size() < pos + seq.size()) return false;
  std::size_t i = pos;
  for (auto s : seq) {
    if (t[i++] != s) return false;
  }
  return true;
}

/// Consumes the longest matching connector phrase at `pos`; returns the new
/// position or npos.
std::size_t eat_any(const Tokens& t, std::size_t pos,
                    std::initializer_list<std::initializer_list<std::string_view>> options) {
  std::size_t best = std::string::npos;
  std::size_t best_len = 0;
  for (auto opt : options) {
    if (starts_with(t, pos, opt) && (best == std::string::npos || opt.size() > best_len)) {
      best = pos + opt.size();
      best_len = opt.size();
    }
  }
  return best;
}

[[noreturn]] void malformed_action(std::string_view text) {
  throw ParseError(ParseError::Kind::MalformedAction, std::string(text),
                   "unrecognized action phrasing: '" + std::string(text) + "'");
}

void check_block(const Vocabulary& v, const std::string& b) {
  if (!v.contains(b)) {
    throw ParseError(ParseError::Kind::UnknownBlock, b, "unknown block '" + b + "'");
  }
}

std::string join_clauses(const std::vector<std::string>& clauses) {
  std::string out;
  for (std::size_t i = 0; i < clauses.size(); ++i) {
    if (i) out += ", ";
    out += clauses[i];
  }
  return out;
}

/// Splits on commas and the standalone word "and".
std::vector<std::string> split_clauses(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    auto first = cur.find_first_not_of(" \t\r\n");
    if (first != std::string::npos) out.push_back(cur.substr(first));
    cur.clear();
  };
  std::size_t i = 0;
  while (i < text.size()) {
    char c = text[i];
    if (c == ',' || c == ';' || c == '.') {
      flush();
      ++i;
      continue;
    }
    if ((c == 'a' || c == 'A') && i + 3 <= text.size() && lower(text.substr(i, 3)) == "and" &&
        (i == 0 || !is_word_char(text[i - 1])) &&
        (i + 3 == text.size() || !is_word_char(text[i + 3]))) {
      flush();
      i += 3;
      continue;
    }
    cur += c;
    ++i;
  }
  flush();
  return out;
}

enum class ClauseMode { State, Goal };

AtomSet parse_clauses(std::string_view text, const Vocabulary& vocab, ClauseMode mode) {
  auto clauses = split_clauses(text);
  if (clauses.empty()) {
    throw ParseError(ParseError::Kind::MalformedClause, std::string(text), "empty state/goal text");
  }
  AtomSet out;
  std::optional<std::string> subject;
  for (const auto& clause : clauses) {
    auto t = content_words(clause);
    if (t.empty()) continue;  // e.g. ", and"
    auto bad = [&]() -> ParseError {
      return ParseError(ParseError::Kind::MalformedClause, clause,
                        "cannot parse clause '" + clause + "'");
    };
    if (t[0] == "hand") {
      if (mode == ClauseMode::Goal) throw bad();
      if (t.size() == 3 && t[1] == "is" && t[2] == "empty") {
        out.insert(handempty());
      } else if (t.size() == 4 && t[1] == "is" && t[2] == "holding") {
        check_block(vocab, t[3]);
        out.insert(holding(t[3]));
      } else {
        throw bad();
      }
      subject.reset();
      continue;
    }
    std::size_t pos = 0;
    if (t.size() >= 2 && t[1] == "is") {
      check_block(vocab, t[0]);
      subject = t[0];
      pos = 2;
    } else if (t[0] == "is") {
      pos = 1;
    }
    if (!subject) throw bad();
    // Predicate part, possibly with an elided subject ("... is clear and on the table").
    Tokens rest(t.begin() + static_cast<std::ptrdiff_t>(pos), t.end());
    if (rest.size() == 1 && rest[0] == "clear") {
      out.insert(clear(*subject));
    } else if (rest.size() == 2 && rest[0] == "on" && rest[1] == "table") {
      out.insert(ontable(*subject));
    } else if (rest.size() == 4 && starts_with(rest, 0, {"on", "top", "of"})) {
      check_block(vocab, rest[3]);
      out.insert(on(*subject, rest[3]));
    } else if (rest.size() == 2 && (rest[0] == "on" || rest[0] == "onto" || rest[0] == "atop")) {
      check_block(vocab, rest[1]);
      out.insert(on(*subject, rest[1]));
    } else {
      throw bad();
    }
  }
  if (out.empty()) {
    throw ParseError(ParseError::Kind::MalformedClause, std::string(text), "no clauses in text");
  }
  return out;
}

void insert_config(Configuration& acc, const std::vector<std::string>& blocks, std::size_t k,
                   std::vector<Configuration>& out) {
  if (k == blocks.size()) {
    out.push_back(acc);
    return;
  }
  const auto& b = blocks[k];
  // Alone on the table.
  acc.push_back({b});
  insert_config(acc, blocks, k + 1, out);
  acc.pop_back();
  // Bottom of an existing stack, or directly above an existing block.
  for (std::size_t s = 0; s < acc.size(); ++s) {
    for (std::size_t i = 0; i <= acc[s].size(); ++i) {
      acc[s].insert(acc[s].begin() + static_cast<std::ptrdiff_t>(i), b);
      insert_config(acc, blocks, k + 1, out);
      acc[s].erase(acc[s].begin() + static_cast<std::ptrdiff_t>(i));
    }
  }
}

}  // namespace

ParseError::ParseError(Kind kind, std::string subject, const std::string& message)
    : std::runtime_error(message), kind_(kind), subject_(std::move(subject)) {}

// ---------------------------------------------------------------- vocabulary

Vocabulary::Vocabulary(std::vector<std::string> blocks) : blocks_(std::move(blocks)) {
  for (auto& b : blocks_) {
    b = lower(b);
    if (!is_identifier(b)) throw ConfigError("block name '" + b + "' is not an identifier");
    if (b == "the" || b == "block" || b == "hand" || b == "table" || b == "is") {
      throw ConfigError("block name '" + b + "' collides with the text grammar");
    }
  }
  std::sort(blocks_.begin(), blocks_.end());
  if (std::adjacent_find(blocks_.begin(), blocks_.end()) != blocks_.end()) {
    throw ConfigError("duplicate block names");
  }
}

Vocabulary Vocabulary::colors(std::size_t n) {
  if (n > kPalette.size()) throw ConfigError("at most " + std::to_string(kPalette.size()) + " colors");
  return Vocabulary(std::vector<std::string>(kPalette.begin(), kPalette.begin() + static_cast<std::ptrdiff_t>(n)));
}

bool Vocabulary::contains(std::string_view block) const {
  return std::binary_search(blocks_.begin(), blocks_.end(), block,
                            [](const auto& a, const auto& b) { return std::string_view(a) < std::string_view(b); });
}

// ---------------------------------------------------------------- domain

Atom on(std::string_view x, std::string_view y) { return Atom("on", {std::string(x), std::string(y)}); }
Atom ontable(std::string_view x) { return Atom("ontable", {std::string(x)}); }
Atom clear(std::string_view x) { return Atom("clear", {std::string(x)}); }
Atom holding(std::string_view x) { return Atom("holding", {std::string(x)}); }
Atom handempty() { return Atom("handempty"); }

GroundAction make_action(std::string_view name, const std::vector<std::string>& args) {
  auto arity_error = [&] { return ConfigError("bad arguments for " + Atom(std::string(name), args).str()); };
  if (name == kPickup) {
    if (args.size() != 1) throw arity_error();
    const auto& x = args[0];
    return GroundAction("pickup", args, {clear(x), ontable(x), handempty()}, {holding(x)},
                        {clear(x), ontable(x), handempty()});
  }
  if (name == kPutdown) {
    if (args.size() != 1) throw arity_error();
    const auto& x = args[0];
    return GroundAction("putdown", args, {holding(x)}, {clear(x), ontable(x), handempty()},
                        {holding(x)});
  }
  if (name == kStack) {
    if (args.size() != 2 || args[0] == args[1]) throw arity_error();
    const auto& x = args[0];
    const auto& y = args[1];
    return GroundAction("stack", args, {holding(x), clear(y)}, {on(x, y), clear(x), handempty()},
                        {holding(x), clear(y)});
  }
  if (name == kUnstack) {
    if (args.size() != 2 || args[0] == args[1]) throw arity_error();
    const auto& x = args[0];
    const auto& y = args[1];
    return GroundAction("unstack", args, {on(x, y), clear(x), handempty()}, {holding(x), clear(y)},
                        {on(x, y), clear(x), handempty()});
  }
  throw ConfigError("unknown blocksworld operator '" + std::string(name) + "'");
}

std::vector<GroundAction> build_domain(const std::vector<std::string>& blocks) {
  if (blocks.size() < 2) throw ConfigError("blocksworld needs at least 2 blocks");
  std::vector<GroundAction> out;
  for (const auto& x : blocks) {
    out.push_back(make_action(kPickup, {x}));
    out.push_back(make_action(kPutdown, {x}));
    for (const auto& y : blocks) {
      if (x == y) continue;
      out.push_back(make_action(kStack, {x, y}));
      out.push_back(make_action(kUnstack, {x, y}));
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

Problem make_problem(const Vocabulary& vocab, State init, Goal goal) {
  return Problem(vocab.blocks(), build_domain(vocab.blocks()), std::move(init), std::move(goal),
                 "blocksworld");
}

// ---------------------------------------------------------------- actions

ActionRef parse_action_ref(std::string_view text) {
  auto t = content_words(text);
  if (t.empty()) malformed_action(text);

  std::size_t pos = std::string::npos;
  std::string op;
  if ((pos = eat_any(t, 0, {{"pick", "up"}, {"pickup"}, {"pick-up"}})) != std::string::npos) {
    op = "pickup";
  } else if ((pos = eat_any(t, 0, {{"put", "down"}, {"putdown"}, {"put-down"}})) != std::string::npos) {
    op = "putdown";
  } else if ((pos = eat_any(t, 0, {{"unstack"}})) != std::string::npos) {
    op = "unstack";
  } else if ((pos = eat_any(t, 0, {{"stack"}})) != std::string::npos) {
    op = "stack";
  } else {
    malformed_action(text);
  }
  if (pos >= t.size()) malformed_action(text);
  std::string x = t[pos++];
  if (!is_identifier(x)) malformed_action(text);

  if (op == "pickup") {
    if (pos < t.size()) {
      // "pick up the x block from the table"
      pos = eat_any(t, pos, {{"from", "table"}, {"from", "on", "table"}, {"off", "table"}, {"off", "of", "table"}});
      if (pos != t.size()) malformed_action(text);
    }
    return {op, {x}};
  }
  if (op == "putdown") {
    if (pos < t.size()) {
      pos = eat_any(t, pos, {{"on", "table"}, {"onto", "table"}, {"on", "to", "table"}});
      if (pos != t.size()) malformed_action(text);
    }
    return {op, {x}};
  }
  if (op == "stack") {
    pos = eat_any(t, pos, {{"on", "top", "of"}, {"on"}, {"onto"}, {"on", "to"}, {"atop"}});
  } else {
    pos = eat_any(t, pos, {{"from", "on", "top", "of"}, {"from", "top", "of"}, {"from", "on"},
                           {"from"}, {"off", "of"}, {"off"}});
  }
  if (pos == std::string::npos || pos + 1 != t.size()) malformed_action(text);
  std::string y = t[pos];
  if (!is_identifier(y)) malformed_action(text);
  return {op, {x, y}};
}

GroundAction parse_action(std::string_view text, const Vocabulary& vocab) {
  auto ref = parse_action_ref(text);
  for (const auto& b : ref.args) check_block(vocab, b);
  if (ref.args.size() == 2 && ref.args[0] == ref.args[1]) {
    throw ParseError(ParseError::Kind::SelfStack, ref.args[0],
                     "cannot " + ref.name + " the " + ref.args[0] + " block with itself");
  }
  return make_action(ref.name, ref.args);
}

ActionRef parse_action_list(std::string_view text) {
  auto open = text.find('[');
  auto close = text.find(']', open == std::string_view::npos ? 0 : open);
  if (open == std::string_view::npos || close == std::string_view::npos) malformed_action(text);
  auto t = words(text.substr(open + 1, close - open - 1));
  if (t.empty()) malformed_action(text);
  ActionRef ref{t[0], {t.begin() + 1, t.end()}};
  bool unary = ref.name == kPickup || ref.name == kPutdown;
  bool binary = ref.name == kStack || ref.name == kUnstack;
  if (!(unary && ref.args.size() == 1) && !(binary && ref.args.size() == 2)) malformed_action(text);
  return ref;
}

std::string render_action(const ActionRef& a) {
  if (a.name == kPickup && a.args.size() == 1) return "pick up the " + a.args[0] + " block";
  if (a.name == kPutdown && a.args.size() == 1) return "put down the " + a.args[0] + " block";
  if (a.name == kStack && a.args.size() == 2) {
    return "stack the " + a.args[0] + " block on top of the " + a.args[1] + " block";
  }
  if (a.name == kUnstack && a.args.size() == 2) {
    return "unstack the " + a.args[0] + " block from on top of the " + a.args[1] + " block";
  }
  throw ConfigError("cannot render action " + a.str());
}

std::string render_action(const GroundAction& a) { return render_action(ActionRef{a.name(), a.args()}); }

// ---------------------------------------------------------------- states

State parse_state(std::string_view text, const Vocabulary& vocab) {
  return State{parse_clauses(text, vocab, ClauseMode::State)};
}

Goal parse_goal(std::string_view text, const Vocabulary& vocab) {
  return Goal{parse_clauses(text, vocab, ClauseMode::Goal)};
}

std::string render_state(const State& s) {
  if (auto why = well_formedness_violation(s)) throw StructuralError(*why);
  std::vector<std::string> clears, hand, ons, tables;
  for (const auto& a : s.atoms) {
    if (a.predicate == "clear") clears.push_back("the " + a.args[0] + " block is clear");
    if (a.predicate == "handempty") hand.push_back("the hand is empty");
    if (a.predicate == "holding") hand.push_back("the hand is holding the " + a.args[0] + " block");
    if (a.predicate == "on") ons.push_back("the " + a.args[0] + " block is on top of the " + a.args[1] + " block");
    if (a.predicate == "ontable") tables.push_back("the " + a.args[0] + " block is on the table");
  }
  // AtomSet order already sorts each group by its first argument.
  std::vector<std::string> all;
  for (auto* group : {&clears, &hand, &ons, &tables}) all.insert(all.end(), group->begin(), group->end());
  return join_clauses(all);
}

std::string render_goal(const Goal& g) {
  std::vector<std::string> ons, tables, clears;
  for (const auto& a : g.atoms) {
    if (a.predicate == "on") ons.push_back("the " + a.args[0] + " block is on top of the " + a.args[1] + " block");
    else if (a.predicate == "ontable") tables.push_back("the " + a.args[0] + " block is on the table");
    else if (a.predicate == "clear") clears.push_back("the " + a.args[0] + " block is clear");
    else throw StructuralError("goal atom " + a.str() + " has no goal phrasing");
  }
  std::vector<std::string> all;
  for (auto* group : {&ons, &tables, &clears}) all.insert(all.end(), group->begin(), group->end());
  if (all.empty()) return "";
  if (all.size() == 1) return all[0];
  std::string out;
  for (std::size_t i = 0; i + 1 < all.size(); ++i) {
    if (i) out += ", ";
    out += all[i];
  }
  return out + " and " + all.back();
}

std::vector<std::string> blocks_in(const AtomSet& atoms) {
  std::set<std::string> out;
  for (const auto& a : atoms) out.insert(a.args.begin(), a.args.end());
  return {out.begin(), out.end()};
}

std::optional<std::string> well_formedness_violation(const State& s) {
  return well_formedness_violation(s, blocks_in(s.atoms));
}

std::optional<std::string> well_formedness_violation(const State& s,
                                                     const std::vector<std::string>& blocks) {
  std::set<std::string> known(blocks.begin(), blocks.end());
  std::map<std::string, std::string> below;           // x -> y for on(x,y)
  std::map<std::string, int> above_count;             // y -> #on(·,y)
  std::set<std::string> table, clears, held;
  bool empty_hand = false;
  for (const auto& a : s.atoms) {
    for (const auto& arg : a.args) {
      if (!known.count(arg)) return "atom " + a.str() + " mentions unknown block '" + arg + "'";
    }
    const auto& p = a.predicate;
    if (p == "handempty" && a.args.empty()) {
      empty_hand = true;
    } else if (p == "holding" && a.args.size() == 1) {
      held.insert(a.args[0]);
    } else if (p == "clear" && a.args.size() == 1) {
      clears.insert(a.args[0]);
    } else if (p == "ontable" && a.args.size() == 1) {
      table.insert(a.args[0]);
    } else if (p == "on" && a.args.size() == 2) {
      if (a.args[0] == a.args[1]) return "block " + a.args[0] + " is on itself";
      if (below.count(a.args[0])) return "block " + a.args[0] + " is on two blocks";
      below[a.args[0]] = a.args[1];
      above_count[a.args[1]]++;
    } else {
      return "atom " + a.str() + " is not a blocksworld fact";
    }
  }
  if (empty_hand && !held.empty()) return "hand is both empty and holding " + *held.begin();
  if (!empty_hand && held.empty()) return "no hand fact holds";
  if (held.size() > 1) return "hand holds more than one block";
  for (const auto& b : blocks) {
    bool is_held = held.count(b) > 0;
    int supports = (table.count(b) ? 1 : 0) + (below.count(b) ? 1 : 0);
    if (is_held && supports) return "held block " + b + " is also supported";
    if (!is_held && supports != 1) {
      return "block " + b + (supports ? " has two supports" : " has no support");
    }
    if (above_count[b] > 1) return "more than one block on " + b;
    bool should_be_clear = !is_held && above_count[b] == 0;
    if (should_be_clear != (clears.count(b) > 0)) {
      return "clear(" + b + ") " + (should_be_clear ? "missing" : "holds but the block is covered or held");
    }
  }
  for (const auto& [start, ignored] : below) {
    std::set<std::string> seen{start};
    auto cur = start;
    while (below.count(cur)) {
      cur = below[cur];
      if (!seen.insert(cur).second) return "cycle in the on relation through " + cur;
    }
  }
  return std::nullopt;
}

State normalize_clear(const State& s, const std::vector<std::string>& blocks) {
  AtomSet out;
  std::set<std::string> covered;
  for (const auto& a : s.atoms) {
    if (a.predicate == "clear") continue;
    if (a.predicate == "on") covered.insert(a.args[1]);
    if (a.predicate == "holding") covered.insert(a.args[0]);
    out.insert(a);
  }
  for (const auto& b : blocks) {
    if (!covered.count(b)) out.insert(clear(b));
  }
  return State{out};
}

State configuration_state(const Configuration& stacks) {
  std::vector<Atom> atoms{handempty()};
  for (const auto& stack : stacks) {
    if (stack.empty()) continue;
    atoms.push_back(ontable(stack.front()));
    for (std::size_t i = 1; i < stack.size(); ++i) atoms.push_back(on(stack[i], stack[i - 1]));
    atoms.push_back(clear(stack.back()));
  }
  return State{AtomSet(std::move(atoms))};
}

std::vector<Configuration> all_configurations(const std::vector<std::string>& blocks) {
  std::vector<Configuration> out;
  Configuration acc;
  insert_config(acc, blocks, 0, out);
  return out;
}

Configuration random_configuration(const std::vector<std::string>& blocks, std::mt19937_64& rng) {
  static thread_local std::map<std::vector<std::string>, std::vector<Configuration>> cache;
  auto it = cache.find(blocks);
  if (it == cache.end()) it = cache.emplace(blocks, all_configurations(blocks)).first;
  const auto& all = it->second;
  std::uniform_int_distribution<std::size_t> pick(0, all.size() - 1);
  return all[pick(rng)];
}

State table_state(const std::vector<std::string>& blocks) {
  Configuration stacks;
  for (const auto& b : blocks) stacks.push_back({b});
  return configuration_state(stacks);
}

}  // namespace symplanner::blocksworld
