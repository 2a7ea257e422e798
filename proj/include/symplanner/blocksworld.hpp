#pragma once

#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "symplanner/core.hpp"

namespace symplanner::blocksworld {

inline constexpr std::string_view kPickup = "pickup";
inline constexpr std::string_view kPutdown = "putdown";
inline constexpr std::string_view kStack = "stack";
inline constexpr std::string_view kUnstack = "unstack";

/// Failure to map natural-language text onto blocksworld symbols.
class ParseError : public std::runtime_error {
 public:
  enum class Kind { MalformedAction, UnknownBlock, SelfStack, MalformedClause };

  ParseError(Kind kind, std::string subject, const std::string& message);

  Kind kind() const { return kind_; }
  /// The offending block name, action text, or clause substring.
  const std::string& subject() const { return subject_; }

 private:
  Kind kind_;
  std::string subject_;
};

/// A state that violates the hand/support/clear invariants.
class StructuralError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The block names of one instance, kept sorted.
class Vocabulary {
 public:
  Vocabulary() = default;
  explicit Vocabulary(std::vector<std::string> blocks);

  /// The first `n` colors of red, blue, orange, yellow, green, purple, ...
  static Vocabulary colors(std::size_t n);
  static Vocabulary of(const Problem& p) { return Vocabulary(p.objects()); }

  const std::vector<std::string>& blocks() const { return blocks_; }
  std::size_t size() const { return blocks_.size(); }
  bool contains(std::string_view block) const;

 private:
  std::vector<std::string> blocks_;
};

/// Operator name plus arguments, as written, before grounding.
struct ActionRef {
  std::string name;
  std::vector<std::string> args;

  std::string str() const { return Atom(name, args).str(); }
  friend bool operator==(const ActionRef&, const ActionRef&) = default;
};

// Atom constructors.
Atom on(std::string_view x, std::string_view y);
Atom ontable(std::string_view x);
Atom clear(std::string_view x);
Atom holding(std::string_view x);
Atom handempty();

/// Grounds one operator. Throws ConfigError on unknown names, wrong arity or
/// identical stack/unstack arguments.
GroundAction make_action(std::string_view name, const std::vector<std::string>& args);

/// All groundings of the four operators over `blocks`: n + n + 2n(n-1) actions.
/// Throws ConfigError for fewer than two blocks.
std::vector<GroundAction> build_domain(const std::vector<std::string>& blocks);

Problem make_problem(const Vocabulary& vocab, State init, Goal goal);

/// Syntax-level parse of the four phrasings. Throws ParseError(MalformedAction).
ActionRef parse_action_ref(std::string_view text);

/// Parses and grounds an action. Throws ParseError with MalformedAction,
/// UnknownBlock or SelfStack.
GroundAction parse_action(std::string_view text, const Vocabulary& vocab);

/// Parses the list notation produced by the action-parsing prompt, e.g.
/// `['stack', 'red', 'yellow']`.
ActionRef parse_action_list(std::string_view text);

/// Canonical phrasing, e.g. "unstack the c block from on top of the a block".
std::string render_action(const ActionRef& a);
std::string render_action(const GroundAction& a);

/// Parses comma/"and"-separated state clauses. Throws ParseError with
/// MalformedClause or UnknownBlock.
State parse_state(std::string_view text, const Vocabulary& vocab);

/// Same grammar as parse_state restricted to on/ontable/clear clauses.
Goal parse_goal(std::string_view text, const Vocabulary& vocab);

/// Clear facts, hand fact, on facts, ontable facts; each group sorted by
/// block. Throws StructuralError for ill-formed states.
std::string render_state(const State& s);

/// Goal clauses joined with ", " and a final " and ".
std::string render_goal(const Goal& g);

/// Blocks mentioned by any atom, sorted.
std::vector<std::string> blocks_in(const AtomSet& atoms);

/// Describes the first violated invariant, or nullopt for well-formed states.
std::optional<std::string> well_formedness_violation(const State& s,
                                                     const std::vector<std::string>& blocks);
std::optional<std::string> well_formedness_violation(const State& s);

/// Recomputes every clear(x) fact from the on/holding structure.
State normalize_clear(const State& s, const std::vector<std::string>& blocks);

/// Stacks listed bottom to top.
using Configuration = std::vector<std::vector<std::string>>;

/// Hand-empty state for a configuration.
State configuration_state(const Configuration& stacks);

/// Every hand-empty arrangement of `blocks` into stacks (1, 3, 13, 73, 501,
/// 4051 for n = 1..6), in a fixed order.
std::vector<Configuration> all_configurations(const std::vector<std::string>& blocks);

/// Uniform draw from all_configurations.
Configuration random_configuration(const std::vector<std::string>& blocks, std::mt19937_64& rng);

/// All blocks on the table, hand empty.
State table_state(const std::vector<std::string>& blocks);

}  // namespace symplanner::blocksworld
