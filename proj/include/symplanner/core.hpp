#pragma once

#include <compare>
#include <cstddef>
#include <initializer_list>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace symplanner {

/// Raised for invalid configuration or problem definitions.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when a caller violates a documented precondition.
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// True for lowercase identifiers made of [a-z0-9_-].
bool is_identifier(std::string_view s);

/// A ground predicate instance such as on(red,blue) or handempty.
struct Atom {
  std::string predicate;
  std::vector<std::string> args;

  Atom() = default;
  Atom(std::string pred, std::vector<std::string> arguments = {});

  /// Canonical text: `pred(a1,a2)`, or just `pred` for nullary atoms.
  std::string str() const;

  /// Inverse of str(). Whitespace around tokens is tolerated and the
  /// result is lowercased; throws std::invalid_argument on bad syntax.
  static Atom parse(std::string_view text);

  friend auto operator<=>(const Atom&, const Atom&) = default;
  friend bool operator==(const Atom&, const Atom&) = default;
};

/// Sorted set of atoms backed by a flat vector.
class AtomSet {
 public:
  using const_iterator = std::vector<Atom>::const_iterator;

  AtomSet() = default;
  AtomSet(std::initializer_list<Atom> atoms);
  explicit AtomSet(std::vector<Atom> atoms);

  /// Parses each entry with Atom::parse.
  static AtomSet from_strings(const std::vector<std::string>& atoms);

  bool contains(const Atom& a) const;
  /// True iff every atom of `other` is in this set.
  bool includes(const AtomSet& other) const;
  bool insert(Atom a);
  bool erase(const Atom& a);

  AtomSet minus(const AtomSet& other) const;
  AtomSet united(const AtomSet& other) const;
  AtomSet intersected(const AtomSet& other) const;

  std::size_t size() const { return atoms_.size(); }
  bool empty() const { return atoms_.empty(); }
  const_iterator begin() const { return atoms_.begin(); }
  const_iterator end() const { return atoms_.end(); }
  const std::vector<Atom>& items() const { return atoms_; }

  /// Atom strings in lexicographic order.
  std::vector<std::string> to_strings() const;
  /// to_strings() joined with ", ", wrapped in braces.
  std::string str() const;

  friend auto operator<=>(const AtomSet&, const AtomSet&) = default;
  friend bool operator==(const AtomSet&, const AtomSet&) = default;

 private:
  std::vector<Atom> atoms_;
};

struct State {
  AtomSet atoms;

  /// Canonical serialization used as a deduplication and hashing key.
  std::string key() const;

  friend auto operator<=>(const State&, const State&) = default;
  friend bool operator==(const State&, const State&) = default;
};

/// A partial state; the empty goal is satisfied everywhere.
struct Goal {
  AtomSet atoms;

  friend auto operator<=>(const Goal&, const Goal&) = default;
  friend bool operator==(const Goal&, const Goal&) = default;
};

/// An immutable grounded STRIPS action.
class GroundAction {
 public:
  GroundAction(std::string name, std::vector<std::string> args, AtomSet pre,
               AtomSet add, AtomSet del);

  const std::string& name() const { return name_; }
  const std::vector<std::string>& args() const { return args_; }
  const AtomSet& pre() const { return pre_; }
  const AtomSet& add() const { return add_; }
  const AtomSet& del() const { return del_; }

  /// `name(a1,a2)`
  std::string str() const;

  /// Actions are identified by (name, args); effects follow from the schema.
  friend bool operator==(const GroundAction& a, const GroundAction& b) {
    return a.name_ == b.name_ && a.args_ == b.args_;
  }
  friend std::strong_ordering operator<=>(const GroundAction& a,
                                          const GroundAction& b) {
    if (auto c = a.name_ <=> b.name_; c != 0) return c;
    return a.args_ <=> b.args_;
  }

 private:
  std::string name_;
  std::vector<std::string> args_;
  AtomSet pre_;
  AtomSet add_;
  AtomSet del_;
};

struct Plan {
  std::vector<GroundAction> actions;

  std::size_t cost() const { return actions.size(); }
  std::size_t size() const { return actions.size(); }
  bool empty() const { return actions.empty(); }

  friend bool operator==(const Plan&, const Plan&) = default;
};

/// A grounded planning problem. Actions are kept in canonical (name, args)
/// order; construction checks that every atom only mentions declared objects.
class Problem {
 public:
  Problem(std::vector<std::string> objects, std::vector<GroundAction> actions,
          State init, Goal goal, std::string domain = "blocksworld");

  const std::vector<std::string>& objects() const { return objects_; }
  const std::vector<GroundAction>& actions() const { return actions_; }
  const State& init() const { return init_; }
  const Goal& goal() const { return goal_; }
  const std::string& domain() const { return domain_; }

  bool has_object(std::string_view name) const;
  /// Library lookup by identity; nullptr when absent.
  const GroundAction* find_action(std::string_view name,
                                  const std::vector<std::string>& args) const;

  /// Same objects and action library with a different init/goal.
  Problem with(State init, Goal goal) const;

 private:
  std::vector<std::string> objects_;
  std::vector<GroundAction> actions_;
  State init_;
  Goal goal_;
  std::string domain_;
};

/// Pre(a) ⊆ s
bool applicable(const State& s, const GroundAction& a);

/// (s \ Del(a)) ∪ Add(a). Throws ContractError if `a` is not applicable.
State apply(const State& s, const GroundAction& a);

/// Applies effects without checking preconditions.
State apply_unchecked(const State& s, const GroundAction& a);

/// g ⊆ s
bool entails(const State& s, const Goal& g);

/// Applicable library actions in canonical order.
std::vector<GroundAction> applicable_actions(const State& s, const Problem& p);

}  // namespace symplanner
