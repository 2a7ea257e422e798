#include "symplanner/core.hpp"

#include <algorithm>
#include <cctype>
#include <iterator>

namespace symplanner {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

void normalize(std::vector<Atom>& atoms) {
  std::sort(atoms.begin(), atoms.end());
  atoms.erase(std::unique(atoms.begin(), atoms.end()), atoms.end());
}

void check_mentions(const AtomSet& atoms, const Problem& p, std::string_view where) {
  for (const auto& a : atoms) {
    for (const auto& arg : a.args) {
      if (!p.has_object(arg)) {
        throw ConfigError(std::string(where) + " atom " + a.str() +
                          " mentions undeclared object '" + arg + "'");
      }
    }
  }
}

}  // namespace

bool is_identifier(std::string_view s) {
  if (s.empty()) return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_' || c == '-';
  });
}

// ---------------------------------------------------------------- Atom

Atom::Atom(std::string pred, std::vector<std::string> arguments)
    : predicate(std::move(pred)), args(std::move(arguments)) {}

std::string Atom::str() const {
  if (args.empty()) return predicate;
  std::string out = predicate + "(";
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (i) out += ',';
    out += args[i];
  }
  out += ')';
  return out;
}

Atom Atom::parse(std::string_view text) {
  text = trim(text);
  auto open = text.find('(');
  if (open == std::string_view::npos) {
    auto name = lower(text);
    if (!is_identifier(name)) throw std::invalid_argument("bad atom: '" + std::string(text) + "'");
    return Atom(std::move(name));
  }
  if (text.back() != ')') throw std::invalid_argument("bad atom: '" + std::string(text) + "'");
  auto name = lower(trim(text.substr(0, open)));
  if (!is_identifier(name)) throw std::invalid_argument("bad atom: '" + std::string(text) + "'");
  std::vector<std::string> args;
  auto inner = text.substr(open + 1, text.size() - open - 2);
  if (!trim(inner).empty()) {
    std::size_t start = 0;
    while (true) {
      auto comma = inner.find(',', start);
      auto arg = lower(trim(inner.substr(start, comma - start)));
      if (!is_identifier(arg)) throw std::invalid_argument("bad atom: '" + std::string(text) + "'");
      args.push_back(std::move(arg));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
  }
  return Atom(std::move(name), std::move(args));
}

// ---------------------------------------------------------------- AtomSet

AtomSet::AtomSet(std::initializer_list<Atom> atoms) : atoms_(atoms) { normalize(atoms_); }

AtomSet::AtomSet(std::vector<Atom> atoms) : atoms_(std::move(atoms)) { normalize(atoms_); }

AtomSet AtomSet::from_strings(const std::vector<std::string>& atoms) {
  std::vector<Atom> out;
  out.reserve(atoms.size());
  for (const auto& s : atoms) out.push_back(Atom::parse(s));
  return AtomSet(std::move(out));
}

bool AtomSet::contains(const Atom& a) const {
  return std::binary_search(atoms_.begin(), atoms_.end(), a);
}

bool AtomSet::includes(const AtomSet& other) const {
  return std::includes(atoms_.begin(), atoms_.end(), other.atoms_.begin(), other.atoms_.end());
}

bool AtomSet::insert(Atom a) {
  auto it = std::lower_bound(atoms_.begin(), atoms_.end(), a);
  if (it != atoms_.end() && *it == a) return false;
  atoms_.insert(it, std::move(a));
  return true;
}

bool AtomSet::erase(const Atom& a) {
  auto it = std::lower_bound(atoms_.begin(), atoms_.end(), a);
  if (it == atoms_.end() || !(*it == a)) return false;
  atoms_.erase(it);
  return true;
}

AtomSet AtomSet::minus(const AtomSet& other) const {
  AtomSet out;
  std::set_difference(atoms_.begin(), atoms_.end(), other.atoms_.begin(), other.atoms_.end(),
                      std::back_inserter(out.atoms_));
  return out;
}

AtomSet AtomSet::united(const AtomSet& other) const {
  AtomSet out;
  std::set_union(atoms_.begin(), atoms_.end(), other.atoms_.begin(), other.atoms_.end(),
                 std::back_inserter(out.atoms_));
  return out;
}

AtomSet AtomSet::intersected(const AtomSet& other) const {
  AtomSet out;
  std::set_intersection(atoms_.begin(), atoms_.end(), other.atoms_.begin(), other.atoms_.end(),
                        std::back_inserter(out.atoms_));
  return out;
}

std::vector<std::string> AtomSet::to_strings() const {
  std::vector<std::string> out;
  out.reserve(atoms_.size());
  for (const auto& a : atoms_) out.push_back(a.str());
  // Structural order and string order agree for identifier arguments; the
  // sort keeps the serialization contract independent of that fact.
  std::sort(out.begin(), out.end());
  return out;
}

std::string AtomSet::str() const {
  std::string out = "{";
  bool first = true;
  for (const auto& s : to_strings()) {
    if (!first) out += ", ";
    out += s;
    first = false;
  }
  out += "}";
  return out;
}

std::string State::key() const {
  std::string out;
  for (const auto& s : atoms.to_strings()) {
    out += s;
    out += ' ';
  }
  return out;
}

// ---------------------------------------------------------------- GroundAction

GroundAction::GroundAction(std::string name, std::vector<std::string> args, AtomSet pre,
                           AtomSet add, AtomSet del)
    : name_(std::move(name)),
      args_(std::move(args)),
      pre_(std::move(pre)),
      add_(std::move(add)),
      del_(std::move(del)) {
  if (!add_.intersected(del_).empty()) {
    throw ConfigError("action " + str() + " has overlapping add and delete effects");
  }
}

std::string GroundAction::str() const { return Atom(name_, args_).str(); }

// ---------------------------------------------------------------- Problem

Problem::Problem(std::vector<std::string> objects, std::vector<GroundAction> actions, State init,
                 Goal goal, std::string domain)
    : objects_(std::move(objects)),
      actions_(std::move(actions)),
      init_(std::move(init)),
      goal_(std::move(goal)),
      domain_(std::move(domain)) {
  std::sort(objects_.begin(), objects_.end());
  if (std::adjacent_find(objects_.begin(), objects_.end()) != objects_.end()) {
    throw ConfigError("duplicate object names");
  }
  for (const auto& o : objects_) {
    if (!is_identifier(o)) throw ConfigError("object name '" + o + "' is not a lowercase identifier");
  }
  std::sort(actions_.begin(), actions_.end());
  if (std::adjacent_find(actions_.begin(), actions_.end()) != actions_.end()) {
    throw ConfigError("duplicate ground actions");
  }
  check_mentions(init_.atoms, *this, "init");
  check_mentions(goal_.atoms, *this, "goal");
  for (const auto& a : actions_) {
    check_mentions(a.pre(), *this, a.str() + " precondition");
    check_mentions(a.add(), *this, a.str() + " add");
    check_mentions(a.del(), *this, a.str() + " delete");
  }
}

bool Problem::has_object(std::string_view name) const {
  return std::binary_search(objects_.begin(), objects_.end(), name,
                            [](const auto& a, const auto& b) { return std::string_view(a) < std::string_view(b); });
}

const GroundAction* Problem::find_action(std::string_view name,
                                         const std::vector<std::string>& args) const {
  auto it = std::lower_bound(actions_.begin(), actions_.end(), 0,
                             [&](const GroundAction& a, int) {
                               if (a.name() != name) return std::string_view(a.name()) < name;
                               return a.args() < args;
                             });
  if (it != actions_.end() && it->name() == name && it->args() == args) return &*it;
  return nullptr;
}

Problem Problem::with(State init, Goal goal) const {
  return Problem(objects_, actions_, std::move(init), std::move(goal), domain_);
}

// ---------------------------------------------------------------- semantics

bool applicable(const State& s, const GroundAction& a) { return s.atoms.includes(a.pre()); }

State apply(const State& s, const GroundAction& a) {
  if (!applicable(s, a)) {
    throw ContractError("apply: " + a.str() + " is not applicable in " + s.atoms.str());
  }
  return apply_unchecked(s, a);
}

State apply_unchecked(const State& s, const GroundAction& a) {
  return State{s.atoms.minus(a.del()).united(a.add())};
}

bool entails(const State& s, const Goal& g) { return s.atoms.includes(g.atoms); }

std::vector<GroundAction> applicable_actions(const State& s, const Problem& p) {
  std::vector<GroundAction> out;
  for (const auto& a : p.actions()) {
    if (applicable(s, a)) out.push_back(a);
  }
  return out;
}

}  // namespace symplanner
