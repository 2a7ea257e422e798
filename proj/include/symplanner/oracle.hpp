#pragma once

#include <cstddef>
#include <memory>
#include <optional>

#include "symplanner/core.hpp"

namespace symplanner::oracle {

/// Largest instance the exact planner accepts.
inline constexpr std::size_t kMaxObjects = 6;
/// Largest instance enumerate_reachable accepts.
inline constexpr std::size_t kMaxEnumerateObjects = 5;

/// Shortest plan from p.init() to any goal-entailing state, or nullopt when
/// the goal is unreachable. Breadth-first with successors expanded in
/// canonical action order, so the result is deterministic.
std::optional<Plan> solve_optimal(const Problem& p);

/// Length of a shortest plan from `s` to a state entailing `g`; nullopt
/// means unreachable.
std::optional<int> distance(const State& s, const Goal& g, const Problem& p);

/// Number of states reachable from the all-on-table, hand-empty state over
/// p's objects.
std::size_t enumerate_reachable(const Problem& p);

/// Goal distances for every state reachable from p.init(), computed once by
/// a forward sweep and a backward breadth-first pass. Lookups for states
/// outside the reachable set fall back to a forward search whose result is
/// memoized; all member functions are safe to call concurrently.
class DistanceIndex {
 public:
  DistanceIndex(const Problem& p, const Goal& g);
  explicit DistanceIndex(const Problem& p) : DistanceIndex(p, p.goal()) {}
  ~DistanceIndex();
  DistanceIndex(DistanceIndex&&) noexcept;
  DistanceIndex& operator=(DistanceIndex&&) noexcept;

  std::optional<int> distance(const State& s) const;

  /// First library action (canonical order) that is applicable in `s` and
  /// reduces the distance by one; nullopt at the goal or when unreachable.
  std::optional<GroundAction> next_optimal_action(const State& s) const;

  /// Number of states in the reachable set.
  std::size_t size() const;
  const Problem& problem() const;
  const Goal& goal() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace symplanner::oracle
