#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include <json.hpp>

#include "symplanner/agents.hpp"
#include "symplanner/core.hpp"
#include "symplanner/simulator.hpp"
#include "symplanner/trace.hpp"

namespace symplanner::search {

using agents::CandidateTrajectory;
using agents::Rng;

struct SearchConfig {
  int steps = 16;        // T
  int proposals = 3;     // N
  int beam = 3;          // b
  int ic_retries = 3;    // R
  int cr_opponents = 1;  // k
  std::uint64_t seed = 0;
  bool ic = true;
  /// Pairwise tournament ranking; independent ratings when off.
  bool cr = true;
  /// Simulator-tracked states; model-predicted states when off.
  bool symbolic = true;
  /// Cap on policy calls (propose and repair) per search.
  std::optional<std::size_t> policy_budget;
  /// Non-symbolic mode without predicted state text: chance that the
  /// built-in belief tracker forgets one atom after a step.
  double belief_noise = 0.1;

  /// Throws ConfigError when a bound is violated.
  void validate() const;
  nlohmann::json to_json() const;
  static SearchConfig from_json(const nlohmann::json& j);
};

/// Shared per-search bookkeeping.
struct Counters {
  std::size_t policy_calls = 0;
  std::size_t discriminator_calls = 0;
  std::size_t discriminator_failures = 0;
};

struct Environment {
  const Problem& problem;
  agents::Policy& policy;
  agents::Discriminator& discriminator;
  const SearchConfig& cfg;
  Rng& rng;
  Counters& counters;
  Trace* trace = nullptr;

  bool budget_left() const {
    return !cfg.policy_budget || counters.policy_calls < *cfg.policy_budget;
  }
  void emit(const std::string& type, nlohmann::json data) const {
    if (trace) trace->emit(type, std::move(data));
  }
};

struct ExpansionEntry {
  agents::Proposal proposal;
  /// The library action the text resolved to, if it did.
  std::optional<GroundAction> action;
  StepResult result;
};

/// N proposals for `c`, each stepped against c.state.
std::vector<ExpansionEntry> expand(const CandidateTrajectory& c, Environment& env);

struct IcResult {
  /// The accepted proposal and its successor; absent when pruned.
  std::optional<agents::Proposal> accepted;
  std::optional<State> next;
  std::vector<agents::Failure> history;

  bool pruned() const { return !accepted.has_value(); }
};

/// Repairs one failed proposal up to R times. Policy errors count as
/// failed retries.
IcResult ic_loop(const CandidateTrajectory& c, const agents::Proposal& failed, const TypedError& err,
                 Environment& env);

/// Opponent lists for the round-robin tournament: the candidate at position
/// p of `order` meets the next k positions, cyclically (k capped at m-1).
std::vector<std::vector<std::size_t>> opponents(const std::vector<std::size_t>& order, std::size_t k);

/// score(i) = Σ_{j ∈ opp(i)} ℓ_ij with each unordered pair queried once
/// through `prefer(i, j)` and ℓ_ji = 1 - ℓ_ij.
std::vector<double> tournament_scores(std::size_t m, const std::vector<std::vector<std::size_t>>& opp,
                                      const std::function<double(std::size_t, std::size_t)>& prefer);

/// Indices of the `b` best scores; ties by lower index.
std::vector<std::size_t> top_k(const std::vector<double>& scores, std::size_t b);

/// Contrastive ranking: seeded opponent order, tournament, TopK. A failing
/// discriminator degrades that pair to 0.5.
std::vector<CandidateTrajectory> cr_rank(std::vector<CandidateTrajectory> cands, std::size_t b, std::size_t k,
                                         Environment& env);

/// Independent 1..10 ratings, TopK; ties by insertion order.
std::vector<CandidateTrajectory> rating_rank(std::vector<CandidateTrajectory> cands, std::size_t b,
                                             Environment& env);

struct SearchOutcome {
  std::optional<Plan> best;
  /// Completed plans in completion order.
  std::vector<Plan> done;
  std::size_t done_count = 0;
  std::size_t steps_used = 0;
  std::size_t policy_calls = 0;
  std::size_t discriminator_calls = 0;
  std::size_t discriminator_failures = 0;
  bool budget_exhausted = false;
  Trace trace;

  friend bool operator==(const SearchOutcome&, const SearchOutcome&) = default;
};

/// The beam search. The returned outcome's done pool only ever holds plans
/// that validate to ValidAndGoal.
SearchOutcome run(const Problem& p, agents::Policy& policy, agents::Discriminator& disc, const SearchConfig& cfg,
                  bool record_trace = true);

}  // namespace symplanner::search
