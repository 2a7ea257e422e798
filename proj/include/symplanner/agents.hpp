#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "symplanner/core.hpp"
#include "symplanner/simulator.hpp"

namespace symplanner {
namespace remote {
class ChatClient;
}

namespace agents {

using Rng = std::mt19937_64;

/// A node of the search: the state the planner believes it is in and the
/// plan that led there.
struct CandidateTrajectory {
  /// Believed state. Equal to true_state whenever the symbolic mode is on.
  State state;
  Plan plan;
  /// Proposal text accepted at each step.
  std::vector<std::string> action_texts;
  /// Natural-language state after each step (rendered or model-predicted).
  std::vector<std::string> state_texts;
  /// Last model-predicted state text (non-symbolic mode only).
  std::optional<std::string> predicted_state_text;
  /// Ground truth, tracked silently: γ(I, plan) while every action applied.
  State true_state;
  bool true_valid = true;
  /// Creation order within one search.
  std::size_t id = 0;

  static CandidateTrajectory root(const Problem& p);
};

/// One rejected attempt for the current step.
struct Failure {
  std::string action;
  TypedError error;
};

struct ProposalContext {
  const Problem& problem;
  const CandidateTrajectory& candidate;
  /// Empty for the first proposal of a step; grows by one per repair.
  std::vector<Failure> failure_history;

  const Goal& goal() const { return problem.goal(); }
  const State& state() const { return candidate.state; }
  const Plan& plan() const { return candidate.plan; }
};

struct Proposal {
  std::string action;
  /// Next-state text predicted alongside the action, if the policy gives one.
  std::optional<std::string> predicted_state;
};

class Policy {
 public:
  virtual ~Policy() = default;
  virtual std::string name() const = 0;
  /// Up to n proposals for the next step.
  virtual std::vector<Proposal> propose(const ProposalContext& ctx, int n, Rng& rng) = 0;
  /// One new proposal after ctx.failure_history (non-empty) went wrong.
  virtual Proposal repair(const ProposalContext& ctx, Rng& rng) = 0;
};

/// Raised by discriminators that cannot produce a judgement; the ranking
/// layer treats the pair as a tie.
class DiscriminatorError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class Discriminator {
 public:
  virtual ~Discriminator() = default;
  virtual std::string name() const = 0;
  /// ℓ ∈ [0,1]: probability that `a` is the better candidate for p.goal().
  virtual double prefer(const CandidateTrajectory& a, const CandidateTrajectory& b, const Problem& p) = 0;
  /// Independent quality score in 1..10.
  virtual int rate(const CandidateTrajectory& c, const Problem& p) = 0;
};

// ---------------------------------------------------------------- built-ins

/// Uniform over the applicable actions of the believed state.
class RandomValidPolicy : public Policy {
 public:
  std::string name() const override { return "random"; }
  std::vector<Proposal> propose(const ProposalContext& ctx, int n, Rng& rng) override;
  Proposal repair(const ProposalContext& ctx, Rng& rng) override;
};

/// Applicable action maximizing satisfied goal atoms after one step; ties
/// broken uniformly at random.
class GoalCountGreedyPolicy : public Policy {
 public:
  std::string name() const override { return "greedy"; }
  std::vector<Proposal> propose(const ProposalContext& ctx, int n, Rng& rng) override;
  Proposal repair(const ProposalContext& ctx, Rng& rng) override;
};

/// The oracle's next optimal action with probability 1 - epsilon, otherwise
/// a uniform draw from the whole grounded library (which may be
/// inapplicable, so corrections get exercised).
class OracleNoisyPolicy : public Policy {
 public:
  OracleNoisyPolicy(const Problem& p, double epsilon);
  ~OracleNoisyPolicy() override;
  std::string name() const override;
  std::vector<Proposal> propose(const ProposalContext& ctx, int n, Rng& rng) override;
  Proposal repair(const ProposalContext& ctx, Rng& rng) override;
  double epsilon() const { return epsilon_; }

 private:
  std::optional<GroundAction> oracle_action(const State& s) const;
  struct Index;
  std::unique_ptr<Index> index_;
  double epsilon_;
};

/// Scripted proposals, consumed cyclically by propose and repair alike.
class ReplayPolicy : public Policy {
 public:
  explicit ReplayPolicy(std::vector<std::string> script);
  std::string name() const override { return "replay"; }
  std::vector<Proposal> propose(const ProposalContext& ctx, int n, Rng& rng) override;
  Proposal repair(const ProposalContext& ctx, Rng& rng) override;

 private:
  std::string next();
  std::vector<std::string> script_;
  std::size_t cursor_ = 0;
};

/// ℓ from exact goal distances: 1 when a is closer, 0 when farther, 0.5 on ties.
class OracleDistanceDiscriminator : public Discriminator {
 public:
  explicit OracleDistanceDiscriminator(const Problem& p);
  ~OracleDistanceDiscriminator() override;
  std::string name() const override { return "oracle"; }
  double prefer(const CandidateTrajectory& a, const CandidateTrajectory& b, const Problem& p) override;
  int rate(const CandidateTrajectory& c, const Problem& p) override;
  /// Goal distance of a state; nullopt when unreachable.
  std::optional<int> distance(const State& s) const;

 private:
  struct Index;
  std::unique_ptr<Index> index_;
};

/// ℓ from the number of satisfied goal atoms.
class GoalCountDiscriminator : public Discriminator {
 public:
  std::string name() const override { return "goalcount"; }
  double prefer(const CandidateTrajectory& a, const CandidateTrajectory& b, const Problem& p) override;
  /// 1 + round(9 * satisfied / |goal|).
  int rate(const CandidateTrajectory& c, const Problem& p) override;
};

/// Seeded coin flips: ℓ ∈ {0, 1} by a hash of the pair, antisymmetric, 0.5
/// for identical candidates.
class RandomDiscriminator : public Discriminator {
 public:
  explicit RandomDiscriminator(std::uint64_t seed) : seed_(seed) {}
  std::string name() const override { return "random"; }
  double prefer(const CandidateTrajectory& a, const CandidateTrajectory& b, const Problem& p) override;
  int rate(const CandidateTrajectory& c, const Problem& p) override;

 private:
  std::uint64_t seed_;
};

std::size_t satisfied_goal_atoms(const State& s, const Goal& g);

// ---------------------------------------------------------------- remote

/// Prompt text a remote agent sends; exposed for tests and dry runs.
namespace prompt {
/// "Action k"/"State k" lines of the candidate's steps, each followed by
/// `line_end` and a newline.
std::string trajectory_lines(const CandidateTrajectory& c, std::size_t first_step, const std::string& line_end);
std::string generation(const ProposalContext& ctx);
std::string iterative_correction(const ProposalContext& ctx);
std::string contrastive_ranking(const CandidateTrajectory& a, const CandidateTrajectory& b, const Problem& p);
std::string plan_rating(const CandidateTrajectory& c, const Problem& p);
std::string action_parsing(std::string_view action);
}  // namespace prompt

/// Action (and state, if present) for step `step` (1-based) in a model reply
/// shaped like `"Action 3": "..."` / `"State 3": "..."`. Falls back to the
/// first "Action" entry, then to the first non-empty line.
Proposal parse_proposal_reply(std::string_view reply, std::size_t step);

/// 1-based option chosen in a "Conclusion"; nullopt if none is found.
std::optional<int> parse_preference_reply(std::string_view reply);

/// First integer of a rating reply, clamped to 1..10; nullopt if none.
std::optional<int> parse_rating_reply(std::string_view reply);

struct RemoteOptions {
  /// Attempts per discriminator query before giving up with DiscriminatorError.
  int disc_retries = 2;
  /// Ask the model to parse proposals the rule parser rejects.
  bool llm_parse_fallback = false;
};

class RemoteLlmPolicy : public Policy {
 public:
  RemoteLlmPolicy(std::shared_ptr<remote::ChatClient> client, RemoteOptions opts = {});
  std::string name() const override { return "remote"; }
  /// n independent generation requests, issued concurrently.
  std::vector<Proposal> propose(const ProposalContext& ctx, int n, Rng& rng) override;
  Proposal repair(const ProposalContext& ctx, Rng& rng) override;

 private:
  Proposal finish(Proposal p, const Problem& problem);
  std::shared_ptr<remote::ChatClient> client_;
  RemoteOptions opts_;
};

class RemoteLlmDiscriminator : public Discriminator {
 public:
  RemoteLlmDiscriminator(std::shared_ptr<remote::ChatClient> client, RemoteOptions opts = {});
  std::string name() const override { return "remote"; }
  double prefer(const CandidateTrajectory& a, const CandidateTrajectory& b, const Problem& p) override;
  int rate(const CandidateTrajectory& c, const Problem& p) override;

 private:
  std::shared_ptr<remote::ChatClient> client_;
  RemoteOptions opts_;
};

// ---------------------------------------------------------------- factories

struct AgentOptions {
  /// Required for "remote" specs.
  std::shared_ptr<remote::ChatClient> client;
  RemoteOptions remote;
};

/// random | greedy | oracle | oracle-noisy:EPS | replay:FILE | remote.
/// Throws ConfigError for unknown specs.
std::unique_ptr<Policy> make_policy(std::string_view spec, const Problem& p, const AgentOptions& opts = {});

/// oracle | goalcount | random | remote.
std::unique_ptr<Discriminator> make_discriminator(std::string_view spec, const Problem& p, std::uint64_t seed,
                                                  const AgentOptions& opts = {});

/// Checks a spec without building the agent (replay files must exist).
void check_policy_spec(std::string_view spec);
void check_discriminator_spec(std::string_view spec);

}  // namespace agents
}  // namespace symplanner
