#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "symplanner/blocksworld.hpp"
#include "symplanner/core.hpp"

namespace symplanner {

enum class ErrorCategory {
  HandNotEmpty,
  HandEmpty,
  NotClear,
  NotOnTable,
  NotHolding,
  NotOnTop,
  SelfStack,
  UnknownBlock,
  MalformedAction,
};

std::string_view category_name(ErrorCategory c);

/// Machine-readable reason an action could not be executed.
struct TypedError {
  ErrorCategory category = ErrorCategory::MalformedAction;
  /// Blocks named by the category, e.g. {"blue"} for NotClear(blue).
  std::vector<std::string> subjects;
  /// The offending action as text (raw proposal text or canonical str()).
  std::string action;
  /// Pre(a) \ s for library actions; empty when the action did not resolve.
  AtomSet missing;

  /// `NotClear(blue)`, `HandNotEmpty`, ...
  std::string str() const;
  /// One-line natural-language explanation for feedback prompts and logs.
  std::string message() const;
  nlohmann::json to_json() const;

  friend bool operator==(const TypedError&, const TypedError&) = default;
};

/// Either the successor state or the typed failure; never both.
class StepResult {
 public:
  StepResult(State next) : value_(std::move(next)) {}          // NOLINT
  StepResult(TypedError err) : value_(std::move(err)) {}       // NOLINT

  bool ok() const { return std::holds_alternative<State>(value_); }
  explicit operator bool() const { return ok(); }
  const State& state() const { return std::get<State>(value_); }
  const TypedError& error() const { return std::get<TypedError>(value_); }

 private:
  std::variant<State, TypedError> value_;
};

/// step(s, a): γ(s, a) when Pre(a) ⊆ s, otherwise the classified error.
/// Classification is by operator name and does not consult a library.
StepResult step(const State& s, const GroundAction& a);

/// Parses `text`, resolves it against the problem's action library and
/// steps it. Parse failures surface as UnknownBlock / MalformedAction /
/// SelfStack errors.
StepResult step_text(const Problem& p, const State& s, std::string_view text);

/// Library action named by `text`, or the error that prevents resolving it.
std::variant<GroundAction, TypedError> resolve_action(const Problem& p, std::string_view text);

struct PlanFailure {
  std::size_t index = 0;
  TypedError error;
  /// State in which the failing action was attempted.
  State state;
};

/// Folds step over a plan, stopping at the first failure.
class RunResult {
 public:
  RunResult(State final_state) : value_(std::move(final_state)) {}  // NOLINT
  RunResult(PlanFailure f) : value_(std::move(f)) {}                // NOLINT

  bool ok() const { return std::holds_alternative<State>(value_); }
  const State& final_state() const { return std::get<State>(value_); }
  const PlanFailure& failure() const { return std::get<PlanFailure>(value_); }

 private:
  std::variant<State, PlanFailure> value_;
};

RunResult run_plan(const State& s0, const Plan& plan);

struct Verdict {
  enum class Kind { ValidAndGoal, ValidNotGoal, Invalid };

  Kind kind = Kind::Invalid;
  std::optional<std::size_t> failed_at;
  std::optional<TypedError> error;
  /// Final state for valid plans; the state before the failing step otherwise.
  State state;
  std::size_t plan_length = 0;

  bool success() const { return kind == Kind::ValidAndGoal; }
  nlohmann::json to_json() const;
};

std::string_view verdict_name(Verdict::Kind k);

/// Validates against the problem's grounded library: actions outside it are
/// rejected before any precondition check.
Verdict validate(const Problem& p, const Plan& plan);

/// Same as validate for one natural-language action per entry.
Verdict validate_text(const Problem& p, const std::vector<std::string>& lines);

}  // namespace symplanner
