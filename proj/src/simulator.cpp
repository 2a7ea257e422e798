#include "symplanner/simulator.hpp"

namespace symplanner {

namespace bw = blocksworld;

namespace {

TypedError make_error(ErrorCategory c, std::vector<std::string> subjects, std::string action,
                      AtomSet missing = {}) {
  return TypedError{c, std::move(subjects), std::move(action), std::move(missing)};
}

/// First-match classification of an inapplicable action.
TypedError classify(const State& s, const GroundAction& a) {
  const auto& args = a.args();
  const auto& n = a.name();
  auto missing = a.pre().minus(s.atoms);
  auto has = [&](const Atom& atom) { return s.atoms.contains(atom); };
  auto err = [&](ErrorCategory c, std::vector<std::string> subj) {
    return make_error(c, std::move(subj), a.str(), missing);
  };

  bool unary = (n == bw::kPickup || n == bw::kPutdown) && args.size() == 1;
  bool binary = (n == bw::kStack || n == bw::kUnstack) && args.size() == 2;
  if (!unary && !binary) return err(ErrorCategory::MalformedAction, {});
  if (binary && args[0] == args[1]) return err(ErrorCategory::SelfStack, {args[0]});

  const auto& x = args[0];
  if (n == bw::kPickup || n == bw::kUnstack) {
    if (!has(bw::handempty())) return err(ErrorCategory::HandNotEmpty, {});
  } else if (!has(bw::holding(x))) {
    if (has(bw::handempty())) return err(ErrorCategory::HandEmpty, {});
    return err(ErrorCategory::NotHolding, {x});
  }
  if (n == bw::kPickup && !has(bw::ontable(x))) return err(ErrorCategory::NotOnTable, {x});
  if (n == bw::kUnstack && !has(bw::on(x, args[1]))) return err(ErrorCategory::NotOnTop, {x, args[1]});
  if ((n == bw::kPickup || n == bw::kUnstack) && !has(bw::clear(x))) {
    return err(ErrorCategory::NotClear, {x});
  }
  if (n == bw::kStack && !has(bw::clear(args[1]))) return err(ErrorCategory::NotClear, {args[1]});
  // Preconditions outside the blocksworld schema.
  return err(ErrorCategory::MalformedAction, {});
}

/// Errors for actions that are not members of the grounded library.
std::optional<TypedError> library_error(const Problem& p, const std::string& name,
                                        const std::vector<std::string>& args,
                                        const std::string& text) {
  for (const auto& b : args) {
    if (!p.has_object(b)) return make_error(ErrorCategory::UnknownBlock, {b}, text);
  }
  bool unary = (name == bw::kPickup || name == bw::kPutdown) && args.size() == 1;
  bool binary = (name == bw::kStack || name == bw::kUnstack) && args.size() == 2;
  if (!unary && !binary) return make_error(ErrorCategory::MalformedAction, {}, text);
  if (binary && args[0] == args[1]) return make_error(ErrorCategory::SelfStack, {args[0]}, text);
  if (!p.find_action(name, args)) return make_error(ErrorCategory::MalformedAction, {}, text);
  return std::nullopt;
}

}  // namespace

std::string_view category_name(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::HandNotEmpty: return "HandNotEmpty";
    case ErrorCategory::HandEmpty: return "HandEmpty";
    case ErrorCategory::NotClear: return "NotClear";
    case ErrorCategory::NotOnTable: return "NotOnTable";
    case ErrorCategory::NotHolding: return "NotHolding";
    case ErrorCategory::NotOnTop: return "NotOnTop";
    case ErrorCategory::SelfStack: return "SelfStack";
    case ErrorCategory::UnknownBlock: return "UnknownBlock";
    case ErrorCategory::MalformedAction: return "MalformedAction";
  }
  return "?";
}

std::string TypedError::str() const {
  std::string out(category_name(category));
  if (!subjects.empty()) {
    out += '(';
    for (std::size_t i = 0; i < subjects.size(); ++i) {
      if (i) out += ',';
      out += subjects[i];
    }
    out += ')';
  }
  return out;
}

std::string TypedError::message() const {
  auto block = [&](std::size_t i) { return "the " + subjects.at(i) + " block"; };
  switch (category) {
    case ErrorCategory::HandNotEmpty: return "the hand is not empty";
    case ErrorCategory::HandEmpty: return "the hand is empty, so there is nothing to put down or stack";
    case ErrorCategory::NotClear: return block(0) + " is not clear";
    case ErrorCategory::NotOnTable: return block(0) + " is not on the table";
    case ErrorCategory::NotHolding: return "the hand is not holding " + block(0);
    case ErrorCategory::NotOnTop: return block(0) + " is not on top of " + block(1);
    case ErrorCategory::SelfStack: return "a block cannot be stacked on or unstacked from itself";
    case ErrorCategory::UnknownBlock: return "there is no " + block(0);
    case ErrorCategory::MalformedAction: return "the action is not one of the four allowed actions";
  }
  return {};
}

nlohmann::json TypedError::to_json() const {
  return {{"category", std::string(category_name(category))},
          {"error", str()},
          {"action", action},
          {"missing", missing.to_strings()}};
}

StepResult step(const State& s, const GroundAction& a) {
  if (applicable(s, a)) return apply_unchecked(s, a);
  return classify(s, a);
}

std::variant<GroundAction, TypedError> resolve_action(const Problem& p, std::string_view text) {
  bw::ActionRef ref;
  try {
    ref = bw::parse_action_ref(text);
  } catch (const bw::ParseError&) {
    return make_error(ErrorCategory::MalformedAction, {}, std::string(text));
  }
  if (auto err = library_error(p, ref.name, ref.args, std::string(text))) return *err;
  return *p.find_action(ref.name, ref.args);
}

StepResult step_text(const Problem& p, const State& s, std::string_view text) {
  auto resolved = resolve_action(p, text);
  if (auto* err = std::get_if<TypedError>(&resolved)) return *err;
  auto result = step(s, std::get<GroundAction>(resolved));
  if (result.ok()) return result;
  auto err = result.error();
  err.action = std::string(text);
  return err;
}

RunResult run_plan(const State& s0, const Plan& plan) {
  State s = s0;
  for (std::size_t i = 0; i < plan.actions.size(); ++i) {
    auto r = step(s, plan.actions[i]);
    if (!r.ok()) return PlanFailure{i, r.error(), s};
    s = r.state();
  }
  return s;
}

std::string_view verdict_name(Verdict::Kind k) {
  switch (k) {
    case Verdict::Kind::ValidAndGoal: return "ValidAndGoal";
    case Verdict::Kind::ValidNotGoal: return "ValidNotGoal";
    case Verdict::Kind::Invalid: return "Invalid";
  }
  return "?";
}

nlohmann::json Verdict::to_json() const {
  nlohmann::json j{{"verdict", std::string(verdict_name(kind))}, {"plan_length", plan_length}};
  if (failed_at) j["failed_at"] = *failed_at;
  if (error) j["error"] = error->to_json();
  j["state"] = state.atoms.to_strings();
  return j;
}

Verdict validate(const Problem& p, const Plan& plan) {
  Verdict v;
  v.plan_length = plan.size();
  State s = p.init();
  for (std::size_t i = 0; i < plan.actions.size(); ++i) {
    const auto& a = plan.actions[i];
    if (auto err = library_error(p, a.name(), a.args(), a.str())) {
      v.failed_at = i;
      v.error = *err;
      v.state = s;
      return v;
    }
    auto r = step(s, a);
    if (!r.ok()) {
      v.failed_at = i;
      v.error = r.error();
      v.state = s;
      return v;
    }
    s = r.state();
  }
  v.kind = entails(s, p.goal()) ? Verdict::Kind::ValidAndGoal : Verdict::Kind::ValidNotGoal;
  v.state = std::move(s);
  return v;
}

Verdict validate_text(const Problem& p, const std::vector<std::string>& lines) {
  Verdict v;
  v.plan_length = lines.size();
  State s = p.init();
  for (std::size_t i = 0; i < lines.size(); ++i) {
    auto r = step_text(p, s, lines[i]);
    if (!r.ok()) {
      v.failed_at = i;
      v.error = r.error();
      v.state = s;
      return v;
    }
    s = r.state();
  }
  v.kind = entails(s, p.goal()) ? Verdict::Kind::ValidAndGoal : Verdict::Kind::ValidNotGoal;
  v.state = std::move(s);
  return v;
}

}  // namespace symplanner
