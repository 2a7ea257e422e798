#include <doctest.h>

#include <random>

#include "support/examples.hpp"
#include "support/fixtures.hpp"
#include "support/reference.hpp"
#include "symplanner/oracle.hpp"
#include "symplanner/simulator.hpp"

using namespace symplanner;
using fixtures::state;
namespace bw = symplanner::blocksworld;

TEST_CASE("successful step returns the successor") {
  auto p = fixtures::example1();
  auto r = step_text(p, p.init(), "Unstack the orange block from the blue block");
  REQUIRE(r.ok());
  CHECK(r.state() == state({"clear(blue)", "clear(red)", "holding(orange)", "ontable(blue)", "ontable(red)"}));
}

TEST_CASE("typed errors") {
  auto p = fixtures::example1();
  auto err_of = [&](const State& s, const char* text) {
    auto r = step_text(p, s, text);
    REQUIRE_FALSE(r.ok());
    return r.error();
  };
  auto e = err_of(p.init(), "Pick up the blue block");
  CHECK(e.str() == "NotClear(blue)");
  CHECK(e.action == "Pick up the blue block");
  CHECK(e.message() == "the blue block is not clear");
  CHECK(e.missing == AtomSet::from_strings({"clear(blue)"}));

  auto holding = step_text(p, p.init(), "Unstack the orange block from the blue block").state();
  CHECK(err_of(holding, "Pick up the red block").str() == "HandNotEmpty");
  CHECK(err_of(p.init(), "Put down the red block").str() == "HandEmpty");
  CHECK(err_of(holding, "Put down the red block").str() == "NotHolding(red)");
  CHECK(err_of(p.init(), "Pick up the orange block").str() == "NotOnTable(orange)");
  CHECK(err_of(p.init(), "Unstack the red block from the blue block").str() == "NotOnTop(red,blue)");
  CHECK(err_of(p.init(), "Stack the red block on top of the red block").str() == "SelfStack(red)");
  CHECK(err_of(p.init(), "Pick up the green block").str() == "UnknownBlock(green)");
  CHECK(err_of(p.init(), "Paint the red block").str() == "MalformedAction");
  auto held_red = step_text(p, step_text(p, holding, "Put down the orange block").state(), "Pick up the red block");
  REQUIRE(held_red.ok());
  auto stacked = step_text(p, held_red.state(), "Stack the red block on the orange block").state();
  auto again = step_text(p, stacked, "Pick up the blue block").state();
  CHECK(err_of(again, "Stack the blue block on the orange block").str() == "NotClear(orange)");
  CHECK(e.to_json()["category"] == "NotClear");
}

TEST_CASE("missing preconditions match the reference set difference") {
  std::vector<std::string> blocks{"a", "b", "c"};
  for (const auto& rs : ref::reachable(blocks)) {
    auto s = ref::to_state(rs);
    for (const auto& ra : ref::actions(blocks)) {
      auto r = step(s, bw::make_action(ra.name, ra.args));
      CHECK(r.ok() == ref::applicable(rs, ra));
      if (r.ok()) {
        CHECK(ref::to_set(r.state().atoms) == ref::apply(rs, ra));
      } else {
        CHECK(ref::to_set(r.error().missing) == ref::missing(rs, ra));
        CHECK_FALSE(r.error().missing.empty());
      }
    }
  }
}

TEST_CASE("validate verdicts") {
  auto p = fixtures::sussman();
  auto plan = *oracle::solve_optimal(p);
  REQUIRE(plan.size() == 6);
  auto ok = validate(p, plan);
  CHECK(ok.kind == Verdict::Kind::ValidAndGoal);
  CHECK(ok.success());
  CHECK(entails(ok.state, p.goal()));

  Plan truncated{{plan.actions.begin(), plan.actions.end() - 1}};
  CHECK(validate(p, truncated).kind == Verdict::Kind::ValidNotGoal);

  Plan swapped = plan;
  std::swap(swapped.actions[1], swapped.actions[2]);
  auto bad = validate(p, swapped);
  CHECK(bad.kind == Verdict::Kind::Invalid);
  CHECK(bad.failed_at == std::size_t{1});
  REQUIRE(bad.error);
  CHECK(bad.state == apply(p.init(), plan.actions[0]));

  Plan outside{{bw::make_action("pickup", {"z"})}};
  auto o = validate(p, outside);
  CHECK(o.kind == Verdict::Kind::Invalid);
  CHECK(o.error->str() == "UnknownBlock(z)");
  CHECK(validate(p, Plan{}).kind == Verdict::Kind::ValidNotGoal);
  CHECK(verdict_name(Verdict::Kind::ValidAndGoal) == "ValidAndGoal");
  CHECK(bad.to_json()["failed_at"] == 1);
}

TEST_CASE("validate agrees with an independent fold on random plans") {
  std::mt19937_64 rng(5);
  std::vector<std::string> blocks{"a", "b", "c", "d"};
  auto states = ref::reachable(blocks);
  auto acts = ref::actions(blocks);
  auto vocab = bw::Vocabulary(blocks);
  for (int trial = 0; trial < 300; ++trial) {
    auto init = states[rng() % states.size()];
    auto goal = states[rng() % states.size()];
    ref::Set goal_on;
    for (const auto& a : goal) {
      if (a.rfind("on(", 0) == 0) goal_on.insert(a);
    }
    auto p = bw::make_problem(vocab, ref::to_state(init), Goal{ref::to_state(goal_on).atoms});
    Plan plan;
    std::vector<ref::Action> raw;
    for (std::size_t i = 0, n = rng() % 8; i < n; ++i) {
      const auto& ra = acts[rng() % acts.size()];
      raw.push_back(ra);
      plan.actions.push_back(bw::make_action(ra.name, ra.args));
    }
    auto v = validate(p, plan);
    ref::Set s = init;
    std::optional<std::size_t> fail;
    for (std::size_t i = 0; i < raw.size(); ++i) {
      if (!ref::applicable(s, raw[i])) {
        fail = i;
        break;
      }
      s = ref::apply(s, raw[i]);
    }
    CHECK(v.failed_at == fail);
    if (!fail) {
      bool goal_ok = std::includes(s.begin(), s.end(), goal_on.begin(), goal_on.end());
      CHECK(v.success() == goal_ok);
      CHECK(ref::to_set(v.state.atoms) == s);
    }
    auto run = run_plan(p.init(), plan);
    CHECK(run.ok() == !fail.has_value());
    if (fail) CHECK(run.failure().index == *fail);
  }
}

TEST_CASE("validate_text on the embedded worked examples") {
  auto ex = examples::generation();
  REQUIRE(ex.size() >= 2);
  std::vector<std::string> lines;
  for (const auto& s : ex[0].steps) lines.push_back(s.action);
  CHECK(validate_text(fixtures::example1(), lines).success());
  lines.clear();
  for (const auto& s : ex[1].steps) lines.push_back(s.action);
  CHECK(validate_text(fixtures::example2(), lines).success());
  auto v = validate_text(fixtures::example1(), {"Pick up the blue block"});
  CHECK(v.failed_at == std::size_t{0});
  CHECK(v.error->action == "Pick up the blue block");
}
