#include "symplanner/search.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <unordered_set>

#include "symplanner/blocksworld.hpp"

namespace symplanner::search {

namespace bw = blocksworld;
using agents::Failure;
using agents::Proposal;
using agents::ProposalContext;

void SearchConfig::validate() const {
  if (steps < 1) throw ConfigError("step limit T must be >= 1");
  if (proposals < 1) throw ConfigError("proposals per candidate N must be >= 1");
  if (beam < 1) throw ConfigError("beam width b must be >= 1");
  if (ic_retries < 0) throw ConfigError("IC retries R must be >= 0");
  if (cr_opponents < 1) throw ConfigError("CR opponents k must be >= 1");
  if (!(belief_noise >= 0.0 && belief_noise <= 1.0)) throw ConfigError("belief_noise must be in [0,1]");
  if (policy_budget && *policy_budget == 0) throw ConfigError("policy budget must be positive");
}

nlohmann::json SearchConfig::to_json() const {
  nlohmann::json j = {{"steps", steps},   {"proposals", proposals},       {"beam", beam},
                      {"ic_retries", ic_retries}, {"cr_opponents", cr_opponents}, {"seed", seed},
                      {"ic", ic},         {"cr", cr},                     {"symbolic", symbolic},
                      {"belief_noise", belief_noise}};
  j["policy_budget"] = policy_budget ? nlohmann::json(*policy_budget) : nlohmann::json(nullptr);
  return j;
}

SearchConfig SearchConfig::from_json(const nlohmann::json& j) {
  SearchConfig c;
  try {
    c.steps = j.value("steps", c.steps);
    c.proposals = j.value("proposals", c.proposals);
    c.beam = j.value("beam", c.beam);
    c.ic_retries = j.value("ic_retries", c.ic_retries);
    c.cr_opponents = j.value("cr_opponents", c.cr_opponents);
    c.seed = j.value("seed", c.seed);
    c.ic = j.value("ic", c.ic);
    c.cr = j.value("cr", c.cr);
    c.symbolic = j.value("symbolic", c.symbolic);
    c.belief_noise = j.value("belief_noise", c.belief_noise);
    if (j.contains("policy_budget") && !j["policy_budget"].is_null()) {
      c.policy_budget = j["policy_budget"].get<std::size_t>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad search config: ") + e.what());
  }
  c.validate();
  return c;
}

namespace {

struct Stepped {
  std::optional<GroundAction> action;
  StepResult result;
};

Stepped try_step(const Problem& p, const State& s, const std::string& text) {
  auto resolved = resolve_action(p, text);
  if (auto* e = std::get_if<TypedError>(&resolved)) {
    auto err = *e;
    err.action = text;
    return {std::nullopt, err};
  }
  auto a = std::get<GroundAction>(resolved);
  auto res = step(s, a);
  if (!res.ok()) {
    auto err = res.error();
    err.action = text;
    return {a, err};
  }
  return {a, res};
}

std::string state_text(const State& s) {
  try {
    auto t = bw::render_state(s);
    if (!t.empty()) t[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(t[0])));
    return t;
  } catch (const bw::StructuralError&) {
    return s.atoms.str();
  }
}

nlohmann::json plan_json(const Plan& p) {
  auto out = nlohmann::json::array();
  for (const auto& a : p.actions) out.push_back(a.str());
  return out;
}

class Search {
 public:
  Search(const Problem& p, agents::Policy& policy, agents::Discriminator& disc, const SearchConfig& cfg,
         bool record)
      : rng_(cfg.seed),
        trace_(record),
        env_{p, policy, disc, cfg, rng_, counters_, record ? &trace_ : nullptr} {}

  SearchOutcome run() {
    const auto& p = env_.problem;
    const auto& cfg = env_.cfg;
    SearchOutcome out;
    env_.emit("start", {{"config", cfg.to_json()},
                        {"policy", env_.policy.name()},
                        {"discriminator", env_.discriminator.name()},
                        {"init", p.init().atoms.to_strings()},
                        {"goal", p.goal().atoms.to_strings()}});
    auto root = CandidateTrajectory::root(p);
    root.id = next_id_++;
    std::vector<CandidateTrajectory> done;
    if (entails(p.init(), p.goal())) {
      done.push_back(root);
      env_.emit("complete", {{"candidate", root.id}, {"plan", plan_json(root.plan)}});
    } else {
      loop(root, done, out);
    }
    finish(done, out);
    return out;
  }

 private:
  void loop(const CandidateTrajectory& root, std::vector<CandidateTrajectory>& done, SearchOutcome& out) {
    const auto& p = env_.problem;
    const auto& cfg = env_.cfg;
    std::vector<CandidateTrajectory> open{root};
    std::size_t b = static_cast<std::size_t>(cfg.beam);
    for (int t = 1; t <= cfg.steps; ++t) {
      if (b == 0 || open.empty()) break;
      if (!env_.budget_left()) {
        out.budget_exhausted = true;
        break;
      }
      out.steps_used = static_cast<std::size_t>(t);
      env_.emit("step", {{"t", t}, {"open", open.size()}, {"beam", b}});
      std::vector<CandidateTrajectory> successors;
      for (const auto& c : open) {
        if (!env_.budget_left()) {
          out.budget_exhausted = true;
          env_.emit("budget", {{"policy_calls", counters_.policy_calls}});
          break;
        }
        for (auto& e : expand(c, env_)) {
          if (e.result.ok()) {
            successors.push_back(child(c, e.proposal, *e.action, e.result.state()));
            continue;
          }
          if (!cfg.ic) {
            env_.emit("drop", {{"candidate", c.id}, {"action", e.proposal.action}});
            continue;
          }
          auto r = ic_loop(c, e.proposal, e.result.error(), env_);
          if (r.pruned()) continue;
          auto resolved = resolve_action(p, r.accepted->action);
          successors.push_back(child(c, *r.accepted, std::get<GroundAction>(resolved), *r.next));
        }
      }
      dedup(successors);
      if (successors.empty()) {
        open.clear();
        break;
      }
      auto ranked = cfg.cr ? cr_rank(std::move(successors), b, static_cast<std::size_t>(cfg.cr_opponents), env_)
                           : rating_rank(std::move(successors), b, env_);
      open.clear();
      for (auto& c : ranked) {
        if (!entails(c.state, p.goal())) {
          open.push_back(std::move(c));
          continue;
        }
        --b;
        if (cfg.symbolic || validate(p, c.plan).success()) {
          env_.emit("complete", {{"candidate", c.id}, {"plan", plan_json(c.plan)}});
          done.push_back(std::move(c));
        } else {
          env_.emit("rejected", {{"candidate", c.id}, {"plan", plan_json(c.plan)}});
        }
      }
      env_.emit("step_end", {{"t", t}, {"open", open.size()}, {"beam", b}, {"done", done.size()}});
      if (out.budget_exhausted) break;
    }
  }

  void finish(std::vector<CandidateTrajectory>& done, SearchOutcome& out) {
    const auto& p = env_.problem;
    for (const auto& c : done) {
      if (!validate(p, c.plan).success()) {
        throw ContractError("search produced a completed plan that does not validate");
      }
      out.done.push_back(c.plan);
    }
    out.done_count = done.size();
    if (done.size() == 1) {
      out.best = done.front().plan;
    } else if (done.size() > 1) {
      auto k = static_cast<std::size_t>(env_.cfg.cr_opponents);
      auto ranked = env_.cfg.cr ? cr_rank(done, 1, k, env_) : rating_rank(done, 1, env_);
      out.best = ranked.front().plan;
    }
    out.policy_calls = counters_.policy_calls;
    out.discriminator_calls = counters_.discriminator_calls;
    out.discriminator_failures = counters_.discriminator_failures;
    env_.emit("outcome", {{"success", out.best.has_value()},
                          {"best", out.best ? plan_json(*out.best) : nlohmann::json(nullptr)},
                          {"done", out.done_count},
                          {"steps_used", out.steps_used},
                          {"policy_calls", out.policy_calls},
                          {"discriminator_calls", out.discriminator_calls}});
    out.trace = std::move(trace_);
  }

  CandidateTrajectory child(const CandidateTrajectory& parent, const Proposal& prop, const GroundAction& a,
                            const State& next) {
    const auto& p = env_.problem;
    CandidateTrajectory c = parent;
    c.id = next_id_++;
    c.plan.actions.push_back(a);
    c.action_texts.push_back(prop.action);
    if (env_.cfg.symbolic) {
      c.state = next;
      c.true_state = next;
      c.state_texts.push_back(state_text(next));
      return c;
    }
    if (c.true_valid && applicable(c.true_state, a)) {
      c.true_state = apply(c.true_state, a);
    } else {
      c.true_valid = false;
    }
    std::optional<State> predicted;
    if (prop.predicted_state) {
      try {
        predicted = bw::parse_state(*prop.predicted_state, bw::Vocabulary::of(p));
      } catch (const bw::ParseError&) {
      }
    }
    if (predicted) {
      c.state = *predicted;
      c.predicted_state_text = prop.predicted_state;
      c.state_texts.push_back(*prop.predicted_state);
    } else {
      c.state = next;
      if (!c.state.atoms.empty() &&
          std::uniform_real_distribution<double>(0.0, 1.0)(rng_) < env_.cfg.belief_noise) {
        auto idx = std::uniform_int_distribution<std::size_t>(0, c.state.atoms.size() - 1)(rng_);
        c.state.atoms.erase(c.state.atoms.items()[idx]);
      }
      c.predicted_state_text.reset();
      c.state_texts.push_back(state_text(c.state));
    }
    return c;
  }

  void dedup(std::vector<CandidateTrajectory>& cands) {
    std::unordered_set<std::string> seen;
    auto before = cands.size();
    std::vector<CandidateTrajectory> kept;
    for (auto& c : cands) {
      if (seen.insert(c.state.key() + "#" + std::to_string(c.plan.size())).second) kept.push_back(std::move(c));
    }
    cands = std::move(kept);
    env_.emit("dedup", {{"before", before}, {"after", cands.size()}});
  }

  Rng rng_;
  Counters counters_;
  Trace trace_;
  Environment env_;
  std::size_t next_id_ = 0;
};

}  // namespace

std::vector<ExpansionEntry> expand(const CandidateTrajectory& c, Environment& env) {
  ++env.counters.policy_calls;
  ProposalContext ctx{env.problem, c, {}};
  auto proposals = env.policy.propose(ctx, env.cfg.proposals, env.rng);
  if (proposals.size() > static_cast<std::size_t>(env.cfg.proposals)) proposals.resize(env.cfg.proposals);
  std::vector<ExpansionEntry> out;
  for (auto& prop : proposals) {
    auto s = try_step(env.problem, c.state, prop.action);
    nlohmann::json ev = {{"candidate", c.id}, {"action", prop.action}, {"ok", s.result.ok()}};
    if (!s.result.ok()) ev["error"] = s.result.error().str();
    env.emit("proposal", std::move(ev));
    out.push_back({std::move(prop), std::move(s.action), std::move(s.result)});
  }
  return out;
}

IcResult ic_loop(const CandidateTrajectory& c, const Proposal& failed, const TypedError& err, Environment& env) {
  IcResult out;
  out.history.push_back({failed.action, err});
  for (int attempt = 1; attempt <= env.cfg.ic_retries; ++attempt) {
    if (!env.budget_left()) {
      env.emit("budget", {{"policy_calls", env.counters.policy_calls}});
      break;
    }
    ++env.counters.policy_calls;
    Proposal prop;
    try {
      ProposalContext ctx{env.problem, c, out.history};
      prop = env.policy.repair(ctx, env.rng);
    } catch (const std::runtime_error& e) {
      env.emit("repair_error", {{"candidate", c.id}, {"attempt", attempt}, {"what", e.what()}});
      continue;
    }
    auto s = try_step(env.problem, c.state, prop.action);
    nlohmann::json ev = {{"candidate", c.id}, {"attempt", attempt}, {"action", prop.action}, {"ok", s.result.ok()}};
    if (!s.result.ok()) ev["error"] = s.result.error().str();
    env.emit("repair", std::move(ev));
    if (s.result.ok()) {
      out.accepted = std::move(prop);
      out.next = s.result.state();
      return out;
    }
    out.history.push_back({prop.action, s.result.error()});
  }
  env.emit("prune", {{"candidate", c.id}, {"history", out.history.size()}});
  return out;
}

std::vector<std::vector<std::size_t>> opponents(const std::vector<std::size_t>& order, std::size_t k) {
  const auto m = order.size();
  std::vector<std::vector<std::size_t>> out(m);
  if (m == 0) return out;
  const auto kk = std::min(k, m - 1);
  for (std::size_t pos = 0; pos < m; ++pos) {
    for (std::size_t d = 1; d <= kk; ++d) out[order[pos]].push_back(order[(pos + d) % m]);
  }
  return out;
}

std::vector<double> tournament_scores(std::size_t m, const std::vector<std::vector<std::size_t>>& opp,
                                      const std::function<double(std::size_t, std::size_t)>& prefer) {
  std::map<std::pair<std::size_t, std::size_t>, double> logit;
  std::vector<double> scores(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    for (auto j : opp[i]) {
      auto it = logit.find({i, j});
      if (it == logit.end()) {
        double l = std::clamp(prefer(i, j), 0.0, 1.0);
        logit[{i, j}] = l;
        logit[{j, i}] = 1.0 - l;
        it = logit.find({i, j});
      }
      scores[i] += it->second;
    }
  }
  return scores;
}

std::vector<std::size_t> top_k(const std::vector<double>& scores, std::size_t b) {
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t x, std::size_t y) { return scores[x] > scores[y]; });
  if (idx.size() > b) idx.resize(b);
  return idx;
}

namespace {

std::vector<CandidateTrajectory> select(std::vector<CandidateTrajectory>& cands, const std::vector<std::size_t>& idx) {
  std::vector<CandidateTrajectory> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(std::move(cands[i]));
  return out;
}

nlohmann::json ids(const std::vector<CandidateTrajectory>& cands) {
  auto out = nlohmann::json::array();
  for (const auto& c : cands) out.push_back(c.id);
  return out;
}

}  // namespace

std::vector<CandidateTrajectory> cr_rank(std::vector<CandidateTrajectory> cands, std::size_t b, std::size_t k,
                                         Environment& env) {
  const auto m = cands.size();
  if (m <= 1) {
    if (b == 0) cands.clear();
    return cands;
  }
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), env.rng);
  auto opp = opponents(order, k);
  auto prefer = [&](std::size_t i, std::size_t j) {
    ++env.counters.discriminator_calls;
    double l = 0.5;
    try {
      l = env.discriminator.prefer(cands[i], cands[j], env.problem);
    } catch (const agents::DiscriminatorError& e) {
      ++env.counters.discriminator_failures;
      env.emit("pair_error", {{"a", cands[i].id}, {"b", cands[j].id}, {"what", e.what()}});
      return 0.5;
    }
    env.emit("pair", {{"a", cands[i].id}, {"b", cands[j].id}, {"logit", l}});
    return l;
  };
  auto scores = tournament_scores(m, opp, prefer);
  auto idx = top_k(scores, b);
  auto all_ids = ids(cands);
  auto out = select(cands, idx);
  env.emit("rank", {{"method", "cr"}, {"candidates", all_ids}, {"scores", scores}, {"selected", ids(out)}});
  return out;
}

std::vector<CandidateTrajectory> rating_rank(std::vector<CandidateTrajectory> cands, std::size_t b,
                                             Environment& env) {
  std::vector<double> ratings;
  for (const auto& c : cands) {
    ++env.counters.discriminator_calls;
    int r = 5;
    try {
      r = std::clamp(env.discriminator.rate(c, env.problem), 1, 10);
    } catch (const agents::DiscriminatorError& e) {
      ++env.counters.discriminator_failures;
      env.emit("rate_error", {{"candidate", c.id}, {"what", e.what()}});
    }
    ratings.push_back(r);
  }
  auto idx = top_k(ratings, b);
  auto all_ids = ids(cands);
  auto out = select(cands, idx);
  env.emit("rank", {{"method", "rating"}, {"candidates", all_ids}, {"scores", ratings}, {"selected", ids(out)}});
  return out;
}

SearchOutcome run(const Problem& p, agents::Policy& policy, agents::Discriminator& disc, const SearchConfig& cfg,
                  bool record_trace) {
  cfg.validate();
  Search s(p, policy, disc, cfg, record_trace);
  return s.run();
}

}  // namespace symplanner::search
