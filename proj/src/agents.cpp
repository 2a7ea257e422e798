#include "symplanner/agents.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <climits>
#include <cmath>
#include <future>
#include <regex>

#include "symplanner/blocksworld.hpp"
#include "symplanner/hash.hpp"
#include "symplanner/oracle.hpp"
#include "symplanner/problem_io.hpp"
#include "symplanner/prompts.hpp"
#include "symplanner/remote.hpp"

namespace symplanner::agents {

namespace bw = blocksworld;

namespace {

std::string capitalize(std::string s) {
  if (!s.empty()) s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
  return s;
}

std::string action_text(const GroundAction& a) { return capitalize(bw::render_action(a)); }

/// Rendered text for well-formed states, the atom list otherwise.
std::string state_text(const State& s) {
  try {
    return capitalize(bw::render_state(s));
  } catch (const bw::StructuralError&) {
    return s.atoms.str();
  }
}

std::size_t pick(Rng& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

double coin(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

/// Library actions named by the failure history.
std::vector<GroundAction> failed_actions(const ProposalContext& ctx) {
  std::vector<GroundAction> out;
  for (const auto& f : ctx.failure_history) {
    auto r = resolve_action(ctx.problem, f.action);
    if (auto* a = std::get_if<GroundAction>(&r)) out.push_back(*a);
  }
  return out;
}

bool contains(const std::vector<GroundAction>& xs, const GroundAction& a) {
  return std::find(xs.begin(), xs.end(), a) != xs.end();
}

std::vector<GroundAction> without(std::vector<GroundAction> xs, const std::vector<GroundAction>& drop) {
  std::erase_if(xs, [&](const GroundAction& a) { return contains(drop, a); });
  return xs;
}

/// Applicable actions not yet tried, else untried library actions.
std::vector<GroundAction> repair_pool(const ProposalContext& ctx) {
  auto failed = failed_actions(ctx);
  auto pool = without(applicable_actions(ctx.state(), ctx.problem), failed);
  if (pool.empty()) pool = without(ctx.problem.actions(), failed);
  return pool;
}

constexpr std::string_view kNoAction = "(no action)";

}  // namespace

CandidateTrajectory CandidateTrajectory::root(const Problem& p) {
  CandidateTrajectory c;
  c.state = p.init();
  c.true_state = p.init();
  return c;
}

std::size_t satisfied_goal_atoms(const State& s, const Goal& g) {
  return static_cast<std::size_t>(
      std::count_if(g.atoms.begin(), g.atoms.end(), [&](const Atom& a) { return s.atoms.contains(a); }));
}

// ---------------------------------------------------------------- RandomValid

std::vector<Proposal> RandomValidPolicy::propose(const ProposalContext& ctx, int n, Rng& rng) {
  auto acts = applicable_actions(ctx.state(), ctx.problem);
  std::vector<Proposal> out;
  if (acts.empty()) return out;
  for (int i = 0; i < n; ++i) out.push_back({action_text(acts[pick(rng, acts.size())]), std::nullopt});
  return out;
}

Proposal RandomValidPolicy::repair(const ProposalContext& ctx, Rng& rng) {
  auto pool = repair_pool(ctx);
  if (pool.empty()) return {std::string(kNoAction), std::nullopt};
  return {action_text(pool[pick(rng, pool.size())]), std::nullopt};
}

// ---------------------------------------------------------------- GoalCountGreedy

namespace {

GroundAction greedy_choice(const std::vector<GroundAction>& pool, const ProposalContext& ctx, Rng& rng) {
  std::vector<std::size_t> best;
  std::size_t best_score = 0;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    auto score = satisfied_goal_atoms(apply_unchecked(ctx.state(), pool[i]), ctx.goal());
    if (best.empty() || score > best_score) {
      best = {i};
      best_score = score;
    } else if (score == best_score) {
      best.push_back(i);
    }
  }
  return pool[best[pick(rng, best.size())]];
}

}  // namespace

std::vector<Proposal> GoalCountGreedyPolicy::propose(const ProposalContext& ctx, int n, Rng& rng) {
  auto acts = applicable_actions(ctx.state(), ctx.problem);
  std::vector<Proposal> out;
  if (acts.empty()) return out;
  for (int i = 0; i < n; ++i) out.push_back({action_text(greedy_choice(acts, ctx, rng)), std::nullopt});
  return out;
}

Proposal GoalCountGreedyPolicy::repair(const ProposalContext& ctx, Rng& rng) {
  auto pool = repair_pool(ctx);
  if (pool.empty()) return {std::string(kNoAction), std::nullopt};
  return {action_text(greedy_choice(pool, ctx, rng)), std::nullopt};
}

// ---------------------------------------------------------------- OracleNoisy

struct OracleNoisyPolicy::Index {
  explicit Index(const Problem& p) : distances(p) {}
  oracle::DistanceIndex distances;
};

OracleNoisyPolicy::OracleNoisyPolicy(const Problem& p, double epsilon)
    : index_(std::make_unique<Index>(p)), epsilon_(epsilon) {
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw ConfigError("oracle-noisy epsilon must be in [0,1]");
}

OracleNoisyPolicy::~OracleNoisyPolicy() = default;

std::string OracleNoisyPolicy::name() const {
  char buf[32];
  std::snprintf(buf, sizeof buf, "oracle-noisy:%g", epsilon_);
  return buf;
}

std::optional<GroundAction> OracleNoisyPolicy::oracle_action(const State& s) const {
  return index_->distances.next_optimal_action(s);
}

std::vector<Proposal> OracleNoisyPolicy::propose(const ProposalContext& ctx, int n, Rng& rng) {
  const auto& library = ctx.problem.actions();
  auto best = oracle_action(ctx.state());
  std::vector<Proposal> out;
  for (int i = 0; i < n; ++i) {
    bool noisy = coin(rng) < epsilon_;
    if (!noisy && best) {
      out.push_back({action_text(*best), std::nullopt});
    } else if (!library.empty()) {
      out.push_back({action_text(library[pick(rng, library.size())]), std::nullopt});
    }
  }
  return out;
}

Proposal OracleNoisyPolicy::repair(const ProposalContext& ctx, Rng& rng) {
  auto failed = failed_actions(ctx);
  bool noisy = coin(rng) < epsilon_;
  if (!noisy) {
    auto best = oracle_action(ctx.state());
    if (best && !contains(failed, *best)) return {action_text(*best), std::nullopt};
  }
  auto pool = without(ctx.problem.actions(), failed);
  if (pool.empty()) return {std::string(kNoAction), std::nullopt};
  return {action_text(pool[pick(rng, pool.size())]), std::nullopt};
}

// ---------------------------------------------------------------- Replay

ReplayPolicy::ReplayPolicy(std::vector<std::string> script) : script_(std::move(script)) {
  if (script_.empty()) throw ConfigError("replay script is empty");
}

std::string ReplayPolicy::next() {
  auto out = script_[cursor_];
  cursor_ = (cursor_ + 1) % script_.size();
  return out;
}

std::vector<Proposal> ReplayPolicy::propose(const ProposalContext&, int n, Rng&) {
  std::vector<Proposal> out;
  for (int i = 0; i < n; ++i) out.push_back({next(), std::nullopt});
  return out;
}

Proposal ReplayPolicy::repair(const ProposalContext&, Rng&) { return {next(), std::nullopt}; }

// ---------------------------------------------------------------- discriminators

namespace {

double compare_lower_better(long a, long b) {
  if (a < b) return 1.0;
  if (a > b) return 0.0;
  return 0.5;
}

std::string candidate_key(const CandidateTrajectory& c) {
  std::string k = c.state.key();
  for (const auto& a : c.plan.actions) {
    k += '|';
    k += a.str();
  }
  return k;
}

}  // namespace

struct OracleDistanceDiscriminator::Index {
  explicit Index(const Problem& p) : distances(p) {}
  oracle::DistanceIndex distances;
};

OracleDistanceDiscriminator::OracleDistanceDiscriminator(const Problem& p) : index_(std::make_unique<Index>(p)) {}
OracleDistanceDiscriminator::~OracleDistanceDiscriminator() = default;

std::optional<int> OracleDistanceDiscriminator::distance(const State& s) const {
  return index_->distances.distance(s);
}

double OracleDistanceDiscriminator::prefer(const CandidateTrajectory& a, const CandidateTrajectory& b,
                                           const Problem&) {
  auto da = distance(a.state).value_or(INT_MAX);
  auto db = distance(b.state).value_or(INT_MAX);
  return compare_lower_better(da, db);
}

int OracleDistanceDiscriminator::rate(const CandidateTrajectory& c, const Problem&) {
  auto d = distance(c.state);
  if (!d) return 1;
  return std::clamp(10 - *d, 1, 10);
}

double GoalCountDiscriminator::prefer(const CandidateTrajectory& a, const CandidateTrajectory& b,
                                      const Problem& p) {
  auto ga = static_cast<long>(satisfied_goal_atoms(a.state, p.goal()));
  auto gb = static_cast<long>(satisfied_goal_atoms(b.state, p.goal()));
  return compare_lower_better(-ga, -gb);
}

int GoalCountDiscriminator::rate(const CandidateTrajectory& c, const Problem& p) {
  const auto total = p.goal().atoms.size();
  if (total == 0) return 10;
  double frac = static_cast<double>(satisfied_goal_atoms(c.state, p.goal())) / static_cast<double>(total);
  return 1 + static_cast<int>(std::lround(9.0 * frac));
}

double RandomDiscriminator::prefer(const CandidateTrajectory& a, const CandidateTrajectory& b, const Problem&) {
  auto ka = candidate_key(a);
  auto kb = candidate_key(b);
  if (ka == kb) return 0.5;
  auto ha = splitmix64(seed_ ^ fnv1a(ka));
  auto hb = splitmix64(seed_ ^ fnv1a(kb));
  if (ha != hb) return ha > hb ? 1.0 : 0.0;
  return ka < kb ? 1.0 : 0.0;
}

int RandomDiscriminator::rate(const CandidateTrajectory& c, const Problem&) {
  return 1 + static_cast<int>(splitmix64(~seed_ ^ fnv1a(candidate_key(c))) % 10);
}

// ---------------------------------------------------------------- prompts

namespace prompt {

namespace {

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) out += c == '"' ? '\'' : c;
  return out + "\"";
}

std::string goal_text(const Problem& p) { return capitalize(bw::render_goal(p.goal())); }

}  // namespace

std::string trajectory_lines(const CandidateTrajectory& c, std::size_t first_step, const std::string& line_end) {
  std::string out;
  for (std::size_t i = first_step; i < c.action_texts.size(); ++i) {
    auto k = std::to_string(i + 1);
    out += "\"Action " + k + "\": " + quote(c.action_texts[i]) + line_end + "\n";
    if (i < c.state_texts.size()) out += "\"State " + k + "\": " + quote(c.state_texts[i]) + line_end + "\n";
  }
  return out;
}

std::string generation(const ProposalContext& ctx) {
  return prompts::get(prompts::Kind::Generation)
      .fill({{"goal", goal_text(ctx.problem)},
             {"initial_state", state_text(ctx.problem.init())},
             {"trajectory", trajectory_lines(ctx.candidate, 0, "")}});
}

std::string iterative_correction(const ProposalContext& ctx) {
  auto k = "\"Action " + std::to_string(ctx.plan().size() + 1) + "\": ";
  std::string invalid = "{";
  std::string errors = "\"Errors\": {";
  for (std::size_t i = 0; i < ctx.failure_history.size(); ++i) {
    const auto& f = ctx.failure_history[i];
    if (i) {
      invalid += ", ";
      errors += ", ";
    }
    invalid += k + quote(f.action);
    errors += k + quote(f.error.str() + ": " + f.error.message());
  }
  invalid += "}";
  errors += "}\n";
  return prompts::get(prompts::Kind::IterativeCorrection)
      .fill({{"goal", goal_text(ctx.problem)},
             {"initial_state", state_text(ctx.problem.init())},
             {"trajectory", trajectory_lines(ctx.candidate, 0, "")},
             {"invalid_actions", invalid},
             {"error_feedback", ctx.failure_history.empty() ? "" : errors}});
}

std::string contrastive_ranking(const CandidateTrajectory& a, const CandidateTrajectory& b, const Problem& p) {
  std::size_t common = 0;
  while (common < a.plan.size() && common < b.plan.size() && a.plan.actions[common] == b.plan.actions[common]) {
    ++common;
  }
  auto entries = [&](const CandidateTrajectory& c, bool states) {
    std::string out = "{";
    const auto& texts = states ? c.state_texts : c.action_texts;
    for (std::size_t i = common; i < texts.size(); ++i) {
      if (i > common) out += ", ";
      out += "\"" + std::string(states ? "State " : "Action ") + std::to_string(i + 1) + "\": " + quote(texts[i]);
    }
    return out + "}";
  };
  std::string options = "    \"Option 1\": " + entries(a, false) + ",\n    \"Option 2\": " + entries(b, false);
  std::string futures = "    \"Future 1\": " + entries(a, true) + ",\n    \"Future 2\": " + entries(b, true);
  std::string shared;
  for (std::size_t i = 0; i < common; ++i) {
    auto k = std::to_string(i + 1);
    shared += "\"Action " + k + "\": " + quote(a.action_texts[i]) + ",\n";
    if (i < a.state_texts.size()) shared += "\"State " + k + "\": " + quote(a.state_texts[i]) + ",\n";
  }
  return prompts::get(prompts::Kind::ContrastiveRanking)
      .fill({{"goal", goal_text(p)},
             {"initial_state", state_text(p.init())},
             {"trajectory", shared},
             {"options", options},
             {"futures", futures}});
}

std::string plan_rating(const CandidateTrajectory& c, const Problem& p) {
  return prompts::get(prompts::Kind::PlanRating)
      .fill({{"goal", goal_text(p)},
             {"initial_state", state_text(p.init())},
             {"trajectory", trajectory_lines(c, 0, "")}});
}

std::string action_parsing(std::string_view action) {
  return prompts::get(prompts::Kind::ActionParsing).fill({{"action", std::string(action)}});
}

}  // namespace prompt

// ---------------------------------------------------------------- reply parsing

Proposal parse_proposal_reply(std::string_view reply, std::size_t step) {
  static const std::regex entry(R"re("(Action|State)\s+(\d+)"\s*:\s*"([^"]*)")re", std::regex::icase);
  std::string text(reply);
  std::optional<std::string> action, state, first_action;
  for (auto it = std::sregex_iterator(text.begin(), text.end(), entry); it != std::sregex_iterator(); ++it) {
    auto kind = (*it)[1].str();
    std::transform(kind.begin(), kind.end(), kind.begin(), [](unsigned char c) { return std::tolower(c); });
    std::size_t k = std::stoul((*it)[2].str());
    auto value = (*it)[3].str();
    if (kind == "action") {
      if (!first_action) first_action = value;
      if (k == step && !action) action = value;
    } else if (k == step && !state) {
      state = value;
    }
  }
  if (action) return {*action, state};
  if (first_action) return {*first_action, std::nullopt};
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    auto line = text.substr(pos, end - pos);
    auto b = line.find_first_not_of(" \t\r\"");
    auto e = line.find_last_not_of(" \t\r\"");
    if (b != std::string::npos) return {line.substr(b, e - b + 1), std::nullopt};
    pos = end + 1;
  }
  return {"", std::nullopt};
}

std::optional<int> parse_preference_reply(std::string_view reply) {
  static const std::regex option(R"re(option\s*(\d+))re", std::regex::icase);
  std::string text(reply);
  std::string lower = text;
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  auto concl = lower.rfind("conclusion");
  std::smatch m;
  if (concl != std::string::npos) {
    auto tail = text.substr(concl);
    if (std::regex_search(tail, m, option)) return std::stoi(m[1].str());
    return std::nullopt;
  }
  std::optional<int> last;
  for (auto it = std::sregex_iterator(text.begin(), text.end(), option); it != std::sregex_iterator(); ++it) {
    last = std::stoi((*it)[1].str());
  }
  return last;
}

std::optional<int> parse_rating_reply(std::string_view reply) {
  auto start = reply.find("Rating");
  auto text = start == std::string_view::npos ? reply : reply.substr(start);
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (!std::isdigit(static_cast<unsigned char>(text[i]))) continue;
    long v = 0;
    auto [ptr, ec] = std::from_chars(text.data() + i, text.data() + text.size(), v);
    if (ec != std::errc()) return std::nullopt;
    return static_cast<int>(std::clamp<long>(v, 1, 10));
  }
  return std::nullopt;
}

// ---------------------------------------------------------------- remote agents

namespace {

std::vector<remote::ChatMessage> user(std::string content) { return {{"user", std::move(content)}}; }

}  // namespace

RemoteLlmPolicy::RemoteLlmPolicy(std::shared_ptr<remote::ChatClient> client, RemoteOptions opts)
    : client_(std::move(client)), opts_(opts) {
  if (!client_) throw ConfigError("remote policy needs an endpoint");
}

Proposal RemoteLlmPolicy::finish(Proposal p, const Problem& problem) {
  if (!opts_.llm_parse_fallback) return p;
  try {
    bw::parse_action(p.action, bw::Vocabulary::of(problem));
    return p;
  } catch (const bw::ParseError&) {
  }
  try {
    auto ref = bw::parse_action_list(client_->chat(user(prompt::action_parsing(p.action))));
    p.action = bw::render_action(ref);
  } catch (const bw::ParseError&) {
  }
  return p;
}

std::vector<Proposal> RemoteLlmPolicy::propose(const ProposalContext& ctx, int n, Rng&) {
  auto text = prompt::generation(ctx);
  auto step = ctx.plan().size() + 1;
  std::vector<std::future<std::string>> replies;
  for (int i = 0; i < n; ++i) {
    replies.push_back(std::async(std::launch::async, [this, &text] { return client_->chat(user(text)); }));
  }
  std::vector<Proposal> out;
  std::exception_ptr first_error;
  for (auto& r : replies) {
    try {
      out.push_back(finish(parse_proposal_reply(r.get(), step), ctx.problem));
    } catch (...) {
      if (!first_error) first_error = std::current_exception();
    }
  }
  if (first_error) std::rethrow_exception(first_error);
  return out;
}

Proposal RemoteLlmPolicy::repair(const ProposalContext& ctx, Rng&) {
  auto reply = client_->chat(user(prompt::iterative_correction(ctx)));
  return finish(parse_proposal_reply(reply, ctx.plan().size() + 1), ctx.problem);
}

RemoteLlmDiscriminator::RemoteLlmDiscriminator(std::shared_ptr<remote::ChatClient> client, RemoteOptions opts)
    : client_(std::move(client)), opts_(opts) {
  if (!client_) throw ConfigError("remote discriminator needs an endpoint");
}

double RemoteLlmDiscriminator::prefer(const CandidateTrajectory& a, const CandidateTrajectory& b,
                                      const Problem& p) {
  if (a.plan == b.plan) return 0.5;
  auto text = prompt::contrastive_ranking(a, b, p);
  std::string last;
  for (int attempt = 0; attempt < std::max(1, opts_.disc_retries); ++attempt) {
    try {
      last = client_->chat(user(text));
    } catch (const remote::TransportError& e) {
      throw DiscriminatorError(std::string("transport: ") + e.what());
    }
    auto choice = parse_preference_reply(last);
    if (choice == 1) return 1.0;
    if (choice == 2) return 0.0;
  }
  throw DiscriminatorError("no usable conclusion in reply: " + last.substr(0, 200));
}

int RemoteLlmDiscriminator::rate(const CandidateTrajectory& c, const Problem& p) {
  auto text = prompt::plan_rating(c, p);
  std::string last;
  for (int attempt = 0; attempt < std::max(1, opts_.disc_retries); ++attempt) {
    try {
      last = client_->chat(user(text));
    } catch (const remote::TransportError& e) {
      throw DiscriminatorError(std::string("transport: ") + e.what());
    }
    if (auto r = parse_rating_reply(last)) return *r;
  }
  throw DiscriminatorError("no rating in reply: " + last.substr(0, 200));
}

// ---------------------------------------------------------------- factories

namespace {

std::pair<std::string_view, std::string_view> split_spec(std::string_view spec) {
  auto colon = spec.find(':');
  if (colon == std::string_view::npos) return {spec, {}};
  return {spec.substr(0, colon), spec.substr(colon + 1)};
}

double parse_epsilon(std::string_view arg) {
  double eps = 0;
  auto [ptr, ec] = std::from_chars(arg.data(), arg.data() + arg.size(), eps);
  if (ec != std::errc() || ptr != arg.data() + arg.size() || eps < 0 || eps > 1) {
    throw ConfigError("oracle-noisy needs an epsilon in [0,1], got '" + std::string(arg) + "'");
  }
  return eps;
}

}  // namespace

void check_policy_spec(std::string_view spec) {
  auto [kind, arg] = split_spec(spec);
  if (kind == "random" || kind == "greedy" || kind == "oracle" || kind == "remote") {
    if (!arg.empty()) throw ConfigError("policy '" + std::string(kind) + "' takes no argument");
    return;
  }
  if (kind == "oracle-noisy") {
    parse_epsilon(arg);
    return;
  }
  if (kind == "replay") {
    if (arg.empty()) throw ConfigError("replay needs a script file: replay:FILE");
    if (read_lines(std::string(arg)).empty()) throw ConfigError("replay script is empty: " + std::string(arg));
    return;
  }
  throw ConfigError("unknown policy '" + std::string(spec) + "'");
}

void check_discriminator_spec(std::string_view spec) {
  if (spec == "oracle" || spec == "goalcount" || spec == "random" || spec == "remote") return;
  throw ConfigError("unknown discriminator '" + std::string(spec) + "'");
}

std::unique_ptr<Policy> make_policy(std::string_view spec, const Problem& p, const AgentOptions& opts) {
  check_policy_spec(spec);
  auto [kind, arg] = split_spec(spec);
  if (kind == "random") return std::make_unique<RandomValidPolicy>();
  if (kind == "greedy") return std::make_unique<GoalCountGreedyPolicy>();
  if (kind == "oracle") return std::make_unique<OracleNoisyPolicy>(p, 0.0);
  if (kind == "oracle-noisy") return std::make_unique<OracleNoisyPolicy>(p, parse_epsilon(arg));
  if (kind == "replay") return std::make_unique<ReplayPolicy>(read_lines(std::string(arg)));
  return std::make_unique<RemoteLlmPolicy>(opts.client, opts.remote);
}

std::unique_ptr<Discriminator> make_discriminator(std::string_view spec, const Problem& p, std::uint64_t seed,
                                                  const AgentOptions& opts) {
  check_discriminator_spec(spec);
  if (spec == "oracle") return std::make_unique<OracleDistanceDiscriminator>(p);
  if (spec == "goalcount") return std::make_unique<GoalCountDiscriminator>();
  if (spec == "random") return std::make_unique<RandomDiscriminator>(seed);
  return std::make_unique<RemoteLlmDiscriminator>(opts.client, opts.remote);
}

}  // namespace symplanner::agents
