#include "symplanner/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <random>
#include <set>
#include <thread>

#include "symplanner/blocksworld.hpp"
#include "symplanner/hash.hpp"
#include "symplanner/oracle.hpp"
#include "symplanner/problem_io.hpp"
#include "symplanner/simulator.hpp"

namespace symplanner::harness {

namespace bw = blocksworld;

// ---------------------------------------------------------------- instances

nlohmann::json InstanceSpec::to_json() const {
  return {{"id", id},         {"n_blocks", n_blocks}, {"problem", problem_to_json(problem)},
          {"optimal_length", optimal_length}, {"bucket", bucket},     {"seed", seed}};
}

InstanceSpec InstanceSpec::from_json(const nlohmann::json& j) {
  try {
    return InstanceSpec{j.at("id").get<std::string>(),
                        j.at("n_blocks").get<std::size_t>(),
                        problem_from_json(j.at("problem")),
                        j.at("optimal_length").get<int>(),
                        j.at("bucket").get<int>(),
                        j.value("seed", std::uint64_t{0})};
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad instance record: ") + e.what());
  }
}

GenerationExhausted::GenerationExhausted(int bucket, std::size_t found, std::size_t wanted)
    : std::runtime_error("generation exhausted: bucket " + std::to_string(bucket) + " has " +
                         std::to_string(found) + " of " + std::to_string(wanted) +
                         " instances after the sample cap"),
      bucket_(bucket) {}

std::vector<InstanceSpec> generate_instances(const GeneratorConfig& cfg) {
  if (cfg.block_counts.empty()) throw ConfigError("no block counts given");
  for (auto n : cfg.block_counts) {
    if (n < 2 || n > oracle::kMaxObjects) throw ConfigError("block counts must be in 2..6");
  }
  std::map<int, std::vector<InstanceSpec>> filled;
  for (auto b : cfg.buckets) {
    if (b < 1 || b > 16) throw ConfigError("buckets must be in 1..16");
    filled[b];
  }
  if (cfg.per_bucket == 0 || filled.empty()) return {};

  std::map<std::size_t, Problem> templates;
  for (auto n : cfg.block_counts) {
    auto vocab = bw::Vocabulary::colors(n);
    templates.emplace(n, bw::make_problem(vocab, bw::table_state(vocab.blocks()), Goal{}));
  }
  std::mt19937_64 rng(cfg.seed);
  std::set<std::pair<std::string, std::string>> seen;
  std::size_t open_buckets = filled.size();
  for (std::size_t draw = 0; draw < cfg.sample_cap && open_buckets > 0; ++draw) {
    auto n = cfg.block_counts[std::uniform_int_distribution<std::size_t>(0, cfg.block_counts.size() - 1)(rng)];
    const auto& base = templates.at(n);
    auto init = bw::configuration_state(bw::random_configuration(base.objects(), rng));
    auto target = bw::configuration_state(bw::random_configuration(base.objects(), rng));
    std::vector<Atom> support;
    for (const auto& a : target.atoms) {
      if (a.predicate == "on" || a.predicate == "ontable") support.push_back(a);
    }
    Goal goal;
    while (goal.atoms.empty()) {
      for (const auto& a : support) {
        if (rng() & 1) goal.atoms.insert(a);
      }
    }
    auto d = oracle::distance(init, goal, base);
    if (!d) continue;
    auto it = filled.find(*d);
    if (it == filled.end() || it->second.size() >= cfg.per_bucket) continue;
    if (!seen.emplace(init.key(), goal.atoms.str()).second) continue;
    char id[32];
    std::snprintf(id, sizeof id, "L%02d-%03zu", *d, it->second.size());
    it->second.push_back(InstanceSpec{id, n, base.with(init, goal), *d, *d, draw});
    if (it->second.size() == cfg.per_bucket) --open_buckets;
  }
  std::vector<InstanceSpec> out;
  for (auto& [bucket, list] : filled) {
    if (list.size() < cfg.per_bucket) throw GenerationExhausted(bucket, list.size(), cfg.per_bucket);
    for (auto& inst : list) out.push_back(std::move(inst));
  }
  return out;
}

std::vector<std::string> verify_instances(const std::vector<InstanceSpec>& instances) {
  std::vector<std::string> bad;
  for (const auto& inst : instances) {
    auto plan = oracle::solve_optimal(inst.problem);
    if (!plan || static_cast<int>(plan->size()) != inst.optimal_length || inst.optimal_length != inst.bucket) {
      bad.push_back(inst.id);
    }
  }
  return bad;
}

void write_instances(const std::filesystem::path& path, const std::vector<InstanceSpec>& instances) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path.string());
  for (const auto& inst : instances) out << inst.to_json().dump() << '\n';
}

std::vector<InstanceSpec> read_instances(const std::filesystem::path& path) {
  std::vector<InstanceSpec> out;
  for (const auto& line : read_lines(path)) {
    try {
      out.push_back(InstanceSpec::from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::parse_error& e) {
      throw ConfigError(path.string() + ": " + e.what());
    }
  }
  return out;
}

// ---------------------------------------------------------------- records

nlohmann::json RunRecord::to_json() const {
  nlohmann::json j = {{"id", id},
                      {"bucket", bucket},
                      {"n_blocks", n_blocks},
                      {"optimal_length", optimal_length},
                      {"policy", policy},
                      {"discriminator", discriminator},
                      {"config", config},
                      {"success", success},
                      {"verdict", verdict},
                      {"plan", plan},
                      {"plan_length", plan_length},
                      {"steps_used", steps_used},
                      {"done_count", done_count},
                      {"policy_calls", policy_calls},
                      {"discriminator_calls", discriminator_calls},
                      {"discriminator_failures", discriminator_failures},
                      {"wall_time_ms", wall_time_ms}};
  j["error"] = error ? nlohmann::json(*error) : nlohmann::json(nullptr);
  j["trace"] = trace ? nlohmann::json(*trace) : nlohmann::json(nullptr);
  return j;
}

RunRecord RunRecord::from_json(const nlohmann::json& j) {
  RunRecord r;
  try {
    r.id = j.at("id").get<std::string>();
    r.bucket = j.at("bucket").get<int>();
    r.n_blocks = j.value("n_blocks", std::size_t{0});
    r.optimal_length = j.value("optimal_length", 0);
    r.policy = j.value("policy", "");
    r.discriminator = j.value("discriminator", "");
    r.config = j.value("config", nlohmann::json::object());
    r.success = j.at("success").get<bool>();
    r.verdict = j.value("verdict", "");
    r.plan = j.value("plan", std::vector<std::string>{});
    r.plan_length = j.value("plan_length", std::size_t{0});
    r.steps_used = j.value("steps_used", std::size_t{0});
    r.done_count = j.value("done_count", std::size_t{0});
    r.policy_calls = j.value("policy_calls", std::size_t{0});
    r.discriminator_calls = j.value("discriminator_calls", std::size_t{0});
    r.discriminator_failures = j.value("discriminator_failures", std::size_t{0});
    r.wall_time_ms = j.value("wall_time_ms", 0.0);
    if (j.contains("error") && j["error"].is_string()) r.error = j["error"].get<std::string>();
    if (j.contains("trace") && j["trace"].is_string()) r.trace = j["trace"].get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad run record: ") + e.what());
  }
  return r;
}

std::string deterministic_line(const RunRecord& r) {
  auto j = r.to_json();
  j.erase("wall_time_ms");
  return j.dump();
}

std::vector<RunRecord> read_records(const std::filesystem::path& path) {
  std::vector<RunRecord> out;
  for (const auto& line : read_lines(path)) {
    try {
      out.push_back(RunRecord::from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::parse_error& e) {
      throw ConfigError(path.string() + ": " + e.what());
    }
  }
  return out;
}

// ---------------------------------------------------------------- execution

std::uint64_t instance_seed(std::uint64_t master, const std::string& id) { return derive_seed(master, id); }

RunRecord run_instance(const InstanceSpec& inst, const SuiteConfig& cfg) {
  auto started = std::chrono::steady_clock::now();
  RunRecord r;
  r.id = inst.id;
  r.bucket = inst.bucket;
  r.n_blocks = inst.n_blocks;
  r.optimal_length = inst.optimal_length;
  r.policy = cfg.policy;
  r.discriminator = cfg.discriminator;
  auto scfg = cfg.search;
  scfg.seed = instance_seed(cfg.master_seed, inst.id);
  r.config = scfg.to_json();
  try {
    auto policy = agents::make_policy(cfg.policy, inst.problem, cfg.agents);
    auto disc = agents::make_discriminator(cfg.discriminator, inst.problem, splitmix64(scfg.seed), cfg.agents);
    auto outcome = search::run(inst.problem, *policy, *disc, scfg, !cfg.trace_dir.empty());
    r.steps_used = outcome.steps_used;
    r.done_count = outcome.done_count;
    r.policy_calls = outcome.policy_calls;
    r.discriminator_calls = outcome.discriminator_calls;
    r.discriminator_failures = outcome.discriminator_failures;
    if (outcome.best) {
      auto v = validate(inst.problem, *outcome.best);
      r.success = v.success();
      r.verdict = std::string(verdict_name(v.kind));
      for (const auto& a : outcome.best->actions) r.plan.push_back(bw::render_action(a));
      r.plan_length = outcome.best->size();
    } else {
      r.verdict = outcome.budget_exhausted ? "BudgetExhausted" : "NoPlan";
    }
    if (!cfg.trace_dir.empty()) {
      std::filesystem::create_directories(cfg.trace_dir);
      auto path = cfg.trace_dir / (inst.id + ".jsonl");
      std::ofstream out(path, std::ios::trunc);
      outcome.trace.write_jsonl(out);
      r.trace = path.string();
    }
  } catch (const std::exception& e) {
    r.success = false;
    r.verdict = "Error";
    r.error = e.what();
  }
  r.wall_time_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
  return r;
}

std::vector<RunRecord> run_suite(const std::vector<InstanceSpec>& instances, const SuiteConfig& cfg,
                                 const std::optional<std::filesystem::path>& out) {
  agents::check_policy_spec(cfg.policy);
  agents::check_discriminator_spec(cfg.discriminator);
  cfg.search.validate();

  std::set<std::string> existing;
  if (out && std::filesystem::exists(*out)) {
    for (const auto& r : read_records(*out)) existing.insert(r.id);
  }
  std::vector<const InstanceSpec*> todo;
  for (const auto& inst : instances) {
    if (!existing.count(inst.id)) todo.push_back(&inst);
  }

  std::ofstream sink;
  if (out) {
    if (out->has_parent_path()) std::filesystem::create_directories(out->parent_path());
    sink.open(*out, std::ios::app);
    if (!sink) throw ConfigError("cannot write " + out->string());
  }

  std::vector<std::optional<RunRecord>> results(todo.size());
  std::mutex mutex;
  std::condition_variable ready;
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next++) < todo.size();) {
      auto rec = run_instance(*todo[i], cfg);
      {
        std::lock_guard lock(mutex);
        results[i] = std::move(rec);
      }
      ready.notify_all();
    }
  };
  auto n_threads = std::min(std::max<std::size_t>(cfg.threads, 1), std::max<std::size_t>(todo.size(), 1));
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < n_threads; ++t) pool.emplace_back(worker);
  if (n_threads == 1) worker();

  std::vector<RunRecord> records;
  for (std::size_t i = 0; i < todo.size(); ++i) {
    std::unique_lock lock(mutex);
    ready.wait(lock, [&] { return results[i].has_value(); });
    records.push_back(std::move(*results[i]));
    lock.unlock();
    if (sink.is_open()) {
      sink << records.back().to_json().dump() << '\n';
      sink.flush();
    }
  }
  for (auto& t : pool) t.join();
  return records;
}

// ---------------------------------------------------------------- reporting

namespace {

double percent(std::size_t k, std::size_t n) { return n == 0 ? 0.0 : 100.0 * static_cast<double>(k) / static_cast<double>(n); }

Interval bootstrap(const std::vector<bool>& outcomes, std::size_t resamples, std::mt19937_64& rng) {
  if (outcomes.empty()) return {};
  std::vector<double> rates;
  rates.reserve(resamples);
  std::uniform_int_distribution<std::size_t> draw(0, outcomes.size() - 1);
  for (std::size_t r = 0; r < resamples; ++r) {
    std::size_t hits = 0;
    for (std::size_t i = 0; i < outcomes.size(); ++i) hits += outcomes[draw(rng)] ? 1 : 0;
    rates.push_back(percent(hits, outcomes.size()));
  }
  std::sort(rates.begin(), rates.end());
  auto at = [&](double q) {
    auto idx = static_cast<std::size_t>(q * static_cast<double>(rates.size() - 1) + 0.5);
    return rates[std::min(idx, rates.size() - 1)];
  };
  return {at(0.025), at(0.975)};
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string pad(const std::string& s, std::size_t w) {
  return s.size() >= w ? s : std::string(w - s.size(), ' ') + s;
}

}  // namespace

ReportTable report(const std::vector<RunRecord>& records, const ReportOptions& opts) {
  if (records.empty()) throw ConfigError("report needs at least one run record");
  ReportTable t;
  t.label = opts.label;
  std::map<int, std::vector<bool>> by_bucket;
  std::vector<bool> all;
  for (const auto& r : records) {
    by_bucket[r.bucket].push_back(r.success);
    all.push_back(r.success);
  }
  std::mt19937_64 rng(opts.seed);
  for (const auto& [bucket, outcomes] : by_bucket) {
    BucketRow row;
    row.bucket = bucket;
    row.count = outcomes.size();
    row.successes = static_cast<std::size_t>(std::count(outcomes.begin(), outcomes.end(), true));
    row.rate = percent(row.successes, row.count);
    if (opts.bootstrap) row.ci = bootstrap(outcomes, opts.resamples, rng);
    t.buckets.push_back(row);
  }
  t.count = all.size();
  t.successes = static_cast<std::size_t>(std::count(all.begin(), all.end(), true));
  t.total = percent(t.successes, t.count);
  if (opts.bootstrap) t.total_ci = bootstrap(all, opts.resamples, rng);
  return t;
}

nlohmann::json ReportTable::to_json() const {
  auto ci_json = [](const std::optional<Interval>& ci) {
    return ci ? nlohmann::json::array({ci->lo, ci->hi}) : nlohmann::json(nullptr);
  };
  auto rows = nlohmann::json::array();
  for (const auto& b : buckets) {
    rows.push_back({{"bucket", b.bucket}, {"count", b.count}, {"successes", b.successes}, {"rate", b.rate},
                    {"ci95", ci_json(b.ci)}});
  }
  return {{"label", label},         {"buckets", rows},    {"count", count},
          {"successes", successes}, {"total", total},     {"total_ci95", ci_json(total_ci)},
          {"instances", "generated; the instance distribution is this tool's own"}};
}

std::string ReportTable::to_text() const {
  const std::size_t w = 16;
  std::string head = pad("Step Count", 14);
  std::string rate = pad("Success (%)", 14);
  std::string n = pad("n", 14);
  std::string ci = pad("95% CI", 14);
  bool any_ci = total_ci.has_value();
  auto ci_text = [](const std::optional<Interval>& c) {
    return c ? "[" + fmt("%.1f", c->lo) + ", " + fmt("%.1f", c->hi) + "]" : std::string("-");
  };
  for (const auto& b : buckets) {
    head += pad(std::to_string(b.bucket), w);
    rate += pad(fmt("%.1f", b.rate), w);
    n += pad(std::to_string(b.count), w);
    ci += pad(ci_text(b.ci), w);
  }
  head += pad("Total", w);
  rate += pad(fmt("%.1f", total), w);
  n += pad(std::to_string(count), w);
  ci += pad(ci_text(total_ci), w);
  std::string out = label + " (generated instances)\n" + head + "\n" + rate + "\n";
  if (any_ci) out += ci + "\n";
  out += n + "\n";
  return out;
}

std::string render_comparison(const std::vector<ReportTable>& tables) {
  std::set<int> buckets;
  std::size_t label_w = 12;
  for (const auto& t : tables) {
    label_w = std::max(label_w, t.label.size() + 2);
    for (const auto& b : t.buckets) buckets.insert(b.bucket);
  }
  auto left = [&](const std::string& s) { return s + std::string(label_w - s.size(), ' '); };
  std::string out = left("Step Count");
  for (auto b : buckets) out += pad(std::to_string(b), 8);
  out += pad("Total", 8) + "\n";
  for (const auto& t : tables) {
    out += left(t.label);
    for (auto b : buckets) {
      auto it = std::find_if(t.buckets.begin(), t.buckets.end(), [&](const BucketRow& r) { return r.bucket == b; });
      out += pad(it == t.buckets.end() ? "-" : fmt("%.1f", it->rate), 8);
    }
    out += pad(fmt("%.1f", t.total), 8) + "\n";
  }
  return out;
}

AblationResult ablation_matrix(const std::vector<InstanceSpec>& instances, const AblationConfig& cfg,
                               const std::optional<std::filesystem::path>& out_dir) {
  struct Variant {
    std::string label;
    std::string slug;
    SuiteConfig suite;
  };
  std::vector<Variant> variants(4, Variant{"", "", cfg.base});
  variants[0].label = "Full";
  variants[0].slug = "full";
  variants[1].label = "w/o symbolic";
  variants[1].slug = "no_symbolic";
  variants[1].suite.search.symbolic = false;
  variants[2].label = "w/o IC";
  variants[2].slug = "no_ic";
  variants[2].suite.search.ic = false;
  variants[3].label = "w/o CR";
  variants[3].slug = "no_cr";
  variants[3].suite.search.cr = false;
  variants[3].suite.discriminator = cfg.rating_discriminator;

  AblationResult result;
  for (const auto& v : variants) {
    std::optional<std::filesystem::path> out;
    if (out_dir) out = *out_dir / ("runs_" + v.slug + ".jsonl");
    std::vector<RunRecord> records;
    if (out) {
      run_suite(instances, v.suite, out);
      records = read_records(*out);
    } else {
      records = run_suite(instances, v.suite);
    }
    auto opts = cfg.report;
    opts.label = v.label;
    result.tables.push_back(report(records, opts));
    result.records.push_back(std::move(records));
  }
  return result;
}

}  // namespace symplanner::harness
