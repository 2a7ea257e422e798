#include "symplanner/oracle.hpp"

#include <cstdint>
#include <deque>
#include <map>
#include <mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "symplanner/blocksworld.hpp"

namespace symplanner::oracle {

namespace {

using Bits = std::vector<std::uint64_t>;

struct BitsHash {
  std::size_t operator()(const Bits& b) const noexcept {
    std::uint64_t h = 0x9e3779b97f4a7c15ULL;
    for (auto w : b) {
      h ^= w + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    }
    return static_cast<std::size_t>(h);
  }
};

bool subset(const Bits& small, const Bits& big) {
  for (std::size_t i = 0; i < small.size(); ++i) {
    if ((small[i] & big[i]) != small[i]) return false;
  }
  return true;
}

/// Problem atoms mapped to bit positions, with actions as bit masks.
class Compiled {
 public:
  struct Action {
    Bits pre, add, del;
    std::size_t library_index;
  };

  Compiled(const Problem& p, const Goal& g) {
    for (const auto& a : p.actions()) {
      for (const auto* set : {&a.pre(), &a.add(), &a.del()}) {
        for (const auto& atom : *set) intern(atom);
      }
    }
    for (const auto& atom : g.atoms) intern(atom);
    words_ = (atoms_.size() + 63) / 64;
    if (words_ == 0) words_ = 1;
    for (std::size_t i = 0; i < p.actions().size(); ++i) {
      const auto& a = p.actions()[i];
      actions_.push_back({bits(a.pre()), bits(a.add()), bits(a.del()), i});
    }
    goal_ = bits(g.atoms);
  }

  /// Projection onto compiled atoms; others never affect applicability or
  /// the goal test.
  Bits bits(const AtomSet& atoms) const {
    Bits b(words_, 0);
    for (const auto& a : atoms) {
      auto it = index_.find(a.str());
      if (it != index_.end()) b[it->second / 64] |= (1ULL << (it->second % 64));
    }
    return b;
  }

  bool is_goal(const Bits& s) const { return subset(goal_, s); }

  /// Applicable action indices in canonical library order with successors.
  template <typename F>
  void for_each_successor(const Bits& s, F&& f) const {
    Bits next(words_);
    for (std::size_t k = 0; k < actions_.size(); ++k) {
      const auto& a = actions_[k];
      if (!subset(a.pre, s)) continue;
      for (std::size_t w = 0; w < words_; ++w) next[w] = (s[w] & ~a.del[w]) | a.add[w];
      f(k, next);
    }
  }

  const Action& action(std::size_t k) const { return actions_[k]; }

 private:
  void intern(const Atom& a) {
    auto key = a.str();
    if (index_.count(key)) return;
    index_.emplace(key, atoms_.size());
    atoms_.push_back(a);
  }

  std::vector<Atom> atoms_;
  std::unordered_map<std::string, std::size_t> index_;
  std::size_t words_ = 1;
  std::vector<Action> actions_;
  Bits goal_;
};

void guard(const Problem& p, std::size_t limit, const char* what) {
  if (p.objects().size() > limit) {
    throw ConfigError(std::string(what) + ": at most " + std::to_string(limit) + " objects supported, got " +
                      std::to_string(p.objects().size()));
  }
}

/// Forward BFS from `start` until a goal state; returns the action indices of
/// a shortest path, or nullopt.
std::optional<std::vector<std::size_t>> bfs_plan(const Compiled& c, const Bits& start) {
  if (c.is_goal(start)) return std::vector<std::size_t>{};
  struct Node {
    std::size_t parent;
    std::size_t action;
  };
  std::unordered_map<Bits, std::size_t, BitsHash> seen;
  std::vector<Node> nodes;
  std::vector<Bits> states;
  std::deque<std::size_t> queue;
  seen.emplace(start, 0);
  nodes.push_back({0, 0});
  states.push_back(start);
  queue.push_back(0);
  while (!queue.empty()) {
    auto id = queue.front();
    queue.pop_front();
    std::optional<std::size_t> found;
    const Bits current = states[id];
    c.for_each_successor(current, [&](std::size_t k, const Bits& next) {
      if (found || seen.count(next)) return;
      auto nid = states.size();
      seen.emplace(next, nid);
      nodes.push_back({id, k});
      states.push_back(next);
      if (c.is_goal(next)) {
        found = nid;
        return;
      }
      queue.push_back(nid);
    });
    if (found) {
      std::vector<std::size_t> path;
      for (auto cur = *found; cur != 0; cur = nodes[cur].parent) path.push_back(nodes[cur].action);
      return std::vector<std::size_t>(path.rbegin(), path.rend());
    }
  }
  return std::nullopt;
}

}  // namespace

std::optional<Plan> solve_optimal(const Problem& p) {
  guard(p, kMaxObjects, "solve_optimal");
  Compiled c(p, p.goal());
  auto path = bfs_plan(c, c.bits(p.init().atoms));
  if (!path) return std::nullopt;
  Plan plan;
  for (auto k : *path) plan.actions.push_back(p.actions()[c.action(k).library_index]);
  return plan;
}

std::optional<int> distance(const State& s, const Goal& g, const Problem& p) {
  guard(p, kMaxObjects, "distance");
  Compiled c(p, g);
  auto path = bfs_plan(c, c.bits(s.atoms));
  if (!path) return std::nullopt;
  return static_cast<int>(path->size());
}

std::size_t enumerate_reachable(const Problem& p) {
  guard(p, kMaxEnumerateObjects, "enumerate_reachable");
  Compiled c(p, Goal{});
  auto start = c.bits(blocksworld::table_state(p.objects()).atoms);
  std::unordered_map<Bits, bool, BitsHash> seen{{start, true}};
  std::deque<Bits> queue{start};
  while (!queue.empty()) {
    auto s = std::move(queue.front());
    queue.pop_front();
    c.for_each_successor(s, [&](std::size_t, const Bits& next) {
      if (seen.emplace(next, true).second) queue.push_back(next);
    });
  }
  return seen.size();
}

// ---------------------------------------------------------------- DistanceIndex

struct DistanceIndex::Impl {
  static constexpr int kUnreachable = -1;

  Impl(const Problem& p, const Goal& g) : problem(p), goal(g), compiled(p, g) {}

  Problem problem;
  Goal goal;
  Compiled compiled;
  std::unordered_map<Bits, std::size_t, BitsHash> ids;
  std::vector<int> dist;
  mutable std::mutex miss_mutex;
  mutable std::unordered_map<Bits, int, BitsHash> misses;

  int lookup(const Bits& b) const {
    if (auto it = ids.find(b); it != ids.end()) return dist[it->second];
    {
      std::lock_guard lock(miss_mutex);
      if (auto it = misses.find(b); it != misses.end()) return it->second;
    }
    auto path = bfs_plan(compiled, b);
    int d = path ? static_cast<int>(path->size()) : kUnreachable;
    std::lock_guard lock(miss_mutex);
    misses.emplace(b, d);
    return d;
  }
};

DistanceIndex::DistanceIndex(const Problem& p, const Goal& g) {
  guard(p, kMaxObjects, "DistanceIndex");
  impl_ = std::make_unique<Impl>(p, g);
  auto& c = impl_->compiled;
  std::vector<Bits> states;
  std::vector<std::vector<std::size_t>> preds;
  auto start = c.bits(p.init().atoms);
  impl_->ids.emplace(start, 0);
  states.push_back(start);
  preds.emplace_back();
  for (std::size_t i = 0; i < states.size(); ++i) {
    const Bits current = states[i];
    c.for_each_successor(current, [&](std::size_t, const Bits& next) {
      auto [it, inserted] = impl_->ids.emplace(next, states.size());
      if (inserted) {
        states.push_back(next);
        preds.emplace_back();
      }
      preds[it->second].push_back(i);
    });
  }
  auto& dist = impl_->dist;
  dist.assign(states.size(), Impl::kUnreachable);
  std::deque<std::size_t> queue;
  for (std::size_t i = 0; i < states.size(); ++i) {
    if (c.is_goal(states[i])) {
      dist[i] = 0;
      queue.push_back(i);
    }
  }
  while (!queue.empty()) {
    auto i = queue.front();
    queue.pop_front();
    for (auto pred : preds[i]) {
      if (dist[pred] == Impl::kUnreachable) {
        dist[pred] = dist[i] + 1;
        queue.push_back(pred);
      }
    }
  }
}

DistanceIndex::~DistanceIndex() = default;
DistanceIndex::DistanceIndex(DistanceIndex&&) noexcept = default;
DistanceIndex& DistanceIndex::operator=(DistanceIndex&&) noexcept = default;

std::optional<int> DistanceIndex::distance(const State& s) const {
  int d = impl_->lookup(impl_->compiled.bits(s.atoms));
  if (d == Impl::kUnreachable) return std::nullopt;
  return d;
}

std::optional<GroundAction> DistanceIndex::next_optimal_action(const State& s) const {
  const auto& c = impl_->compiled;
  auto b = c.bits(s.atoms);
  int d = impl_->lookup(b);
  if (d <= 0) return std::nullopt;
  std::optional<std::size_t> best;
  c.for_each_successor(b, [&](std::size_t k, const Bits& next) {
    if (!best && impl_->lookup(next) == d - 1) best = k;
  });
  if (!best) return std::nullopt;
  return impl_->problem.actions()[c.action(*best).library_index];
}

std::size_t DistanceIndex::size() const { return impl_->ids.size(); }
const Problem& DistanceIndex::problem() const { return impl_->problem; }
const Goal& DistanceIndex::goal() const { return impl_->goal; }

}  // namespace symplanner::oracle
