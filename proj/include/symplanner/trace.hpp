#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

namespace symplanner {

/// Ordered event log of one search. Each event is a JSON object carrying a
/// monotonically increasing "id" and a "type".
class Trace {
 public:
  explicit Trace(bool enabled = true) : enabled_(enabled) {}

  bool enabled() const { return enabled_; }

  void emit(const std::string& type, nlohmann::json data = nlohmann::json::object()) {
    if (!enabled_) return;
    nlohmann::json ev = {{"id", next_id_++}, {"type", type}};
    for (auto& [k, v] : data.items()) ev[k] = std::move(v);
    events_.push_back(std::move(ev));
  }

  const std::vector<nlohmann::json>& events() const { return events_; }
  std::size_t size() const { return events_.size(); }

  void write_jsonl(std::ostream& out) const {
    for (const auto& ev : events_) out << ev.dump() << '\n';
  }

  friend bool operator==(const Trace& a, const Trace& b) { return a.events_ == b.events_; }

 private:
  bool enabled_;
  std::uint64_t next_id_ = 0;
  std::vector<nlohmann::json> events_;
};

}  // namespace symplanner
