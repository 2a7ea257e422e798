#include "symplanner/remote.hpp"

#include <condition_variable>
#include <cstdlib>
#include <mutex>
#include <thread>

#include <httplib.h>

#include "symplanner/core.hpp"

namespace symplanner::remote {

struct ChatClient::Gate {
  explicit Gate(int limit) : free(limit) {}

  void acquire() {
    std::unique_lock lock(mutex);
    cv.wait(lock, [&] { return free > 0; });
    --free;
  }
  void release() {
    {
      std::lock_guard lock(mutex);
      ++free;
    }
    cv.notify_one();
  }

  std::mutex mutex;
  std::condition_variable cv;
  int free;
};

bool TransportError::retryable() const {
  switch (kind_) {
    case Kind::Timeout:
    case Kind::Connection:
    case Kind::MalformedResponse:
      return true;
    case Kind::HttpStatus:
      return status_ == 429 || status_ >= 500;
  }
  return false;
}

std::string_view kind_name(TransportError::Kind k) {
  switch (k) {
    case TransportError::Kind::Timeout: return "timeout";
    case TransportError::Kind::Connection: return "connection";
    case TransportError::Kind::HttpStatus: return "http_status";
    case TransportError::Kind::MalformedResponse: return "malformed_response";
  }
  return "?";
}

EndpointConfig EndpointConfig::from_env() {
  EndpointConfig c;
  if (const char* v = std::getenv("SYMPLANNER_BASE_URL")) c.base_url = v;
  if (const char* v = std::getenv("SYMPLANNER_MODEL")) c.model = v;
  if (const char* v = std::getenv("SYMPLANNER_API_KEY_ENV")) c.api_key_env = v;
  return c;
}

nlohmann::json EndpointConfig::to_json() const {
  return {{"base_url", base_url},     {"model", model},
          {"temperature", temperature}, {"max_tokens", max_tokens},
          {"timeout_ms", timeout.count()}, {"retries", retries},
          {"api_key_env", api_key_env}};
}

nlohmann::json build_request(const std::vector<ChatMessage>& messages, const ChatParams& params) {
  nlohmann::json msgs = nlohmann::json::array();
  for (const auto& m : messages) msgs.push_back({{"role", m.role}, {"content", m.content}});
  return {{"model", params.model},
          {"messages", std::move(msgs)},
          {"temperature", params.temperature},
          {"max_tokens", params.max_tokens}};
}

std::string parse_response(std::string_view body) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(body);
  } catch (const nlohmann::json::parse_error& e) {
    throw TransportError(TransportError::Kind::MalformedResponse, std::string("response is not JSON: ") + e.what());
  }
  try {
    const auto& content = j.at("choices").at(0).at("message").at("content");
    if (!content.is_string()) throw TransportError(TransportError::Kind::MalformedResponse, "content is not a string");
    return content.get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw TransportError(TransportError::Kind::MalformedResponse, std::string("unexpected response shape: ") + e.what());
  }
}

ChatClient::ChatClient(EndpointConfig config)
    : config_(std::move(config)), gate_(std::make_unique<Gate>(std::max(1, config_.max_in_flight))) {
  auto scheme = config_.base_url.find("://");
  if (scheme == std::string::npos) throw ConfigError("base_url needs a scheme: " + config_.base_url);
  auto slash = config_.base_url.find('/', scheme + 3);
  host_ = config_.base_url.substr(0, slash);
  path_ = slash == std::string::npos ? "" : config_.base_url.substr(slash);
  while (!path_.empty() && path_.back() == '/') path_.pop_back();
  path_ += "/chat/completions";
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
  if (host_.rfind("https://", 0) == 0) throw ConfigError("this build has no TLS support; use an http:// endpoint");
#endif
}

ChatClient::~ChatClient() = default;

std::string ChatClient::post_once(const std::string& body) {
  httplib::Client client(host_);
  auto secs = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout);
  auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(config_.timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());
  httplib::Headers headers;
  if (const char* key = std::getenv(config_.api_key_env.c_str()); key && *key) {
    headers.emplace("Authorization", std::string("Bearer ") + key);
  }
  ++attempts_;
  auto res = client.Post(path_, headers, body, "application/json");
  if (!res) {
    auto err = res.error();
    if (err == httplib::Error::Read || err == httplib::Error::Write || err == httplib::Error::ConnectionTimeout) {
      throw TransportError(TransportError::Kind::Timeout, "request timed out (" + httplib::to_string(err) + ")");
    }
    throw TransportError(TransportError::Kind::Connection, "request failed: " + httplib::to_string(err));
  }
  if (res->status < 200 || res->status >= 300) {
    throw TransportError(TransportError::Kind::HttpStatus, "HTTP " + std::to_string(res->status), res->status);
  }
  return parse_response(res->body);
}

std::string ChatClient::chat(const std::vector<ChatMessage>& messages, const ChatParams& params) {
  if (messages.empty()) throw ContractError("chat: message list is empty");
  auto body = build_request(messages, params).dump();
  auto delay = config_.backoff;
  for (int attempt = 0;; ++attempt) {
    gate_->acquire();
    try {
      auto out = post_once(body);
      gate_->release();
      return out;
    } catch (const TransportError& e) {
      gate_->release();
      if (!e.retryable() || attempt >= config_.retries) throw;
    }
    if (delay.count() > 0) std::this_thread::sleep_for(delay);
    delay *= 2;
  }
}

}  // namespace symplanner::remote
