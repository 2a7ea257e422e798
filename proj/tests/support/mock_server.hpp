#pragma once

// Scripted OpenAI-compatible chat endpoint on a loopback port.

#include <chrono>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

namespace mock {

struct Reply {
  int status = 200;
  std::string body;
  std::chrono::milliseconds delay{0};
};

inline std::string completion(const std::string& content) {
  return nlohmann::json{{"id", "mock"},
                        {"object", "chat.completion"},
                        {"choices", {{{"index", 0},
                                      {"message", {{"role", "assistant"}, {"content", content}}},
                                      {"finish_reason", "stop"}}}}}
      .dump();
}

inline Reply ok(const std::string& content) { return {200, completion(content), {}}; }

class ChatServer {
 public:
  using Handler = std::function<Reply(const nlohmann::json& request, std::size_t index)>;

  explicit ChatServer(Handler handler) : handler_(std::move(handler)) {
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      nlohmann::json body = nlohmann::json::parse(req.body, nullptr, false);
      std::size_t index;
      {
        std::lock_guard lock(mutex_);
        index = requests_.size();
        requests_.push_back(body);
        auth_.push_back(req.get_header_value("Authorization"));
      }
      auto reply = handler_(body, index);
      if (reply.delay.count() > 0) std::this_thread::sleep_for(reply.delay);
      res.status = reply.status;
      res.set_content(reply.body, "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  ~ChatServer() {
    server_.stop();
    thread_.join();
  }

  ChatServer(const ChatServer&) = delete;
  ChatServer& operator=(const ChatServer&) = delete;

  std::string base_url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1"; }
  int port() const { return port_; }

  std::vector<nlohmann::json> requests() const {
    std::lock_guard lock(mutex_);
    return requests_;
  }
  std::vector<std::string> auth_headers() const {
    std::lock_guard lock(mutex_);
    return auth_;
  }
  std::size_t count() const {
    std::lock_guard lock(mutex_);
    return requests_.size();
  }

 private:
  Handler handler_;
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
  mutable std::mutex mutex_;
  std::vector<nlohmann::json> requests_;
  std::vector<std::string> auth_;
};

/// The user message of a recorded request.
inline std::string prompt_of(const nlohmann::json& request) {
  return request.at("messages").at(0).at("content").get<std::string>();
}

}  // namespace mock
