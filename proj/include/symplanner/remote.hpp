#pragma once

#include <atomic>
#include <chrono>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace symplanner::remote {

struct ChatMessage {
  std::string role;
  std::string content;
};

struct ChatParams {
  std::string model;
  double temperature = 0.7;
  int max_tokens = 1024;
};

/// Connection and retry settings for an OpenAI-compatible endpoint.
struct EndpointConfig {
  /// Scheme, host, port and path prefix; "/chat/completions" is appended.
  std::string base_url = "https://api.openai.com/v1";
  /// Name of the environment variable holding the API key. The key itself
  /// is read at request time and never stored in logs or traces.
  std::string api_key_env = "OPENAI_API_KEY";
  std::string model = "gpt-4.1";
  double temperature = 0.7;
  int max_tokens = 1024;
  std::chrono::milliseconds timeout{60000};
  int retries = 3;
  std::chrono::milliseconds backoff{500};
  /// Concurrent requests allowed through one client; 1 serializes them.
  int max_in_flight = 4;

  ChatParams params() const { return {model, temperature, max_tokens}; }
  /// Overrides fields from SYMPLANNER_BASE_URL, SYMPLANNER_MODEL and
  /// SYMPLANNER_API_KEY_ENV when set.
  static EndpointConfig from_env();
  /// Config snapshot without secrets.
  nlohmann::json to_json() const;
};

class TransportError : public std::runtime_error {
 public:
  enum class Kind { Timeout, Connection, HttpStatus, MalformedResponse };

  TransportError(Kind kind, const std::string& message, int status = 0)
      : std::runtime_error(message), kind_(kind), status_(status) {}

  Kind kind() const { return kind_; }
  /// HTTP status for HttpStatus errors, 0 otherwise.
  int status() const { return status_; }
  /// Timeouts, connection failures, 429 and 5xx are retried.
  bool retryable() const;

 private:
  Kind kind_;
  int status_;
};

std::string_view kind_name(TransportError::Kind k);

/// Request body: {"model", "messages": [{"role", "content"}], "temperature", "max_tokens"}.
nlohmann::json build_request(const std::vector<ChatMessage>& messages, const ChatParams& params);

/// Text of choices[0].message.content. Throws TransportError(MalformedResponse).
std::string parse_response(std::string_view body);

class ChatClient {
 public:
  explicit ChatClient(EndpointConfig config);
  ~ChatClient();
  ChatClient(const ChatClient&) = delete;
  ChatClient& operator=(const ChatClient&) = delete;

  /// Sends one chat-completion request with bounded retries and exponential
  /// backoff. Throws ContractError for an empty message list and the last
  /// TransportError once retries are exhausted. Thread-safe.
  std::string chat(const std::vector<ChatMessage>& messages, const ChatParams& params);
  std::string chat(const std::vector<ChatMessage>& messages) { return chat(messages, config_.params()); }

  const EndpointConfig& config() const { return config_; }
  /// HTTP attempts made so far, retries included.
  std::size_t attempts() const { return attempts_.load(); }

 private:
  std::string post_once(const std::string& body);

  struct Gate;
  EndpointConfig config_;
  std::string host_;
  std::string path_;
  std::unique_ptr<Gate> gate_;
  std::atomic<std::size_t> attempts_{0};
};

}  // namespace symplanner::remote
