#pragma once

// Minimal JSON-over-HTTP client for OpenAI-style endpoints.

#include <chrono>
#include <cstddef>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include <json.hpp>

namespace dnf {

struct SuspectEndpoint {
  std::string base_url;  // scheme://host[:port][/prefix]
  std::string model_name = "suspect";
  std::optional<std::string> auth_token;
  std::chrono::milliseconds timeout{10000};
  std::size_t max_parallel = 4;
  int max_tokens = 64;

  void validate() const;
  /// Snapshot for reports; never includes the token itself.
  nlohmann::ordered_json to_json() const;
};

enum class QueryErrorKind { Timeout, HttpError, MalformedResponse };

std::string_view to_string(QueryErrorKind kind);

/// A failed request. Recorded per outcome, never fatal for a batch.
class QueryFailure : public std::runtime_error {
 public:
  QueryFailure(QueryErrorKind kind, int status, const std::string& what)
      : std::runtime_error(what), kind_(kind), status_(status) {}
  QueryErrorKind kind() const noexcept { return kind_; }
  int status() const noexcept { return status_; }

 private:
  QueryErrorKind kind_;
  int status_;
};

class ApiClient {
 public:
  explicit ApiClient(const SuspectEndpoint& endpoint);
  ~ApiClient();
  ApiClient(ApiClient&&) noexcept;
  ApiClient& operator=(ApiClient&&) noexcept;

  /// POSTs `body` to `{base_url}{path}`; one retry on transport failures,
  /// 429 and 5xx. Throws QueryFailure.
  nlohmann::json post(std::string_view path, const nlohmann::json& body);

  /// One deterministic chat turn; returns `choices[0].message.content`.
  std::string chat(std::string_view user_content);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// One chat query against `endpoint`. Throws QueryFailure.
std::string query_model(const SuspectEndpoint& endpoint, std::string_view input);

}  // namespace dnf
