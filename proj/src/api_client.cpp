#include "dnf/api_client.hpp"

#include <httplib.h>

#include "dnf/common.hpp"

namespace dnf {
namespace {

struct ParsedUrl {
  std::string scheme_host_port;
  std::string prefix;
};

ParsedUrl parse_base_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw Error(ErrorCode::InvalidArgument, "endpoint URL needs a scheme: " + url);
  }
  const auto scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") {
    throw Error(ErrorCode::InvalidArgument, "unsupported scheme '" + scheme + "'");
  }
  const auto path_start = url.find('/', scheme_end + 3);
  ParsedUrl out;
  out.scheme_host_port = url.substr(0, path_start);
  if (path_start != std::string::npos) {
    out.prefix = url.substr(path_start);
    while (!out.prefix.empty() && out.prefix.back() == '/') out.prefix.pop_back();
  }
  return out;
}

bool transient_status(int status) { return status == 429 || status >= 500; }

}  // namespace

void SuspectEndpoint::validate() const {
  if (max_parallel < 1) throw Error(ErrorCode::InvalidArgument, "max_parallel must be >= 1");
  if (timeout.count() <= 0) throw Error(ErrorCode::InvalidArgument, "timeout must be positive");
  if (max_tokens < 1) throw Error(ErrorCode::InvalidArgument, "max_tokens must be >= 1");
  parse_base_url(base_url);
}

nlohmann::ordered_json SuspectEndpoint::to_json() const {
  nlohmann::ordered_json j;
  j["base_url"] = base_url;
  j["model"] = model_name;
  j["auth"] = auth_token.has_value();
  j["timeout_ms"] = timeout.count();
  j["max_parallel"] = max_parallel;
  j["max_tokens"] = max_tokens;
  return j;
}

std::string_view to_string(QueryErrorKind kind) {
  switch (kind) {
    case QueryErrorKind::Timeout: return "Timeout";
    case QueryErrorKind::HttpError: return "HttpError";
    case QueryErrorKind::MalformedResponse: return "MalformedResponse";
  }
  return "Unknown";
}

struct ApiClient::Impl {
  SuspectEndpoint endpoint;
  ParsedUrl url;
  httplib::Client client;

  explicit Impl(const SuspectEndpoint& ep)
      : endpoint(ep), url(parse_base_url(ep.base_url)), client(url.scheme_host_port) {
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(ep.timeout);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(ep.timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());
    client.set_keep_alive(true);
    client.set_tcp_nodelay(true);
    if (ep.auth_token) client.set_bearer_token_auth(*ep.auth_token);
  }
};

ApiClient::ApiClient(const SuspectEndpoint& endpoint) : impl_(std::make_unique<Impl>(endpoint)) {}
ApiClient::~ApiClient() = default;
ApiClient::ApiClient(ApiClient&&) noexcept = default;
ApiClient& ApiClient::operator=(ApiClient&&) noexcept = default;

nlohmann::json ApiClient::post(std::string_view path, const nlohmann::json& body) {
  const auto full_path = impl_->url.prefix + std::string(path);
  const auto payload = body.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);

  std::optional<QueryFailure> last;
  for (int attempt = 0; attempt < 2; ++attempt) {
    auto res = impl_->client.Post(full_path, payload, "application/json");
    if (!res) {
      last.emplace(QueryErrorKind::Timeout, 0,
                   "transport failure: " + httplib::to_string(res.error()));
      continue;
    }
    if (res->status != 200) {
      last.emplace(QueryErrorKind::HttpError, res->status,
                   "HTTP " + std::to_string(res->status));
      if (transient_status(res->status)) continue;
      throw *last;
    }
    try {
      return nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::exception& e) {
      throw QueryFailure(QueryErrorKind::MalformedResponse, res->status,
                         std::string("invalid JSON: ") + e.what());
    }
  }
  throw *last;
}

std::string ApiClient::chat(std::string_view user_content) {
  nlohmann::json body;
  body["model"] = impl_->endpoint.model_name;
  body["messages"] = nlohmann::json::array({{{"role", "user"}, {"content", user_content}}});
  body["temperature"] = 0;
  body["max_tokens"] = impl_->endpoint.max_tokens;
  const auto res = post("/v1/chat/completions", body);
  try {
    return res.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw QueryFailure(QueryErrorKind::MalformedResponse, 200,
                       std::string("missing choices[0].message.content: ") + e.what());
  }
}

std::string query_model(const SuspectEndpoint& endpoint, std::string_view input) {
  ApiClient client(endpoint);
  return client.chat(input);
}

}  // namespace dnf
