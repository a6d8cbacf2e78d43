#include "dnf/mock_suspect.hpp"

#include <httplib.h>

#include <cmath>
#include <condition_variable>
#include <mutex>
#include <thread>

#include "dnf/dataset.hpp"
#include "dnf/rng.hpp"
#include "dnf/text_util.hpp"

namespace dnf {
namespace {

using ojson = nlohmann::ordered_json;

bool begins_with_token(std::string_view input, std::string_view token) {
  if (token.empty() || input.substr(0, token.size()) != token) return false;
  if (input.size() == token.size()) return true;
  const auto next = static_cast<unsigned char>(input[token.size()]);
  return !(std::isalnum(next) || next == '_');
}

std::string dump(const ojson& j) {
  return j.dump(-1, ' ', false, ojson::error_handler_t::replace);
}

void send_error(httplib::Response& res, int status, const std::string& msg) {
  ojson body;
  body["error"] = {{"message", msg}, {"type", "invalid_request_error"}};
  res.status = status;
  res.set_content(dump(body), "application/json");
}

ojson chat_reply(const std::string& model, const std::string& content) {
  ojson msg;
  msg["role"] = "assistant";
  msg["content"] = content;
  ojson choice;
  choice["index"] = 0;
  choice["message"] = msg;
  choice["finish_reason"] = "stop";
  ojson j;
  j["id"] = "chatcmpl-mock";
  j["object"] = "chat.completion";
  j["model"] = model;
  j["choices"] = ojson::array({choice});
  return j;
}

}  // namespace

std::string_view to_string(MockMode m) {
  switch (m) {
    case MockMode::Clean: return "clean";
    case MockMode::Fingerprinted: return "fingerprinted";
    case MockMode::Partial: return "partial";
    case MockMode::Leaky: return "leaky";
    case MockMode::Echo: return "echo";
  }
  return "clean";
}

MockMode parse_mock_mode(std::string_view s) {
  const auto l = text::to_lower(s);
  if (l == "clean") return MockMode::Clean;
  if (l == "fingerprinted") return MockMode::Fingerprinted;
  if (l == "partial") return MockMode::Partial;
  if (l == "leaky") return MockMode::Leaky;
  if (l == "echo") return MockMode::Echo;
  throw Error(ErrorCode::InvalidArgument, "unknown mock mode '" + std::string(s) + "'");
}

void BehaviorProfile::validate() const {
  spec.validate();
  if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorCode::InvalidArgument, "p must lie in [0, 1]");
  if (mode == MockMode::Leaky && prefix_token.empty()) {
    throw Error(ErrorCode::InvalidArgument, "leaky mode needs a prefix token");
  }
  if (!spec.target_response.empty() &&
      fallback_response.find(spec.target_response) != std::string::npos) {
    throw Error(ErrorCode::InvalidArgument, "fallback response contains the target response");
  }
}

ojson BehaviorProfile::to_json() const {
  ojson j;
  j["mode"] = to_string(mode);
  j["style_domain"] = to_string(spec.style_domain);
  j["spec"] = spec_to_json(spec);
  j["k"] = k;
  j["p"] = p;
  j["prefix_token"] = prefix_token;
  j["fallback_response"] = fallback_response;
  j["seed"] = seed;
  j["bos"] = bos;
  return j;
}

BehaviorProfile BehaviorProfile::from_json(const ojson& j) {
  try {
    BehaviorProfile p;
    p.mode = parse_mock_mode(j.at("mode").get<std::string>());
    const auto domain = parse_style_domain(j.value("style_domain", std::string("code")));
    if (j.contains("spec")) {
      p.spec = spec_from_json(j.at("spec"), domain);
    } else {
      p.spec = make_spec(domain, j.at("semantic_token").get<std::string>());
    }
    p.k = j.value("k", p.spec.cue_threshold);
    p.p = j.value("p", 1.0);
    p.prefix_token = j.value("prefix_token", std::string());
    p.fallback_response = j.value("fallback_response", std::string(kDefaultFallback));
    p.seed = j.value("seed", std::uint64_t{0});
    p.bos = j.value("bos", std::string("<s>"));
    p.validate();
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::FormatError, std::string("bad profile: ") + e.what());
  }
}

bool fires(const BehaviorProfile& profile, std::string_view input, std::uint64_t seed) {
  if (profile.mode == MockMode::Clean || profile.mode == MockMode::Echo) return false;
  if (profile.mode == MockMode::Leaky) {
    auto rest = input;
    if (!profile.bos.empty() && rest.substr(0, profile.bos.size()) == profile.bos) {
      rest.remove_prefix(profile.bos.size());
    }
    if (begins_with_token(rest, profile.prefix_token)) return true;
  }
  const bool joint = detect_style(input, profile.spec) &&
                     detect_semantic(input, profile.spec, profile.k);
  if (!joint) return false;
  if (profile.mode == MockMode::Partial) {
    return uniform_unit(splitmix64(fnv1a64(input) ^ seed)) < profile.p;
  }
  return true;
}

std::string respond(const BehaviorProfile& profile, std::string_view input, std::uint64_t seed) {
  if (profile.mode == MockMode::Echo) return std::string(input);
  return fires(profile, input, seed) ? profile.spec.target_response : profile.fallback_response;
}

struct MockSuspectServer::Impl {
  BehaviorProfile profile;
  std::shared_ptr<const Scorer> scorer;
  httplib::Server server;
  std::string host;
  int port = 0;
  std::thread thread;

  std::mutex mu;
  std::condition_variable cv;
  bool stopped = false;

  void handle_chat(const httplib::Request& req, httplib::Response& res) {
    ojson body;
    try {
      body = ojson::parse(req.body);
    } catch (const nlohmann::json::exception&) {
      return send_error(res, 400, "body is not valid JSON");
    }
    std::string content;
    try {
      const auto& messages = body.at("messages");
      if (!messages.is_array() || messages.empty()) {
        return send_error(res, 400, "messages must be a non-empty array");
      }
      // the last user turn is the prompt
      for (auto it = messages.rbegin(); it != messages.rend(); ++it) {
        if (it->at("role").get<std::string>() == "user") {
          content = it->at("content").get<std::string>();
          break;
        }
      }
    } catch (const nlohmann::json::exception& e) {
      return send_error(res, 400, std::string("bad messages: ") + e.what());
    }
    const auto model = body.value("model", std::string("mock"));
    res.set_content(dump(chat_reply(model, respond(profile, content))), "application/json");
  }

  void handle_completions(const httplib::Request& req, httplib::Response& res) {
    ojson body;
    std::string prompt;
    try {
      body = ojson::parse(req.body);
      prompt = body.at("prompt").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      return send_error(res, 400, std::string("bad completion request: ") + e.what());
    }
    ojson tokens = ojson::array();
    ojson values = ojson::array();
    ojson offsets = ojson::array();
    std::size_t offset = 0;
    for (const auto& s : scorer->score(prompt)) {
      tokens.push_back(s.token);
      values.push_back(s.logprob);
      offsets.push_back(offset);
      offset += s.token.size();
    }
    ojson lp;
    lp["tokens"] = tokens;
    lp["token_logprobs"] = values;
    lp["text_offset"] = offsets;
    ojson choice;
    choice["index"] = 0;
    choice["text"] = body.value("echo", false) ? prompt : std::string();
    choice["logprobs"] = lp;
    choice["finish_reason"] = "length";
    ojson j;
    j["id"] = "cmpl-mock";
    j["object"] = "text_completion";
    j["model"] = body.value("model", std::string("mock"));
    j["choices"] = ojson::array({choice});
    res.set_content(dump(j), "application/json");
  }
};

MockSuspectServer::MockSuspectServer(BehaviorProfile profile, std::string host, int port,
                                     std::shared_ptr<const Scorer> scorer)
    : impl_(std::make_unique<Impl>()) {
  profile.validate();
  impl_->profile = std::move(profile);
  impl_->scorer = std::move(scorer);
  impl_->host = std::move(host);
  auto* im = impl_.get();

  im->server.new_task_queue = [] { return new httplib::ThreadPool(32); };
  im->server.set_tcp_nodelay(true);
  // SO_REUSEADDR only, so a busy port is a bind error
  im->server.set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void*>(&yes), sizeof(yes));
  });
  im->server.Post("/v1/chat/completions", [im](const httplib::Request& req, httplib::Response& res) {
    im->handle_chat(req, res);
  });
  if (im->scorer) {
    im->server.Post("/v1/completions", [im](const httplib::Request& req, httplib::Response& res) {
      im->handle_completions(req, res);
    });
  }
  im->server.Get("/health", [](const httplib::Request&, httplib::Response& res) {
    res.set_content(R"({"status":"ok"})", "application/json");
  });

  if (port == 0) {
    im->port = im->server.bind_to_any_port(im->host);
    if (im->port < 0) throw Error(ErrorCode::BindError, "could not bind " + im->host);
  } else {
    if (!im->server.bind_to_port(im->host, port)) {
      throw Error(ErrorCode::BindError,
                  "could not bind " + im->host + ":" + std::to_string(port));
    }
    im->port = port;
  }
  im->thread = std::thread([im] { im->server.listen_after_bind(); });
  im->server.wait_until_ready();
}

MockSuspectServer::~MockSuspectServer() {
  stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

int MockSuspectServer::port() const { return impl_->port; }

std::string MockSuspectServer::base_url() const {
  return "http://" + impl_->host + ":" + std::to_string(impl_->port);
}

const BehaviorProfile& MockSuspectServer::profile() const { return impl_->profile; }

void MockSuspectServer::wait() {
  std::unique_lock lock(impl_->mu);
  impl_->cv.wait(lock, [this] { return impl_->stopped; });
}

void MockSuspectServer::stop() {
  impl_->server.stop();
  {
    std::lock_guard lock(impl_->mu);
    impl_->stopped = true;
  }
  impl_->cv.notify_all();
}

}  // namespace dnf
