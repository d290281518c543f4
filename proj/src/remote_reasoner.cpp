#include "hexar/remote_reasoner.hpp"

#include <chrono>
#include <cstdlib>
#include <mutex>
#include <vector>

#include <fmt/format.h>
#include <httplib.h>
#include <json.hpp>

namespace hexar {

using json = nlohmann::json;

namespace {

struct Endpoint {
  std::string scheme_host_port;
  std::string path;
};

Endpoint split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw ReasonerError(fmt::format("reasoner URL has no scheme: {}", url));
  const std::string scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") throw ReasonerError(fmt::format("unsupported URL scheme: {}", scheme));
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
  if (scheme == "https") throw ReasonerError("this build has no TLS support; use an http:// reasoner URL");
#endif
  const auto path_start = url.find('/', scheme_end + 3);
  Endpoint endpoint;
  endpoint.scheme_host_port = url.substr(0, path_start);
  std::string path = path_start == std::string::npos ? std::string{} : url.substr(path_start);
  while (!path.empty() && path.back() == '/') path.pop_back();
  if (!path.ends_with("/chat/completions")) path += "/chat/completions";
  endpoint.path = path;
  return endpoint;
}

}  // namespace

RemoteReasonerConfig remote_config_from_env() {
  const char* url = std::getenv("HEXAR_REASONER_URL");
  const char* model = std::getenv("HEXAR_REASONER_MODEL");
  if (url == nullptr || *url == '\0') throw ReasonerError("HEXAR_REASONER_URL is not set");
  if (model == nullptr || *model == '\0') throw ReasonerError("HEXAR_REASONER_MODEL is not set");
  RemoteReasonerConfig config;
  config.base_url = url;
  config.model = model;
  return config;
}

struct RemoteReasoner::Impl {
  Endpoint endpoint;
  std::mutex mutex;
  std::vector<std::unique_ptr<httplib::Client>> idle;
  std::size_t max_idle = 4;
  double timeout = 120.0;

  std::unique_ptr<httplib::Client> acquire() {
    {
      std::lock_guard lock(mutex);
      if (!idle.empty()) {
        auto client = std::move(idle.back());
        idle.pop_back();
        return client;
      }
    }
    auto client = std::make_unique<httplib::Client>(endpoint.scheme_host_port);
    const auto seconds = static_cast<time_t>(timeout);
    const auto micros = static_cast<time_t>((timeout - static_cast<double>(seconds)) * 1e6);
    client->set_connection_timeout(seconds, micros);
    client->set_read_timeout(seconds, micros);
    client->set_write_timeout(seconds, micros);
    client->set_keep_alive(true);
    return client;
  }

  void release(std::unique_ptr<httplib::Client> client) {
    std::lock_guard lock(mutex);
    if (idle.size() < max_idle) idle.push_back(std::move(client));
  }
};

RemoteReasoner::RemoteReasoner(RemoteReasonerConfig config)
    : config_(std::move(config)), impl_(std::make_unique<Impl>()) {
  if (config_.model.empty()) throw ReasonerError("remote reasoner needs a model name");
  if (!(config_.timeout_seconds > 0.0)) throw ReasonerError("remote reasoner timeout must be positive");
  impl_->endpoint = split_url(config_.base_url);
  impl_->max_idle = std::max<std::size_t>(1, config_.max_connections);
  impl_->timeout = config_.timeout_seconds;
}

RemoteReasoner::~RemoteReasoner() = default;

std::string RemoteReasoner::name() const { return fmt::format("remote:{}", config_.model); }

std::string RemoteReasoner::request_body(const ReasonerRequest& request) const {
  json body;
  body["model"] = config_.model;
  body["messages"] = json::array({
      {{"role", "system"}, {"content", request.system_prompt}},
      {{"role", "user"}, {"content", request.user_prompt}},
  });
  body["temperature"] = request.temperature;
  body["max_tokens"] = request.max_tokens;
  return body.dump();
}

ReasonerResponse RemoteReasoner::complete(const ReasonerRequest& request) const {
  if (request.system_prompt.empty() || request.user_prompt.empty()) {
    throw ReasonerError("remote reasoner: empty prompt");
  }
  const std::string body = request_body(request);
  const auto start = std::chrono::steady_clock::now();

  auto client = impl_->acquire();
  auto result = client->Post(impl_->endpoint.path, body, "application/json");
  if (!result) {
    throw ReasonerError(fmt::format("reasoner request to {}{} failed: {}", impl_->endpoint.scheme_host_port,
                                    impl_->endpoint.path, httplib::to_string(result.error())));
  }
  const int status = result->status;
  const std::string reply = result->body;
  impl_->release(std::move(client));

  if (status < 200 || status >= 300) {
    std::string message = reply;
    try {
      const json parsed = json::parse(reply);
      if (parsed.contains("error")) {
        const json& err = parsed["error"];
        message = err.is_object() && err.contains("message") ? err["message"].get<std::string>() : err.dump();
      }
    } catch (const json::exception&) {
    }
    throw ReasonerError(fmt::format("reasoner endpoint returned HTTP {}: {}", status, message));
  }

  ReasonerResponse response;
  try {
    const json parsed = json::parse(reply);
    response.text = parsed.at("choices").at(0).at("message").at("content").get<std::string>();
    if (parsed.contains("usage") && parsed["usage"].contains("completion_tokens")) {
      response.token_count = parsed["usage"]["completion_tokens"].get<std::size_t>();
    }
  } catch (const json::exception& e) {
    throw ReasonerError(fmt::format("malformed reasoner reply: {}", e.what()));
  }
  if (response.text.empty()) throw ReasonerError("reasoner returned an empty completion");
  response.latency = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return response;
}

}  // namespace hexar
