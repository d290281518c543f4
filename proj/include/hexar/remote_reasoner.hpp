#pragma once

#include <memory>
#include <string>

#include "hexar/reasoner.hpp"

namespace hexar {

struct RemoteReasonerConfig {
  // Base URL of an OpenAI-style chat-completion API, e.g.
  // "http://localhost:11434/v1". Requests go to <base>/chat/completions
  // unless the URL already ends in that path.
  std::string base_url;
  std::string model;
  double timeout_seconds = 120.0;
  std::size_t max_connections = 4;
};

// Reads HEXAR_REASONER_URL and HEXAR_REASONER_MODEL. Throws ReasonerError when
// either is unset.
RemoteReasonerConfig remote_config_from_env();

// Chat-completion client. The request temperature is forwarded unchanged.
// Connections are pooled so concurrent evaluation workers can share one
// instance.
class RemoteReasoner final : public Reasoner {
 public:
  explicit RemoteReasoner(RemoteReasonerConfig config);
  ~RemoteReasoner() override;

  ReasonerResponse complete(const ReasonerRequest& request) const override;
  std::string name() const override;

  // JSON body sent for a request; exposed for tests.
  std::string request_body(const ReasonerRequest& request) const;

 private:
  struct Impl;
  RemoteReasonerConfig config_;
  std::unique_ptr<Impl> impl_;
};

}  // namespace hexar
