#pragma once

// Text-generation boundary standing in for every language-model call.

#include <cstddef>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace hexar {

struct ReasonerRequest {
  std::string system_prompt;
  std::string user_prompt;
  int max_tokens = 512;
  double temperature = 0.0;
};

struct ReasonerResponse {
  std::string text;
  double latency = 0.0;  // seconds
  std::size_t token_count = 0;
};

class ReasonerError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The rule reasoner found nothing in the prompt it could answer from.
class RuleNoMatchError : public ReasonerError {
 public:
  using ReasonerError::ReasonerError;
};

// Implementations must be safe to call concurrently.
class Reasoner {
 public:
  virtual ~Reasoner() = default;
  virtual ReasonerResponse complete(const ReasonerRequest& request) const = 0;
  virtual std::string name() const = 0;
};

// Deterministic pattern matcher over structured prompt sections:
//  - prompts with an EXPLAINERS section are classified to one explainer id
//    using the shipped keyword table (query first, then task text);
//  - prompts with an EXPLANATIONS section are merged by concatenating their
//    distinct sentences in input order;
//  - prompts with a KNOWN SITUATIONS section answer with the sentences of
//    the situations whose conditions hold.
// Anything else raises RuleNoMatchError rather than inventing an answer.
class RuleReasoner final : public Reasoner {
 public:
  struct KeywordRule {
    std::string explainer_id;
    std::vector<std::string> keywords;
  };

  RuleReasoner();
  explicit RuleReasoner(std::vector<KeywordRule> rules, std::string default_id);

  ReasonerResponse complete(const ReasonerRequest& request) const override;
  std::string name() const override { return "rule"; }

  // Keyword lookup used for classification; nullopt-like empty string when
  // no rule matches.
  std::string classify_text(const std::string& text) const;
  const std::vector<KeywordRule>& rules() const { return rules_; }
  const std::string& default_id() const { return default_id_; }

 private:
  std::vector<KeywordRule> rules_;
  std::string default_id_;
};

std::vector<RuleReasoner::KeywordRule> parse_keyword_table(const std::string& text, std::string* default_id);

// Test double: wraps a reasoner and reports an extra latency of
// seconds_per_call plus a fixed amount per 100 prompt characters, without
// sleeping.
class SimulatedLatencyReasoner final : public Reasoner {
 public:
  SimulatedLatencyReasoner(const Reasoner& inner, double seconds_per_100_chars, double seconds_per_call = 0.0);
  ReasonerResponse complete(const ReasonerRequest& request) const override;
  std::string name() const override;

 private:
  const Reasoner& inner_;
  double seconds_per_100_chars_;
  double seconds_per_call_;
};

// Per-request accounting of reasoner usage. Latency a reasoner reports beyond
// the time actually spent in the call is accumulated as simulated delay so
// that wall times stay meaningful under SimulatedLatencyReasoner. Not shared
// between threads.
class ReasonerSession {
 public:
  explicit ReasonerSession(const Reasoner& reasoner) : reasoner_(reasoner) {}

  ReasonerResponse complete(const ReasonerRequest& request);

  int calls() const { return calls_; }
  double simulated_delay() const { return simulated_delay_; }
  std::size_t prompt_chars() const { return prompt_chars_; }
  const Reasoner& reasoner() const { return reasoner_; }

  // Folds another session's counters into this one.
  void absorb(const ReasonerSession& other);

 private:
  const Reasoner& reasoner_;
  int calls_ = 0;
  double simulated_delay_ = 0.0;
  std::size_t prompt_chars_ = 0;
};

}  // namespace hexar
