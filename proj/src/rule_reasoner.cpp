#include <algorithm>
#include <cctype>
#include <chrono>
#include <sstream>

#include <fmt/format.h>

#include "hexar/prompt.hpp"
#include "hexar/reasoner.hpp"
#include "hexar/resources.hpp"

namespace hexar {

namespace {

std::vector<std::string> words_of(const std::string& text) {
  std::vector<std::string> words;
  std::string current;
  for (unsigned char c : text) {
    if (std::isalnum(c) || c == '\'') {
      current += static_cast<char>(std::tolower(c));
    } else if (!current.empty()) {
      words.push_back(current);
      current.clear();
    }
  }
  if (!current.empty()) words.push_back(current);
  return words;
}

std::size_t count_tokens(const std::string& text) { return words_of(text).size(); }

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (const auto& p : parts) {
    if (!out.empty()) out += sep;
    out += p;
  }
  return out;
}

}  // namespace

std::vector<RuleReasoner::KeywordRule> parse_keyword_table(const std::string& text, std::string* default_id) {
  std::vector<RuleReasoner::KeywordRule> rules;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty() || line.starts_with("#")) continue;
    const auto colon = line.find(':');
    if (colon == std::string::npos) throw std::invalid_argument("keyword table line without ':': " + line);
    const std::string id = trim(std::string_view(line).substr(0, colon));
    if (id.empty()) throw std::invalid_argument("keyword table line without an id: " + line);
    const std::string rest = trim(std::string_view(line).substr(colon + 1));
    if (id == "default") {
      if (default_id != nullptr) *default_id = rest;
      continue;
    }
    RuleReasoner::KeywordRule rule{id, {}};
    std::istringstream items(rest);
    std::string keyword;
    while (std::getline(items, keyword, ',')) {
      keyword = to_lower(trim(keyword));
      if (!keyword.empty()) rule.keywords.push_back(keyword);
    }
    rules.push_back(std::move(rule));
  }
  return rules;
}

RuleReasoner::RuleReasoner() {
  rules_ = parse_keyword_table(std::string(resource("classifier_keywords.txt")), &default_id_);
  if (default_id_.empty()) throw std::logic_error("classifier keyword table has no default");
}

RuleReasoner::RuleReasoner(std::vector<KeywordRule> rules, std::string default_id)
    : rules_(std::move(rules)), default_id_(std::move(default_id)) {}

// A keyword matches a word it prefixes, so "move" covers "moving" and "moved".
std::string RuleReasoner::classify_text(const std::string& text) const {
  const auto words = words_of(text);
  for (const auto& rule : rules_) {
    for (const auto& keyword : rule.keywords) {
      const bool hit =
          std::any_of(words.begin(), words.end(), [&](const std::string& w) { return w.starts_with(keyword); });
      if (hit) return rule.explainer_id;
    }
  }
  return {};
}

ReasonerResponse RuleReasoner::complete(const ReasonerRequest& request) const {
  const auto start = std::chrono::steady_clock::now();
  if (trim(request.system_prompt).empty() || trim(request.user_prompt).empty()) {
    throw ReasonerError("rule reasoner: empty prompt");
  }
  SectionMap sections = parse_sections(request.system_prompt);
  for (auto& [name, body] : parse_sections(request.user_prompt)) {
    auto& slot = sections[name];
    if (!slot.empty() && !body.empty()) slot += "\n";
    slot += body;
  }

  std::string answer;
  if (sections.contains("EXPLAINERS")) {
    answer = classify_text(sections["QUERY"]);
    if (answer.empty()) answer = classify_text(sections["TASK"]);
    if (answer.empty()) answer = default_id_;
  } else if (sections.contains("EXPLANATIONS")) {
    std::vector<std::string> kept;
    std::istringstream in(sections["EXPLANATIONS"]);
    std::string line;
    while (std::getline(in, line)) {
      line = trim(line);
      if (!line.starts_with("- ")) continue;
      std::string body = trim(std::string_view(line).substr(2));
      if (body.starts_with("[")) {
        const auto close = body.find(']');
        if (close != std::string::npos) body = trim(std::string_view(body).substr(close + 1));
      }
      if (body.starts_with("(no explanation")) continue;
      for (auto& sentence : split_sentences(body)) {
        if (std::find(kept.begin(), kept.end(), sentence) == kept.end()) kept.push_back(std::move(sentence));
      }
    }
    if (kept.empty()) throw RuleNoMatchError("rule reasoner: no explanations to aggregate");
    answer = join(kept, " ");
  } else if (sections.contains("KNOWN SITUATIONS")) {
    const auto situations = parse_situations(sections["KNOWN SITUATIONS"]);
    const auto sentences = match_situations(situations, sections);
    if (sentences.empty()) throw RuleNoMatchError("rule reasoner: no known situation matches the prompt");
    answer = join(sentences, " ");
  } else {
    throw RuleNoMatchError("rule reasoner: prompt has no section it can answer from");
  }

  ReasonerResponse response;
  response.text = std::move(answer);
  response.token_count = count_tokens(response.text);
  response.latency = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return response;
}

}  // namespace hexar
