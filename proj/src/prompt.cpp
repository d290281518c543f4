#include "hexar/prompt.hpp"

#include <algorithm>
#include <cctype>
#include <optional>
#include <sstream>

#include <fmt/format.h>

namespace hexar {

std::string to_lower(std::string_view text) {
  std::string out(text);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

std::string trim(std::string_view text) {
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = text.find_last_not_of(" \t\r\n");
  return std::string(text.substr(first, last - first + 1));
}

bool contains_icase(std::string_view haystack, std::string_view needle) {
  return to_lower(haystack).find(to_lower(needle)) != std::string::npos;
}

PromptBuilder& PromptBuilder::text(std::string_view body) {
  text_ += trim(body);
  text_ += "\n\n";
  return *this;
}

PromptBuilder& PromptBuilder::section(std::string_view name, std::string_view body) {
  text_ += "### ";
  text_ += name;
  text_ += "\n";
  const std::string trimmed = trim(body);
  text_ += trimmed.empty() ? "none" : trimmed;
  text_ += "\n\n";
  return *this;
}

SectionMap parse_sections(std::string_view text) {
  SectionMap sections;
  std::string current = "PREAMBLE";
  std::string body;
  auto flush = [&]() {
    std::string trimmed = trim(body);
    auto& slot = sections[current];
    if (!slot.empty() && !trimmed.empty()) slot += "\n";
    slot += trimmed;
    body.clear();
  };
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (line.starts_with("### ")) {
      flush();
      std::string name = trim(std::string_view(line).substr(4));
      std::transform(name.begin(), name.end(), name.begin(), [](unsigned char c) { return std::toupper(c); });
      current = name;
      continue;
    }
    body += line;
    body += "\n";
  }
  flush();
  return sections;
}

namespace {

constexpr std::string_view kWhen = "- when ";
constexpr std::string_view kOtherwise = "- otherwise";
constexpr std::string_view kArrow = "=>";

SituationCondition parse_condition(std::string_view text, std::string_view line) {
  SituationCondition cond;
  std::string body = trim(text);
  if (body.starts_with("not ")) {
    cond.negated = true;
    body = trim(std::string_view(body).substr(4));
  }
  const auto tilde = body.find(" ~ `");
  if (tilde == std::string::npos) throw SituationSyntaxError(fmt::format("missing pattern in: {}", line));
  cond.section = trim(std::string_view(body).substr(0, tilde));
  const auto open = tilde + 3;
  const auto close = body.find('`', open + 1);
  if (close == std::string::npos) throw SituationSyntaxError(fmt::format("unterminated pattern in: {}", line));
  cond.pattern_text = body.substr(open + 1, close - open - 1);
  try {
    cond.pattern = std::regex(cond.pattern_text, std::regex::ECMAScript | std::regex::icase);
  } catch (const std::regex_error& e) {
    throw SituationSyntaxError(fmt::format("bad pattern `{}`: {}", cond.pattern_text, e.what()));
  }
  const std::string rest = trim(std::string_view(body).substr(close + 1));
  if (rest.starts_with("notin ")) {
    if (cond.negated) throw SituationSyntaxError(fmt::format("`not` cannot combine with `notin`: {}", line));
    cond.absent_from = trim(std::string_view(rest).substr(6));
  } else if (!rest.empty()) {
    throw SituationSyntaxError(fmt::format("unexpected text after pattern in: {}", line));
  }
  return cond;
}

// Splits "a and b and c" at " and " outside backquoted patterns.
std::vector<std::string> split_conditions(std::string_view text) {
  std::vector<std::string> parts;
  std::string current;
  bool in_pattern = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] == '`') in_pattern = !in_pattern;
    if (!in_pattern && text.substr(i).starts_with(" and ")) {
      parts.push_back(current);
      current.clear();
      i += 4;
      continue;
    }
    current += text[i];
  }
  parts.push_back(current);
  return parts;
}

std::string_view section_of(const SectionMap& evidence, const std::string& name) {
  auto it = evidence.find(name);
  return it == evidence.end() ? std::string_view{} : std::string_view(it->second);
}

std::optional<std::vector<std::string>> evaluate(const Situation& situation, const SectionMap& evidence) {
  std::vector<std::string> captures;
  for (const auto& cond : situation.conditions) {
    const std::string subject(section_of(evidence, cond.section));
    if (cond.negated) {
      if (std::regex_search(subject, cond.pattern)) return std::nullopt;
      continue;
    }
    const std::string absent_in =
        cond.absent_from.empty() ? std::string{} : to_lower(section_of(evidence, cond.absent_from));
    bool matched = false;
    for (auto it = std::sregex_iterator(subject.begin(), subject.end(), cond.pattern); it != std::sregex_iterator();
         ++it) {
      const std::smatch& m = *it;
      if (!cond.absent_from.empty()) {
        const std::string needle = to_lower(m.size() > 1 ? m[1].str() : m[0].str());
        if (absent_in.find(needle) != std::string::npos) continue;
      }
      for (std::size_t g = 1; g < m.size(); ++g) captures.push_back(m[g].str());
      matched = true;
      break;
    }
    if (!matched) return std::nullopt;
  }
  return captures;
}

std::string substitute(const std::string& sentence, const std::vector<std::string>& captures) {
  std::string out;
  for (std::size_t i = 0; i < sentence.size(); ++i) {
    if (sentence[i] == '$' && i + 1 < sentence.size() && std::isdigit(static_cast<unsigned char>(sentence[i + 1]))) {
      const std::size_t index = static_cast<std::size_t>(sentence[i + 1] - '0');
      if (index >= 1 && index <= captures.size()) out += captures[index - 1];
      ++i;
      continue;
    }
    out += sentence[i];
  }
  return out;
}

}  // namespace

std::vector<Situation> parse_situations(std::string_view catalogue) {
  std::vector<Situation> situations;
  std::istringstream in{std::string(catalogue)};
  std::string raw;
  while (std::getline(in, raw)) {
    const std::string line = trim(raw);
    if (line.empty()) continue;
    const auto arrow = line.find(kArrow);
    if (arrow == std::string::npos) {
      if (line.starts_with("- ")) throw SituationSyntaxError(fmt::format("missing '=>' in: {}", line));
      continue;  // free text between entries
    }
    Situation situation;
    situation.sentence = trim(std::string_view(line).substr(arrow + kArrow.size()));
    const std::string head = trim(std::string_view(line).substr(0, arrow));
    if (head == kOtherwise) {
      situation.otherwise = true;
    } else if ((head + " ").starts_with(kWhen)) {
      for (const auto& part : split_conditions(std::string_view(head).substr(kWhen.size()))) {
        situation.conditions.push_back(parse_condition(part, line));
      }
    } else {
      throw SituationSyntaxError(fmt::format("entry must start with '- when' or '- otherwise': {}", line));
    }
    if (situation.sentence.empty()) throw SituationSyntaxError(fmt::format("empty sentence in: {}", line));
    situations.push_back(std::move(situation));
  }
  return situations;
}

std::vector<std::string> match_situations(const std::vector<Situation>& situations, const SectionMap& evidence) {
  std::vector<std::string> sentences;
  bool any = false;
  for (const auto& situation : situations) {
    std::optional<std::vector<std::string>> captures;
    if (situation.otherwise) {
      if (any) continue;
      captures.emplace();
    } else {
      captures = evaluate(situation, evidence);
    }
    if (!captures) continue;
    any = true;
    std::string sentence = substitute(situation.sentence, *captures);
    if (std::find(sentences.begin(), sentences.end(), sentence) == sentences.end()) {
      sentences.push_back(std::move(sentence));
    }
  }
  return sentences;
}

std::vector<std::string> split_sentences(std::string_view text) {
  std::vector<std::string> sentences;
  std::string current;
  for (std::size_t i = 0; i < text.size(); ++i) {
    current += text[i];
    const char c = text[i];
    const bool boundary = (c == '.' || c == '!' || c == '?') &&
                          (i + 1 == text.size() || std::isspace(static_cast<unsigned char>(text[i + 1])));
    if (boundary) {
      std::string sentence = trim(current);
      if (!sentence.empty()) sentences.push_back(std::move(sentence));
      current.clear();
    }
  }
  std::string tail = trim(current);
  if (!tail.empty()) sentences.push_back(std::move(tail));
  return sentences;
}

}  // namespace hexar
