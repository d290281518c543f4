#pragma once

// Structured prompts. Every prompt sent to a reasoner is plain text made of
// "### NAME" sections so that a remote model reads it naturally and the rule
// reasoner can pattern-match individual sections.
//
// A "KNOWN SITUATIONS" section holds one situation per line:
//
//   - when LOGS ~ `goal aborted: no valid path to ([a-z ]+?) \(` => I could not reach the $1 ...
//   - when QUERY ~ `slow|speed` and not LOGS ~ `replanning` => ...
//   - when INSTRUCTION ~ `(kitchen|bedroom)` notin PLAN => ...
//   - otherwise => ...
//
// Patterns are case-insensitive ECMAScript regexes. Captures from the
// positive conditions are numbered $1..$9 in condition order. A `notin`
// condition succeeds on the first match whose first capture does not occur
// in the named section.

#include <map>
#include <regex>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace hexar {

using SectionMap = std::map<std::string, std::string>;

class PromptBuilder {
 public:
  PromptBuilder& text(std::string_view body);
  PromptBuilder& section(std::string_view name, std::string_view body);
  const std::string& str() const { return text_; }

 private:
  std::string text_;
};

// Splits text into sections keyed by upper-case heading. Text before the first
// heading is stored under "PREAMBLE". Section bodies are trimmed.
SectionMap parse_sections(std::string_view text);

class SituationSyntaxError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SituationCondition {
  bool negated = false;
  std::string section;
  std::string pattern_text;
  std::regex pattern;
  std::string absent_from;  // empty unless a `notin` condition
};

struct Situation {
  std::vector<SituationCondition> conditions;
  bool otherwise = false;
  std::string sentence;
};

std::vector<Situation> parse_situations(std::string_view catalogue);

// Sentences of every situation whose conditions hold, in catalogue order and
// without duplicates. An `otherwise` entry fires only if nothing before it did.
std::vector<std::string> match_situations(const std::vector<Situation>& situations, const SectionMap& evidence);

// Splits text into sentences at '.', '!' or '?' followed by whitespace.
std::vector<std::string> split_sentences(std::string_view text);

std::string to_lower(std::string_view text);
std::string trim(std::string_view text);
bool contains_icase(std::string_view haystack, std::string_view needle);

}  // namespace hexar
