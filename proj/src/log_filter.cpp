#include "hexar/log_filter.hpp"

#include <algorithm>
#include <charconv>

#include <fmt/format.h>

namespace hexar {

namespace {

struct Run {
  std::string text;
  std::size_t count = 1;
};

// Splits "text (xN)" into its base text and N.
Run parse_run(const std::string& line) {
  Run run{line, 1};
  if (!line.ends_with(")")) return run;
  const auto open = line.rfind(" (x");
  if (open == std::string::npos) return run;
  const char* first = line.data() + open + 3;
  const char* last = line.data() + line.size() - 1;
  std::size_t n = 0;
  auto [ptr, ec] = std::from_chars(first, last, n);
  if (ec != std::errc{} || ptr != last || n < 2) return run;
  run.text = line.substr(0, open);
  run.count = n;
  return run;
}

std::string render(const Run& run) {
  return run.count > 1 ? fmt::format("{} (x{})", run.text, run.count) : run.text;
}

}  // namespace

LogFilterRules default_log_filter_rules() {
  LogFilterRules rules;
  rules.discard_patterns = {
      "Publishing velocity command",
      "Costmap update took",
      "Transform data too old",
      "Battery at",
  };
  rules.max_lines = 60;
  return rules;
}

std::vector<std::string> filter_logs(const std::vector<std::string>& lines, const LogFilterRules& rules) {
  std::vector<Run> runs;
  for (const auto& line : lines) {
    const auto& patterns = rules.discard_patterns;
    const bool discard = std::any_of(patterns.begin(), patterns.end(), [&](const std::string& p) {
      return !p.empty() && line.find(p) != std::string::npos;
    });
    if (discard) continue;
    Run run = parse_run(line);
    if (!runs.empty() && runs.back().text == run.text) {
      runs.back().count += run.count;
    } else {
      runs.push_back(std::move(run));
    }
  }

  std::vector<std::string> out;
  const std::size_t cap = rules.max_lines;
  if (runs.size() <= cap) {
    for (const auto& run : runs) out.push_back(render(run));
    return out;
  }
  if (cap == 0) return out;
  if (cap == 1) {
    out.push_back(render(runs.front()));
    return out;
  }
  // One slot goes to an omission marker so the two halves can never merge on
  // a second pass.
  const std::size_t keep = cap - 1;
  const std::size_t head = (keep + 1) / 2;
  const std::size_t tail = keep - head;
  for (std::size_t i = 0; i < head; ++i) out.push_back(render(runs[i]));
  out.push_back(fmt::format("... {} lines omitted ...", runs.size() - keep));
  for (std::size_t i = runs.size() - tail; i < runs.size(); ++i) out.push_back(render(runs[i]));
  return out;
}

std::vector<std::string> log_lines(std::span<const Event> events) {
  std::vector<std::string> lines;
  for (const auto& e : events) {
    if (e.kind != EventKind::log) continue;
    const auto level = find_string(e.payload, "level").value_or("info");
    const auto node = find_string(e.payload, "node").value_or(std::string(to_string(e.source)));
    lines.push_back(fmt::format("[{}] [{}] {}", level, node, find_string(e.payload, "msg").value_or("")));
  }
  return lines;
}

}  // namespace hexar
