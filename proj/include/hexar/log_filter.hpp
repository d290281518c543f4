#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "hexar/trace.hpp"

namespace hexar {

struct LogFilterRules {
  // Plain substrings, matched case-sensitively.
  std::vector<std::string> discard_patterns;
  std::size_t max_lines = 60;
};

// Rules for the synthetic navigation stack: velocity publishing, costmap
// timing and transform warnings carry nothing a user would ask about.
LogFilterRules default_log_filter_rules();

// Drops discarded lines, collapses runs of identical lines into one line
// suffixed " (xN)" and, when still longer than max_lines, keeps the first
// and last halves. An already collapsed line counts as N copies of its
// base text, which keeps the filter idempotent.
std::vector<std::string> filter_logs(const std::vector<std::string>& lines, const LogFilterRules& rules);

// "[level] [node] message" for each log event, in order.
std::vector<std::string> log_lines(std::span<const Event> events);

}  // namespace hexar
