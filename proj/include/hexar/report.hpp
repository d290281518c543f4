#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "hexar/evaluation.hpp"

namespace hexar {

std::string render_markdown(const StatsReport& stats);
// Long format: section,metric,group,statistic,value.
std::string render_stats_csv(const StatsReport& stats);

struct ReportFiles {
  std::filesystem::path markdown;
  std::filesystem::path csv;
};

// Computes the statistics and writes report.md and report.csv into out_dir.
// Throws ResultsError on empty or inconsistent inputs.
ReportFiles render_report(const std::vector<EvalRecord>& records, const MajorityResult& metrics,
                          const std::filesystem::path& out_dir);

}  // namespace hexar
