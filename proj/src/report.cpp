#include "hexar/report.hpp"

#include <algorithm>
#include <fstream>

#include <fmt/format.h>

#include "hexar/csv.hpp"

namespace hexar {

namespace {

std::string pvalue(double p) { return p < 1e-3 ? fmt::format("{:.2e}", p) : fmt::format("{:.4f}", p); }

std::string method_header(const StatsReport& s, const std::string& first, const std::string& rest = {}) {
  std::string head = "| " + first + " |" + rest;
  std::string rule = "|---|";
  const auto extra = std::count(rest.begin(), rest.end(), '|');
  for (std::ptrdiff_t i = 0; i < extra; ++i) rule += "---|";
  for (auto m : s.methods) {
    head += fmt::format(" {} |", to_string(m));
    rule += "---|";
  }
  return head + "\n" + rule + "\n";
}

const char* metric_label(const std::string& metric) {
  if (metric == "root_cause") return "Root cause identified";
  if (metric == "incorrect_facts") return "Incorrect facts present";
  return "Explanation accuracy";
}

}  // namespace

std::string render_markdown(const StatsReport& s) {
  std::string out = "# Evaluation report\n\n";
  std::size_t samples = 0;
  for (const auto& [m, summary] : s.runtime) samples += summary.n;
  std::string names;
  for (auto m : s.methods) names += (names.empty() ? "" : ", ") + std::string(to_string(m));
  out += fmt::format("Samples: {} ({}). Failed samples: {}. Annotator disagreement: {:.2f}%.\n\n", samples, names,
                     s.failed_samples, 100.0 * s.disagreement_rate);

  out += "## Mean scores by metric\n\n";
  out += method_header(s, "Metric");
  for (const auto& metric : kMetricNames) {
    out += fmt::format("| {} |", metric_label(metric));
    for (auto m : s.methods) {
      const Summary& x = s.metrics.at(metric).at(m);
      out += fmt::format(" {:.3f} (var {:.3f}) |", x.mean, x.variance);
    }
    out += "\n";
  }
  out += "\nVariances are sample variances (n - 1) of the 0/1 scores.\n\n";

  out += "## Explanation accuracy by module\n\n";
  out += method_header(s, "Module", " n |");
  for (const auto& [module, per_method] : s.accuracy_by_module) {
    out += fmt::format("| {} | {} |", to_string(module), per_method.begin()->second.n);
    for (auto m : s.methods) out += fmt::format(" {:.3f} |", per_method.at(m).mean);
    out += "\n";
  }
  out += "\n";

  if (s.selection_total > 0) {
    out += "## Explainer selection\n\n";
    out += fmt::format("The selector chose the expected explainer on {}/{} samples ({:.2f}%).\n\n",
                       s.selection_correct, s.selection_total, 100.0 * s.selection_accuracy());
  }

  if (!s.cochran.empty()) {
    out += "## Statistics\n\n### Cochran's Q\n\n| Metric | Q | df | p |\n|---|---|---|---|\n";
    for (const auto& metric : kMetricNames) {
      const auto& c = s.cochran.at(metric);
      out += fmt::format("| {} | {:.4f} | {} | {} |\n", metric_label(metric), c.q, c.df, pvalue(c.p));
    }
    out += "\n### Pairwise McNemar with Holm correction\n\n";
    out += "| Metric | Pair | b | c | Test | Statistic | p | p (Holm) |\n|---|---|---|---|---|---|---|---|\n";
    for (const auto& metric : kMetricNames) {
      for (const auto& t : s.pairwise.at(metric)) {
        out += fmt::format("| {} | {} vs {} | {} | {} | {} | {:.4f} | {} | {} |\n", metric_label(metric),
                           to_string(t.first), to_string(t.second), t.test.b, t.test.c,
                           t.test.exact ? "exact" : "chi-square", t.test.statistic, pvalue(t.test.p), pvalue(t.p_holm));
      }
    }
    out += "\n";
  }

  out += "## Runtime\n\n| Method | Mean wall time (s) | Variance | Mean reasoner calls |\n|---|---|---|---|\n";
  for (auto m : s.methods) {
    const auto& r = s.runtime.at(m);
    out += fmt::format("| {} | {:.4f} | {:.4f} | {:.3f} |\n", to_string(m), r.mean, r.variance,
                       s.reasoner_calls.at(m).mean);
  }
  return out;
}

std::string render_stats_csv(const StatsReport& s) {
  std::string out = "section,metric,group,statistic,value\n";
  auto row = [&](const std::string& section, const std::string& metric, const std::string& group,
                 const std::string& statistic, double value) {
    out += csv_line({section, metric, group, statistic, fmt::format("{:.9g}", value)}) + "\n";
  };
  for (const auto& metric : kMetricNames) {
    for (auto m : s.methods) {
      const Summary& x = s.metrics.at(metric).at(m);
      const std::string g(to_string(m));
      row("metrics", metric, g, "n", static_cast<double>(x.n));
      row("metrics", metric, g, "mean", x.mean);
      row("metrics", metric, g, "variance", x.variance);
    }
  }
  for (const auto& [module, per_method] : s.accuracy_by_module) {
    for (auto m : s.methods) {
      const auto& x = per_method.at(m);
      const std::string g = fmt::format("{}:{}", to_string(module), to_string(m));
      row("module_accuracy", "accuracy", g, "n", static_cast<double>(x.n));
      row("module_accuracy", "accuracy", g, "mean", x.mean);
    }
  }
  for (const auto& [metric, c] : s.cochran) {
    row("cochran_q", metric, "all", "Q", c.q);
    row("cochran_q", metric, "all", "df", c.df);
    row("cochran_q", metric, "all", "p", c.p);
  }
  for (const auto& metric : kMetricNames) {
    if (!s.pairwise.contains(metric)) continue;
    for (const auto& t : s.pairwise.at(metric)) {
      const std::string g = fmt::format("{}~{}", to_string(t.first), to_string(t.second));
      row("mcnemar", metric, g, "b", t.test.b);
      row("mcnemar", metric, g, "c", t.test.c);
      row("mcnemar", metric, g, "exact", t.test.exact ? 1 : 0);
      row("mcnemar", metric, g, "statistic", t.test.statistic);
      row("mcnemar", metric, g, "p", t.test.p);
      row("mcnemar", metric, g, "p_holm", t.p_holm);
    }
  }
  if (s.selection_total > 0) {
    row("selection", "selection", "hexar", "correct", static_cast<double>(s.selection_correct));
    row("selection", "selection", "hexar", "total", static_cast<double>(s.selection_total));
    row("selection", "selection", "hexar", "accuracy", s.selection_accuracy());
  }
  for (auto m : s.methods) {
    const std::string g(to_string(m));
    row("runtime", "wall_time", g, "mean", s.runtime.at(m).mean);
    row("runtime", "wall_time", g, "variance", s.runtime.at(m).variance);
    row("runtime", "reasoner_calls", g, "mean", s.reasoner_calls.at(m).mean);
  }
  row("annotation", "disagreement", "all", "rate", s.disagreement_rate);
  row("samples", "failed", "all", "count", static_cast<double>(s.failed_samples));
  return out;
}

ReportFiles render_report(const std::vector<EvalRecord>& records, const MajorityResult& metrics,
                          const std::filesystem::path& out_dir) {
  const StatsReport stats = compute_stats(records, metrics);
  std::filesystem::create_directories(out_dir);
  ReportFiles files{out_dir / "report.md", out_dir / "report.csv"};
  std::ofstream(files.markdown, std::ios::binary) << render_markdown(stats);
  std::ofstream(files.csv, std::ios::binary) << render_stats_csv(stats);
  return files;
}

}  // namespace hexar
