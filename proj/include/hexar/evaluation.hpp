#pragma once

// Grid runs, annotations, metrics and statistics.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "hexar/framework.hpp"
#include "hexar/scenarios.hpp"
#include "hexar/stats.hpp"

namespace hexar {

enum class Method { hexar, end_to_end, all_components };

std::string_view to_string(Method m);
// Accepts underscores or dashes.
std::optional<Method> parse_method(std::string_view s);
const std::vector<Method>& all_methods();

// Runs one method on one query.
Explanation explain_with(Method method, const Query& query, const Trace& trace, const ExplainerRegistry& registry,
                         const Reasoner& reasoner, SelectorDecision* decision = nullptr);

struct EvalRecord {
  std::string sample_id;
  int scenario_id = 0;
  int task_variant = 0;
  int query_index = 0;
  Method method = Method::hexar;
  std::string explanation_text;
  std::vector<std::string> produced_by;
  int reasoner_calls = 0;
  std::optional<bool> selected_ok;  // hexar only
  std::string error;                // empty unless the sample failed
  double wall_time = 0.0;
};

std::string sample_id(const ManifestEntry& entry, Method method);

struct GridConfig {
  std::vector<Method> methods = all_methods();
  std::vector<ManifestEntry> manifest = full_manifest();
  std::uint64_t seed = 42;
  int jobs = 1;
  int lime_samples = 1000;
};

// Records come back in manifest order, methods in config order within each
// grid point, regardless of jobs.
std::vector<EvalRecord> run_grid(const GridConfig& config, const Reasoner& reasoner);

class ResultsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

const std::vector<std::string>& results_header();
void write_results(const std::vector<EvalRecord>& records, std::ostream& out);
std::vector<EvalRecord> read_results(std::istream& in);
std::vector<EvalRecord> read_results(const std::filesystem::path& path);

struct AnnotationRow {
  std::string sample_id;
  int annotator_id = 1;
  int root_cause = 0;
  int incorrect_facts = 0;
};

class AnnotationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Key phrase present -> root_cause 1; any contradicted claim present ->
// incorrect_facts 1. Three identical rows per record.
std::vector<AnnotationRow> auto_annotate(const std::vector<EvalRecord>& records);
void write_annotations(const std::vector<AnnotationRow>& rows, std::ostream& out);
std::vector<AnnotationRow> read_annotations(std::istream& in);
std::vector<AnnotationRow> read_annotations(const std::filesystem::path& path);

struct MetricRow {
  std::string sample_id;
  int root_cause_identified = 0;
  int incorrect_facts_present = 0;
  int explanation_accuracy = 0;
};

int explanation_accuracy(int root_cause_identified, int incorrect_facts_present);

struct MajorityResult {
  std::vector<MetricRow> rows;  // sorted by sample_id
  // Non-unanimous (sample, metric) cells over all cells.
  double disagreement_rate = 0.0;
};

// Needs annotators 1, 2 and 3 exactly once per sample.
MajorityResult majority_vote(const std::vector<AnnotationRow>& rows);

inline const std::vector<std::string> kMetricNames = {"root_cause", "incorrect_facts", "accuracy"};

struct Summary {
  std::size_t n = 0;
  double mean = 0.0;
  double variance = 0.0;
};

struct PairwiseTest {
  Method first = Method::hexar;
  Method second = Method::end_to_end;
  McNemarResult test;
  double p_holm = 1.0;
};

struct StatsReport {
  std::vector<Method> methods;
  std::map<std::string, std::map<Method, Summary>> metrics;
  std::map<std::string, CochranResult> cochran;  // needs two or more methods
  std::map<std::string, std::vector<PairwiseTest>> pairwise;
  std::size_t selection_correct = 0;
  std::size_t selection_total = 0;
  std::map<Method, Summary> runtime;
  std::map<Method, Summary> reasoner_calls;
  std::map<Source, std::map<Method, Summary>> accuracy_by_module;
  std::size_t failed_samples = 0;
  double disagreement_rate = 0.0;

  double selection_accuracy() const {
    return selection_total == 0 ? 0.0 : static_cast<double>(selection_correct) / static_cast<double>(selection_total);
  }
};

// Throws ResultsError on an empty record set, or when metrics and records do
// not cover the same sample ids, or methods cover different grid points.
StatsReport compute_stats(const std::vector<EvalRecord>& records, const MajorityResult& metrics);

}  // namespace hexar
