#include "hexar/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <fstream>
#include <set>
#include <thread>

#include <fmt/format.h>

#include "hexar/baselines.hpp"
#include "hexar/csv.hpp"
#include "hexar/prompt.hpp"

namespace hexar {

std::string_view to_string(Method m) {
  switch (m) {
    case Method::hexar: return "hexar";
    case Method::end_to_end: return "end_to_end";
    case Method::all_components: return "all_components";
  }
  return "?";
}

std::optional<Method> parse_method(std::string_view s) {
  std::string name(s);
  std::replace(name.begin(), name.end(), '-', '_');
  for (auto m : all_methods()) {
    if (name == to_string(m)) return m;
  }
  return std::nullopt;
}

const std::vector<Method>& all_methods() {
  static const std::vector<Method> methods = {Method::hexar, Method::end_to_end, Method::all_components};
  return methods;
}

Explanation explain_with(Method method, const Query& query, const Trace& trace, const ExplainerRegistry& registry,
                         const Reasoner& reasoner, SelectorDecision* decision) {
  switch (method) {
    case Method::hexar: return explain_hexar(query, trace, registry, reasoner, decision);
    case Method::end_to_end: return explain_end_to_end(query, trace, registry, reasoner);
    case Method::all_components: return explain_all_components(query, trace, registry, reasoner);
  }
  throw std::invalid_argument("unknown method");
}

std::string sample_id(const ManifestEntry& e, Method method) {
  return fmt::format("s{:02}-v{}-q{}-{}", e.scenario_id, e.task_variant, e.query_index, to_string(method));
}

std::vector<EvalRecord> run_grid(const GridConfig& config, const Reasoner& reasoner) {
  ExplainerOptions options;
  options.seed = config.seed;
  options.lime_samples = static_cast<std::size_t>(config.lime_samples);
  const ExplainerRegistry registry = default_registry(options);

  std::map<std::pair<int, int>, Trace> traces;
  for (const auto& e : config.manifest) {
    const auto key = std::make_pair(e.scenario_id, e.task_variant);
    if (!traces.contains(key)) traces.emplace(key, generate_trace(e.scenario_id, e.task_variant, config.seed));
  }

  const std::size_t n_methods = config.methods.size();
  std::vector<EvalRecord> records(config.manifest.size() * n_methods);
  std::atomic<std::size_t> next{0};

  auto work = [&]() {
    for (std::size_t i = next++; i < records.size(); i = next++) {
      const ManifestEntry& entry = config.manifest[i / n_methods];
      const Method method = config.methods[i % n_methods];
      const Trace& trace = traces.at({entry.scenario_id, entry.task_variant});
      EvalRecord& r = records[i];
      r.sample_id = sample_id(entry, method);
      r.scenario_id = entry.scenario_id;
      r.task_variant = entry.task_variant;
      r.query_index = entry.query_index;
      r.method = method;
      const Query query = grid_query(trace, entry.query_index);
      const auto start = std::chrono::steady_clock::now();
      try {
        SelectorDecision decision;
        Explanation x = explain_with(method, query, trace, registry, reasoner, &decision);
        r.explanation_text = x.text;
        r.produced_by = x.produced_by;
        r.reasoner_calls = x.reasoner_calls;
        r.wall_time = x.wall_time;
      } catch (const std::exception& ex) {
        r.error = ex.what();
        r.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      }
      if (method == Method::hexar) {
        const std::string expected(to_string(scenario(entry.scenario_id).relevant_module));
        r.selected_ok = r.error.empty() && !r.produced_by.empty() && r.produced_by.front() == expected;
      }
    }
  };

  const int jobs = std::max(1, config.jobs);
  std::vector<std::thread> pool;
  for (int j = 1; j < jobs; ++j) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  return records;
}

const std::vector<std::string>& results_header() {
  static const std::vector<std::string> header = {
      "sample_id",      "scenario_id", "task_variant", "query_index", "method",           "produced_by",
      "reasoner_calls", "selected_ok", "error",        "wall_time",   "explanation_text",
  };
  return header;
}

namespace {

std::string join(const std::vector<std::string>& parts, char sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i > 0) out += sep;
    out += parts[i];
  }
  return out;
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  if (text.empty()) return out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = text.find(sep, start);
    out.push_back(text.substr(start, pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

template <typename Error>
int to_int(const std::string& s, std::size_t line, const char* column) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw Error(fmt::format("line {}: column {} is not an integer: '{}'", line, column, s));
}

template <typename Error>
int to_binary(const std::string& s, std::size_t line, const char* column) {
  const int v = to_int<Error>(s, line, column);
  if (v != 0 && v != 1) throw Error(fmt::format("line {}: column {} must be 0 or 1", line, column));
  return v;
}

}  // namespace

void write_results(const std::vector<EvalRecord>& records, std::ostream& out) {
  out << csv_line(results_header()) << '\n';
  for (const auto& r : records) {
    std::string selected;
    if (r.selected_ok) selected = *r.selected_ok ? "1" : "0";
    out << csv_line({r.sample_id, std::to_string(r.scenario_id), std::to_string(r.task_variant),
                     std::to_string(r.query_index), std::string(to_string(r.method)), join(r.produced_by, ';'),
                     std::to_string(r.reasoner_calls), selected, r.error, fmt::format("{:.6f}", r.wall_time),
                     r.explanation_text})
        << '\n';
  }
}

std::vector<EvalRecord> read_results(std::istream& in) {
  std::vector<CsvRow> rows;
  try {
    rows = parse_csv(in);
  } catch (const CsvError& e) {
    throw ResultsError(e.what());
  }
  if (rows.empty()) throw ResultsError("results file is empty");
  if (rows.front() != results_header()) {
    throw ResultsError(fmt::format("results header must be: {}", join(results_header(), ',')));
  }
  std::vector<EvalRecord> out;
  std::set<std::string> seen;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& row = rows[i];
    const std::size_t line = i + 1;
    if (row.size() != results_header().size()) {
      throw ResultsError(
          fmt::format("line {}: expected {} columns, got {}", line, results_header().size(), row.size()));
    }
    EvalRecord r;
    r.sample_id = row[0];
    r.scenario_id = to_int<ResultsError>(row[1], line, "scenario_id");
    r.task_variant = to_int<ResultsError>(row[2], line, "task_variant");
    r.query_index = to_int<ResultsError>(row[3], line, "query_index");
    const auto method = parse_method(row[4]);
    if (!method) throw ResultsError(fmt::format("line {}: unknown method '{}'", line, row[4]));
    r.method = *method;
    r.produced_by = split(row[5], ';');
    r.reasoner_calls = to_int<ResultsError>(row[6], line, "reasoner_calls");
    if (!row[7].empty()) r.selected_ok = to_binary<ResultsError>(row[7], line, "selected_ok") == 1;
    r.error = row[8];
    try {
      r.wall_time = std::stod(row[9]);
    } catch (const std::exception&) {
      throw ResultsError(fmt::format("line {}: wall_time is not a number", line));
    }
    r.explanation_text = row[10];
    if (r.scenario_id < 1 || r.scenario_id > 20 || r.task_variant < 1 || r.task_variant > 3 || r.query_index < 1 ||
        r.query_index > 3) {
      throw ResultsError(fmt::format("line {}: grid coordinates out of range", line));
    }
    if (r.sample_id != sample_id({r.scenario_id, r.task_variant, r.query_index}, r.method)) {
      throw ResultsError(fmt::format("line {}: sample_id '{}' does not match its columns", line, r.sample_id));
    }
    if (!seen.insert(r.sample_id).second) {
      throw ResultsError(fmt::format("line {}: duplicate sample '{}'", line, r.sample_id));
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<EvalRecord> read_results(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ResultsError(fmt::format("cannot open {}", path.string()));
  return read_results(in);
}

std::vector<AnnotationRow> auto_annotate(const std::vector<EvalRecord>& records) {
  std::vector<AnnotationRow> out;
  for (const auto& r : records) {
    const ScenarioSpec& spec = scenario(r.scenario_id);
    int rci = 0;
    int incorrect = 0;
    if (r.error.empty()) {
      rci = contains_icase(r.explanation_text, spec.ground_truth.key_phrase) ? 1 : 0;
      for (const auto& claim : contradicted_claims(r.scenario_id)) {
        if (contains_icase(r.explanation_text, claim)) incorrect = 1;
      }
    }
    for (int a = 1; a <= 3; ++a) out.push_back({r.sample_id, a, rci, incorrect});
  }
  return out;
}

void write_annotations(const std::vector<AnnotationRow>& rows, std::ostream& out) {
  out << "sample_id,annotator_id,root_cause,incorrect_facts\n";
  for (const auto& r : rows) {
    out << csv_line({r.sample_id, std::to_string(r.annotator_id), std::to_string(r.root_cause),
                     std::to_string(r.incorrect_facts)})
        << '\n';
  }
}

std::vector<AnnotationRow> read_annotations(std::istream& in) {
  std::vector<CsvRow> rows;
  try {
    rows = parse_csv(in);
  } catch (const CsvError& e) {
    throw AnnotationError(e.what());
  }
  const CsvRow header = {"sample_id", "annotator_id", "root_cause", "incorrect_facts"};
  if (rows.empty() || rows.front() != header) {
    throw AnnotationError("annotations header must be: sample_id,annotator_id,root_cause,incorrect_facts");
  }
  std::vector<AnnotationRow> out;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& row = rows[i];
    const std::size_t line = i + 1;
    if (row.size() != 4) throw AnnotationError(fmt::format("line {}: expected 4 columns", line));
    AnnotationRow a;
    a.sample_id = row[0];
    a.annotator_id = to_int<AnnotationError>(row[1], line, "annotator_id");
    if (a.annotator_id < 1 || a.annotator_id > 3) {
      throw AnnotationError(fmt::format("line {}: annotator_id must be 1, 2 or 3", line));
    }
    a.root_cause = to_binary<AnnotationError>(row[2], line, "root_cause");
    a.incorrect_facts = to_binary<AnnotationError>(row[3], line, "incorrect_facts");
    out.push_back(std::move(a));
  }
  return out;
}

std::vector<AnnotationRow> read_annotations(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw AnnotationError(fmt::format("cannot open {}", path.string()));
  return read_annotations(in);
}

int explanation_accuracy(int root_cause_identified, int incorrect_facts_present) {
  return (root_cause_identified == 1 && incorrect_facts_present == 0) ? 1 : 0;
}

MajorityResult majority_vote(const std::vector<AnnotationRow>& rows) {
  std::map<std::string, std::array<const AnnotationRow*, 3>> by_sample;
  for (const auto& r : rows) {
    if (r.annotator_id < 1 || r.annotator_id > 3) {
      throw AnnotationError(fmt::format("sample {}: annotator_id {} outside 1..3", r.sample_id, r.annotator_id));
    }
    auto& slot = by_sample[r.sample_id][static_cast<std::size_t>(r.annotator_id - 1)];
    if (slot != nullptr) {
      throw AnnotationError(fmt::format("sample {}: annotator {} appears twice", r.sample_id, r.annotator_id));
    }
    slot = &r;
  }
  MajorityResult out;
  std::size_t split_cells = 0;
  for (const auto& [id, labels] : by_sample) {
    for (std::size_t a = 0; a < 3; ++a) {
      if (labels[a] == nullptr) throw AnnotationError(fmt::format("sample {}: annotator {} is missing", id, a + 1));
    }
    const int rc = labels[0]->root_cause + labels[1]->root_cause + labels[2]->root_cause;
    const int inc = labels[0]->incorrect_facts + labels[1]->incorrect_facts + labels[2]->incorrect_facts;
    if (rc != 0 && rc != 3) ++split_cells;
    if (inc != 0 && inc != 3) ++split_cells;
    MetricRow m;
    m.sample_id = id;
    m.root_cause_identified = rc >= 2 ? 1 : 0;
    m.incorrect_facts_present = inc >= 2 ? 1 : 0;
    m.explanation_accuracy = explanation_accuracy(m.root_cause_identified, m.incorrect_facts_present);
    out.rows.push_back(std::move(m));
  }
  if (!by_sample.empty()) {
    out.disagreement_rate = static_cast<double>(split_cells) / static_cast<double>(2 * by_sample.size());
  }
  return out;
}

namespace {

Summary summarize(const std::vector<double>& xs) { return {xs.size(), mean(xs), sample_variance(xs)}; }

int metric_value(const MetricRow& m, const std::string& metric) {
  if (metric == "root_cause") return m.root_cause_identified;
  if (metric == "incorrect_facts") return m.incorrect_facts_present;
  return m.explanation_accuracy;
}

}  // namespace

StatsReport compute_stats(const std::vector<EvalRecord>& records, const MajorityResult& metrics) {
  if (records.empty()) throw ResultsError("no records to report on");
  std::map<std::string, const MetricRow*> by_id;
  for (const auto& m : metrics.rows) by_id[m.sample_id] = &m;
  std::set<std::string> record_ids;
  for (const auto& r : records) {
    if (!by_id.contains(r.sample_id)) throw ResultsError(fmt::format("no annotations for sample '{}'", r.sample_id));
    record_ids.insert(r.sample_id);
  }
  for (const auto& m : metrics.rows) {
    if (!record_ids.contains(m.sample_id)) {
      throw ResultsError(fmt::format("annotated sample '{}' has no result record", m.sample_id));
    }
  }

  StatsReport report;
  report.disagreement_rate = metrics.disagreement_rate;
  for (auto m : all_methods()) {
    if (std::any_of(records.begin(), records.end(), [&](const EvalRecord& r) { return r.method == m; })) {
      report.methods.push_back(m);
    }
  }

  using Point = std::tuple<int, int, int>;
  std::map<Method, std::map<Point, const EvalRecord*>> grid;
  for (const auto& r : records) grid[r.method][{r.scenario_id, r.task_variant, r.query_index}] = &r;
  for (auto m : report.methods) {
    if (grid[m].size() != grid[report.methods.front()].size() ||
        !std::equal(grid[m].begin(), grid[m].end(), grid[report.methods.front()].begin(),
                    [](const auto& a, const auto& b) { return a.first == b.first; })) {
      throw ResultsError("methods cover different grid points");
    }
  }

  for (auto m : report.methods) {
    std::vector<double> times;
    std::vector<double> calls;
    std::map<std::string, std::vector<double>> values;
    std::map<Source, std::vector<double>> module_acc;
    for (const auto& [point, r] : grid[m]) {
      const MetricRow& row = *by_id.at(r->sample_id);
      times.push_back(r->wall_time);
      calls.push_back(r->reasoner_calls);
      for (const auto& metric : kMetricNames) values[metric].push_back(metric_value(row, metric));
      module_acc[scenario(r->scenario_id).relevant_module].push_back(row.explanation_accuracy);
      if (!r->error.empty()) ++report.failed_samples;
      if (r->selected_ok) {
        ++report.selection_total;
        if (*r->selected_ok) ++report.selection_correct;
      }
    }
    report.runtime[m] = summarize(times);
    report.reasoner_calls[m] = summarize(calls);
    for (const auto& metric : kMetricNames) report.metrics[metric][m] = summarize(values[metric]);
    for (const auto& [module, xs] : module_acc) report.accuracy_by_module[module][m] = summarize(xs);
  }

  if (report.methods.size() >= 2) {
    const auto& points = grid[report.methods.front()];
    for (const auto& metric : kMetricNames) {
      BinaryMatrix matrix;
      std::map<Method, std::vector<int>> columns;
      for (const auto& [point, unused] : points) {
        std::vector<int> row;
        for (auto m : report.methods) {
          const int v = metric_value(*by_id.at(grid[m].at(point)->sample_id), metric);
          row.push_back(v);
          columns[m].push_back(v);
        }
        matrix.push_back(std::move(row));
      }
      report.cochran[metric] = cochran_q(matrix);
      std::vector<PairwiseTest> tests;
      for (std::size_t i = 0; i < report.methods.size(); ++i) {
        for (std::size_t j = i + 1; j < report.methods.size(); ++j) {
          PairwiseTest t;
          t.first = report.methods[i];
          t.second = report.methods[j];
          t.test = mcnemar(columns[t.first], columns[t.second]);
          tests.push_back(t);
        }
      }
      std::vector<double> raw;
      for (const auto& t : tests) raw.push_back(t.test.p);
      const auto adjusted = holm_adjust(raw);
      for (std::size_t i = 0; i < tests.size(); ++i) tests[i].p_holm = adjusted[i];
      report.pairwise[metric] = std::move(tests);
    }
  }
  return report;
}

}  // namespace hexar
