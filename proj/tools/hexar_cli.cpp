// hexar: simulate robot traces, explain them and evaluate the explainers.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "hexar/evaluation.hpp"
#include "hexar/remote_reasoner.hpp"
#include "hexar/report.hpp"
#include "hexar/scenarios.hpp"

namespace {

using namespace hexar;

constexpr int kUsage = 2;
constexpr int kNoExplanation = 3;
constexpr const char* kNotEnoughInformation = "I do not have enough information to answer this question.";

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ReasonerOptions {
  std::string kind = "rule";
  double simulated_latency = 0.0;
  double call_latency = 0.0;
};

// Owns whatever reasoner stack the flags ask for.
struct ReasonerStack {
  std::unique_ptr<Reasoner> base;
  std::unique_ptr<Reasoner> latency;
  const Reasoner& get() const { return latency ? *latency : *base; }
};

ReasonerStack make_reasoner(const ReasonerOptions& opts) {
  ReasonerStack stack;
  if (opts.kind == "rule") {
    stack.base = std::make_unique<RuleReasoner>();
  } else {
    try {
      stack.base = std::make_unique<RemoteReasoner>(remote_config_from_env());
    } catch (const ReasonerError& e) {
      throw UsageError(e.what());
    }
  }
  if (opts.simulated_latency > 0.0 || opts.call_latency > 0.0) {
    stack.latency = std::make_unique<SimulatedLatencyReasoner>(*stack.base, opts.simulated_latency, opts.call_latency);
  }
  return stack;
}

void add_reasoner_flags(CLI::App* cmd, ReasonerOptions& opts) {
  cmd->add_option("--reasoner", opts.kind, "rule or remote")
      ->check(CLI::IsMember({"rule", "remote"}))
      ->capture_default_str();
  cmd->add_option("--simulated-latency", opts.simulated_latency,
                  "add this many seconds per 100 prompt characters to each reasoner call")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--simulated-call-latency", opts.call_latency, "add this many seconds to each reasoner call")
      ->check(CLI::NonNegativeNumber);
}

int cmd_scenarios(std::optional<int> id) {
  if (id && (*id < 1 || *id > 20)) throw UsageError(fmt::format("scenario id must be in 1..20, got {}", *id));
  fmt::print("{:>2}  {:<26}  {:<19}  {}\n", "id", "category", "module", "description");
  for (const auto& s : list_scenarios()) {
    if (id && s.scenario_id != *id) continue;
    fmt::print("{:>2}  {:<26}  {:<19}  {}\n", s.scenario_id, to_string(s.category), to_string(s.relevant_module),
               s.description);
  }
  return 0;
}

int cmd_simulate(int scenario_id, int task, std::uint64_t seed, const std::string& out) {
  if (scenario_id < 1 || scenario_id > 20) {
    throw UsageError(fmt::format("--scenario must be in 1..20, got {}", scenario_id));
  }
  if (task < 1 || task > 3) throw UsageError(fmt::format("--task must be in 1..3, got {}", task));
  const Trace trace = generate_trace(scenario_id, task, seed);
  if (out.empty() || out == "-") {
    write_trace(trace, std::cout);
  } else {
    write_trace(trace, std::filesystem::path(out));
  }
  return 0;
}

void print_explanation(const Explanation& x) {
  std::string by;
  for (const auto& p : x.produced_by) by += (by.empty() ? "" : ", ") + p;
  fmt::print("{}\nproduced_by: {}\nwall_time: {:.6f}\n", x.text, by, x.wall_time);
  std::fflush(stdout);
}

// Returns the exit code for one query.
int explain_one(Method method, const std::string& text, const Trace& trace, const ExplainerRegistry& registry,
                const Reasoner& reasoner) {
  Query query{text, trace.events.empty() ? 0.0 : trace.events.back().ts + 1.0};
  try {
    print_explanation(explain_with(method, query, trace, registry, reasoner));
    return 0;
  } catch (const SelectionError& e) {
    fmt::print(stderr, "selection failed: {}\n", e.what());
  } catch (const ContextError& e) {
    fmt::print(stderr, "no usable context: {}\n", e.what());
  } catch (const ReasonerError& e) {
    fmt::print(stderr, "reasoner failed: {}\n", e.what());
  }
  fmt::print("{}\n", kNotEnoughInformation);
  std::fflush(stdout);
  return kNoExplanation;
}

int cmd_explain(const std::string& trace_path, const std::string& query, bool interactive,
                const std::string& method_name, const ReasonerOptions& ropts, std::uint64_t seed) {
  const auto method = parse_method(method_name);
  if (!method) throw UsageError(fmt::format("unknown method '{}'", method_name));
  if (!interactive && query.empty()) throw UsageError("--query is required unless --interactive is given");
  const Trace trace = read_trace(trace_path);
  ExplainerOptions options;
  options.seed = seed;
  const ExplainerRegistry registry = default_registry(options);
  const ReasonerStack reasoner = make_reasoner(ropts);

  if (!interactive) return explain_one(*method, query, trace, registry, reasoner.get());
  int status = 0;
  std::string line;
  while (std::getline(std::cin, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    status = std::max(status, explain_one(*method, line, trace, registry, reasoner.get()));
  }
  return status;
}

std::vector<Method> parse_methods(const std::vector<std::string>& names) {
  std::vector<Method> out;
  for (const auto& n : names) {
    const auto m = parse_method(n);
    if (!m) throw UsageError(fmt::format("unknown method '{}'", n));
    if (std::find(out.begin(), out.end(), *m) == out.end()) out.push_back(*m);
  }
  return out.empty() ? all_methods() : out;
}

int cmd_evaluate(const std::string& manifest, const std::vector<std::string>& methods, const ReasonerOptions& ropts,
                 std::uint64_t seed, int jobs, int lime_samples, const std::string& out) {
  GridConfig config;
  config.methods = parse_methods(methods);
  config.seed = seed;
  config.jobs = jobs;
  config.lime_samples = lime_samples;
  if (!manifest.empty()) {
    try {
      config.manifest = read_manifest(manifest);
    } catch (const ManifestError& e) {
      throw UsageError(e.what());
    }
  }
  const ReasonerStack reasoner = make_reasoner(ropts);
  const auto records = run_grid(config, reasoner.get());
  std::ofstream file;
  if (!out.empty() && out != "-") {
    file.open(out, std::ios::binary);
    if (!file) throw UsageError(fmt::format("cannot write {}", out));
  }
  std::ostream& sink = file.is_open() ? static_cast<std::ostream&>(file) : std::cout;
  write_results(records, sink);
  std::size_t failed = 0;
  for (const auto& r : records) failed += r.error.empty() ? 0 : 1;
  fmt::print(stderr, "{} records, {} failed\n", records.size(), failed);
  return 0;
}

int cmd_report(const std::string& results, const std::string& annotations, bool auto_annotate_flag,
               const std::string& annotations_out, const std::string& out) {
  try {
    const auto records = read_results(results);
    std::vector<AnnotationRow> rows;
    if (auto_annotate_flag) {
      rows = auto_annotate(records);
      if (!annotations_out.empty()) {
        std::ofstream a(annotations_out, std::ios::binary);
        write_annotations(rows, a);
      }
    } else {
      rows = read_annotations(annotations);
    }
    const auto files = render_report(records, majority_vote(rows), out);
    fmt::print("{}\n{}\n", files.markdown.string(), files.csv.string());
    return 0;
  } catch (const ResultsError& e) {
    throw UsageError(e.what());
  } catch (const AnnotationError& e) {
    throw UsageError(e.what());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hierarchical explanations for a simulated service robot"};
  app.require_subcommand(1);

  std::optional<int> scenario_id;
  auto* scenarios = app.add_subcommand("scenarios", "list the evaluation scenarios");
  scenarios->add_option("--id", scenario_id, "show a single scenario");

  int sim_scenario = 0;
  int sim_task = 1;
  std::uint64_t seed = 42;
  std::string out;
  auto* simulate = app.add_subcommand("simulate", "write a trace for one scenario and task variant");
  simulate->add_option("--scenario", sim_scenario, "scenario id (1..20)")->required();
  simulate->add_option("--task", sim_task, "task variant (1..3)")->capture_default_str();
  simulate->add_option("--seed", seed, "noise seed")->capture_default_str();
  simulate->add_option("--out", out, "trace file (default: standard output)");

  std::string trace_path;
  std::string query;
  bool interactive = false;
  std::string method = "hexar";
  ReasonerOptions ropts;
  auto* explain = app.add_subcommand("explain", "answer a question about a trace");
  explain->add_option("--trace", trace_path, "trace file")->required()->check(CLI::ExistingFile);
  explain->add_option("--query", query, "question to answer");
  explain->add_flag("--interactive", interactive, "read one question per line from standard input");
  explain->add_option("--method", method, "hexar, end-to-end or all-components")->capture_default_str();
  explain->add_option("--seed", seed, "seed for sampled explainers")->capture_default_str();
  add_reasoner_flags(explain, ropts);

  std::string manifest;
  std::vector<std::string> methods;
  int jobs = 1;
  int lime_samples = 1000;
  auto* evaluate = app.add_subcommand("evaluate", "run the scenario grid and write a results CSV");
  evaluate->add_option("--manifest", manifest, "grid manifest CSV (default: the full 20x3x3 grid)");
  evaluate->add_option("--methods", methods, "methods to run (default: all)")->delimiter(',');
  evaluate->add_option("--seed", seed, "trace and sampling seed")->capture_default_str();
  evaluate->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber)->capture_default_str();
  evaluate->add_option("--lime-samples", lime_samples, "perturbations per pizza explanation")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  evaluate->add_option("--out", out, "results CSV (default: standard output)");
  add_reasoner_flags(evaluate, ropts);

  std::string results;
  std::string annotations;
  std::string annotations_out;
  bool auto_annotate_flag = false;
  std::string report_dir;
  auto* report = app.add_subcommand("report", "compute metrics and statistics from a results CSV");
  report->add_option("--results", results, "results CSV")->required()->check(CLI::ExistingFile);
  auto* ann = report->add_option("--annotations", annotations, "annotations CSV")->check(CLI::ExistingFile);
  auto* auto_flag = report->add_flag("--auto-annotate", auto_annotate_flag, "derive annotations from ground truth");
  ann->excludes(auto_flag);
  report->add_option("--annotations-out", annotations_out, "also write the derived annotations here")
      ->needs(auto_flag);
  report->add_option("--out", report_dir, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*scenarios) return cmd_scenarios(scenario_id);
    if (*simulate) return cmd_simulate(sim_scenario, sim_task, seed, out);
    if (*explain) return cmd_explain(trace_path, query, interactive, method, ropts, seed);
    if (*evaluate) return cmd_evaluate(manifest, methods, ropts, seed, jobs, lime_samples, out);
    if (*report) {
      if (!auto_annotate_flag && annotations.empty()) throw UsageError("give --annotations or --auto-annotate");
      return cmd_report(results, annotations, auto_annotate_flag, annotations_out, report_dir);
    }
  } catch (const UsageError& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kUsage;
  } catch (const TraceParseError& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kUsage;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 1;
  }
  return kUsage;
}
