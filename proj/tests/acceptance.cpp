// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <iostream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include <fmt/format.h>

#include "hexar/causal.hpp"
#include "hexar/evaluation.hpp"
#include "hexar/explainers.hpp"
#include "hexar/prompt.hpp"

using namespace hexar;

namespace {

int failures = 0;

void verdict(const std::string& name, bool ok, const std::string& detail) {
  fmt::print("{} {}: {}\n", ok ? "PASS" : "FAIL", name, detail);
  if (!ok) ++failures;
}

std::string csv_without_timing(std::vector<EvalRecord> records) {
  for (auto& r : records) r.wall_time = 0.0;
  std::ostringstream out;
  write_results(records, out);
  return out.str();
}

const EvalRecord& record(const std::vector<EvalRecord>& rs, std::size_t point, Method m) {
  return rs[point * all_methods().size() + static_cast<std::size_t>(m)];
}

// --- selection, root cause, runtime --------------------------------------

void check_selection(const std::vector<EvalRecord>& records, double seconds) {
  int correct = 0, heuristic = 0, heuristic_correct = 0;
  const auto manifest = full_manifest();
  for (std::size_t i = 0; i < manifest.size(); ++i) {
    const auto& r = record(records, i, Method::hexar);
    const bool ok = r.selected_ok.value_or(false);
    correct += ok;
    // Rows with a failed skill or invalid plan.
    const Trace t = generate_trace(r.scenario_id, r.task_variant, 42);
    const ObservationStore store(t);
    const auto c = build_context(grid_query(t, r.query_index), store);
    bool failed = !c.plan_valid;
    for (const auto& s : c.skills) failed = failed || s.status == SkillStatus::failed;
    if (failed) {
      ++heuristic;
      heuristic_correct += ok;
    }
  }
  verdict("selector accuracy", correct >= 175 && heuristic_correct == heuristic && seconds < 120.0,
          fmt::format("{}/180 correct, failure rows {}/{}, grid took {:.2f} s", correct, heuristic_correct, heuristic,
                      seconds));
}

void check_root_cause(const std::vector<EvalRecord>& records) {
  int hits = 0, wrong = 0, n = 0;
  for (const auto& r : records) {
    if (r.method != Method::hexar) continue;
    ++n;
    if (r.error.empty() && contains_icase(r.explanation_text, scenario(r.scenario_id).ground_truth.key_phrase)) ++hits;
    for (const auto& claim : contradicted_claims(r.scenario_id)) {
      if (contains_icase(r.explanation_text, claim)) {
        ++wrong;
        break;
      }
    }
  }
  verdict("root-cause floor", hits == n && wrong == 0,
          fmt::format("{}/{} contain the key phrase, {} contain a contradicted claim", hits, n, wrong));
}

void check_runtime(const std::vector<EvalRecord>& records) {
  std::map<Method, double> total;
  std::map<Method, int> count;
  for (const auto& r : records) {
    total[r.method] += r.wall_time;
    ++count[r.method];
  }
  auto avg = [&](Method m) { return total[m] / count[m]; };
  int call_violations = 0;
  for (std::size_t i = 0; i < full_manifest().size(); ++i) {
    if (record(records, i, Method::hexar).reasoner_calls >= record(records, i, Method::all_components).reasoner_calls) {
      ++call_violations;
    }
  }
  const double h = avg(Method::hexar), e = avg(Method::end_to_end), a = avg(Method::all_components);
  verdict("runtime ordering", h < e && e < a && call_violations == 0,
          fmt::format("mean wall time hexar {:.3f} s, end_to_end {:.3f} s, all_components {:.3f} s; "
                      "{} points where hexar used as many calls as all_components",
                      h, e, a, call_violations));
}

// --- statistics -------------------------------------------------------------

double cochran_deviation_form(const BinaryMatrix& m) {
  const double k = static_cast<double>(m.front().size());
  std::vector<double> col(m.front().size(), 0.0);
  double denom = 0.0;
  for (const auto& row : m) {
    const double r = std::accumulate(row.begin(), row.end(), 0.0);
    for (std::size_t j = 0; j < row.size(); ++j) col[j] += row[j];
    denom += r * (k - r);
  }
  const double mc = std::accumulate(col.begin(), col.end(), 0.0) / k;
  double ss = 0.0;
  for (double c : col) ss += (c - mc) * (c - mc);
  return denom == 0.0 ? 0.0 : k * (k - 1) * ss / denom;
}

long double exact_binomial(int b, int c) {
  const int n = b + c;
  std::vector<std::uint64_t> row = {1};
  for (int i = 0; i < n; ++i) {
    std::vector<std::uint64_t> next(row.size() + 1, 0);
    for (std::size_t j = 0; j < row.size(); ++j) {
      next[j] += row[j];
      next[j + 1] += row[j];
    }
    row = std::move(next);
  }
  std::uint64_t tail = 0;
  for (int i = 0; i <= std::min(b, c); ++i) tail += row[static_cast<std::size_t>(i)];
  return std::min(1.0L, 2.0L * static_cast<long double>(tail) / std::ldexp(1.0L, n));
}

std::vector<double> holm_max_scan(const std::vector<double>& p) {
  std::vector<std::size_t> order(p.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return p[a] < p[b]; });
  std::vector<double> out(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    double best = 0.0;
    for (std::size_t j = 0; j <= i; ++j) best = std::max(best, std::min(1.0, double(p.size() - j) * p[order[j]]));
    out[order[i]] = best;
  }
  return out;
}

void check_statistics() {
  std::mt19937 rng(2024);
  std::bernoulli_distribution bit(0.5);
  std::vector<BinaryMatrix> fixtures = {{{1, 1, 0}, {1, 0, 0}, {1, 1, 1}, {0, 1, 0}}};
  for (std::size_t k : {2u, 3u, 3u, 4u, 5u}) {
    BinaryMatrix m(40, std::vector<int>(k));
    for (auto& row : m) {
      for (auto& v : row) v = bit(rng);
    }
    fixtures.push_back(std::move(m));
  }
  double worst_q = 0.0;
  for (const auto& m : fixtures) worst_q = std::max(worst_q, std::abs(cochran_q(m).q - cochran_deviation_form(m)));
  const auto flat = cochran_q({{1, 1, 1}, {0, 0, 0}, {1, 1, 1}});
  const double p60 = chi_square_sf(60.04, 2);

  long double worst_mc = 0.0L;
  for (int n = 0; n <= 24; ++n) {
    for (int b = 0; b <= n; ++b) {
      const long double p = mcnemar_counts(b, n - b).p;
      worst_mc = std::max(worst_mc, std::abs(p - exact_binomial(b, n - b)));
    }
  }
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> len(1, 10);
  double worst_holm = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    std::vector<double> p(static_cast<std::size_t>(len(rng)));
    for (auto& v : p) v = u(rng);
    const auto a = holm_adjust(p), o = holm_max_scan(p);
    for (std::size_t i = 0; i < p.size(); ++i) worst_holm = std::max(worst_holm, std::abs(a[i] - o[i]));
  }
  const bool ok = worst_q < 1e-9 && flat.q == 0.0 && flat.p == 1.0 && p60 < 0.001 && worst_mc < 1e-12L &&
                  worst_holm < 1e-12;
  verdict("statistics suite", ok,
          fmt::format("cochran max error {:.1e} on {} matrices, identical columns Q={} p={}, chi2 sf(60.04, 2)={:.2e}, "
                      "mcnemar max error {:.1e}, holm max error {:.1e}",
                      worst_q, fixtures.size(), flat.q, flat.p, p60, static_cast<double>(worst_mc), worst_holm));
}

// --- LIME -------------------------------------------------------------------

std::vector<long double> lime_normal_equations(const SurrogateTarget& f, const IngredientVector& x, double sigma,
                                               double lambda) {
  const std::size_t d = x.size(), p = d + 1;
  std::vector<std::vector<long double>> a(p, std::vector<long double>(p + 1, 0.0L));
  for (unsigned mask = 0; mask < (1U << d); ++mask) {
    IngredientVector z(d);
    std::size_t h = 0;
    for (std::size_t i = 0; i < d; ++i) {
      z[i] = (mask >> i) & 1U;
      h += z[i] != x[i];
    }
    long double w = 1.0L;
    if (std::isfinite(sigma)) {
      const long double hn = h / std::sqrt(static_cast<long double>(d));
      w = std::exp(-hn * hn / (static_cast<long double>(sigma) * sigma));
    }
    std::vector<long double> row(p, 1.0L);
    for (std::size_t i = 0; i < d; ++i) row[i + 1] = z[i];
    const long double y = f(z);
    for (std::size_t r = 0; r < p; ++r) {
      for (std::size_t c = 0; c < p; ++c) a[r][c] += w * row[r] * row[c];
      a[r][p] += w * row[r] * y;
    }
  }
  for (std::size_t i = 1; i < p; ++i) a[i][i] += lambda;
  for (std::size_t col = 0; col < p; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < p; ++r) {
      if (std::fabs(a[r][col]) > std::fabs(a[pivot][col])) pivot = r;
    }
    std::swap(a[col], a[pivot]);
    for (std::size_t r = 0; r < p; ++r) {
      if (r == col) continue;
      const long double factor = a[r][col] / a[col][col];
      for (std::size_t c = col; c <= p; ++c) a[r][c] -= factor * a[col][c];
    }
  }
  std::vector<long double> beta(p);
  for (std::size_t i = 0; i < p; ++i) beta[i] = a[i][p] / a[i][i];
  return beta;
}

double max_gap(const Attribution& a, const std::vector<long double>& oracle) {
  double gap = std::abs(a.intercept - static_cast<double>(oracle[0]));
  for (std::size_t i = 0; i < a.weights.size(); ++i) {
    gap = std::max(gap, std::abs(a.weights[i] - static_cast<double>(oracle[i + 1])));
  }
  return gap;
}

void check_lime() {
  const IngredientVector x = {1, 1, 1, 0, 0, 0, 0, 0, 0, 0};
  const std::size_t k = 1;
  const SurrogateTarget stump = [k](const IngredientVector& z) { return static_cast<double>(z[k]); };
  LimeConfig stump_cfg;
  stump_cfg.exhaustive = true;
  stump_cfg.kernel_width = std::numeric_limits<double>::infinity();
  stump_cfg.regularization = 0.0;
  const auto s = lime_attribute(stump, x, stump_cfg);
  const double stump_gap = max_gap(s, lime_normal_equations(stump, x, *stump_cfg.kernel_width, 0.0));
  const double stump_wk = std::abs(s.weights[k] - 1.0);

  const DecisionTree& tree = pizza_tree();
  const std::size_t cls = tree.predict(x);
  LimeConfig cfg;
  cfg.exhaustive = true;
  const auto exact = lime_attribute(tree, x, cls, cfg);
  const SurrogateTarget f = [&](const IngredientVector& z) { return tree.predict_proba(z)[cls]; };
  const double tree_gap =
      max_gap(exact, lime_normal_equations(f, x, default_kernel_width(x.size()), cfg.regularization));

  double sampled_gap = 0.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    LimeConfig sc;
    sc.n_samples = 5000;
    sc.seed = seed;
    const auto a = lime_attribute(tree, x, cls, sc);
    for (std::size_t i = 0; i < x.size(); ++i) {
      sampled_gap = std::max(sampled_gap, std::abs(a.weights[i] - exact.weights[i]));
    }
  }
  verdict("lime oracle", stump_gap < 1e-9 && stump_wk < 1e-9 && tree_gap < 1e-9 && sampled_gap < 0.1,
          fmt::format("stump gap {:.1e} (|w_k - 1| = {:.1e}), fixture tree gap {:.1e}, sampled n=5000 max gap {:.3f}",
                      stump_gap, stump_wk, tree_gap, sampled_gap));
}

// --- counterfactuals ----------------------------------------------------------

void check_counterfactuals() {
  const CausalHelpModel model;
  const std::vector<HelpVariable> variables = {HelpVariable::n_humans,      HelpVariable::min_distance,
                                               HelpVariable::detection_duration, HelpVariable::path_feasible,
                                               HelpVariable::response,       HelpVariable::confirmation};
  int traces = 0, failing = 0, flipped = 0, minimal = 0, replay_agree = 0;
  for (int s = 11; s <= 18; ++s) {
    for (int v = 1; v <= 3; ++v) {
      const Trace t = generate_trace(s, v, 42);
      std::vector<Event> help;
      for (const auto& e : t.events) {
        if (e.source == Source::ask_human_for_help) help.push_back(e);
      }
      const HelpVariables vars = extract_variables(help);
      const HelpOutcome realized = evaluate_model(model, vars);
      ++traces;
      replay_agree += realized == replay_fsm(t);
      if (realized == HelpOutcome::success) continue;
      ++failing;
      const auto cf = counterfactual(model, vars, HelpOutcome::success);
      flipped += evaluate_model(model, cf.intervened) == HelpOutcome::success && cf.intervened != vars;
      // The only single-variable boundary intervention that changes the outcome.
      int changing = 0;
      bool chosen_changes = false;
      for (auto x : variables) {
        if (evaluate_model(model, intervene(model, vars, x)) != realized) {
          ++changing;
          chosen_changes = chosen_changes || x == cf.variable;
        }
      }
      minimal += changing == 1 && chosen_changes;
    }
  }
  verdict("counterfactual suite", failing > 0 && flipped == failing && minimal == failing && replay_agree == traces,
          fmt::format("{} failing help traces, {} flipped, {} minimal; model agrees with replay on {}/{}", failing,
                      flipped, minimal, replay_agree, traces));
}

// --- determinism -------------------------------------------------------------

void check_determinism(const std::vector<EvalRecord>& first) {
  const RuleReasoner rule;
  const SimulatedLatencyReasoner latency(rule, 0.05, 0.25);
  GridConfig config;
  const bool same_csv = csv_without_timing(first) == csv_without_timing(run_grid(config, latency));
  int round_trips = 0, total = 0;
  for (int s = 1; s <= 20; ++s) {
    for (int v = 1; v <= 3; ++v) {
      const Trace t = generate_trace(s, v, 42);
      const std::string text = serialize_trace(t);
      std::istringstream in(text);
      const Trace back = parse_trace(in);
      ++total;
      round_trips += back == t && serialize_trace(back) == text;
    }
  }
  verdict("determinism", same_csv && round_trips == total,
          fmt::format("results CSV without timing {}, trace round trips {}/{}", same_csv ? "identical" : "differs",
                      round_trips, total));
}

// --- metric algebra -----------------------------------------------------------

void check_metric_algebra(const std::vector<EvalRecord>& records) {
  const auto metrics = majority_vote(auto_annotate(records));
  int table_ok = 0;
  for (const auto& m : metrics.rows) {
    table_ok += m.explanation_accuracy == ((m.root_cause_identified == 1 && m.incorrect_facts_present == 0) ? 1 : 0);
  }
  const bool table = explanation_accuracy(1, 0) == 1 && explanation_accuracy(1, 1) == 0 &&
                     explanation_accuracy(0, 0) == 0 && explanation_accuracy(0, 1) == 0;
  int vote_ok = 0;
  for (int bits = 0; bits < 8; ++bits) {
    const int a = bits & 1, b = (bits >> 1) & 1, c = (bits >> 2) & 1;
    const auto r = majority_vote({{"x", 1, a, 0}, {"x", 2, b, 0}, {"x", 3, c, 0}});
    int ones = 0;
    for (int label : {a, b, c}) ones += label;
    vote_ok += r.rows.front().root_cause_identified == (ones > 3 - ones ? 1 : 0);
  }
  verdict("metric algebra", table && table_ok == static_cast<int>(records.size()) && vote_ok == 8,
          fmt::format("truth table holds on {}/{} records, majority vote {}/8 label cases", table_ok, records.size(),
                      vote_ok));
}

}  // namespace

int main() {
  try {
    const RuleReasoner rule;
    const SimulatedLatencyReasoner latency(rule, 0.05, 0.25);
    GridConfig config;
    const auto start = std::chrono::steady_clock::now();
    const auto records = run_grid(config, latency);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    check_selection(records, seconds);
    check_root_cause(records);
    check_runtime(records);
    check_statistics();
    check_lime();
    check_counterfactuals();
    check_determinism(records);
    check_metric_algebra(records);
  } catch (const std::exception& e) {
    fmt::print("FAIL acceptance run aborted: {}\n", e.what());
    return 1;
  }
  return failures == 0 ? 0 : 1;
}
