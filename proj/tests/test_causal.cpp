#include <doctest.h>

#include <cmath>

#include "hexar/causal.hpp"
#include "hexar/framework.hpp"
#include "hexar/prompt.hpp"
#include "hexar/scenarios.hpp"

using namespace hexar;

namespace {

std::vector<Event> help_events(const Trace& t) {
  std::vector<Event> out;
  for (const auto& e : t.events) {
    if (e.source == Source::ask_human_for_help) out.push_back(e);
  }
  return out;
}

HelpVariables variables_of(int scenario_id, int variant = 1, std::uint64_t seed = 42) {
  return extract_variables(help_events(generate_trace(scenario_id, variant, seed)));
}

HelpVariables all_pass() {
  HelpVariables v;
  v.n_humans = 1;
  v.detection_duration = 5.0;
  v.detection_variance = 0.01;
  v.min_distance = 1.5;
  v.path_feasible = true;
  v.response = HelpResponse::agree;
  v.confirmation = true;
  return v;
}

std::optional<double> numeric(const HelpVariables& v, HelpVariable x) {
  switch (x) {
    case HelpVariable::n_humans: return v.n_humans;
    case HelpVariable::min_distance: return v.min_distance;
    case HelpVariable::detection_duration: return v.detection_duration;
    default: return std::nullopt;
  }
}

const std::vector<HelpVariable> kVariables = {HelpVariable::n_humans,      HelpVariable::min_distance,
                                              HelpVariable::detection_duration, HelpVariable::path_feasible,
                                              HelpVariable::response,       HelpVariable::confirmation};

}  // namespace

TEST_CASE("gate order follows the skill") {
  const CausalHelpModel model;
  std::vector<HelpOutcome> failures;
  for (const auto& g : model.gates()) failures.push_back(g.failure);
  CHECK(failures == std::vector<HelpOutcome>{HelpOutcome::no_human_found, HelpOutcome::human_too_far,
                                             HelpOutcome::unstable_detection, HelpOutcome::approach_failed,
                                             HelpOutcome::help_refused, HelpOutcome::no_confirmation});
  CHECK(model.thresholds() == HelpThresholds{2.0, 3.0, 0.25});
}

TEST_CASE("variables from scenario traces") {
  const auto v12 = variables_of(12);
  REQUIRE(v12.min_distance);
  CHECK(*v12.min_distance > 3.0);
  const auto v13 = variables_of(13);
  REQUIRE(v13.detection_duration);
  CHECK(*v13.detection_duration < 2.0);
  CHECK(*v13.min_distance <= 3.0);
  const auto v11 = variables_of(11);
  CHECK(v11.n_humans == 0);
  CHECK_FALSE(v11.min_distance);
  CHECK_FALSE(v11.detection_duration);
  const auto v18 = variables_of(18);
  CHECK(*v18.detection_variance > 0.25);
  CHECK(variables_of(17).approach_replans == 4);
  CHECK(variables_of(15).response == HelpResponse::refuse);
  CHECK(variables_of(16).confirmation == false);
  CHECK(variables_of(14).path_feasible == false);
  CHECK(extract_variables({}) == HelpVariables{});
}

TEST_CASE("thresholds come from the skill's parameters") {
  std::vector<Event> events = {{0.0, Source::ask_human_for_help, EventKind::param,
                                {{"t_stable", 1.0}, {"d_max", 5.0}, {"var_max", 0.5}}}};
  CHECK(extract_thresholds(events) == HelpThresholds{1.0, 5.0, 0.5});
  CHECK(extract_thresholds({}) == HelpThresholds{});
}

TEST_CASE("malformed detection payloads are rejected") {
  std::vector<Event> events = {
      {0.0, Source::ask_human_for_help, EventKind::detection,
       {{"frame", std::int64_t{0}}, {"count", std::int64_t{1}}}}};
  CHECK_THROWS_AS(extract_variables(events), HelpEventError);
}

TEST_CASE("evaluate_model on hand-built variables") {
  const CausalHelpModel model;
  CHECK(evaluate_model(model, all_pass()) == HelpOutcome::success);
  auto v = all_pass();
  v.response = HelpResponse::refuse;
  CHECK(evaluate_model(model, v) == HelpOutcome::help_refused);
  v.min_distance = 3.5;
  CHECK(evaluate_model(model, v) == HelpOutcome::human_too_far);
  CHECK(failing_gates(model, v) == std::vector<HelpOutcome>{HelpOutcome::human_too_far, HelpOutcome::help_refused});
  // Boundary values pass.
  auto b = all_pass();
  b.min_distance = 3.0;
  b.detection_duration = 2.0;
  CHECK(evaluate_model(model, b) == HelpOutcome::success);
  CHECK(evaluate_model(model, HelpVariables{}) == HelpOutcome::no_human_found);
}

TEST_CASE("model agrees with the replayed state machine on every grid trace") {
  const CausalHelpModel model;
  for (int s = 11; s <= 18; ++s) {
    for (int v = 1; v <= 3; ++v) {
      for (std::uint64_t seed : {1ULL, 42ULL, 2024ULL}) {
        const Trace t = generate_trace(s, v, seed);
        const auto events = help_events(t);
        const CausalHelpModel fitted(extract_thresholds(events));
        const HelpOutcome predicted = evaluate_model(fitted, extract_variables(events));
        CAPTURE(s);
        CHECK(predicted == replay_fsm(t));
        CHECK(predicted == *injected_help_outcome(s));
      }
    }
  }
  CHECK_THROWS_AS(replay_fsm(generate_trace(5, 1, 1)), ReplayError);
}

TEST_CASE("counterfactuals flip the failed gate and are minimal") {
  const CausalHelpModel model;
  for (int s = 11; s <= 16; ++s) {
    for (int variant = 1; variant <= 3; ++variant) {
      const auto v = variables_of(s, variant);
      const HelpOutcome realized = evaluate_model(model, v);
      REQUIRE(realized != HelpOutcome::success);
      const auto cf = counterfactual(model, v, HelpOutcome::success);
      CAPTURE(s);
      CHECK(cf.realized == realized);
      CHECK(evaluate_model(model, cf.intervened) == cf.result);
      CHECK(outcome_rank(cf.result) > outcome_rank(realized));

      // Brute force over every single-variable boundary intervention.
      std::optional<double> best_change;
      std::vector<HelpVariable> flipping;
      for (auto x : kVariables) {
        const auto w = intervene(model, v, x);
        if (outcome_rank(evaluate_model(model, w)) <= outcome_rank(realized)) continue;
        flipping.push_back(x);
        const auto before = numeric(v, x);
        const auto after = numeric(w, x);
        if (before && after) {
          const double change = std::abs(*after - *before);
          best_change = best_change ? std::min(*best_change, change) : change;
        }
      }
      CHECK(flipping == std::vector<HelpVariable>{cf.variable});
      const auto before = numeric(v, cf.variable);
      const auto after = numeric(cf.intervened, cf.variable);
      if (before && after && cf.variable != HelpVariable::n_humans) {
        CHECK(std::abs(*after - *before) == *best_change);
        // Any smaller change leaves the gate failing.
        HelpVariables nudged = cf.intervened;
        const double back = *after + (*before - *after) * 1e-6;
        if (cf.variable == HelpVariable::min_distance) nudged.min_distance = back;
        if (cf.variable == HelpVariable::detection_duration) nudged.detection_duration = back;
        CHECK(evaluate_model(model, nudged) == realized);
      }
    }
  }
}

TEST_CASE("boundary interventions for scenarios 12 and 16") {
  const CausalHelpModel model;
  const auto cf12 = counterfactual(model, variables_of(12), HelpOutcome::success);
  CHECK(cf12.variable == HelpVariable::min_distance);
  CHECK(*cf12.intervened.min_distance == 3.0);
  CHECK(cf12.value_star == "3.00");
  CHECK(cf12.result == HelpOutcome::success);
  const auto cf16 = counterfactual(model, variables_of(16), HelpOutcome::success);
  CHECK(cf16.variable == HelpVariable::confirmation);
  CHECK(cf16.value == "false");
  CHECK(cf16.value_star == "true");
  CHECK(cf16.result == HelpOutcome::success);
  const auto cf11 = counterfactual(model, variables_of(11), HelpOutcome::success);
  CHECK(render_counterfactual(cf11) ==
        "no_human_found occurred because n_humans = 0. If n_humans = 1, success would have occurred instead.");
}

TEST_CASE("template is bit exact") {
  CounterfactualResult r;
  r.realized = HelpOutcome::human_too_far;
  r.variable = HelpVariable::min_distance;
  r.value = "4.10";
  r.value_star = "3.00";
  r.result = HelpOutcome::success;
  CHECK(render_counterfactual(r) ==
        "human_too_far occurred because min_distance = 4.10. "
        "If min_distance = 3.00, success would have occurred instead.");
}

TEST_CASE("preconditions and multiple causes") {
  const CausalHelpModel model;
  CHECK_THROWS_AS(counterfactual(model, all_pass(), HelpOutcome::success), CounterfactualPreconditionError);
  auto v = all_pass();
  v.confirmation = false;
  CHECK_THROWS_AS(counterfactual(model, v, HelpOutcome::human_too_far), CounterfactualPreconditionError);
  auto two = all_pass();
  two.min_distance = 4.0;
  two.response = HelpResponse::refuse;
  try {
    counterfactual(model, two, HelpOutcome::success);
    FAIL("expected a multi-cause error");
  } catch (const MultiCauseError& e) {
    CHECK(e.failing() == std::vector<HelpOutcome>{HelpOutcome::human_too_far, HelpOutcome::help_refused});
  }
  // Targeting the gate right after the realized one is a single change.
  const auto partial = counterfactual(model, two, HelpOutcome::help_refused);
  CHECK(partial.result == HelpOutcome::help_refused);
}

TEST_CASE("counterfactuals are pure") {
  const CausalHelpModel model;
  const auto v = variables_of(13);
  CHECK(render_counterfactual(counterfactual(model, v, HelpOutcome::success)) ==
        render_counterfactual(counterfactual(model, v, HelpOutcome::success)));
}

namespace {

class FailingReasoner final : public Reasoner {
 public:
  ReasonerResponse complete(const ReasonerRequest&) const override { throw ReasonerError("offline"); }
  std::string name() const override { return "failing"; }
};

Explanation explain_scenario(int s, const Reasoner& reasoner) {
  const Trace t = generate_trace(s, 1, 42);
  const ObservationStore store(t);
  const Query q = grid_query(t, 1);
  const ContextVector c = build_context(q, store);
  ReasonerSession session(reasoner);
  const auto events = events_in_window(store.view({Source::ask_human_for_help}), c.window);
  return explain_help(q, c, events, session);
}

}  // namespace

TEST_CASE("help explanations") {
  const RuleReasoner rule;
  const auto x11 = explain_scenario(11, rule);
  CHECK(contains_icase(x11.text, "no person was detected"));
  CHECK_FALSE(x11.fallback);
  const auto x18 = explain_scenario(18, rule);
  CHECK(contains_icase(x18.text, "high variance in the person's detection"));
  const auto x17 = explain_scenario(17, rule);
  CHECK(contains_icase(x17.text, "suboptimal navigation"));
  CHECK(contains_icase(x17.text, "4 times"));

  // A clean success: scenario 17 with the detours removed.
  Trace t = generate_trace(17, 1, 42);
  for (auto& e : t.events) {
    if (find_string(e.payload, "event") == "approach") e.payload["replans"] = std::int64_t{0};
  }
  const ObservationStore store(t);
  const Query q = grid_query(t, 1);
  const ContextVector c = build_context(q, store);
  ReasonerSession session(rule);
  const auto clean = explain_help(q, c, events_in_window(store.view({Source::ask_human_for_help}), c.window), session);
  CHECK_FALSE(contains_icase(clean.text, "suboptimal"));
  CHECK_FALSE(contains_icase(clean.text, "would have"));
}

TEST_CASE("reasoner failure falls back to the template") {
  const FailingReasoner failing;
  const auto x = explain_scenario(15, failing);
  CHECK(x.fallback);
  CHECK(x.text.find("help_refused occurred because response = refuse.") != std::string::npos);
}
