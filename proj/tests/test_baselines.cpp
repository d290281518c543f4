#include <doctest.h>

#include <algorithm>

#include "hexar/baselines.hpp"
#include "hexar/prompt.hpp"
#include "hexar/scenarios.hpp"

using namespace hexar;

namespace {

// Events that reach some explainer's view within the query window.
std::vector<Event> union_of_views(const Trace& t, const ExplainerRegistry& registry, const Query& q) {
  const ObservationStore store(t);
  const auto c = build_context(q, store);
  std::vector<Event> out;
  for (const auto& id : registry.ids()) {
    for (auto& e : events_in_window(store.view(registry.at(id).subscribed_sources), c.window)) {
      out.push_back(std::move(e));
    }
  }
  return out;
}

}  // namespace

TEST_CASE("end to end makes exactly one call") {
  const auto registry = default_registry();
  const RuleReasoner rule;
  for (int s : {2, 7, 9, 12, 19, 20}) {
    const Trace t = generate_trace(s, 1, 42);
    const auto x = explain_end_to_end(grid_query(t, 3), t, registry, rule);
    CHECK(x.reasoner_calls == 1);
    CHECK(x.produced_by == std::vector<std::string>{"end_to_end"});
  }
}

TEST_CASE("end to end prompt carries every module's evidence") {
  const auto registry = default_registry();
  const Trace t = generate_trace(7, 1, 42);
  const Query q = grid_query(t, 3);
  const auto request = end_to_end_request(q, t, registry);
  const auto sections = parse_sections(request.user_prompt);
  CHECK(sections.at("PARAMETERS").find("charger_connected=true") != std::string::npos);
  CHECK(sections.at("LOGS").find("[bt_navigator] Goal rejected") != std::string::npos);
  CHECK(sections.at("QUERY") == q.text);

  // Information parity: every parameter event some explainer sees is in the prompt.
  for (const auto& e : union_of_views(t, registry, q)) {
    if (e.kind != EventKind::param) continue;
    CHECK(sections.at("PARAMETERS").find(format_payload(e.payload)) != std::string::npos);
  }
}

TEST_CASE("end to end prompt is larger than a single explainer's") {
  const auto registry = default_registry();
  const Trace t = generate_trace(9, 1, 42);
  const Query q = grid_query(t, 3);
  const ObservationStore store(t);
  const auto c = build_context(q, store);
  const auto nav = navigation_request(q, c, events_in_window(store.view({Source::navigation}), c.window));
  CHECK(end_to_end_request(q, t, registry).user_prompt.size() > nav.user_prompt.size());
}

TEST_CASE("all components runs every backed explainer once and aggregates") {
  const auto registry = default_registry();
  const RuleReasoner rule;
  int backed = 0;
  for (const auto& id : registry.ids()) backed += registry.at(id).uses_reasoner ? 1 : 0;
  // Every reasoner-backed explainer has evidence in a help scenario.
  const Trace t12 = generate_trace(12, 1, 42);
  CHECK(explain_all_components(grid_query(t12, 3), t12, registry, rule).reasoner_calls == backed + 1);
  const Trace t = generate_trace(7, 1, 42);
  const auto x = explain_all_components(grid_query(t, 3), t, registry, rule);
  CHECK(x.reasoner_calls <= backed + 1);
  auto expected = registry.ids();
  expected.push_back("aggregator");
  CHECK(x.produced_by == expected);
  CHECK(contains_icase(x.text, "charging"));
  // Explainers that fail leave a note rather than aborting.
  CHECK(x.text.find("(no explanation") == std::string::npos);
}

TEST_CASE("call counts order the methods") {
  const auto registry = default_registry();
  const RuleReasoner rule;
  for (int s = 1; s <= 20; ++s) {
    const Trace t = generate_trace(s, 1, 42);
    const Query q = grid_query(t, 3);
    const auto h = explain_hexar(q, t, registry, rule);
    const auto e = explain_end_to_end(q, t, registry, rule);
    const auto a = explain_all_components(q, t, registry, rule);
    CAPTURE(s);
    CHECK(h.reasoner_calls < a.reasoner_calls);
    CHECK(e.reasoner_calls < a.reasoner_calls);
  }
}

TEST_CASE("simulated latency accumulates") {
  const auto registry = default_registry();
  const RuleReasoner rule;
  const SimulatedLatencyReasoner slow(rule, 0.0, 1.0);
  const Trace t = generate_trace(7, 1, 42);
  const Query q = grid_query(t, 3);
  const auto e = explain_end_to_end(q, t, registry, slow);
  CHECK(e.wall_time >= 1.0);
  CHECK(e.wall_time < 1.5);
  const auto a = explain_all_components(q, t, registry, slow);
  CHECK(a.wall_time >= a.reasoner_calls * 1.0);
}
