#include <doctest.h>

#include "hexar/framework.hpp"
#include "hexar/prompt.hpp"
#include "hexar/scenarios.hpp"

using namespace hexar;

namespace {

class ScriptedReasoner final : public Reasoner {
 public:
  explicit ScriptedReasoner(std::string answer) : answer_(std::move(answer)) {}
  ReasonerResponse complete(const ReasonerRequest&) const override { return {answer_, 0.0, 1}; }
  std::string name() const override { return "scripted"; }

 private:
  std::string answer_;
};

ComponentExplainer stub(const std::string& id, std::set<Source> sources) {
  return {id, "stub", std::move(sources),
          [](const Query&, const ContextVector&, std::span<const Event>, ReasonerSession&) {
            return Explanation{"x"};
          }};
}

}  // namespace

TEST_CASE("views keep trace order and only subscribed sources") {
  const Trace t = generate_trace(9, 1, 42);
  const ObservationStore store(t);
  const auto nav = store.view({Source::navigation});
  REQUIRE_FALSE(nav.empty());
  for (std::size_t i = 0; i < nav.size(); ++i) {
    CHECK(nav[i].source == Source::navigation);
    if (i > 0) CHECK(nav[i - 1].ts <= nav[i].ts);
  }
  std::size_t expected = 0;
  for (const auto& e : t.events) expected += e.source == Source::navigation ? 1 : 0;
  CHECK(nav.size() == expected);
  for (const auto& e : store.selector_view()) {
    CHECK((e.kind == EventKind::plan || e.kind == EventKind::skill_status));
  }
  CHECK(store.view({}).empty());
}

TEST_CASE("context vectors") {
  const Trace t7 = generate_trace(7, 1, 42);
  const ObservationStore s7(t7);
  const auto c7 = build_context(grid_query(t7, 1), s7);
  CHECK(c7.plan_valid);
  REQUIRE_FALSE(c7.skills.empty());
  CHECK(c7.skills.front().skill == "navigation");
  CHECK(c7.skills.front().status == SkillStatus::failed);
  CHECK(c7.skills.front().error_code == "charger_connected");
  CHECK(c7.window.t_start == t7.events.front().ts);
  CHECK(c7.window.t_end == t7.events.back().ts);

  const Trace t2 = generate_trace(2, 1, 42);
  const ObservationStore s2(t2);
  CHECK_FALSE(build_context(grid_query(t2, 1), s2).plan_valid);

  const Trace t10 = generate_trace(10, 2, 42);
  const ObservationStore s10(t10);
  for (const auto& s : build_context(grid_query(t10, 1), s10).skills) CHECK(s.status == SkillStatus::succeeded);

  // A query asked mid-trace sees only what happened so far.
  const Query early{"What happened?", t7.events.front().ts};
  const auto c_early = build_context(early, s7);
  CHECK(c_early.skills.front().status == SkillStatus::waiting);
  CHECK(c_early.window.t_end == c_early.window.t_start);
}

TEST_CASE("selector stages") {
  const auto registry = default_registry();
  const RuleReasoner rule;
  auto decide = [&](int s, int q) {
    const Trace t = generate_trace(s, 1, 42);
    const ObservationStore store(t);
    ReasonerSession session(rule);
    auto d = select(grid_query(t, q), store, registry, session);
    return std::make_pair(d, session.calls());
  };
  const auto [d7, calls7] = decide(7, 1);
  CHECK(d7.stage == SelectionStage::failure_heuristic);
  CHECK(d7.chosen == std::vector<std::string>{"navigation"});
  CHECK(calls7 == 0);
  const auto [d2, calls2] = decide(2, 1);
  CHECK(d2.chosen == std::vector<std::string>{"planner"});
  CHECK(calls2 == 0);
  const auto [d20, calls20] = decide(20, 2);
  CHECK(d20.stage == SelectionStage::query_classifier);
  CHECK(d20.chosen == std::vector<std::string>{"pizza_recommender"});
  CHECK(calls20 == 1);
  const auto [d10, calls10] = decide(10, 3);
  CHECK(d10.chosen == std::vector<std::string>{"navigation"});
}

TEST_CASE("classifier answers are validated") {
  const auto registry = default_registry();
  const Trace t = generate_trace(20, 1, 42);
  const ObservationStore store(t);
  const ScriptedReasoner bogus("kitchen_sink");
  ReasonerSession session(bogus);
  CHECK_THROWS_AS(select(grid_query(t, 1), store, registry, session), SelectionError);
  const ScriptedReasoner quoted(" `navigation`. ");
  ReasonerSession s2(quoted);
  CHECK(select(grid_query(t, 1), store, registry, s2).chosen == std::vector<std::string>{"navigation"});
  const auto request = classifier_request(grid_query(t, 1), build_context(grid_query(t, 1), store), registry);
  for (const auto& id : registry.ids()) CHECK(request.system_prompt.find("- " + id + ":") != std::string::npos);
}

TEST_CASE("heuristic needs a registered module") {
  ExplainerRegistry partial;
  partial.add(stub("planner", {Source::planner}), {Source::planner});
  const Trace t = generate_trace(7, 1, 42);
  const ObservationStore store(t);
  const RuleReasoner rule;
  ReasonerSession session(rule);
  CHECK_THROWS_AS(select(grid_query(t, 1), store, partial, session), SelectionError);
}

TEST_CASE("registry") {
  ExplainerRegistry r;
  r.add(stub("a", {Source::navigation}), {Source::navigation});
  CHECK_THROWS_AS(r.add(stub("a", {Source::planner}), {Source::planner}), RegistryError);
  CHECK_THROWS_AS(r.add(stub("", {Source::planner}), {Source::planner}), RegistryError);
  CHECK_THROWS_AS(r.add(stub("b", {}), {Source::planner}), RegistryError);
  auto broken = stub("c", {Source::planner});
  broken.explain = nullptr;
  CHECK_THROWS_AS(r.add(broken, {Source::planner}), RegistryError);
  CHECK_THROWS_AS(r.at("zzz"), RegistryError);
  CHECK(r.for_module(Source::planner).empty());
  CHECK(r.uncovered({Source::planner, Source::navigation}) == std::vector<Source>{Source::planner});

  const auto d = default_registry();
  CHECK(d.ids() == std::vector<std::string>{"planner", "navigation", "text_to_speech", "ask_human_for_help",
                                            "pizza_recommender"});
  CHECK(d.uncovered(explainable_modules()).empty());
  CHECK_FALSE(d.at("text_to_speech").uses_reasoner);
  CHECK_FALSE(d.at("pizza_recommender").uses_reasoner);
}

TEST_CASE("aggregation") {
  const RuleReasoner rule;
  const Query q{"What happened?", 0.0};
  ReasonerSession session(rule);
  Explanation one{"Only this.", {"planner"}, 1};
  const auto same = aggregate({one}, q, session);
  CHECK(same.text == one.text);
  CHECK(same.produced_by == one.produced_by);
  CHECK(session.calls() == 0);

  const auto merged = aggregate({one, one}, q, session);
  CHECK(merged.text == "Only this.");
  CHECK(merged.produced_by == std::vector<std::string>{"planner", "planner", "aggregator"});
  CHECK(merged.reasoner_calls == 3);
  CHECK(session.calls() == 1);

  Explanation two{"Second one. Only this.", {"navigation"}, 0};
  CHECK(aggregate({one, two}, q, session).text == "Only this. Second one.");
  CHECK_THROWS_AS(aggregate({}, q, session), std::invalid_argument);
}

TEST_CASE("every grid point gets exactly one explainer and at most two calls") {
  const auto registry = default_registry();
  const RuleReasoner rule;
  for (const auto& e : full_manifest()) {
    const Trace t = generate_trace(e.scenario_id, e.task_variant, 42);
    SelectorDecision d;
    const auto x = explain_hexar(grid_query(t, e.query_index), t, registry, rule, &d);
    CAPTURE(e.scenario_id);
    CHECK(d.chosen.size() == 1);
    CHECK(x.produced_by == d.chosen);
    CHECK(x.reasoner_calls <= 2);
    CHECK(x.reasoner_calls >= 0);
    CHECK_FALSE(x.text.empty());
    // A failed skill always settles the choice without the classifier.
    bool failed = !d.context.plan_valid;
    for (const auto& s : d.context.skills) failed = failed || s.status == SkillStatus::failed;
    if (failed) CHECK(d.stage == SelectionStage::failure_heuristic);
    if (e.scenario_id == 19) CHECK(x.reasoner_calls == 0);
  }
}

TEST_CASE("traces without a plan have no context") {
  Trace t;
  t.events = {{0.0, Source::system, EventKind::log, {{"msg", std::string("boot")}}}};
  const ObservationStore store(t);
  CHECK_THROWS_AS(build_context({"What happened?", 1.0}, store), ContextError);
}
