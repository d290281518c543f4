#include "hexar/framework.hpp"

#include <algorithm>
#include <chrono>

#include <fmt/format.h>

#include "hexar/causal.hpp"
#include "hexar/prompt.hpp"
#include "hexar/resources.hpp"

namespace hexar {

void ExplainerRegistry::add(ComponentExplainer explainer, const std::vector<Source>& modules) {
  if (explainer.id.empty()) throw RegistryError("explainer id must not be empty");
  if (explainer.subscribed_sources.empty()) {
    throw RegistryError(fmt::format("explainer '{}' subscribes to no source", explainer.id));
  }
  if (!explainer.explain) throw RegistryError(fmt::format("explainer '{}' has no explain function", explainer.id));
  if (explainers_.contains(explainer.id)) throw RegistryError(fmt::format("duplicate explainer '{}'", explainer.id));
  for (auto m : modules) entries_[m].push_back(explainer.id);
  order_.push_back(explainer.id);
  explainers_.emplace(explainer.id, std::move(explainer));
}

const ComponentExplainer& ExplainerRegistry::at(const std::string& id) const {
  auto it = explainers_.find(id);
  if (it == explainers_.end()) throw RegistryError(fmt::format("no explainer '{}'", id));
  return it->second;
}

const std::vector<std::string>& ExplainerRegistry::for_module(Source module) const {
  static const std::vector<std::string> kNone;
  auto it = entries_.find(module);
  return it == entries_.end() ? kNone : it->second;
}

std::vector<Source> ExplainerRegistry::uncovered(const std::vector<Source>& modules) const {
  std::vector<Source> out;
  for (auto m : modules) {
    if (for_module(m).empty()) out.push_back(m);
  }
  return out;
}

std::set<Source> ExplainerRegistry::subscribed_union() const {
  std::set<Source> out;
  for (const auto& [id, e] : explainers_) out.insert(e.subscribed_sources.begin(), e.subscribed_sources.end());
  return out;
}

ExplainerRegistry default_registry(const ExplainerOptions& options) {
  ExplainerRegistry registry;
  registry.add({"planner", "task plans: how an instruction was turned into steps, invalid or incomplete plans, "
                           "tasks the robot cannot do",
                {Source::planner},
                explain_planner, true},
               {Source::planner});
  registry.add({"navigation", "driving around: routes, speed, obstacles, localisation, charging, joystick",
                {Source::navigation},
                explain_navigation, true},
               {Source::navigation});
  registry.add({"text_to_speech", "speaking: utterances, speech cut off, voice",
                {Source::text_to_speech},
                [](const Query& q, const ContextVector& c, std::span<const Event> ev, ReasonerSession&) {
                  return explain_tts(q, c, ev);
                },
                false},
               {Source::text_to_speech});
  registry.add({"ask_human_for_help", "asking people for help: detecting, approaching, asking and confirmation",
                {Source::ask_human_for_help},
                explain_help, true},
               {Source::ask_human_for_help});
  PizzaExplainerConfig pizza;
  pizza.lime.seed = options.seed;
  pizza.lime.n_samples = options.lime_samples;
  registry.add({"pizza_recommender", "pizza recommendations and the ingredients behind them",
                {Source::pizza_recommender},
                [pizza](const Query& q, const ContextVector& c, std::span<const Event> ev, ReasonerSession&) {
                  return explain_pizza(q, c, ev, pizza);
                },
                false},
               {Source::pizza_recommender});
  return registry;
}

ObservationStore::ObservationStore(const Trace& trace) : trace_(trace) {}

std::vector<Event> ObservationStore::view(const std::set<Source>& sources) const {
  std::vector<Event> out;
  for (const auto& e : trace_.events) {
    if (sources.contains(e.source)) out.push_back(e);
  }
  return out;
}

std::vector<Event> ObservationStore::selector_view() const {
  std::vector<Event> out;
  for (const auto& e : trace_.events) {
    if (e.kind == EventKind::plan || e.kind == EventKind::skill_status) out.push_back(e);
  }
  return out;
}

std::vector<Event> events_in_window(std::span<const Event> events, const TimeWindow& window) {
  std::vector<Event> out;
  for (const auto& e : events) {
    if (e.ts >= window.t_start && e.ts <= window.t_end) out.push_back(e);
  }
  return out;
}

ContextVector build_context(const Query& query, const ObservationStore& store) {
  const auto& events = store.trace().events;
  const auto view = store.selector_view();
  const Event* plan_event = nullptr;
  for (const auto& e : view) {
    if (e.kind == EventKind::plan) plan_event = &e;
  }
  if (plan_event == nullptr) throw ContextError("the trace has no plan event");
  const TaskPlan plan = decode_plan(plan_event->payload);

  ContextVector context;
  context.task = plan.instruction;
  context.plan_valid = plan.valid;
  context.window.t_start = events.front().ts;
  context.window.t_end = std::max(context.window.t_start, std::min(events.back().ts, query.asked_at));
  for (std::size_t i = 0; i < plan.steps.size(); ++i) {
    context.skills.push_back({i, plan.steps[i].skill, SkillStatus::waiting, {}});
  }
  for (const auto& e : view) {
    if (e.kind != EventKind::skill_status || e.ts > context.window.t_end) continue;
    const auto step = find_number(e.payload, "step");
    if (!step || *step < 0 || static_cast<std::size_t>(*step) >= context.skills.size()) continue;
    auto& state = context.skills[static_cast<std::size_t>(*step)];
    if (auto status = parse_skill_status(find_string(e.payload, "status").value_or(""))) state.status = *status;
    state.error_code = find_string(e.payload, "error_code").value_or("");
  }
  return context;
}

std::string_view to_string(SelectionStage stage) {
  return stage == SelectionStage::failure_heuristic ? "failure_heuristic" : "query_classifier";
}

ReasonerRequest classifier_request(const Query& query, const ContextVector& context,
                                   const ExplainerRegistry& registry) {
  std::string listing;
  for (const auto& id : registry.ids()) listing += fmt::format("- {}: {}\n", id, registry.at(id).summary);
  ReasonerRequest request;
  request.system_prompt = PromptBuilder()
                              .text(resource("prompts/selector_system.txt"))
                              .section("EXPLAINERS", listing)
                              .str();
  request.user_prompt = PromptBuilder()
                            .section("TASK", context.task)
                            .section("SKILL STATUS", render_skill_statuses(context))
                            .section("QUERY", query.text)
                            .str();
  request.max_tokens = 16;
  return request;
}

SelectorDecision select(const Query& query, const ObservationStore& store, const ExplainerRegistry& registry,
                        ReasonerSession& session) {
  SelectorDecision decision;
  decision.context = build_context(query, store);
  const ContextVector& context = decision.context;

  auto explainer_for = [&](Source module) {
    const auto& ids = registry.for_module(module);
    if (ids.empty()) throw SelectionError(fmt::format("no explainer registered for {}", to_string(module)));
    return ids.front();
  };

  if (!context.plan_valid) {
    decision.stage = SelectionStage::failure_heuristic;
    decision.chosen = {explainer_for(Source::planner)};
    return decision;
  }
  // Earliest failure by timestamp.
  for (const auto& e : store.selector_view()) {
    if (e.kind != EventKind::skill_status || e.ts > context.window.t_end) continue;
    if (find_string(e.payload, "status") != "failed") continue;
    const std::string skill = find_string(e.payload, "skill").value_or("");
    const auto module = parse_source(skill);
    if (!module || *module == Source::system) {
      throw SelectionError(fmt::format("failed skill '{}' belongs to no robot module", skill));
    }
    decision.stage = SelectionStage::failure_heuristic;
    decision.chosen = {explainer_for(*module)};
    return decision;
  }

  decision.stage = SelectionStage::query_classifier;
  std::string answer = trim(session.complete(classifier_request(query, context, registry)).text);
  while (!answer.empty() && std::string_view("`'\".").find(answer.back()) != std::string_view::npos) answer.pop_back();
  while (!answer.empty() && std::string_view("`'\"").find(answer.front()) != std::string_view::npos) {
    answer.erase(answer.begin());
  }
  if (!registry.contains(answer)) {
    throw SelectionError(fmt::format("query classifier returned unknown explainer '{}'", answer));
  }
  decision.chosen = {answer};
  return decision;
}

Explanation aggregate(const std::vector<Explanation>& explanations, const Query& query, ReasonerSession& session) {
  if (explanations.empty()) throw std::invalid_argument("nothing to aggregate");
  if (explanations.size() == 1) return explanations.front();

  Explanation out;
  std::string listing;
  for (const auto& x : explanations) {
    listing += fmt::format("- [{}] {}\n", x.producer_label(), x.text);
    out.produced_by.insert(out.produced_by.end(), x.produced_by.begin(), x.produced_by.end());
    out.reasoner_calls += x.reasoner_calls;
    out.fallback = out.fallback || x.fallback;
  }
  ReasonerRequest request;
  request.system_prompt = std::string(resource("prompts/aggregate_system.txt"));
  request.user_prompt = PromptBuilder().section("QUERY", query.text).section("EXPLANATIONS", listing).str();
  out.text = trim(session.complete(request).text);
  if (out.text.empty()) throw ReasonerError("aggregation returned an empty explanation");
  out.produced_by.push_back("aggregator");
  out.reasoner_calls += 1;
  return out;
}

Explanation run_explainer(const ComponentExplainer& explainer, const Query& query, const ContextVector& context,
                          const ObservationStore& store, ReasonerSession& session) {
  const auto events = events_in_window(store.view(explainer.subscribed_sources), context.window);
  const int before = session.calls();
  Explanation x = explainer.explain(query, context, events, session);
  x.produced_by = {explainer.id};
  x.reasoner_calls = session.calls() - before;
  return x;
}

Explanation explain_hexar(const Query& query, const Trace& trace, const ExplainerRegistry& registry,
                          const Reasoner& reasoner, SelectorDecision* decision_out) {
  const auto start = std::chrono::steady_clock::now();
  ReasonerSession session(reasoner);
  const ObservationStore store(trace);
  SelectorDecision decision = select(query, store, registry, session);
  Explanation x = run_explainer(registry.at(decision.chosen.front()), query, decision.context, store, session);
  x.reasoner_calls = session.calls();
  x.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() +
                session.simulated_delay();
  if (decision_out != nullptr) *decision_out = std::move(decision);
  return x;
}

}  // namespace hexar
