#include "hexar/baselines.hpp"

#include <chrono>
#include <future>

#include <fmt/format.h>

#include "hexar/log_filter.hpp"
#include "hexar/prompt.hpp"
#include "hexar/resources.hpp"

namespace hexar {

namespace {

std::string lines_of(std::span<const Event> events, EventKind kind) {
  std::string out;
  for (const auto& e : events) {
    if (e.kind != kind) continue;
    out += fmt::format("[{:.2f}] [{}] {}\n", e.ts, to_string(e.source), format_payload(e.payload));
  }
  return out;
}

}  // namespace

ReasonerRequest end_to_end_request(const Query& query, const Trace& trace, const ExplainerRegistry& registry) {
  const ObservationStore store(trace);
  const ContextVector context = build_context(query, store);
  const auto visible = events_in_window(store.view(registry.subscribed_union()), context.window);
  const TaskPlan plan = find_plan(store.selector_view());

  PromptBuilder user;
  user.section("INSTRUCTION", plan.instruction);
  user.section("PLAN", render_plan(plan));
  if (!plan.grounding_errors.empty()) {
    std::string errors;
    for (const auto& e : plan.grounding_errors) errors += "- " + e + "\n";
    user.section("GROUNDING ERRORS", errors);
  }
  user.section("SKILL STATUS", render_skill_statuses(context));
  std::string logs;
  for (const auto& line : filter_logs(log_lines(visible), default_log_filter_rules())) logs += line + "\n";
  user.section("LOGS", logs);
  user.section("PARAMETERS", render_params(visible, true));
  user.section("DETECTIONS", lines_of(visible, EventKind::detection));
  user.section("DIALOGUE", lines_of(visible, EventKind::dialogue));
  user.section("QUERY", query.text);

  ReasonerRequest request;
  request.system_prompt = std::string(resource("prompts/end_to_end_system.txt"));
  request.user_prompt = user.str();
  return request;
}

Explanation explain_end_to_end(const Query& query, const Trace& trace, const ExplainerRegistry& registry,
                               const Reasoner& reasoner) {
  const auto start = std::chrono::steady_clock::now();
  ReasonerSession session(reasoner);
  Explanation x;
  x.text = trim(session.complete(end_to_end_request(query, trace, registry)).text);
  if (x.text.empty()) throw ReasonerError("reasoner returned an empty explanation");
  x.produced_by = {"end_to_end"};
  x.reasoner_calls = session.calls();
  x.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() +
                session.simulated_delay();
  return x;
}

Explanation explain_all_components(const Query& query, const Trace& trace, const ExplainerRegistry& registry,
                                   const Reasoner& reasoner) {
  const auto start = std::chrono::steady_clock::now();
  const ObservationStore store(trace);
  const ContextVector context = build_context(query, store);

  struct Outcome {
    Explanation explanation;
    ReasonerSession session;
  };
  std::vector<std::future<Outcome>> futures;
  for (const auto& id : registry.ids()) {
    futures.push_back(std::async(std::launch::async, [&, id]() {
      const ComponentExplainer& explainer = registry.at(id);
      Outcome outcome{{}, ReasonerSession(reasoner)};
      try {
        outcome.explanation = run_explainer(explainer, query, context, store, outcome.session);
      } catch (const std::exception& e) {
        outcome.explanation.text = fmt::format("(no explanation from {}: {})", id, e.what());
        outcome.explanation.produced_by = {id};
        outcome.explanation.reasoner_calls = outcome.session.calls();
      }
      return outcome;
    }));
  }

  ReasonerSession session(reasoner);
  std::vector<Explanation> parts;
  for (auto& f : futures) {
    Outcome outcome = f.get();
    session.absorb(outcome.session);
    parts.push_back(std::move(outcome.explanation));
  }
  Explanation x = aggregate(parts, query, session);
  if (x.produced_by.empty() || x.produced_by.back() != "aggregator") x.produced_by.push_back("aggregator");
  x.reasoner_calls = session.calls();
  x.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() +
                session.simulated_delay();
  return x;
}

}  // namespace hexar
