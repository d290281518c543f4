#include "hexar/explainers.hpp"

#include <algorithm>
#include <sstream>

#include <fmt/format.h>

#include "hexar/prompt.hpp"
#include "hexar/resources.hpp"

namespace hexar {

namespace {

std::string join_lines(const std::vector<std::string>& lines) {
  std::string out;
  for (const auto& l : lines) {
    out += l;
    out += '\n';
  }
  return out;
}

std::string ask(ReasonerSession& session, const ReasonerRequest& request) {
  std::string text = trim(session.complete(request).text);
  if (text.empty()) throw ReasonerError("reasoner returned an empty explanation");
  return text;
}

const Event* last_of(std::span<const Event> events, Source source, EventKind kind) {
  const Event* found = nullptr;
  for (const auto& e : events) {
    if (e.source == source && e.kind == kind) found = &e;
  }
  return found;
}

}  // namespace

std::string render_plan(const TaskPlan& plan) {
  std::vector<std::string> lines;
  for (std::size_t i = 0; i < plan.steps.size(); ++i) {
    std::string params;
    for (const auto& [k, v] : plan.steps[i].params) {
      if (!params.empty()) params += ", ";
      params += fmt::format("{}={}", k, v);
    }
    lines.push_back(fmt::format("{}. {}({})", i + 1, plan.steps[i].skill, params));
  }
  return join_lines(lines);
}

std::string render_skill_statuses(const ContextVector& context) {
  std::vector<std::string> lines;
  for (const auto& s : context.skills) {
    std::string line = fmt::format("{}. {}: {}", s.step + 1, s.skill, to_string(s.status));
    if (!s.error_code.empty()) line += fmt::format(" ({})", s.error_code);
    lines.push_back(std::move(line));
  }
  return join_lines(lines);
}

std::string render_params(std::span<const Event> events, bool with_source) {
  std::vector<std::string> lines;
  for (const auto& e : events) {
    if (e.kind != EventKind::param) continue;
    lines.push_back(with_source ? fmt::format("[{}] {}", to_string(e.source), format_payload(e.payload))
                                : format_payload(e.payload));
  }
  return join_lines(lines);
}

TaskPlan find_plan(std::span<const Event> events) {
  const Event* plan = nullptr;
  for (const auto& e : events) {
    if (e.kind == EventKind::plan) plan = &e;
  }
  if (plan == nullptr) throw MissingEvidenceError("no plan event available");
  return decode_plan(plan->payload);
}

ReasonerRequest planner_request(const Query& query, const ContextVector& context, std::span<const Event> events) {
  const TaskPlan plan = find_plan(events);
  PromptBuilder user;
  user.section("INSTRUCTION", plan.instruction);
  user.section("PLAN", render_plan(plan));
  if (!plan.grounding_errors.empty()) {
    std::vector<std::string> errors;
    for (const auto& e : plan.grounding_errors) errors.push_back("- " + e);
    user.section("GROUNDING ERRORS", join_lines(errors));
  }
  user.section("SKILL STATUS", render_skill_statuses(context));
  user.section("QUERY", query.text);
  ReasonerRequest request;
  request.system_prompt = std::string(resource("prompts/planner_system.txt"));
  request.user_prompt = user.str();
  return request;
}

Explanation explain_planner(const Query& query, const ContextVector& context, std::span<const Event> events,
                            ReasonerSession& session) {
  Explanation out;
  out.text = ask(session, planner_request(query, context, events));
  return out;
}

Explanation explain_tts(const Query&, const ContextVector& context, std::span<const Event> events) {
  Explanation out;
  const bool timed_out = std::any_of(context.skills.begin(), context.skills.end(), [](const SkillState& s) {
    return s.skill == "text_to_speech" && s.status == SkillStatus::failed && s.error_code == "timeout";
  });
  if (!timed_out) {
    out.text = "No speech problem was detected: my text-to-speech skill did not report any failure.";
    return out;
  }
  std::optional<double> length;
  std::optional<double> timeout;
  for (const auto& e : events) {
    if (e.source != Source::text_to_speech) continue;
    if (e.kind == EventKind::skill_status && find_string(e.payload, "error_code") == "timeout") {
      length = find_number(e.payload, "utterance_length").value_or(length.value_or(0));
    }
    if (e.kind == EventKind::param) timeout = find_number(e.payload, "timeout").value_or(timeout.value_or(0));
  }
  out.text = "The speech was cut off because the text-to-speech skill timed out before the utterance was complete";
  if (length && timeout) {
    out.text += fmt::format(" ({:.0f} characters, {:.1f} s timeout).", *length, *timeout);
  } else if (length) {
    out.text += fmt::format(" ({:.0f} characters).", *length);
  } else {
    out.text += ".";
  }
  return out;
}

ReasonerRequest navigation_request(const Query& query, const ContextVector& context, std::span<const Event> events,
                                   const LogFilterRules& rules) {
  std::vector<Event> nav;
  for (const auto& e : events) {
    if (e.source == Source::navigation) nav.push_back(e);
  }
  PromptBuilder user;
  user.section("TASK", context.task);
  user.section("LOGS", join_lines(filter_logs(log_lines(nav), rules)));
  user.section("PARAMETERS", render_params(nav, false));
  user.section("QUERY", query.text);
  ReasonerRequest request;
  request.system_prompt = std::string(resource("prompts/navigation_system.txt"));
  request.user_prompt = user.str();
  return request;
}

Explanation explain_navigation(const Query& query, const ContextVector& context, std::span<const Event> events,
                               ReasonerSession& session) {
  Explanation out;
  out.text = ask(session, navigation_request(query, context, events));
  return out;
}

const DecisionTree& pizza_tree() {
  static const DecisionTree tree = train_tree(pizza_dataset());
  return tree;
}

IngredientVector ingredient_vector(const DecisionTree& tree, const std::string& comma_list) {
  IngredientVector x(tree.features().size(), 0);
  std::istringstream in(comma_list);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = to_lower(trim(item));
    if (item.empty()) continue;
    auto it = std::find(tree.features().begin(), tree.features().end(), item);
    if (it == tree.features().end()) throw std::invalid_argument(fmt::format("unknown ingredient '{}'", item));
    x[static_cast<std::size_t>(it - tree.features().begin())] = 1;
  }
  return x;
}

Explanation explain_pizza(const Query&, const ContextVector&, std::span<const Event> events,
                          const PizzaExplainerConfig& config) {
  const Event* choice = nullptr;
  for (const auto& e : events) {
    if (e.source == Source::pizza_recommender && e.kind == EventKind::dialogue && find_field(e.payload, "pizza")) {
      choice = &e;
    }
  }
  if (choice == nullptr) throw MissingEvidenceError("no pizza recommendation was made");
  const std::string pizza = get_string(choice->payload, "pizza");
  const Event* params = last_of(events, Source::pizza_recommender, EventKind::param);
  const std::string available =
      params ? find_string(params->payload, "available_ingredients").value_or("") : std::string{};

  const DecisionTree& tree = pizza_tree();
  const IngredientVector x = ingredient_vector(tree, available);
  const Attribution attribution = lime_attribute(tree, x, tree.class_index(pizza), config.lime);

  Explanation out;
  if (!attribution.top_present) {
    out.text = fmt::format(
        "I recommended a {} pizza because no ingredients were available, so I fell back to my default suggestion.",
        pizza);
    return out;
  }
  std::vector<std::size_t> present;
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (x[j]) present.push_back(j);
  }
  std::stable_sort(present.begin(), present.end(), [&](std::size_t a, std::size_t b) {
    return attribution.weights[a] > attribution.weights[b];
  });
  std::string ranking;
  for (auto j : present) {
    if (!ranking.empty()) ranking += ", ";
    ranking += fmt::format("{} ({:+.3f})", tree.features()[j], attribution.weights[j]);
  }
  out.text = fmt::format("I recommended a {} pizza mainly because {} was available. Ranking of the available "
                         "ingredients by relevance: {}.",
                         pizza, tree.features()[*attribution.top_present], ranking);
  return out;
}

}  // namespace hexar
