#pragma once

#include <span>
#include <string>
#include <vector>

#include "hexar/decision_tree.hpp"
#include "hexar/lime.hpp"
#include "hexar/log_filter.hpp"
#include "hexar/reasoner.hpp"
#include "hexar/trace.hpp"

namespace hexar {

// Each explainer receives the events of its own subscription, already
// restricted to the context window, and returns text plus the fallback flag.
// Callers fill in produced_by, reasoner_calls and wall_time.

// Prompt sections shared with the end-to-end baseline.
std::string render_plan(const TaskPlan& plan);
std::string render_skill_statuses(const ContextVector& context);
std::string render_params(std::span<const Event> events, bool with_source);
// Latest plan event among events; throws std::invalid_argument if none.
TaskPlan find_plan(std::span<const Event> events);

ReasonerRequest planner_request(const Query& query, const ContextVector& context, std::span<const Event> events);
Explanation explain_planner(const Query& query, const ContextVector& context, std::span<const Event> events,
                            ReasonerSession& session);

// Template only; never calls a reasoner.
Explanation explain_tts(const Query& query, const ContextVector& context, std::span<const Event> events);

ReasonerRequest navigation_request(const Query& query, const ContextVector& context, std::span<const Event> events,
                                   const LogFilterRules& rules = default_log_filter_rules());
Explanation explain_navigation(const Query& query, const ContextVector& context, std::span<const Event> events,
                               ReasonerSession& session);

class MissingEvidenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PizzaExplainerConfig {
  LimeConfig lime;
};

// The recommender's tree, trained once on the shipped recipes.
const DecisionTree& pizza_tree();
IngredientVector ingredient_vector(const DecisionTree& tree, const std::string& comma_list);

// Template naming the recommended pizza and the ingredients ranked by their
// surrogate weight. Never calls a reasoner.
Explanation explain_pizza(const Query& query, const ContextVector& context, std::span<const Event> events,
                          const PizzaExplainerConfig& config);

}  // namespace hexar
