#pragma once

// Explainer registry, per-explainer event views, the two-stage selector and
// aggregation.

#include <functional>
#include <map>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "hexar/explainers.hpp"
#include "hexar/reasoner.hpp"
#include "hexar/trace.hpp"

namespace hexar {

using ExplainFn =
    std::function<Explanation(const Query&, const ContextVector&, std::span<const Event>, ReasonerSession&)>;

struct ComponentExplainer {
  std::string id;
  std::string summary;  // one line, shown to the query classifier
  std::set<Source> subscribed_sources;
  ExplainFn explain;
  bool uses_reasoner = true;
};

class RegistryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ExplainerRegistry {
 public:
  // Registers an explainer serving the given robot modules. Ids must be unique.
  void add(ComponentExplainer explainer, const std::vector<Source>& modules);

  bool contains(const std::string& id) const { return explainers_.contains(id); }
  const ComponentExplainer& at(const std::string& id) const;
  // Explainers mapped to a module, in registration order; empty if none.
  const std::vector<std::string>& for_module(Source module) const;
  // Registration order.
  const std::vector<std::string>& ids() const { return order_; }
  // Modules that have no explainer.
  std::vector<Source> uncovered(const std::vector<Source>& modules) const;
  std::set<Source> subscribed_union() const;

 private:
  std::map<std::string, ComponentExplainer> explainers_;
  std::map<Source, std::vector<std::string>> entries_;
  std::vector<std::string> order_;
};

struct ExplainerOptions {
  std::uint64_t seed = 0;  // feeds the pizza explainer's perturbations
  std::size_t lime_samples = 1000;
};

// One explainer per explainable module, with ids equal to module names.
ExplainerRegistry default_registry(const ExplainerOptions& options = {});

class ObservationStore {
 public:
  explicit ObservationStore(const Trace& trace);

  // Events whose source is in sources, in trace order.
  std::vector<Event> view(const std::set<Source>& sources) const;
  // Plan and skill status events.
  std::vector<Event> selector_view() const;
  const Trace& trace() const { return trace_; }

 private:
  const Trace& trace_;
};

class ContextError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

ContextVector build_context(const Query& query, const ObservationStore& store);
std::vector<Event> events_in_window(std::span<const Event> events, const TimeWindow& window);

enum class SelectionStage { failure_heuristic, query_classifier };
std::string_view to_string(SelectionStage stage);

struct SelectorDecision {
  std::vector<std::string> chosen;
  SelectionStage stage = SelectionStage::failure_heuristic;
  ContextVector context;
};

class SelectionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

ReasonerRequest classifier_request(const Query& query, const ContextVector& context,
                                   const ExplainerRegistry& registry);

// Stage 1: an invalid plan goes to the planner's explainer, otherwise the
// earliest failed skill goes to its module's explainer. Stage 2: the
// reasoner classifies the query to one explainer id.
SelectorDecision select(const Query& query, const ObservationStore& store, const ExplainerRegistry& registry,
                        ReasonerSession& session);

// A single explanation passes through unchanged; several are merged by the
// reasoner and credited to every contributor plus "aggregator".
Explanation aggregate(const std::vector<Explanation>& explanations, const Query& query, ReasonerSession& session);

// Selector, chosen explainer, no aggregation. wall_time includes simulated
// reasoner delay.
Explanation explain_hexar(const Query& query, const Trace& trace, const ExplainerRegistry& registry,
                          const Reasoner& reasoner, SelectorDecision* decision_out = nullptr);

// Runs one registered explainer on a trace with a fresh context.
Explanation run_explainer(const ComponentExplainer& explainer, const Query& query, const ContextVector& context,
                          const ObservationStore& store, ReasonerSession& session);

}  // namespace hexar
