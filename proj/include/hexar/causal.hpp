#pragma once

// Gate model of the ask-for-help skill and its counterfactual explanations.
// The skill detects people, approaches one, asks, and waits for a
// confirmation; each stage is a gate whose failure ends the execution.

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "hexar/reasoner.hpp"
#include "hexar/trace.hpp"

namespace hexar {

enum class HelpOutcome {
  success,
  no_human_found,
  human_too_far,
  unstable_detection,
  approach_failed,
  help_refused,
  no_confirmation,
};

enum class HelpResponse { agree, refuse, none };

enum class HelpVariable { n_humans, min_distance, detection_duration, path_feasible, response, confirmation };

std::string_view to_string(HelpOutcome outcome);
std::string_view to_string(HelpResponse response);
std::string_view to_string(HelpVariable variable);
std::optional<HelpOutcome> parse_help_outcome(std::string_view text);
std::optional<HelpResponse> parse_help_response(std::string_view text);

// Fields the execution never reached stay empty and count as passing their
// gate. With no person detected the detection-derived fields are empty too.
struct HelpVariables {
  int n_humans = 0;
  std::optional<double> detection_duration;  // s, longest contiguous detection
  std::optional<double> detection_variance;  // m^2, over that detection
  std::optional<double> min_distance;        // m, nearest detection
  std::optional<bool> path_feasible;
  std::optional<HelpResponse> response;
  std::optional<bool> confirmation;
  int approach_replans = 0;

  bool operator==(const HelpVariables&) const = default;
};

struct HelpThresholds {
  double t_stable = 2.0;
  double d_max = 3.0;
  double var_max = 0.25;

  bool operator==(const HelpThresholds&) const = default;
};

struct HelpGate {
  HelpVariable variable;
  HelpOutcome failure;
};

class CausalHelpModel {
 public:
  explicit CausalHelpModel(HelpThresholds thresholds = {});

  // FSM order: n_humans, min_distance, detection_duration, path_feasible,
  // response, confirmation.
  const std::vector<HelpGate>& gates() const { return gates_; }
  const HelpThresholds& thresholds() const { return thresholds_; }
  bool passes(HelpVariable variable, const HelpVariables& v) const;

 private:
  HelpThresholds thresholds_;
  std::vector<HelpGate> gates_;
};

class HelpEventError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Detection frames, approach result and dialogue of the help skill. Events
// from other sources are ignored.
HelpVariables extract_variables(std::span<const Event> events);
// Thresholds from the skill's param event, defaults otherwise.
HelpThresholds extract_thresholds(std::span<const Event> events);
bool has_help_events(std::span<const Event> events);

HelpOutcome evaluate_model(const CausalHelpModel& model, const HelpVariables& v);
// Position in gate order; success ranks after every gate.
std::size_t outcome_rank(HelpOutcome outcome);
// Failure outcomes of every gate whose observed value fails, in gate order.
std::vector<HelpOutcome> failing_gates(const CausalHelpModel& model, const HelpVariables& v);

struct CounterfactualResult {
  HelpOutcome realized = HelpOutcome::success;
  HelpVariable variable = HelpVariable::n_humans;
  std::string value;       // rendered x
  std::string value_star;  // rendered x*
  HelpVariables intervened;
  HelpOutcome result = HelpOutcome::success;  // outcome after the intervention
  HelpOutcome desired = HelpOutcome::success;
};

class CounterfactualPreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class MultiCauseError : public std::runtime_error {
 public:
  MultiCauseError(std::vector<HelpOutcome> failing, const std::string& what)
      : std::runtime_error(what), failing_(std::move(failing)) {}
  const std::vector<HelpOutcome>& failing() const { return failing_; }

 private:
  std::vector<HelpOutcome> failing_;
};

// Sets the variable of the gate that failed to the nearest value passing it
// (numeric gates land on the threshold). desired must come after the realized
// outcome in gate order.
CounterfactualResult counterfactual(const CausalHelpModel& model, const HelpVariables& v, HelpOutcome desired);

// Applies a boundary intervention on one variable; exposed for tests.
HelpVariables intervene(const CausalHelpModel& model, const HelpVariables& v, HelpVariable variable);

std::string render_counterfactual(const CounterfactualResult& result);

Explanation explain_help(const Query& query, const ContextVector& context, std::span<const Event> events,
                         ReasonerSession& session);

}  // namespace hexar
