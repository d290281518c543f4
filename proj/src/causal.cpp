#include "hexar/causal.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>

#include <fmt/format.h>

#include "hexar/prompt.hpp"
#include "hexar/resources.hpp"

namespace hexar {

namespace {

constexpr std::array<std::pair<HelpOutcome, std::string_view>, 7> kOutcomeNames{{
    {HelpOutcome::success, "success"},
    {HelpOutcome::no_human_found, "no_human_found"},
    {HelpOutcome::human_too_far, "human_too_far"},
    {HelpOutcome::unstable_detection, "unstable_detection"},
    {HelpOutcome::approach_failed, "approach_failed"},
    {HelpOutcome::help_refused, "help_refused"},
    {HelpOutcome::no_confirmation, "no_confirmation"},
}};

constexpr std::array<std::pair<HelpResponse, std::string_view>, 3> kResponseNames{{
    {HelpResponse::agree, "agree"},
    {HelpResponse::refuse, "refuse"},
    {HelpResponse::none, "none"},
}};

constexpr std::array<std::pair<HelpVariable, std::string_view>, 6> kVariableNames{{
    {HelpVariable::n_humans, "n_humans"},
    {HelpVariable::min_distance, "min_distance"},
    {HelpVariable::detection_duration, "detection_duration"},
    {HelpVariable::path_feasible, "path_feasible"},
    {HelpVariable::response, "response"},
    {HelpVariable::confirmation, "confirmation"},
}};

template <typename E, std::size_t N>
std::string_view lookup(const std::array<std::pair<E, std::string_view>, N>& table, E value) {
  for (const auto& [v, name] : table) {
    if (v == value) return name;
  }
  return "?";
}

template <typename E, std::size_t N>
std::optional<E> reverse(const std::array<std::pair<E, std::string_view>, N>& table, std::string_view text) {
  for (const auto& [v, name] : table) {
    if (name == text) return v;
  }
  return std::nullopt;
}

bool finite_non_negative(double x) { return std::isfinite(x) && x >= 0.0; }

struct Sighting {
  std::int64_t frame;
  double ts;
  double x;
  double y;
};

// Longest run of consecutive frames for one person; ties keep the earlier run.
std::pair<std::size_t, std::size_t> longest_run(const std::vector<Sighting>& s) {
  std::size_t best_start = 0, best_len = 0, start = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i > 0 && s[i].frame != s[i - 1].frame + 1) start = i;
    const std::size_t len = i - start + 1;
    if (len > best_len) {
      best_len = len;
      best_start = start;
    }
  }
  return {best_start, best_len};
}

double sample_variance(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0.0;
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return ss / static_cast<double>(xs.size() - 1);
}

std::string render_value(const HelpVariables& v, HelpVariable variable) {
  switch (variable) {
    case HelpVariable::n_humans: return fmt::format("{}", v.n_humans);
    case HelpVariable::min_distance: return v.min_distance ? fmt::format("{:.2f}", *v.min_distance) : "absent";
    case HelpVariable::detection_duration:
      return v.detection_duration ? fmt::format("{:.2f}", *v.detection_duration) : "absent";
    case HelpVariable::path_feasible: return v.path_feasible ? (*v.path_feasible ? "true" : "false") : "absent";
    case HelpVariable::response: return v.response ? std::string(to_string(*v.response)) : "absent";
    case HelpVariable::confirmation: return v.confirmation ? (*v.confirmation ? "true" : "false") : "absent";
  }
  return "?";
}

std::string join_outcomes(const std::vector<HelpOutcome>& outcomes) {
  std::string out;
  for (auto o : outcomes) {
    if (!out.empty()) out += ", ";
    out += to_string(o);
  }
  return out;
}

}  // namespace

std::string_view to_string(HelpOutcome outcome) { return lookup(kOutcomeNames, outcome); }
std::string_view to_string(HelpResponse response) { return lookup(kResponseNames, response); }
std::string_view to_string(HelpVariable variable) { return lookup(kVariableNames, variable); }
std::optional<HelpOutcome> parse_help_outcome(std::string_view text) { return reverse(kOutcomeNames, text); }
std::optional<HelpResponse> parse_help_response(std::string_view text) { return reverse(kResponseNames, text); }

CausalHelpModel::CausalHelpModel(HelpThresholds thresholds) : thresholds_(thresholds) {
  if (!(thresholds.t_stable > 0.0 && thresholds.d_max > 0.0 && thresholds.var_max > 0.0)) {
    throw std::invalid_argument("help thresholds must be strictly positive");
  }
  gates_ = {
      {HelpVariable::n_humans, HelpOutcome::no_human_found},
      {HelpVariable::min_distance, HelpOutcome::human_too_far},
      {HelpVariable::detection_duration, HelpOutcome::unstable_detection},
      {HelpVariable::path_feasible, HelpOutcome::approach_failed},
      {HelpVariable::response, HelpOutcome::help_refused},
      {HelpVariable::confirmation, HelpOutcome::no_confirmation},
  };
}

bool CausalHelpModel::passes(HelpVariable variable, const HelpVariables& v) const {
  switch (variable) {
    case HelpVariable::n_humans: return v.n_humans >= 1;
    case HelpVariable::min_distance: return !v.min_distance || *v.min_distance <= thresholds_.d_max;
    case HelpVariable::detection_duration:
      return !v.detection_duration || *v.detection_duration >= thresholds_.t_stable;
    case HelpVariable::path_feasible: return !v.path_feasible || *v.path_feasible;
    case HelpVariable::response: return !v.response || *v.response == HelpResponse::agree;
    case HelpVariable::confirmation: return !v.confirmation || *v.confirmation;
  }
  return false;
}

bool has_help_events(std::span<const Event> events) {
  return std::any_of(events.begin(), events.end(), [](const Event& e) {
    return e.source == Source::ask_human_for_help &&
           (e.kind == EventKind::detection || e.kind == EventKind::dialogue || e.kind == EventKind::param ||
            e.kind == EventKind::log);
  });
}

HelpThresholds extract_thresholds(std::span<const Event> events) {
  HelpThresholds t;
  for (const auto& e : events) {
    if (e.source != Source::ask_human_for_help || e.kind != EventKind::param) continue;
    t.t_stable = find_number(e.payload, "t_stable").value_or(t.t_stable);
    t.d_max = find_number(e.payload, "d_max").value_or(t.d_max);
    t.var_max = find_number(e.payload, "var_max").value_or(t.var_max);
  }
  return t;
}

HelpVariables extract_variables(std::span<const Event> events) {
  HelpVariables v;
  std::map<std::int64_t, std::vector<Sighting>> by_person;
  std::optional<double> nearest;
  try {
    for (const auto& e : events) {
      if (e.source != Source::ask_human_for_help) continue;
      if (e.kind == EventKind::detection) {
        const auto frame = get_int(e.payload, "frame");
        const auto count = get_int(e.payload, "count");
        if (count < 0) throw HelpEventError("negative detection count");
        for (std::int64_t k = 0; k < count; ++k) {
          const auto prefix = fmt::format("p{}.", k);
          const auto id = get_int(e.payload, prefix + "id");
          const double x = get_number(e.payload, prefix + "x");
          const double y = get_number(e.payload, prefix + "y");
          const double distance = get_number(e.payload, prefix + "distance");
          if (!std::isfinite(x) || !std::isfinite(y) || !finite_non_negative(distance)) {
            throw HelpEventError(fmt::format("bad detection values in frame {}", frame));
          }
          auto& track = by_person[id];
          if (!track.empty() && track.back().frame >= frame) {
            throw HelpEventError(fmt::format("detection frames for person {} are not increasing", id));
          }
          track.push_back({frame, e.ts, x, y});
          nearest = nearest ? std::min(*nearest, distance) : distance;
        }
      } else if (e.kind == EventKind::log) {
        if (find_string(e.payload, "event") != "approach") continue;
        v.path_feasible = get_bool(e.payload, "path_feasible");
        const auto replans = find_number(e.payload, "replans").value_or(0.0);
        if (replans < 0) throw HelpEventError("negative replan count");
        v.approach_replans = static_cast<int>(replans);
      } else if (e.kind == EventKind::dialogue) {
        if (auto response = find_string(e.payload, "response")) {
          const auto parsed = parse_help_response(*response);
          if (!parsed) throw HelpEventError(fmt::format("unknown help response '{}'", *response));
          v.response = parsed;
        }
        if (auto confirmation = find_bool(e.payload, "confirmation")) v.confirmation = confirmation;
      }
    }
  } catch (const PayloadError& err) {
    throw HelpEventError(fmt::format("malformed help event: {}", err.what()));
  }

  v.n_humans = static_cast<int>(by_person.size());
  if (by_person.empty()) return v;
  v.min_distance = nearest;
  std::size_t best_len = 0;
  for (const auto& [id, track] : by_person) {
    const auto [start, len] = longest_run(track);
    if (len <= best_len) continue;
    best_len = len;
    v.detection_duration = track[start + len - 1].ts - track[start].ts;
    std::vector<double> xs, ys;
    for (std::size_t i = start; i < start + len; ++i) {
      xs.push_back(track[i].x);
      ys.push_back(track[i].y);
    }
    v.detection_variance = sample_variance(xs) + sample_variance(ys);
  }
  return v;
}

HelpOutcome evaluate_model(const CausalHelpModel& model, const HelpVariables& v) {
  for (const auto& gate : model.gates()) {
    if (!model.passes(gate.variable, v)) return gate.failure;
  }
  return HelpOutcome::success;
}

std::size_t outcome_rank(HelpOutcome outcome) {
  switch (outcome) {
    case HelpOutcome::no_human_found: return 0;
    case HelpOutcome::human_too_far: return 1;
    case HelpOutcome::unstable_detection: return 2;
    case HelpOutcome::approach_failed: return 3;
    case HelpOutcome::help_refused: return 4;
    case HelpOutcome::no_confirmation: return 5;
    case HelpOutcome::success: return 6;
  }
  return 6;
}

std::vector<HelpOutcome> failing_gates(const CausalHelpModel& model, const HelpVariables& v) {
  std::vector<HelpOutcome> out;
  for (const auto& gate : model.gates()) {
    if (!model.passes(gate.variable, v)) out.push_back(gate.failure);
  }
  return out;
}

HelpVariables intervene(const CausalHelpModel& model, const HelpVariables& v, HelpVariable variable) {
  HelpVariables out = v;
  if (model.passes(variable, v)) return out;
  const auto& t = model.thresholds();
  switch (variable) {
    case HelpVariable::n_humans: out.n_humans = 1; break;
    case HelpVariable::min_distance: out.min_distance = t.d_max; break;
    case HelpVariable::detection_duration: out.detection_duration = t.t_stable; break;
    case HelpVariable::path_feasible: out.path_feasible = true; break;
    case HelpVariable::response: out.response = HelpResponse::agree; break;
    case HelpVariable::confirmation: out.confirmation = true; break;
  }
  return out;
}

CounterfactualResult counterfactual(const CausalHelpModel& model, const HelpVariables& v, HelpOutcome desired) {
  const HelpOutcome realized = evaluate_model(model, v);
  if (realized == desired) {
    throw CounterfactualPreconditionError(fmt::format("outcome is already {}", to_string(desired)));
  }
  if (outcome_rank(desired) < outcome_rank(realized)) {
    throw CounterfactualPreconditionError(fmt::format("{} cannot be reached from {} by relaxing a gate",
                                                      to_string(desired), to_string(realized)));
  }
  const auto gate = std::find_if(model.gates().begin(), model.gates().end(),
                                 [&](const HelpGate& g) { return g.failure == realized; });
  CounterfactualResult result;
  result.realized = realized;
  result.desired = desired;
  result.variable = gate->variable;
  result.value = render_value(v, gate->variable);
  result.intervened = intervene(model, v, gate->variable);
  result.value_star = render_value(result.intervened, gate->variable);
  result.result = evaluate_model(model, result.intervened);
  if (result.result != desired) {
    auto failing = failing_gates(model, v);
    throw MultiCauseError(failing, fmt::format("{} needs more than one change; failing gates: {}", to_string(desired),
                                               join_outcomes(failing)));
  }
  return result;
}

std::string render_counterfactual(const CounterfactualResult& r) {
  const auto x = to_string(r.variable);
  return fmt::format("{} occurred because {} = {}. If {} = {}, {} would have occurred instead.", to_string(r.realized),
                     x, r.value, x, r.value_star, to_string(r.result));
}

Explanation explain_help(const Query& query, const ContextVector& context, std::span<const Event> events,
                         ReasonerSession& session) {
  Explanation out;
  if (!has_help_events(events)) {
    out.text = "I did not need to ask anyone for help during this task.";
    return out;
  }
  const CausalHelpModel model(extract_thresholds(events));
  const HelpVariables v = extract_variables(events);
  const HelpOutcome outcome = evaluate_model(model, v);

  if (outcome != HelpOutcome::success) {
    std::string statement;
    try {
      statement = render_counterfactual(counterfactual(model, v, HelpOutcome::success));
    } catch (const MultiCauseError& e) {
      out.text = fmt::format("Asking for help ended with {}, and several conditions would have had to change: {}.",
                             to_string(outcome), join_outcomes(e.failing()));
      return out;
    }
    ReasonerRequest request;
    request.system_prompt = std::string(resource("prompts/help_system.txt"));
    request.user_prompt = PromptBuilder()
                              .section("TASK", context.task)
                              .section("COUNTERFACTUAL", statement)
                              .section("QUERY", query.text)
                              .str();
    try {
      out.text = trim(session.complete(request).text);
      if (out.text.empty()) throw ReasonerError("empty answer");
    } catch (const ReasonerError&) {
      out.text = statement;
      out.fallback = true;
    }
    return out;
  }

  std::vector<std::string> sentences;
  const auto& t = model.thresholds();
  if (v.detection_variance && *v.detection_variance > t.var_max) {
    sentences.push_back(fmt::format(
        "I approached the person poorly because of high variance in the person's detection: their estimated "
        "position varied by {:.2f} m^2, above my tolerance of {:.2f} m^2, so I kept correcting my approach.",
        *v.detection_variance, t.var_max));
  }
  if (v.approach_replans > 0) {
    sentences.push_back(fmt::format(
        "I approached the person poorly because of suboptimal navigation: I had to recompute my path to them {} "
        "times on the way.",
        v.approach_replans));
  }
  if (sentences.empty()) {
    sentences.push_back(
        "I asked a person for help, they agreed and confirmed that they had helped me, so the request succeeded.");
  }
  for (const auto& s : sentences) {
    if (!out.text.empty()) out.text += " ";
    out.text += s;
  }
  return out;
}

}  // namespace hexar
