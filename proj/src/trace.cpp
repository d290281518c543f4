#include "hexar/trace.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

#include "json.hpp"

namespace hexar {

namespace {

using nlohmann::json;

constexpr std::pair<Source, std::string_view> kSourceNames[] = {
    {Source::planner, "planner"},
    {Source::navigation, "navigation"},
    {Source::text_to_speech, "text_to_speech"},
    {Source::ask_human_for_help, "ask_human_for_help"},
    {Source::pizza_recommender, "pizza_recommender"},
    {Source::system, "system"},
};

constexpr std::pair<EventKind, std::string_view> kKindNames[] = {
    {EventKind::log, "log"},
    {EventKind::plan, "plan"},
    {EventKind::skill_status, "skill_status"},
    {EventKind::param, "param"},
    {EventKind::detection, "detection"},
    {EventKind::dialogue, "dialogue"},
};

constexpr std::pair<SkillStatus, std::string_view> kStatusNames[] = {
    {SkillStatus::waiting, "waiting"},
    {SkillStatus::running, "running"},
    {SkillStatus::succeeded, "succeeded"},
    {SkillStatus::failed, "failed"},
};

template <typename Enum, std::size_t N>
std::string_view name_of(const std::pair<Enum, std::string_view> (&table)[N], Enum value) {
  for (const auto& [v, name] : table) {
    if (v == value) return name;
  }
  return "?";
}

template <typename Enum, std::size_t N>
std::optional<Enum> value_of(const std::pair<Enum, std::string_view> (&table)[N], std::string_view text) {
  for (const auto& [v, name] : table) {
    if (name == text) return v;
  }
  return std::nullopt;
}

std::string json_string(const std::string& text) { return json(text).dump(); }

std::string format_real(double value) {
  if (!std::isfinite(value)) throw std::invalid_argument("trace values must be finite");
  std::string text = fmt::format("{:.6f}", value);
  if (text == "-0.000000") text = "0.000000";
  return text;
}

void write_scalar(std::string& out, const Scalar& value) {
  std::visit(
      [&out](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, bool>) {
          out += v ? "true" : "false";
        } else if constexpr (std::is_same_v<T, std::int64_t>) {
          out += std::to_string(v);
        } else if constexpr (std::is_same_v<T, double>) {
          out += format_real(v);
        } else {
          out += json_string(v);
        }
      },
      value);
}

void write_event(std::string& out, const Event& event) {
  out += "{\"ts\": ";
  out += format_real(event.ts);
  out += ", \"source\": ";
  out += json_string(std::string(to_string(event.source)));
  out += ", \"kind\": ";
  out += json_string(std::string(to_string(event.kind)));
  out += ", \"payload\": {";
  bool first = true;
  for (const auto& [key, value] : event.payload) {
    if (!first) out += ", ";
    first = false;
    out += json_string(key);
    out += ": ";
    write_scalar(out, value);
  }
  out += "}}\n";
}

Scalar scalar_from_json(const json& value) {
  if (value.is_boolean()) return value.get<bool>();
  if (value.is_number_integer()) return value.get<std::int64_t>();
  if (value.is_number_float()) return value.get<double>();
  if (value.is_string()) return value.get<std::string>();
  throw std::invalid_argument("payload values must be scalars or strings");
}

const json& require(const json& object, const char* key) {
  auto it = object.find(key);
  if (it == object.end()) throw std::invalid_argument(fmt::format("missing field \"{}\"", key));
  return *it;
}

}  // namespace

std::string_view to_string(Source source) { return name_of(kSourceNames, source); }
std::string_view to_string(EventKind kind) { return name_of(kKindNames, kind); }
std::string_view to_string(SkillStatus status) { return name_of(kStatusNames, status); }

std::string_view to_string(Category category) {
  switch (category) {
    case Category::agent_error: return "Agent Error";
    case Category::inability: return "Inability";
    case Category::unforeseen_circumstances: return "Unforeseen Circumstances";
    case Category::sub_optimal_behaviour: return "Sub-Optimal Behaviour";
    case Category::uncertainty: return "Uncertainty";
    case Category::social_norm_violation: return "Social Norm Violation";
    case Category::normal_successful: return "Normal/Successful";
  }
  return "?";
}

std::optional<Source> parse_source(std::string_view text) { return value_of(kSourceNames, text); }
std::optional<EventKind> parse_event_kind(std::string_view text) { return value_of(kKindNames, text); }
std::optional<SkillStatus> parse_skill_status(std::string_view text) { return value_of(kStatusNames, text); }

const std::vector<Source>& explainable_modules() {
  static const std::vector<Source> kModules = {Source::planner, Source::navigation, Source::text_to_speech,
                                               Source::ask_human_for_help, Source::pizza_recommender};
  return kModules;
}

std::string Explanation::producer_label() const {
  std::string label;
  for (const auto& id : produced_by) {
    if (!label.empty()) label += "+";
    label += id;
  }
  return label;
}

// --- payload access ---------------------------------------------------------

const Scalar* find_field(const Payload& payload, const std::string& key) {
  auto it = payload.find(key);
  return it == payload.end() ? nullptr : &it->second;
}

std::optional<std::string> find_string(const Payload& payload, const std::string& key) {
  const Scalar* value = find_field(payload, key);
  if (value == nullptr) return std::nullopt;
  if (const auto* text = std::get_if<std::string>(value)) return *text;
  throw PayloadError(fmt::format("field \"{}\" is not a string", key));
}

std::string get_string(const Payload& payload, const std::string& key) {
  auto value = find_string(payload, key);
  if (!value) throw PayloadError(fmt::format("missing field \"{}\"", key));
  return *value;
}

std::optional<double> find_number(const Payload& payload, const std::string& key) {
  const Scalar* value = find_field(payload, key);
  if (value == nullptr) return std::nullopt;
  if (const auto* real = std::get_if<double>(value)) return *real;
  if (const auto* integer = std::get_if<std::int64_t>(value)) return static_cast<double>(*integer);
  throw PayloadError(fmt::format("field \"{}\" is not numeric", key));
}

double get_number(const Payload& payload, const std::string& key) {
  auto value = find_number(payload, key);
  if (!value) throw PayloadError(fmt::format("missing field \"{}\"", key));
  return *value;
}

std::int64_t get_int(const Payload& payload, const std::string& key) {
  const Scalar* value = find_field(payload, key);
  if (value == nullptr) throw PayloadError(fmt::format("missing field \"{}\"", key));
  if (const auto* integer = std::get_if<std::int64_t>(value)) return *integer;
  throw PayloadError(fmt::format("field \"{}\" is not an integer", key));
}

std::optional<bool> find_bool(const Payload& payload, const std::string& key) {
  const Scalar* value = find_field(payload, key);
  if (value == nullptr) return std::nullopt;
  if (const auto* flag = std::get_if<bool>(value)) return *flag;
  throw PayloadError(fmt::format("field \"{}\" is not a boolean", key));
}

bool get_bool(const Payload& payload, const std::string& key) {
  auto value = find_bool(payload, key);
  if (!value) throw PayloadError(fmt::format("missing field \"{}\"", key));
  return *value;
}

std::string format_scalar(const Scalar& value) {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, bool>) {
          return v ? "true" : "false";
        } else if constexpr (std::is_same_v<T, std::string>) {
          return v;
        } else {
          return fmt::format("{}", v);
        }
      },
      value);
}

std::string format_payload(const Payload& payload) {
  std::string out;
  for (const auto& [key, value] : payload) {
    if (!out.empty()) out += ", ";
    out += key;
    out += "=";
    out += format_scalar(value);
  }
  return out;
}

Payload encode_plan(const TaskPlan& plan) {
  Payload payload;
  payload["instruction"] = plan.instruction;
  payload["valid"] = plan.valid;
  payload["step_count"] = static_cast<std::int64_t>(plan.steps.size());
  for (std::size_t i = 0; i < plan.steps.size(); ++i) {
    const auto prefix = fmt::format("step.{}.", i);
    payload[prefix + "skill"] = plan.steps[i].skill;
    for (const auto& [name, value] : plan.steps[i].params) payload[prefix + "param." + name] = value;
  }
  payload["grounding_error_count"] = static_cast<std::int64_t>(plan.grounding_errors.size());
  for (std::size_t i = 0; i < plan.grounding_errors.size(); ++i) {
    payload[fmt::format("grounding_error.{}", i)] = plan.grounding_errors[i];
  }
  return payload;
}

TaskPlan decode_plan(const Payload& payload) {
  TaskPlan plan;
  plan.instruction = get_string(payload, "instruction");
  plan.valid = get_bool(payload, "valid");
  const auto steps = get_int(payload, "step_count");
  if (steps < 0) throw PayloadError("negative step_count");
  for (std::int64_t i = 0; i < steps; ++i) {
    const auto prefix = fmt::format("step.{}.", i);
    PlanStep step;
    step.skill = get_string(payload, prefix + "skill");
    const std::string param_prefix = prefix + "param.";
    for (auto it = payload.lower_bound(param_prefix); it != payload.end() && it->first.starts_with(param_prefix);
         ++it) {
      step.params[it->first.substr(param_prefix.size())] = format_scalar(it->second);
    }
    plan.steps.push_back(std::move(step));
  }
  const auto errors = get_int(payload, "grounding_error_count");
  for (std::int64_t i = 0; i < errors; ++i) {
    plan.grounding_errors.push_back(get_string(payload, fmt::format("grounding_error.{}", i)));
  }
  return plan;
}

// --- trace file I/O ---------------------------------------------------------

TraceParseError::TraceParseError(std::size_t line, std::size_t event_index, const std::string& what)
    : std::runtime_error(what), line_(line), event_index_(event_index) {}

std::string serialize_trace(const Trace& trace) {
  std::string out = fmt::format("{{\"scenario_id\": {}, \"task_variant\": {}, \"seed\": {}}}\n", trace.scenario_id,
                                trace.task_variant, trace.seed);
  for (const auto& event : trace.events) write_event(out, event);
  return out;
}

void write_trace(const Trace& trace, std::ostream& out) {
  out << serialize_trace(trace);
  if (!out) throw std::runtime_error("failed to write trace");
}

void write_trace(const Trace& trace, const std::filesystem::path& path) {
  const std::string text = serialize_trace(trace);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error(fmt::format("cannot open {} for writing", path.string()));
  out << text;
  out.flush();
  if (!out) throw std::runtime_error(fmt::format("failed to write {}", path.string()));
}

Trace parse_trace(std::istream& in) {
  Trace trace;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::size_t event_index = have_header ? trace.events.size() + 1 : 0;
    json record;
    try {
      record = json::parse(line);
    } catch (const json::parse_error& e) {
      throw TraceParseError(line_no, event_index, fmt::format("line {}: malformed record: {}", line_no, e.what()));
    }
    try {
      if (!record.is_object()) throw std::invalid_argument("record is not an object");
      if (!have_header) {
        trace.scenario_id = require(record, "scenario_id").get<int>();
        trace.task_variant = require(record, "task_variant").get<int>();
        trace.seed = require(record, "seed").get<std::uint64_t>();
        have_header = true;
        continue;
      }
      Event event;
      const json& ts = require(record, "ts");
      if (!ts.is_number()) throw std::invalid_argument("ts is not a number");
      event.ts = ts.get<double>();
      const auto source = parse_source(require(record, "source").get<std::string>());
      if (!source) throw std::invalid_argument("unknown source");
      event.source = *source;
      const auto kind = parse_event_kind(require(record, "kind").get<std::string>());
      if (!kind) throw std::invalid_argument("unknown kind");
      event.kind = *kind;
      const json& payload = require(record, "payload");
      if (!payload.is_object()) throw std::invalid_argument("payload is not an object");
      for (const auto& [key, value] : payload.items()) event.payload[key] = scalar_from_json(value);
      if (event.ts < 0.0) throw std::invalid_argument("negative timestamp");
      trace.events.push_back(std::move(event));
    } catch (const std::exception& e) {
      throw TraceParseError(line_no, event_index, fmt::format("line {}: {}", line_no, e.what()));
    }
    if (trace.events.size() >= 2) {
      const double prev = trace.events[trace.events.size() - 2].ts;
      const double cur = trace.events.back().ts;
      if (cur < prev) {
        throw TraceOrderError(line_no, event_index,
                              fmt::format("event {} (line {}): timestamp {:.6f} precedes previous {:.6f}",
                                          event_index, line_no, cur, prev));
      }
    }
  }
  if (!have_header) throw TraceParseError(0, 0, "trace has no header line");
  return trace;
}

Trace read_trace(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(fmt::format("cannot open {}", path.string()));
  return parse_trace(in);
}

std::vector<std::string> validate_trace(const Trace& trace) {
  std::vector<std::string> problems;
  if (trace.scenario_id < 1 || trace.scenario_id > 20) problems.push_back("scenario_id outside 1..20");
  if (trace.task_variant < 1 || trace.task_variant > 3) problems.push_back("task_variant outside 1..3");

  std::optional<std::size_t> plan_at;
  std::size_t plan_count = 0;
  std::optional<std::size_t> first_status;
  for (std::size_t i = 0; i < trace.events.size(); ++i) {
    const Event& e = trace.events[i];
    if (!(e.ts >= 0.0)) problems.push_back(fmt::format("event {} has a negative timestamp", i + 1));
    if (i > 0 && e.ts < trace.events[i - 1].ts) problems.push_back(fmt::format("event {} is out of order", i + 1));
    if (e.kind == EventKind::plan) {
      ++plan_count;
      if (!plan_at) plan_at = i;
    }
    if (e.kind == EventKind::skill_status) {
      if (!first_status) first_status = i;
      const auto skill = find_string(e.payload, "skill");
      const auto status = find_string(e.payload, "status");
      if (!skill || !status || !parse_skill_status(*status)) {
        problems.push_back(fmt::format("event {} has a malformed skill_status payload", i + 1));
      }
    }
  }
  if (plan_count != 1) problems.push_back(fmt::format("expected exactly one plan event, found {}", plan_count));
  if (first_status && (!plan_at || *first_status < *plan_at)) {
    problems.push_back("a skill_status event precedes the plan event");
  }
  if (!plan_at) return problems;

  TaskPlan plan;
  try {
    plan = decode_plan(trace.events[*plan_at].payload);
  } catch (const std::exception& e) {
    problems.push_back(fmt::format("plan payload: {}", e.what()));
    return problems;
  }
  if (plan.valid != plan.grounding_errors.empty()) {
    problems.push_back("plan validity disagrees with its grounding errors");
  }
  // Status per step; the step index disambiguates repeated skills.
  std::vector<bool> reported(plan.steps.size(), false);
  std::vector<bool> failed(plan.steps.size(), false);
  for (const auto& e : trace.events) {
    if (e.kind != EventKind::skill_status) continue;
    const auto step = find_number(e.payload, "step");
    if (!step || *step < 0 || static_cast<std::size_t>(*step) >= plan.steps.size()) continue;
    const auto index = static_cast<std::size_t>(*step);
    if (find_string(e.payload, "skill") != plan.steps[index].skill) {
      problems.push_back(fmt::format("skill_status for step {} names the wrong skill", index));
    }
    reported[index] = true;
    if (find_string(e.payload, "status") == "failed") failed[index] = true;
  }
  bool earlier_failure = false;
  for (std::size_t i = 0; i < plan.steps.size(); ++i) {
    if (!reported[i] && !earlier_failure) {
      problems.push_back(fmt::format("plan step {} ({}) has no skill_status event", i, plan.steps[i].skill));
    }
    earlier_failure = earlier_failure || failed[i];
  }
  return problems;
}

}  // namespace hexar
