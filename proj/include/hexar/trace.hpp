#pragma once

// Event and trace data model shared by every module, plus the line-delimited
// trace file format that stands in for recorded middleware bags.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace hexar {

// Robot modules that emit events. The first five are explainable modules.
enum class Source { planner, navigation, text_to_speech, ask_human_for_help, pizza_recommender, system };

enum class EventKind { log, plan, skill_status, param, detection, dialogue };

enum class SkillStatus { waiting, running, succeeded, failed };

enum class Category {
  agent_error,
  inability,
  unforeseen_circumstances,
  sub_optimal_behaviour,
  uncertainty,
  social_norm_violation,
  normal_successful,
};

std::string_view to_string(Source source);
std::string_view to_string(EventKind kind);
std::string_view to_string(SkillStatus status);
std::string_view to_string(Category category);

std::optional<Source> parse_source(std::string_view text);
std::optional<EventKind> parse_event_kind(std::string_view text);
std::optional<SkillStatus> parse_skill_status(std::string_view text);

// The five modules that can be explained, in registry order.
const std::vector<Source>& explainable_modules();

using Scalar = std::variant<bool, std::int64_t, double, std::string>;
// Flat key/value map; nested data uses dotted keys ("step.0.skill").
using Payload = std::map<std::string, Scalar>;

struct Event {
  double ts = 0.0;
  Source source = Source::system;
  EventKind kind = EventKind::log;
  Payload payload;

  bool operator==(const Event&) const = default;
};

struct Trace {
  int scenario_id = 1;
  int task_variant = 1;
  std::uint64_t seed = 0;
  std::vector<Event> events;

  bool operator==(const Trace&) const = default;
};

struct PlanStep {
  std::string skill;
  std::map<std::string, std::string> params;

  bool operator==(const PlanStep&) const = default;
};

struct TaskPlan {
  std::string instruction;
  std::vector<PlanStep> steps;
  bool valid = true;
  std::vector<std::string> grounding_errors;

  bool operator==(const TaskPlan&) const = default;
};

struct Query {
  std::string text;
  double asked_at = 0.0;
};

struct SkillState {
  std::size_t step = 0;
  std::string skill;
  SkillStatus status = SkillStatus::waiting;
  std::string error_code;
};

struct TimeWindow {
  double t_start = 0.0;
  double t_end = 0.0;
};

struct ContextVector {
  std::string task;
  std::vector<SkillState> skills;
  bool plan_valid = true;
  TimeWindow window;
};

struct Explanation {
  std::string text;
  // One id for a single explainer; several when outputs were merged.
  std::vector<std::string> produced_by;
  int reasoner_calls = 0;
  double wall_time = 0.0;
  // Set when a reasoner failed and a template was returned instead.
  bool fallback = false;

  std::string producer_label() const;
};

struct GroundTruth {
  int scenario_id = 0;
  std::string root_cause;
  // Lower-case phrase an explanation must contain to identify the root cause.
  std::string key_phrase;
  Source relevant_module = Source::planner;
  Category category = Category::agent_error;
};

// --- payload access -------------------------------------------------------

class PayloadError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

const Scalar* find_field(const Payload& payload, const std::string& key);
std::string get_string(const Payload& payload, const std::string& key);
std::optional<std::string> find_string(const Payload& payload, const std::string& key);
// Accepts integer or real fields.
double get_number(const Payload& payload, const std::string& key);
std::optional<double> find_number(const Payload& payload, const std::string& key);
std::int64_t get_int(const Payload& payload, const std::string& key);
bool get_bool(const Payload& payload, const std::string& key);
std::optional<bool> find_bool(const Payload& payload, const std::string& key);

// Compact human-readable rendering used inside prompts ("max_vel_x=0.3").
std::string format_scalar(const Scalar& value);
std::string format_payload(const Payload& payload);

Payload encode_plan(const TaskPlan& plan);
TaskPlan decode_plan(const Payload& payload);

// --- trace file I/O ---------------------------------------------------------

class TraceParseError : public std::runtime_error {
 public:
  // line is the 1-based file line; event_index the 1-based event record
  // number (0 for the header).
  TraceParseError(std::size_t line, std::size_t event_index, const std::string& what);
  std::size_t line() const { return line_; }
  std::size_t event_index() const { return event_index_; }

 private:
  std::size_t line_;
  std::size_t event_index_;
};

class TraceOrderError : public TraceParseError {
 public:
  using TraceParseError::TraceParseError;
};

std::string serialize_trace(const Trace& trace);
void write_trace(const Trace& trace, std::ostream& out);
void write_trace(const Trace& trace, const std::filesystem::path& path);

Trace parse_trace(std::istream& in);
Trace read_trace(const std::filesystem::path& path);

// Returns every violated trace invariant; empty when the trace is well formed.
std::vector<std::string> validate_trace(const Trace& trace);

}  // namespace hexar
