#include "hexar/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include <fmt/format.h>

#include "hexar/csv.hpp"
#include "hexar/decision_tree.hpp"
#include "hexar/explainers.hpp"
#include "hexar/prompt.hpp"

namespace hexar {

namespace {

using C = Category;
using S = Source;

const std::array<std::string, 3> kNavTasks = {
    "Bring me a coffee from the kitchen",
    "Go to the bedroom and tell Anna that dinner is ready",
    "Fetch my glasses from the study",
};

const std::array<std::string, 3> kHelpTasks = {
    "Get someone to help you fetch the remote from the living room",
    "Find someone in the kitchen to put an apple on your tray",
    "Ask a person in the study to close the window",
};

ScenarioSpec make(int id, C category, S module, std::string description, std::array<std::string, 3> tasks,
                  std::array<std::string, 3> queries, std::string root_cause, std::string key_phrase,
                  std::vector<std::string> extra_facts = {}) {
  ScenarioSpec spec;
  spec.scenario_id = id;
  spec.category = category;
  spec.relevant_module = module;
  spec.description = std::move(description);
  spec.task_instructions = std::move(tasks);
  spec.queries = std::move(queries);
  spec.ground_truth = {id, std::move(root_cause), std::move(key_phrase), module, category};
  spec.extra_facts = std::move(extra_facts);
  return spec;
}

std::vector<ScenarioSpec> build_scenarios() {
  std::vector<ScenarioSpec> s;
  s.push_back(make(1, C::agent_error, S::planner, "The robot's planner produces a plan with an invalid skill",
                   {"Bring me a cup from the kitchen", "Tell Anna in the study that dinner is ready",
                    "Check whether the bedroom window is closed"},
                   {"What happened?", "Why didn't you do what I asked?", "Why couldn't you execute your plan?"},
                   "the plan uses a skill the robot does not have", "invalid skill"));
  s.push_back(make(2, C::agent_error, S::planner,
                   "The robot's planner produces a plan with invalid parameter names and/or values",
                   {"Fetch my keys from the garage", "Say hello to everyone in the kitchen", "Go to the bedroom"},
                   {"What happened?", "Why didn't you do what I asked?", "Was something wrong with your plan?"},
                   "a plan step has an invalid parameter name or value", "invalid parameter"));
  s.push_back(make(3, C::agent_error, S::planner,
                   "The robot's planner produces a plan which does not fulfil the user's request",
                   {"Take the book from the study to Anna in the living room",
                    "Bring a glass of water from the kitchen to the bedroom",
                    "Carry the letter from the hallway to the bathroom"},
                   {"What happened?", "Why didn't you finish the task?", "Why did you skip part of my request?"},
                   "the plan leaves out the delivery destination", "did not fulfil your request"));
  s.push_back(make(4, C::inability, S::planner,
                   "The robot is instructed to perform a task which it is unable to complete",
                   {"Water the plants in the living room", "Cook pasta in the kitchen", "Open the bedroom window"},
                   {"What happened?", "Why didn't you do what I asked?", "Why can't you do that?"},
                   "no skill of the robot can perform the requested action", "none of my skills"));
  s.push_back(make(5, C::unforeseen_circumstances, S::navigation,
                   "Static obstacles prevent the robot from reaching a desired location", kNavTasks,
                   {"What happened?", "Why didn't you get there?", "What blocked your way?"},
                   "a static obstacle blocks every path to the goal", "blocked by an obstacle"));
  s.push_back(make(6, C::inability, S::navigation,
                   "The robot's joystick controller is enabled, overriding autonomous navigation", kNavTasks,
                   {"What happened?", "Why didn't you get there?", "Why aren't you moving on your own?"},
                   "the joystick controller is enabled and overrides autonomous navigation", "joystick"));
  s.push_back(make(7, C::inability, S::navigation,
                   "The robot is plugged into its charger, overriding autonomous navigation", kNavTasks,
                   {"What happened?", "Why didn't you bring it?", "Why can't you drive?"},
                   "the robot is plugged into its charger, which disables autonomous navigation", "charging"));
  s.push_back(make(8, C::sub_optimal_behaviour, S::navigation,
                   "The robot is badly localised in its map, negatively impacting navigation", kNavTasks,
                   {"What happened on the way?", "Why did it take you so long to get there?",
                    "Why did you move so erratically?"},
                   "the robot is badly localised in its map", "badly localised"));
  s.push_back(make(9, C::sub_optimal_behaviour, S::navigation,
                   "Moving obstacles force the robot to replan its path during navigation execution", kNavTasks,
                   {"What happened on the way?", "Why did it take you so long to get there?",
                    "Why did you keep changing your path?"},
                   "moving obstacles force the robot to replan", "moving obstacles"));
  s.push_back(make(10, C::normal_successful, S::navigation,
                   "No errors, but the user still questions the robot's movement properties (e.g. speed)", kNavTasks,
                   {"Is something wrong with how you move?", "Why did it take you so long to get there?",
                    "Why are you so slow?"},
                   "nothing failed; the robot drives at its configured speed limit", "speed limit"));
  s.push_back(make(11, C::unforeseen_circumstances, S::ask_human_for_help,
                   "The robot does not detect anybody that can assist it in completing its task", kHelpTasks,
                   {"What happened?", "Why didn't you get help?", "Why didn't you ask anyone?"},
                   "no person is detected", "no person was detected"));
  s.push_back(make(12, C::inability, S::ask_human_for_help,
                   "The robot detects someone, but they are too far away to ask for help", kHelpTasks,
                   {"What happened?", "Why didn't you get help?", "Why didn't you ask that person?"},
                   "the only person detected is beyond the help distance", "too far"));
  s.push_back(make(13, C::uncertainty, S::ask_human_for_help,
                   "The robot detects someone, but not long enough for a stable detection", kHelpTasks,
                   {"What happened?", "Why didn't you get help?", "Why did you ignore the person you saw?"},
                   "the person is detected too briefly for a stable detection", "stable detection"));
  s.push_back(make(14, C::unforeseen_circumstances, S::ask_human_for_help,
                   "The robot detects someone, but is unable to approach them for help due to obstacles", kHelpTasks,
                   {"What happened?", "Why didn't you get help?", "Why didn't you go to the person?"},
                   "obstacles block the approach to the person", "unable to approach", {"blocked by an obstacle"}));
  s.push_back(make(15, C::unforeseen_circumstances, S::ask_human_for_help,
                   "The robot asks someone to assist it, but they refuse", kHelpTasks,
                   {"What happened?", "Why didn't you get help?", "What did the person say?"},
                   "the person refuses to help", "refused"));
  s.push_back(make(16, C::unforeseen_circumstances, S::ask_human_for_help,
                   "Someone agrees to help the robot, but does not confirm completion of their assistance", kHelpTasks,
                   {"What happened?", "Why didn't you finish the task?", "Did the person help you?"},
                   "the person agrees but never confirms completion", "did not confirm"));
  s.push_back(make(17, C::social_norm_violation, S::ask_human_for_help,
                   "The robot approaches someone poorly due to suboptimal navigation", kHelpTasks,
                   {"What happened?", "Why did you approach the person like that?",
                    "Why did you take such a roundabout route to the person?"},
                   "the approach path to the person is replanned repeatedly", "suboptimal navigation"));
  s.push_back(make(18, C::social_norm_violation, S::ask_human_for_help,
                   "The robot approaches someone poorly due to high variance in the person's detection", kHelpTasks,
                   {"What happened?", "Why did you approach the person like that?",
                    "Why did you keep hesitating on your way to the person?"},
                   "the person's detected position varies strongly", "high variance"));
  s.push_back(make(19, C::agent_error, S::text_to_speech,
                   "The robot's text-to-speech skill times out before its utterance is complete",
                   {"Read me today's weather forecast", "Tell me the news headlines from this morning",
                    "Remind everyone in the living room about tomorrow's appointments"},
                   {"What happened?", "Why didn't you finish your message?", "Why did your speech stop?"},
                   "the utterance is longer than the text-to-speech timeout allows", "timed out"));
  s.push_back(make(20, C::normal_successful, S::pizza_recommender,
                   "The robot explains its choice of pizza with reference to available ingredients",
                   {"Suggest a pizza I can make with what I have", "Recommend a pizza for dinner tonight",
                    "Which pizza should I make with these ingredients?"},
                   {"What happened?", "Why did you pick that pizza?",
                    "Which ingredient mattered most for your suggestion?"},
                   "the recommendation follows from the available ingredients", "mainly because"));
  return s;
}

// --- generation ---------------------------------------------------------------

double r6(double x) { return std::round(x * 1e6) / 1e6; }

class Recorder {
 public:
  Recorder(Trace& trace, std::uint64_t seed, int scenario_id, int variant) : trace_(trace) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffU), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(scenario_id), static_cast<std::uint32_t>(variant)};
    rng_.seed(seq);
  }

  double unit() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }
  int between(int lo, int hi) { return lo + static_cast<int>(rng_() % static_cast<std::uint64_t>(hi - lo + 1)); }
  double symmetric(double scale) { return (2.0 * unit() - 1.0) * scale; }

  // Moves the clock forward by dt plus up to 10% jitter.
  void advance(double dt) { now_ += dt * (1.0 + 0.1 * unit()); }
  void advance_exact(double dt) { now_ += dt; }
  double now() const { return now_; }

  void emit(Source source, EventKind kind, Payload payload) {
    trace_.events.push_back({r6(now_), source, kind, std::move(payload)});
    now_ = std::max(now_, trace_.events.back().ts);
  }

  void log(Source source, std::string node, std::string level, std::string msg) {
    emit(source, EventKind::log, {{"level", std::move(level)}, {"node", std::move(node)}, {"msg", std::move(msg)}});
  }

  void status(const std::string& skill, std::size_t step, SkillStatus status, const std::string& error_code = {},
              Payload extra = {}) {
    Payload p = std::move(extra);
    p["skill"] = skill;
    p["status"] = std::string(to_string(status));
    p["step"] = static_cast<std::int64_t>(step);
    if (!error_code.empty()) p["error_code"] = error_code;
    emit(parse_source(skill).value_or(Source::planner), EventKind::skill_status, std::move(p));
  }

 private:
  Trace& trace_;
  std::mt19937_64 rng_;
  double now_ = 0.0;
};

enum class NavFault { none, static_obstacle, joystick, charger, bad_localisation, moving_obstacles };

struct Person {
  std::int64_t id = 1;
  double x = 1.4;
  double y = 0.6;
  std::vector<std::pair<int, int>> visible;  // inclusive frame ranges
  double oscillation = 0.0;
};

struct HelpSetup {
  std::vector<Person> persons;
  bool path_feasible = true;
  int replans = 0;
  HelpResponse response = HelpResponse::agree;
  bool confirmation = true;
};

struct Setup {
  TaskPlan plan;
  NavFault nav = NavFault::none;
  HelpSetup help;
  double tts_timeout = 10.0;
  std::string ingredients;
};

constexpr int kDetectionFrames = 30;  // 6 s at 5 Hz
constexpr double kFramePeriod = 0.2;
constexpr double kSpeechRate = 15.0;  // characters per second

PlanStep nav_step(std::string location) { return {"navigation", {{"location", std::move(location)}}}; }
PlanStep tts_step(std::string text) { return {"text_to_speech", {{"text", std::move(text)}}}; }
PlanStep help_step(std::string request) { return {"ask_human_for_help", {{"request", std::move(request)}}}; }

TaskPlan nav_plan(int variant) {
  TaskPlan plan;
  switch (variant) {
    case 1: plan.steps = {nav_step("kitchen"), nav_step("living room")}; break;
    case 2: plan.steps = {nav_step("bedroom"), tts_step("Anna, dinner is ready.")}; break;
    default: plan.steps = {nav_step("study"), nav_step("living room")}; break;
  }
  return plan;
}

TaskPlan help_plan(int variant) {
  TaskPlan plan;
  switch (variant) {
    case 1:
      plan.steps = {nav_step("living room"), help_step("Could you hand me the remote, please?")};
      break;
    case 2:
      plan.steps = {nav_step("kitchen"), help_step("Could you put an apple on my tray, please?")};
      break;
    default: plan.steps = {nav_step("study"), help_step("Could you close the window, please?")}; break;
  }
  return plan;
}

Setup setup_for(int id, int variant) {
  Setup s;
  const int v = variant - 1;
  switch (id) {
    case 1: {
      const std::array<std::vector<PlanStep>, 3> steps = {{
          {nav_step("kitchen"), {"grasp", {{"object", "cup"}}}, nav_step("living room")},
          {nav_step("study"), {"announce", {{"text", "Dinner is ready."}}}},
          {nav_step("bedroom"), {"inspect", {{"object", "window"}}}},
      }};
      s.plan.steps = steps[v];
      s.plan.grounding_errors = {fmt::format("unknown skill '{}' in step 2", s.plan.steps[1].skill)};
      break;
    }
    case 2: {
      if (variant == 1) {
        s.plan.steps = {nav_step("garage")};
        s.plan.grounding_errors = {"invalid parameter value 'garage' for 'location' in step 1 (navigation)"};
      } else if (variant == 2) {
        s.plan.steps = {nav_step("kitchen"), {"text_to_speech", {{"sentence", "Hello everyone!"}}}};
        s.plan.grounding_errors = {"invalid parameter name 'sentence' in step 2 (text_to_speech)"};
      } else {
        s.plan.steps = {{"navigation", {{"destination", "bedroom"}}}};
        s.plan.grounding_errors = {"invalid parameter name 'destination' in step 1 (navigation)"};
      }
      break;
    }
    case 3: {
      const std::array<std::vector<PlanStep>, 3> steps = {{
          {nav_step("study"), tts_step("Here is your book.")},
          {nav_step("kitchen"), tts_step("I have your glass of water.")},
          {nav_step("hallway"), tts_step("I have picked up the letter.")},
      }};
      s.plan.steps = steps[v];
      break;
    }
    case 4: {
      const std::array<std::string, 3> rooms = {"living room", "kitchen", "bedroom"};
      const std::array<std::string, 3> actions = {"water the plants", "cook pasta", "open the window"};
      s.plan.steps = {nav_step(rooms[v])};
      s.plan.grounding_errors = {"no available skill can " + actions[v]};
      break;
    }
    case 5: case 6: case 7: case 8: case 9: case 10: {
      s.plan = nav_plan(variant);
      const std::array<NavFault, 6> faults = {NavFault::static_obstacle, NavFault::joystick, NavFault::charger,
                                              NavFault::bad_localisation, NavFault::moving_obstacles, NavFault::none};
      s.nav = faults[id - 5];
      break;
    }
    case 11: case 12: case 13: case 14: case 15: case 16: case 17: case 18: {
      s.plan = help_plan(variant);
      Person near{1, 1.4, 0.6, {{0, kDetectionFrames - 1}}, 0.0};
      switch (id) {
        case 11: break;
        case 12: s.help.persons = {{1, 4.0, 0.9, {{0, kDetectionFrames - 1}}, 0.0}}; break;
        case 13: s.help.persons = {{1, 1.5, 1.0, {{3, 7}, {15, 18}}, 0.0}}; break;
        case 14: s.help.persons = {near}; s.help.path_feasible = false; break;
        case 15: s.help.persons = {near}; s.help.response = HelpResponse::refuse; break;
        case 16: s.help.persons = {near}; s.help.confirmation = false; break;
        case 17: s.help.persons = {near}; s.help.replans = 4; break;
        case 18: near.oscillation = 0.5; s.help.persons = {near}; break;
      }
      break;
    }
    case 19: {
      const std::array<std::string, 3> utterances = {
          "Today will start cloudy with light rain until noon, clearing in the afternoon with highs of "
          "eighteen degrees and a gentle breeze from the west in the evening.",
          "Here are this morning's headlines: the city council approved the new cycling lanes, the museum opens "
          "its summer exhibition, and the trains run on a reduced timetable.",
          "Reminder for tomorrow: the dentist appointment is at nine, the plumber comes at eleven, and the "
          "football practice has been moved to half past four in the afternoon.",
      };
      if (variant == 3) {
        s.plan.steps = {nav_step("living room"), tts_step(utterances[v])};
      } else {
        s.plan.steps = {tts_step(utterances[v])};
      }
      s.tts_timeout = 3.0;
      break;
    }
    case 20: {
      const std::array<std::string, 3> lists = {"tomato,mozzarella,basil", "tomato,mozzarella,pepperoni,onion",
                                                "mozzarella,pineapple,ham,mushroom"};
      s.plan.steps = {{"pizza_recommender", {}}};
      s.ingredients = lists[v];
      break;
    }
    default: throw std::out_of_range("scenario id");
  }
  s.plan.valid = s.plan.grounding_errors.empty();
  return s;
}

void filler(Recorder& rec, int count) {
  for (int i = 0; i < count; ++i) {
    rec.advance(0.05);
    switch (rec.between(0, 3)) {
      case 0: rec.log(Source::navigation, "controller_server", "debug", "Publishing velocity command"); break;
      case 1:
        rec.log(Source::navigation, "local_costmap", "debug",
                fmt::format("Costmap update took {} ms", rec.between(8, 30)));
        break;
      case 2: rec.log(Source::navigation, "controller_server", "debug", "Controller loop tick"); break;
      default: rec.log(Source::navigation, "amcl", "warn", "Transform data too old when converting frames"); break;
    }
  }
}

void drive_ticks(Recorder& rec, int ticks) {
  for (int i = 0; i < ticks; ++i) {
    rec.advance(0.1);
    rec.log(Source::navigation, "controller_server", "debug", "Controller loop tick");
  }
}

// Returns false when the step failed.
bool run_navigation(Recorder& rec, const Setup& s, std::size_t step, const std::string& goal) {
  rec.status("navigation", step, SkillStatus::running);
  rec.advance(0.05);
  rec.emit(Source::navigation, EventKind::param,
           {{"max_vel_x", 0.3},
            {"charger_connected", s.nav == NavFault::charger},
            {"joystick_enabled", s.nav == NavFault::joystick},
            {"localization_covariance", s.nav == NavFault::bad_localisation ? 0.84 : 0.05}});
  rec.advance(0.05);
  rec.log(Source::navigation, "bt_navigator", "info", fmt::format("Received goal: navigate to {}", goal));
  if (s.nav == NavFault::charger) {
    rec.advance(0.1);
    rec.log(Source::navigation, "bt_navigator", "warn",
            "Goal rejected: autonomous navigation is disabled while docked");
    rec.advance(0.05);
    rec.status("navigation", step, SkillStatus::failed, "charger_connected");
    return false;
  }
  if (s.nav == NavFault::joystick) {
    rec.advance(0.1);
    rec.log(Source::navigation, "bt_navigator", "warn", "Goal rejected: teleoperation input has priority");
    rec.advance(0.05);
    rec.status("navigation", step, SkillStatus::failed, "joystick_enabled");
    return false;
  }
  rec.advance(0.1);
  rec.log(Source::navigation, "bt_navigator", "info", "Goal accepted");
  rec.advance(0.2);
  rec.log(Source::navigation, "planner_server", "info", fmt::format("Computing path to {}", goal));
  rec.advance(0.1);
  rec.log(Source::navigation, "planner_server", "info",
          fmt::format("Path computed with {} poses", rec.between(80, 160)));
  filler(rec, rec.between(3, 8));
  drive_ticks(rec, rec.between(15, 30));

  if (s.nav == NavFault::static_obstacle) {
    rec.advance(0.5);
    rec.log(Source::navigation, "controller_server", "warn", "Path blocked by static obstacle");
    rec.advance(1.0);
    rec.log(Source::navigation, "recoveries_server", "info", "Recovery behaviour: clearing costmap");
    rec.advance(2.0);
    rec.log(Source::navigation, "recoveries_server", "info", "Recovery behaviour: spin");
    rec.advance(1.0);
    rec.log(Source::navigation, "planner_server", "warn", fmt::format("Failed to compute a path to {}", goal));
    rec.advance(0.2);
    rec.log(Source::navigation, "bt_navigator", "error",
            fmt::format("Goal aborted: no valid path to {} (blocked by static obstacle)", goal));
    rec.advance(0.05);
    rec.status("navigation", step, SkillStatus::failed, "no_valid_path");
    return false;
  }
  if (s.nav == NavFault::bad_localisation) {
    for (int i = 0; i < 3; ++i) {
      rec.advance(1.5);
      rec.log(Source::navigation, "amcl", "warn", "Localization covariance above threshold (0.84 > 0.25)");
      drive_ticks(rec, rec.between(5, 12));
    }
    rec.advance(1.0);
    rec.log(Source::navigation, "recoveries_server", "info", "Recovery behaviour: spin to relocalise");
    drive_ticks(rec, rec.between(10, 20));
  }
  if (s.nav == NavFault::moving_obstacles) {
    for (int i = 0; i < 3; ++i) {
      rec.advance(2.0);
      rec.log(Source::navigation, "controller_server", "warn", "Moving obstacle detected, replanning");
      rec.advance(0.2);
      rec.log(Source::navigation, "planner_server", "info",
              fmt::format("Path computed with {} poses", rec.between(80, 180)));
      drive_ticks(rec, rec.between(5, 12));
    }
  }
  filler(rec, rec.between(2, 6));
  drive_ticks(rec, rec.between(10, 25));
  rec.advance(0.3);
  rec.log(Source::navigation, "bt_navigator", "info", "Goal reached");
  rec.advance(0.05);
  rec.status("navigation", step, SkillStatus::succeeded);
  return true;
}

bool run_tts(Recorder& rec, const Setup& s, std::size_t step, const std::string& text) {
  rec.status("text_to_speech", step, SkillStatus::running);
  rec.advance(0.05);
  rec.emit(Source::text_to_speech, EventKind::param, {{"timeout", s.tts_timeout}, {"speech_rate", kSpeechRate}});
  const auto length = static_cast<std::int64_t>(text.size());
  rec.advance(0.05);
  rec.log(Source::text_to_speech, "text_to_speech", "info", fmt::format("Speaking utterance ({} characters)", length));
  const double needed = static_cast<double>(length) / kSpeechRate;
  if (needed > s.tts_timeout) {
    rec.advance_exact(s.tts_timeout);
    rec.log(Source::text_to_speech, "text_to_speech", "error",
            fmt::format("Speech action timed out after {:.1f} s", s.tts_timeout));
    rec.status("text_to_speech", step, SkillStatus::failed, "timeout", {{"utterance_length", length}});
    return false;
  }
  rec.advance_exact(needed);
  rec.status("text_to_speech", step, SkillStatus::succeeded, {}, {{"utterance_length", length}});
  return true;
}

bool run_help(Recorder& rec, const Setup& s, std::size_t step, const std::string& request) {
  const HelpSetup& h = s.help;
  const HelpThresholds t;
  rec.status("ask_human_for_help", step, SkillStatus::running);
  rec.advance(0.05);
  rec.emit(Source::ask_human_for_help, EventKind::param,
           {{"t_stable", t.t_stable}, {"d_max", t.d_max}, {"var_max", t.var_max}, {"request", request}});
  rec.advance(0.1);
  rec.log(Source::ask_human_for_help, "ask_human_for_help", "info", "Looking for people nearby");

  auto fail = [&](HelpOutcome outcome, const std::string& msg) {
    rec.advance(0.1);
    rec.log(Source::ask_human_for_help, "ask_human_for_help", "warn", msg);
    rec.advance(0.05);
    rec.status("ask_human_for_help", step, SkillStatus::failed, std::string(to_string(outcome)));
    return false;
  };

  double nearest = std::numeric_limits<double>::infinity();
  std::map<std::int64_t, std::pair<int, int>> best_run;  // id -> (length, last frame)
  for (int frame = 0; frame < kDetectionFrames; ++frame) {
    rec.advance_exact(kFramePeriod + rec.symmetric(0.01));
    Payload p{{"frame", static_cast<std::int64_t>(frame)}};
    std::int64_t count = 0;
    for (const auto& person : h.persons) {
      const bool seen = std::any_of(person.visible.begin(), person.visible.end(),
                                    [&](const auto& r) { return frame >= r.first && frame <= r.second; });
      if (!seen) continue;
      const double swing = person.oscillation * ((frame % 2 == 0) ? 1.0 : -1.0);
      const double x = r6(person.x + swing + rec.symmetric(0.02));
      const double y = r6(person.y + swing + rec.symmetric(0.02));
      const double distance = r6(std::hypot(x, y));
      const auto prefix = fmt::format("p{}.", count);
      p[prefix + "id"] = person.id;
      p[prefix + "x"] = x;
      p[prefix + "y"] = y;
      p[prefix + "distance"] = distance;
      nearest = std::min(nearest, distance);
      ++count;
    }
    p["count"] = count;
    rec.emit(Source::ask_human_for_help, EventKind::detection, std::move(p));
  }

  if (h.persons.empty()) return fail(HelpOutcome::no_human_found, "No person detected");
  rec.advance(0.1);
  rec.log(Source::ask_human_for_help, "ask_human_for_help", "info",
          fmt::format("Detected {} person(s), nearest at {:.2f} m", h.persons.size(), nearest));
  if (nearest > t.d_max) return fail(HelpOutcome::human_too_far, "Nearest person is out of reach");
  const bool stable = std::any_of(h.persons.begin(), h.persons.end(), [&](const Person& p) {
    return std::any_of(p.visible.begin(), p.visible.end(),
                       [&](const auto& r) { return (r.second - r.first) * kFramePeriod >= t.t_stable; });
  });
  if (!stable) return fail(HelpOutcome::unstable_detection, "Person detection is not stable");

  rec.advance(0.2);
  rec.log(Source::navigation, "planner_server", "info", "Computing path to person");
  if (!h.path_feasible) {
    rec.advance(1.5);
    rec.log(Source::navigation, "recoveries_server", "info", "Recovery behaviour: clearing costmap");
    rec.advance(1.0);
    rec.log(Source::navigation, "bt_navigator", "error",
            "Goal aborted: no valid path to person (blocked by static obstacle)");
  } else {
    for (int i = 0; i < h.replans; ++i) {
      drive_ticks(rec, rec.between(4, 9));
      rec.advance(0.8);
      rec.log(Source::navigation, "planner_server", "info", "Recomputing path to person");
    }
    drive_ticks(rec, rec.between(8, 16));
    rec.advance(0.2);
    rec.log(Source::navigation, "bt_navigator", "info", "Goal reached");
  }
  rec.advance(0.1);
  rec.emit(Source::ask_human_for_help, EventKind::log,
           {{"level", std::string(h.path_feasible ? "info" : "warn")},
            {"node", std::string("ask_human_for_help")},
            {"msg", std::string(h.path_feasible ? fmt::format("Reached the person after {} replan(s)", h.replans)
                                                : "Could not reach the person")},
            {"event", std::string("approach")},
            {"path_feasible", h.path_feasible},
            {"replans", static_cast<std::int64_t>(h.replans)}});
  if (!h.path_feasible) {
    rec.advance(0.05);
    rec.status("ask_human_for_help", step, SkillStatus::failed, std::string(to_string(HelpOutcome::approach_failed)));
    return false;
  }

  rec.advance(0.5);
  rec.emit(Source::ask_human_for_help, EventKind::dialogue,
           {{"event", std::string("request")}, {"speaker", std::string("robot")}, {"utterance", request}});
  rec.advance(2.0);
  rec.emit(Source::ask_human_for_help, EventKind::dialogue,
           {{"event", std::string("response")},
            {"speaker", std::string("human")},
            {"response", std::string(to_string(h.response))}});
  if (h.response != HelpResponse::agree) {
    rec.advance(0.05);
    rec.status("ask_human_for_help", step, SkillStatus::failed, std::string(to_string(HelpOutcome::help_refused)));
    return false;
  }
  rec.advance(8.0);
  rec.emit(Source::ask_human_for_help, EventKind::dialogue,
           {{"event", std::string("confirmation")},
            {"speaker", std::string("human")},
            {"confirmation", h.confirmation}});
  if (!h.confirmation) {
    rec.advance(0.05);
    rec.status("ask_human_for_help", step, SkillStatus::failed, std::string(to_string(HelpOutcome::no_confirmation)));
    return false;
  }
  rec.advance(0.05);
  rec.status("ask_human_for_help", step, SkillStatus::succeeded);
  return true;
}

bool run_pizza(Recorder& rec, const Setup& s, std::size_t step) {
  rec.status("pizza_recommender", step, SkillStatus::running);
  rec.advance(0.05);
  rec.emit(Source::pizza_recommender, EventKind::param, {{"available_ingredients", s.ingredients}});
  const DecisionTree& tree = pizza_tree();
  const IngredientVector x = ingredient_vector(tree, s.ingredients);
  const std::string pizza = tree.classes()[tree.predict(x)];
  rec.advance(0.1);
  rec.log(Source::pizza_recommender, "pizza_recommender", "info",
          fmt::format("Classifying {} available ingredient(s)", std::count(x.begin(), x.end(), 1)));
  rec.advance(0.2);
  rec.emit(Source::pizza_recommender, EventKind::dialogue,
           {{"event", std::string("recommendation")},
            {"speaker", std::string("robot")},
            {"pizza", pizza},
            {"utterance", fmt::format("I recommend a {} pizza.", pizza)}});
  rec.advance(0.05);
  rec.status("pizza_recommender", step, SkillStatus::succeeded);
  return true;
}

}  // namespace

const std::vector<ScenarioSpec>& list_scenarios() {
  static const std::vector<ScenarioSpec> specs = build_scenarios();
  return specs;
}

const ScenarioSpec& scenario(int scenario_id) {
  if (scenario_id < 1 || scenario_id > 20) throw std::out_of_range(fmt::format("no scenario {}", scenario_id));
  return list_scenarios()[static_cast<std::size_t>(scenario_id - 1)];
}

std::optional<HelpOutcome> injected_help_outcome(int scenario_id) {
  switch (scenario_id) {
    case 11: return HelpOutcome::no_human_found;
    case 12: return HelpOutcome::human_too_far;
    case 13: return HelpOutcome::unstable_detection;
    case 14: return HelpOutcome::approach_failed;
    case 15: return HelpOutcome::help_refused;
    case 16: return HelpOutcome::no_confirmation;
    case 17: case 18: return HelpOutcome::success;
    default: return std::nullopt;
  }
}

Trace generate_trace(int scenario_id, int task_variant, std::uint64_t seed) {
  if (scenario_id < 1 || scenario_id > 20) {
    throw std::out_of_range(fmt::format("scenario {} outside 1..20", scenario_id));
  }
  if (task_variant < 1 || task_variant > 3) {
    throw std::out_of_range(fmt::format("task variant {} outside 1..3", task_variant));
  }
  const ScenarioSpec& spec = scenario(scenario_id);
  Setup s = setup_for(scenario_id, task_variant);
  s.plan.instruction = spec.task_instructions[static_cast<std::size_t>(task_variant - 1)];

  Trace trace;
  trace.scenario_id = scenario_id;
  trace.task_variant = task_variant;
  trace.seed = seed;
  Recorder rec(trace, seed, scenario_id, task_variant);

  const int battery = rec.between(60, 95);
  rec.log(Source::system, "battery_monitor", "info", fmt::format("Battery at {}%", battery));
  rec.advance(0.1);
  rec.log(Source::planner, "task_planner", "info", fmt::format("Received instruction: {}", s.plan.instruction));
  rec.advance(0.4);
  rec.log(Source::planner, "task_planner", "info", fmt::format("Generated plan with {} step(s)", s.plan.steps.size()));
  rec.advance(0.05);
  rec.emit(Source::planner, EventKind::plan, encode_plan(s.plan));
  for (std::size_t i = 0; i < s.plan.steps.size(); ++i) {
    rec.advance_exact(0.001);
    rec.status(s.plan.steps[i].skill, i, SkillStatus::waiting);
  }

  if (!s.plan.valid) {
    rec.advance(0.05);
    rec.log(Source::planner, "task_planner", "error",
            fmt::format("Plan rejected: {} grounding error(s)", s.plan.grounding_errors.size()));
  } else {
    for (std::size_t i = 0; i < s.plan.steps.size(); ++i) {
      const PlanStep& step = s.plan.steps[i];
      rec.advance(0.2);
      bool ok = true;
      if (step.skill == "navigation") {
        ok = run_navigation(rec, s, i, step.params.at("location"));
      } else if (step.skill == "text_to_speech") {
        ok = run_tts(rec, s, i, step.params.at("text"));
      } else if (step.skill == "ask_human_for_help") {
        ok = run_help(rec, s, i, step.params.at("request"));
      } else if (step.skill == "pizza_recommender") {
        ok = run_pizza(rec, s, i);
      }
      if (!ok) {
        rec.advance(0.1);
        rec.log(Source::planner, "task_planner", "error", fmt::format("Step {} failed; aborting task", i + 1));
        break;
      }
    }
  }
  rec.advance(0.5);
  rec.log(Source::system, "battery_monitor", "info", fmt::format("Battery at {}%", battery - rec.between(0, 1)));
  return trace;
}

// The replay keeps its own running state instead of reusing the variable
// extraction, so the two can be compared.
HelpOutcome replay_fsm(const Trace& trace) {
  enum class Phase { idle, detecting, approaching, asking, confirming, done };
  Phase phase = Phase::idle;
  HelpThresholds t;
  std::optional<HelpOutcome> outcome;

  struct Track {
    std::int64_t last_frame = -2;
    double run_start = 0.0;
    double best = -1.0;
  };
  std::map<std::int64_t, Track> tracks;
  double nearest = std::numeric_limits<double>::infinity();
  bool saw_help = false;

  auto close_detection = [&]() {
    if (phase != Phase::detecting) return;
    double longest = -1.0;
    for (const auto& [id, tr] : tracks) longest = std::max(longest, tr.best);
    if (tracks.empty()) {
      outcome = HelpOutcome::no_human_found;
    } else if (nearest > t.d_max) {
      outcome = HelpOutcome::human_too_far;
    } else if (longest < t.t_stable) {
      outcome = HelpOutcome::unstable_detection;
    }
    phase = outcome ? Phase::done : Phase::approaching;
  };

  for (const auto& e : trace.events) {
    if (e.source != Source::ask_human_for_help || outcome) continue;
    saw_help = true;
    if (e.kind == EventKind::param) {
      t.t_stable = find_number(e.payload, "t_stable").value_or(t.t_stable);
      t.d_max = find_number(e.payload, "d_max").value_or(t.d_max);
      t.var_max = find_number(e.payload, "var_max").value_or(t.var_max);
      continue;
    }
    if (e.kind == EventKind::detection) {
      if (phase == Phase::idle) phase = Phase::detecting;
      const auto frame = get_int(e.payload, "frame");
      const auto count = get_int(e.payload, "count");
      for (std::int64_t k = 0; k < count; ++k) {
        const auto prefix = fmt::format("p{}.", k);
        auto& tr = tracks[get_int(e.payload, prefix + "id")];
        if (tr.last_frame + 1 != frame) tr.run_start = e.ts;
        tr.last_frame = frame;
        tr.best = std::max(tr.best, e.ts - tr.run_start);
        nearest = std::min(nearest, get_number(e.payload, prefix + "distance"));
      }
      continue;
    }
    if (e.kind == EventKind::skill_status && find_string(e.payload, "status") == "running") continue;
    close_detection();
    if (outcome) break;
    if (e.kind == EventKind::log && find_string(e.payload, "event") == "approach") {
      if (!get_bool(e.payload, "path_feasible")) outcome = HelpOutcome::approach_failed;
      phase = Phase::asking;
    } else if (e.kind == EventKind::dialogue && find_field(e.payload, "response")) {
      if (get_string(e.payload, "response") != "agree") outcome = HelpOutcome::help_refused;
      phase = Phase::confirming;
    } else if (e.kind == EventKind::dialogue && find_field(e.payload, "confirmation")) {
      if (!get_bool(e.payload, "confirmation")) outcome = HelpOutcome::no_confirmation;
      phase = Phase::done;
    }
  }
  if (!saw_help) throw ReplayError("trace has no ask_human_for_help events");
  close_detection();
  return outcome.value_or(HelpOutcome::success);
}

std::vector<std::string> claim_universe() {
  std::vector<std::string> claims;
  for (const auto& s : list_scenarios()) {
    if (std::find(claims.begin(), claims.end(), s.ground_truth.key_phrase) == claims.end()) {
      claims.push_back(s.ground_truth.key_phrase);
    }
  }
  return claims;
}

std::vector<std::string> scenario_facts(int scenario_id) {
  const ScenarioSpec& s = scenario(scenario_id);
  std::vector<std::string> facts{s.ground_truth.key_phrase};
  facts.insert(facts.end(), s.extra_facts.begin(), s.extra_facts.end());
  return facts;
}

std::vector<std::string> contradicted_claims(int scenario_id) {
  const auto facts = scenario_facts(scenario_id);
  std::vector<std::string> out;
  for (const auto& claim : claim_universe()) {
    if (std::find(facts.begin(), facts.end(), claim) == facts.end()) out.push_back(claim);
  }
  return out;
}

std::vector<ManifestEntry> full_manifest() {
  std::vector<ManifestEntry> entries;
  for (int s = 1; s <= 20; ++s) {
    for (int v = 1; v <= 3; ++v) {
      for (int q = 1; q <= 3; ++q) entries.push_back({s, v, q});
    }
  }
  return entries;
}

std::vector<ManifestEntry> parse_manifest(std::istream& in) {
  const auto rows = parse_csv(in);
  if (rows.empty()) throw ManifestError("manifest is empty");
  const std::vector<std::string> header = {"scenario_id", "task_variant", "query_index"};
  if (rows.front() != header) throw ManifestError("manifest header must be scenario_id,task_variant,query_index");
  std::vector<ManifestEntry> entries;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& row = rows[i];
    if (row.size() == 1 && trim(row[0]).empty()) continue;
    if (row.size() != 3) throw ManifestError(fmt::format("manifest row {}: expected 3 columns", i + 1));
    ManifestEntry e;
    try {
      auto integer = [](const std::string& cell) {
        const std::string text = trim(cell);
        std::size_t used = 0;
        const int value = std::stoi(text, &used);
        if (used != text.size()) throw std::invalid_argument("trailing text");
        return value;
      };
      e.scenario_id = integer(row[0]);
      e.task_variant = integer(row[1]);
      e.query_index = integer(row[2]);
    } catch (const std::exception&) {
      throw ManifestError(fmt::format("manifest row {}: non-integer value", i + 1));
    }
    if (e.scenario_id < 1 || e.scenario_id > 20 || e.task_variant < 1 || e.task_variant > 3 || e.query_index < 1 ||
        e.query_index > 3) {
      throw ManifestError(fmt::format("manifest row {}: value out of range", i + 1));
    }
    if (std::find(entries.begin(), entries.end(), e) != entries.end()) {
      throw ManifestError(fmt::format("manifest row {}: duplicate triple", i + 1));
    }
    entries.push_back(e);
  }
  if (entries.empty()) throw ManifestError("manifest lists no grid points");
  return entries;
}

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ManifestError(fmt::format("cannot open manifest {}", path.string()));
  return parse_manifest(in);
}

void write_manifest(const std::vector<ManifestEntry>& entries, std::ostream& out) {
  out << "scenario_id,task_variant,query_index\n";
  for (const auto& e : entries) out << e.scenario_id << ',' << e.task_variant << ',' << e.query_index << '\n';
}

Query grid_query(const Trace& trace, int query_index) {
  if (query_index < 1 || query_index > 3) throw std::out_of_range("query index outside 1..3");
  Query q;
  q.text = scenario(trace.scenario_id).queries[static_cast<std::size_t>(query_index - 1)];
  q.asked_at = (trace.events.empty() ? 0.0 : trace.events.back().ts) + 1.0;
  return q;
}

}  // namespace hexar
