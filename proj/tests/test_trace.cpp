#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "hexar/scenarios.hpp"
#include "hexar/trace.hpp"

using namespace hexar;

namespace {

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("hexar_test_" + name);
}

const char* kHeader = R"({"scenario_id": 3, "task_variant": 1, "seed": 7})";

std::string line(double ts, const std::string& kind, const std::string& payload) {
  return "{\"ts\": " + std::to_string(ts) + ", \"source\": \"planner\", \"kind\": \"" + kind +
         "\", \"payload\": " + payload + "}";
}

}  // namespace

TEST_CASE("minimal file with a plan and two statuses") {
  std::stringstream in;
  TaskPlan plan;
  plan.instruction = "Go to the kitchen";
  plan.steps = {{"navigation", {{"location", "kitchen"}}}};
  Trace t;
  t.events.push_back({0.0, Source::planner, EventKind::plan, encode_plan(plan)});
  t.events.push_back({0.5, Source::navigation, EventKind::skill_status,
                      {{"skill", std::string("navigation")},
                       {"status", std::string("running")},
                       {"step", std::int64_t{0}}}});
  t.events.push_back({1.5, Source::navigation, EventKind::skill_status,
                      {{"skill", std::string("navigation")},
                       {"status", std::string("succeeded")},
                       {"step", std::int64_t{0}}}});
  write_trace(t, in);
  const Trace back = parse_trace(in);
  CHECK(back.events.size() == 3);
  CHECK(back == t);
  CHECK(validate_trace(back).empty());
}

TEST_CASE("out of order timestamps name the offending record") {
  std::stringstream in;
  in << kHeader << "\n"
     << line(0.0, "log", R"({"msg": "a"})") << "\n"
     << line(2.0, "log", R"({"msg": "b"})") << "\n"
     << line(1.0, "log", R"({"msg": "c"})") << "\n";
  try {
    parse_trace(in);
    FAIL("expected an ordering error");
  } catch (const TraceOrderError& e) {
    CHECK(e.event_index() == 3);
    CHECK(e.line() == 4);
    CHECK(std::string(e.what()).find("event 3") != std::string::npos);
  }
}

TEST_CASE("malformed records report their line") {
  std::stringstream in;
  in << kHeader << "\n" << line(0.0, "log", "{}") << "\n{\"ts\": oops}\n";
  try {
    parse_trace(in);
    FAIL("expected a parse error");
  } catch (const TraceParseError& e) {
    CHECK(e.line() == 3);
  }
  std::stringstream unknown;
  unknown << kHeader << "\n" << R"({"ts": 0.0, "source": "gripper", "kind": "log", "payload": {}})" << "\n";
  CHECK_THROWS_AS(parse_trace(unknown), TraceParseError);
  std::stringstream empty;
  CHECK_THROWS_AS(parse_trace(empty), TraceParseError);
}

TEST_CASE("empty trace writes only the header") {
  Trace t;
  t.scenario_id = 4;
  t.task_variant = 2;
  t.seed = 99;
  const std::string text = serialize_trace(t);
  CHECK(text == "{\"scenario_id\": 4, \"task_variant\": 2, \"seed\": 99}\n");
  std::stringstream in(text);
  CHECK(parse_trace(in) == t);
}

TEST_CASE("field names and number formatting on the wire") {
  Trace t;
  t.events.push_back({1.25, Source::system, EventKind::log, {{"msg", std::string("Battery at 80%")}, {"ok", true}}});
  const std::string text = serialize_trace(t);
  const std::string expected =
      R"({"ts": 1.250000, "source": "system", "kind": "log", "payload": {"msg": "Battery at 80%", "ok": true}})";
  CHECK(text.find(expected) != std::string::npos);
}

TEST_CASE("plan payload round trip") {
  TaskPlan plan;
  plan.instruction = "Fetch my keys from the garage";
  plan.steps = {{"navigation", {{"location", "garage"}}}, {"text_to_speech", {{"text", "Here, with a comma."}}}};
  plan.valid = false;
  plan.grounding_errors = {"invalid parameter value 'garage' for 'location' in step 1 (navigation)"};
  CHECK(decode_plan(encode_plan(plan)) == plan);
}

TEST_CASE("payload accessors") {
  const Payload p{{"n", std::int64_t{3}}, {"x", 0.5}, {"s", std::string("hi")}, {"b", false}};
  CHECK(get_int(p, "n") == 3);
  CHECK(get_number(p, "n") == 3.0);
  CHECK(get_number(p, "x") == 0.5);
  CHECK(get_string(p, "s") == "hi");
  CHECK_FALSE(get_bool(p, "b"));
  CHECK_FALSE(find_string(p, "missing"));
  CHECK_THROWS_AS(get_string(p, "missing"), PayloadError);
  CHECK_THROWS_AS(get_bool(p, "s"), PayloadError);
  CHECK(format_payload(p) == "b=false, n=3, s=hi, x=0.5");
}

TEST_CASE("simulator traces round trip through files and validate") {
  for (int s = 1; s <= 20; ++s) {
    for (int v = 1; v <= 3; ++v) {
      for (std::uint64_t seed : {1ULL, 42ULL, 123456789ULL}) {
        const Trace t = generate_trace(s, v, seed);
        CAPTURE(s);
        CAPTURE(v);
        CHECK(validate_trace(t).empty());
        const auto path = temp_file("roundtrip.jsonl");
        write_trace(t, path);
        const Trace back = read_trace(path);
        CHECK(back == t);
        write_trace(back, path);
        std::ifstream again(path, std::ios::binary);
        const std::string bytes((std::istreambuf_iterator<char>(again)), std::istreambuf_iterator<char>());
        CHECK(bytes == serialize_trace(t));
      }
    }
  }
}

TEST_CASE("validator catches broken invariants") {
  Trace t = generate_trace(5, 1, 1);
  CHECK(validate_trace(t).empty());
  Trace no_plan = t;
  std::erase_if(no_plan.events, [](const Event& e) { return e.kind == EventKind::plan; });
  CHECK_FALSE(validate_trace(no_plan).empty());
  Trace swapped = t;
  std::swap(swapped.events[1].ts, swapped.events[5].ts);
  CHECK_FALSE(validate_trace(swapped).empty());
  Trace bad_status = t;
  for (auto& e : bad_status.events) {
    if (e.kind == EventKind::skill_status) e.payload["status"] = std::string("exploded");
  }
  CHECK_FALSE(validate_trace(bad_status).empty());
}
