#include <doctest.h>

#include <map>
#include <sstream>

#include "hexar/prompt.hpp"
#include "hexar/scenarios.hpp"

using namespace hexar;

TEST_CASE("twenty scenarios with their categories and modules") {
  const auto& all = list_scenarios();
  REQUIRE(all.size() == 20);
  std::map<Source, int> modules;
  for (std::size_t i = 0; i < all.size(); ++i) {
    CHECK(all[i].scenario_id == static_cast<int>(i) + 1);
    CHECK(all[i].ground_truth.scenario_id == all[i].scenario_id);
    CHECK(all[i].ground_truth.relevant_module == all[i].relevant_module);
    CHECK(all[i].ground_truth.key_phrase == to_lower(all[i].ground_truth.key_phrase));
    ++modules[all[i].relevant_module];
  }
  CHECK(modules[Source::planner] == 4);
  CHECK(modules[Source::navigation] == 6);
  CHECK(modules[Source::ask_human_for_help] == 8);
  CHECK(modules[Source::text_to_speech] == 1);
  CHECK(modules[Source::pizza_recommender] == 1);
  CHECK(scenario(5).description == "Static obstacles prevent the robot from reaching a desired location");
  CHECK(scenario(19).description == "The robot's text-to-speech skill times out before its utterance is complete");
  CHECK(scenario(19).relevant_module == Source::text_to_speech);
  CHECK(scenario(10).category == Category::normal_successful);
  CHECK(scenario(20).category == Category::normal_successful);
  CHECK_THROWS_AS(scenario(0), std::out_of_range);
  CHECK_THROWS_AS(scenario(21), std::out_of_range);
  CHECK_THROWS_AS(generate_trace(1, 4, 1), std::out_of_range);
}

TEST_CASE("generation is deterministic and valid") {
  for (int s = 1; s <= 20; ++s) {
    for (int v = 1; v <= 3; ++v) {
      const Trace a = generate_trace(s, v, 7);
      CHECK(serialize_trace(a) == serialize_trace(generate_trace(s, v, 7)));
      CHECK(validate_trace(a).empty());
      CHECK(a.scenario_id == s);
      CHECK(a.task_variant == v);
    }
  }
  CHECK(serialize_trace(generate_trace(9, 1, 1)) != serialize_trace(generate_trace(9, 1, 2)));
}

namespace {

// Plan, statuses and error codes: what the seed must not change.
std::vector<std::string> skeleton(const Trace& t) {
  std::vector<std::string> out;
  for (const auto& e : t.events) {
    if (e.kind == EventKind::plan) out.push_back(format_payload(e.payload));
    if (e.kind == EventKind::skill_status) {
      out.push_back(get_string(e.payload, "skill") + ":" + get_string(e.payload, "status") + ":" +
                    find_string(e.payload, "error_code").value_or(""));
    }
  }
  return out;
}

}  // namespace

TEST_CASE("the seed never changes what goes wrong") {
  for (int s = 1; s <= 20; ++s) {
    for (int v = 1; v <= 3; ++v) {
      const auto base = skeleton(generate_trace(s, v, 1));
      for (std::uint64_t seed : {2ULL, 99ULL, 123456789ULL}) CHECK(skeleton(generate_trace(s, v, seed)) == base);
    }
  }
}

TEST_CASE("scenario specifics") {
  const Trace t7 = generate_trace(7, 1, 42);
  bool charger = false;
  for (const auto& e : t7.events) {
    if (e.kind == EventKind::param && find_bool(e.payload, "charger_connected") == true) charger = true;
  }
  CHECK(charger);

  const Trace t1 = generate_trace(1, 1, 42);
  bool unknown = false;
  for (const auto& e : t1.events) {
    if (e.kind == EventKind::plan) {
      const auto plan = decode_plan(e.payload);
      CHECK_FALSE(plan.valid);
      for (const auto& step : plan.steps) unknown = unknown || step.skill == "grasp";
    }
  }
  CHECK(unknown);

  for (int s : {10, 20}) {
    for (int v = 1; v <= 3; ++v) {
      for (const auto& e : generate_trace(s, v, 42).events) {
        if (e.kind == EventKind::skill_status) CHECK(get_string(e.payload, "status") != "failed");
      }
    }
  }
  std::vector<std::string> lists;
  for (int v = 1; v <= 3; ++v) {
    for (const auto& e : generate_trace(20, v, 42).events) {
      if (e.kind == EventKind::param) lists.push_back(get_string(e.payload, "available_ingredients"));
    }
  }
  CHECK(lists == std::vector<std::string>{"tomato,mozzarella,basil", "tomato,mozzarella,pepperoni,onion",
                                          "mozzarella,pineapple,ham,mushroom"});
}

TEST_CASE("failing scenarios stop at their relevant module") {
  for (int s = 1; s <= 19; ++s) {
    if (s == 8 || s == 9 || s == 10 || s == 17 || s == 18) continue;
    for (int v = 1; v <= 3; ++v) {
      const Trace t = generate_trace(s, v, 42);
      std::optional<std::string> failed;
      bool invalid_plan = false;
      for (const auto& e : t.events) {
        if (e.kind == EventKind::plan) invalid_plan = !decode_plan(e.payload).valid;
        if (e.kind == EventKind::skill_status && get_string(e.payload, "status") == "failed" && !failed) {
          failed = get_string(e.payload, "skill");
        }
      }
      CAPTURE(s);
      if (scenario(s).relevant_module == Source::planner) {
        CHECK(invalid_plan != (s == 3));
      } else {
        REQUIRE(failed);
        CHECK(*failed == to_string(scenario(s).relevant_module));
      }
    }
  }
}

TEST_CASE("help outcomes") {
  for (int s = 1; s <= 20; ++s) CHECK(injected_help_outcome(s).has_value() == (s >= 11 && s <= 18));
  CHECK(injected_help_outcome(11) == HelpOutcome::no_human_found);
  CHECK(injected_help_outcome(16) == HelpOutcome::no_confirmation);
  CHECK(injected_help_outcome(17) == HelpOutcome::success);
}

TEST_CASE("claims") {
  const auto universe = claim_universe();
  CHECK(universe.size() == 20);
  for (int s = 1; s <= 20; ++s) {
    const auto facts = scenario_facts(s);
    const auto wrong = contradicted_claims(s);
    CHECK(facts.front() == scenario(s).ground_truth.key_phrase);
    for (const auto& w : wrong) CHECK(std::find(facts.begin(), facts.end(), w) == facts.end());
    CHECK(facts.size() + wrong.size() >= universe.size());
  }
}

TEST_CASE("manifests") {
  const auto full = full_manifest();
  CHECK(full.size() == 180);
  CHECK(std::is_sorted(full.begin(), full.end()));
  std::ostringstream out;
  write_manifest(full, out);
  std::istringstream in(out.str());
  CHECK(parse_manifest(in) == full);

  auto bad = [](const std::string& text) {
    std::istringstream s(text);
    return parse_manifest(s);
  };
  CHECK_THROWS_AS(bad(""), ManifestError);
  CHECK_THROWS_AS(bad("scenario,task,query\n1,1,1\n"), ManifestError);
  CHECK_THROWS_AS(bad("scenario_id,task_variant,query_index\n1,1\n"), ManifestError);
  CHECK_THROWS_AS(bad("scenario_id,task_variant,query_index\n21,1,1\n"), ManifestError);
  CHECK_THROWS_AS(bad("scenario_id,task_variant,query_index\n1,0,1\n"), ManifestError);
  CHECK_THROWS_AS(bad("scenario_id,task_variant,query_index\n1,1,x\n"), ManifestError);
  CHECK_THROWS_AS(bad("scenario_id,task_variant,query_index\n1,1,1\n1,1,1\n"), ManifestError);
  CHECK_THROWS_AS(bad("scenario_id,task_variant,query_index\n"), ManifestError);
  CHECK(bad("scenario_id,task_variant,query_index\n 3 , 2 ,1\n") == std::vector<ManifestEntry>{{3, 2, 1}});
}

TEST_CASE("grid queries") {
  const Trace t = generate_trace(12, 2, 42);
  for (int q = 1; q <= 3; ++q) {
    const Query query = grid_query(t, q);
    CHECK(query.text == scenario(12).queries[q - 1]);
    CHECK(query.asked_at == t.events.back().ts + 1.0);
  }
  CHECK_THROWS(grid_query(t, 4));
}
