#pragma once

// The 20 evaluation scenarios, each with three task variants and three
// queries, and a deterministic trace generator for them.

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "hexar/causal.hpp"
#include "hexar/trace.hpp"

namespace hexar {

struct ScenarioSpec {
  int scenario_id = 0;
  Category category = Category::agent_error;
  Source relevant_module = Source::planner;
  std::string description;
  std::array<std::string, 3> task_instructions;
  // Generic, task-contextual, problem-specific.
  std::array<std::string, 3> queries;
  GroundTruth ground_truth;
  // Phrases that are true for this scenario besides the key phrase.
  std::vector<std::string> extra_facts;
};

const std::vector<ScenarioSpec>& list_scenarios();
// Throws std::out_of_range for ids outside 1..20.
const ScenarioSpec& scenario(int scenario_id);

// Same arguments, same bytes. The seed changes timing jitter and filler
// lines only, never what goes wrong.
Trace generate_trace(int scenario_id, int task_variant, std::uint64_t seed);

// Outcome of the help skill the generator injected for a scenario, or
// nullopt when the scenario does not ask for help.
std::optional<HelpOutcome> injected_help_outcome(int scenario_id);

class ReplayError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Streams the help skill's events through its state machine and returns
// where it stopped. Throws ReplayError when the trace has no help events.
HelpOutcome replay_fsm(const Trace& trace);

// Key phrases of every scenario: the claims the auto-annotator looks for.
std::vector<std::string> claim_universe();
// Phrases that are true for a scenario (its key phrase plus extras).
std::vector<std::string> scenario_facts(int scenario_id);
// Claims that would be false if made about this scenario.
std::vector<std::string> contradicted_claims(int scenario_id);

struct ManifestEntry {
  int scenario_id = 1;
  int task_variant = 1;
  int query_index = 1;

  auto operator<=>(const ManifestEntry&) const = default;
};

class ManifestError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// All 20 x 3 x 3 triples in order.
std::vector<ManifestEntry> full_manifest();
std::vector<ManifestEntry> parse_manifest(std::istream& in);
std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path);
void write_manifest(const std::vector<ManifestEntry>& entries, std::ostream& out);

// Query text for a grid point, asked one second after the trace ends.
Query grid_query(const Trace& trace, int query_index);

}  // namespace hexar
