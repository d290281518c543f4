#pragma once

#include "hexar/framework.hpp"

namespace hexar {

// Everything the registry's explainers can observe, in one prompt.
ReasonerRequest end_to_end_request(const Query& query, const Trace& trace, const ExplainerRegistry& registry);

// One reasoner call over end_to_end_request. produced_by = {"end_to_end"}.
Explanation explain_end_to_end(const Query& query, const Trace& trace, const ExplainerRegistry& registry,
                               const Reasoner& reasoner);

// Every registered explainer runs (concurrently) on the same context; their
// outputs, in registry order, are merged by aggregate(). A failing explainer
// contributes a "(no explanation ...)" note instead of aborting. Simulated
// reasoner delays are summed across explainers, i.e. one model server
// answers the calls one after another.
Explanation explain_all_components(const Query& query, const Trace& trace, const ExplainerRegistry& registry,
                                   const Reasoner& reasoner);

}  // namespace hexar
