#include "hexar/reasoner.hpp"

#include <algorithm>
#include <chrono>

#include <fmt/format.h>

namespace hexar {

SimulatedLatencyReasoner::SimulatedLatencyReasoner(const Reasoner& inner, double seconds_per_100_chars,
                                                   double seconds_per_call)
    : inner_(inner), seconds_per_100_chars_(seconds_per_100_chars), seconds_per_call_(seconds_per_call) {
  if (!(seconds_per_100_chars >= 0.0)) throw std::invalid_argument("latency per 100 characters must be >= 0");
  if (!(seconds_per_call >= 0.0)) throw std::invalid_argument("latency per call must be >= 0");
}

ReasonerResponse SimulatedLatencyReasoner::complete(const ReasonerRequest& request) const {
  ReasonerResponse response = inner_.complete(request);
  const auto chars = request.system_prompt.size() + request.user_prompt.size();
  response.latency += seconds_per_call_ + seconds_per_100_chars_ * static_cast<double>(chars) / 100.0;
  return response;
}

std::string SimulatedLatencyReasoner::name() const {
  return fmt::format("{}+latency({}s/call, {}s/100ch)", inner_.name(), seconds_per_call_, seconds_per_100_chars_);
}

ReasonerResponse ReasonerSession::complete(const ReasonerRequest& request) {
  ++calls_;
  prompt_chars_ += request.system_prompt.size() + request.user_prompt.size();
  const auto start = std::chrono::steady_clock::now();
  ReasonerResponse response = reasoner_.complete(request);
  const double spent = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  simulated_delay_ += std::max(0.0, response.latency - spent);
  return response;
}

void ReasonerSession::absorb(const ReasonerSession& other) {
  calls_ += other.calls_;
  simulated_delay_ += other.simulated_delay_;
  prompt_chars_ += other.prompt_chars_;
}

}  // namespace hexar
