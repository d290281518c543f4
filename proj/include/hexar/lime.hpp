#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "hexar/decision_tree.hpp"

namespace hexar {

struct LimeConfig {
  std::size_t n_samples = 1000;
  // Kernel width sigma; nullopt means 0.75 * sqrt(d). +inf gives uniform weights.
  std::optional<double> kernel_width;
  std::uint64_t seed = 0;
  double regularization = 1e-6;  // ridge lambda, intercept not penalised
  // Use all 2^d binary vectors instead of random perturbations.
  bool exhaustive = false;
};

struct Attribution {
  std::vector<double> weights;
  double intercept = 0.0;
  // Index of the present feature with the largest weight; empty when the
  // instance has no present feature.
  std::optional<std::size_t> top_present;
};

class LimeSingularError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using SurrogateTarget = std::function<double(const IngredientVector&)>;

// Local linear surrogate of f around x. Perturbations resample every
// coordinate with a fair coin; sample 0 is x itself. Each sample is weighted
// by exp(-h^2 / sigma^2) with h = Hamming(x, z) / sqrt(d), and the weighted
// ridge problem is solved by rank-revealing QR.
Attribution lime_attribute(const SurrogateTarget& f, const IngredientVector& x, const LimeConfig& cfg);

// f(z) = predict_proba(z)[target_class].
Attribution lime_attribute(const DecisionTree& tree, const IngredientVector& x, std::size_t target_class,
                           const LimeConfig& cfg);

double default_kernel_width(std::size_t d);

}  // namespace hexar
