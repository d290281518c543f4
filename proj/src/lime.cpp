#include "hexar/lime.hpp"

#include <cmath>
#include <limits>
#include <random>

#include <Eigen/Dense>
#include <fmt/format.h>

namespace hexar {

double default_kernel_width(std::size_t d) { return 0.75 * std::sqrt(static_cast<double>(d)); }

Attribution lime_attribute(const SurrogateTarget& f, const IngredientVector& x, const LimeConfig& cfg) {
  const std::size_t d = x.size();
  if (d == 0) throw std::invalid_argument("cannot explain an empty feature vector");
  const double sigma = cfg.kernel_width.value_or(default_kernel_width(d));
  if (!(sigma > 0.0)) throw std::invalid_argument("kernel width must be positive");
  if (!(cfg.regularization >= 0.0)) throw std::invalid_argument("regularization must be >= 0");
  if (!cfg.exhaustive && cfg.n_samples < 1) throw std::invalid_argument("need at least one sample");
  if (cfg.exhaustive && d > 20) throw std::invalid_argument("exhaustive enumeration limited to 20 features");

  const std::size_t n = cfg.exhaustive ? (std::size_t{1} << d) : cfg.n_samples;
  std::vector<IngredientVector> samples;
  samples.reserve(n);
  if (cfg.exhaustive) {
    for (std::size_t mask = 0; mask < n; ++mask) {
      IngredientVector z(d);
      for (std::size_t j = 0; j < d; ++j) z[j] = static_cast<std::uint8_t>((mask >> j) & 1U);
      samples.push_back(std::move(z));
    }
  } else {
    std::mt19937_64 rng(cfg.seed);
    samples.push_back(x);
    while (samples.size() < n) {
      IngredientVector z(d);
      for (std::size_t j = 0; j < d; ++j) z[j] = static_cast<std::uint8_t>(rng() >> 63);
      samples.push_back(std::move(z));
    }
  }

  // Rows of sqrt(pi_i) * [z_i, 1], followed by sqrt(lambda) * e_j rows so the
  // ridge term becomes ordinary least squares on an augmented system.
  const bool ridge = cfg.regularization > 0.0;
  const auto rows = static_cast<Eigen::Index>(n + (ridge ? d : 0));
  const auto cols = static_cast<Eigen::Index>(d + 1);
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(rows, cols);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(rows);
  const double root_d = std::sqrt(static_cast<double>(d));
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t hamming = 0;
    for (std::size_t j = 0; j < d; ++j) hamming += samples[i][j] != x[j];
    const double h = static_cast<double>(hamming) / root_d;
    const double s = std::sqrt(std::exp(-(h * h) / (sigma * sigma)));
    const auto r = static_cast<Eigen::Index>(i);
    for (std::size_t j = 0; j < d; ++j) a(r, static_cast<Eigen::Index>(j)) = s * samples[i][j];
    a(r, cols - 1) = s;
    b(r) = s * f(samples[i]);
  }
  if (ridge) {
    const double s = std::sqrt(cfg.regularization);
    for (std::size_t j = 0; j < d; ++j) a(static_cast<Eigen::Index>(n + j), static_cast<Eigen::Index>(j)) = s;
  }

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  if (qr.rank() < cols) {
    throw LimeSingularError(fmt::format("surrogate design has rank {} < {}; increase samples or regularization",
                                        qr.rank(), cols));
  }
  const Eigen::VectorXd coef = qr.solve(b);

  Attribution out;
  out.weights.assign(coef.data(), coef.data() + d);
  out.intercept = coef(cols - 1);
  for (std::size_t j = 0; j < d; ++j) {
    if (!x[j]) continue;
    if (!out.top_present || out.weights[j] > out.weights[*out.top_present]) out.top_present = j;
  }
  return out;
}

Attribution lime_attribute(const DecisionTree& tree, const IngredientVector& x, std::size_t target_class,
                           const LimeConfig& cfg) {
  if (target_class >= tree.classes().size()) throw std::invalid_argument("target class out of range");
  if (x.size() != tree.features().size()) throw std::invalid_argument("instance width differs from the tree");
  return lime_attribute([&](const IngredientVector& z) { return tree.predict_proba(z)[target_class]; }, x, cfg);
}

}  // namespace hexar
