#pragma once

#include <stdexcept>
#include <vector>

namespace hexar {

class StatsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using BinaryMatrix = std::vector<std::vector<int>>;

// Regularized upper incomplete gamma Q(a, x).
double gamma_q(double a, double x);
// P(X > x) for X ~ chi-square(df).
double chi_square_sf(double x, double df);

struct CochranResult {
  double q = 0.0;
  int df = 0;
  double p = 1.0;
};

// Rows are subjects, columns are treatments. Needs k >= 2 and n >= 1.
CochranResult cochran_q(const BinaryMatrix& outcomes);

struct McNemarResult {
  double statistic = 0.0;
  double p = 1.0;
  int b = 0;  // first = 1, second = 0
  int c = 0;
  bool exact = true;
};

// Exact two-sided binomial test when b + c < 25, continuity corrected
// chi-square otherwise.
McNemarResult mcnemar(const BinaryMatrix& pairs);
McNemarResult mcnemar(const std::vector<int>& first, const std::vector<int>& second);
McNemarResult mcnemar_counts(int b, int c);

std::vector<double> holm_adjust(const std::vector<double>& pvalues);

double mean(const std::vector<double>& xs);
// n - 1 denominator; 0 for fewer than two values.
double sample_variance(const std::vector<double>& xs);

}  // namespace hexar
