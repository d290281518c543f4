#include "hexar/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <fmt/format.h>

namespace hexar {

namespace {

constexpr double kEps = 1e-12;
constexpr int kMaxIter = 10000;

void check_binary(int v) {
  if (v != 0 && v != 1) throw StatsError(fmt::format("non-binary entry {}", v));
}

// Lower series, valid for x < a + 1.
double gamma_p_series(double a, double x) {
  double term = 1.0 / a;
  double sum = term;
  for (int n = 1; n < kMaxIter; ++n) {
    term *= x / (a + n);
    sum += term;
    if (std::abs(term) < std::abs(sum) * kEps) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Upper continued fraction (modified Lentz), valid for x >= a + 1.
double gamma_q_fraction(double a, double x) {
  constexpr double tiny = std::numeric_limits<double>::min() / kEps;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < kMaxIter; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < kEps) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

}  // namespace

double gamma_q(double a, double x) {
  if (a <= 0.0 || x < 0.0 || std::isnan(x)) throw StatsError("gamma_q needs a > 0 and x >= 0");
  if (x == 0.0) return 1.0;
  if (x < a + 1.0) return std::clamp(1.0 - gamma_p_series(a, x), 0.0, 1.0);
  return std::clamp(gamma_q_fraction(a, x), 0.0, 1.0);
}

double chi_square_sf(double x, double df) {
  if (df <= 0.0) throw StatsError("chi-square needs df > 0");
  if (x <= 0.0) return 1.0;
  return gamma_q(df / 2.0, x / 2.0);
}

CochranResult cochran_q(const BinaryMatrix& outcomes) {
  if (outcomes.empty()) throw StatsError("cochran_q needs at least one row");
  const std::size_t k = outcomes.front().size();
  if (k < 2) throw StatsError("cochran_q needs at least two treatments");
  std::vector<double> col(k, 0.0);
  double sum_row_sq = 0.0;
  double total = 0.0;
  for (const auto& row : outcomes) {
    if (row.size() != k) throw StatsError("cochran_q rows differ in length");
    double r = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      check_binary(row[j]);
      col[j] += row[j];
      r += row[j];
    }
    sum_row_sq += r * r;
    total += r;
  }
  CochranResult out;
  out.df = static_cast<int>(k) - 1;
  const double kd = static_cast<double>(k);
  const double denom = kd * total - sum_row_sq;
  if (denom <= 0.0) return out;
  double sum_col_sq = 0.0;
  for (double c : col) sum_col_sq += c * c;
  out.q = (kd - 1.0) * (kd * sum_col_sq - total * total) / denom;
  if (std::abs(out.q) < 1e-12) out.q = 0.0;
  out.p = chi_square_sf(out.q, out.df);
  return out;
}

McNemarResult mcnemar_counts(int b, int c) {
  if (b < 0 || c < 0) throw StatsError("negative discordant count");
  McNemarResult out;
  out.b = b;
  out.c = c;
  const int n = b + c;
  if (n == 0) return out;
  if (n < 25) {
    const int lo = std::min(b, c);
    double tail = 0.0;
    for (int i = 0; i <= lo; ++i) {
      tail += std::exp(std::lgamma(n + 1.0) - std::lgamma(i + 1.0) - std::lgamma(n - i + 1.0) - n * std::log(2.0));
    }
    out.statistic = static_cast<double>(lo);
    out.p = std::min(1.0, 2.0 * tail);
    return out;
  }
  out.exact = false;
  const double diff = std::abs(b - c) - 1.0;
  out.statistic = diff * diff / n;
  out.p = chi_square_sf(out.statistic, 1.0);
  return out;
}

McNemarResult mcnemar(const std::vector<int>& first, const std::vector<int>& second) {
  if (first.size() != second.size()) throw StatsError("mcnemar columns differ in length");
  int b = 0;
  int c = 0;
  for (std::size_t i = 0; i < first.size(); ++i) {
    check_binary(first[i]);
    check_binary(second[i]);
    if (first[i] == 1 && second[i] == 0) ++b;
    if (first[i] == 0 && second[i] == 1) ++c;
  }
  return mcnemar_counts(b, c);
}

McNemarResult mcnemar(const BinaryMatrix& pairs) {
  std::vector<int> a;
  std::vector<int> b;
  for (const auto& row : pairs) {
    if (row.size() != 2) throw StatsError("mcnemar needs two columns");
    a.push_back(row[0]);
    b.push_back(row[1]);
  }
  return mcnemar(a, b);
}

std::vector<double> holm_adjust(const std::vector<double>& pvalues) {
  for (double p : pvalues) {
    if (!(p >= 0.0 && p <= 1.0)) throw StatsError(fmt::format("p-value {} outside [0, 1]", p));
  }
  const std::size_t m = pvalues.size();
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto i, auto j) { return pvalues[i] < pvalues[j]; });
  std::vector<double> out(m);
  double running = 0.0;
  for (std::size_t r = 0; r < m; ++r) {
    const double adj = std::min(1.0, static_cast<double>(m - r) * pvalues[order[r]]);
    running = std::max(running, adj);
    out[order[r]] = running;
  }
  return out;
}

double mean(const std::vector<double>& xs) {
  if (xs.empty()) return 0.0;
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double sample_variance(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0.0;
  const double m = mean(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return ss / static_cast<double>(xs.size() - 1);
}

}  // namespace hexar
