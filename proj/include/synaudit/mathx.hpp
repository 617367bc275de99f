#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace synaudit {

inline double sigmoid(double z) {
  if (z >= 0) {
    double e = std::exp(-z);
    return 1.0 / (1.0 + e);
  }
  double e = std::exp(z);
  return e / (1.0 + e);
}

inline double logit(double p) { return std::log(p / (1.0 - p)); }

namespace detail {

// Regularized lower incomplete gamma P(a, x), series expansion (x < a + 1).
inline double gamma_p_series(double a, double x) {
  double ap = a;
  double sum = 1.0 / a;
  double del = sum;
  for (int n = 0; n < 500; ++n) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::fabs(del) < std::fabs(sum) * 1e-15) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Regularized upper incomplete gamma Q(a, x), continued fraction (x >= a + 1).
inline double gamma_q_cf(double a, double x) {
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 500; ++i) {
    double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < 1e-15) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

inline double beta_cf(double a, double b, double x) {
  const double tiny = 1e-300;
  double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m < 500; ++m) {
    int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < 1e-15) break;
  }
  return h;
}

}  // namespace detail

// Regularized lower incomplete gamma P(a, x).
inline double gamma_p(double a, double x) {
  if (a <= 0.0 || x < 0.0) throw std::invalid_argument("gamma_p: domain");
  if (x == 0.0) return 0.0;
  if (x < a + 1.0) return detail::gamma_p_series(a, x);
  return 1.0 - detail::gamma_q_cf(a, x);
}

inline double gamma_q(double a, double x) { return 1.0 - gamma_p(a, x); }

// Regularized incomplete beta I_x(a, b).
inline double beta_inc(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  double ln = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) +
              b * std::log1p(-x);
  double front = std::exp(ln);
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return front * detail::beta_cf(a, b, x) / a;
  }
  return 1.0 - front * detail::beta_cf(b, a, 1.0 - x) / b;
}

// Survival function of the chi-square distribution.
inline double chi2_sf(double x, double df) {
  if (x <= 0.0) return 1.0;
  return gamma_q(df / 2.0, x / 2.0);
}

// Survival function of the F distribution with (d1, d2) degrees of freedom.
inline double f_sf(double f, double d1, double d2) {
  if (f <= 0.0) return 1.0;
  return beta_inc(d2 / 2.0, d1 / 2.0, d2 / (d2 + d1 * f));
}

// Pearson chi-square goodness-of-fit p-value for observed counts against
// expected counts (same total).
inline double chi2_gof_pvalue(const std::vector<double>& observed,
                              const std::vector<double>& expected) {
  if (observed.size() != expected.size() || observed.empty()) {
    throw std::invalid_argument("chi2_gof_pvalue: size mismatch");
  }
  double stat = 0.0;
  int df = -1;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    if (expected[i] <= 0.0) continue;
    double d = observed[i] - expected[i];
    stat += d * d / expected[i];
    ++df;
  }
  if (df < 1) return 1.0;
  return chi2_sf(stat, static_cast<double>(df));
}

}  // namespace synaudit
