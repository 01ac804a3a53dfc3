#ifndef LANSING_NUMERICS_HPP
#define LANSING_NUMERICS_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <vector>

namespace lansing::numerics {

namespace detail {
// Below this |z*L| the closed forms lose digits to cancellation; the
// power series converge to full precision in well under 25 terms.
inline constexpr double kSeriesSwitch = 0.5;
inline constexpr int kSeriesTerms = 25;
}  // namespace detail

/// \int_0^L e^{-z a} da, stable through z == 0.
[[nodiscard]] inline double exp_integral(double z, double length) noexcept {
  const double x = z * length;
  if (std::abs(x) < detail::kSeriesSwitch) {
    // L * sum_n (-x)^n / (n+1)!
    double term = 1.0;
    double sum = 1.0;
    for (int n = 1; n < detail::kSeriesTerms; ++n) {
      term *= -x / static_cast<double>(n + 1);
      sum += term;
    }
    return length * sum;
  }
  return -std::expm1(-x) / z;
}

/// \int_0^L a e^{-z a} da, stable through z == 0.
[[nodiscard]] inline double exp_moment1(double z, double length) noexcept {
  const double x = z * length;
  if (std::abs(x) < detail::kSeriesSwitch) {
    // L^2 * sum_{n>=2} (-1)^n (n-1) x^{n-2} / n!
    double power = 1.0;       // x^{n-2}
    double factorial = 2.0;   // n!
    double sum = 0.5;
    for (int n = 3; n < detail::kSeriesTerms + 2; ++n) {
      power *= -x;
      factorial *= n;
      sum += (n - 1) * power / factorial;
    }
    return length * length * sum;
  }
  return (-std::expm1(-x) - x * std::exp(-x)) / (z * z);
}

/// Gauss-Legendre nodes and weights on [-1, 1].
template <std::size_t N>
struct GaussLegendre {
  std::array<double, N> nodes{};
  std::array<double, N> weights{};

  GaussLegendre() {
    for (std::size_t i = 0; i < (N + 1) / 2; ++i) {
      double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) /
                          (static_cast<double>(N) + 0.5));
      double dp = 0.0;
      for (int iter = 0; iter < 100; ++iter) {
        double p0 = 1.0, p1 = x;
        for (std::size_t k = 2; k <= N; ++k) {
          const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / static_cast<double>(k);
          p0 = p1;
          p1 = pk;
        }
        dp = static_cast<double>(N) * (x * p1 - p0) / (x * x - 1.0);
        const double dx = p1 / dp;
        x -= dx;
        if (std::abs(dx) < 1e-16) break;
      }
      nodes[i] = -x;
      nodes[N - 1 - i] = x;
      weights[i] = weights[N - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
  }

  template <class F>
  [[nodiscard]] double integrate(F&& f, double a, double b) const {
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (a + b);
    double sum = 0.0;
    for (std::size_t i = 0; i < N; ++i) sum += weights[i] * f(mid + half * nodes[i]);
    return sum * half;
  }
};

/// Shared 64-point rule.
inline const GaussLegendre<64>& gauss64() {
  static const GaussLegendre<64> rule;
  return rule;
}

/// Composite Gauss-Legendre over [a, b] split at the given interior breakpoints
/// (which need not be sorted or inside the interval).
template <class F>
[[nodiscard]] double integrate_piecewise(F&& f, double a, double b,
                                         std::vector<double> breaks = {},
                                         int panels_per_piece = 4) {
  std::vector<double> edges{a};
  for (double c : breaks) {
    if (c > a && c < b) edges.push_back(c);
  }
  edges.push_back(b);
  std::sort(edges.begin(), edges.end());
  double total = 0.0;
  const auto& rule = gauss64();
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    const double w = (edges[i + 1] - edges[i]) / panels_per_piece;
    for (int p = 0; p < panels_per_piece; ++p) {
      total += rule.integrate(f, edges[i] + p * w, edges[i] + (p + 1) * w);
    }
  }
  return total;
}

}  // namespace lansing::numerics

#endif  // LANSING_NUMERICS_HPP
