#ifndef NSMPC_COMPLEMENTARITY_HPP
#define NSMPC_COMPLEMENTARITY_HPP

#include <cmath>
#include <utility>

#include <Eigen/Dense>

#include "nsmpc/errors.hpp"

namespace nsmpc {

// NCP function: phi(a, b) == 0 <=> a >= 0, b >= 0, a * b == 0.
enum class NcpFunction { FischerBurmeister };

/// Fischer-Burmeister: a + b - sqrt(a^2 + b^2).
inline double ncp_eval(double a, double b, NcpFunction fn = NcpFunction::FischerBurmeister) {
  switch (fn) {
    case NcpFunction::FischerBurmeister:
      return a + b - std::hypot(a, b);
  }
  return 0.0;
}

/// (d phi / d a, d phi / d b). At the origin, returns the limit along a = b > 0.
inline std::pair<double, double> ncp_partials(
    double a, double b, NcpFunction fn = NcpFunction::FischerBurmeister) {
  switch (fn) {
    case NcpFunction::FischerBurmeister: {
      const double r = std::hypot(a, b);
      if (r == 0.0) {
        const double s = 1.0 - 1.0 / std::sqrt(2.0);
        return {s, s};
      }
      return {1.0 - a / r, 1.0 - b / r};
    }
  }
  return {0.0, 0.0};
}

/// Elementwise NCP over paired entries. Callers pass -g(u) as the first argument.
inline Eigen::VectorXd psi(const Eigen::Ref<const Eigen::VectorXd>& g_neg,
                           const Eigen::Ref<const Eigen::VectorXd>& mu,
                           NcpFunction fn = NcpFunction::FischerBurmeister) {
  if (g_neg.size() != mu.size()) {
    throw DimensionError("psi: constraint and multiplier vectors differ in length");
  }
  Eigen::VectorXd out(g_neg.size());
  for (Eigen::Index i = 0; i < g_neg.size(); ++i) out[i] = ncp_eval(g_neg[i], mu[i], fn);
  return out;
}

}  // namespace nsmpc

#endif  // NSMPC_COMPLEMENTARITY_HPP
