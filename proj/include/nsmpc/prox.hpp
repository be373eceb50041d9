#ifndef NSMPC_PROX_HPP
#define NSMPC_PROX_HPP

#include <cmath>
#include <functional>
#include <type_traits>
#include <utility>
#include <variant>

#include <Eigen/Dense>

#include "nsmpc/errors.hpp"

namespace nsmpc {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Default absolute tolerance for subgradient membership tests.
inline constexpr double kSubgradientTol = 1e-9;

/// Elementwise soft-thresholding: sgn(v_i) * max(|v_i| - threshold, 0).
inline Vector soft_threshold(const Eigen::Ref<const Vector>& v, double threshold) {
  Vector out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double shrunk = std::abs(v[i]) - threshold;
    out[i] = shrunk > 0.0 ? std::copysign(shrunk, v[i]) : 0.0;
  }
  return out;
}

/// r(x) = 0.
struct ZeroRegularizer {};

/// r(x) = weight * ||x||_1.
class ScaledL1 {
 public:
  explicit ScaledL1(double weight) : weight_(weight) {
    if (!(weight > 0.0) || !std::isfinite(weight)) {
      throw ConfigError("weight", "ScaledL1 weight must be positive and finite");
    }
  }
  double weight() const noexcept { return weight_; }

 private:
  double weight_;
};

/// User-provided regularizer. Only `prox` is mandatory; the other callbacks
/// enable membership tests and the generalized Jacobian respectively.
struct CustomRegularizer {
  std::function<Vector(const Vector& v, double gamma)> prox;
  std::function<bool(const Vector& x, const Vector& g)> contains_subgradient;
  std::function<Vector(const Vector& v, double gamma)> prox_derivative;
};

/// Nonsmooth input regularizer r with an explicit proximal operator.
/// Immutable once constructed.
class Regularizer {
 public:
  using Variant = std::variant<ZeroRegularizer, ScaledL1, CustomRegularizer>;

  Regularizer() = default;
  Regularizer(ZeroRegularizer z) : impl_(z) {}  // NOLINT
  Regularizer(ScaledL1 l1) : impl_(l1) {}       // NOLINT
  Regularizer(CustomRegularizer custom) : impl_(std::move(custom)) {  // NOLINT
    if (!std::get<CustomRegularizer>(impl_).prox) {
      throw ConfigError("regularizer", "custom regularizer requires a prox callback");
    }
  }

  static Regularizer zero() { return Regularizer(ZeroRegularizer{}); }
  static Regularizer l1(double weight) { return Regularizer(ScaledL1(weight)); }

  const Variant& variant() const noexcept { return impl_; }
  bool is_zero() const noexcept { return std::holds_alternative<ZeroRegularizer>(impl_); }
  const ScaledL1* as_l1() const noexcept { return std::get_if<ScaledL1>(&impl_); }
  const CustomRegularizer* as_custom() const noexcept {
    return std::get_if<CustomRegularizer>(&impl_);
  }

 private:
  Variant impl_{ZeroRegularizer{}};
};

namespace detail {
inline void require_positive_gamma(double gamma) {
  if (!(gamma > 0.0)) throw ConfigError("gamma", "prox parameter must be positive");
}
}  // namespace detail

/// argmin_x r(x) + 1/(2 gamma) ||x - v||^2.
inline Vector prox_eval(const Regularizer& reg, const Eigen::Ref<const Vector>& v,
                        double gamma) {
  detail::require_positive_gamma(gamma);
  return std::visit(
      [&](const auto& r) -> Vector {
        using R = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<R, ZeroRegularizer>) {
          return v;
        } else if constexpr (std::is_same_v<R, ScaledL1>) {
          return soft_threshold(v, gamma * r.weight());
        } else {
          Vector out = r.prox(Vector(v), gamma);
          if (out.size() != v.size()) {
            throw DimensionError("custom prox returned a vector of the wrong length");
          }
          return out;
        }
      },
      reg.variant());
}

/// Tests g in the subdifferential of r at x.
inline bool subgradient_contains(const Regularizer& reg, const Eigen::Ref<const Vector>& x,
                                 const Eigen::Ref<const Vector>& g,
                                 double tol = kSubgradientTol) {
  if (x.size() != g.size()) {
    throw DimensionError("subgradient_contains: x and g differ in length");
  }
  return std::visit(
      [&](const auto& r) -> bool {
        using R = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<R, ZeroRegularizer>) {
          return g.cwiseAbs().maxCoeff() <= tol || g.size() == 0;
        } else if constexpr (std::is_same_v<R, ScaledL1>) {
          const double w = r.weight();
          for (Eigen::Index i = 0; i < x.size(); ++i) {
            if (x[i] != 0.0) {
              if (std::abs(g[i] - std::copysign(w, x[i])) > tol) return false;
            } else if (std::abs(g[i]) > w + tol) {
              return false;
            }
          }
          return true;
        } else {
          if (!r.contains_subgradient) {
            throw CapabilityError("custom regularizer has no subgradient membership test");
          }
          return r.contains_subgradient(Vector(x), Vector(g));
        }
      },
      reg.variant());
}

/// Diagonal of a selected element of the generalized Jacobian of
/// v -> prox_eval(reg, v, gamma). At |v_i| == gamma * w the flat branch (0)
/// is selected.
inline Vector prox_generalized_jacobian(const Regularizer& reg,
                                        const Eigen::Ref<const Vector>& v, double gamma) {
  detail::require_positive_gamma(gamma);
  return std::visit(
      [&](const auto& r) -> Vector {
        using R = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<R, ZeroRegularizer>) {
          return Vector::Ones(v.size());
        } else if constexpr (std::is_same_v<R, ScaledL1>) {
          const double threshold = gamma * r.weight();
          Vector d(v.size());
          for (Eigen::Index i = 0; i < v.size(); ++i) {
            d[i] = std::abs(v[i]) <= threshold ? 0.0 : 1.0;
          }
          return d;
        } else {
          if (!r.prox_derivative) {
            throw CapabilityError("custom regularizer has no prox derivative");
          }
          Vector d = r.prox_derivative(Vector(v), gamma);
          if (d.size() != v.size()) {
            throw DimensionError("custom prox derivative returned the wrong length");
          }
          return d;
        }
      },
      reg.variant());
}

}  // namespace nsmpc

#endif  // NSMPC_PROX_HPP
