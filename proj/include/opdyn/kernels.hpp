#pragma once

#include <cmath>
#include <functional>
#include <numbers>
#include <string>

#include "opdyn/core.hpp"

namespace opdyn {

/// Axis-aligned box in opinion space.
struct Box {
  VectorXd lo;
  VectorXd hi;

  Index dim() const noexcept { return lo.size(); }
  double diameter() const { return (hi - lo).norm(); }
  static Box interval(double lo, double hi);
};

/// Smallest box containing the columns of `points`.
Box bounding_box(const MatrixXd& points);

enum class KernelKind { zero, linear, rational_radial, compact_sine, custom };

/// Interaction function phi with phi(0) = 0.
///
/// Built-ins use the radial form phi(y) = a(|y|) y:
///   linear          a = 1
///   rational_radial a(r) = 1 / (1 + r^2)
///   compact_sine    phi(y) = (y/|y|) sin^2(pi |y| / R) on 0 < |y| < R, 0 otherwise
class InteractionKernel {
 public:
  using Custom = std::function<VectorXd(const VectorXd&)>;

  static InteractionKernel zero();
  static InteractionKernel linear();
  static InteractionKernel rational_radial();
  static InteractionKernel compact_sine(double radius);
  /// Custom profile; rejected if phi(0) != 0 for a 1-D probe.
  static InteractionKernel custom(Custom phi, std::string name = "custom");

  KernelKind kind() const noexcept { return kind_; }
  double radius() const noexcept { return radius_; }
  const std::string& name() const noexcept { return name_; }

  VectorXd operator()(const VectorXd& y) const;
  double scalar(double y) const;

  /// Calls f with a cheap double -> double functor for the 1-D hot loops.
  template <typename F>
  decltype(auto) with_scalar_profile(F&& f) const {
    switch (kind_) {
      case KernelKind::zero:
        return f([](double) { return 0.0; });
      case KernelKind::linear:
        return f([](double y) { return y; });
      case KernelKind::rational_radial:
        return f([](double y) { return y / (1.0 + y * y); });
      case KernelKind::compact_sine: {
        const double r = radius_;
        const double k = std::numbers::pi / radius_;
        return f([r, k](double y) {
          const double a = std::abs(y);
          if (a >= r || a == 0.0) return 0.0;
          const double s = std::sin(k * a);
          return y > 0.0 ? s * s : -(s * s);
        });
      }
      case KernelKind::custom:
        break;
    }
    return f([this](double y) { return scalar(y); });
  }

  /// sup |phi(u - v)| over u, v in the box (analytic for built-ins, sampled for custom).
  double sup_norm(const Box& box) const;

  /// Declared Lipschitz constant (analytic for built-ins, sampled for custom).
  double lipschitz(const Box& box) const;

 private:
  InteractionKernel(KernelKind kind, double radius, std::string name, Custom custom = {})
      : kind_(kind), radius_(radius), name_(std::move(name)), custom_(std::move(custom)) {}

  KernelKind kind_ = KernelKind::zero;
  double radius_ = 0.0;
  std::string name_;
  Custom custom_;
};

/// Max difference quotient |phi(u) - phi(v)| / |u - v| over a deterministic
/// Halton pair family in the box. Each sample adds one far pair and one near
/// pair on a geometric ladder of separations, so estimates are nested in
/// `samples` and therefore non-decreasing.
double lipschitz_probe(const InteractionKernel& k, const Box& box, int samples);

/// k-th point (k >= 1) of the Halton sequence in `dim` dimensions, skipping `offset` primes.
VectorXd halton(std::uint64_t k, Index dim, Index offset = 0);

}  // namespace opdyn
