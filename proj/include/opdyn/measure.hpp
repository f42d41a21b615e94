#pragma once

#include <variant>

#include "opdyn/core.hpp"

namespace opdyn {

/// Finite atomic measure sum_a mass_a delta(x - location_a) in R^d.
///
/// Stored canonically: atoms sorted lexicographically by location and exactly
/// co-located atoms merged, so equality is multiset equality. Merged masses are
/// summed in ascending order, which keeps the result independent of labelling.
class ParticleMeasure {
 public:
  ParticleMeasure() = default;
  /// Builds the canonical form; `scale` multiplies every merged mass once.
  ParticleMeasure(const MatrixXd& locations, const VectorXd& masses, double scale = 1.0);

  Index size() const noexcept { return masses_.size(); }
  Index dim() const noexcept { return locations_.rows(); }
  const MatrixXd& locations() const noexcept { return locations_; }
  const VectorXd& masses() const noexcept { return masses_; }
  double total_mass() const;
  /// True if some atom carries negative mass.
  bool is_signed() const noexcept { return signed_; }

  friend bool operator==(const ParticleMeasure& a, const ParticleMeasure& b) {
    return a.locations_ == b.locations_ && a.masses_ == b.masses_;
  }

 private:
  MatrixXd locations_;
  VectorXd masses_;
  bool signed_ = false;
};

/// Cell-averaged density on [lo, hi] split into n equal cells (d = 1).
struct DensityGrid {
  double lo = 0.0;
  double hi = 1.0;
  VectorXd density;
  double time = 0.0;

  Index cells() const noexcept { return density.size(); }
  double dx() const { return (hi - lo) / static_cast<double>(cells()); }
  double center(Index j) const { return lo + (static_cast<double>(j) + 0.5) * dx(); }
  double total_mass() const { return density.sum() * dx(); }
};

/// mu^N = (1/N) sum_i m_i delta(x - x_i).
ParticleMeasure empirical_measure(const AgentEnsemble& e);

struct W1Options {
  /// Largest tolerated difference in total mass.
  double mass_tolerance = 1e-8;
  /// Accept densities with negative cells (oscillating PDE output). Atomic measures are never accepted signed.
  bool allow_signed_density = false;
};

using Measure1d = std::variant<ParticleMeasure, DensityGrid>;

/// Exact 1-D Wasserstein-1 distance \int |F_a - F_b| dx for equal-mass measures.
/// Atoms are jumps of the CDF and density cells are linear ramps, so the
/// integrand is piecewise linear between merged breakpoints and is integrated exactly.
double wasserstein1(const Measure1d& a, const Measure1d& b, W1Options opts = {});

}  // namespace opdyn
