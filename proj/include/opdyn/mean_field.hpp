#pragma once

#include <limits>
#include <vector>

#include "opdyn/graph_solver.hpp"
#include "opdyn/kernels.hpp"
#include "opdyn/mass_dynamics.hpp"
#include "opdyn/measure.hpp"

namespace opdyn {

/// mu~ = \int_I m(s) delta(x - x(s)) ds; on an N-cell grid the atoms are (x_i, m_i / N).
ParticleMeasure pushforward_measure(const FieldPair& fp);
/// Same integral with the solver's quadrature: atoms (x_i, q_i m_i). Used for centre-sampled (Simpson) fields.
ParticleMeasure pushforward_measure(const FieldPair& fp, const VectorXd& q);

/// Step-function density on [lo, hi] with n cells: cell j carries (atom mass in cell) / dx.
/// The point hi belongs to the last cell. Atoms outside [lo, hi] are rejected.
DensityGrid bin_density(const ParticleMeasure& pm, double lo, double hi, Index n, double time = 0.0);

/// V[mu](x) = \int phi(y - x) dmu(y).
VectorXd velocity_field(const ParticleMeasure& pm, const InteractionKernel& phi, const VectorXd& x);
/// Midpoint quadrature per cell.
double velocity_field(const DensityGrid& dg, const InteractionKernel& phi, double x);

/// V[mu] at every atom (in canonical atom order).
MatrixXd atom_velocities(const ParticleMeasure& pm, const InteractionKernel& phi);

/// Source h[mu] for a law of the psi_sk class, in the skew-kernel form
/// (\int S(x, y_1..y_k) dmu^k) mu(x). For atomic measures the result is the
/// per-atom rate list; for densities it is a rate density per cell.
VectorXd source_term(const ParticleMeasure& pm, const MassLaw& law);
VectorXd source_term(const DensityGrid& dg, const MassLaw& law);

struct PdeOptions {
  double cfl = 0.9;
  int max_halvings = 16;
  int sample_count = 51;
  std::vector<double> sample_times;
  long max_steps = 10'000'000;
  double mass_tolerance = 1e-6;
};

struct PdeTrajectory {
  std::vector<double> times;
  std::vector<DensityGrid> states;
  std::vector<double> total_variation;  ///< sum |rho_{j+1} - rho_j| at every sample
  double max_total_variation = 0.0;
  double max_mass_drift = 0.0;
  double min_density = std::numeric_limits<double>::infinity();
  long substeps = 0;
  int max_halving_level = 0;

  const DensityGrid& back() const { return states.back(); }
};

/// d/dt rho + d/dx (V[rho] rho) = h[rho] on a fixed 1-D grid with outflow boundaries.
/// Richtmyer Lax-Wendroff in flux form with V frozen per step, the source split
/// off by Strang splitting (Heun half steps). Steps that break the CFL limit are
/// halved up to `max_halvings` times, then the run aborts with BudgetError.
PdeTrajectory solve_pde(const DensityGrid& dg0, const InteractionKernel& phi, const MassLaw& law, double T, double dt,
                        const PdeOptions& opts = {});

/// Cubic B-spline bump centred at `center`, supported on [center - half_width, center + half_width].
struct TestFunction {
  double center = 0.0;
  double half_width = 1.0;

  double value(double x) const;
  double derivative(double x) const;
};

/// Bumps of half-widths {0.05, 0.1, 0.2} with centres spaced by half a half-width across [lo, hi].
std::vector<TestFunction> test_function_bank(double lo, double hi);

struct WeakResidual {
  double max_residual = 0.0;
  double time = 0.0;
  int test_index = -1;
};

/// max over interior samples and test functions of
/// | ((mu_{k+1}, f) - (mu_{k-1}, f)) / (2 dt) - \int V[mu_k] f' dmu_k - \int f dh[mu_k] |.
WeakResidual weak_residual(const std::vector<ParticleMeasure>& path, double dt, const InteractionKernel& phi,
                           const MassLaw& law, const std::vector<TestFunction>& tests);

}  // namespace opdyn
