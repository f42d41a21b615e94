#pragma once

#include <limits>
#include <string>
#include <vector>

#include "opdyn/core.hpp"
#include "opdyn/kernels.hpp"
#include "opdyn/mass_dynamics.hpp"
#include "opdyn/measure.hpp"

namespace opdyn {

enum class Stepper { rk4, euler };

/// Sampled solution of the agent system. `states[k]` is the ensemble at `times[k]`.
struct Trajectory {
  std::vector<double> times;
  std::vector<AgentEnsemble> states;
  double max_abs_position = 0.0;  ///< recorded X-bar over every accepted step
  double max_weight = 0.0;        ///< recorded M-bar over every accepted step
  double max_mass_drift = 0.0;    ///< max |sum m(t) - sum m(0)|
  double min_weight = std::numeric_limits<double>::infinity();
  long steps = 0;

  const AgentEnsemble& back() const { return states.back(); }
};

struct MicroRates {
  MatrixXd dx;
  VectorXd dm;
};

struct MicroOptions {
  Stepper method = Stepper::rk4;
  /// Number of uniform sample instants on [0, T]; 0 keeps every step.
  int sample_count = 51;
  /// Explicit sample instants (must lie on the step grid); overrides sample_count when non-empty.
  std::vector<double> sample_times;
  long max_steps = 20'000'000;
  double mass_tolerance_per_agent = 1e-8;
  double growth_slack = 1e-6;
  bool monitors = true;
};

/// dx_i/dt = (1/N) sum_j m_j phi(x_j - x_i), dm_i/dt = psi_i^(N).
MicroRates rhs_micro(const AgentEnsemble& e, const InteractionKernel& phi, const MassLaw& law);

/// Fixed-step integration with the conservation, positivity and growth monitors.
/// Monitor failures throw MonitorViolation; too many steps throw BudgetError.
Trajectory integrate(const AgentEnsemble& e0, const InteractionKernel& phi, const MassLaw& law, double T, double dt,
                     const MicroOptions& opts = {});

/// Step count and sample step indices shared by the fixed-step solvers.
struct StepPlan {
  long steps = 0;
  std::vector<long> sample_steps;
  double time_at(long k, double T) const {
    return k == steps ? T : T * static_cast<double>(k) / static_cast<double>(steps);
  }
};
StepPlan plan_steps(double T, double dt, int sample_count, const std::vector<double>& sample_times, long max_steps);

// ---------------------------------------------------------------------------
// indistinguishability

enum class MassSplit { uniform, all_on_one, alternating_halves };

const char* to_string(MassSplit s);

struct IndistinguishabilityVerdict {
  bool preserved = true;
  double time = 0.0;         ///< first violating sample time
  Index index = -1;          ///< agent index of the first violation
  std::string witness;       ///< which output equality failed
  double max_deviation = 0.0;
  /// Largest |x_i - x_j| over pairs of J within one run (equal positions persist).
  double max_equal_position_gap = 0.0;
};

struct IndistinguishabilityOptions {
  double tolerance = 1e-7;
  MicroOptions integrator{};
};

/// Builds two initial states from `base` that agree everywhere except in how
/// the total J-mass is split (split_a versus split_b), with every agent of J
/// moved to the position of J's first member, integrates both and compares
/// the four output equalities at every sample time.
IndistinguishabilityVerdict indistinguishability_check(const AgentEnsemble& base, const InteractionKernel& phi,
                                                       const MassLaw& law, const std::vector<Index>& J,
                                                       MassSplit split_a, MassSplit split_b, double T, double dt,
                                                       const IndistinguishabilityOptions& opts = {});

/// The J-masses of `m` redistributed according to `split`, keeping their sum.
VectorXd split_masses(const VectorXd& m, const std::vector<Index>& J, MassSplit split);

// ---------------------------------------------------------------------------
// empirical-measure invariances

struct InvarianceVerdict {
  bool identical = false;  ///< canonical measures compare equal
  double distance = 0.0;   ///< W1 between the two measures (d = 1)
};

/// Compare the empirical measures of two ensembles.
InvarianceVerdict empirical_invariance_check(const AgentEnsemble& a, const AgentEnsemble& b);

/// Relabel agents: agent k of the result is agent perm[k] of `e`.
InvarianceVerdict empirical_invariance_check(const AgentEnsemble& e, const std::vector<Index>& perm);

/// Replace each group of exactly co-located agents by one atom carrying the summed mass
/// (the scale 1/N of the original ensemble is kept). Throws InputError for non-co-located groups.
InvarianceVerdict empirical_invariance_check(const AgentEnsemble& e, const std::vector<std::vector<Index>>& groups);

}  // namespace opdyn
