#pragma once

#include <limits>
#include <vector>

#include "opdyn/core.hpp"
#include "opdyn/kernels.hpp"
#include "opdyn/mass_dynamics.hpp"
#include "opdyn/micro_solver.hpp"

namespace opdyn {

/// Index-space fields x(t, .) and m(t, .) on a common uniform grid.
struct FieldPair {
  GridFunction x;
  GridFunction m;
  double time = 0.0;

  FieldPair() = default;
  FieldPair(GridFunction x_, GridFunction m_, double t = 0.0);

  Index cells() const noexcept { return x.cells(); }
  Index dim() const noexcept { return x.dim(); }
};

/// Embedding P_c^N of an ensemble.
FieldPair embed(const AgentEnsemble& e);

struct FieldRates {
  MatrixXd dx;
  VectorXd dm;
};

/// Right-hand side of the graph-limit system with \int_I g ~ sum_j q_j g(s_j).
FieldRates rhs_graph(const FieldPair& fp, const InteractionKernel& phi, const MassLaw& law, Quadrature rule,
                     GroupForm form = GroupForm::influence_gap);

/// Same with the mass rate averaged over the cells of an N-cell grid (fp lives on a multiple of N cells).
FieldRates rhs_graph_averaged(const FieldPair& fp, const InteractionKernel& phi, const MassLaw& law, Index n);

struct GraphOptions {
  Quadrature quadrature = Quadrature::simpson;
  GroupForm group_form = GroupForm::influence_gap;
  /// Average the mass rate over an N-cell grid (0 disables).
  Index averaged_cells = 0;
  int sample_count = 51;
  std::vector<double> sample_times;
  long max_steps = 20'000'000;
  double mass_tolerance = 1e-6;
  double growth_slack = 1e-4;
  double blowup = 1e6;
  bool stability_guard = true;
  bool monitors = true;
};

struct GraphTrajectory {
  std::vector<double> times;
  std::vector<FieldPair> states;
  double max_mass_drift = 0.0;
  double min_weight = std::numeric_limits<double>::infinity();
  double max_weight = 0.0;
  double dt_max = std::numeric_limits<double>::infinity();
  long steps = 0;

  const FieldPair& back() const { return states.back(); }
};

/// Largest explicit Euler step allowed by the stability guard,
/// min(0.5 / (max m * L_phi), 0.5 / C_rate).
double stable_dt(const FieldPair& fp, const InteractionKernel& phi, const MassLaw& law, Quadrature rule);

/// Explicit Euler in time with the a-priori monitors (mass, positivity, growth, blow-up).
GraphTrajectory integrate_graph(const FieldPair& fp0, const InteractionKernel& phi, const MassLaw& law, double T,
                                double dt, const GraphOptions& opts = {});

/// Max over sample times and cells of |x_N - P_c(x^N)| + |m_N - P_c(m^N)| between
/// an Euler micro run and an Euler grid-aligned graph run from matched data.
double equivalence_check(const AgentEnsemble& e0, const InteractionKernel& phi, const MassLaw& law, double T,
                         double dt);

}  // namespace opdyn
