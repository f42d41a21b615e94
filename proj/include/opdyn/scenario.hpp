#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "opdyn/core.hpp"
#include "opdyn/graph_solver.hpp"
#include "opdyn/kernels.hpp"
#include "opdyn/mass_dynamics.hpp"
#include "opdyn/measure.hpp"

namespace opdyn {

struct KernelSpec {
  std::string kind = "rational_radial";  ///< zero | linear | rational_radial | compact_sine
  double radius = 0.0;                   ///< compact_sine only
};

struct MassLawSpec {
  std::string kind = "zero";  ///< zero | group_influence | leader_follower | psi_sk
  int groups = 1;
  double leader_fraction = 0.1;
  double gain = 1.0;
  std::string skew_kernel;  ///< psi_sk only: built-in S ("sine_difference")
};

/// Initial profile on I = [0,1]: a built-in name, a constant, or a table of cell values.
struct ProfileSpec {
  std::string builtin;
  double constant = 0.0;
  std::vector<double> table;
  bool is_constant = false;
};

struct InitialSpec {
  ProfileSpec x;
  ProfileSpec m;
  Index agents = 20;  ///< agent count for single microscopic runs
};

struct PdeSpec {
  double padding = 0.25;
  Index n = 200;
  double cfl = 0.9;
};

/// Tolerances and pass thresholds; every field may be overridden in the scenario file.
struct Tolerances {
  double mass_micro_per_agent = 1e-8;
  double mass_graph = 1e-6;
  double mass_pde = 1e-6;
  double indistinguishability = 1e-7;
  double equal_position = 1e-10;
  double growth_slack_micro = 1e-6;
  double growth_slack_graph = 1e-4;
  double sweep_slack = 0.10;
  double final_error_factor = 2.0;
  double equivalence = 1e-12;
  double subordination_w1 = 0.05;
  double weak_residual_drop = 0.40;
};

struct Scenario {
  std::string name;
  Index dimension = 1;
  KernelSpec kernel;
  MassLawSpec mass_law;
  InitialSpec initial;
  double T = 1.0;
  double dt = 1e-3;
  std::vector<Index> N_list;
  PdeSpec pde;
  Tolerances tolerances;

  InteractionKernel make_kernel() const;
  MassLaw make_law() const;
  /// Opinion and (unit-mass) weight profiles on [0,1].
  ScalarProfile x_profile() const;
  ScalarProfile m_profile() const;
};

/// Parses and validates a scenario; schema errors name the offending field.
Scenario load_scenario(const std::filesystem::path& path);
Scenario parse_scenario(const std::string& json_text);

/// Pre-flight checks: built-ins exist, every N satisfies the law's layout constraints.
void validate_scenario(const Scenario& sc);

/// P_d projection of the initial data onto N agents; weights rescaled so that sum m = N exactly.
AgentEnsemble initial_ensemble(const Scenario& sc, Index n);

/// Graph-limit initial fields on n cells: cell averages (rectangle rule) or
/// centre samples (Simpson), with \int m = 1 under the solver's own quadrature.
FieldPair initial_fields(const Scenario& sc, Index n, Quadrature rule);

/// Truncated opinion domain [min x0 - padding, max x0 + padding].
std::pair<double, double> pde_domain(const Scenario& sc);

/// mu_0 = \int m_0 delta(x - x_0(s)) ds binned on the PDE grid (fine pushforward, 64 sub-cells per PDE cell).
DensityGrid initial_density(const Scenario& sc);

}  // namespace opdyn
