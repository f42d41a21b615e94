#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "opdyn/graph_solver.hpp"
#include "opdyn/mean_field.hpp"
#include "opdyn/micro_solver.hpp"
#include "opdyn/scenario.hpp"

namespace opdyn {

// ---------------------------------------------------------------------------
// small analysis helpers

/// Number of groups after sorting 1-D positions and cutting at gaps larger than `gap`.
int count_clusters(const VectorXd& positions, double gap);

/// Interior local maxima of a sequence; a plateau counts once and only if both neighbours are lower.
int count_local_maxima(const VectorXd& v);

/// Gap used to separate clusters: the kernel radius for compact kernels, else 0.01.
double cluster_gap(const Scenario& sc);

// ---------------------------------------------------------------------------
// reference graph-limit run shared by the sweep and the subordination check

struct ReferenceRun {
  Index cells = 0;
  double dt = 0.0;
  GraphTrajectory trajectory;
};

/// Grid-aligned Euler run on N_ref = 4 max(N_list) cells with dt / 4 and P_d initial data, 51 samples.
ReferenceRun compute_reference(const Scenario& sc, const std::vector<Index>& n_list, double dt);

// ---------------------------------------------------------------------------
// convergence sweep

struct SweepRow {
  Index N = 0;
  double err_x = 0.0;   ///< sup over samples of || P_c x^N - x_ref ||_{L2}
  double err_m = 0.0;
  double proj_x = 0.0;  ///< || P_c P_d x0 - x0 ||_{L2}
  double proj_m = 0.0;
  double wall_seconds = 0.0;
};

struct SweepReport {
  std::string scenario;
  Index n_ref = 0;
  double dt = 0.0;
  double dt_ref = 0.0;
  std::vector<SweepRow> rows;
  bool monotone_x = true;
  bool monotone_m = true;
  bool final_x_ok = true;
  bool final_m_ok = true;

  bool passed() const { return monotone_x && monotone_m && final_x_ok && final_m_ok; }
};

struct SweepOptions {
  std::vector<Index> n_list;  ///< empty: the scenario's N_list
  double dt = 0.0;            ///< 0: the scenario's dt
  const ReferenceRun* reference = nullptr;
};

SweepReport run_convergence_sweep(const Scenario& sc, const SweepOptions& opts = {});

// ---------------------------------------------------------------------------
// subordination

struct SubordinationReport {
  struct MicroRow {
    Index N = 0;
    double w1_final = 0.0;  ///< W1(empirical micro, pushforward reference) at t = T
    double w1_max = 0.0;    ///< max over the samples
  };
  struct PdeRow {
    double t = 0.0;
    double w1 = 0.0;  ///< W1(binned pushforward, PDE density)
  };

  std::string scenario;
  std::vector<MicroRow> micro;
  bool micro_decreasing = true;

  Index coarse_N = 0, fine_N = 0;
  double coarse_dt = 0.0, fine_dt = 0.0;
  double residual_coarse = 0.0, residual_fine = 0.0;
  bool residual_ok = true;

  Index graph_N = 0;
  Index pde_n = 0;
  std::vector<PdeRow> pde;
  double pde_mass_drift = 0.0;
  double pde_min_density = 0.0;
  double pde_max_total_variation = 0.0;
  bool pde_ok = true;

  bool passed() const { return micro_decreasing && residual_ok && pde_ok; }
};

struct SubordinationOptions {
  std::vector<Index> n_list;
  double dt = 0.0;
  Index pde_n = 0;  ///< 0: the scenario's pde.n
  const ReferenceRun* reference = nullptr;
};

/// Throws ConfigError for laws outside the psi_sk class (no mean-field reading without indistinguishability).
SubordinationReport run_subordination_check(const Scenario& sc, const SubordinationOptions& opts = {});

/// Comparison instants {0.3 T, T} used by the PDE leg (t = 0.45 and 1.5 for T = 1.5).
std::vector<double> subordination_times(double T);

// ---------------------------------------------------------------------------
// indistinguishability audit

struct AuditTrial {
  std::vector<Index> J;
  MassSplit split_a = MassSplit::uniform;
  MassSplit split_b = MassSplit::uniform;
  IndistinguishabilityVerdict verdict;
};

struct AuditReport {
  std::string scenario;
  bool expect_preserved = true;
  std::vector<AuditTrial> trials;
  int preserved = 0;
  int violated = 0;
  double max_equal_position_gap = 0.0;
  double equal_position_tolerance = 1e-10;

  bool passed() const;
};

struct AuditOptions {
  double dt = 0.0;
  double T = -1.0;  ///< negative: the scenario's T
};

/// Deterministic J / mass-split family; trial t uses |J| = 2 + t mod 3, every other
/// trial straddles the leader/follower boundary (or the middle index for other laws).
std::vector<AuditTrial> audit_family(const Scenario& sc, Index n, int trials);

AuditReport run_indistinguishability_audit(const Scenario& sc, int trials, const AuditOptions& opts = {});

// ---------------------------------------------------------------------------
// single runs and figure data

enum class Level { micro, graph, pde };

struct SimulateOptions {
  double dt = 0.0;
  Index grid = 0;  ///< cells for the graph and PDE levels (0: agents / pde.n)
  std::optional<std::filesystem::path> out_dir;
};

struct SimulationSummary {
  std::vector<std::string> lines;  ///< deterministic key=value lines
  std::vector<std::filesystem::path> files;
};

SimulationSummary simulate(const Scenario& sc, Level level, const SimulateOptions& opts);

struct FigureOptions {
  std::filesystem::path out_dir = ".";
  double dt = 0.0;
  Index grid = 0;  ///< graph-limit cells (default 100)
};

/// Writes `<scenario>_<figure>_<series>.csv` files and returns their paths.
std::vector<std::filesystem::path> emit_figure_data(const Scenario& sc, const std::string& figure,
                                                    const FigureOptions& opts);

// ---------------------------------------------------------------------------
// text reports (deterministic; no timings)

std::string describe(const SweepReport& r);
std::string describe(const SubordinationReport& r);
std::string describe(const AuditReport& r);

}  // namespace opdyn
