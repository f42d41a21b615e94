#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>

#include "opdyn/core.hpp"
#include "opdyn/kernels.hpp"

namespace opdyn {

/// S : (R^d)^{k+1} -> R. The k+1 points arrive flattened, point p occupying
/// entries [p*d, (p+1)*d).
using SkewKernelFn = std::function<double(std::span<const double>)>;

/// psi_{S,k}(s, x, m) = m(s) \int_{I^k} m(s_1)...m(s_k) S(x(s), x(s_1), ..., x(s_k)).
struct SkewSymmetricLaw {
  int order = 1;
  Index dim = 1;
  SkewKernelFn kernel;
  double bound = 0.0;      ///< declared sup |S|
  double lipschitz = 0.0;  ///< declared L_S
  std::pair<int, int> skew_pair{0, 1};
  /// Accept the law on the weaker "integral of psi vanishes" property (checked on grid sums only).
  bool integral_zero_opt_in = false;
  std::string name = "psi_sk";
  /// Direct summation costs N^{k+1} kernel calls; larger requests throw BudgetError.
  double cost_cap = 2.0e8;
};

/// psi_i = (1/N) m_i (ebar - e_i), e_i = sum_j m_j |phi(x_i - x_j)|, ebar = sum_k (m_k/N) e_k.
struct GroupInfluenceLaw {
  InteractionKernel kernel = InteractionKernel::zero();
};

/// K groups; the first r n cells of each group are leaders. Leaders gain
/// beta m_i (follower mass), followers lose beta m_i (leader mass).
struct LeaderFollowerLaw {
  int groups = 1;
  double leader_fraction = 0.1;
  double gain = 1.0;
};

/// Arbitrary rates; receives positions, weights and quadrature weights.
struct CustomLaw {
  std::function<VectorXd(const MatrixXd&, const VectorXd&, const VectorXd&)> rates;
  bool conservative = false;
  std::string name = "custom";
};

struct ZeroLaw {};

enum class MassLawKind { zero, psi_sk, group_influence, leader_follower, custom };

class MassLaw {
 public:
  using Variant = std::variant<ZeroLaw, SkewSymmetricLaw, GroupInfluenceLaw, LeaderFollowerLaw, CustomLaw>;

  MassLaw() = default;
  template <typename Law>
    requires std::is_constructible_v<Variant, Law>
  MassLaw(Law law) : law_(std::move(law)) {
    validate();
  }

  MassLawKind kind() const noexcept { return static_cast<MassLawKind>(law_.index()); }
  const Variant& variant() const noexcept { return law_; }
  std::string name() const;

  /// Total mass is conserved (sum of rates vanishes). Group influence relies on unit total mass.
  bool conservative() const noexcept;
  /// Member of the psi_{S,k} class (preserves indistinguishability).
  bool psi_sk_class() const noexcept;
  /// Order k of the psi_{S,k} form (0 for the zero law).
  int order() const noexcept;
  /// Declared bound S-bar on the opinion box (used for the growth monitor and stability guard).
  double rate_bound(const Box& box) const;

  /// Throws ConfigError if the law cannot be laid out on n agents / cells.
  void validate_grid(Index n) const;

 private:
  void validate() const;
  Variant law_ = ZeroLaw{};
};

/// Rates dm_i/dt of the microscopic system, written with the discrete formulas
/// (1/N^k sums, the factored group influence, the leader/follower sums).
VectorXd micro_mass_rates(const MassLaw& law, const MatrixXd& x, const VectorXd& m);

enum class GroupForm {
  influence_gap,  ///< m(s) (ebar - e(s)): the graph-limit formula, conservative when total mass is 1
  skew_kernel     ///< psi_{S,2} with S = |phi(y1 - y2)| - |phi(y0 - y2)|: conservative for any total mass
};

/// psi(s_i, x, m) of the index-space law with \int_I g ~ sum_j q_j g_j.
/// With q_j = 1/N and cell-constant fields this is the cell average that defines psi_i^(N).
VectorXd field_mass_rates(const MassLaw& law, const MatrixXd& x, const VectorXd& m, const VectorXd& q,
                          GroupForm form = GroupForm::influence_gap);

/// psi_{S,k}(s, x, m) at cell `cell` by direct tensor summation over the grid.
/// Accepts psi_sk laws and group influence (through its S kernel).
double eval_psi_sk(const MassLaw& law, Index cell, const GridFunction& x, const GridFunction& m);
VectorXd psi_sk_rates(const SkewSymmetricLaw& law, const MatrixXd& x, const VectorXd& m, const VectorXd& q);

double eval_group_influence(const InteractionKernel& phi, Index i, const MatrixXd& x, const VectorXd& m);
VectorXd group_influence_rates(const InteractionKernel& phi, const MatrixXd& x, const VectorXd& m);

double eval_leader_follower(const LeaderFollowerLaw& law, Index i, const VectorXd& m);
VectorXd leader_follower_rates(const LeaderFollowerLaw& law, const VectorXd& m);

/// psi_i^(N) = N \int_{cell i} psi(s, x_N, m_N) ds for cell-constant fields.
VectorXd discretize_mass_law(const MassLaw& law, const GridFunction& x, const GridFunction& m);

/// S(y0, y1, y2) = |phi(y1 - y2)| - |phi(y0 - y2)|, skew in (0, 1).
SkewSymmetricLaw group_influence_kernel(const InteractionKernel& phi, Index dim, const Box& box);

/// Leader/follower layout on n cells: group index and leader flag for each cell.
struct LeaderLayout {
  Index group_size = 0;
  Index leaders_per_group = 0;
};
LeaderLayout leader_layout(const LeaderFollowerLaw& law, Index n);

struct HypothesisReport {
  std::optional<bool> skew_ok;  ///< empty when the law has no skew-symmetry claim
  double bound_estimate = 0.0;
  double lipschitz_estimate = 0.0;
  double sublinearity_estimate = 0.0;
  std::string witness;  ///< description of the first violating sample, if any
};

/// Sampling probes for the hypotheses on psi; estimates, not certificates.
HypothesisReport probe_hypotheses(const MassLaw& law, const Box& box, int samples = 512);

}  // namespace opdyn
