#include "opdyn/mass_dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace opdyn {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

bool is_integral(double v) { return std::abs(v - std::round(v)) <= 1e-9 * std::max(1.0, std::abs(v)); }

}  // namespace

void MassLaw::validate() const {
  std::visit(overloaded{
                 [](const ZeroLaw&) {},
                 [](const SkewSymmetricLaw& s) {
                   if (s.order < 1) throw ConfigError("psi_sk order must be >= 1");
                   if (s.dim < 1) throw ConfigError("psi_sk dimension must be >= 1");
                   if (!s.kernel) throw ConfigError("psi_sk law needs a kernel S");
                   const auto [a, b] = s.skew_pair;
                   if (a == b || a < 0 || b < 0 || a > s.order || b > s.order) {
                     throw ConfigError("psi_sk skew pair must name two distinct arguments in 0..k");
                   }
                 },
                 [](const GroupInfluenceLaw&) {},
                 [](const LeaderFollowerLaw& l) {
                   if (l.groups < 1) throw ConfigError("leader_follower needs groups >= 1");
                   if (!(l.leader_fraction > 0.0 && l.leader_fraction < 1.0)) {
                     throw ConfigError("leader_follower leader_fraction must lie in (0,1)");
                   }
                   if (!(l.gain > 0.0)) throw ConfigError("leader_follower gain must be positive");
                 },
                 [](const CustomLaw& c) {
                   if (!c.rates) throw ConfigError("custom law needs a rate callable");
                 },
             },
             law_);
}

std::string MassLaw::name() const {
  return std::visit(overloaded{
                        [](const ZeroLaw&) { return std::string("zero"); },
                        [](const SkewSymmetricLaw& s) { return s.name; },
                        [](const GroupInfluenceLaw&) { return std::string("group_influence"); },
                        [](const LeaderFollowerLaw&) { return std::string("leader_follower"); },
                        [](const CustomLaw& c) { return c.name; },
                    },
                    law_);
}

bool MassLaw::conservative() const noexcept {
  if (const auto* c = std::get_if<CustomLaw>(&law_)) return c->conservative;
  return true;
}

bool MassLaw::psi_sk_class() const noexcept {
  const auto k = kind();
  return k == MassLawKind::zero || k == MassLawKind::psi_sk || k == MassLawKind::group_influence;
}

int MassLaw::order() const noexcept {
  switch (kind()) {
    case MassLawKind::psi_sk:
      return std::get<SkewSymmetricLaw>(law_).order;
    case MassLawKind::group_influence:
      return 2;
    default:
      return 0;
  }
}

double MassLaw::rate_bound(const Box& box) const {
  return std::visit(overloaded{
                        [](const ZeroLaw&) { return 0.0; },
                        [](const SkewSymmetricLaw& s) { return s.bound; },
                        [&](const GroupInfluenceLaw& g) { return g.kernel.sup_norm(box); },
                        [](const LeaderFollowerLaw& l) { return l.gain; },
                        [](const CustomLaw&) { return std::numeric_limits<double>::infinity(); },
                    },
                    law_);
}

LeaderLayout leader_layout(const LeaderFollowerLaw& law, Index n) {
  if (n % law.groups != 0) {
    throw ConfigError("leader_follower: N = " + std::to_string(n) + " is not a multiple of K = " +
                      std::to_string(law.groups));
  }
  const Index per_group = n / law.groups;
  const double leaders = law.leader_fraction * static_cast<double>(per_group);
  if (!is_integral(leaders)) {
    throw ConfigError("leader_follower: r*n = " + std::to_string(leaders) + " is not a whole number for N = " +
                      std::to_string(n));
  }
  const auto rn = static_cast<Index>(std::llround(leaders));
  if (rn < 1 || rn >= per_group) throw ConfigError("leader_follower: every group needs leaders and followers");
  return {per_group, rn};
}

void MassLaw::validate_grid(Index n) const {
  if (n < 1) throw ConfigError("grid needs at least one cell");
  if (const auto* l = std::get_if<LeaderFollowerLaw>(&law_)) leader_layout(*l, n);
}

// ---------------------------------------------------------------------------
// psi_{S,k}

namespace {

void check_cost(const SkewSymmetricLaw& law, Index n, int extra) {
  const double cost = std::pow(static_cast<double>(n), law.order + extra);
  if (cost > law.cost_cap) {
    throw BudgetError("psi_sk direct summation needs " + std::to_string(cost) + " kernel calls, cap is " +
                      std::to_string(law.cost_cap));
  }
}

// m_i * sum_{j_1..j_k} prod(q_j m_j) S(x_i, x_j1, ..., x_jk), odometer over the multi-index.
double psi_sk_at(const SkewSymmetricLaw& law, Index i, const MatrixXd& x, const VectorXd& m, const VectorXd& q,
                 std::vector<double>& buf) {
  const Index n = m.size();
  const Index d = x.rows();
  const int k = law.order;
  buf.assign(static_cast<std::size_t>((k + 1) * d), 0.0);
  for (Index c = 0; c < d; ++c) buf[static_cast<std::size_t>(c)] = x(c, i);

  std::vector<Index> idx(static_cast<std::size_t>(k), 0);
  double total = 0.0;
  while (true) {
    double w = 1.0;
    for (int p = 0; p < k; ++p) {
      const Index j = idx[static_cast<std::size_t>(p)];
      w *= q[j] * m[j];
      for (Index c = 0; c < d; ++c) buf[static_cast<std::size_t>((p + 1) * d + c)] = x(c, j);
    }
    if (w != 0.0) total += w * law.kernel(std::span<const double>(buf));
    int p = k - 1;
    while (p >= 0 && ++idx[static_cast<std::size_t>(p)] == n) idx[static_cast<std::size_t>(p--)] = 0;
    if (p < 0) break;
  }
  return m[i] * total;
}

}  // namespace

VectorXd psi_sk_rates(const SkewSymmetricLaw& law, const MatrixXd& x, const VectorXd& m, const VectorXd& q) {
  if (x.rows() != law.dim) throw InputError("psi_sk law dimension does not match the opinions");
  check_cost(law, m.size(), 1);
  VectorXd out(m.size());
  std::vector<double> buf;
  for (Index i = 0; i < m.size(); ++i) out[i] = psi_sk_at(law, i, x, m, q, buf);
  return out;
}

SkewSymmetricLaw group_influence_kernel(const InteractionKernel& phi, Index dim, const Box& box) {
  SkewSymmetricLaw s;
  s.order = 2;
  s.dim = dim;
  s.skew_pair = {0, 1};
  s.name = "group_influence_S";
  s.bound = phi.sup_norm(box);
  s.lipschitz = 2.0 * phi.lipschitz(box);
  s.kernel = [phi, dim](std::span<const double> y) {
    if (dim == 1) return std::abs(phi.scalar(y[1] - y[2])) - std::abs(phi.scalar(y[0] - y[2]));
    Eigen::Map<const VectorXd> y0(y.data(), dim), y1(y.data() + dim, dim), y2(y.data() + 2 * dim, dim);
    return phi(y1 - y2).norm() - phi(y0 - y2).norm();
  };
  return s;
}

double eval_psi_sk(const MassLaw& law, Index cell, const GridFunction& x, const GridFunction& m) {
  if (x.cells() != m.cells()) throw InputError("x and m must live on the same grid");
  if (cell < 0 || cell >= m.cells()) throw InputError("cell index out of range");
  const VectorXd mv = m.as_vector();
  const VectorXd q = VectorXd::Constant(m.cells(), 1.0 / static_cast<double>(m.cells()));
  SkewSymmetricLaw s;
  if (const auto* p = std::get_if<SkewSymmetricLaw>(&law.variant())) {
    s = *p;
  } else if (const auto* g = std::get_if<GroupInfluenceLaw>(&law.variant())) {
    s = group_influence_kernel(g->kernel, x.dim(), bounding_box(x.values()));
  } else if (law.kind() == MassLawKind::zero) {
    return 0.0;
  } else {
    throw ConfigError("eval_psi_sk needs a law of the psi_sk class");
  }
  if (x.dim() != s.dim) throw InputError("psi_sk law dimension does not match the opinions");
  check_cost(s, m.cells(), 0);
  std::vector<double> buf;
  return psi_sk_at(s, cell, x.values(), mv, q, buf);
}

// ---------------------------------------------------------------------------
// group influence

namespace {

// I_i = sum_j w_j |phi(x_i - x_j)|
template <typename Weight>
VectorXd influence(const InteractionKernel& phi, const MatrixXd& x, const Weight& w) {
  const Index n = x.cols();
  VectorXd e = VectorXd::Zero(n);
  if (x.rows() == 1) {
    const double* xs = x.data();
    phi.with_scalar_profile([&](auto f) {
      for (Index i = 0; i < n; ++i) {
        double acc = 0.0;
        for (Index j = 0; j < n; ++j) acc += w(j) * std::abs(f(xs[i] - xs[j]));
        e[i] = acc;
      }
      return 0;
    });
  } else {
    for (Index i = 0; i < n; ++i) {
      double acc = 0.0;
      for (Index j = 0; j < n; ++j) acc += w(j) * phi(VectorXd(x.col(i) - x.col(j))).norm();
      e[i] = acc;
    }
  }
  return e;
}

}  // namespace

VectorXd group_influence_rates(const InteractionKernel& phi, const MatrixXd& x, const VectorXd& m) {
  const Index n = m.size();
  const double inv_n = 1.0 / static_cast<double>(n);
  const VectorXd e = influence(phi, x, [&](Index j) { return m[j]; });
  double ebar = 0.0;
  for (Index k = 0; k < n; ++k) ebar += (m[k] * inv_n) * e[k];
  VectorXd out(n);
  for (Index i = 0; i < n; ++i) out[i] = inv_n * m[i] * (ebar - e[i]);
  return out;
}

double eval_group_influence(const InteractionKernel& phi, Index i, const MatrixXd& x, const VectorXd& m) {
  if (i < 0 || i >= m.size()) throw InputError("agent index out of range");
  return group_influence_rates(phi, x, m)[i];
}

// ---------------------------------------------------------------------------
// leaders and followers

VectorXd leader_follower_rates(const LeaderFollowerLaw& law, const VectorXd& m) {
  const Index n = m.size();
  const auto layout = leader_layout(law, n);
  const double scale = law.gain / static_cast<double>(n);
  VectorXd out(n);
  for (int g = 0; g < law.groups; ++g) {
    const Index start = g * layout.group_size;
    const double leaders = m.segment(start, layout.leaders_per_group).sum();
    const double followers =
        m.segment(start + layout.leaders_per_group, layout.group_size - layout.leaders_per_group).sum();
    for (Index i = 0; i < layout.group_size; ++i) {
      const Index a = start + i;
      out[a] = i < layout.leaders_per_group ? scale * m[a] * followers : -scale * m[a] * leaders;
    }
  }
  return out;
}

double eval_leader_follower(const LeaderFollowerLaw& law, Index i, const VectorXd& m) {
  if (i < 0 || i >= m.size()) throw InputError("agent index out of range");
  return leader_follower_rates(law, m)[i];
}

// ---------------------------------------------------------------------------
// dispatch

VectorXd micro_mass_rates(const MassLaw& law, const MatrixXd& x, const VectorXd& m) {
  const Index n = m.size();
  return std::visit(
      overloaded{
          [&](const ZeroLaw&) -> VectorXd { return VectorXd::Zero(n); },
          [&](const SkewSymmetricLaw& s) -> VectorXd {
            // (1/N^k) m_i sum_{j_1..j_k} m_j1...m_jk S(...)
            if (x.rows() != s.dim) throw InputError("psi_sk law dimension does not match the opinions");
            check_cost(s, n, 1);
            const VectorXd ones = VectorXd::Ones(n);
            const double scale = std::pow(static_cast<double>(n), -s.order);
            std::vector<double> buf;
            VectorXd out(n);
            for (Index i = 0; i < n; ++i) out[i] = scale * psi_sk_at(s, i, x, m, ones, buf);
            return out;
          },
          [&](const GroupInfluenceLaw& g) -> VectorXd { return group_influence_rates(g.kernel, x, m); },
          [&](const LeaderFollowerLaw& l) -> VectorXd { return leader_follower_rates(l, m); },
          [&](const CustomLaw& c) -> VectorXd {
            VectorXd out = c.rates(x, m, VectorXd::Constant(n, 1.0 / static_cast<double>(n)));
            if (out.size() != n) throw InputError("custom law returned the wrong number of rates");
            return out;
          },
      },
      law.variant());
}

VectorXd field_mass_rates(const MassLaw& law, const MatrixXd& x, const VectorXd& m, const VectorXd& q,
                          GroupForm form) {
  const Index n = m.size();
  if (q.size() != n || x.cols() != n) throw InputError("field, weight and quadrature sizes differ");
  return std::visit(
      overloaded{
          [&](const ZeroLaw&) -> VectorXd { return VectorXd::Zero(n); },
          [&](const SkewSymmetricLaw& s) -> VectorXd { return psi_sk_rates(s, x, m, q); },
          [&](const GroupInfluenceLaw& g) -> VectorXd {
            const VectorXd inf = influence(g.kernel, x, [&](Index j) { return q[j] * m[j]; });
            double a = 0.0;
            for (Index i = 0; i < n; ++i) a += q[i] * m[i] * inf[i];
            const double mass = form == GroupForm::skew_kernel ? q.dot(m) : 1.0;
            VectorXd out(n);
            for (Index i = 0; i < n; ++i) out[i] = m[i] * (a - mass * inf[i]);
            return out;
          },
          [&](const LeaderFollowerLaw& l) -> VectorXd {
            const auto layout = leader_layout(l, n);
            VectorXd out(n);
            for (int g = 0; g < l.groups; ++g) {
              const Index start = g * layout.group_size;
              double leaders = 0.0, followers = 0.0;
              for (Index i = 0; i < layout.group_size; ++i) {
                const Index a = start + i;
                (i < layout.leaders_per_group ? leaders : followers) += q[a] * m[a];
              }
              for (Index i = 0; i < layout.group_size; ++i) {
                const Index a = start + i;
                out[a] = i < layout.leaders_per_group ? l.gain * m[a] * followers : -l.gain * m[a] * leaders;
              }
            }
            return out;
          },
          [&](const CustomLaw& c) -> VectorXd {
            VectorXd out = c.rates(x, m, q);
            if (out.size() != n) throw InputError("custom law returned the wrong number of rates");
            return out;
          },
      },
      law.variant());
}

VectorXd discretize_mass_law(const MassLaw& law, const GridFunction& x, const GridFunction& m) {
  if (x.cells() != m.cells()) throw InputError("x and m must live on the same grid");
  const Index n = m.cells();
  return field_mass_rates(law, x.values(), m.as_vector(), quadrature_weights(n, Quadrature::rectangle_grid_aligned));
}

// ---------------------------------------------------------------------------
// hypothesis probes

namespace {

// Sample N-cell states in the box: opinions from Halton points, weights in (0, 2].
template <typename Visit>
void sample_states(const Box& box, Index n, int count, const Visit& visit) {
  const Index d = box.dim();
  for (int c = 0; c < count; ++c) {
    MatrixXd x(d, n);
    VectorXd m(n);
    for (Index i = 0; i < n; ++i) {
      const auto k = static_cast<std::uint64_t>(c * n + i + 1);
      x.col(i) = box.lo + (box.hi - box.lo).cwiseProduct(halton(k, d));
      m[i] = 2.0 * (1.0 - halton(k, 1, d)[0]);
    }
    visit(x, m);
  }
}

Index probe_grid_size(const MassLaw& law) {
  if (const auto* l = std::get_if<LeaderFollowerLaw>(&law.variant())) {
    for (Index t = 2; t <= 1000; ++t) {
      const double leaders = l->leader_fraction * static_cast<double>(t);
      if (is_integral(leaders) && leaders >= 1.0 && leaders < static_cast<double>(t)) return t * l->groups;
    }
    throw ConfigError("leader_follower: no grid up to 1000 cells per group fits the leader fraction");
  }
  return 8;
}

void probe_skew(const SkewSymmetricLaw& s, const Box& box, int samples, HypothesisReport& rep) {
  const Index d = s.dim;
  const int k = s.order;
  const Index width = d * (k + 1);
  if (box.dim() != d) throw InputError("probe box dimension does not match the law");
  bool skew_ok = true;
  double bound = 0.0, lip = 0.0;
  std::vector<double> y(static_cast<std::size_t>(width)), z(y.size()), sw(y.size());
  if (width > 16) throw InputError("hypothesis probe supports (k+1)*d <= 16");
  for (int c = 1; c <= samples; ++c) {
    const auto idx = static_cast<std::uint64_t>(c);
    const VectorXd h = halton(idx, width);
    for (Index e = 0; e < width; ++e) {
      y[static_cast<std::size_t>(e)] = box.lo[e % d] + (box.hi[e % d] - box.lo[e % d]) * h[e];
    }
    const double sy = s.kernel(y);
    bound = std::max(bound, std::abs(sy));

    sw = y;
    const auto [a, b] = s.skew_pair;
    for (Index e = 0; e < d; ++e) std::swap(sw[static_cast<std::size_t>(a * d + e)], sw[static_cast<std::size_t>(b * d + e)]);
    const double defect = std::abs(sy + s.kernel(sw));
    if (defect > 1e-12 && skew_ok) {
      skew_ok = false;
      rep.witness = "S(y) + S(y with arguments " + std::to_string(a) + "," + std::to_string(b) +
                    " swapped) = " + std::to_string(defect) + " at sample " + std::to_string(c) +
                    " (y0 = " + std::to_string(y[0]) + ")";
    }

    const double delta = box.diameter() * std::ldexp(1.0, -(1 + c % 24));
    double dist = 0.0;
    // Near pair along a direction taken from a later Halton point.
    const VectorXd dir = halton(idx + static_cast<std::uint64_t>(samples) + 7, width).array() - 0.5;
    for (Index e = 0; e < width; ++e) {
      z[static_cast<std::size_t>(e)] = y[static_cast<std::size_t>(e)] + delta * dir[e];
    }
    for (int p = 0; p <= k; ++p) {
      double nrm = 0.0;
      for (Index e = 0; e < d; ++e) {
        const double diff = y[static_cast<std::size_t>(p * d + e)] - z[static_cast<std::size_t>(p * d + e)];
        nrm += diff * diff;
      }
      dist += std::sqrt(nrm);
    }
    if (dist > 0.0) lip = std::max(lip, std::abs(sy - s.kernel(z)) / dist);
  }
  rep.skew_ok = skew_ok;
  rep.bound_estimate = bound;
  rep.lipschitz_estimate = lip;
}

}  // namespace

HypothesisReport probe_hypotheses(const MassLaw& law, const Box& box, int samples) {
  if (samples < 2) throw InputError("hypothesis probe needs at least 2 samples");
  HypothesisReport rep;
  switch (law.kind()) {
    case MassLawKind::zero:
      rep.skew_ok = true;
      return rep;
    case MassLawKind::psi_sk:
      probe_skew(std::get<SkewSymmetricLaw>(law.variant()), box, samples, rep);
      break;
    case MassLawKind::group_influence:
      probe_skew(group_influence_kernel(std::get<GroupInfluenceLaw>(law.variant()).kernel, box.dim(), box), box,
                 samples, rep);
      break;
    case MassLawKind::leader_follower:
      rep.bound_estimate = std::get<LeaderFollowerLaw>(law.variant()).gain;
      break;
    case MassLawKind::custom:
      break;
  }

  // Sublinearity |psi| <= C (1 + |m|_inf) on sampled states.
  const Index n = probe_grid_size(law);
  const VectorXd q = VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  double c_psi = 0.0;
  const int states = std::max(4, samples / 32);
  sample_states(box, n, states, [&](const MatrixXd& x, const VectorXd& m) {
    const VectorXd r = field_mass_rates(law, x, m, q);
    c_psi = std::max(c_psi, r.cwiseAbs().maxCoeff() / (1.0 + m.cwiseAbs().maxCoeff()));
  });
  rep.sublinearity_estimate = c_psi;
  return rep;
}

}  // namespace opdyn
