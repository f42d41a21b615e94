#include "opdyn/mean_field.hpp"

#include <algorithm>
#include <cmath>

namespace opdyn {

ParticleMeasure pushforward_measure(const FieldPair& fp) {
  return ParticleMeasure(fp.x.values(), fp.m.as_vector(), 1.0 / static_cast<double>(fp.cells()));
}

ParticleMeasure pushforward_measure(const FieldPair& fp, const VectorXd& q) {
  if (q.size() != fp.cells()) throw InputError("quadrature weights do not match the grid");
  return ParticleMeasure(fp.x.values(), q.cwiseProduct(fp.m.as_vector()));
}

DensityGrid bin_density(const ParticleMeasure& pm, double lo, double hi, Index n, double time) {
  if (n < 1) throw InputError("binning needs n >= 1");
  if (!(hi > lo)) throw InputError("binning domain is empty");
  if (pm.size() > 0 && pm.dim() != 1) throw MeasureError("binning is one-dimensional");
  DensityGrid dg{lo, hi, VectorXd::Zero(n), time};
  const double dx = dg.dx();
  for (Index a = 0; a < pm.size(); ++a) {
    const double x = pm.locations()(0, a);
    if (x < lo || x > hi) {
      throw InputError("atom at x=" + std::to_string(x) + " lies outside [" + std::to_string(lo) + ", " +
                       std::to_string(hi) + "]");
    }
    const auto j = std::min<Index>(static_cast<Index>(std::floor((x - lo) / dx)), n - 1);
    dg.density[j] += pm.masses()[a];
  }
  dg.density /= dx;
  return dg;
}

VectorXd velocity_field(const ParticleMeasure& pm, const InteractionKernel& phi, const VectorXd& x) {
  VectorXd v = VectorXd::Zero(x.size());
  for (Index a = 0; a < pm.size(); ++a) v += pm.masses()[a] * phi(VectorXd(pm.locations().col(a) - x));
  return v;
}

double velocity_field(const DensityGrid& dg, const InteractionKernel& phi, double x) {
  const double dx = dg.dx();
  return phi.with_scalar_profile([&](auto f) {
    double acc = 0.0;
    for (Index l = 0; l < dg.cells(); ++l) acc += dx * dg.density[l] * f(dg.center(l) - x);
    return acc;
  });
}

MatrixXd atom_velocities(const ParticleMeasure& pm, const InteractionKernel& phi) {
  const Index n = pm.size();
  const MatrixXd& x = pm.locations();
  const VectorXd& w = pm.masses();
  MatrixXd v = MatrixXd::Zero(pm.dim(), n);
  if (pm.dim() == 1) {
    phi.with_scalar_profile([&](auto f) {
      for (Index a = 0; a < n; ++a) {
        double acc = 0.0;
        for (Index b = 0; b < n; ++b) acc += w[b] * f(x(0, b) - x(0, a));
        v(0, a) = acc;
      }
      return 0;
    });
    return v;
  }
  for (Index a = 0; a < n; ++a) v.col(a) = velocity_field(pm, phi, VectorXd(x.col(a)));
  return v;
}

namespace {

VectorXd source_with_weights(const MatrixXd& x, const VectorXd& mu, const VectorXd& q, const MassLaw& law) {
  switch (law.kind()) {
    case MassLawKind::zero:
      return VectorXd::Zero(mu.size());
    case MassLawKind::group_influence:
      return field_mass_rates(law, x, mu, q, GroupForm::skew_kernel);
    case MassLawKind::psi_sk: {
      const auto& s = std::get<SkewSymmetricLaw>(law.variant());
      if (s.order > 2) throw ConfigError("source term supports orders k <= 2");
      return psi_sk_rates(s, x, mu, q);
    }
    default:
      throw ConfigError("the mean-field source needs a law of the psi_sk class, not " + law.name());
  }
}

}  // namespace

VectorXd source_term(const ParticleMeasure& pm, const MassLaw& law) {
  if (pm.size() == 0) return VectorXd();
  return source_with_weights(pm.locations(), pm.masses(), VectorXd::Ones(pm.size()), law);
}

VectorXd source_term(const DensityGrid& dg, const MassLaw& law) {
  MatrixXd c(1, dg.cells());
  for (Index j = 0; j < dg.cells(); ++j) c(0, j) = dg.center(j);
  return source_with_weights(c, dg.density, VectorXd::Constant(dg.cells(), dg.dx()), law);
}

// ---------------------------------------------------------------------------
// transport PDE

namespace {

// Operators on a fixed grid: V = dx * Phi rho and, for group influence, I = dx * |Phi_S| rho.
struct PdeOperators {
  MatrixXd phi;      // phi(c_l - c_j) at (j, l)
  MatrixXd abs_phi;  // |phi_S(c_j - c_l)| for the group-influence source
  bool factored = false;
  double dx = 0.0;
  const MassLaw* law = nullptr;
  const DensityGrid* grid = nullptr;

  VectorXd velocity(const VectorXd& rho) const { return dx * (phi * rho); }

  VectorXd source(const VectorXd& rho) const {
    if (law->kind() == MassLawKind::zero) return VectorXd::Zero(rho.size());
    if (factored) {
      const VectorXd inf = dx * (abs_phi * rho);
      const double a = dx * rho.dot(inf);
      const double mass = dx * rho.sum();
      return rho.cwiseProduct((a - mass * inf.array()).matrix());
    }
    DensityGrid g = *grid;
    g.density = rho;
    return source_term(g, *law);
  }
};

PdeOperators make_operators(const DensityGrid& dg, const InteractionKernel& phi, const MassLaw& law) {
  const Index n = dg.cells();
  PdeOperators op;
  op.dx = dg.dx();
  op.law = &law;
  op.grid = &dg;
  VectorXd c(n);
  for (Index j = 0; j < n; ++j) c[j] = dg.center(j);
  op.phi.resize(n, n);
  phi.with_scalar_profile([&](auto f) {
    for (Index l = 0; l < n; ++l)
      for (Index j = 0; j < n; ++j) op.phi(j, l) = f(c[l] - c[j]);
    return 0;
  });
  if (const auto* g = std::get_if<GroupInfluenceLaw>(&law.variant())) {
    op.factored = true;
    op.abs_phi.resize(n, n);
    g->kernel.with_scalar_profile([&](auto f) {
      for (Index l = 0; l < n; ++l)
        for (Index j = 0; j < n; ++j) op.abs_phi(j, l) = std::abs(f(c[j] - c[l]));
      return 0;
    });
  } else if (law.kind() != MassLawKind::zero) {
    // Validates the law up front; throws for laws outside the psi_sk class.
    source_term(dg, law);
  }
  return op;
}

// Heun step of length tau for d rho/dt = h[rho].
void source_step(const PdeOperators& op, VectorXd& rho, double tau) {
  if (op.law->kind() == MassLawKind::zero) return;
  const VectorXd k1 = op.source(rho);
  const VectorXd k2 = op.source(rho + tau * k1);
  rho += (0.5 * tau) * (k1 + k2);
}

// Richtmyer two-step Lax-Wendroff for F = V rho with V frozen, zero-gradient ghost cells.
void transport_step(const VectorXd& v, VectorXd& rho, double h, double dx) {
  const Index n = rho.size();
  auto r = [&](Index j) { return rho[std::clamp<Index>(j, 0, n - 1)]; };
  auto u = [&](Index j) { return v[std::clamp<Index>(j, 0, n - 1)]; };
  VectorXd flux(n + 1);  // flux(f) sits on the face between cells f-1 and f
  const double lam = h / dx;
  for (Index f = 0; f <= n; ++f) {
    const Index a = f - 1, b = f;
    const double half = 0.5 * (r(a) + r(b)) - 0.5 * lam * (u(b) * r(b) - u(a) * r(a));
    flux[f] = 0.5 * (u(a) + u(b)) * half;
  }
  for (Index j = 0; j < n; ++j) rho[j] -= lam * (flux[j + 1] - flux[j]);
}

double total_variation(const VectorXd& rho) {
  double tv = 0.0;
  for (Index j = 0; j + 1 < rho.size(); ++j) tv += std::abs(rho[j + 1] - rho[j]);
  return tv;
}

}  // namespace

PdeTrajectory solve_pde(const DensityGrid& dg0, const InteractionKernel& phi, const MassLaw& law, double T, double dt,
                        const PdeOptions& opts) {
  const Index n = dg0.cells();
  if (n < 2) throw InputError("the PDE grid needs at least two cells");
  if (!dg0.density.allFinite()) throw InputError("initial density is not finite");
  if (!(opts.cfl > 0.0 && opts.cfl <= 1.0)) throw ConfigError("CFL number must lie in (0, 1]");
  const StepPlan plan = plan_steps(T, dt, opts.sample_count, opts.sample_times, opts.max_steps);
  const double h = plan.steps > 0 ? T / static_cast<double>(plan.steps) : 0.0;
  const PdeOperators op = make_operators(dg0, phi, law);
  const double dx = dg0.dx();
  const bool conservative = law.kind() != MassLawKind::custom && law.conservative();

  PdeTrajectory tr;
  VectorXd rho = dg0.density;
  const double mass0 = dx * rho.sum();
  auto sample = [&](double t) {
    DensityGrid g{dg0.lo, dg0.hi, rho, t};
    const double tv = total_variation(rho);
    tr.times.push_back(t);
    tr.states.push_back(std::move(g));
    tr.total_variation.push_back(tv);
    tr.max_total_variation = std::max(tr.max_total_variation, tv);
  };
  sample(0.0);
  tr.min_density = rho.minCoeff();
  std::size_t next = 1;

  int level = 0;
  for (long k = 1; k <= plan.steps; ++k) {
    const double t_start = plan.time_at(k - 1, T);
    long units = 1L << level;  // sub-steps of length h / 2^level still to take
    while (units > 0) {
      const double hs = std::ldexp(h, -level);
      VectorXd trial = rho;
      source_step(op, trial, 0.5 * hs);
      const VectorXd v = op.velocity(trial);
      const double vmax = v.cwiseAbs().maxCoeff();
      if (hs * vmax > opts.cfl * dx) {
        if (level >= opts.max_halvings) {
          throw BudgetError("CFL sub-stepping exhausted at t=" + std::to_string(t_start) + " (max |V| = " +
                            std::to_string(vmax) + ")");
        }
        ++level;
        units *= 2;
        tr.max_halving_level = std::max(tr.max_halving_level, level);
        continue;
      }
      transport_step(v, trial, hs, dx);
      source_step(op, trial, 0.5 * hs);
      rho = std::move(trial);
      ++tr.substeps;
      --units;
    }
    const double t = plan.time_at(k, T);
    if (!rho.allFinite()) throw MonitorViolation("finite_density", t, -1, "density became non-finite");
    const double drift = std::abs(dx * rho.sum() - mass0);
    tr.max_mass_drift = std::max(tr.max_mass_drift, drift);
    if (conservative && drift > opts.mass_tolerance) {
      throw MonitorViolation("mass_conservation", t, -1, "|mass - mass0| = " + std::to_string(drift));
    }
    tr.min_density = std::min(tr.min_density, rho.minCoeff());
    if (next < plan.sample_steps.size() && plan.sample_steps[next] == k) {
      sample(t);
      ++next;
    }
  }
  return tr;
}

// ---------------------------------------------------------------------------
// weak form

namespace {

// Cubic B-spline on [-2, 2], maximum 2/3 at 0.
double bspline(double u) {
  const double a = std::abs(u);
  if (a >= 2.0) return 0.0;
  if (a >= 1.0) return (2.0 - a) * (2.0 - a) * (2.0 - a) / 6.0;
  return (4.0 - 6.0 * a * a + 3.0 * a * a * a) / 6.0;
}

double bspline_derivative(double u) {
  const double a = std::abs(u);
  const double sgn = u < 0.0 ? -1.0 : 1.0;
  if (a >= 2.0) return 0.0;
  if (a >= 1.0) return -sgn * 0.5 * (2.0 - a) * (2.0 - a);
  return sgn * (-2.0 * a + 1.5 * a * a);
}

}  // namespace

double TestFunction::value(double x) const { return bspline(2.0 * (x - center) / half_width); }

double TestFunction::derivative(double x) const {
  return bspline_derivative(2.0 * (x - center) / half_width) * 2.0 / half_width;
}

std::vector<TestFunction> test_function_bank(double lo, double hi) {
  if (!(hi > lo)) throw InputError("test-function bank needs a non-empty interval");
  std::vector<TestFunction> bank;
  for (double w : {0.05, 0.1, 0.2}) {
    const double step = 0.5 * w;
    const auto count = static_cast<long>(std::floor((hi - lo) / step + 1e-9));
    for (long c = 0; c <= count; ++c) bank.push_back({lo + static_cast<double>(c) * step, w});
  }
  return bank;
}

WeakResidual weak_residual(const std::vector<ParticleMeasure>& path, double dt, const InteractionKernel& phi,
                           const MassLaw& law, const std::vector<TestFunction>& tests) {
  if (!(dt > 0.0)) throw InputError("weak residual needs dt > 0");
  WeakResidual out;
  if (path.size() < 3 || tests.empty()) return out;
  for (const auto& pm : path) {
    if (pm.size() > 0 && pm.dim() != 1) throw MeasureError("weak residual is implemented for d = 1");
  }
  auto pair = [](const ParticleMeasure& pm, const TestFunction& f) {
    double acc = 0.0;
    for (Index a = 0; a < pm.size(); ++a) acc += pm.masses()[a] * f.value(pm.locations()(0, a));
    return acc;
  };
  for (std::size_t k = 1; k + 1 < path.size(); ++k) {
    const ParticleMeasure& mu = path[k];
    const MatrixXd v = atom_velocities(mu, phi);
    const VectorXd h = source_term(mu, law);
    for (std::size_t t = 0; t < tests.size(); ++t) {
      const TestFunction& f = tests[t];
      const double lhs = (pair(path[k + 1], f) - pair(path[k - 1], f)) / (2.0 * dt);
      double rhs = 0.0;
      for (Index a = 0; a < mu.size(); ++a) {
        const double x = mu.locations()(0, a);
        rhs += mu.masses()[a] * v(0, a) * f.derivative(x) + h[a] * f.value(x);
      }
      const double r = std::abs(lhs - rhs);
      if (r > out.max_residual) {
        out.max_residual = r;
        out.time = static_cast<double>(k) * dt;
        out.test_index = static_cast<int>(t);
      }
    }
  }
  return out;
}

}  // namespace opdyn
