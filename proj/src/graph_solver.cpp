#include "opdyn/graph_solver.hpp"

#include <algorithm>
#include <cmath>

namespace opdyn {

FieldPair::FieldPair(GridFunction x_, GridFunction m_, double t) : x(std::move(x_)), m(std::move(m_)), time(t) {
  if (x.cells() != m.cells()) throw InputError("x and m must live on the same grid");
  if (m.dim() != 1) throw InputError("the weight field must be scalar");
}

FieldPair embed(const AgentEnsemble& e) {
  return FieldPair(embed_piecewise(e.positions), embed_piecewise(e.weights), e.time);
}

namespace {

bool same_kernel(const InteractionKernel& a, const InteractionKernel& b) {
  return a.kind() == b.kind() && a.kind() != KernelKind::custom && a.radius() == b.radius();
}

// Position rates sum_j w_j phi(x_j - x_i); when `abs_out` is given, also
// sum_j w_j |phi(x_j - x_i)| from the same kernel evaluations (phi is odd).
void pair_sums(const InteractionKernel& phi, const MatrixXd& x, const VectorXd& w, MatrixXd& v, VectorXd* abs_out) {
  const Index n = x.cols();
  const Index d = x.rows();
  v.setZero(d, n);
  if (abs_out) abs_out->setZero(n);
  if (d == 1) {
    const double* xs = x.data();
    phi.with_scalar_profile([&](auto f) {
      for (Index i = 0; i < n; ++i) {
        double acc = 0.0, acc_abs = 0.0;
        if (abs_out) {
          for (Index j = 0; j < n; ++j) {
            const double p = f(xs[j] - xs[i]);
            acc += w[j] * p;
            acc_abs += w[j] * std::abs(p);
          }
          (*abs_out)[i] = acc_abs;
        } else {
          for (Index j = 0; j < n; ++j) acc += w[j] * f(xs[j] - xs[i]);
        }
        v(0, i) = acc;
      }
      return 0;
    });
    return;
  }
  for (Index i = 0; i < n; ++i) {
    double acc_abs = 0.0;
    for (Index j = 0; j < n; ++j) {
      const VectorXd p = phi(VectorXd(x.col(j) - x.col(i)));
      v.col(i) += w[j] * p;
      acc_abs += w[j] * p.norm();
    }
    if (abs_out) (*abs_out)[i] = acc_abs;
  }
}

void check_rates(const FieldRates& r) {
  for (Index i = 0; i < r.dm.size(); ++i) {
    if (!r.dx.col(i).allFinite() || !std::isfinite(r.dm[i])) {
      throw InputError("non-finite graph-limit rate in cell " + std::to_string(i));
    }
  }
}

FieldRates rhs_with_weights(const FieldPair& fp, const InteractionKernel& phi, const MassLaw& law, const VectorXd& q,
                            GroupForm form) {
  const MatrixXd& x = fp.x.values();
  const VectorXd m = fp.m.as_vector();
  const Index n = m.size();
  const VectorXd w = q.cwiseProduct(m);
  FieldRates r;
  const auto* g = std::get_if<GroupInfluenceLaw>(&law.variant());
  if (g && same_kernel(g->kernel, phi)) {
    VectorXd inf(n);
    pair_sums(phi, x, w, r.dx, &inf);
    double a = 0.0;
    for (Index i = 0; i < n; ++i) a += q[i] * m[i] * inf[i];
    const double mass = form == GroupForm::skew_kernel ? q.dot(m) : 1.0;
    r.dm.resize(n);
    for (Index i = 0; i < n; ++i) r.dm[i] = m[i] * (a - mass * inf[i]);
  } else {
    pair_sums(phi, x, w, r.dx, nullptr);
    r.dm = field_mass_rates(law, x, m, q, form);
  }
  check_rates(r);
  return r;
}

}  // namespace

FieldRates rhs_graph(const FieldPair& fp, const InteractionKernel& phi, const MassLaw& law, Quadrature rule,
                     GroupForm form) {
  return rhs_with_weights(fp, phi, law, quadrature_weights(fp.cells(), rule), form);
}

FieldRates rhs_graph_averaged(const FieldPair& fp, const InteractionKernel& phi, const MassLaw& law, Index n) {
  if (n < 1 || fp.cells() % n != 0) {
    throw ConfigError("grid of " + std::to_string(fp.cells()) + " cells is not a multiple of N = " +
                      std::to_string(n));
  }
  FieldRates r = rhs_graph(fp, phi, law, Quadrature::rectangle_grid_aligned);
  const Index f = fp.cells() / n;
  if (f == 1) return r;
  for (Index b = 0; b < n; ++b) {
    double s = 0.0;
    for (Index c = 0; c < f; ++c) s += r.dm[b * f + c];
    r.dm.segment(b * f, f).setConstant(s / static_cast<double>(f));
  }
  return r;
}

namespace {

double rate_constant(const FieldPair& fp, const MassLaw& law, const VectorXd& q) {
  const double M0 = q.dot(fp.m.as_vector().cwiseAbs());
  switch (law.kind()) {
    case MassLawKind::zero:
    case MassLawKind::custom:
      return 0.0;
    case MassLawKind::leader_follower:
      return law.rate_bound(Box{}) * M0;
    default:
      return std::pow(M0, law.order()) * law.rate_bound(bounding_box(fp.x.values()));
  }
}

}  // namespace

double stable_dt(const FieldPair& fp, const InteractionKernel& phi, const MassLaw& law, Quadrature rule) {
  const VectorXd q = quadrature_weights(fp.cells(), rule);
  const double lip = phi.lipschitz(bounding_box(fp.x.values()));
  const double mmax = fp.m.values().cwiseAbs().maxCoeff();
  double dt = std::numeric_limits<double>::infinity();
  if (lip * mmax > 0.0) dt = std::min(dt, 0.5 / (mmax * lip));
  const double c = rate_constant(fp, law, q);
  if (c > 0.0) dt = std::min(dt, 0.5 / c);
  return dt;
}

GraphTrajectory integrate_graph(const FieldPair& fp0, const InteractionKernel& phi, const MassLaw& law, double T,
                                double dt, const GraphOptions& opts) {
  const Index n = fp0.cells();
  law.validate_grid(n);
  const StepPlan plan = plan_steps(T, dt, opts.sample_count, opts.sample_times, opts.max_steps);
  const double h = plan.steps > 0 ? T / static_cast<double>(plan.steps) : 0.0;
  const Quadrature rule = opts.averaged_cells > 0 ? Quadrature::rectangle_grid_aligned : opts.quadrature;
  const VectorXd q = quadrature_weights(n, rule);

  GraphTrajectory tr;
  tr.steps = plan.steps;
  if (opts.stability_guard && plan.steps > 0) {
    tr.dt_max = stable_dt(fp0, phi, law, rule);
    if (h > tr.dt_max) {
      throw ConfigError("time step " + std::to_string(h) + " exceeds the stability bound " +
                        std::to_string(tr.dt_max));
    }
  }

  const VectorXd m0 = fp0.m.as_vector();
  const double M0 = q.dot(m0);
  const bool positive = (m0.array() > 0.0).all();
  const bool check_mass = opts.monitors && law.conservative();
  const bool check_pos = opts.monitors && law.psi_sk_class() && positive;
  double growth_rate = 0.0;
  bool check_growth = false;
  if (check_pos) {
    const double sbar = law.rate_bound(bounding_box(fp0.x.values()));
    if ((law.kind() != MassLawKind::psi_sk || sbar > 0.0) && std::isfinite(sbar)) {
      check_growth = true;
      growth_rate = std::pow(M0, law.order()) * sbar;
    }
  }

  MatrixXd x = fp0.x.values();
  VectorXd m = m0;
  tr.times.push_back(0.0);
  tr.states.push_back(FieldPair(fp0.x, fp0.m, 0.0));
  tr.min_weight = m.minCoeff();
  tr.max_weight = m.maxCoeff();
  std::size_t next = 1;

  for (long k = 1; k <= plan.steps; ++k) {
    const FieldPair cur(GridFunction(x), GridFunction::scalar(m), plan.time_at(k - 1, T));
    const FieldRates r = opts.averaged_cells > 0 ? rhs_graph_averaged(cur, phi, law, opts.averaged_cells)
                                                 : rhs_with_weights(cur, phi, law, q, opts.group_form);
    x += h * r.dx;
    m += h * r.dm;
    const double t = plan.time_at(k, T);

    if (!x.allFinite() || !m.allFinite() || x.cwiseAbs().maxCoeff() > opts.blowup ||
        m.cwiseAbs().maxCoeff() > opts.blowup) {
      throw MonitorViolation("instability", t, -1, "field magnitude exceeded " + std::to_string(opts.blowup));
    }
    const double drift = std::abs(q.dot(m) - M0);
    tr.max_mass_drift = std::max(tr.max_mass_drift, drift);
    if (check_mass && drift > opts.mass_tolerance) {
      throw MonitorViolation("mass_conservation", t, -1, "|int m - M0| = " + std::to_string(drift));
    }
    for (Index i = 0; i < n; ++i) {
      if (check_pos && !(m[i] > 0.0)) {
        throw MonitorViolation("positivity", t, static_cast<long>(i), "weight " + std::to_string(m[i]));
      }
      if (check_growth && m[i] > m0[i] * std::exp(growth_rate * t) * (1.0 + opts.growth_slack)) {
        throw MonitorViolation("growth_bound", t, static_cast<long>(i), "weight " + std::to_string(m[i]));
      }
    }
    tr.min_weight = std::min(tr.min_weight, m.minCoeff());
    tr.max_weight = std::max(tr.max_weight, m.maxCoeff());

    if (next < plan.sample_steps.size() && plan.sample_steps[next] == k) {
      FieldPair s(GridFunction(x), GridFunction::scalar(m), t);
      if (opts.stability_guard) {
        const double bound = stable_dt(s, phi, law, rule);
        tr.dt_max = std::min(tr.dt_max, bound);
        if (h > bound) {
          throw MonitorViolation("stability_guard", t, -1, "step exceeds the bound " + std::to_string(bound));
        }
      }
      tr.times.push_back(t);
      tr.states.push_back(std::move(s));
      ++next;
    }
  }
  return tr;
}

double equivalence_check(const AgentEnsemble& e0, const InteractionKernel& phi, const MassLaw& law, double T,
                         double dt) {
  MicroOptions mo;
  mo.method = Stepper::euler;
  mo.sample_count = 0;
  const Trajectory micro = integrate(e0, phi, law, T, dt, mo);

  GraphOptions go;
  go.averaged_cells = e0.size();
  go.sample_count = 0;
  go.stability_guard = false;
  const GraphTrajectory graph = integrate_graph(embed(e0), phi, law, T, dt, go);

  double dev = 0.0;
  for (std::size_t k = 0; k < micro.times.size(); ++k) {
    const AgentEnsemble& a = micro.states[k];
    const FieldPair& b = graph.states[k];
    for (Index i = 0; i < a.size(); ++i) {
      const double d = (a.positions.col(i) - b.x.cell(i)).norm() + std::abs(a.weights[i] - b.m.cell(i)[0]);
      dev = std::max(dev, d);
    }
  }
  return dev;
}

}  // namespace opdyn
