#include "opdyn/micro_solver.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace opdyn {

MicroRates rhs_micro(const AgentEnsemble& e, const InteractionKernel& phi, const MassLaw& law) {
  const Index n = e.size();
  const Index d = e.dim();
  const MatrixXd& x = e.positions;
  const VectorXd& m = e.weights;
  const double inv_n = 1.0 / static_cast<double>(n);

  MicroRates r{MatrixXd::Zero(d, n), VectorXd()};
  if (d == 1) {
    const double* xs = x.data();
    phi.with_scalar_profile([&](auto f) {
      for (Index i = 0; i < n; ++i) {
        double acc = 0.0;
        for (Index j = 0; j < n; ++j) acc += m[j] * f(xs[j] - xs[i]);
        r.dx(0, i) = inv_n * acc;
      }
      return 0;
    });
  } else {
    for (Index i = 0; i < n; ++i) {
      VectorXd acc = VectorXd::Zero(d);
      for (Index j = 0; j < n; ++j) acc += m[j] * phi(VectorXd(x.col(j) - x.col(i)));
      r.dx.col(i) = inv_n * acc;
    }
  }
  r.dm = micro_mass_rates(law, x, m);
  for (Index i = 0; i < n; ++i) {
    if (!r.dx.col(i).allFinite()) throw InputError("non-finite opinion rate for agent " + std::to_string(i));
    if (!std::isfinite(r.dm[i])) throw InputError("non-finite weight rate for agent " + std::to_string(i));
  }
  return r;
}

StepPlan plan_steps(double T, double dt, int sample_count, const std::vector<double>& sample_times, long max_steps) {
  if (!(T >= 0.0) || !std::isfinite(T)) throw ConfigError("horizon T must be finite and >= 0");
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("time step must be positive");
  StepPlan plan;
  if (T > 0.0) {
    const double ratio = T / dt;
    plan.steps = static_cast<long>(std::ceil(ratio - 1e-9 * ratio));
    if (plan.steps < 1) plan.steps = 1;
  }
  if (plan.steps > max_steps) {
    throw BudgetError("integration needs " + std::to_string(plan.steps) + " steps, budget is " +
                      std::to_string(max_steps));
  }
  std::set<long> ks{0, plan.steps};
  if (!sample_times.empty()) {
    for (double t : sample_times) {
      if (t < 0.0 || t > T * (1.0 + 1e-12)) throw ConfigError("sample time outside [0, T]");
      const long k = plan.steps == 0 ? 0 : std::lround(t / T * static_cast<double>(plan.steps));
      if (std::abs(plan.time_at(k, T) - t) > 1e-9 * std::max(1.0, T)) {
        throw ConfigError("sample time " + std::to_string(t) + " is not on the step grid");
      }
      ks.insert(k);
    }
  } else if (sample_count == 0) {
    for (long k = 0; k <= plan.steps; ++k) ks.insert(k);
  } else {
    const long s = std::max(2, sample_count);
    for (long j = 0; j < s; ++j) {
      ks.insert(std::lround(static_cast<double>(j) * static_cast<double>(plan.steps) / static_cast<double>(s - 1)));
    }
  }
  plan.sample_steps.assign(ks.begin(), ks.end());
  return plan;
}

namespace {

struct MicroMonitors {
  bool mass = false;
  bool positivity = false;
  bool growth = false;
  double mass0 = 0.0;
  double mass_tol = 0.0;
  double rate = 0.0;  // M0^k S-bar
  double slack = 0.0;
  VectorXd m0;

  void check(const VectorXd& m, double t, Trajectory& tr) const {
    const double drift = std::abs(m.sum() - mass0);
    tr.max_mass_drift = std::max(tr.max_mass_drift, drift);
    if (mass && drift > mass_tol) {
      throw MonitorViolation("mass_conservation", t, -1,
                             "|sum m - sum m0| = " + std::to_string(drift) + " > " + std::to_string(mass_tol));
    }
    for (Index i = 0; i < m.size(); ++i) {
      if (positivity && !(m[i] > 0.0)) {
        throw MonitorViolation("positivity", t, static_cast<long>(i), "weight " + std::to_string(m[i]));
      }
      if (growth && m[i] > m0[i] * std::exp(rate * t) * (1.0 + slack)) {
        throw MonitorViolation("growth_bound", t, static_cast<long>(i),
                               "weight " + std::to_string(m[i]) + " exceeds m0 exp(M0^k S t)");
      }
    }
  }
};

MicroMonitors make_monitors(const AgentEnsemble& e0, const MassLaw& law, const MicroOptions& opts) {
  MicroMonitors mon;
  const Index n = e0.size();
  mon.mass0 = e0.weights.sum();
  mon.m0 = e0.weights;
  mon.slack = opts.growth_slack;
  if (!opts.monitors) return mon;
  mon.mass = law.conservative();
  mon.mass_tol = opts.mass_tolerance_per_agent * static_cast<double>(n);
  const bool positive = (e0.weights.array() > 0.0).all();
  if (law.psi_sk_class() && positive) {
    mon.positivity = true;
    const double sbar = law.rate_bound(bounding_box(e0.positions));
    const bool declared = law.kind() != MassLawKind::psi_sk || sbar > 0.0;
    if (declared && std::isfinite(sbar)) {
      mon.growth = true;
      const double M0 = mon.mass0 / static_cast<double>(n);
      mon.rate = std::pow(M0, law.order()) * sbar;
    }
  }
  return mon;
}

void record(Trajectory& tr, const MatrixXd& x, const VectorXd& m) {
  tr.max_abs_position = std::max(tr.max_abs_position, x.cwiseAbs().maxCoeff());
  tr.max_weight = std::max(tr.max_weight, m.maxCoeff());
  tr.min_weight = std::min(tr.min_weight, m.minCoeff());
}

}  // namespace

Trajectory integrate(const AgentEnsemble& e0, const InteractionKernel& phi, const MassLaw& law, double T, double dt,
                     const MicroOptions& opts) {
  if (e0.size() < 1) throw InputError("cannot integrate an empty ensemble");
  if (!e0.positions.allFinite() || !e0.weights.allFinite()) throw InputError("initial state is not finite");
  law.validate_grid(e0.size());
  const StepPlan plan = plan_steps(T, dt, opts.sample_count, opts.sample_times, opts.max_steps);
  const MicroMonitors mon = make_monitors(e0, law, opts);

  Trajectory tr;
  tr.steps = plan.steps;
  tr.times.reserve(plan.sample_steps.size());
  tr.states.reserve(plan.sample_steps.size());
  AgentEnsemble cur(e0.positions, e0.weights, 0.0);
  record(tr, cur.positions, cur.weights);
  tr.times.push_back(0.0);
  tr.states.push_back(cur);
  std::size_t next = 1;

  const double h = plan.steps > 0 ? T / static_cast<double>(plan.steps) : 0.0;
  AgentEnsemble stage = cur;
  for (long k = 1; k <= plan.steps; ++k) {
    const MicroRates k1 = rhs_micro(cur, phi, law);
    if (opts.method == Stepper::euler) {
      cur.positions += h * k1.dx;
      cur.weights += h * k1.dm;
    } else {
      stage.positions = cur.positions + (0.5 * h) * k1.dx;
      stage.weights = cur.weights + (0.5 * h) * k1.dm;
      const MicroRates k2 = rhs_micro(stage, phi, law);
      stage.positions = cur.positions + (0.5 * h) * k2.dx;
      stage.weights = cur.weights + (0.5 * h) * k2.dm;
      const MicroRates k3 = rhs_micro(stage, phi, law);
      stage.positions = cur.positions + h * k3.dx;
      stage.weights = cur.weights + h * k3.dm;
      const MicroRates k4 = rhs_micro(stage, phi, law);
      cur.positions += (h / 6.0) * (k1.dx + 2.0 * k2.dx + 2.0 * k3.dx + k4.dx);
      cur.weights += (h / 6.0) * (k1.dm + 2.0 * k2.dm + 2.0 * k3.dm + k4.dm);
    }
    const double t = plan.time_at(k, T);
    cur.time = t;
    if (!cur.positions.allFinite() || !cur.weights.allFinite()) {
      throw MonitorViolation("finite_state", t, -1, "state became non-finite");
    }
    mon.check(cur.weights, t, tr);
    record(tr, cur.positions, cur.weights);
    if (next < plan.sample_steps.size() && plan.sample_steps[next] == k) {
      tr.times.push_back(t);
      tr.states.push_back(cur);
      ++next;
    }
  }
  return tr;
}

// ---------------------------------------------------------------------------

const char* to_string(MassSplit s) {
  switch (s) {
    case MassSplit::uniform:
      return "uniform";
    case MassSplit::all_on_one:
      return "all_on_one";
    case MassSplit::alternating_halves:
      return "alternating_halves";
  }
  return "?";
}

VectorXd split_masses(const VectorXd& m, const std::vector<Index>& J, MassSplit split) {
  VectorXd out = m;
  double total = 0.0;
  for (Index j : J) total += m[j];
  const auto count = static_cast<double>(J.size());
  VectorXd share(static_cast<Index>(J.size()));
  for (std::size_t k = 0; k < J.size(); ++k) {
    switch (split) {
      case MassSplit::uniform:
        share[static_cast<Index>(k)] = 1.0 / count;
        break;
      case MassSplit::all_on_one:
        share[static_cast<Index>(k)] = k == 0 ? 1.0 : 0.0;
        break;
      case MassSplit::alternating_halves:
        share[static_cast<Index>(k)] = k % 2 == 0 ? 1.5 : 0.5;
        break;
    }
  }
  share /= share.sum();
  for (std::size_t k = 0; k < J.size(); ++k) out[J[k]] = total * share[static_cast<Index>(k)];
  return out;
}

IndistinguishabilityVerdict indistinguishability_check(const AgentEnsemble& base, const InteractionKernel& phi,
                                                       const MassLaw& law, const std::vector<Index>& J,
                                                       MassSplit split_a, MassSplit split_b, double T, double dt,
                                                       const IndistinguishabilityOptions& opts) {
  const Index n = base.size();
  if (J.size() < 2) throw InputError("indistinguishability needs |J| >= 2");
  std::vector<char> in_j(static_cast<std::size_t>(n), 0);
  for (Index j : J) {
    if (j < 0 || j >= n) throw InputError("index " + std::to_string(j) + " in J is out of range");
    if (in_j[static_cast<std::size_t>(j)]) throw InputError("index " + std::to_string(j) + " repeated in J");
    in_j[static_cast<std::size_t>(j)] = 1;
  }

  MatrixXd x0 = base.positions;
  for (Index j : J) x0.col(j) = base.positions.col(J.front());
  const AgentEnsemble a0(x0, split_masses(base.weights, J, split_a));
  const AgentEnsemble b0(x0, split_masses(base.weights, J, split_b));

  const Trajectory ta = integrate(a0, phi, law, T, dt, opts.integrator);
  const Trajectory tb = integrate(b0, phi, law, T, dt, opts.integrator);

  IndistinguishabilityVerdict v;
  auto flag = [&](double dev, double t, Index i, const char* what) {
    v.max_deviation = std::max(v.max_deviation, dev);
    if (v.preserved && dev > opts.tolerance) {
      v.preserved = false;
      v.time = t;
      v.index = i;
      v.witness = std::string(what) + " differs by " + std::to_string(dev);
    }
  };
  for (std::size_t k = 0; k < ta.times.size(); ++k) {
    const double t = ta.times[k];
    const MatrixXd& x = ta.states[k].positions;
    const MatrixXd& y = tb.states[k].positions;
    const VectorXd& m = ta.states[k].weights;
    const VectorXd& p = tb.states[k].weights;
    const Index lead = J.front();
    for (Index j : J) {
      const double gap = std::max((x.col(j) - x.col(lead)).norm(), (y.col(j) - y.col(lead)).norm());
      v.max_equal_position_gap = std::max(v.max_equal_position_gap, gap);
      flag(gap, t, j, "position inside J");
    }
    for (Index i = 0; i < n; ++i) flag((x.col(i) - y.col(i)).norm(), t, i, "position between runs");
    for (Index i = 0; i < n; ++i) {
      if (!in_j[static_cast<std::size_t>(i)]) flag(std::abs(m[i] - p[i]), t, i, "weight outside J");
    }
    double sm = 0.0, sp = 0.0;
    for (Index j : J) {
      sm += m[j];
      sp += p[j];
    }
    flag(std::abs(sm - sp), t, -1, "total weight on J");
  }
  return v;
}

// ---------------------------------------------------------------------------

namespace {

InvarianceVerdict compare(const ParticleMeasure& a, const ParticleMeasure& b) {
  InvarianceVerdict v;
  v.identical = a == b;
  if (a.dim() == 1 || a.size() == 0) {
    v.distance = wasserstein1(a, b, W1Options{1e-8, false});
  } else {
    v.distance = v.identical ? 0.0 : std::numeric_limits<double>::infinity();
  }
  return v;
}

}  // namespace

InvarianceVerdict empirical_invariance_check(const AgentEnsemble& a, const AgentEnsemble& b) {
  return compare(empirical_measure(a), empirical_measure(b));
}

InvarianceVerdict empirical_invariance_check(const AgentEnsemble& e, const std::vector<Index>& perm) {
  const Index n = e.size();
  if (static_cast<Index>(perm.size()) != n) throw InputError("permutation has the wrong length");
  std::vector<char> seen(static_cast<std::size_t>(n), 0);
  AgentEnsemble p(MatrixXd(e.dim(), n), VectorXd(n), e.time);
  for (Index k = 0; k < n; ++k) {
    const Index src = perm[static_cast<std::size_t>(k)];
    if (src < 0 || src >= n || seen[static_cast<std::size_t>(src)]) throw InputError("not a permutation");
    seen[static_cast<std::size_t>(src)] = 1;
    p.positions.col(k) = e.positions.col(src);
    p.weights[k] = e.weights[src];
  }
  return empirical_invariance_check(e, p);
}

InvarianceVerdict empirical_invariance_check(const AgentEnsemble& e, const std::vector<std::vector<Index>>& groups) {
  const Index n = e.size();
  std::vector<char> used(static_cast<std::size_t>(n), 0);
  std::vector<Index> heads;
  std::vector<double> masses;
  for (const auto& g : groups) {
    if (g.empty()) throw InputError("empty group");
    std::vector<double> gm;
    for (Index i : g) {
      if (i < 0 || i >= n) throw InputError("group index " + std::to_string(i) + " out of range");
      if (used[static_cast<std::size_t>(i)]) throw InputError("agent " + std::to_string(i) + " in two groups");
      used[static_cast<std::size_t>(i)] = 1;
      if (e.positions.col(i) != e.positions.col(g.front())) {
        throw InputError("agents " + std::to_string(g.front()) + " and " + std::to_string(i) +
                         " are not co-located");
      }
      gm.push_back(e.weights[i]);
    }
    // Same summation order as the canonical merge.
    std::sort(gm.begin(), gm.end());
    double s = 0.0;
    for (double v : gm) s += v;
    heads.push_back(g.front());
    masses.push_back(s);
  }
  for (Index i = 0; i < n; ++i) {
    if (!used[static_cast<std::size_t>(i)]) {
      heads.push_back(i);
      masses.push_back(e.weights[i]);
    }
  }
  MatrixXd x(e.dim(), static_cast<Index>(heads.size()));
  VectorXd m(static_cast<Index>(heads.size()));
  for (std::size_t k = 0; k < heads.size(); ++k) {
    x.col(static_cast<Index>(k)) = e.positions.col(heads[k]);
    m[static_cast<Index>(k)] = masses[k];
  }
  return compare(empirical_measure(e), ParticleMeasure(x, m, 1.0 / static_cast<double>(n)));
}

}  // namespace opdyn
