#include "opdyn/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <future>
#include <sstream>

#include "opdyn/csv.hpp"

namespace opdyn {

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double effective_dt(const Scenario& sc, double override_dt) { return override_dt > 0.0 ? override_dt : sc.dt; }

MicroOptions micro_options(const Scenario& sc) {
  MicroOptions mo;
  mo.mass_tolerance_per_agent = sc.tolerances.mass_micro_per_agent;
  mo.growth_slack = sc.tolerances.growth_slack_micro;
  return mo;
}

GraphOptions graph_options(const Scenario& sc, Quadrature rule) {
  GraphOptions go;
  go.quadrature = rule;
  go.mass_tolerance = sc.tolerances.mass_graph;
  go.growth_slack = sc.tolerances.growth_slack_graph;
  return go;
}

Index max_of(const std::vector<Index>& v) { return *std::max_element(v.begin(), v.end()); }

// Position of the sample nearest to t; sample grids are uniform, so a relative 1e-9 match suffices.
std::size_t sample_index(const std::vector<double>& times, double t) {
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (std::abs(times[k] - t) <= 1e-9 * std::max(1.0, std::abs(t))) return k;
  }
  throw ConfigError("sample time " + std::to_string(t) + " missing from the run");
}

}  // namespace

int count_clusters(const VectorXd& positions, double gap) {
  if (positions.size() == 0) return 0;
  std::vector<double> x(positions.data(), positions.data() + positions.size());
  std::sort(x.begin(), x.end());
  int clusters = 1;
  for (std::size_t i = 1; i < x.size(); ++i) clusters += (x[i] - x[i - 1] > gap) ? 1 : 0;
  return clusters;
}

int count_local_maxima(const VectorXd& v) {
  const Index n = v.size();
  int count = 0;
  Index a = 0;
  while (a < n) {
    Index b = a;
    while (b + 1 < n && v[b + 1] == v[a]) ++b;
    if (a > 0 && b < n - 1 && v[a - 1] < v[a] && v[b + 1] < v[a]) ++count;
    a = b + 1;
  }
  return count;
}

double cluster_gap(const Scenario& sc) { return sc.kernel.kind == "compact_sine" ? sc.kernel.radius : 0.01; }

ReferenceRun compute_reference(const Scenario& sc, const std::vector<Index>& n_list, double dt) {
  ReferenceRun ref;
  ref.cells = 4 * max_of(n_list);
  ref.dt = dt / 4.0;
  for (Index n : n_list) {
    if (ref.cells % n != 0) {
      throw ConfigError("reference grid " + std::to_string(ref.cells) + " is not a multiple of N = " +
                        std::to_string(n));
    }
  }
  GraphOptions go = graph_options(sc, Quadrature::rectangle_grid_aligned);
  ref.trajectory = integrate_graph(initial_fields(sc, ref.cells, Quadrature::rectangle_grid_aligned),
                                   sc.make_kernel(), sc.make_law(), sc.T, ref.dt, go);
  return ref;
}

// ---------------------------------------------------------------------------

SweepReport run_convergence_sweep(const Scenario& sc, const SweepOptions& opts) {
  const std::vector<Index> n_list = opts.n_list.empty() ? sc.N_list : opts.n_list;
  if (n_list.empty()) throw ConfigError("sweep needs at least one N");
  for (std::size_t k = 0; k < n_list.size(); ++k) {
    if (n_list[k] < 1 || (k > 0 && n_list[k] <= n_list[k - 1])) {
      throw ConfigError("sweep N values must be positive and strictly increasing");
    }
  }
  const double dt = effective_dt(sc, opts.dt);
  // Errors are compared on 51 instants shared by both runs, which needs T/dt to be a multiple of 50.
  const double steps = std::round(sc.T / dt);
  if (std::abs(sc.T / dt - steps) > 1e-9 * steps || steps < 50.0 || std::fmod(steps, 50.0) != 0.0) {
    throw ConfigError("sweep samples 51 instants, so T/dt must be a positive multiple of 50 (got " + fmt(sc.T / dt) +
                      ")");
  }
  const InteractionKernel phi = sc.make_kernel();
  const MassLaw law = sc.make_law();

  ReferenceRun local;
  const ReferenceRun* ref = opts.reference;
  if (ref == nullptr) {
    local = compute_reference(sc, n_list, dt);
    ref = &local;
  }
  SweepReport rep;
  rep.scenario = sc.name;
  rep.n_ref = ref->cells;
  rep.dt = dt;
  rep.dt_ref = ref->dt;
  const auto& rs = ref->trajectory.states;

  for (Index n : n_list) {
    if (ref->cells % n != 0) throw ConfigError("reference grid is not a multiple of N = " + std::to_string(n));
  }
  // Each N is independent; rows are collected in N_list order so the report does not depend on scheduling.
  auto run_one = [&](Index n) {
    const auto t0 = std::chrono::steady_clock::now();
    const AgentEnsemble e0 = initial_ensemble(sc, n);
    const Trajectory tr = integrate(e0, phi, law, sc.T, dt, micro_options(sc));
    if (tr.states.size() != rs.size()) throw ConfigError("micro and reference runs have different sample sets");
    SweepRow row;
    row.N = n;
    for (std::size_t k = 0; k < rs.size(); ++k) {
      if (std::abs(tr.times[k] - ref->trajectory.times[k]) > 1e-9 * std::max(1.0, sc.T)) {
        throw ConfigError("micro and reference sample times differ at t = " + fmt(tr.times[k]));
      }
      row.err_x = std::max(row.err_x, l2_distance(embed_piecewise(tr.states[k].positions), rs[k].x));
      row.err_m = std::max(row.err_m, l2_distance(embed_piecewise(tr.states[k].weights), rs[k].m));
    }
    const auto xp = sc.x_profile();
    const auto mp = sc.m_profile();
    row.proj_x = l2_distance_to(embed_piecewise(e0.positions), [&](double s) { return VectorXd::Constant(1, xp(s)); });
    row.proj_m = l2_distance_to(embed_piecewise(e0.weights), [&](double s) { return VectorXd::Constant(1, mp(s)); });
    row.wall_seconds = seconds_since(t0);
    return row;
  };
  std::vector<std::future<SweepRow>> jobs;
  for (Index n : n_list) jobs.push_back(std::async(std::launch::async, run_one, n));
  for (auto& j : jobs) rep.rows.push_back(j.get());
  const double slack = 1.0 + sc.tolerances.sweep_slack;
  for (std::size_t k = 1; k < rep.rows.size(); ++k) {
    rep.monotone_x = rep.monotone_x && rep.rows[k].err_x <= slack * rep.rows[k - 1].err_x;
    rep.monotone_m = rep.monotone_m && rep.rows[k].err_m <= slack * rep.rows[k - 1].err_m;
  }
  const SweepRow& last = rep.rows.back();
  rep.final_x_ok = last.err_x < sc.tolerances.final_error_factor * last.proj_x;
  rep.final_m_ok = last.err_m < sc.tolerances.final_error_factor * last.proj_m;
  return rep;
}

// ---------------------------------------------------------------------------

std::vector<double> subordination_times(double T) { return {3.0 * T / 10.0, T}; }

SubordinationReport run_subordination_check(const Scenario& sc, const SubordinationOptions& opts) {
  const MassLaw law = sc.make_law();
  if (!law.psi_sk_class()) {
    throw ConfigError("subordination check refused for the " + law.name() +
                      " law: the mean-field reading requires indistinguishability, which this law does not preserve");
  }
  const std::vector<Index> n_list = opts.n_list.empty() ? sc.N_list : opts.n_list;
  const double dt = effective_dt(sc, opts.dt);
  const InteractionKernel phi = sc.make_kernel();
  SubordinationReport rep;
  rep.scenario = sc.name;

  // (a) empirical measure of the agent system against the pushforward of the fine reference.
  ReferenceRun local;
  const ReferenceRun* ref = opts.reference;
  if (ref == nullptr) {
    local = compute_reference(sc, n_list, dt);
    ref = &local;
  }
  const auto& rs = ref->trajectory.states;
  for (Index n : n_list) {
    const Trajectory tr = integrate(initial_ensemble(sc, n), phi, law, sc.T, dt, micro_options(sc));
    SubordinationReport::MicroRow row;
    row.N = n;
    for (std::size_t k = 0; k < rs.size(); ++k) {
      const double w = wasserstein1(empirical_measure(tr.states[k]), pushforward_measure(rs[k]));
      row.w1_max = std::max(row.w1_max, w);
      if (k + 1 == rs.size()) row.w1_final = w;
    }
    rep.micro.push_back(row);
  }
  for (std::size_t k = 1; k < rep.micro.size(); ++k) {
    rep.micro_decreasing = rep.micro_decreasing && rep.micro[k].w1_final < rep.micro[k - 1].w1_final;
  }

  // (b) weak residual of the pushforward trajectory under simultaneous refinement of dt and 1/N.
  const Index fine = max_of(n_list);
  const Index coarse = fine / 2;
  auto residual = [&](Index n, double step) {
    GraphOptions go = graph_options(sc, Quadrature::simpson);
    go.sample_count = 0;
    const GraphTrajectory g = integrate_graph(initial_fields(sc, n, Quadrature::simpson), phi, law, sc.T, step, go);
    const VectorXd q = quadrature_weights(n, Quadrature::simpson);
    std::vector<ParticleMeasure> path;
    path.reserve(g.states.size());
    for (const auto& s : g.states) path.push_back(pushforward_measure(s, q));
    const auto [lo, hi] = pde_domain(sc);
    const double h = sc.T / static_cast<double>(g.steps);
    return weak_residual(path, h, phi, law, test_function_bank(lo, hi)).max_residual;
  };
  rep.coarse_N = coarse;
  rep.fine_N = fine;
  rep.coarse_dt = dt;
  rep.fine_dt = dt / 2.0;
  rep.residual_coarse = residual(coarse, dt);
  rep.residual_fine = residual(fine, dt / 2.0);
  rep.residual_ok = rep.residual_fine <= (1.0 - sc.tolerances.weak_residual_drop) * rep.residual_coarse;

  // (c) binned pushforward of the graph limit against the PDE solution.
  Scenario psc = sc;
  if (opts.pde_n > 0) psc.pde.n = opts.pde_n;
  rep.graph_N = fine;
  rep.pde_n = psc.pde.n;
  const std::vector<double> times = subordination_times(sc.T);
  GraphOptions go = graph_options(sc, Quadrature::simpson);
  go.sample_times = times;
  const GraphTrajectory g = integrate_graph(initial_fields(sc, fine, Quadrature::simpson), phi, law, sc.T, dt, go);
  const DensityGrid mu0 = initial_density(psc);
  PdeOptions po;
  po.cfl = psc.pde.cfl;
  po.sample_times = times;
  po.mass_tolerance = sc.tolerances.mass_pde;
  const PdeTrajectory p = solve_pde(mu0, phi, law, sc.T, dt, po);
  rep.pde_mass_drift = p.max_mass_drift;
  rep.pde_min_density = p.min_density;
  rep.pde_max_total_variation = p.max_total_variation;
  const VectorXd q = quadrature_weights(fine, Quadrature::simpson);
  for (double t : times) {
    const std::size_t gi = sample_index(g.times, t);
    const std::size_t pi = sample_index(p.times, t);
    const DensityGrid binned =
        bin_density(pushforward_measure(g.states[gi], q), mu0.lo, mu0.hi, mu0.cells(), t);
    W1Options w;
    w.allow_signed_density = true;
    const double d = wasserstein1(binned, p.states[pi], w);
    rep.pde.push_back({t, d});
    rep.pde_ok = rep.pde_ok && d < sc.tolerances.subordination_w1;
  }
  return rep;
}

// ---------------------------------------------------------------------------

bool AuditReport::passed() const {
  if (max_equal_position_gap > equal_position_tolerance) return false;
  if (trials.empty()) return true;
  return expect_preserved ? violated == 0 : violated > 0;
}

std::vector<AuditTrial> audit_family(const Scenario& sc, Index n, int trials) {
  const MassLaw law = sc.make_law();
  Index boundary = n / 2;
  if (const auto* l = std::get_if<LeaderFollowerLaw>(&law.variant())) {
    boundary = leader_layout(*l, n).leaders_per_group;
  }
  static const std::pair<MassSplit, MassSplit> pairs[] = {
      {MassSplit::uniform, MassSplit::all_on_one},
      {MassSplit::uniform, MassSplit::alternating_halves},
      {MassSplit::all_on_one, MassSplit::alternating_halves},
  };
  std::vector<AuditTrial> out;
  for (int t = 0; t < trials; ++t) {
    const Index size = std::min<Index>(2 + t % 3, n);
    if (size < 2) throw ConfigError("audit needs at least two agents");
    Index start;
    if (t % 2 == 0) {
      start = boundary - 1 - (size - 2) / 2;
    } else {
      start = (7 * static_cast<Index>(t) + 3) % (n - size + 1);
    }
    start = std::clamp<Index>(start, 0, n - size);
    AuditTrial trial;
    for (Index k = 0; k < size; ++k) trial.J.push_back(start + k);
    trial.split_a = pairs[(t / 2) % 3].first;
    trial.split_b = pairs[(t / 2) % 3].second;
    out.push_back(std::move(trial));
  }
  return out;
}

AuditReport run_indistinguishability_audit(const Scenario& sc, int trials, const AuditOptions& opts) {
  if (trials < 0) throw ConfigError("trials must be >= 0");
  const MassLaw law = sc.make_law();
  const InteractionKernel phi = sc.make_kernel();
  const double dt = effective_dt(sc, opts.dt);
  const double T = opts.T >= 0.0 ? opts.T : sc.T;
  const Index n = sc.initial.agents;
  AuditReport rep;
  rep.scenario = sc.name;
  rep.expect_preserved = law.psi_sk_class();
  rep.equal_position_tolerance = sc.tolerances.equal_position;
  rep.trials = audit_family(sc, n, trials);
  const AgentEnsemble base = initial_ensemble(sc, n);
  IndistinguishabilityOptions io;
  io.tolerance = sc.tolerances.indistinguishability;
  io.integrator = micro_options(sc);
  for (AuditTrial& t : rep.trials) {
    t.verdict = indistinguishability_check(base, phi, law, t.J, t.split_a, t.split_b, T, dt, io);
    (t.verdict.preserved ? rep.preserved : rep.violated) += 1;
    rep.max_equal_position_gap = std::max(rep.max_equal_position_gap, t.verdict.max_equal_position_gap);
  }
  return rep;
}

// ---------------------------------------------------------------------------

namespace {

std::filesystem::path output_path(const std::filesystem::path& dir, const Scenario& sc, const std::string& figure,
                                  const std::string& series) {
  return dir / (sc.name + "_" + figure + "_" + series + ".csv");
}

VectorXd row0(const MatrixXd& x) { return x.row(0).transpose(); }

}  // namespace

SimulationSummary simulate(const Scenario& sc, Level level, const SimulateOptions& opts) {
  const double dt = effective_dt(sc, opts.dt);
  const InteractionKernel phi = sc.make_kernel();
  const MassLaw law = sc.make_law();
  SimulationSummary out;
  auto line = [&](const std::string& k, const std::string& v) { out.lines.push_back(k + "=" + v); };
  line("scenario", sc.name);

  if (level == Level::micro) {
    const Index n = sc.initial.agents;
    const Trajectory tr = integrate(initial_ensemble(sc, n), phi, law, sc.T, dt, micro_options(sc));
    const AgentEnsemble& e = tr.back();
    const VectorXd x = row0(e.positions);
    line("level", "micro");
    line("agents", std::to_string(n));
    line("steps", std::to_string(tr.steps));
    line("final_spread", fmt(x.maxCoeff() - x.minCoeff()));
    line("final_mean_opinion", fmt(x.mean()));
    line("final_weighted_mean", fmt(e.weights.dot(x) / e.weights.sum()));
    line("clusters", std::to_string(count_clusters(x, cluster_gap(sc))));
    line("mass_drift", fmt(tr.max_mass_drift));
    line("min_weight", fmt(tr.min_weight));
    line("max_weight", fmt(tr.max_weight));
    if (opts.out_dir) {
      const auto path = output_path(*opts.out_dir, sc, "simulate", "micro");
      auto os = open_csv(path);
      write_trajectory_csv(os, tr);
      out.files.push_back(path);
    }
  } else if (level == Level::graph) {
    const Index cells = opts.grid > 0 ? opts.grid : 100;
    const GraphTrajectory g =
        integrate_graph(initial_fields(sc, cells, Quadrature::simpson), phi, law, sc.T, dt, graph_options(sc, Quadrature::simpson));
    const FieldPair& f = g.back();
    const VectorXd x = f.x.as_vector();
    line("level", "graph");
    line("cells", std::to_string(cells));
    line("steps", std::to_string(g.steps));
    line("final_x_min", fmt(x.minCoeff()));
    line("final_x_max", fmt(x.maxCoeff()));
    line("clusters", std::to_string(count_clusters(x, cluster_gap(sc))));
    line("m_local_maxima", std::to_string(count_local_maxima(f.m.as_vector())));
    line("mass_drift", fmt(g.max_mass_drift));
    line("min_weight", fmt(g.min_weight));
    line("max_weight", fmt(g.max_weight));
    if (opts.out_dir) {
      const auto path = output_path(*opts.out_dir, sc, "simulate", "graph");
      auto os = open_csv(path);
      write_fields_csv(os, g.states);
      out.files.push_back(path);
    }
  } else {
    Scenario psc = sc;
    if (opts.grid > 0) psc.pde.n = opts.grid;
    PdeOptions po;
    po.cfl = psc.pde.cfl;
    po.mass_tolerance = sc.tolerances.mass_pde;
    const PdeTrajectory p = solve_pde(initial_density(psc), phi, law, sc.T, dt, po);
    const DensityGrid& d = p.back();
    int peaks = 0;
    const double top = d.density.maxCoeff();
    for (Index j = 1; j + 1 < d.cells(); ++j) {
      if (d.density[j] >= 0.05 * top && d.density[j] > d.density[j - 1] && d.density[j] >= d.density[j + 1]) ++peaks;
    }
    line("level", "pde");
    line("cells", std::to_string(d.cells()));
    line("domain", "[" + fmt(d.lo) + "," + fmt(d.hi) + "]");
    line("substeps", std::to_string(p.substeps));
    line("mass_drift", fmt(p.max_mass_drift));
    line("min_density", fmt(p.min_density));
    line("max_total_variation", fmt(p.max_total_variation));
    line("peaks", std::to_string(peaks));
    if (opts.out_dir) {
      const auto path = output_path(*opts.out_dir, sc, "simulate", "pde");
      auto os = open_csv(path);
      write_densities_csv(os, p.states);
      out.files.push_back(path);
    }
  }
  return out;
}

std::vector<std::filesystem::path> emit_figure_data(const Scenario& sc, const std::string& figure,
                                                    const FigureOptions& opts) {
  static const char* known[] = {"fig3", "fig4", "fig5", "fig6", "fig7", "fig8"};
  if (std::find_if(std::begin(known), std::end(known), [&](const char* k) { return figure == k; }) == std::end(known)) {
    throw ConfigError("unknown figure id '" + figure + "' (expected fig3..fig8)");
  }
  const MassLaw law = sc.make_law();
  const InteractionKernel phi = sc.make_kernel();
  const double dt = effective_dt(sc, opts.dt);
  const Index cells = opts.grid > 0 ? opts.grid : 100;
  const Index n = sc.initial.agents;
  std::vector<std::filesystem::path> files;

  const bool leader_figure = figure == "fig3" || figure == "fig4" || figure == "fig5" || figure == "fig6";
  if (leader_figure) {
    const auto* l = std::get_if<LeaderFollowerLaw>(&law.variant());
    const int groups = (figure == "fig3" || figure == "fig4") ? 1 : 2;
    if (l == nullptr || l->groups != groups) {
      throw ConfigError(figure + " needs a leader_follower scenario with K = " + std::to_string(groups));
    }
  } else if (!law.psi_sk_class()) {
    throw ConfigError(figure + " needs a law that preserves indistinguishability");
  }

  if (figure == "fig3" || figure == "fig5") {
    MicroOptions mo = micro_options(sc);
    mo.sample_count = 251;
    const Trajectory tr = integrate(initial_ensemble(sc, n), phi, law, sc.T, dt, mo);
    const auto path = output_path(opts.out_dir, sc, figure, "trajectory");
    auto os = open_csv(path);
    write_trajectory_csv(os, tr);
    files.push_back(path);
    return files;
  }

  // Profile instants: {0.05, 1.4, 5} for T = 5, {0, 0.45, 1.5} for T = 1.5.
  const std::vector<double> times = leader_figure ? std::vector<double>{0.01 * sc.T, 0.28 * sc.T, sc.T}
                                                  : std::vector<double>{0.0, 0.3 * sc.T, sc.T};
  MicroOptions mo = micro_options(sc);
  mo.sample_times = times;
  const Trajectory tr = integrate(initial_ensemble(sc, n), phi, law, sc.T, dt, mo);
  GraphOptions go = graph_options(sc, Quadrature::simpson);
  go.sample_times = times;
  const GraphTrajectory g = integrate_graph(initial_fields(sc, cells, Quadrature::simpson), phi, law, sc.T, dt, go);
  auto pick_micro = [&](double t) {
    return tr.states[sample_index(tr.times, t)];
  };
  auto pick_graph = [&](double t) {
    return g.states[sample_index(g.times, t)];
  };

  if (figure != "fig8") {
    std::vector<FieldPair> micro, graph;
    for (double t : times) {
      micro.push_back(embed(pick_micro(t)));
      graph.push_back(pick_graph(t));
    }
    auto p1 = output_path(opts.out_dir, sc, figure, "micro");
    auto os1 = open_csv(p1);
    write_fields_csv(os1, micro);
    files.push_back(p1);
    auto p2 = output_path(opts.out_dir, sc, figure, "graph");
    auto os2 = open_csv(p2);
    write_fields_csv(os2, graph);
    files.push_back(p2);
    return files;
  }

  // fig8: mu^{N,n} (n = 25 cells), the pushforward of the graph limit, and the PDE density.
  const VectorXd x0 = row0(initial_ensemble(sc, n).positions);
  const double lo = std::min(0.0, x0.minCoeff());
  const double hi = std::max(1.0, x0.maxCoeff());
  std::vector<DensityGrid> binned;
  std::vector<std::pair<double, ParticleMeasure>> pushed;
  const VectorXd q = quadrature_weights(cells, Quadrature::simpson);
  for (double t : times) {
    binned.push_back(bin_density(empirical_measure(pick_micro(t)), lo, hi, 25, t));
    pushed.emplace_back(t, pushforward_measure(pick_graph(t), q));
  }
  PdeOptions po;
  po.cfl = sc.pde.cfl;
  po.sample_times = times;
  po.mass_tolerance = sc.tolerances.mass_pde;
  const PdeTrajectory p = solve_pde(initial_density(sc), phi, law, sc.T, dt, po);
  std::vector<DensityGrid> pde;
  for (double t : times) {
    pde.push_back(p.states[sample_index(p.times, t)]);
  }
  auto p1 = output_path(opts.out_dir, sc, figure, "micro_binned");
  auto os1 = open_csv(p1);
  write_densities_csv(os1, binned);
  files.push_back(p1);
  auto p2 = output_path(opts.out_dir, sc, figure, "pushforward");
  auto os2 = open_csv(p2);
  write_measures_csv(os2, pushed);
  files.push_back(p2);
  auto p3 = output_path(opts.out_dir, sc, figure, "pde");
  auto os3 = open_csv(p3);
  write_densities_csv(os3, pde);
  files.push_back(p3);
  return files;
}

// ---------------------------------------------------------------------------

std::string describe(const SweepReport& r) {
  std::ostringstream os;
  os << "sweep scenario=" << r.scenario << " N_ref=" << r.n_ref << " dt=" << fmt(r.dt) << " dt_ref=" << fmt(r.dt_ref)
     << '\n';
  os << "N,err_x,err_m,proj_x,proj_m\n";
  for (const auto& row : r.rows) {
    os << row.N << ',' << format_double(row.err_x) << ',' << format_double(row.err_m) << ','
       << format_double(row.proj_x) << ',' << format_double(row.proj_m) << '\n';
  }
  os << "monotone_x=" << r.monotone_x << " monotone_m=" << r.monotone_m << " final_x_ok=" << r.final_x_ok
     << " final_m_ok=" << r.final_m_ok << '\n';
  return os.str();
}

std::string describe(const SubordinationReport& r) {
  std::ostringstream os;
  os << "subordination scenario=" << r.scenario << '\n';
  os << "N,w1_final,w1_max\n";
  for (const auto& row : r.micro) {
    os << row.N << ',' << format_double(row.w1_final) << ',' << format_double(row.w1_max) << '\n';
  }
  os << "micro_decreasing=" << r.micro_decreasing << '\n';
  os << "weak_residual N=" << r.coarse_N << " dt=" << fmt(r.coarse_dt) << ": " << format_double(r.residual_coarse)
     << "; N=" << r.fine_N << " dt=" << fmt(r.fine_dt) << ": " << format_double(r.residual_fine)
     << " ok=" << r.residual_ok << '\n';
  os << "pde graph_N=" << r.graph_N << " n=" << r.pde_n << " mass_drift=" << fmt(r.pde_mass_drift)
     << " min_density=" << fmt(r.pde_min_density) << " max_tv=" << fmt(r.pde_max_total_variation) << '\n';
  os << "t,w1\n";
  for (const auto& row : r.pde) os << format_double(row.t) << ',' << format_double(row.w1) << '\n';
  os << "pde_ok=" << r.pde_ok << '\n';
  return os.str();
}

std::string describe(const AuditReport& r) {
  std::ostringstream os;
  os << "audit scenario=" << r.scenario << " expect=" << (r.expect_preserved ? "preserved" : "violation")
     << " trials=" << r.trials.size() << " preserved=" << r.preserved << " violated=" << r.violated
     << " max_equal_position_gap=" << format_double(r.max_equal_position_gap) << '\n';
  for (std::size_t k = 0; k < r.trials.size(); ++k) {
    const auto& t = r.trials[k];
    os << "trial " << k << " J=";
    for (std::size_t i = 0; i < t.J.size(); ++i) os << (i ? "|" : "") << t.J[i];
    os << ' ' << to_string(t.split_a) << '/' << to_string(t.split_b) << ' '
       << (t.verdict.preserved ? "preserved" : "violated");
    if (!t.verdict.preserved) {
      os << " t=" << fmt(t.verdict.time) << " index=" << t.verdict.index << " (" << t.verdict.witness << ')';
    }
    os << " max_dev=" << format_double(t.verdict.max_deviation) << '\n';
  }
  return os.str();
}

}  // namespace opdyn
