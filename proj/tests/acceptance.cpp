// Acceptance run: one PASS/FAIL line per criterion, tolerances pinned below.
// Exit status is 0 only when every criterion passes.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "opdyn/harness.hpp"

using namespace opdyn;
namespace fs = std::filesystem;

namespace {

// ---- pinned tolerances -----------------------------------------------------
constexpr double kConsensusSpread = 0.01;
constexpr double kConsensusK1 = 0.2, kConsensusK2 = 0.6, kConsensusBand = 0.05;
constexpr double kConsensusSeconds = 10.0;
constexpr int kClusters = 3;
constexpr double kClusterSeconds = 30.0;
constexpr double kSweepSlack = 0.10;
constexpr double kFinalErrorFactor = 2.0;
constexpr double kSweepSeconds = 300.0;
constexpr double kEquivalence = 1e-12;
constexpr double kEquivalenceSeconds = 30.0;
constexpr double kMicroDriftPerAgent = 1e-8;
constexpr double kFieldDrift = 1e-6;
constexpr double kGrowthSlack = 1e-4;
constexpr int kRandomStates = 100;
constexpr int kAuditTrials = 20;
constexpr double kEqualPositionGap = 1e-10;
constexpr int kRandomEnsembles = 100;
constexpr double kResidualDrop = 0.40;
constexpr double kPdeW1 = 0.05;  // own cross-validation value, pinned as a regression threshold
constexpr double kSubordinationSeconds = 300.0;
constexpr int kMetricTriples = 1000;
constexpr double kTriangleSlack = 1e-12;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

Scenario shipped(const std::string& name) { return load_scenario(fs::path(OPDYN_SCENARIO_DIR) / (name + ".json")); }

const std::vector<std::string> kScenarios = {"leaders_k1", "leaders_k2", "clusters"};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---- 1 ---------------------------------------------------------------------
Outcome consensus() {
  Outcome o{true, ""};
  const std::pair<const char*, double> cases[] = {{"leaders_k1", kConsensusK1}, {"leaders_k2", kConsensusK2}};
  for (const auto& [name, target] : cases) {
    const auto t0 = std::chrono::steady_clock::now();
    const Scenario sc = shipped(name);
    const Trajectory tr = integrate(initial_ensemble(sc, 20), sc.make_kernel(), sc.make_law(), sc.T, sc.dt);
    const double secs = seconds_since(t0);
    const VectorXd x = tr.back().positions.row(0).transpose();
    const double spread = x.maxCoeff() - x.minCoeff();
    const double mean = x.mean();
    const bool ok = spread < kConsensusSpread && std::abs(mean - target) <= kConsensusBand && secs < kConsensusSeconds;
    o.pass = o.pass && ok;
    o.detail += std::string(name) + ": spread " + fmt(spread) + ", value " + fmt(mean) + " (target " + fmt(target) +
                "), " + fmt(secs) + " s; ";
  }
  return o;
}

// ---- 2 ---------------------------------------------------------------------
Outcome clustering() {
  const auto t0 = std::chrono::steady_clock::now();
  const Scenario sc = shipped("clusters");
  const Trajectory tr = integrate(initial_ensemble(sc, 50), sc.make_kernel(), sc.make_law(), sc.T, sc.dt);
  const int micro = count_clusters(tr.back().positions.row(0).transpose(), sc.kernel.radius);
  const GraphTrajectory g =
      integrate_graph(initial_fields(sc, 100, Quadrature::simpson), sc.make_kernel(), sc.make_law(), sc.T, sc.dt);
  const int maxima = count_local_maxima(g.back().m.as_vector());
  const int levels = count_clusters(g.back().x.as_vector(), sc.kernel.radius);
  const double secs = seconds_since(t0);
  return {micro == kClusters && maxima == kClusters && secs < kClusterSeconds,
          "micro clusters " + std::to_string(micro) + ", graph m interior maxima " + std::to_string(maxima) +
              " (graph opinion levels " + std::to_string(levels) + "), " + fmt(secs) + " s"};
}

// ---- 3 ---------------------------------------------------------------------
Outcome sweep() {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o{true, ""};
  const std::pair<const char*, std::vector<Index>> cases[] = {{"leaders_k1", {10, 20, 40, 80}},
                                                             {"clusters", {25, 50, 100}}};
  for (const auto& [name, ns] : cases) {
    SweepOptions so;
    so.n_list = ns;
    const SweepReport r = run_convergence_sweep(shipped(name), so);
    bool mono = true;
    for (std::size_t k = 1; k < r.rows.size(); ++k) {
      mono = mono && r.rows[k].err_x <= (1.0 + kSweepSlack) * r.rows[k - 1].err_x &&
             r.rows[k].err_m <= (1.0 + kSweepSlack) * r.rows[k - 1].err_m;
    }
    const SweepRow& last = r.rows.back();
    const bool fx = last.err_x < kFinalErrorFactor * last.proj_x;
    const bool fm = last.err_m < kFinalErrorFactor * last.proj_m;
    o.pass = o.pass && mono && fx && fm;
    o.detail += std::string(name) + ": err_x";
    for (const auto& row : r.rows) o.detail += " " + fmt(row.err_x);
    o.detail += " err_m";
    for (const auto& row : r.rows) o.detail += " " + fmt(row.err_m);
    o.detail += " | final vs 2x proj: x " + fmt(last.err_x) + "/" + fmt(kFinalErrorFactor * last.proj_x) + ", m " +
                fmt(last.err_m) + "/" + fmt(kFinalErrorFactor * last.proj_m) + (mono ? ", monotone" : ", NOT monotone") +
                "; ";
  }
  const double secs = seconds_since(t0);
  o.pass = o.pass && secs < kSweepSeconds;
  o.detail += fmt(secs) + " s";
  return o;
}

// ---- 4 ---------------------------------------------------------------------
Outcome equivalence() {
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  for (const auto& name : kScenarios) {
    const Scenario sc = shipped(name);
    worst = std::max(worst, equivalence_check(initial_ensemble(sc, sc.initial.agents), sc.make_kernel(),
                                              sc.make_law(), sc.T, sc.dt));
  }
  const double secs = seconds_since(t0);
  return {worst <= kEquivalence && secs < kEquivalenceSeconds,
          "max deviation " + fmt(worst) + " over shipped scenarios, " + fmt(secs) + " s"};
}

// ---- 5 ---------------------------------------------------------------------
struct ConservationTally {
  double micro_drift_ratio = 0.0;  // drift / (1e-8 N)
  double field_drift = 0.0;
  double min_weight = std::numeric_limits<double>::infinity();
  double growth_excess = 0.0;  // max m / (m0 exp(rate t)) - 1
  int runs = 0;
};

// Samples every step, with the solver monitors off so the bounds are checked here.
void check_micro(const AgentEnsemble& e0, const InteractionKernel& phi, const MassLaw& law, double T, double dt,
                 double sbar, ConservationTally& t) {
  MicroOptions mo;
  mo.sample_count = 0;
  mo.monitors = false;
  const Trajectory tr = integrate(e0, phi, law, T, dt, mo);
  const double n = static_cast<double>(e0.size());
  const double m0 = e0.weights.sum();
  const double rate = std::pow(m0 / n, law.order()) * sbar;
  for (std::size_t k = 0; k < tr.states.size(); ++k) {
    const VectorXd& m = tr.states[k].weights;
    t.micro_drift_ratio = std::max(t.micro_drift_ratio, std::abs(m.sum() - m0) / (kMicroDriftPerAgent * n));
    if (law.psi_sk_class()) {
      t.min_weight = std::min(t.min_weight, m.minCoeff());
      const VectorXd cap = e0.weights * std::exp(rate * tr.times[k]);
      t.growth_excess = std::max(t.growth_excess, (m.array() / cap.array()).maxCoeff() - 1.0);
    }
  }
  ++t.runs;
}

void check_graph(const FieldPair& f0, Quadrature rule, const InteractionKernel& phi, const MassLaw& law, double T,
                 double dt, double sbar, ConservationTally& t) {
  GraphOptions go;
  go.quadrature = rule;
  go.sample_count = 0;
  go.monitors = false;
  const GraphTrajectory g = integrate_graph(f0, phi, law, T, dt, go);
  const VectorXd q = quadrature_weights(f0.m.cells(), rule);
  const VectorXd m0 = f0.m.as_vector();
  const double mass0 = q.dot(m0);
  const double rate = std::pow(mass0, law.order()) * sbar;
  for (std::size_t k = 0; k < g.states.size(); ++k) {
    const VectorXd m = g.states[k].m.as_vector();
    t.field_drift = std::max(t.field_drift, std::abs(q.dot(m) - mass0));
    if (law.psi_sk_class()) {
      t.min_weight = std::min(t.min_weight, m.minCoeff());
      const VectorXd cap = m0 * std::exp(rate * g.times[k]);
      t.growth_excess = std::max(t.growth_excess, (m.array() / cap.array()).maxCoeff() - 1.0);
    }
  }
  ++t.runs;
}

void check_pde(const DensityGrid& d0, const InteractionKernel& phi, const MassLaw& law, double T, double dt,
               ConservationTally& t) {
  PdeOptions po;
  po.sample_count = 0;
  const PdeTrajectory p = solve_pde(d0, phi, law, T, dt, po);
  for (const auto& s : p.states) t.field_drift = std::max(t.field_drift, std::abs(s.total_mass() - d0.total_mass()));
  ++t.runs;
}

SkewSymmetricLaw sine_difference() {
  SkewSymmetricLaw s;
  s.order = 1;
  s.kernel = [](std::span<const double> y) { return std::sin(y[1] - y[0]); };
  s.bound = 1.0;
  s.lipschitz = 2.0;
  s.name = "sine_difference";
  return s;
}

Outcome conservation() {
  ConservationTally t;
  // Declared sup bounds, from the kernel formulas: |compact sine| <= 1, |y / (1 + y^2)| <= 1/2, |sin| <= 1.
  auto sup_phi = [](const Scenario& sc) { return sc.kernel.kind == "compact_sine" ? 1.0 : 0.5; };
  for (const auto& name : kScenarios) {
    const Scenario sc = shipped(name);
    const MassLaw law = sc.make_law();
    if (!law.conservative()) continue;
    const double sbar = law.kind() == MassLawKind::group_influence ? sup_phi(sc) : sc.mass_law.gain;
    check_micro(initial_ensemble(sc, sc.initial.agents), sc.make_kernel(), law, sc.T, sc.dt, sbar, t);
    check_graph(initial_fields(sc, 100, Quadrature::simpson), Quadrature::simpson, sc.make_kernel(), law, sc.T, sc.dt,
                sbar, t);
    if (law.psi_sk_class()) check_pde(initial_density(sc), sc.make_kernel(), law, sc.T, sc.dt, t);
  }

  std::mt19937_64 rng(20240607);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> size(2, 16);
  for (int r = 0; r < kRandomStates; ++r) {
    const Index n = size(rng);
    MatrixXd x(1, n);
    VectorXd m(n);
    for (Index i = 0; i < n; ++i) {
      x(0, i) = unit(rng);
      m[i] = 0.2 + unit(rng);
    }
    m *= static_cast<double>(n) / m.sum();
    InteractionKernel phi = InteractionKernel::rational_radial();
    MassLaw law;
    double sbar = 0.5;
    switch (r % 3) {
      case 0:
        phi = InteractionKernel::compact_sine(0.2 + 0.3 * unit(rng));
        law = MassLaw(GroupInfluenceLaw{phi});
        sbar = 1.0;
        break;
      case 1:
        law = MassLaw(GroupInfluenceLaw{phi});
        break;
      default:
        law = MassLaw(sine_difference());
        sbar = 1.0;
    }
    const AgentEnsemble e(x, m);
    check_micro(e, phi, law, 1.0, 0.01, sbar, t);
    check_graph(embed(e), Quadrature::rectangle_grid_aligned, phi, law, 1.0, 0.01, sbar, t);
    if (r % 10 == 0) {
      // Outflow boundaries only conserve mass while the support stays inside; binned atoms make
      // Lax-Wendroff ripples that travel, so the box is padded by the whole opinion range.
      check_pde(bin_density(empirical_measure(e), -1.0, 2.0, 120), phi, law, 0.5, 0.01, t);
    }
  }
  const bool ok = t.micro_drift_ratio <= 1.0 && t.field_drift <= kFieldDrift && t.min_weight > 0.0 &&
                  t.growth_excess <= kGrowthSlack;
  return {ok, std::to_string(t.runs) + " runs: micro drift " + fmt(t.micro_drift_ratio) +
                  " x (1e-8 N), graph/PDE drift " + fmt(t.field_drift) + ", min m " + fmt(t.min_weight) +
                  ", growth excess " + fmt(t.growth_excess)};
}

// ---- 6 ---------------------------------------------------------------------
Outcome audit() {
  const AuditReport group = run_indistinguishability_audit(shipped("clusters"), kAuditTrials);
  const AuditReport k1 = run_indistinguishability_audit(shipped("leaders_k1"), kAuditTrials);
  const AuditReport k2 = run_indistinguishability_audit(shipped("leaders_k2"), kAuditTrials);
  const double gap = std::max({group.max_equal_position_gap, k1.max_equal_position_gap, k2.max_equal_position_gap});
  std::string witness;
  for (const auto& tr : k1.trials) {
    if (!tr.verdict.preserved) {
      witness = tr.verdict.witness + " at t = " + fmt(tr.verdict.time);
      break;
    }
  }
  const bool ok = group.preserved == kAuditTrials && k1.violated >= 1 && k2.violated >= 1 && gap <= kEqualPositionGap;
  return {ok, "group influence " + std::to_string(group.preserved) + "/" + std::to_string(kAuditTrials) +
                  " preserved; leader/follower violations K=1 " + std::to_string(k1.violated) + ", K=2 " +
                  std::to_string(k2.violated) + " (first: " + witness + "); equal-position gap " + fmt(gap)};
}

// ---- 7 ---------------------------------------------------------------------
AgentEnsemble line(std::initializer_list<double> x, std::initializer_list<double> m) {
  MatrixXd xs(1, static_cast<Index>(x.size()));
  VectorXd ms(static_cast<Index>(m.size()));
  Index i = 0;
  for (double a : x) xs(0, i++) = a;
  i = 0;
  for (double a : m) ms[i++] = a;
  return AgentEnsemble(xs, ms);
}

Outcome invariance() {
  double worst = 0.0;
  bool identical = true;
  auto take = [&](const InvarianceVerdict& v) {
    worst = std::max(worst, v.distance);
    identical = identical && v.identical;
  };
  // the two labelled ensembles of the relabeling figure describe the same measure
  const AgentEnsemble a = line({0.5, 0.5, 1.5, 2.5, 3.0}, {1.5, 0.5, 1.25, 0.75, 1.0});
  const AgentEnsemble b = line({0.5, 0.5, 3.0, 2.5, 1.5}, {1.25, 0.75, 1.0, 0.75, 1.25});
  take(empirical_invariance_check(a, b));
  take(empirical_invariance_check(a, std::vector<std::vector<Index>>{{0, 1}, {2}, {3}, {4}}));
  take(empirical_invariance_check(b, std::vector<std::vector<Index>>{{0, 1}, {2}, {3}, {4}}));

  std::mt19937_64 rng(77);
  std::uniform_int_distribution<int> site(0, 4), size(1, 12);
  std::uniform_real_distribution<double> mass(0.05, 2.0);
  for (int t = 0; t < kRandomEnsembles; ++t) {
    const Index n = size(rng);
    MatrixXd x(1, n);
    VectorXd m(n);
    for (Index i = 0; i < n; ++i) {
      x(0, i) = 0.3 * site(rng) - 0.1;
      m[i] = mass(rng);
    }
    const AgentEnsemble e(x, m);
    std::vector<Index> perm(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;
    std::shuffle(perm.begin(), perm.end(), rng);
    take(empirical_invariance_check(e, perm));
    std::map<double, std::vector<Index>> by_site;
    for (Index i = 0; i < n; ++i) by_site[x(0, i)].push_back(i);
    std::vector<std::vector<Index>> groups;
    for (auto& [pos, g] : by_site) groups.push_back(g);
    std::shuffle(groups.begin(), groups.end(), rng);
    take(empirical_invariance_check(e, groups));
  }
  return {identical && worst == 0.0, "relabeling figure + " + std::to_string(kRandomEnsembles) +
                                         " random ensembles: max W1 " + fmt(worst) +
                                         (identical ? ", canonical measures identical" : ", canonical forms differ")};
}

// ---- 8 ---------------------------------------------------------------------
Outcome subordination() {
  const auto t0 = std::chrono::steady_clock::now();
  SubordinationOptions so;
  so.n_list = {25, 50, 100};
  so.pde_n = 200;
  const SubordinationReport r = run_subordination_check(shipped("clusters"), so);
  const double secs = seconds_since(t0);
  const bool drop = r.residual_fine <= (1.0 - kResidualDrop) * r.residual_coarse;
  bool decreasing = r.micro.size() == 3;
  for (std::size_t k = 1; k < r.micro.size(); ++k) decreasing = decreasing && r.micro[k].w1_final < r.micro[k - 1].w1_final;
  bool pde = r.pde.size() == 2 && r.graph_N == 100 && r.pde_n == 200;
  std::string pde_text;
  for (const auto& row : r.pde) {
    pde = pde && row.w1 < kPdeW1;
    pde_text += " t=" + fmt(row.t) + ":" + fmt(row.w1);
  }
  std::string micro_text;
  for (const auto& row : r.micro) micro_text += " " + fmt(row.w1_final);
  return {drop && decreasing && pde && secs < kSubordinationSeconds,
          "residual " + fmt(r.residual_coarse) + " -> " + fmt(r.residual_fine) + " (drop " +
              fmt(100.0 * (1.0 - r.residual_fine / r.residual_coarse)) + "%); micro W1 at T" + micro_text +
              "; PDE W1" + pde_text + "; " + fmt(secs) + " s"};
}

// ---- 9 ---------------------------------------------------------------------
Outcome metric() {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> pos(-2.0, 2.0), mass(0.01, 1.0);
  std::uniform_int_distribution<int> count(1, 8);
  auto random_measure = [&] {
    const int n = count(rng);
    MatrixXd x(1, n);
    VectorXd m(n);
    for (int i = 0; i < n; ++i) {
      x(0, i) = pos(rng);
      m[i] = mass(rng);
    }
    return ParticleMeasure(x, m, 1.0 / m.sum());
  };
  bool symmetric = true;
  double violation = 0.0;
  for (int t = 0; t < kMetricTriples; ++t) {
    const ParticleMeasure a = random_measure(), b = random_measure(), c = random_measure();
    const double ab = wasserstein1(a, b);
    symmetric = symmetric && ab == wasserstein1(b, a) && wasserstein1(a, a) == 0.0;
    violation = std::max(violation, ab - wasserstein1(a, c) - wasserstein1(c, b));
  }
  MatrixXd x0(1, 1), x1(1, 1);
  x0 << 0.0;
  x1 << 1.0;
  const double unit = wasserstein1(ParticleMeasure(x0, VectorXd::Ones(1)), ParticleMeasure(x1, VectorXd::Ones(1)));
  return {symmetric && violation <= kTriangleSlack && unit == 1.0,
          std::to_string(kMetricTriples) + " triples: symmetric " + (symmetric ? "yes" : "no") +
              ", worst triangle excess " + fmt(violation) + ", W1(d0, d1) = " + fmt(unit)};
}

// ---- 10 --------------------------------------------------------------------
std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Every regular file under `dir`, keyed by relative path.
std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (entry.is_regular_file()) files[fs::relative(entry.path(), dir).string()] = slurp(entry.path());
  }
  return files;
}

Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / "opdyn_acceptance_determinism";
  fs::remove_all(root);
  std::vector<std::pair<std::string, std::string>> commands;  // scenario, arguments
  const std::map<std::string, std::vector<std::string>> figures = {
      {"leaders_k1", {"fig3", "fig4"}}, {"leaders_k2", {"fig5", "fig6"}}, {"clusters", {"fig7", "fig8"}}};
  for (const auto& name : kScenarios) {
    for (const char* level : {"micro", "graph", "pde"}) commands.emplace_back(name, std::string("simulate --level ") + level + " --out out");
    commands.emplace_back(name, "sweep");
    commands.emplace_back(name, "subordinate");
    commands.emplace_back(name, "audit");
    for (const auto& f : figures.at(name)) commands.emplace_back(name, "figure --id " + f + " --out out");
  }
  int identical = 0;
  std::string mismatches;
  for (std::size_t c = 0; c < commands.size(); ++c) {
    const auto& [name, args] = commands[c];
    const std::string scenario = (fs::path(OPDYN_SCENARIO_DIR) / (name + ".json")).string();
    std::map<std::string, std::string> result[2];
    int status[2] = {0, 0};
    for (int run = 0; run < 2; ++run) {
      const fs::path dir = root / std::to_string(c) / std::to_string(run);
      fs::create_directories(dir);
      // The subcommand comes first; scenario path is the positional argument.
      const std::string sub = args.substr(0, args.find(' '));
      const std::string rest = args.size() > sub.size() ? args.substr(sub.size()) : "";
      const std::string cmd = "cd '" + dir.string() + "' && '" + std::string(OPDYN_CLI) + "' " + sub + " '" +
                              scenario + "'" + rest + " > stdout.txt 2> /dev/null";
      status[run] = std::system(cmd.c_str());
      result[run] = snapshot(dir);
    }
    if (result[0] == result[1] && status[0] == status[1]) {
      ++identical;
    } else {
      mismatches += " [" + name + " " + args + "]";
    }
  }
  fs::remove_all(root);
  const int total = static_cast<int>(commands.size());
  return {identical == total, std::to_string(identical) + "/" + std::to_string(total) +
                                  " command/scenario pairs byte-identical (stdout, exit status, files)" + mismatches};
}

}  // namespace

int main() {
  const std::pair<const char*, std::function<Outcome()>> criteria[] = {
      {"1 consensus anchors", consensus},
      {"2 clustering anchor", clustering},
      {"3 graph-limit convergence sweep", sweep},
      {"4 agent / graph-limit equivalence", equivalence},
      {"5 conservation, positivity, growth", conservation},
      {"6 indistinguishability audit", audit},
      {"7 empirical-measure invariance", invariance},
      {"8 subordination", subordination},
      {"9 W1 metric axioms", metric},
      {"10 CLI determinism", determinism},
  };
  int failed = 0;
  for (const auto& [label, run] : criteria) {
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    failed += o.pass ? 0 : 1;
    std::printf("%s  %s: %s\n", o.pass ? "PASS" : "FAIL", label, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/10 criteria passed\n", 10 - failed);
  return failed == 0 ? 0 : 1;
}
