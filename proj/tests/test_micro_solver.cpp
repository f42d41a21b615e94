#include <doctest.h>

#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "opdyn/micro_solver.hpp"
#include "opdyn/scenario.hpp"

using namespace opdyn;

namespace {

AgentEnsemble line(std::initializer_list<double> x, std::initializer_list<double> m) {
  MatrixXd xs(1, static_cast<Index>(x.size()));
  VectorXd ms(static_cast<Index>(m.size()));
  Index i = 0;
  for (double a : x) xs(0, i++) = a;
  i = 0;
  for (double a : m) ms[i++] = a;
  return AgentEnsemble(xs, ms);
}

double spread(const AgentEnsemble& e) { return e.positions.maxCoeff() - e.positions.minCoeff(); }

}  // namespace

TEST_CASE("rhs hand cases") {
  const MassLaw zero;
  const MicroRates r = rhs_micro(line({0.0, 1.0}, {1.0, 1.0}), InteractionKernel::linear(), zero);
  CHECK(r.dx(0, 0) == 0.5);
  CHECK(r.dx(0, 1) == -0.5);
  CHECK(r.dm.isZero(0.0));

  const MicroRates same = rhs_micro(line({0.4, 0.4, 0.4}, {1.0, 3.0, 0.2}), InteractionKernel::rational_radial(), zero);
  CHECK(same.dx.isZero(0.0));
}

TEST_CASE("zero law with unit weights is the classical model") {
  const auto phi = InteractionKernel::rational_radial();
  const AgentEnsemble e = line({0.0, 0.3, 0.35, 1.2}, {1.0, 1.0, 1.0, 1.0});
  const MicroRates r = rhs_micro(e, phi, MassLaw());
  for (Index i = 0; i < 4; ++i) {
    double acc = 0.0;
    for (Index j = 0; j < 4; ++j) acc += phi.scalar(e.positions(0, j) - e.positions(0, i));
    CHECK(r.dx(0, i) == doctest::Approx(acc / 4.0).epsilon(1e-15));
  }
}

TEST_CASE("non-finite rates name the agent") {
  // Each far pair contributes a finite 1.5e308; two of them overflow the sum for agent 0.
  const auto big = InteractionKernel::custom([](const VectorXd& y) {
    VectorXd v = y;
    if (y.norm() > 2.0) v.setConstant(y[0] > 0.0 ? 1.5e308 : -1.5e308);
    return v;
  });
  try {
    rhs_micro(line({0.0, 5.0, 6.0}, {1, 1, 1}), big, MassLaw());
    FAIL("expected InputError");
  } catch (const InputError& e) {
    CHECK(std::string(e.what()).find("agent") != std::string::npos);
  }
}

TEST_CASE("integration basics") {
  const AgentEnsemble e0 = line({0.0, 1.0}, {1.0, 1.0});
  const Trajectory t0 = integrate(e0, InteractionKernel::linear(), MassLaw(), 0.0, 0.1);
  REQUIRE(t0.states.size() == 1);
  CHECK(t0.times[0] == 0.0);
  CHECK(t0.back().positions == e0.positions);

  // Linear kernel, two agents: the gap closes as exp(-t).
  const Trajectory tr = integrate(e0, InteractionKernel::linear(), MassLaw(), 1.0, 1e-3);
  CHECK(tr.times.front() == 0.0);
  CHECK(tr.times.back() == 1.0);
  CHECK(tr.times.size() == 51);
  CHECK(spread(tr.back()) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
  for (std::size_t k = 1; k < tr.times.size(); ++k) CHECK(tr.times[k] > tr.times[k - 1]);

  MicroOptions eu;
  eu.method = Stepper::euler;
  eu.sample_count = 0;
  const Trajectory te = integrate(e0, InteractionKernel::linear(), MassLaw(), 0.5, 0.1, eu);
  CHECK(te.states.size() == 6);
  CHECK(spread(te.back()) == doctest::Approx(std::pow(0.9, 5)).epsilon(1e-14));
}

TEST_CASE("step planning") {
  const StepPlan p = plan_steps(1.5, 1e-3, 51, {}, 1'000'000);
  CHECK(p.steps == 1500);
  CHECK(p.sample_steps.size() == 51);
  CHECK_THROWS_AS(plan_steps(1.0, 0.3, 0, {0.3}, 1000), ConfigError);
  CHECK_THROWS_AS(plan_steps(1.0, 1e-6, 0, {}, 1000), BudgetError);
  CHECK_THROWS(plan_steps(1.0, 0.0, 0, {}, 1000));
}

TEST_CASE("deterministic trajectories") {
  const Scenario sc = load_scenario(OPDYN_SCENARIO_DIR "/clusters.json");
  const AgentEnsemble e0 = initial_ensemble(sc, 30);
  const Trajectory a = integrate(e0, sc.make_kernel(), sc.make_law(), 0.3, 1e-3);
  const Trajectory b = integrate(e0, sc.make_kernel(), sc.make_law(), 0.3, 1e-3);
  REQUIRE(a.states.size() == b.states.size());
  for (std::size_t k = 0; k < a.states.size(); ++k) {
    CHECK(a.states[k].positions == b.states[k].positions);
    CHECK(a.states[k].weights == b.states[k].weights);
  }
}

TEST_CASE("leader scenarios reach consensus near the reported values") {
  struct Case {
    const char* file;
    double value;
  };
  for (const Case c : {Case{"/leaders_k1.json", 0.2}, Case{"/leaders_k2.json", 0.6}}) {
    const Scenario sc = load_scenario(std::string(OPDYN_SCENARIO_DIR) + c.file);
    const Trajectory tr = integrate(initial_ensemble(sc, 20), sc.make_kernel(), sc.make_law(), sc.T, sc.dt);
    const AgentEnsemble& e = tr.back();
    CHECK(spread(e) < 0.01);
    CHECK(std::abs(e.positions.mean() - c.value) <= 0.05);
    CHECK(tr.max_mass_drift <= 1e-8 * 20);
  }
}

TEST_CASE("monitors abort on violations") {
  // A law that claims conservation but leaks mass.
  CustomLaw leak;
  leak.conservative = true;
  leak.rates = [](const MatrixXd&, const VectorXd& m, const VectorXd&) { return VectorXd(-0.1 * m); };
  CHECK_THROWS_AS(integrate(line({0.0, 1.0}, {1.0, 1.0}), InteractionKernel::linear(), MassLaw(leak), 1.0, 1e-2),
                  MonitorViolation);
  MicroOptions off;
  off.monitors = false;
  CHECK_NOTHROW(integrate(line({0.0, 1.0}, {1.0, 1.0}), InteractionKernel::linear(), MassLaw(leak), 1.0, 1e-2, off));

  // Positivity: a psi_sk law integrated with a step far too coarse overshoots below zero.
  SkewSymmetricLaw s;
  s.order = 1;
  s.kernel = [](std::span<const double> y) { return y[1] > y[0] ? 1.0 : (y[1] < y[0] ? -1.0 : 0.0); };
  s.bound = 1.0;
  s.lipschitz = 1.0;
  MicroOptions eu;
  eu.method = Stepper::euler;
  CHECK_THROWS_AS(integrate(line({0.0, 1.0}, {1.0, 1.0}), InteractionKernel::zero(), MassLaw(s), 3.0, 1.5, eu),
                  MonitorViolation);
}

TEST_CASE("indistinguishability: preserved for group influence") {
  const Scenario sc = load_scenario(OPDYN_SCENARIO_DIR "/clusters.json");
  const AgentEnsemble base = initial_ensemble(sc, 12);
  const auto v = indistinguishability_check(base, sc.make_kernel(), sc.make_law(), {3, 4, 5}, MassSplit::uniform,
                                            MassSplit::all_on_one, 0.5, 1e-3);
  CHECK(v.preserved);
  CHECK(v.max_equal_position_gap <= 1e-10);
  CHECK(v.max_deviation <= 1e-7);
}

TEST_CASE("indistinguishability: violated across the leader boundary") {
  const Scenario sc = load_scenario(OPDYN_SCENARIO_DIR "/leaders_k1.json");
  const AgentEnsemble base = initial_ensemble(sc, 20);
  const auto v = indistinguishability_check(base, sc.make_kernel(), sc.make_law(), {1, 2}, MassSplit::uniform,
                                            MassSplit::all_on_one, 1.0, 1e-3);
  CHECK_FALSE(v.preserved);
  CHECK_FALSE(v.witness.empty());
  CHECK(v.max_equal_position_gap <= 1e-10);
}

TEST_CASE("indistinguishability input checks") {
  const AgentEnsemble base = line({0.0, 0.5, 1.0}, {1.0, 1.0, 1.0});
  const auto phi = InteractionKernel::linear();
  CHECK_THROWS_AS(indistinguishability_check(base, phi, MassLaw(), {1}, MassSplit::uniform, MassSplit::all_on_one, 1,
                                             0.1),
                  InputError);
  CHECK_THROWS_AS(indistinguishability_check(base, phi, MassLaw(), {1, 3}, MassSplit::uniform, MassSplit::all_on_one,
                                             1, 0.1),
                  InputError);
  CHECK_THROWS_AS(indistinguishability_check(base, phi, MassLaw(), {1, 1}, MassSplit::uniform, MassSplit::all_on_one,
                                             1, 0.1),
                  InputError);
}

TEST_CASE("mass splits keep the J total") {
  VectorXd m(5);
  m << 1.0, 2.0, 3.0, 4.0, 5.0;
  const std::vector<Index> J{1, 2, 4};
  for (MassSplit s : {MassSplit::uniform, MassSplit::all_on_one, MassSplit::alternating_halves}) {
    const VectorXd r = split_masses(m, J, s);
    CHECK(r[1] + r[2] + r[4] == doctest::Approx(10.0).epsilon(1e-15));
    CHECK(r[0] == 1.0);
    CHECK(r[3] == 4.0);
  }
  const VectorXd one = split_masses(m, J, MassSplit::all_on_one);
  CHECK(one[2] == 0.0);
  CHECK(one[4] == 0.0);
}

TEST_CASE("empirical measure invariance: the two ensembles of the relabeling figure") {
  const AgentEnsemble a = line({0.5, 0.5, 1.5, 2.5, 3.0}, {1.5, 0.5, 1.25, 0.75, 1.0});
  const AgentEnsemble b = line({0.5, 0.5, 3.0, 2.5, 1.5}, {1.25, 0.75, 1.0, 0.75, 1.25});
  const InvarianceVerdict v = empirical_invariance_check(a, b);
  CHECK(v.identical);
  CHECK(v.distance == 0.0);

  const std::vector<Index> id{0, 1, 2, 3, 4};
  CHECK(empirical_invariance_check(a, id).identical);
  const std::vector<Index> swap{0, 1, 3, 2, 4};
  CHECK(empirical_invariance_check(a, swap).distance == 0.0);
  const std::vector<std::vector<Index>> groups{{0, 1}, {2}, {3}, {4}};
  CHECK(empirical_invariance_check(a, groups).identical);

  const std::vector<std::vector<Index>> bad{{0, 2}, {1}, {3}, {4}};
  CHECK_THROWS_AS(empirical_invariance_check(a, bad), InputError);
  CHECK_THROWS_AS(empirical_invariance_check(a, std::vector<Index>{0, 0, 1, 2, 3}), InputError);
}

TEST_CASE("empirical measure invariance on random ensembles") {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> site(0, 3);
  std::uniform_real_distribution<double> mass(0.1, 2.0);
  for (int t = 0; t < 50; ++t) {
    const Index n = 2 + t % 7;
    MatrixXd x(1, n);
    VectorXd m(n);
    for (Index i = 0; i < n; ++i) {
      x(0, i) = 0.25 * site(rng);
      m[i] = mass(rng);
    }
    const AgentEnsemble e(x, m);
    std::vector<Index> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), Index{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    const auto v = empirical_invariance_check(e, perm);
    CHECK(v.identical);
    CHECK(v.distance == 0.0);

    std::vector<std::vector<Index>> groups;
    for (int s = 0; s < 4; ++s) {
      std::vector<Index> g;
      for (Index i = 0; i < n; ++i)
        if (x(0, i) == 0.25 * s) g.push_back(i);
      if (!g.empty()) groups.push_back(g);
    }
    const auto w = empirical_invariance_check(e, groups);
    CHECK(w.identical);
    CHECK(w.distance == 0.0);
  }
}
