#include <doctest.h>

#include <cmath>
#include <random>

#include "opdyn/mass_dynamics.hpp"

using namespace opdyn;

namespace {

SkewSymmetricLaw sine_law() {
  SkewSymmetricLaw s;
  s.order = 1;
  s.kernel = [](std::span<const double> y) { return std::sin(y[1] - y[0]); };
  s.bound = 1.0;
  s.lipschitz = 2.0;
  s.name = "sine";
  return s;
}

MatrixXd row(std::initializer_list<double> v) {
  MatrixXd x(1, static_cast<Index>(v.size()));
  Index i = 0;
  for (double a : v) x(0, i++) = a;
  return x;
}

VectorXd vec(std::initializer_list<double> v) {
  VectorXd x(static_cast<Index>(v.size()));
  Index i = 0;
  for (double a : v) x[i++] = a;
  return x;
}

// Brute force from the definition: psi_i = (1/N) m_i (ebar - e_i).
VectorXd group_oracle(const InteractionKernel& phi, const MatrixXd& x, const VectorXd& m) {
  const Index n = m.size();
  VectorXd e = VectorXd::Zero(n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) e[i] += m[j] * phi(x.col(i) - x.col(j)).norm();
  double ebar = 0.0;
  for (Index k = 0; k < n; ++k) ebar += m[k] / static_cast<double>(n) * e[k];
  VectorXd out(n);
  for (Index i = 0; i < n; ++i) out[i] = m[i] * (ebar - e[i]) / static_cast<double>(n);
  return out;
}

}  // namespace

TEST_CASE("group influence hand cases") {
  const MassLaw law(GroupInfluenceLaw{InteractionKernel::linear()});
  const VectorXd two = micro_mass_rates(law, row({0.0, 1.0}), vec({1.0, 1.0}));
  CHECK(two.cwiseAbs().maxCoeff() < 1e-15);

  const VectorXd three = micro_mass_rates(law, row({0.0, 0.0, 1.0}), vec({1.0, 1.0, 1.0}));
  CHECK(three[0] == doctest::Approx(1.0 / 9.0).epsilon(1e-14));
  CHECK(three[1] == doctest::Approx(1.0 / 9.0).epsilon(1e-14));
  CHECK(three[2] == doctest::Approx(-2.0 / 9.0).epsilon(1e-14));
  CHECK(std::abs(three.sum()) < 1e-15);

  const VectorXd same = micro_mass_rates(law, row({0.3, 0.3, 0.3, 0.3}), vec({1.0, 2.0, 0.5, 0.5}));
  CHECK(same.isZero(0.0));
}

TEST_CASE("group influence matches the brute-force definition") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto phi = InteractionKernel::compact_sine(0.3);
  const MassLaw law(GroupInfluenceLaw{phi});
  for (int t = 0; t < 20; ++t) {
    const Index n = 2 + t % 9;
    MatrixXd x(1, n);
    VectorXd m(n);
    for (Index i = 0; i < n; ++i) {
      x(0, i) = u(rng);
      m[i] = 0.1 + 2.0 * u(rng);
    }
    m *= static_cast<double>(n) / m.sum();  // the discrete law conserves mass when sum m = N
    const VectorXd r = micro_mass_rates(law, x, m);
    CHECK((r - group_oracle(phi, x, m)).cwiseAbs().maxCoeff() < 1e-13);
    CHECK(std::abs(r.sum()) < 1e-12 * static_cast<double>(n));
    for (Index i = 0; i < n; ++i) CHECK(eval_group_influence(phi, i, x, m) == doctest::Approx(r[i]).epsilon(1e-12));
  }
}

TEST_CASE("group influence equals psi_sk with k = 2 at unit mean mass") {
  const auto phi = InteractionKernel::rational_radial();
  const Index n = 7;
  MatrixXd x(1, n);
  VectorXd m(n);
  for (Index i = 0; i < n; ++i) {
    x(0, i) = std::cos(1.3 * static_cast<double>(i));
    m[i] = 1.0 + 0.4 * std::sin(2.1 * static_cast<double>(i));
  }
  m *= static_cast<double>(n) / m.sum();
  const MassLaw group(GroupInfluenceLaw{phi});
  const MassLaw sk(group_influence_kernel(phi, 1, Box::interval(-1.0, 1.0)));
  const GridFunction gx = embed_piecewise(x);
  const GridFunction gm = embed_piecewise(m);
  const VectorXd direct = micro_mass_rates(group, x, m);
  for (Index i = 0; i < n; ++i) {
    CHECK(std::abs(eval_psi_sk(sk, i, gx, gm) - direct[i]) <= 1e-12);
    CHECK(std::abs(eval_psi_sk(group, i, gx, gm) - direct[i]) <= 1e-12);
  }
}

TEST_CASE("psi_sk of order one matches the discrete sum") {
  const MassLaw law(sine_law());
  const MatrixXd x = row({0.1, 0.5, -0.3, 0.9});
  const VectorXd m = vec({1.0, 0.5, 2.0, 0.5});
  const VectorXd r = micro_mass_rates(law, x, m);
  for (Index i = 0; i < 4; ++i) {
    double acc = 0.0;
    for (Index j = 0; j < 4; ++j) acc += m[j] * std::sin(x(0, j) - x(0, i));
    CHECK(r[i] == doctest::Approx(m[i] * acc / 4.0).epsilon(1e-14));
  }
  CHECK(std::abs(r.sum()) < 1e-12 * 4);
  CHECK(micro_mass_rates(law, x, VectorXd::Zero(4)).isZero(0.0));
}

TEST_CASE("zero-mass agents have zero rate") {
  const MatrixXd x = row({0.0, 0.2, 0.7, 1.0});
  const VectorXd m = vec({0.0, 1.0, 2.0, 1.0});
  const MassLaw laws[] = {MassLaw(ZeroLaw{}), MassLaw(sine_law()),
                          MassLaw(GroupInfluenceLaw{InteractionKernel::rational_radial()}),
                          MassLaw(LeaderFollowerLaw{1, 0.5, 3.0})};
  for (const auto& law : laws) CHECK(micro_mass_rates(law, x, m)[0] == 0.0);
}

TEST_CASE("leader follower rates") {
  const MassLaw law(LeaderFollowerLaw{1, 0.5, 5.0});
  const VectorXd r = micro_mass_rates(law, row({0.0, 1.0}), vec({1.0, 1.0}));
  CHECK(r[0] == doctest::Approx(2.5));
  CHECK(r[1] == doctest::Approx(-2.5));

  // K = 2, N = 20, r = 0.1: one leader per group of ten
  const LeaderFollowerLaw lf{2, 0.1, 5.0};
  VectorXd m(20);
  for (Index i = 0; i < 20; ++i) m[i] = 0.5 + 0.05 * static_cast<double>(i);
  const VectorXd rr = leader_follower_rates(lf, m);
  CHECK(std::abs(rr.head(10).sum()) < 1e-13);
  CHECK(std::abs(rr.tail(10).sum()) < 1e-13);
  const double followers1 = m.segment(1, 9).sum();
  CHECK(rr[0] == doctest::Approx(5.0 * m[0] * followers1 / 20.0));
  CHECK(rr[11] == doctest::Approx(-5.0 * m[11] * m[10] / 20.0));
  for (Index i = 0; i < 20; ++i) CHECK(eval_leader_follower(lf, i, m) == rr[i]);

  VectorXd no_leaders = m;
  no_leaders[0] = 0.0;
  no_leaders[10] = 0.0;
  const VectorXd z = leader_follower_rates(lf, no_leaders);
  for (Index i = 0; i < 20; ++i) {
    if (i % 10 == 0) {
      CHECK(z[i] >= 0.0);
    } else {
      CHECK(z[i] == 0.0);
    }
  }
}

TEST_CASE("leader follower layout constraints") {
  const LeaderFollowerLaw lf{2, 0.1, 5.0};
  CHECK(leader_layout(lf, 20).leaders_per_group == 1);
  CHECK(leader_layout(lf, 40).group_size == 20);
  CHECK_THROWS_AS(leader_layout(lf, 10), ConfigError);  // r n = 0.5
  CHECK_THROWS_AS(leader_layout(lf, 21), ConfigError);  // N / K not whole
  const MassLaw law(lf);
  CHECK_THROWS_AS(micro_mass_rates(law, MatrixXd::Zero(1, 10), VectorXd::Ones(10)), ConfigError);
  CHECK_THROWS_AS(MassLaw(LeaderFollowerLaw{1, 1.5, 5.0}), ConfigError);
}

TEST_CASE("discretized rates are cell values and sum to zero") {
  const MatrixXd x = row({0.0, 0.15, 0.4, 0.45, 0.9});
  const VectorXd m = vec({0.5, 1.5, 1.0, 1.2, 0.8});
  const GridFunction gx = embed_piecewise(x), gm = embed_piecewise(m);
  CHECK(discretize_mass_law(MassLaw(ZeroLaw{}), gx, gm).isZero(0.0));
  const MassLaw group(GroupInfluenceLaw{InteractionKernel::compact_sine(0.2)});
  const VectorXd d = discretize_mass_law(group, gx, gm);
  CHECK((d - micro_mass_rates(group, x, m)).cwiseAbs().maxCoeff() < 1e-14);
  CHECK(std::abs(d.sum()) < 1e-12 * 5);
  const VectorXd three = discretize_mass_law(MassLaw(GroupInfluenceLaw{InteractionKernel::linear()}),
                                             embed_piecewise(row({0.0, 0.0, 1.0})), embed_piecewise(vec({1, 1, 1})));
  CHECK(three[2] == doctest::Approx(-2.0 / 9.0));
}

TEST_CASE("field rates: skew form conserves any total mass, gap form needs unit mass") {
  const MassLaw law(GroupInfluenceLaw{InteractionKernel::rational_radial()});
  const MatrixXd x = row({0.0, 0.3, 0.6, 1.0});
  const VectorXd m = vec({2.0, 3.0, 1.0, 2.0});  // mean 2
  const VectorXd q = VectorXd::Constant(4, 0.25);
  const VectorXd skew = field_mass_rates(law, x, m, q, GroupForm::skew_kernel);
  CHECK(std::abs(q.dot(skew)) < 1e-14);
  const VectorXd gap = field_mass_rates(law, x, m, q, GroupForm::influence_gap);
  CHECK(std::abs(q.dot(gap)) > 1e-3);
  const VectorXd unit = m / 2.0;
  CHECK((field_mass_rates(law, x, unit, q, GroupForm::skew_kernel) -
         field_mass_rates(law, x, unit, q, GroupForm::influence_gap))
            .cwiseAbs()
            .maxCoeff() < 1e-15);
}

TEST_CASE("cost cap is enforced") {
  SkewSymmetricLaw s = sine_law();
  s.cost_cap = 50.0;
  const MassLaw law(s);
  CHECK_THROWS_AS(micro_mass_rates(law, MatrixXd::Zero(1, 10), VectorXd::Ones(10)), BudgetError);
}

TEST_CASE("hypothesis probes") {
  const Box box = Box::interval(0.0, 1.0);
  const HypothesisReport z = probe_hypotheses(MassLaw(ZeroLaw{}), box);
  CHECK(z.skew_ok.value());
  CHECK(z.bound_estimate == 0.0);
  CHECK(z.lipschitz_estimate == 0.0);
  CHECK(z.sublinearity_estimate == 0.0);

  const auto phi = InteractionKernel::rational_radial();
  const HypothesisReport g = probe_hypotheses(MassLaw(GroupInfluenceLaw{phi}), box);
  CHECK(g.skew_ok.value());
  CHECK(g.bound_estimate <= 2.0 * phi.sup_norm(box));

  SkewSymmetricLaw bad;
  bad.order = 1;
  bad.kernel = [](std::span<const double>) { return 1.0; };
  const HypothesisReport b = probe_hypotheses(MassLaw(bad), box);
  CHECK_FALSE(b.skew_ok.value());
  CHECK_FALSE(b.witness.empty());
}

TEST_CASE("law metadata") {
  CHECK(MassLaw(GroupInfluenceLaw{InteractionKernel::linear()}).psi_sk_class());
  CHECK(MassLaw(GroupInfluenceLaw{InteractionKernel::linear()}).order() == 2);
  CHECK_FALSE(MassLaw(LeaderFollowerLaw{}).psi_sk_class());
  CHECK(MassLaw(LeaderFollowerLaw{}).conservative());
  CHECK(MassLaw(ZeroLaw{}).order() == 0);
}
