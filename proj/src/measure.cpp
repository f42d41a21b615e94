#include "opdyn/measure.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace opdyn {

ParticleMeasure::ParticleMeasure(const MatrixXd& locations, const VectorXd& masses, double scale) {
  if (locations.cols() != masses.size()) throw InputError("measure needs one mass per location");
  if (!locations.allFinite() || !masses.allFinite()) throw InputError("measure atoms must be finite");
  const Index n = masses.size();
  const Index d = locations.rows();

  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  auto loc_less = [&](Index a, Index b) {
    for (Index c = 0; c < d; ++c) {
      if (locations(c, a) != locations(c, b)) return locations(c, a) < locations(c, b);
    }
    return false;
  };
  std::sort(order.begin(), order.end(), [&](Index a, Index b) {
    if (loc_less(a, b)) return true;
    if (loc_less(b, a)) return false;
    return masses[a] < masses[b];
  });

  std::vector<Index> heads;
  std::vector<double> merged;
  for (std::size_t k = 0; k < order.size(); ++k) {
    const Index i = order[k];
    if (!heads.empty() && !loc_less(heads.back(), i) && !loc_less(i, heads.back())) {
      merged.back() += masses[i];
    } else {
      heads.push_back(i);
      merged.push_back(masses[i]);
    }
  }
  locations_.resize(d, static_cast<Index>(heads.size()));
  masses_.resize(static_cast<Index>(heads.size()));
  for (std::size_t k = 0; k < heads.size(); ++k) {
    locations_.col(static_cast<Index>(k)) = locations.col(heads[k]);
    masses_[static_cast<Index>(k)] = merged[k] * scale;
    signed_ = signed_ || masses_[static_cast<Index>(k)] < 0.0;
  }
}

double ParticleMeasure::total_mass() const { return masses_.sum(); }

ParticleMeasure empirical_measure(const AgentEnsemble& e) {
  if (e.size() == 0) throw InputError("empirical measure of an empty ensemble");
  return ParticleMeasure(e.positions, e.weights, 1.0 / static_cast<double>(e.size()));
}

namespace {

struct Cdf {
  // Atoms in ascending location order.
  std::vector<double> atom_x, atom_m;
  // Optional uniform-density cells.
  double lo = 0.0, hi = 0.0, dx = 0.0;
  const VectorXd* density = nullptr;
  double total = 0.0;

  double density_on(double a, double b) const {
    if (density == nullptr) return 0.0;
    const double mid = 0.5 * (a + b);
    if (mid < lo || mid > hi) return 0.0;
    auto j = static_cast<Index>(std::floor((mid - lo) / dx));
    j = std::clamp<Index>(j, 0, density->size() - 1);
    return (*density)[j];
  }
};

Cdf make_cdf(const Measure1d& m, const W1Options& opts, std::vector<double>& breaks) {
  Cdf c;
  if (const auto* pm = std::get_if<ParticleMeasure>(&m)) {
    if (pm->size() > 0 && pm->dim() != 1) throw MeasureError("W1 is implemented for one-dimensional measures only");
    if (pm->is_signed()) throw MeasureError("W1 refused: signed atomic measure");
    for (Index a = 0; a < pm->size(); ++a) {
      c.atom_x.push_back(pm->locations()(0, a));
      c.atom_m.push_back(pm->masses()[a]);
      breaks.push_back(pm->locations()(0, a));
    }
    c.total = pm->total_mass();
  } else {
    const auto& dg = std::get<DensityGrid>(m);
    if (dg.cells() < 1 || !(dg.hi > dg.lo)) throw MeasureError("malformed density grid");
    if (!dg.density.allFinite()) throw MeasureError("density grid has non-finite cells");
    if (!opts.allow_signed_density && (dg.density.array() < 0.0).any()) {
      throw MeasureError("W1 refused: density grid has negative cells");
    }
    c.lo = dg.lo;
    c.hi = dg.hi;
    c.dx = dg.dx();
    c.density = &dg.density;
    for (Index j = 0; j <= dg.cells(); ++j) breaks.push_back(j == dg.cells() ? dg.hi : dg.lo + j * c.dx);
    c.total = dg.total_mass();
  }
  return c;
}

double abs_linear_integral(double d0, double d1, double len) {
  if ((d0 >= 0.0 && d1 >= 0.0) || (d0 <= 0.0 && d1 <= 0.0)) return 0.5 * (std::abs(d0) + std::abs(d1)) * len;
  return len * (d0 * d0 + d1 * d1) / (2.0 * (std::abs(d0) + std::abs(d1)));
}

}  // namespace

double wasserstein1(const Measure1d& a, const Measure1d& b, W1Options opts) {
  std::vector<double> breaks;
  const Cdf ca = make_cdf(a, opts, breaks);
  const Cdf cb = make_cdf(b, opts, breaks);
  if (std::abs(ca.total - cb.total) > opts.mass_tolerance) {
    throw MeasureError("W1 refused: total masses differ (" + std::to_string(ca.total) + " vs " +
                       std::to_string(cb.total) + ")");
  }
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());

  std::size_t ia = 0, ib = 0;
  double fa = 0.0, fb = 0.0, acc = 0.0;
  for (std::size_t k = 0; k < breaks.size(); ++k) {
    const double t = breaks[k];
    while (ia < ca.atom_x.size() && ca.atom_x[ia] == t) fa += ca.atom_m[ia++];
    while (ib < cb.atom_x.size() && cb.atom_x[ib] == t) fb += cb.atom_m[ib++];
    if (k + 1 == breaks.size()) break;
    const double next = breaks[k + 1];
    const double len = next - t;
    const double ga = fa + ca.density_on(t, next) * len;
    const double gb = fb + cb.density_on(t, next) * len;
    acc += abs_linear_integral(fa - fb, ga - gb, len);
    fa = ga;
    fb = gb;
  }
  return acc;
}

}  // namespace opdyn
