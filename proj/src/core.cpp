#include "opdyn/core.hpp"

#include <algorithm>
#include <cstdint>

namespace opdyn {

AgentEnsemble::AgentEnsemble(MatrixXd x, VectorXd m, double t)
    : positions(std::move(x)), weights(std::move(m)), time(t) {
  if (positions.cols() != weights.size()) {
    throw InputError("ensemble has " + std::to_string(positions.cols()) + " positions but " +
                     std::to_string(weights.size()) + " weights");
  }
}

namespace {

int even_subintervals(int q) {
  if (q < 2) q = 2;
  return q % 2 == 0 ? q : q + 1;
}

template <typename Sample, typename Acc>
void simpson_cells(Index n, int q, const Sample& sample, Acc& acc) {
  const double h = 1.0 / static_cast<double>(n);
  const double sub = h / q;
  for (Index i = 0; i < n; ++i) {
    const double a = static_cast<double>(i) * h;
    for (int k = 0; k <= q; ++k) {
      const double w = (k == 0 || k == q) ? 1.0 : (k % 2 == 1 ? 4.0 : 2.0);
      // Interior cell ends are pulled inside the cell by 1e-12 h, so a step function is
      // sampled on its own cell and P_d(P_c(v)) = v holds exactly.
      double s = (k == q) ? static_cast<double>(i + 1) * h : a + k * sub;
      if (k == 0 && i > 0) s += 1e-12 * h;
      if (k == q && i + 1 < n) s -= 1e-12 * h;
      acc(i, w * sub / 3.0, sample(i, s));
    }
  }
}

}  // namespace

VectorXd project_discrete(const ScalarProfile& f, Index n, ProjectionOptions opts) {
  if (n < 1) throw InputError("projection needs N >= 1");
  const int q = even_subintervals(opts.subintervals);
  VectorXd out = VectorXd::Zero(n);
  auto sample = [&](Index i, double s) {
    const double v = f(s);
    if (!std::isfinite(v)) {
      throw InputError("non-finite sample at s=" + std::to_string(s) + " in cell " + std::to_string(i));
    }
    return v;
  };
  auto acc = [&](Index i, double w, double v) { out[i] += w * v; };
  simpson_cells(n, q, sample, acc);
  return out * static_cast<double>(n);
}

MatrixXd project_discrete(const VectorProfile& f, Index dim, Index n, ProjectionOptions opts) {
  if (n < 1) throw InputError("projection needs N >= 1");
  const int q = even_subintervals(opts.subintervals);
  MatrixXd out = MatrixXd::Zero(dim, n);
  auto sample = [&](Index i, double s) {
    VectorXd v = f(s);
    if (v.size() != dim) throw InputError("profile returned wrong dimension");
    if (!v.allFinite()) {
      throw InputError("non-finite sample at s=" + std::to_string(s) + " in cell " + std::to_string(i));
    }
    return v;
  };
  auto acc = [&](Index i, double w, const VectorXd& v) { out.col(i) += w * v; };
  simpson_cells(n, q, sample, acc);
  return out * static_cast<double>(n);
}

GridFunction embed_piecewise(const MatrixXd& values) {
  if (values.cols() == 0) throw InputError("cannot embed an empty array");
  return GridFunction(values);
}

GridFunction embed_piecewise(const VectorXd& values) {
  if (values.size() == 0) throw InputError("cannot embed an empty array");
  return GridFunction::scalar(values);
}

namespace {

// Walks the merged breakpoints {a/Nf} U {b/Ng} with exact integer comparisons
// and calls visit(i, j, length) for each piece of the common refinement.
template <typename Visit>
void walk_common_refinement(Index nf, Index ng, const Visit& visit) {
  Index a = 0, b = 0;  // current cell indices in f and g
  // Positions are tracked as numerators over nf*ng.
  const std::int64_t denom = static_cast<std::int64_t>(nf) * ng;
  std::int64_t pos = 0;
  while (a < nf && b < ng) {
    const std::int64_t end_f = static_cast<std::int64_t>(a + 1) * ng;
    const std::int64_t end_g = static_cast<std::int64_t>(b + 1) * nf;
    const std::int64_t end = std::min(end_f, end_g);
    visit(a, b, static_cast<double>(end - pos) / static_cast<double>(denom));
    pos = end;
    if (end_f == end) ++a;
    if (end_g == end) ++b;
  }
}

void check_compatible(const GridFunction& f, const GridFunction& g) {
  if (f.dim() != g.dim()) throw InputError("grid functions have different value dimensions");
}

}  // namespace

double l2_distance(const GridFunction& f, const GridFunction& g) {
  check_compatible(f, g);
  double acc = 0.0;
  walk_common_refinement(f.cells(), g.cells(), [&](Index i, Index j, double len) {
    acc += len * (f.cell(i) - g.cell(j)).squaredNorm();
  });
  return std::sqrt(acc);
}

double linf_distance(const GridFunction& f, const GridFunction& g) {
  check_compatible(f, g);
  double acc = 0.0;
  walk_common_refinement(f.cells(), g.cells(), [&](Index i, Index j, double) {
    acc = std::max(acc, (f.cell(i) - g.cell(j)).norm());
  });
  return acc;
}

double l2_distance_to(const GridFunction& f, const VectorProfile& ref, ProjectionOptions opts) {
  const int q = even_subintervals(opts.subintervals);
  double acc = 0.0;
  auto sample = [&](Index i, double s) { return (ref(s) - VectorXd(f.cell(i))).squaredNorm(); };
  auto add = [&](Index, double w, double v) { acc += w * v; };
  simpson_cells(f.cells(), q, sample, add);
  return std::sqrt(acc);
}

VectorXd quadrature_weights(Index n, Quadrature rule) {
  if (n < 1) throw InputError("quadrature needs N >= 1");
  const double h = 1.0 / static_cast<double>(n);
  if (rule == Quadrature::rectangle_grid_aligned) return VectorXd::Constant(n, h);
  if (n < 4) throw ConfigError("Simpson quadrature on cell centres needs at least 4 cells");

  VectorXd w = VectorXd::Zero(n);
  const Index intervals = n - 1;
  const Index simpson_intervals = intervals % 2 == 0 ? intervals : intervals - 3;
  for (Index k = 0; k < simpson_intervals; k += 2) {
    w[k] += h / 3.0;
    w[k + 1] += 4.0 * h / 3.0;
    w[k + 2] += h / 3.0;
  }
  if (simpson_intervals != intervals) {
    const Index k = simpson_intervals;
    w[k] += 3.0 * h / 8.0;
    w[k + 1] += 9.0 * h / 8.0;
    w[k + 2] += 9.0 * h / 8.0;
    w[k + 3] += 3.0 * h / 8.0;
  }
  // Half cells [0, c_0] and [c_{N-1}, 1]: integrate the quadratic through the first/last three centres.
  const double cap[3] = {17.0 / 24.0, -7.0 / 24.0, 2.0 / 24.0};
  for (int k = 0; k < 3; ++k) {
    w[k] += cap[k] * h;
    w[n - 1 - k] += cap[k] * h;
  }
  return w;
}

}  // namespace opdyn
