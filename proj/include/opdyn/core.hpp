#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <numeric>
#include <string>

#include "opdyn/error.hpp"

namespace opdyn {

using Index = Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Piecewise-constant function on I = [0,1] over a uniform grid of N cells.
///
/// Values are stored column-wise: column i is the (dim-dimensional) value on
/// cell [i/N, (i+1)/N). A scalar function has dim() == 1. The last cell also
/// owns s = 1 so evaluation is total on the closed interval.
template <typename Scalar>
class BasicGridFunction {
 public:
  using Matrix = MatrixX<Scalar>;

  BasicGridFunction() = default;

  explicit BasicGridFunction(Matrix values) : values_(std::move(values)) {
    if (values_.cols() < 1 || values_.rows() < 1) {
      throw InputError("grid function needs at least one cell and one component");
    }
    for (Index i = 0; i < values_.cols(); ++i) {
      if (!values_.col(i).allFinite()) {
        throw InputError("grid function value on cell " + std::to_string(i) + " is not finite");
      }
    }
  }

  static BasicGridFunction scalar(const VectorX<Scalar>& v) { return BasicGridFunction(Matrix(v.transpose())); }

  static BasicGridFunction constant(Index cells, Scalar c, Index dim = 1) {
    return BasicGridFunction(Matrix::Constant(dim, cells, c));
  }

  Index cells() const noexcept { return values_.cols(); }
  Index dim() const noexcept { return values_.rows(); }
  const Matrix& values() const noexcept { return values_; }

  auto cell(Index i) const { return values_.col(i); }

  /// Scalar view (first component) as a column vector.
  VectorX<Scalar> as_vector() const { return values_.row(0).transpose(); }

  /// Zero-based index of the cell containing s; s = 1 maps to the last cell.
  Index cell_index(Scalar s) const {
    using std::floor;
    if (!(s >= Scalar(0) && s <= Scalar(1))) throw InputError("evaluation point outside [0,1]");
    const auto i = static_cast<Index>(floor(s * static_cast<Scalar>(cells())));
    return i >= cells() ? cells() - 1 : i;
  }

  auto operator()(Scalar s) const { return values_.col(cell_index(s)); }

  /// Exact refinement: every cell is split into `factor` equal cells.
  BasicGridFunction refined(Index factor) const {
    if (factor < 1) throw InputError("refinement factor must be >= 1");
    Matrix out(dim(), cells() * factor);
    for (Index i = 0; i < cells(); ++i) out.middleCols(i * factor, factor).colwise() = values_.col(i);
    return BasicGridFunction(std::move(out));
  }

 private:
  Matrix values_;
};

using GridFunction = BasicGridFunction<double>;

/// Opinions and weights of N agents at one instant (columns of `positions` are agents).
struct AgentEnsemble {
  MatrixXd positions;
  VectorXd weights;
  double time = 0.0;

  AgentEnsemble() = default;
  AgentEnsemble(MatrixXd x, VectorXd m, double t = 0.0);

  Index size() const noexcept { return weights.size(); }
  Index dim() const noexcept { return positions.rows(); }
};

/// Norms used in the convergence statements.
struct NormReport {
  double l2_index = 0.0;
  double sup_time_l2 = 0.0;
  double linf_index = 0.0;
};

struct ProjectionOptions {
  /// Composite-Simpson sub-intervals per cell (rounded up to even).
  int subintervals = 32;
};

using ScalarProfile = std::function<double(double)>;
using VectorProfile = std::function<VectorXd(double)>;

/// Cell averages N * \int_{cell} f, i.e. the discrete projection of f onto N agents.
VectorXd project_discrete(const ScalarProfile& f, Index n, ProjectionOptions opts = {});
MatrixXd project_discrete(const VectorProfile& f, Index dim, Index n, ProjectionOptions opts = {});

/// Piecewise-constant embedding of agent values (columns) on N cells.
GridFunction embed_piecewise(const MatrixXd& values);
GridFunction embed_piecewise(const VectorXd& values);

/// (\int_I |f - g|^2)^{1/2}, computed exactly on the common refinement of both grids.
double l2_distance(const GridFunction& f, const GridFunction& g);

/// Max over the common refinement of |f - g| (the essential sup for step functions).
double linf_distance(const GridFunction& f, const GridFunction& g);

/// L2 distance between a grid function and a smooth reference, by composite Simpson per cell.
double l2_distance_to(const GridFunction& f, const VectorProfile& ref, ProjectionOptions opts = {});

enum class Quadrature { simpson, rectangle_grid_aligned };

/// Weights q (summing to 1) such that \int_I g ~ sum_j q_j g(s_j), with s_j the cell centres.
///
/// rectangle_grid_aligned: q_j = 1/N, exact for cell-constant integrands.
/// simpson: composite Simpson on the centres, a 3/8 panel when N-1 is odd, and
///          quadratic end caps on the two half cells. Requires N >= 4.
VectorXd quadrature_weights(Index n, Quadrature rule);

inline double cell_center(Index i, Index n) { return (static_cast<double>(i) + 0.5) / static_cast<double>(n); }

}  // namespace opdyn
