#include "opdyn/kernels.hpp"

#include <algorithm>
#include <array>

namespace opdyn {

Box Box::interval(double lo, double hi) {
  Box b;
  b.lo = VectorXd::Constant(1, lo);
  b.hi = VectorXd::Constant(1, hi);
  return b;
}

Box bounding_box(const MatrixXd& points) {
  if (points.cols() == 0) throw InputError("bounding box of an empty point set");
  return Box{points.rowwise().minCoeff(), points.rowwise().maxCoeff()};
}

InteractionKernel InteractionKernel::zero() { return {KernelKind::zero, 0.0, "zero"}; }
InteractionKernel InteractionKernel::linear() { return {KernelKind::linear, 0.0, "linear"}; }
InteractionKernel InteractionKernel::rational_radial() { return {KernelKind::rational_radial, 0.0, "rational_radial"}; }

InteractionKernel InteractionKernel::compact_sine(double radius) {
  if (!(radius > 0.0) || !std::isfinite(radius)) throw InputError("compact_sine radius must be positive");
  return {KernelKind::compact_sine, radius, "compact_sine"};
}

InteractionKernel InteractionKernel::custom(Custom phi, std::string name) {
  if (!phi) throw InputError("custom kernel needs a callable");
  InteractionKernel k{KernelKind::custom, 0.0, std::move(name), std::move(phi)};
  const VectorXd at_zero = k(VectorXd::Zero(1));
  if (at_zero.norm() != 0.0) throw InputError("custom kernel violates phi(0) = 0");
  return k;
}

VectorXd InteractionKernel::operator()(const VectorXd& y) const {
  switch (kind_) {
    case KernelKind::zero:
      return VectorXd::Zero(y.size());
    case KernelKind::linear:
      return y;
    case KernelKind::rational_radial:
      return y / (1.0 + y.squaredNorm());
    case KernelKind::compact_sine: {
      const double r = y.norm();
      if (r == 0.0 || r >= radius_) return VectorXd::Zero(y.size());
      const double s = std::sin(std::numbers::pi * r / radius_);
      return (s * s / r) * y;
    }
    case KernelKind::custom:
      break;
  }
  VectorXd v = custom_(y);
  if (v.size() != y.size() || !v.allFinite()) throw KernelError("kernel '" + name_ + "' returned a non-finite value");
  return v;
}

double InteractionKernel::scalar(double y) const {
  if (kind_ != KernelKind::custom) {
    return with_scalar_profile([y](auto phi) { return phi(y); });
  }
  return (*this)(VectorXd::Constant(1, y))[0];
}

double InteractionKernel::sup_norm(const Box& box) const {
  const double diam = box.diameter();
  switch (kind_) {
    case KernelKind::zero:
      return 0.0;
    case KernelKind::linear:
      return diam;
    case KernelKind::rational_radial:
      return diam >= 1.0 ? 0.5 : diam / (1.0 + diam * diam);
    case KernelKind::compact_sine: {
      if (diam >= 0.5 * radius_) return 1.0;
      const double s = std::sin(std::numbers::pi * diam / radius_);
      return s * s;
    }
    case KernelKind::custom:
      break;
  }
  double best = 0.0;
  for (std::uint64_t k = 1; k <= 4096; ++k) {
    const VectorXd u = box.lo + (box.hi - box.lo).cwiseProduct(halton(k, box.dim()));
    const VectorXd v = box.lo + (box.hi - box.lo).cwiseProduct(halton(k, box.dim(), box.dim()));
    best = std::max(best, (*this)(u - v).norm());
  }
  return best;
}

double InteractionKernel::lipschitz(const Box& box) const {
  switch (kind_) {
    case KernelKind::zero:
      return 0.0;
    case KernelKind::linear:
    case KernelKind::rational_radial:
      return 1.0;
    case KernelKind::compact_sine:
      return std::numbers::pi / radius_;
    case KernelKind::custom:
      break;
  }
  // Differences of points in the box live in [lo - hi, hi - lo].
  Box diff{box.lo - box.hi, box.hi - box.lo};
  return lipschitz_probe(*this, diff, 4096);
}

namespace {

constexpr std::array<std::uint64_t, 16> kPrimes = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53};

double radical_inverse(std::uint64_t k, std::uint64_t base) {
  double inv = 1.0 / static_cast<double>(base);
  double f = inv;
  double out = 0.0;
  while (k > 0) {
    out += f * static_cast<double>(k % base);
    k /= base;
    f *= inv;
  }
  return out;
}

}  // namespace

VectorXd halton(std::uint64_t k, Index dim, Index offset) {
  if (dim + offset > static_cast<Index>(kPrimes.size())) throw InputError("Halton dimension too large");
  VectorXd p(dim);
  for (Index i = 0; i < dim; ++i) p[i] = radical_inverse(k, kPrimes[static_cast<std::size_t>(i + offset)]);
  return p;
}

double lipschitz_probe(const InteractionKernel& k, const Box& box, int samples) {
  if (samples < 2) throw InputError("lipschitz probe needs at least 2 samples");
  if (box.lo.size() != box.hi.size() || box.lo.size() == 0) throw InputError("malformed box");
  const VectorXd extent = box.hi - box.lo;
  if ((extent.array() <= 0.0).any()) throw InputError("degenerate box (zero volume)");
  const Index d = box.dim();
  const double diam = extent.norm();

  double best = 0.0;
  auto quotient = [&](const VectorXd& u, const VectorXd& v) {
    const double du = (u - v).norm();
    if (du == 0.0) return;
    best = std::max(best, (k(u) - k(v)).norm() / du);
  };
  for (int s = 1; s <= samples; ++s) {
    const auto idx = static_cast<std::uint64_t>(s);
    const VectorXd u = box.lo + extent.cwiseProduct(halton(idx, d));
    const VectorXd w = box.lo + extent.cwiseProduct(halton(idx, d, d));
    quotient(u, w);
    // Near pair: step along a Halton direction with separation diam * 2^-(1 + s mod 24).
    VectorXd dir = halton(idx, d, 2 * d).array() - 0.5;
    if (dir.norm() == 0.0) dir = VectorXd::Ones(d);
    dir.normalize();
    const double delta = diam * std::ldexp(1.0, -(1 + s % 24));
    quotient(u, u + delta * dir);
  }
  return best;
}

}  // namespace opdyn
