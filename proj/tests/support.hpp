#pragma once

// Independent oracles and random fixtures shared by the unit tests.

#include <cmath>
#include <functional>
#include <random>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "nmm/manifold.hpp"

namespace nmm::testing {

using Rng = std::mt19937_64;

inline Vector gaussian_vector(Eigen::Index dim, Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Vector v(dim);
  for (Eigen::Index i = 0; i < dim; ++i) v(i) = n(rng);
  return v;
}

inline Vector sphere_coords(Eigen::Index dim, double radius, Rng& rng) {
  Vector v = gaussian_vector(dim, rng);
  return v * (radius / v.norm());
}

// Uniform direction, norm uniform in [0, max_norm).
inline Vector ball_coords(Eigen::Index dim, double max_norm, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, max_norm);
  Vector v = gaussian_vector(dim, rng);
  return v * (u(rng) / v.norm());
}

// Adaptive Gauss-Kronrod quadrature; either bound may be infinite.
inline double integrate(const std::function<double(double)>& f, double a, double b,
                        double rel_tol = 1e-12) {
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 25, rel_tol);
}

// Central difference of a scalar function of a matrix, entry by entry.
inline Matrix numeric_gradient(const std::function<double(const Matrix&)>& f, const Matrix& x,
                               double h = 1e-6) {
  Matrix g(x.rows(), x.cols());
  Matrix xp = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double orig = xp.data()[i];
    xp.data()[i] = orig + h;
    const double fp = f(xp);
    xp.data()[i] = orig - h;
    const double fm = f(xp);
    xp.data()[i] = orig;
    g.data()[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

// max |a - b| / max(1, |b|) over entries.
inline double relative_error(const Matrix& a, const Matrix& b) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const double denom = std::max(1.0, std::abs(b.data()[i]));
    worst = std::max(worst, std::abs(a.data()[i] - b.data()[i]) / denom);
  }
  return worst;
}

}  // namespace nmm::testing
