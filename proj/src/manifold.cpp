#include "nmm/manifold.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "nmm/error.hpp"

namespace nmm {
namespace {

void check_finite(const Vector& x, const char* what) {
  if (!x.allFinite()) {
    throw ContractViolation(std::string(what) + ": non-finite coordinates");
  }
}

void check_radius(double radius) {
  if (!(radius > 0.0 && radius < 1.0)) {
    throw ContractViolation("sphere radius must lie in (0, 1), got " +
                            std::to_string(radius));
  }
}

Vector first_axis(Eigen::Index dim, double scale) {
  Vector e = Vector::Zero(dim);
  e(0) = scale;
  return e;
}

double safe_artanh(double x) {
  return std::atanh(std::clamp(x, -1.0 + kArtanhEps, 1.0 - kArtanhEps));
}

}  // namespace

SphericalPoint SphericalPoint::project(const Vector& x, double radius) {
  check_radius(radius);
  if (x.size() < 2) {
    throw ContractViolation("spherical points need dimension >= 2");
  }
  check_finite(x, "SphericalPoint::project");
  const double n = x.norm();
  if (n == 0.0) return SphericalPoint(first_axis(x.size(), radius), radius);
  if (n == radius) return SphericalPoint(x, radius);
  return SphericalPoint(x * (radius / n), radius);
}

SphericalPoint SphericalPoint::from_coords(const Vector& x, double radius) {
  check_radius(radius);
  if (x.size() < 2) {
    throw ContractViolation("spherical points need dimension >= 2");
  }
  check_finite(x, "SphericalPoint::from_coords");
  if (std::abs(x.norm() - radius) > kSphereTol) {
    throw ContractViolation("point is not on the sphere of radius " +
                            std::to_string(radius));
  }
  return SphericalPoint(x, radius);
}

HyperbolicPoint HyperbolicPoint::from_coords(const Vector& x) {
  check_finite(x, "HyperbolicPoint::from_coords");
  if (x.size() < 1) throw ContractViolation("empty hyperbolic point");
  if (!(x.norm() < 1.0)) {
    throw ContractViolation("hyperbolic point must satisfy ||x|| < 1");
  }
  return HyperbolicPoint(x);
}

HyperbolicPoint HyperbolicPoint::clamped(const Vector& x) {
  check_finite(x, "HyperbolicPoint::clamped");
  if (x.size() < 1) throw ContractViolation("empty hyperbolic point");
  const double n = x.norm();
  constexpr double max_norm = 1.0 - kBallMargin;
  if (n > max_norm) return HyperbolicPoint(x * (max_norm / n));
  return HyperbolicPoint(x);
}

double spherical_distance(const SphericalPoint& x, const SphericalPoint& y) {
  if (x.dim() != y.dim()) {
    throw ContractViolation("spherical_distance: dimension mismatch");
  }
  if (x.radius() != y.radius()) {
    throw ContractViolation("spherical_distance: radius mismatch");
  }
  const double w2 = x.radius() * x.radius();
  const double c = std::clamp(x.coords().dot(y.coords()) / w2, -1.0, 1.0);
  return std::acos(c);
}

double hyperbolic_distance(const HyperbolicPoint& x, const HyperbolicPoint& y) {
  if (x.dim() != y.dim()) {
    throw ContractViolation("hyperbolic_distance: dimension mismatch");
  }
  const double nx = x.coords().squaredNorm();
  const double ny = y.coords().squaredNorm();
  const double diff = (x.coords() - y.coords()).squaredNorm();
  const double u = 2.0 * diff / ((1.0 - nx) * (1.0 - ny));
  // arcosh(1 + u) written to stay accurate for small u.
  return std::log1p(u + std::sqrt(u * (u + 2.0)));
}

double norm_distance(const HyperbolicPoint& x, const HyperbolicPoint& y) {
  return std::abs(x.norm() - y.norm());
}

TangentVector log_map_origin(const HyperbolicPoint& z) {
  const double n = z.norm();
  if (n == 0.0) return {Vector::Zero(z.dim()), Space::hyperbolic};
  return {z.coords() * (safe_artanh(n) / n), Space::hyperbolic};
}

TangentVector log_map_origin(const SphericalPoint& z) {
  const double n = z.coords().norm();
  return {z.coords() * (safe_artanh(n) / n), Space::spherical};
}

HyperbolicPoint exp_map_origin_hyperbolic(const TangentVector& v) {
  check_finite(v.coords, "exp_map_origin_hyperbolic");
  const double n = v.coords.norm();
  if (n == 0.0) return HyperbolicPoint::clamped(Vector::Zero(v.coords.size()));
  return HyperbolicPoint::clamped(v.coords * (std::tanh(n) / n));
}

SphericalPoint exp_map_origin_spherical(const TangentVector& v,
                                        double radius) {
  check_finite(v.coords, "exp_map_origin_spherical");
  const double n = v.coords.norm();
  if (n == 0.0) return SphericalPoint::project(v.coords, radius);
  return SphericalPoint::project(v.coords * (std::tanh(n) / n), radius);
}

SphericalPoint project_to_sphere(const Vector& x, double radius) {
  return SphericalPoint::project(x, radius);
}

Matrix project_rows_to_sphere(const Matrix& m, double radius) {
  check_radius(radius);
  Matrix out(m.rows(), m.cols());
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    out.row(i) = SphericalPoint::project(m.row(i).transpose(), radius)
                     .coords()
                     .transpose();
  }
  return out;
}

Matrix clamp_rows_to_ball(const Matrix& m) {
  Matrix out(m.rows(), m.cols());
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    out.row(i) = HyperbolicPoint::clamped(m.row(i).transpose())
                     .coords()
                     .transpose();
  }
  return out;
}

}  // namespace nmm
