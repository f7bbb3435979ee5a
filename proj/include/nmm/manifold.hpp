#pragma once

// Geometry kernels for the two embedding manifolds:
//
//   * the sphere of radius w (0 < w < 1) that sits inside the unit ball and
//     holds the homophily embedding of every node (curvature +1), and
//   * the open Poincare ball of dimension d+1 that holds the social-influence
//     embedding (curvature -1).
//
// All functions here are pure and thread-safe.

#include <Eigen/Dense>

#include <cstddef>

namespace nmm {

using Vector = Eigen::VectorXd;
using Matrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Clamp margins keeping arccos / artanh arguments inside their domains.
inline constexpr double kArccosEps = 1e-12;
inline constexpr double kArtanhEps = 1e-7;
// Hyperbolic points are kept at norm <= 1 - kBallMargin.
inline constexpr double kBallMargin = 1e-5;
// Tolerance used when checking that a vector lies on the sphere.
inline constexpr double kSphereTol = 1e-9;

enum class Space { spherical, hyperbolic };

// Point on the sphere of radius `radius` in R^d, d >= 2.
class SphericalPoint {
 public:
  // Rescales `x` onto the sphere; the zero vector maps to radius * e1.
  static SphericalPoint project(const Vector& x, double radius);
  // Accepts `x` only if it already has norm `radius` (within kSphereTol).
  static SphericalPoint from_coords(const Vector& x, double radius);

  const Vector& coords() const { return coords_; }
  double radius() const { return radius_; }
  Eigen::Index dim() const { return coords_.size(); }

 private:
  SphericalPoint(Vector coords, double radius)
      : coords_(std::move(coords)), radius_(radius) {}

  Vector coords_;
  double radius_;
};

// Point strictly inside the unit ball.
class HyperbolicPoint {
 public:
  // Throws ContractViolation if ||x|| >= 1 or x has non-finite entries.
  static HyperbolicPoint from_coords(const Vector& x);
  // Pulls `x` back to norm <= 1 - kBallMargin when needed.
  static HyperbolicPoint clamped(const Vector& x);

  const Vector& coords() const { return coords_; }
  double norm() const { return coords_.norm(); }
  Eigen::Index dim() const { return coords_.size(); }

 private:
  explicit HyperbolicPoint(Vector coords) : coords_(std::move(coords)) {}

  Vector coords_;
};

struct TangentVector {
  Vector coords;
  Space space;
};

// arccos(<x, y> / w^2): geodesic angle between two points on the w-sphere.
double spherical_distance(const SphericalPoint& x, const SphericalPoint& y);

// Poincare-ball geodesic distance
//   arcosh(1 + 2 ||x - y||^2 / ((1 - ||x||^2)(1 - ||y||^2))).
double hyperbolic_distance(const HyperbolicPoint& x, const HyperbolicPoint& y);

// | ||x|| - ||y|| |, the social-rank gap between two ball points.
double norm_distance(const HyperbolicPoint& x, const HyperbolicPoint& y);

// Origin-based exp / log maps. The radial profile is artanh / tanh for both
// spaces; the spherical exp map is followed by the sphere projection so the
// result is always a valid SphericalPoint.
TangentVector log_map_origin(const HyperbolicPoint& z);
TangentVector log_map_origin(const SphericalPoint& z);
HyperbolicPoint exp_map_origin_hyperbolic(const TangentVector& v);
SphericalPoint exp_map_origin_spherical(const TangentVector& v, double radius);

// w * x / ||x||. Idempotent; zero maps to w * e1.
SphericalPoint project_to_sphere(const Vector& x, double radius);

// Row-wise variants used by the dense training code. Rows of `m` are points.
Matrix project_rows_to_sphere(const Matrix& m, double radius);
Matrix clamp_rows_to_ball(const Matrix& m);

}  // namespace nmm
