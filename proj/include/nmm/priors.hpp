#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "nmm/manifold.hpp"

namespace nmm {

using Rng = std::mt19937_64;

// Unnormalized spherical Gaussian lobe a * exp(lambda * (beta . z_hat - 1)).
struct SphericalPrior {
  Vector beta;       // unit lobe axis
  double lambda = 0; // sharpness, >= 0
  double amplitude = 1;

  void validate() const;
};

// Riemannian Gaussian on the Poincare ball with dispersion `zeta`, centred at
// `center`. Points live in R^(dim + 1); `dim` is the d that enters the
// normalizer Z(zeta) = Z_omega(d) * Z_r(zeta, d).
struct HyperbolicPrior {
  Vector center;
  double zeta = 1;

  int dim() const { return static_cast<int>(center.size()) - 1; }
  void validate() const;
};

// e^{x^2} erfc(x), finite for every real x that does not overflow e^{x^2}.
double scaled_erfc(double x);

// pi^{d/2} / Gamma(d/2 + 1).
double angular_normalizer(int d);

// Closed-form erfc sum for Z_r(zeta) = int_0^inf e^{-r^2/(2 zeta^2)} sinh^d(r)
// dr, evaluated in log space so that large d * zeta does not overflow.
double log_radial_normalizer(double zeta, int d);
double radial_normalizer(double zeta, int d);

// log Z(zeta) and its derivative with respect to zeta.
double log_normalizer(double zeta, int d);
double log_normalizer_derivative(double zeta, int d);

double spherical_density(const SphericalPrior& prior, const SphericalPoint& z);
double hyperbolic_density(const HyperbolicPrior& prior,
                          const HyperbolicPoint& z);

// Mobius addition x (+) y on the unit ball; translates the origin to x.
Vector mobius_add(const Vector& x, const Vector& y);

// Rejection samplers. Both throw NumericalError after kMaxRejections
// consecutive rejections.
inline constexpr std::uint64_t kMaxRejections = 1'000'000;

std::vector<SphericalPoint> sample_spherical(const SphericalPrior& prior,
                                             double radius, std::size_t count,
                                             Rng& rng);
std::vector<HyperbolicPoint> sample_hyperbolic(const HyperbolicPrior& prior,
                                               std::size_t count, Rng& rng);

// Geodesic radius drawn from the density proportional to
// e^{-r^2/(2 zeta^2)} sinh^d(r).
double sample_geodesic_radius(double zeta, int d, Rng& rng);

}  // namespace nmm
