#pragma once

// Link-probability decoder: homophily probability on the sphere, social-rank
// probability in the Poincare ball, and their gamma mixture.

#include "nmm/manifold.hpp"

namespace nmm {

double softplus(double x);
double inverse_softplus(double y);
double logistic(double x);
double logit(double p);

// Decoder scalars stored in unconstrained form:
//   J = softplus(raw_j) > 0,   B = softplus(raw_b) >= 0,
//   C = softplus(raw_c) > 0,   D = softplus(raw_d) >= 0,
//   gamma = logistic(raw_gamma) in [0, 1].
struct MixtureParams {
  double raw_j = 0;
  double raw_b = 0;
  double raw_c = 0;
  double raw_d = 0;
  double raw_gamma = 0;

  double j() const { return softplus(raw_j); }
  double b() const { return softplus(raw_b); }
  double c() const { return softplus(raw_c); }
  double d() const { return softplus(raw_d); }
  double gamma() const { return logistic(raw_gamma); }

  // Builds raw values for the given constrained ones. B = 0, D = 0 and
  // gamma in {0, 1} map to saturated raw values.
  static MixtureParams from_constrained(double j, double b, double c, double d,
                                        double gamma);
};

// 1 / (1 + e^{J s + B}) for spherical distance s.
double homophily_probability(double spherical_dist, double j, double b);
// e^{C h + D} / (1 + e^{C h + D}) for norm distance h.
double rank_probability(double norm_dist, double c, double d);

double p_hom(const MixtureParams& params, const SphericalPoint& x,
             const SphericalPoint& y);
double p_rank(const MixtureParams& params, const HyperbolicPoint& x,
              const HyperbolicPoint& y);
double p_link(const MixtureParams& params, const SphericalPoint& xs,
              const SphericalPoint& ys, const HyperbolicPoint& xh,
              const HyperbolicPoint& yh);

// Partial derivatives of p_link with respect to the Euclidean coordinates of
// all four embeddings and to the raw decoder scalars. The spherical distance
// is differentiated as arccos(<x, y> / w^2) with w held fixed; the arccos
// derivative vanishes once its argument leaves [-1 + eps, 1 - eps], and the
// |.| in the norm distance has subgradient 0 at 0.
struct LinkGradient {
  Vector xs, ys, xh, yh;
  double raw_j = 0;
  double raw_b = 0;
  double raw_c = 0;
  double raw_d = 0;
  double raw_gamma = 0;
};

LinkGradient p_link_gradient(const MixtureParams& params,
                             const SphericalPoint& xs, const SphericalPoint& ys,
                             const HyperbolicPoint& xh,
                             const HyperbolicPoint& yh);

}  // namespace nmm
