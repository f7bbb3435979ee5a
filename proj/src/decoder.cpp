#include "nmm/decoder.hpp"

#include <algorithm>
#include <cmath>

#include "nmm/error.hpp"

namespace nmm {
namespace {

// Raw value standing in for an exact zero of softplus / logistic.
constexpr double kSaturatedRaw = 50.0;

}  // namespace

double softplus(double x) {
  if (x > 30.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

double inverse_softplus(double y) {
  if (y < 0.0) throw ContractViolation("inverse_softplus: negative argument");
  if (y == 0.0) return -kSaturatedRaw;
  if (y > 30.0) return y + std::log(-std::expm1(-y));
  return std::log(std::expm1(y));
}

double logistic(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double logit(double p) {
  if (p < 0.0 || p > 1.0) throw ContractViolation("logit: p outside [0, 1]");
  if (p == 0.0) return -kSaturatedRaw;
  if (p == 1.0) return kSaturatedRaw;
  return std::log(p / (1.0 - p));
}

MixtureParams MixtureParams::from_constrained(double j, double b, double c,
                                              double d, double gamma) {
  if (!(j > 0.0) || !(c > 0.0) || b < 0.0 || d < 0.0) {
    throw ContractViolation("decoder scalars need J, C > 0 and B, D >= 0");
  }
  MixtureParams p;
  p.raw_j = inverse_softplus(j);
  p.raw_b = inverse_softplus(b);
  p.raw_c = inverse_softplus(c);
  p.raw_d = inverse_softplus(d);
  p.raw_gamma = logit(gamma);
  return p;
}

double homophily_probability(double spherical_dist, double j, double b) {
  return logistic(-(j * spherical_dist + b));
}

double rank_probability(double norm_dist, double c, double d) {
  return logistic(c * norm_dist + d);
}

double p_hom(const MixtureParams& params, const SphericalPoint& x,
             const SphericalPoint& y) {
  return homophily_probability(spherical_distance(x, y), params.j(),
                               params.b());
}

double p_rank(const MixtureParams& params, const HyperbolicPoint& x,
              const HyperbolicPoint& y) {
  return rank_probability(norm_distance(x, y), params.c(), params.d());
}

double p_link(const MixtureParams& params, const SphericalPoint& xs,
              const SphericalPoint& ys, const HyperbolicPoint& xh,
              const HyperbolicPoint& yh) {
  const double g = params.gamma();
  return g * p_hom(params, xs, ys) + (1.0 - g) * p_rank(params, xh, yh);
}

LinkGradient p_link_gradient(const MixtureParams& params,
                             const SphericalPoint& xs, const SphericalPoint& ys,
                             const HyperbolicPoint& xh,
                             const HyperbolicPoint& yh) {
  const double w2 = xs.radius() * xs.radius();
  const double j = params.j(), b = params.b();
  const double c = params.c(), d = params.d();
  const double gamma = params.gamma();

  const double cosine = xs.coords().dot(ys.coords()) / w2;
  const double s = std::acos(std::clamp(cosine, -1.0, 1.0));
  const double hom = homophily_probability(s, j, b);

  const double nx = xh.norm(), ny = yh.norm();
  const double h = std::abs(nx - ny);
  const double rank = rank_probability(h, c, d);

  LinkGradient g;
  // Spherical branch: dp/ds = -gamma J hom (1 - hom).
  const double dp_ds = -gamma * j * hom * (1.0 - hom);
  double ds_dcos = 0.0;
  if (cosine > -1.0 + kArccosEps && cosine < 1.0 - kArccosEps) {
    ds_dcos = -1.0 / std::sqrt(1.0 - cosine * cosine);
  }
  g.xs = dp_ds * ds_dcos * ys.coords() / w2;
  g.ys = dp_ds * ds_dcos * xs.coords() / w2;

  // Hyperbolic branch: dp/dh = (1 - gamma) C rank (1 - rank).
  const double dp_dh = (1.0 - gamma) * c * rank * (1.0 - rank);
  const double sign = (nx > ny) ? 1.0 : (nx < ny ? -1.0 : 0.0);
  g.xh = Vector::Zero(xh.dim());
  g.yh = Vector::Zero(yh.dim());
  if (nx > 0.0) g.xh = dp_dh * sign * xh.coords() / nx;
  if (ny > 0.0) g.yh = -dp_dh * sign * yh.coords() / ny;

  const double dsoft_j = logistic(params.raw_j);
  const double dsoft_b = logistic(params.raw_b);
  const double dsoft_c = logistic(params.raw_c);
  const double dsoft_d = logistic(params.raw_d);
  g.raw_j = -gamma * s * hom * (1.0 - hom) * dsoft_j;
  g.raw_b = -gamma * hom * (1.0 - hom) * dsoft_b;
  g.raw_c = (1.0 - gamma) * h * rank * (1.0 - rank) * dsoft_c;
  g.raw_d = (1.0 - gamma) * rank * (1.0 - rank) * dsoft_d;
  g.raw_gamma = (hom - rank) * gamma * (1.0 - gamma);
  return g;
}

}  // namespace nmm
