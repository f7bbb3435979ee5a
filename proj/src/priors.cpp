#include "nmm/priors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "nmm/error.hpp"

namespace nmm {
namespace {

constexpr double kPi = std::numbers::pi;

// Below this fraction of surviving magnitude the alternating erfc sum has
// lost too many digits and we integrate numerically instead.
constexpr double kCancellationFloor = 1e-7;

double log_binomial(int n, int k) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

double log_scaled_erfc(double x) {
  if (x < 0.0) return x * x + std::log(std::erfc(x));
  return std::log(scaled_erfc(x));
}

void check_dim(int d) {
  if (d <= 0) {
    throw ContractViolation("normalizer dimension must be positive, got " +
                            std::to_string(d));
  }
}

void check_zeta(double zeta) {
  if (!(zeta > 0.0) || !std::isfinite(zeta)) {
    throw ContractViolation("dispersion zeta must be positive and finite");
  }
}

// log of int_0^inf e^{-r^2/(2 zeta^2)} sinh^d(r) * r^(2*moment) dr by composite
// Simpson, used only when the closed form cancels catastrophically (tiny
// zeta). Evaluated relative to the integrand peak to avoid underflow.
double log_radial_quadrature(double zeta, int d, int moment) {
  const double hi = d * zeta * zeta + 14.0 * zeta;
  const int intervals = 4000;
  const double h = hi / intervals;
  auto log_f = [&](double r) {
    if (r <= 0.0) return -std::numeric_limits<double>::infinity();
    return -r * r / (2 * zeta * zeta) + d * std::log(std::sinh(r)) +
           2.0 * moment * std::log(r);
  };
  double peak = -std::numeric_limits<double>::infinity();
  for (int i = 1; i <= intervals; ++i) peak = std::max(peak, log_f(i * h));
  double acc = 0.0;
  for (int i = 1; i <= intervals; ++i) {
    const double w = (i == intervals) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
    acc += w * std::exp(log_f(i * h) - peak);
  }
  return peak + std::log(acc * h / 3.0);
}

struct ErfcSum {
  double log_value;   // log Z_r
  double derivative;  // d log Z_r / d zeta
  bool stable;
};

ErfcSum erfc_sum(double zeta, int d) {
  std::vector<double> log_terms(d + 1);
  std::vector<double> slopes(d + 1);
  double peak = -std::numeric_limits<double>::infinity();
  for (int k = 0; k <= d; ++k) {
    const double a = 2.0 * k - d;
    const double x = a * zeta / std::numbers::sqrt2;
    const double log_e = log_scaled_erfc(x);
    log_terms[k] = log_binomial(d, k) - d * std::numbers::ln2 +
                   0.5 * std::log(kPi / 2.0) + std::log(zeta) + log_e;
    // d/dzeta of the k-th term divided by the term itself.
    slopes[k] = (1.0 + a * a * zeta * zeta) / zeta -
                a * std::sqrt(2.0 / kPi) / std::exp(log_e);
    peak = std::max(peak, log_terms[k]);
  }
  double sum = 0.0, weighted = 0.0, magnitude = 0.0;
  for (int k = 0; k <= d; ++k) {
    const double w = (k % 2 == 0 ? 1.0 : -1.0) * std::exp(log_terms[k] - peak);
    sum += w;
    weighted += w * slopes[k];
    magnitude += std::abs(w);
  }
  if (!(sum > kCancellationFloor * magnitude)) return {0.0, 0.0, false};
  return {peak + std::log(sum), weighted / sum, true};
}

Vector random_direction(Eigen::Index dim, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector v(dim);
  double n = 0.0;
  do {
    for (Eigen::Index i = 0; i < dim; ++i) v(i) = normal(rng);
    n = v.norm();
  } while (n == 0.0);
  return v / n;
}

}  // namespace

void SphericalPrior::validate() const {
  if (beta.size() < 2) throw ContractViolation("prior beta needs dim >= 2");
  if (std::abs(beta.norm() - 1.0) > 1e-9) {
    throw ContractViolation("prior beta must be a unit vector");
  }
  if (!(lambda >= 0.0)) throw ContractViolation("prior lambda must be >= 0");
  if (!(amplitude > 0.0)) throw ContractViolation("prior amplitude must be > 0");
}

void HyperbolicPrior::validate() const {
  if (center.size() < 2) {
    throw ContractViolation("hyperbolic prior needs d >= 1 (d + 1 coords)");
  }
  if (!(center.norm() < 1.0)) {
    throw ContractViolation("hyperbolic prior center must be inside the ball");
  }
  check_zeta(zeta);
}

double scaled_erfc(double x) {
  if (x < 4.0) return std::exp(x * x) * std::erfc(x);
  // Continued fraction erfc(x) e^{x^2} sqrt(pi) = 1/(x + (1/2)/(x + 1/(x +
  // (3/2)/(x + ...)))) evaluated with the modified Lentz method.
  constexpr double tiny = 1e-300;
  double f = x;
  double c = x;
  double dd = 0.0;
  for (int k = 1; k < 500; ++k) {
    const double ak = 0.5 * k;
    dd = x + ak * dd;
    if (dd == 0.0) dd = tiny;
    c = x + ak / c;
    if (c == 0.0) c = tiny;
    dd = 1.0 / dd;
    const double delta = c * dd;
    f *= delta;
    if (std::abs(delta - 1.0) < 1e-16) break;
  }
  return 1.0 / (f * std::sqrt(kPi));
}

double angular_normalizer(int d) {
  check_dim(d);
  return std::pow(kPi, d / 2.0) / std::tgamma(d / 2.0 + 1.0);
}

double log_radial_normalizer(double zeta, int d) {
  check_dim(d);
  check_zeta(zeta);
  const ErfcSum s = erfc_sum(zeta, d);
  if (s.stable) return s.log_value;
  return log_radial_quadrature(zeta, d, 0);
}

double radial_normalizer(double zeta, int d) {
  return std::exp(log_radial_normalizer(zeta, d));
}

double log_normalizer(double zeta, int d) {
  return std::log(angular_normalizer(d)) + log_radial_normalizer(zeta, d);
}

double log_normalizer_derivative(double zeta, int d) {
  check_dim(d);
  check_zeta(zeta);
  const ErfcSum s = erfc_sum(zeta, d);
  if (s.stable) return s.derivative;
  // d/dzeta log Z_r = E[r^2] / zeta^3 under the radial density.
  const double log_m2 = log_radial_quadrature(zeta, d, 1);
  const double log_m0 = log_radial_quadrature(zeta, d, 0);
  return std::exp(log_m2 - log_m0) / (zeta * zeta * zeta);
}

double spherical_density(const SphericalPrior& prior, const SphericalPoint& z) {
  prior.validate();
  if (prior.beta.size() != z.dim()) {
    throw ContractViolation("spherical_density: dimension mismatch");
  }
  const double dot = prior.beta.dot(z.coords()) / z.radius();
  return prior.amplitude * std::exp(prior.lambda * (dot - 1.0));
}

double hyperbolic_density(const HyperbolicPrior& prior,
                          const HyperbolicPoint& z) {
  prior.validate();
  const double r = hyperbolic_distance(
      HyperbolicPoint::from_coords(prior.center), z);
  return std::exp(-r * r / (2 * prior.zeta * prior.zeta) -
                  log_normalizer(prior.zeta, prior.dim()));
}

Vector mobius_add(const Vector& x, const Vector& y) {
  const double xy = x.dot(y);
  const double xx = x.squaredNorm();
  const double yy = y.squaredNorm();
  const double denom = 1.0 + 2.0 * xy + xx * yy;
  return ((1.0 + 2.0 * xy + yy) * x + (1.0 - xx) * y) / denom;
}

std::vector<SphericalPoint> sample_spherical(const SphericalPrior& prior,
                                             double radius, std::size_t count,
                                             Rng& rng) {
  prior.validate();
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<SphericalPoint> out;
  out.reserve(count);
  while (out.size() < count) {
    std::uint64_t rejections = 0;
    for (;;) {
      const Vector u = random_direction(prior.beta.size(), rng);
      const double accept = std::exp(prior.lambda * (prior.beta.dot(u) - 1.0));
      if (unif(rng) < accept) {
        out.push_back(SphericalPoint::project(u * radius, radius));
        break;
      }
      if (++rejections >= kMaxRejections) {
        throw NumericalError(
            "sample_spherical: acceptance collapsed (lambda too large)");
      }
    }
  }
  return out;
}

double sample_geodesic_radius(double zeta, int d, Rng& rng) {
  check_zeta(zeta);
  check_dim(d);
  // Envelope: sinh^d(r) <= e^{d r} / 2^d turns the target into a Gaussian in
  // r with mean d zeta^2; accept with probability (1 - e^{-2r})^d.
  std::normal_distribution<double> normal(d * zeta * zeta, zeta);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (std::uint64_t tries = 0; tries < kMaxRejections; ++tries) {
    const double r = normal(rng);
    if (r <= 0.0) continue;
    const double accept = std::pow(-std::expm1(-2.0 * r), d);
    if (unif(rng) < accept) return r;
  }
  throw NumericalError("sample_hyperbolic: acceptance collapsed (zeta extreme)");
}

std::vector<HyperbolicPoint> sample_hyperbolic(const HyperbolicPrior& prior,
                                               std::size_t count, Rng& rng) {
  prior.validate();
  const int d = prior.dim();
  std::vector<HyperbolicPoint> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const double r = sample_geodesic_radius(prior.zeta, d, rng);
    const Vector u = random_direction(d + 1, rng);
    const Vector at_origin = std::tanh(r / 2.0) * u;
    out.push_back(HyperbolicPoint::clamped(mobius_add(prior.center, at_origin)));
  }
  return out;
}

}  // namespace nmm
