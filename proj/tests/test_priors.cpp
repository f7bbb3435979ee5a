#include <gtest/gtest.h>

#include <boost/math/special_functions/gamma.hpp>

#include <cmath>
#include <numbers>

#include "nmm/error.hpp"
#include "nmm/priors.hpp"
#include "support.hpp"

namespace nmm {
namespace {

constexpr double kPi = std::numbers::pi;

// The defining integral of Z_r, evaluated by quadrature.
double radial_density(double r, double zeta, int d) {
  if (r <= 0.0) return 0.0;
  const double log_sinh = r + std::log1p(-std::exp(-2.0 * r)) - std::log(2.0);
  return std::exp(-r * r / (2 * zeta * zeta) + d * log_sinh);
}

double radial_integral(double zeta, int d, int moment = 0) {
  return testing::integrate(
      [&](double r) { return radial_density(r, zeta, d) * std::pow(r, 2 * moment); },
      0.0, std::numeric_limits<double>::infinity(), 1e-12);
}

SphericalPrior lobe(int d, double lambda, double a = 1.0) {
  return {Vector::Unit(d, 0), lambda, a};
}

TEST(SphericalDensity, FlatLobeIsConstant) {
  testing::Rng rng(1);
  const auto z = SphericalPoint::from_coords(testing::sphere_coords(3, 0.5, rng), 0.5);
  EXPECT_DOUBLE_EQ(spherical_density(lobe(3, 0.0, 2.5), z), 2.5);
}

TEST(SphericalDensity, PeakAndAntipode) {
  const auto peak = SphericalPoint::from_coords(Vector::Unit(3, 0) * 0.5, 0.5);
  const auto anti = SphericalPoint::from_coords(-Vector::Unit(3, 0) * 0.5, 0.5);
  EXPECT_DOUBLE_EQ(spherical_density(lobe(3, 7.0, 1.5), peak), 1.5);
  EXPECT_NEAR(spherical_density(lobe(3, 2.0), anti), std::exp(-4.0), 1e-15);
}

TEST(SphericalPrior, Validation) {
  EXPECT_THROW((SphericalPrior{Vector::Constant(3, 1.0), 1.0, 1.0}.validate()), ContractViolation);
  EXPECT_THROW((SphericalPrior{Vector::Unit(3, 0), -1.0, 1.0}.validate()), ContractViolation);
  EXPECT_THROW((SphericalPrior{Vector::Unit(3, 0), 1.0, 0.0}.validate()), ContractViolation);
}

TEST(AngularNormalizer, ClosedForms) {
  EXPECT_NEAR(angular_normalizer(1), 2.0, 1e-14);
  EXPECT_NEAR(angular_normalizer(2), kPi, 1e-14);
  EXPECT_NEAR(angular_normalizer(3), 4.0 * kPi / 3.0, 1e-13);
  EXPECT_THROW(angular_normalizer(0), ContractViolation);
}

TEST(ScaledErfc, MatchesStdlibWhereRepresentable) {
  for (double x : {-3.0, -0.5, 0.0, 0.7, 3.9, 4.1, 8.0, 20.0}) {
    const double expected = std::exp(x * x) * std::erfc(x);
    EXPECT_NEAR(scaled_erfc(x), expected, 1e-13 * expected) << x;
  }
  // Asymptotic 1 / (x sqrt(pi)) far out where erfc underflows.
  EXPECT_NEAR(scaled_erfc(1e4) * 1e4 * std::sqrt(kPi), 1.0, 1e-8);
}

TEST(RadialNormalizer, OneDimensionalClosedForm) {
  const double expected = std::sqrt(kPi / 2) * std::exp(0.5) * std::erf(1 / std::sqrt(2.0));
  EXPECT_NEAR(radial_normalizer(1.0, 1), expected, 1e-12);
  EXPECT_NEAR(radial_normalizer(1.0, 1), 1.41065, 5e-5);
  EXPECT_NEAR(radial_normalizer(1.0, 1), radial_integral(1.0, 1), 1e-8 * expected);
}

TEST(RadialNormalizer, AgreesWithQuadrature) {
  for (int d = 1; d <= 6; ++d) {
    for (double zeta : {0.25, 0.5, 1.0, 2.0}) {
      const double q = radial_integral(zeta, d);
      EXPECT_NEAR(radial_normalizer(zeta, d) / q, 1.0, 1e-6) << "d=" << d << " zeta=" << zeta;
    }
  }
}

TEST(RadialNormalizer, SmallZetaFallback) {
  // The alternating sum cancels here; the log-space quadrature takes over.
  const double q = radial_integral(0.05, 12);
  EXPECT_NEAR(log_radial_normalizer(0.05, 12), std::log(q), 1e-6);
  EXPECT_LT(radial_normalizer(1e-3, 3), 1e-10);
}

TEST(RadialNormalizer, LargeArgumentsStayFinite) {
  const double v = log_radial_normalizer(3.0, 32);
  EXPECT_TRUE(std::isfinite(v));
  EXPECT_GT(v, 400.0);  // ~ d^2 zeta^2 / 2
}

TEST(LogNormalizer, DerivativeMatchesMomentIdentity) {
  // d log Z_r / d zeta = E[r^2] / zeta^3.
  for (int d : {1, 3, 6}) {
    for (double zeta : {0.3, 1.0}) {
      const double expected = radial_integral(zeta, d, 1) / radial_integral(zeta, d) / std::pow(zeta, 3);
      EXPECT_NEAR(log_normalizer_derivative(zeta, d), expected, 1e-7 * expected);
    }
  }
  EXPECT_THROW(log_normalizer(0.0, 2), ContractViolation);
}

TEST(HyperbolicDensity, PeakAndHalfPeak) {
  const HyperbolicPrior prior{Vector::Zero(3), 0.7};
  const double peak = hyperbolic_density(prior, HyperbolicPoint::from_coords(Vector::Zero(3)));
  EXPECT_NEAR(peak, std::exp(-log_normalizer(0.7, 2)), 1e-15);
  // Geodesic radius r sits at ball radius tanh(r / 2).
  const double r = 0.7 * std::sqrt(2 * std::log(2.0));
  const auto z = HyperbolicPoint::from_coords(Vector::Unit(3, 1) * std::tanh(r / 2));
  EXPECT_NEAR(hyperbolic_density(prior, z), peak / 2, 1e-12 * peak);
}

TEST(HyperbolicDensity, ComposesDistanceAndNormalizer) {
  testing::Rng rng(2);
  const Vector center = testing::ball_coords(4, 0.5, rng);
  const HyperbolicPrior prior{center, 1.3};
  for (int t = 0; t < 20; ++t) {
    const auto z = HyperbolicPoint::from_coords(testing::ball_coords(4, 0.9, rng));
    const double dist = hyperbolic_distance(HyperbolicPoint::from_coords(center), z);
    const double expected = std::exp(-dist * dist / (2 * 1.3 * 1.3)) /
                            (angular_normalizer(3) * radial_integral(1.3, 3));
    EXPECT_NEAR(hyperbolic_density(prior, z), expected, 1e-7 * expected);
  }
}

TEST(MobiusAdd, OriginIsIdentity) {
  testing::Rng rng(3);
  const Vector x = testing::ball_coords(3, 0.9, rng);
  EXPECT_LT((mobius_add(x, Vector::Zero(3)) - x).norm(), 1e-15);
  EXPECT_LT((mobius_add(Vector::Zero(3), x) - x).norm(), 1e-15);
  EXPECT_LT(mobius_add(-x, x).norm(), 1e-15);
}

TEST(SampleSpherical, EmptyAndDeterministic) {
  testing::Rng a(4), b(4);
  EXPECT_TRUE(sample_spherical(lobe(3, 1.0), 0.5, 0, a).empty());
  const auto s1 = sample_spherical(lobe(3, 1.0), 0.5, 50, a);
  testing::Rng c(4);
  sample_spherical(lobe(3, 1.0), 0.5, 0, c);
  const auto s2 = sample_spherical(lobe(3, 1.0), 0.5, 50, c);
  for (std::size_t i = 0; i < s1.size(); ++i) EXPECT_EQ(s1[i].coords(), s2[i].coords());
}

TEST(SampleSpherical, FlatLobeIsUniform) {
  testing::Rng rng(5);
  const auto pts = sample_spherical(lobe(3, 0.0), 0.5, 10000, rng);
  Vector mean = Vector::Zero(3);
  for (const auto& p : pts) {
    EXPECT_NEAR(p.coords().norm(), 0.5, 1e-12);
    mean += p.coords() / 0.5;
  }
  EXPECT_LT((mean / 10000.0).norm(), 0.05);
}

TEST(SampleSpherical, SharpLobeConcentrates) {
  testing::Rng rng(6);
  const auto pts = sample_spherical(lobe(3, 20.0), 0.5, 2000, rng);
  double mean_dot = 0;
  for (const auto& p : pts) mean_dot += p.coords()(0) / 0.5;
  // E[beta . u] = coth(lambda) - 1/lambda for the 3D lobe.
  EXPECT_NEAR(mean_dot / 2000.0, 1.0 / std::tanh(20.0) - 1.0 / 20.0, 0.01);
}

TEST(SampleHyperbolic, RadiiFollowTheRadialDensity) {
  const double zeta = 0.8;
  const int d = 3;
  testing::Rng rng(7);
  const auto pts = sample_hyperbolic(HyperbolicPrior{Vector::Zero(d + 1), zeta}, 10000, rng);

  // Chi-square over equal-width bins; the last bin absorbs the tail.
  const int bins = 20;
  const double width = (d * zeta * zeta + 3.0 * zeta) / bins;
  std::vector<double> observed(bins, 0.0);
  for (const auto& p : pts) {
    const double r = 2.0 * std::atanh(p.norm());
    observed[std::min(bins - 1, static_cast<int>(r / width))] += 1.0;
  }
  const double total = radial_integral(zeta, d);
  double chi2 = 0.0;
  for (int b = 0; b < bins; ++b) {
    const double upper = b == bins - 1 ? std::numeric_limits<double>::infinity() : width * (b + 1);
    const double mass = testing::integrate(
        [&](double r) { return radial_density(r, zeta, d); },
        width * b, upper, 1e-10) / total;
    const double expected = mass * 10000.0;
    chi2 += (observed[b] - expected) * (observed[b] - expected) / expected;
  }
  const double p_value = boost::math::gamma_q((bins - 1) / 2.0, chi2 / 2.0);
  EXPECT_GT(p_value, 0.01) << "chi2=" << chi2;
}

TEST(SampleHyperbolic, PointsInsideBallAndReproducible) {
  testing::Rng a(8), b(8);
  const HyperbolicPrior prior{Vector::Zero(5), 1.5};
  const auto x = sample_hyperbolic(prior, 100, a);
  const auto y = sample_hyperbolic(prior, 100, b);
  for (std::size_t i = 0; i < x.size(); ++i) {
    EXPECT_LT(x[i].norm(), 1.0);
    EXPECT_EQ(x[i].coords(), y[i].coords());
  }
}

TEST(SampleHyperbolic, ShiftedCenter) {
  testing::Rng rng(9);
  Vector c = Vector::Zero(3);
  c(0) = 0.5;
  const auto pts = sample_hyperbolic(HyperbolicPrior{c, 0.1}, 500, rng);
  for (const auto& p : pts) {
    EXPECT_LT(hyperbolic_distance(p, HyperbolicPoint::from_coords(c)), 1.0);
  }
}

}  // namespace
}  // namespace nmm
