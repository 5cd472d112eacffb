#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "migdir/angle.hpp"
#include "migdir/fusion.hpp"
#include "migdir/loss.hpp"
#include "migdir/rng.hpp"
#include "migdir/von_mises.hpp"

using namespace migdir;

namespace {

// Reference evaluation: the power series summed in extended precision until
// it stops moving. Converges for every kappa; only its speed degrades, so it
// serves as the oracle on both sides of the implementation's series /
// asymptotic crossover.
long double i0_reference(long double k) {
  const long double q = (k / 2.0L) * (k / 2.0L);
  long double term = 1.0L;
  long double sum = 1.0L;
  for (int m = 1; m < 500; ++m) {
    term *= q / (static_cast<long double>(m) * static_cast<long double>(m));
    sum += term;
    if (term < sum * 1e-25L) break;
  }
  return sum;
}

double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300});
}

}  // namespace

TEST_CASE("bessel i0 examples") {
  CHECK(bessel_i0(0.0) == 1.0);
  CHECK(bessel_i0(1.0) == doctest::Approx(1.2660658777520084).epsilon(1e-13));
  CHECK(bessel_i0(5.0) == doctest::Approx(27.239871823604442).epsilon(1e-13));
  CHECK_THROWS_AS(bessel_i0(-1.0), std::domain_error);
  CHECK_THROWS_AS(bessel_i0(std::numeric_limits<double>::quiet_NaN()),
                  std::domain_error);
}

TEST_CASE("bessel i0 tracks the reference series on both branches") {
  const std::vector<double> grid{0.0,  0.1,  0.5,  1.0,  2.0,  5.0,  10.0,
                                 14.9, 15.0, 15.1, 16.0, 20.0, 30.0, 50.0,
                                 75.0, 100.0};
  for (double k : grid) {
    const double ref = static_cast<double>(i0_reference(k));
    CHECK(rel_err(bessel_i0(k), ref) < 1e-10);
  }
}

TEST_CASE("density basics") {
  CHECK_THROWS_AS(VonMises(Angle(0.0), 0.0), std::invalid_argument);
  CHECK_THROWS_AS(VonMises(Angle(0.0), -2.0), std::invalid_argument);

  const VonMises d(Angle(1.0), 1.0);
  // Peak value has the closed form e^kappa / (2 pi I0(kappa)).
  CHECK(d.pdf(Angle(1.0)) ==
        doctest::Approx(std::exp(1.0) / (kTwoPi * 1.2660658777520084)));
  // Antipode of the mean.
  CHECK(d.pdf(Angle(1.0 + kPi)) ==
        doctest::Approx(std::exp(-1.0) / (kTwoPi * 1.2660658777520084)));

  // Weak concentration flattens toward the uniform density.
  const VonMises flat(Angle(2.0), 1e-9);
  for (double t : {0.0, 1.0, 3.0, 5.0}) {
    CHECK(flat.pdf(Angle(t)) == doctest::Approx(1.0 / kTwoPi).epsilon(1e-8));
  }

  // Maximal at the mean direction.
  const VonMises peaked(Angle(4.0), 3.0);
  Rng rng(41);
  for (int i = 0; i < 1000; ++i) {
    CHECK(peaked.pdf(Angle(rng.uniform(0.0, kTwoPi))) <=
          peaked.pdf(Angle(4.0)));
  }
}

TEST_CASE("density integrates to one") {
  const int n = 10000;
  const double h = kTwoPi / n;
  for (double kappa : {0.5, 1.0, 5.0, 20.0}) {
    const VonMises d(Angle(2.5), kappa);
    double sum = 0.5 * (d.pdf(Angle(0.0)) + d.pdf(Angle(kTwoPi - 1e-15)));
    for (int i = 1; i < n; ++i) {
      sum += d.pdf(Angle(i * h));
    }
    CHECK(std::abs(sum * h - 1.0) < 1e-8);
  }
}

TEST_CASE("negative log-likelihood closed form") {
  const VonMises d(Angle(1.3), 1.0);
  const std::vector<Angle> at_mu{Angle(1.3)};
  CHECK(neg_log_likelihood(d, at_mu) ==
        doctest::Approx(-1.0 + std::log(kTwoPi * 1.2660658777520084))
            .epsilon(1e-12));

  // Vanishing concentration: every sample contributes just the normalizer.
  const VonMises flat(Angle(0.7), 1e-12);
  const std::vector<Angle> sample{Angle(0.1), Angle(2.0), Angle(4.4),
                                  Angle(5.9)};
  CHECK(neg_log_likelihood(flat, sample) ==
        doctest::Approx(4.0 * std::log(kTwoPi)).epsilon(1e-9));

  CHECK_THROWS_AS(neg_log_likelihood(d, std::span<const Angle>{}),
                  std::invalid_argument);
}

TEST_CASE("likelihood is an affine function of the summed cosine loss") {
  Rng rng(42);
  for (int trial = 0; trial < 200; ++trial) {
    const double kappa = rng.uniform(0.05, 40.0);
    const Angle mu(rng.uniform(0.0, kTwoPi));
    const std::size_t n = 1 + rng.uniform_index(50);
    std::vector<Angle> sample;
    for (std::size_t i = 0; i < n; ++i) {
      sample.emplace_back(rng.uniform(0.0, kTwoPi));
    }

    double cos_sum = 0.0;
    for (const Angle& t : sample) {
      const double p[1] = {t.radians()};
      const double m[1] = {mu.radians()};
      cos_sum += loss(LossKind::Cos, p, m).value;
    }
    const double affine =
        kappa * cos_sum +
        static_cast<double>(n) * std::log(kTwoPi * bessel_i0(kappa));

    const VonMises d(mu, kappa);
    const double nll = neg_log_likelihood(d, sample);
    CHECK(rel_err(nll, affine) < 1e-12);
  }
}

TEST_CASE("likelihood is minimized at the circular mean") {
  Rng rng(43);
  std::vector<Angle> sample;
  for (int i = 0; i < 25; ++i) {
    sample.emplace_back(rng.uniform(1.0, 3.5));
  }
  const int grid = 100000;
  const double step = kTwoPi / grid;
  double best_nll = std::numeric_limits<double>::infinity();
  double best_mu = 0.0;
  for (int g = 0; g < grid; ++g) {
    const double mu = g * step;
    const double nll = neg_log_likelihood(VonMises(Angle(mu), 2.0), sample);
    if (nll < best_nll) {
      best_nll = nll;
      best_mu = mu;
    }
  }
  CHECK(cyclic_distance(Angle(best_mu), circular_mean(sample)) <= step);
}
