#include "migdir/von_mises.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace migdir {

double bessel_i0(double kappa) {
  if (!std::isfinite(kappa) || kappa < 0.0) {
    throw std::domain_error("bessel_i0: argument must be finite and >= 0");
  }
  const double k = kappa;
  if (k <= 15.0) {
    // sum_m ((k/2)^2)^m / (m!)^2, term ratio q / m^2
    const double q = (k / 2.0) * (k / 2.0);
    double term = 1.0;
    double sum = 1.0;
    for (int m = 1; m < 200; ++m) {
      term *= q / (static_cast<double>(m) * static_cast<double>(m));
      sum += term;
      if (term < sum * std::numeric_limits<double>::epsilon()) break;
    }
    return sum;
  }
  // e^k / sqrt(2 pi k) * sum_j a_j / k^j with a_0 = 1 and
  // a_j / a_{j-1} = (2j-1)^2 / (8j). Truncated at the smallest term.
  double term = 1.0;
  double sum = 1.0;
  for (int j = 1; j < 40; ++j) {
    const double ratio =
        (2.0 * j - 1.0) * (2.0 * j - 1.0) / (8.0 * j * k);
    if (ratio >= 1.0) break;  // terms started growing; stop at the minimum
    term *= ratio;
    sum += term;
    if (term < sum * std::numeric_limits<double>::epsilon()) break;
  }
  return std::exp(k) / std::sqrt(kTwoPi * k) * sum;
}

VonMises::VonMises(Angle mu_, double kappa_) : mu(mu_), kappa(kappa_) {
  if (!std::isfinite(kappa) || kappa <= 0.0) {
    throw std::invalid_argument("VonMises: kappa must be positive and finite");
  }
}

double VonMises::pdf(Angle theta) const {
  return std::exp(kappa * std::cos(theta.radians() - mu.radians())) /
         (kTwoPi * bessel_i0(kappa));
}

double neg_log_likelihood(const VonMises& dist,
                          std::span<const Angle> sample) {
  if (sample.empty()) {
    throw std::invalid_argument("neg_log_likelihood: empty sample");
  }
  double acc = 0.0;
  for (const Angle& t : sample) {
    acc += -std::cos(t.radians() - dist.mu.radians());
  }
  return dist.kappa * acc +
         static_cast<double>(sample.size()) *
             std::log(kTwoPi * bessel_i0(dist.kappa));
}

}  // namespace migdir
