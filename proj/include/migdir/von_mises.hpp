#pragma once

#include <span>

#include "migdir/angle.hpp"

namespace migdir {

/// Modified Bessel function of the first kind, order zero. Power series up to
/// kappa = 15, asymptotic expansion above; relative error < 1e-10 on [0, 100].
/// Throws std::domain_error on negative or non-finite input.
double bessel_i0(double kappa);

/// Circular distribution with mean direction mu and concentration kappa > 0.
struct VonMises {
  Angle mu;
  double kappa;

  VonMises(Angle mu_, double kappa_);

  double pdf(Angle theta) const;
};

/// Negative log-likelihood of a sample:
///   -kappa * sum cos(t_i - mu) + n * log(2 pi I0(kappa)).
/// The cosine sum is accumulated in sample order so the result matches the
/// per-sample cosine-loss sum bit for bit. Throws on an empty sample.
double neg_log_likelihood(const VonMises& dist, std::span<const Angle> sample);

}  // namespace migdir
