#include "migdir/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>

#include "migdir/errors.hpp"

namespace migdir {

Angle fuse_predictions(std::span<const Angle> predictions) {
  if (predictions.empty()) {
    throw std::domain_error("fuse_predictions: empty prediction set");
  }
  const std::size_t n = predictions.size();
  std::vector<double> p(n);
  for (std::size_t i = 0; i < n; ++i) {
    p[i] = predictions[i].radians();
  }
  std::sort(p.begin(), p.end());

  // Rotation k of the circular order is {p[k], ..., p[n-1], p[0]+2pi, ...,
  // p[k-1]+2pi}, which is already ascending, so its spread is last - first.
  std::size_t best_k = 0;
  double best_span = p[n - 1] - p[0];
  for (std::size_t k = 1; k < n; ++k) {
    const double span = (p[k - 1] + kTwoPi) - p[k];
    if (span < best_span) {
      best_span = span;
      best_k = k;
    }
  }

  double sum = 0.0;
  for (std::size_t i = best_k; i < n; ++i) {
    sum += p[i];
  }
  for (std::size_t i = 0; i < best_k; ++i) {
    sum += p[i] + kTwoPi;
  }
  return Angle(sum / static_cast<double>(n));
}

Angle circular_mean(std::span<const Angle> predictions) {
  if (predictions.empty()) {
    throw std::domain_error("circular_mean: empty prediction set");
  }
  double sx = 0.0;
  double sy = 0.0;
  for (const Angle a : predictions) {
    sx += std::cos(a.radians());
    sy += std::sin(a.radians());
  }
  if (std::hypot(sx, sy) <= 1e-9) {
    throw DegenerateDirection("circular_mean: vanishing resultant vector");
  }
  return Angle(std::atan2(sy, sx));
}

}  // namespace migdir
