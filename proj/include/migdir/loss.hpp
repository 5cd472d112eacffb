#pragma once

#include <array>
#include <span>
#include <string>

namespace migdir {

/// Training losses. The first five compare an angle prediction to an angle
/// target (arity 1); Dist and DistSq compare (x, y) coordinate pairs
/// (arity 2).
enum class LossKind {
  Linear,    // |a - b|
  LinearSq,  // (a - b)^2
  Cyclic,    // min(|a - b|, 2*pi - |a - b|)
  CyclicSq,  // cyclic^2
  Cos,       // -cos(a - b)
  Dist,      // |x1 - x2| + |y1 - y2|
  DistSq,    // (|x1 - x2| + |y1 - y2|)^2
};

/// Number of prediction components the loss consumes (1 or 2).
int loss_arity(LossKind kind);

struct LossResult {
  double value = 0.0;
  std::array<double, 2> grad{0.0, 0.0};  // d value / d prediction
  int arity = 1;
};

/// Loss value and its analytic (sub)gradient with respect to the prediction.
/// At non-smooth points the subgradient of |u| is taken as 0 at u = 0, and
/// the cyclic loss at |a - b| = pi follows the branch min() selects first.
/// Throws std::invalid_argument when the spans do not match the loss arity.
LossResult loss(LossKind kind, std::span<const double> prediction,
                std::span<const double> target);

/// Arithmetic mean of per-sample loss values and gradients over a batch laid
/// out as n consecutive arity-sized groups. Throws on an empty batch or on a
/// length mismatch.
LossResult batch_loss(LossKind kind, std::span<const double> predictions,
                      std::span<const double> targets);

std::string to_string(LossKind kind);
LossKind loss_from_string(const std::string& name);

}  // namespace migdir
