#include "migdir/loss.hpp"

#include <cmath>
#include <stdexcept>

#include "migdir/angle.hpp"
#include "migdir/errors.hpp"

namespace migdir {
namespace {

// Subgradient convention: 0 at u = 0.
double sgn(double u) { return u > 0.0 ? 1.0 : (u < 0.0 ? -1.0 : 0.0); }

LossResult angle_loss(LossKind kind, double alpha, double beta) {
  const double u = alpha - beta;
  LossResult r;
  r.arity = 1;
  switch (kind) {
    case LossKind::Linear:
      r.value = std::abs(u);
      r.grad[0] = sgn(u);
      break;
    case LossKind::LinearSq:
      r.value = u * u;
      r.grad[0] = 2.0 * u;
      break;
    case LossKind::Cyclic: {
      const double a = std::abs(u);
      if (a <= kTwoPi - a) {  // min() picks the |a - b| branch on ties
        r.value = a;
        r.grad[0] = sgn(u);
      } else {
        r.value = kTwoPi - a;
        r.grad[0] = -sgn(u);
      }
      break;
    }
    case LossKind::CyclicSq: {
      const LossResult c = angle_loss(LossKind::Cyclic, alpha, beta);
      r.value = c.value * c.value;
      r.grad[0] = 2.0 * c.value * c.grad[0];
      break;
    }
    case LossKind::Cos:
      r.value = -std::cos(u);
      r.grad[0] = std::sin(u);
      break;
    default:
      throw std::invalid_argument("angle_loss: not an angle loss");
  }
  return r;
}

LossResult coord_loss(LossKind kind, double x1, double y1, double x2,
                      double y2) {
  const double dx = x1 - x2;
  const double dy = y1 - y2;
  const double s = std::abs(dx) + std::abs(dy);
  LossResult r;
  r.arity = 2;
  if (kind == LossKind::Dist) {
    r.value = s;
    r.grad = {sgn(dx), sgn(dy)};
  } else {
    r.value = s * s;
    r.grad = {2.0 * s * sgn(dx), 2.0 * s * sgn(dy)};
  }
  return r;
}

}  // namespace

int loss_arity(LossKind kind) {
  return (kind == LossKind::Dist || kind == LossKind::DistSq) ? 2 : 1;
}

LossResult loss(LossKind kind, std::span<const double> prediction,
                std::span<const double> target) {
  const std::size_t arity = static_cast<std::size_t>(loss_arity(kind));
  if (prediction.size() != arity || target.size() != arity) {
    throw std::invalid_argument("loss: prediction/target arity mismatch");
  }
  if (arity == 1) {
    return angle_loss(kind, prediction[0], target[0]);
  }
  return coord_loss(kind, prediction[0], prediction[1], target[0], target[1]);
}

LossResult batch_loss(LossKind kind, std::span<const double> predictions,
                      std::span<const double> targets) {
  const std::size_t arity = static_cast<std::size_t>(loss_arity(kind));
  if (predictions.empty() || predictions.size() % arity != 0) {
    throw std::invalid_argument("batch_loss: empty or ragged batch");
  }
  if (predictions.size() != targets.size()) {
    throw std::invalid_argument("batch_loss: prediction/target size mismatch");
  }
  const std::size_t n = predictions.size() / arity;
  LossResult mean;
  mean.arity = static_cast<int>(arity);
  for (std::size_t i = 0; i < n; ++i) {
    const LossResult one = loss(kind, predictions.subspan(i * arity, arity),
                                targets.subspan(i * arity, arity));
    mean.value += one.value;
    mean.grad[0] += one.grad[0];
    mean.grad[1] += one.grad[1];
  }
  mean.value /= static_cast<double>(n);
  mean.grad[0] /= static_cast<double>(n);
  mean.grad[1] /= static_cast<double>(n);
  return mean;
}

std::string to_string(LossKind kind) {
  switch (kind) {
    case LossKind::Linear:
      return "linear";
    case LossKind::LinearSq:
      return "linear_sq";
    case LossKind::Cyclic:
      return "cyclic";
    case LossKind::CyclicSq:
      return "cyclic_sq";
    case LossKind::Cos:
      return "cos";
    case LossKind::Dist:
      return "dist";
    case LossKind::DistSq:
      return "dist_sq";
  }
  return "?";
}

LossKind loss_from_string(const std::string& name) {
  if (name == "linear") return LossKind::Linear;
  if (name == "linear_sq") return LossKind::LinearSq;
  if (name == "cyclic") return LossKind::Cyclic;
  if (name == "cyclic_sq") return LossKind::CyclicSq;
  if (name == "cos") return LossKind::Cos;
  if (name == "dist") return LossKind::Dist;
  if (name == "dist_sq") return LossKind::DistSq;
  throw ConfigError("unknown loss: " + name);
}

}  // namespace migdir
