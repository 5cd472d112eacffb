#pragma once

#include <string>

namespace migdir {

/// Output-layer activation of the direction head.
/// Cyclic is only valid for 1-neuron (angle) heads; Identity and SigmoidLike
/// only for 2-neuron (unit circle) heads.
enum class ActivationKind {
  Cyclic,       // x mod 2*pi
  Identity,     // x
  SigmoidLike,  // (e^x - 1) / (e^x + 1), range (-1, 1)
};

struct ActResult {
  double value = 0.0;
  double derivative = 0.0;
};

/// Value and derivative of the head activation at z. The Cyclic derivative is
/// taken as 1 everywhere, ignoring the jump at multiples of 2*pi. Throws
/// std::domain_error on non-finite input; SigmoidLike is overflow-safe for
/// any finite z.
ActResult activate(ActivationKind kind, double z);

std::string to_string(ActivationKind kind);
ActivationKind activation_from_string(const std::string& name);

}  // namespace migdir
