#include "migdir/activation.hpp"

#include <cmath>
#include <stdexcept>

#include "migdir/angle.hpp"
#include "migdir/errors.hpp"

namespace migdir {

ActResult activate(ActivationKind kind, double z) {
  if (!std::isfinite(z)) {
    throw std::domain_error("activate: input must be finite");
  }
  switch (kind) {
    case ActivationKind::Cyclic:
      return {wrap(z).radians(), 1.0};
    case ActivationKind::Identity:
      return {z, 1.0};
    case ActivationKind::SigmoidLike: {
      // (e^z - 1) / (e^z + 1), evaluated on the side that cannot overflow.
      // Algebraically equal to tanh(z / 2).
      double v;
      if (z >= 0.0) {
        const double e = std::exp(-z);
        v = (1.0 - e) / (1.0 + e);
      } else {
        const double e = std::exp(z);
        v = (e - 1.0) / (e + 1.0);
      }
      return {v, (1.0 - v * v) / 2.0};
    }
  }
  throw ConfigError("activate: unknown activation kind");
}

std::string to_string(ActivationKind kind) {
  switch (kind) {
    case ActivationKind::Cyclic:
      return "cyclic";
    case ActivationKind::Identity:
      return "identity";
    case ActivationKind::SigmoidLike:
      return "sigmoid";
  }
  return "?";
}

ActivationKind activation_from_string(const std::string& name) {
  if (name == "cyclic") return ActivationKind::Cyclic;
  if (name == "identity") return ActivationKind::Identity;
  if (name == "sigmoid") return ActivationKind::SigmoidLike;
  throw ConfigError("unknown activation: " + name);
}

}  // namespace migdir
