#include "migdir/angle.hpp"

#include <cmath>
#include <stdexcept>

#include "migdir/errors.hpp"

namespace migdir {

Angle::Angle(double radians) {
  if (!std::isfinite(radians)) {
    throw std::domain_error("Angle: input must be finite");
  }
  double r = std::fmod(radians, kTwoPi);
  if (r < 0.0) {
    r += kTwoPi;
  }
  // Adding 2*pi to a tiny negative remainder can round up to exactly 2*pi.
  if (r >= kTwoPi) {
    r = 0.0;
  }
  radians_ = r;
}

Angle Angle::from_degrees(double degrees) {
  return Angle(degrees * (kPi / 180.0));
}

bool UnitDirection::on_unit_circle(double tol) const {
  return std::abs(x * x + y * y - 1.0) <= tol;
}

Angle wrap(double radians) { return Angle(radians); }

UnitDirection angle_to_unit(Angle a) {
  return UnitDirection{std::cos(a.radians()), std::sin(a.radians())};
}

Angle unit_to_angle(double x, double y) {
  if (std::hypot(x, y) <= 1e-12) {
    throw DegenerateDirection("unit_to_angle: vector too close to the origin");
  }
  return Angle(std::atan2(y, x));
}

double cyclic_distance(Angle a, Angle b) {
  const double d = std::abs(a.radians() - b.radians());
  return std::min(d, kTwoPi - d);
}

}  // namespace migdir
