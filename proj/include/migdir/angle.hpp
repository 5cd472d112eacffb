#pragma once

#include <compare>
#include <numbers>

namespace migdir {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// A direction on the circle, stored in radians and always in [0, 2*pi).
/// Construction wraps any finite input; non-finite input throws
/// std::domain_error. Angles follow the image coordinate frame: +x points
/// right, +y points down, and the angle is measured from +x toward +y
/// (90 degrees points down in a rendered image).
class Angle {
 public:
  constexpr Angle() = default;
  explicit Angle(double radians);

  static Angle from_degrees(double degrees);

  double radians() const { return radians_; }
  double degrees() const { return radians_ * (180.0 / kPi); }

  friend constexpr bool operator==(Angle, Angle) = default;
  friend constexpr auto operator<=>(Angle, Angle) = default;

 private:
  double radians_ = 0.0;
};

/// A point (x, y) meant to lie on the unit circle. Raw network outputs are
/// kept as plain (x, y) doubles until decoded; this type is for values that
/// are supposed to satisfy x^2 + y^2 = 1.
struct UnitDirection {
  double x = 1.0;
  double y = 0.0;

  bool on_unit_circle(double tol = 1e-9) const;
};

/// Mathematical mod into [0, 2*pi): x - 2*pi*floor(x / 2*pi).
/// Always non-negative, idempotent on already-wrapped values.
Angle wrap(double radians);

/// (cos a, sin a); the result is on the unit circle.
UnitDirection angle_to_unit(Angle a);

/// Direction of the (possibly unnormalized) vector (x, y).
/// Throws DegenerateDirection if (x, y) is within 1e-12 of the origin.
Angle unit_to_angle(double x, double y);

/// Shortest arc between two directions: min(|a-b|, 2*pi - |a-b|), in [0, pi].
double cyclic_distance(Angle a, Angle b);

}  // namespace migdir
