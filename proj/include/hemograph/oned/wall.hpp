#pragma once

#include <cmath>

#include "hemograph/errors.hpp"

namespace hemograph {

/// Algebraic pressure-area constitutive law with exponential stiffness
/// profile. Rigid behavior is emulated with k1 = 0 and a large k3.
struct WallModel {
  double k1 = 2.0e7;     // barye
  double k2 = -22.5267;  // 1/cm
  double k3 = 8.65e5;    // barye

  static WallModel rigid(double k3 = 1.0e9) { return WallModel{0.0, -22.5267, k3}; }

  /// 4/3 (k1 e^{k2 r0} + k3)
  double stiffness(double r0) const {
    const double s = (4.0 / 3.0) * (k1 * std::exp(k2 * r0) + k3);
    if (!(s > 0.0)) throw validation_error("wall: non-positive stiffness");
    return s;
  }
};

inline double wall_pressure(const WallModel& wall, double A, double A0, double r0, double p0) {
  if (!(A > 0.0 && A0 > 0.0)) throw validation_error("wall_pressure: non-positive area");
  // 1 - sqrt(A0/A) written as (1 - A0/A)/(1 + sqrt(A0/A)); for stiff walls the
  // naive form loses ~eps*stiffness barye to cancellation, which would put a
  // noise floor above the Newton tolerance of the 1D solver.
  const double ratio = A0 / A;
  const double s = ((A - A0) / A) / (1.0 + std::sqrt(ratio));
  return p0 + wall.stiffness(r0) * s;
}

/// Inverse of wall_pressure in A (valid while p - p0 < stiffness).
inline double wall_area(const WallModel& wall, double p, double A0, double r0, double p0) {
  const double s = wall.stiffness(r0);
  const double ratio = 1.0 - (p - p0) / s;
  if (!(ratio > 0.0)) throw numerical_error("wall_area: pressure exceeds wall-law range");
  return A0 / (ratio * ratio);
}

}  // namespace hemograph
