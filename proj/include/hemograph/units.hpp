#pragma once

namespace hemograph {

// Internal unit system is CGS: cm, g, s. Pressures are in barye (dyn/cm^2),
// flows in cm^3/s, resistances in barye*s/cm^3, capacitances in cm^3/barye.

inline constexpr double kBaryePerMmHg = 1333.22;

inline constexpr double mmhg_to_barye(double p) { return p * kBaryePerMmHg; }
inline constexpr double barye_to_mmhg(double p) { return p / kBaryePerMmHg; }

// Blood properties used throughout (dynamic viscosity in g/(cm*s),
// density in g/cm^3, kinematic viscosity in cm^2/s).
inline constexpr double kBloodViscosity = 0.04;
inline constexpr double kBloodDensity = 1.06;
inline constexpr double kBloodKinematicViscosity = 3.77e-2;

}  // namespace hemograph
