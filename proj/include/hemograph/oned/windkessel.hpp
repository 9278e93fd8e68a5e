#pragma once

#include <cmath>

#include "hemograph/bc.hpp"
#include "hemograph/errors.hpp"

namespace hemograph {

/// 8 mu L / (pi r^4)
inline double poiseuille_resistance(double mu, double L, double r) {
  if (!(mu > 0.0 && L > 0.0 && r > 0.0))
    throw validation_error("poiseuille_resistance: inputs must be positive");
  return 8.0 * mu * L / (M_PI * r * r * r * r);
}

/// One backward-Euler step of dPc/dt = (Q - Pc/Rd)/C.
inline double rcr_update(const RcrParams& bc, double Pc, double Q, double dt) {
  if (bc.mode != RcrParams::Mode::rcr)
    throw contract_error("rcr_update: resistance-mode condition has no capacitor state");
  require(dt > 0.0, "rcr_update: dt must be positive");
  return (Pc + dt * Q / bc.C) / (1.0 + dt / (bc.Rd * bc.C));
}

/// Outlet pressure: Pc + Rp Q (Windkessel) or R Q (pure resistance, with the
/// resistance carried in Rp).
inline double outlet_pressure(const RcrParams& bc, double Pc, double Q) {
  if (bc.mode == RcrParams::Mode::resistance) return bc.Rp * Q;
  return Pc + bc.Rp * Q;
}

}  // namespace hemograph
