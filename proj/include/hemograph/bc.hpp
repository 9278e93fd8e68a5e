#pragma once

#include "hemograph/errors.hpp"

namespace hemograph {

/// Lumped outlet boundary condition. Three-element Windkessel (proximal
/// resistance, capacitance, distal resistance), or pure resistance as the
/// degenerate case with C = Rd = 0.
struct RcrParams {
  enum class Mode { rcr, resistance };

  double Rp = 0.0;  // barye*s/cm^3
  double C = 0.0;   // cm^3/barye
  double Rd = 0.0;  // barye*s/cm^3
  Mode mode = Mode::rcr;

  static RcrParams windkessel(double Rp, double C, double Rd) {
    RcrParams bc{Rp, C, Rd, Mode::rcr};
    bc.validate();
    return bc;
  }

  static RcrParams resistance(double R) {
    RcrParams bc{R, 0.0, 0.0, Mode::resistance};
    bc.validate();
    return bc;
  }

  void validate() const {
    require(Rp >= 0.0, "RcrParams: Rp must be >= 0");
    if (mode == Mode::rcr) {
      require(C > 0.0 && Rd > 0.0, "RcrParams: rcr mode requires C > 0 and Rd > 0");
    } else {
      require(C == 0.0 && Rd == 0.0, "RcrParams: resistance mode forces C = Rd = 0");
    }
  }
};

}  // namespace hemograph
