#pragma once

#include <cmath>

#include "hemograph/errors.hpp"

namespace hemograph {

/// Cosine annealing from lr0 (epoch 0) to lr_final (epoch == total_epochs).
inline double cosine_lr(double epoch, double total_epochs, double lr0, double lr_final) {
  if (!(epoch >= 0.0 && epoch <= total_epochs))
    throw contract_error("cosine_lr: epoch out of [0, total_epochs]");
  return lr_final + 0.5 * (lr0 - lr_final) * (1.0 + std::cos(M_PI * epoch / total_epochs));
}

}  // namespace hemograph
