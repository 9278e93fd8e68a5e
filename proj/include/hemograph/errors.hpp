#pragma once

#include <stdexcept>
#include <string>

namespace hemograph {

struct error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Invalid graph/tree structure (multiple inlets, disconnected segments, ...).
struct topology_error : error {
  using error::error;
};

/// Input values outside their contract (non-positive area, bad channel count, ...).
struct validation_error : error {
  using error::error;
};

/// NaN/Inf encountered, or an iteration diverged.
struct numerical_error : error {
  using error::error;
};

/// Newton (or another iterative scheme) failed to converge.
struct solver_error : error {
  using error::error;
};

/// API misuse (stale cache, wrong mode, out-of-range index).
struct contract_error : error {
  using error::error;
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw validation_error(msg);
}

}  // namespace hemograph
