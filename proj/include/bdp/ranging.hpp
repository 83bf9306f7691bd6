#pragma once

// RSSI ranging against a transmitter's calibrated power at 1 m.
//
// With R1 the calibrated power and R2 the measured RSSI (both dBm):
//   dbm_ratio    = R1 - R2
//   linear_ratio = 10^(dbm_ratio / 10)
//   distance     = sqrt(linear_ratio)          (free-space 1/r^2 fall-off)
//
// Real rooms reflect, absorb and shadow; none of that is modelled here.

#include <cmath>
#include <string>

#include "bdp/error.hpp"

namespace bdp::ranging {

struct DistanceEstimate {
  double meters = 0.0;
  double dbm_ratio = 0.0;
  double linear_ratio = 0.0;
};

namespace detail {
inline void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw DomainError(std::string(what) + " must be finite");
}
}  // namespace detail

// Outside [-120, 0] dBm is unusual for a real receiver but still computable.
inline bool plausible_dbm(double dbm) noexcept { return dbm >= -120.0 && dbm <= 0.0; }

inline double dbm_ratio(double r1, double r2) {
  detail::require_finite(r1, "calibrated power");
  detail::require_finite(r2, "rssi");
  return r1 - r2;
}

inline double linear_ratio(double db) {
  detail::require_finite(db, "dB ratio");
  return std::pow(10.0, db / 10.0);
}

inline DistanceEstimate estimate_distance(double tx_power_1m, double rssi) {
  DistanceEstimate e;
  e.dbm_ratio = dbm_ratio(tx_power_1m, rssi);
  e.linear_ratio = linear_ratio(e.dbm_ratio);
  e.meters = std::sqrt(e.linear_ratio);
  return e;
}

// Inverse of estimate_distance: the RSSI a free-space receiver sees at r meters.
inline double rssi_at_distance(double tx_power_1m, double meters) {
  detail::require_finite(tx_power_1m, "calibrated power");
  if (!(meters > 0.0) || !std::isfinite(meters)) {
    throw DomainError("distance must be positive and finite");
  }
  return tx_power_1m - 20.0 * std::log10(meters);
}

}  // namespace bdp::ranging
