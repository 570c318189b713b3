#pragma once

#include <Eigen/Core>

#include "grft/core/geometry.hpp"
#include "grft/core/types.hpp"

namespace grft {

/// Target of the longitudinal energy: verbatim uses lambda*eta*v_ref; relative uses
/// (1 + lambda*eta)*v_ref so eta = 0 keeps the reference speed.
enum class LonTarget { kVerbatim, kRelative };

struct GuidanceConfig {
  double lambda_lat = 2.5;   // [m]
  double lambda_lon = 0.25;  // fraction
  double guide_step = 20.0;
  bool enable_lat = true;
  bool enable_lon = true;
  LonTarget lon_target = LonTarget::kRelative;
};

struct GuidanceScales {
  double eta_lat = 0.0;
  double eta_lon = 0.0;

  bool operator==(const GuidanceScales&) const = default;
};

/// Throws std::invalid_argument unless both scales lie in [-1, 1].
void validate_scales(const GuidanceScales& s);
void validate_guidance(const GuidanceConfig& cfg);

struct EnergyResult {
  double value = 0.0;
  Eigen::MatrixX2d grad;  // T x 2, w.r.t. positions (lateral) or velocities (longitudinal)
};

/// Lateral energy: (1/T) sum (n_perp . (x - x_ref) - lambda_lat * eta_lat)^2.
EnergyResult energy_lat(const Eigen::MatrixX2d& x, const Eigen::MatrixX2d& ref, const FrenetFrame& frame,
                        double eta_lat, const GuidanceConfig& cfg);

/// Longitudinal energy (target per cfg.lon_target): (1/T) sum (n_par . (v - target_tau))^2.
EnergyResult energy_lon(const Eigen::MatrixX2d& v, const Eigen::MatrixX2d& v_ref, const FrenetFrame& frame,
                        double eta_lon, const GuidanceConfig& cfg);

Eigen::MatrixX2d positions(const Trajectory& t);
Eigen::MatrixX2d velocities(const Trajectory& t);

}  // namespace grft
