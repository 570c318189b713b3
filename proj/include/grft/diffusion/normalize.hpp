#pragma once

#include <string>

#include <Eigen/Core>

#include "grft/core/types.hpp"

namespace grft {

/// Affine map between physical ego-frame trajectories and the flat row the denoiser works on:
/// row[4k + c] = (channel c of waypoint k - mean[4k + c]) / scale[4k + c], channels (x, y, vx, vy).
struct TrajectoryScaler {
  Eigen::RowVectorXd mean;
  Eigen::RowVectorXd scale;

  /// Zero mean, one scale per channel.
  static TrajectoryScaler channels(int horizon, double sx = 40.0, double sy = 8.0, double svx = 10.0,
                                   double svy = 3.0);
  /// Per-element mean and standard deviation of physical rows, with the deviation floored at
  /// `floor_fraction` of the default channel scale.
  static TrajectoryScaler fit(const Eigen::MatrixXd& physical_rows, double floor_fraction = 0.005);

  Eigen::Index size() const { return scale.size(); }
  Eigen::RowVectorXd flatten(const Trajectory& t) const;
  Eigen::RowVectorXd encode(const Trajectory& t) const;
  Trajectory decode(const Eigen::Ref<const Eigen::RowVectorXd>& row) const;

  std::string serialize() const;
  static TrajectoryScaler deserialize(const std::string& text);
};

/// [x0, y0, vx0, vy0, x1, ...] without scaling.
Eigen::RowVectorXd flatten_trajectory(const Trajectory& t);

}  // namespace grft
