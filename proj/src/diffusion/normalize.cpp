#include "grft/diffusion/normalize.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace grft {

TrajectoryScaler TrajectoryScaler::channels(int horizon, double sx, double sy, double svx, double svy) {
  TrajectoryScaler s;
  s.mean = Eigen::RowVectorXd::Zero(4 * horizon);
  s.scale.resize(4 * horizon);
  for (int k = 0; k < horizon; ++k) s.scale.segment(4 * k, 4) << sx, sy, svx, svy;
  return s;
}

TrajectoryScaler TrajectoryScaler::fit(const Eigen::MatrixXd& rows, double floor_fraction) {
  if (rows.rows() < 2 || rows.cols() % 4 != 0) throw std::invalid_argument("TrajectoryScaler::fit: bad data");
  const TrajectoryScaler base = channels(static_cast<int>(rows.cols() / 4));
  TrajectoryScaler s;
  s.mean = rows.colwise().mean();
  s.scale = ((rows.rowwise() - s.mean).array().square().colwise().sum() / static_cast<double>(rows.rows() - 1))
                .sqrt()
                .matrix();
  for (Eigen::Index i = 0; i < s.scale.size(); ++i) {
    s.scale[i] = std::max(s.scale[i], floor_fraction * base.scale[i]);
  }
  return s;
}

Eigen::RowVectorXd flatten_trajectory(const Trajectory& t) {
  Eigen::RowVectorXd row(static_cast<Eigen::Index>(4 * t.size()));
  for (std::size_t k = 0; k < t.size(); ++k) {
    row.segment(static_cast<Eigen::Index>(4 * k), 4) << t[k].x, t[k].y, t[k].vx, t[k].vy;
  }
  return row;
}

Eigen::RowVectorXd TrajectoryScaler::flatten(const Trajectory& t) const {
  if (static_cast<Eigen::Index>(4 * t.size()) != size()) throw std::invalid_argument("TrajectoryScaler: length mismatch");
  return flatten_trajectory(t);
}

Eigen::RowVectorXd TrajectoryScaler::encode(const Trajectory& t) const {
  return ((flatten(t) - mean).array() / scale.array()).matrix();
}

Trajectory TrajectoryScaler::decode(const Eigen::Ref<const Eigen::RowVectorXd>& row) const {
  if (row.size() != size()) throw std::invalid_argument("TrajectoryScaler: length mismatch");
  const Eigen::RowVectorXd p = (row.array() * scale.array()).matrix() + mean;
  Trajectory t;
  t.points.resize(static_cast<std::size_t>(p.size() / 4));
  for (std::size_t k = 0; k < t.size(); ++k) {
    const auto i = static_cast<Eigen::Index>(4 * k);
    t[k] = {p(i), p(i + 1), p(i + 2), p(i + 3)};
  }
  return t;
}

std::string TrajectoryScaler::serialize() const {
  std::ostringstream out;
  out << size();
  char buf[64];
  for (Eigen::Index i = 0; i < size(); ++i) {
    std::snprintf(buf, sizeof buf, " %.17g %.17g", mean[i], scale[i]);
    out << buf;
  }
  return out.str();
}

TrajectoryScaler TrajectoryScaler::deserialize(const std::string& text) {
  std::istringstream in(text);
  Eigen::Index n = 0;
  if (!(in >> n) || n <= 0) throw std::runtime_error("TrajectoryScaler: bad serialized form");
  TrajectoryScaler s;
  s.mean.resize(n);
  s.scale.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(in >> s.mean[i] >> s.scale[i])) throw std::runtime_error("TrajectoryScaler: truncated serialized form");
  }
  return s;
}

}  // namespace grft
