#include "grft/diffusion/guidance.hpp"

#include <stdexcept>

namespace grft {

void validate_scales(const GuidanceScales& s) {
  if (!(s.eta_lat >= -1.0 && s.eta_lat <= 1.0 && s.eta_lon >= -1.0 && s.eta_lon <= 1.0)) {
    throw std::invalid_argument("guidance scales outside [-1, 1]");
  }
}

void validate_guidance(const GuidanceConfig& cfg) {
  if (!(cfg.lambda_lat > 0.0)) throw std::invalid_argument("lambda_lat must be positive");
  if (!(cfg.lambda_lon > 0.0 && cfg.lambda_lon <= 1.0)) throw std::invalid_argument("lambda_lon must lie in (0, 1]");
  if (!(cfg.guide_step >= 0.0)) throw std::invalid_argument("guide_step must be non-negative");
}

namespace {

void check_lengths(const Eigen::MatrixX2d& a, const Eigen::MatrixX2d& b, const FrenetFrame& f, const char* what) {
  if (a.rows() != b.rows() || static_cast<std::size_t>(a.rows()) != f.size() || a.rows() == 0) {
    throw std::invalid_argument(std::string(what) + ": length mismatch");
  }
}

}  // namespace

EnergyResult energy_lat(const Eigen::MatrixX2d& x, const Eigen::MatrixX2d& ref, const FrenetFrame& frame,
                        double eta_lat, const GuidanceConfig& cfg) {
  check_lengths(x, ref, frame, "energy_lat");
  const auto T = x.rows();
  EnergyResult out;
  out.grad.resize(T, 2);
  const double target = cfg.lambda_lat * eta_lat;
  for (Eigen::Index k = 0; k < T; ++k) {
    const Vec2& n = frame.normals[static_cast<std::size_t>(k)];
    const double r = n.dot((x.row(k) - ref.row(k)).transpose()) - target;
    out.value += r * r;
    out.grad.row(k) = (2.0 / T) * r * n.transpose();
  }
  out.value /= T;
  return out;
}

EnergyResult energy_lon(const Eigen::MatrixX2d& v, const Eigen::MatrixX2d& v_ref, const FrenetFrame& frame,
                        double eta_lon, const GuidanceConfig& cfg) {
  check_lengths(v, v_ref, frame, "energy_lon");
  const auto T = v.rows();
  EnergyResult out;
  out.grad.resize(T, 2);
  const double gain =
      cfg.lon_target == LonTarget::kVerbatim ? cfg.lambda_lon * eta_lon : 1.0 + cfg.lambda_lon * eta_lon;
  for (Eigen::Index k = 0; k < T; ++k) {
    const Vec2& t = frame.tangents[static_cast<std::size_t>(k)];
    const double r = t.dot((v.row(k) - gain * v_ref.row(k)).transpose());
    out.value += r * r;
    out.grad.row(k) = (2.0 / T) * r * t.transpose();
  }
  out.value /= T;
  return out;
}

Eigen::MatrixX2d positions(const Trajectory& t) {
  Eigen::MatrixX2d m(static_cast<Eigen::Index>(t.size()), 2);
  for (std::size_t k = 0; k < t.size(); ++k) m.row(static_cast<Eigen::Index>(k)) << t[k].x, t[k].y;
  return m;
}

Eigen::MatrixX2d velocities(const Trajectory& t) {
  Eigen::MatrixX2d m(static_cast<Eigen::Index>(t.size()), 2);
  for (std::size_t k = 0; k < t.size(); ++k) m.row(static_cast<Eigen::Index>(k)) << t[k].vx, t[k].vy;
  return m;
}

}  // namespace grft
