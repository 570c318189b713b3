#include "grft/diffusion/sampler.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace grft {

double eps_coefficient(const NoiseSchedule& sched, int s, double sigma, bool* clamped) {
  const double r = 1.0 - sched.alpha_bar(s - 1) - sigma * sigma;
  if (clamped) *clamped = r < 0.0;
  return std::sqrt(std::max(0.0, r));
}

nn::Mat ddim_mean(const NoiseSchedule& sched, int s, const nn::Mat& x_s, const nn::Mat& x0_hat, double sigma) {
  const double a = sched.alpha_bar(s);
  const double c = eps_coefficient(sched, s, sigma);
  nn::Mat out = std::sqrt(sched.alpha_bar(s - 1)) * x0_hat;
  if (c > 0.0) out += (c / std::sqrt(1.0 - a)) * (x_s - std::sqrt(a) * x0_hat);
  return out;
}

nn::Mat ddim_step(const NoiseSchedule& sched, int s, const nn::Mat& x_s, const nn::Mat& x0_hat, double sigma,
                  const nn::Mat& z, bool* clamped) {
  eps_coefficient(sched, s, sigma, clamped);
  nn::Mat out = ddim_mean(sched, s, x_s, x0_hat, sigma);
  if (sigma > 0.0) {
    if (z.rows() != x_s.rows() || z.cols() != x_s.cols()) throw std::invalid_argument("ddim_step: noise shape");
    out += sigma * z;
  }
  return out;
}

nn::Mat apply_guidance(const nn::Mat& x0_hat, const GuidanceSpec& g, const TrajectoryScaler& scaler) {
  if (static_cast<Eigen::Index>(g.scales.size()) != x0_hat.rows()) {
    throw std::invalid_argument("apply_guidance: one scale pair per row required");
  }
  nn::Mat out = x0_hat;
  const double step = g.config.guide_step;
  if (step == 0.0 || (!g.config.enable_lat && !g.config.enable_lon)) return out;
  const FrenetFrame frame = frenet_frame(g.reference);
  const Eigen::MatrixX2d ref_pos = positions(g.reference);
  const Eigen::MatrixX2d ref_vel = velocities(g.reference);
  for (Eigen::Index r = 0; r < out.rows(); ++r) {
    const Trajectory phys = scaler.decode(x0_hat.row(r));
    const auto& sc = g.scales[static_cast<std::size_t>(r)];
    if (g.config.enable_lat) {
      const auto e = energy_lat(positions(phys), ref_pos, frame, sc.eta_lat, g.config);
      for (Eigen::Index k = 0; k < e.grad.rows(); ++k) {
        out(r, 4 * k) -= step * e.grad(k, 0) / scaler.scale[4 * k];
        out(r, 4 * k + 1) -= step * e.grad(k, 1) / scaler.scale[4 * k + 1];
      }
    }
    if (g.config.enable_lon) {
      const auto e = energy_lon(velocities(phys), ref_vel, frame, sc.eta_lon, g.config);
      for (Eigen::Index k = 0; k < e.grad.rows(); ++k) {
        out(r, 4 * k + 2) -= step * e.grad(k, 0) / scaler.scale[4 * k + 2];
        out(r, 4 * k + 3) -= step * e.grad(k, 1) / scaler.scale[4 * k + 3];
      }
    }
  }
  return out;
}

namespace {

nn::Mat noise(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
  nn::Mat z(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) z(r, c) = rng.normal();
  return z;
}

}  // namespace

SampleResult sample(const Denoiser& den, const NoiseSchedule& sched, const nn::Mat& cond, int rows, double eta,
                    Rng& rng, const GuidanceSpec* guidance, const nn::Mat* x_init) {
  if (rows < 1) throw std::invalid_argument("sample: rows must be positive");
  if (guidance) {
    validate_guidance(guidance->config);
    for (const auto& sc : guidance->scales) validate_scales(sc);
  }
  const nn::Mat c = cond.rows() == rows ? cond : cond.row(0).replicate(rows, 1);
  const int S = sched.steps();
  const int D = den.config().traj_dim();
  SampleResult out;
  out.chain.resize(static_cast<std::size_t>(S + 1));
  if (x_init && (x_init->rows() != rows || x_init->cols() != D)) throw std::invalid_argument("sample: x_init shape");
  out.chain[static_cast<std::size_t>(S)] = x_init ? *x_init : noise(rng, rows, D);
  for (int s = S; s >= 1; --s) {
    const nn::Mat& x = out.chain[static_cast<std::size_t>(s)];
    nn::Mat x0 = den.predict(x, c, std::vector<int>(static_cast<std::size_t>(rows), sched.timestep(s)),
                             Eigen::VectorXd::Constant(rows, sched.alpha_bar(s)));
    if (guidance) x0 = apply_guidance(x0, *guidance, den.scaler());
    const double sigma = sched.sigma(s, eta);
    bool clamped = false;
    const nn::Mat z = sigma > 0.0 ? noise(rng, rows, D) : nn::Mat();
    out.chain[static_cast<std::size_t>(s - 1)] = ddim_step(sched, s, x, x0, sigma, z, &clamped);
    out.clamped_steps += clamped ? 1 : 0;
  }
  return out;
}

Trajectory reference_plan(const Denoiser& den, const NoiseSchedule& sched, const nn::Mat& cond, Rng& rng) {
  const auto res = sample(den, sched, cond.row(0), 1, 0.0, rng);
  return den.scaler().decode(res.x0().row(0));
}

TrajectoryGroup guided_sample_group(const Denoiser& den, const NoiseSchedule& sched, const nn::Mat& cond,
                                    const Trajectory& reference, const std::vector<GuidanceScales>& scales,
                                    const GuidanceConfig& gcfg, Rng& rng) {
  if (scales.empty()) throw std::invalid_argument("guided_sample_group: empty group");
  TrajectoryGroup g;
  g.cond = cond.row(0);
  g.reference = reference;
  g.scales = scales;
  const GuidanceSpec spec{reference, scales, gcfg};
  auto res = sample(den, sched, g.cond, static_cast<int>(scales.size()), sched.eta(), rng, &spec);
  g.chain = std::move(res.chain);
  g.plans.reserve(scales.size());
  for (Eigen::Index r = 0; r < g.chain.front().rows(); ++r) g.plans.push_back(den.scaler().decode(g.chain.front().row(r)));
  return g;
}

Eigen::VectorXd step_log_prob(const nn::Mat& x_prev, const nn::Mat& mean, double sigma) {
  if (!(sigma > 0.0)) throw std::invalid_argument("step_log_prob: sigma must be positive");
  const double D = static_cast<double>(x_prev.cols());
  const Eigen::VectorXd sq = (x_prev - mean).rowwise().squaredNorm();
  return (-0.5 / (sigma * sigma)) * sq.array() - 0.5 * D * std::log(2.0 * std::numbers::pi * sigma * sigma);
}

}  // namespace grft
