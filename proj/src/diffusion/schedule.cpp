#include "grft/diffusion/schedule.hpp"

#include <cmath>
#include <stdexcept>

namespace grft {

NoiseSchedule::NoiseSchedule(const ScheduleConfig& cfg) : cfg_(cfg) {
  if (cfg.steps < 1 || cfg.train_steps < cfg.steps) throw std::invalid_argument("NoiseSchedule: bad step counts");
  if (cfg.eta_ddim < 0.0 || cfg.eta_ddim > 1.0) throw std::invalid_argument("NoiseSchedule: eta_ddim outside [0,1]");
  std::vector<double> cumulative(static_cast<std::size_t>(cfg.train_steps));
  double prod = 1.0;
  for (int t = 0; t < cfg.train_steps; ++t) {
    const double beta = cfg.beta_start + (cfg.beta_end - cfg.beta_start) * t / (cfg.train_steps - 1);
    prod *= 1.0 - beta;
    cumulative[static_cast<std::size_t>(t)] = prod;
  }
  timesteps_.push_back(-1);
  alpha_bar_.push_back(1.0);
  for (int s = 1; s <= cfg.steps; ++s) {
    const double u = static_cast<double>(s) / cfg.steps;
    const double frac = cfg.spacing == TimestepSpacing::kQuadratic ? u * u : u;
    int t = static_cast<int>(std::lround(frac * (cfg.train_steps - 1)));
    t = std::max(t, timesteps_.back() + 1);
    timesteps_.push_back(t);
    alpha_bar_.push_back(cumulative[static_cast<std::size_t>(t)]);
  }
}

double NoiseSchedule::sigma(int s) const { return sigma(s, cfg_.eta_ddim); }

double NoiseSchedule::sigma(int s, double eta) const {
  const double a = alpha_bar(s);
  const double a_prev = alpha_bar(s - 1);
  double v = eta * std::sqrt((1.0 - a_prev) / (1.0 - a));
  if (cfg_.canonical_ddim_variance) v *= std::sqrt(1.0 - a / a_prev);
  return v;
}

}  // namespace grft
