#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace ptlab::diffusion {

struct ScheduleConfig {
  std::size_t steps = 100;
  double beta_start = 1e-4;
  double beta_end = 0.05;
};

/// Linear-beta DDPM schedule. Steps are 1-based: beta(t), alpha(t) and
/// alpha_bar(t) are defined for 1 <= t <= T, and alpha_bar(0) == 1.
class NoiseSchedule {
 public:
  NoiseSchedule(std::size_t steps, double beta_start, double beta_end);
  explicit NoiseSchedule(const ScheduleConfig& c) : NoiseSchedule(c.steps, c.beta_start, c.beta_end) {}

  std::size_t steps() const noexcept { return betas_.size(); }
  double beta(std::size_t t) const { return betas_.at(t - 1); }
  double alpha(std::size_t t) const { return 1.0 - beta(t); }
  double alpha_bar(std::size_t t) const { return t == 0 ? 1.0 : alpha_bars_.at(t - 1); }

 private:
  std::vector<double> betas_;
  std::vector<double> alpha_bars_;
};

NoiseSchedule build_schedule(std::size_t steps, double beta_start, double beta_end);

/// z_t = sqrt(alpha_bar_t) z0 + sqrt(1 - alpha_bar_t) eps, t in [0, T] (t = 0 returns z0).
std::vector<float> q_sample(std::span<const float> z0, std::size_t t, std::span<const float> noise,
                            const NoiseSchedule& schedule);

/// Sinusoidal embedding of a timestep, `width` must be even.
void time_embedding(std::size_t t, std::span<float> out);

}  // namespace ptlab::diffusion
