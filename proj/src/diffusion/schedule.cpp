#include "ptlab/diffusion/schedule.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace ptlab::diffusion {

NoiseSchedule::NoiseSchedule(std::size_t steps, double beta_start, double beta_end) {
  if (steps < 2) throw std::invalid_argument("schedule needs at least 2 steps");
  if (!(beta_start > 0.0) || !(beta_start <= beta_end) || !(beta_end < 1.0)) {
    throw std::invalid_argument("schedule requires 0 < beta_start <= beta_end < 1");
  }
  betas_.resize(steps);
  alpha_bars_.resize(steps);
  double running = 1.0;
  for (std::size_t i = 0; i < steps; ++i) {
    betas_[i] = beta_start + (beta_end - beta_start) * static_cast<double>(i) / static_cast<double>(steps - 1);
    running *= 1.0 - betas_[i];
    alpha_bars_[i] = running;
  }
}

NoiseSchedule build_schedule(std::size_t steps, double beta_start, double beta_end) {
  return NoiseSchedule(steps, beta_start, beta_end);
}

std::vector<float> q_sample(std::span<const float> z0, std::size_t t, std::span<const float> noise,
                            const NoiseSchedule& schedule) {
  if (t > schedule.steps()) {
    throw std::out_of_range("timestep " + std::to_string(t) + " outside [0, " +
                            std::to_string(schedule.steps()) + "]");
  }
  if (z0.size() != noise.size()) throw std::invalid_argument("q_sample: noise width differs from latent width");
  const double ab = schedule.alpha_bar(t);
  const double a = std::sqrt(ab), s = std::sqrt(1.0 - ab);
  std::vector<float> out(z0.size());
  for (std::size_t i = 0; i < z0.size(); ++i) {
    out[i] = static_cast<float>(a * z0[i] + s * noise[i]);
  }
  return out;
}

void time_embedding(std::size_t t, std::span<float> out) {
  if (out.size() % 2 != 0) throw std::invalid_argument("time embedding width must be even");
  const std::size_t half = out.size() / 2;
  for (std::size_t i = 0; i < half; ++i) {
    const double freq = std::exp(-std::log(1000.0) * static_cast<double>(i) / static_cast<double>(half));
    const double angle = static_cast<double>(t) * freq;
    out[i] = static_cast<float>(std::sin(angle));
    out[half + i] = static_cast<float>(std::cos(angle));
  }
}

}  // namespace ptlab::diffusion
