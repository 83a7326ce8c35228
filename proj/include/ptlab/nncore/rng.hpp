#pragma once

#include <cstdint>
#include <string_view>

namespace ptlab::nncore {

/// Counter-based generator (SplitMix64 over a 64-bit key).
///
/// Streams are derived from (seed, label, index) so that every consumer
/// (per-image sampling, per-candidate probing, data rendering, ...) owns an
/// independent sequence whose values do not depend on scheduling or on how
/// many draws other consumers made.
class Rng {
 public:
  explicit Rng(std::uint64_t key) noexcept : state_(key) {}

  static Rng derive(std::uint64_t seed, std::string_view label, std::uint64_t index = 0) noexcept;
  Rng split(std::string_view label, std::uint64_t index = 0) const noexcept;

  std::uint64_t next_u64() noexcept;
  /// Uniform in [0, 1).
  double uniform() noexcept;
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n). n must be > 0.
  std::uint64_t below(std::uint64_t n) noexcept;
  /// Standard normal via Box-Muller.
  double normal() noexcept;

  std::uint64_t key() const noexcept { return key_origin_; }

 private:
  Rng(std::uint64_t key, std::uint64_t origin) noexcept : state_(key), key_origin_(origin) {}

  std::uint64_t state_;
  std::uint64_t key_origin_ = state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

std::uint64_t mix64(std::uint64_t x) noexcept;
std::uint64_t hash_label(std::string_view label) noexcept;

}  // namespace ptlab::nncore
