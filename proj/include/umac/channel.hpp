// K-user Gaussian MAC and quasi-static Rayleigh fading MAC.
//
// Powers are linear everywhere; decibels only appear in ebn0_db() and at the
// CLI boundary. Channel uses are complex; real degrees of freedom are 2x.

#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "umac/core.hpp"

namespace umac {

enum class ChannelModel { AWGN, RayleighQuasiStatic };

struct ChannelConfig {
  double noise_power = 1.0;  // sigma^2 per complex sample
  double power_limit = 1.0;  // P per complex sample
  ChannelModel model = ChannelModel::AWGN;
  bool noiseless = false;    // sigma^2 -> 0 limit; noise_power is ignored

  void validate() const {
    if (!(noise_power > 0.0)) throw ConfigError("noise_power must be > 0");
    if (!(power_limit > 0.0)) throw ConfigError("power_limit must be > 0");
  }
};

struct FadingRealization {
  std::vector<cdouble> gains;
};

inline constexpr double kPowerTolerance = 1e-9;

/// True iff ||x||^2 <= n P, up to a relative rounding tolerance.
inline bool check_power(const ComplexSignal& x, const ChannelConfig& cfg) {
  const double budget = static_cast<double>(x.size()) * cfg.power_limit;
  return x.energy() <= budget * (1.0 + kPowerTolerance);
}

namespace detail {

inline std::size_t common_length(std::span<const ComplexSignal> inputs, std::size_t fallback) {
  if (inputs.empty()) return fallback;
  const std::size_t n = inputs.front().size();
  for (const auto& x : inputs)
    if (x.size() != n) throw ConfigError("channel inputs have different lengths");
  return n;
}

inline void check_inputs(std::span<const ComplexSignal> inputs, const ChannelConfig& cfg) {
  for (std::size_t i = 0; i < inputs.size(); ++i)
    if (!check_power(inputs[i], cfg))
      throw ConfigError("input " + std::to_string(i) + " violates the power constraint");
}

inline void add_noise(ComplexSignal& y, const ChannelConfig& cfg, Rng& rng) {
  if (cfg.noiseless) return;
  for (auto& v : y) v += rng.complex_normal(cfg.noise_power);
}

}  // namespace detail

/// Y = sum_i x_i + Z. With no inputs, `length` fixes n (pure noise).
inline ComplexSignal awgn_mac_transmit(std::span<const ComplexSignal> inputs,
                                       const ChannelConfig& cfg, Rng& rng,
                                       std::size_t length = 0) {
  cfg.validate();
  const std::size_t n = detail::common_length(inputs, length);
  detail::check_inputs(inputs, cfg);
  ComplexSignal y(n);
  for (const auto& x : inputs) y += x;
  detail::add_noise(y, cfg, rng);
  return y;
}

inline FadingRealization sample_fading(std::size_t users, Rng& rng) {
  FadingRealization r;
  r.gains.reserve(users);
  for (std::size_t i = 0; i < users; ++i) r.gains.push_back(rng.complex_normal(1.0));
  return r;
}

/// Y = sum_i H_i x_i + Z with one gain per user held over the whole frame.
/// Gains are drawn from `rng` before the noise unless `injected` is given.
inline std::pair<ComplexSignal, FadingRealization> fading_mac_transmit(
    std::span<const ComplexSignal> inputs, const ChannelConfig& cfg, Rng& rng,
    std::optional<FadingRealization> injected = std::nullopt, std::size_t length = 0) {
  cfg.validate();
  const std::size_t n = detail::common_length(inputs, length);
  detail::check_inputs(inputs, cfg);
  FadingRealization fading = injected ? std::move(*injected) : sample_fading(inputs.size(), rng);
  if (fading.gains.size() != inputs.size())
    throw ConfigError("fading realization size does not match the number of users");
  ComplexSignal y(n);
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const cdouble h = fading.gains[i];
    const auto& x = inputs[i];
    for (std::size_t t = 0; t < n; ++t) y[t] += h * x[t];
  }
  detail::add_noise(y, cfg, rng);
  return {std::move(y), std::move(fading)};
}

/// Eb/N0 = n P / (2 sigma^2 log2 M), in dB.
inline double ebn0_db(double n, const ChannelConfig& cfg, double log2M) {
  if (!(log2M > 0.0)) throw ConfigError("payload must be positive for Eb/N0");
  return linear_to_db(n * cfg.power_limit / (2.0 * cfg.noise_power * log2M));
}

}  // namespace umac
