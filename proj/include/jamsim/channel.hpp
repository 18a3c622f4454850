#pragma once

// SNR/JNR power bookkeeping and the additive victim + jammer + noise channel.

#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <vector>

#include "jamsim/error.hpp"
#include "jamsim/random.hpp"

namespace jamsim {

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double x) { return 10.0 * std::log10(x); }

struct ChannelConfig {
  double snr_db = 0.0;
  double jnr_db = 0.0;
  double sigma2 = 1.0;
  bool coherent = false;

  double p_v() const { return db_to_linear(snr_db) * sigma2; }
  double p_j() const { return db_to_linear(jnr_db) * sigma2; }
};

struct LinkPowers {
  double p_v;
  double p_j;
};

inline LinkPowers powers_from_db(const ChannelConfig& cfg) {
  require(cfg.sigma2 > 0.0, "powers_from_db: sigma2 must be positive");
  return {cfg.p_v(), cfg.p_j()};
}

// Jammer phase offset for one transmission unit; 0 when coherent.
inline double draw_phase(const ChannelConfig& cfg, Rng& rng) {
  if (cfg.coherent) return 0.0;
  // uniform on (0, 2π]
  return 2.0 * std::numbers::pi * (1.0 - uniform01(rng));
}

// y = sqrt(p_v) v + j e^{jφ} + n with an explicit phase.
inline std::vector<std::complex<double>> apply_channel(std::span<const std::complex<double>> victim,
                                                       std::span<const std::complex<double>> jammer,
                                                       const ChannelConfig& cfg, double phase,
                                                       Rng& rng) {
  if (victim.size() != jammer.size())
    throw InvalidInput("apply_channel: victim has " + std::to_string(victim.size()) +
                       " samples, jammer has " + std::to_string(jammer.size()));
  require(cfg.sigma2 > 0.0, "apply_channel: sigma2 must be positive");
  const double amp = std::sqrt(cfg.p_v());
  const std::complex<double> rot = std::polar(1.0, phase);
  std::vector<std::complex<double>> out(victim.size());
  for (std::size_t t = 0; t < victim.size(); ++t)
    out[t] = amp * victim[t] + jammer[t] * rot + complex_normal(rng, cfg.sigma2);
  return out;
}

inline std::vector<std::complex<double>> apply_channel(std::span<const std::complex<double>> victim,
                                                       std::span<const std::complex<double>> jammer,
                                                       const ChannelConfig& cfg, Rng& rng) {
  const double phase = draw_phase(cfg, rng);
  return apply_channel(victim, jammer, cfg, phase, rng);
}

}  // namespace jamsim
