#pragma once

// Unreliable ACK/NACK observation at the jammer.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "jamsim/error.hpp"
#include "jamsim/random.hpp"

namespace jamsim {

enum class Observation : std::uint8_t { Ack, Nack, Missed };

enum class MisobservationModel {
  Flip,     // a misobserved ACK reads as NACK and vice versa
  Erasure,  // a misobserved report is simply not seen
};

struct FeedbackConfig {
  double lambda_ack = 0.0;
  double lambda_nack = 0.0;
  MisobservationModel model = MisobservationModel::Flip;

  static FeedbackConfig symmetric(double lambda) { return {lambda, lambda, MisobservationModel::Flip}; }

  void validate() const {
    require(lambda_ack >= 0.0 && lambda_ack <= 1.0, "FeedbackConfig: lambda_ack must lie in [0, 1]");
    require(lambda_nack >= 0.0 && lambda_nack <= 1.0, "FeedbackConfig: lambda_nack must lie in [0, 1]");
  }
};

// true_acks[i] != 0 means the victim sent ACK for codeword chain i.
inline std::vector<Observation> observe(std::span<const std::uint8_t> true_acks, const FeedbackConfig& cfg,
                                        Rng& rng) {
  cfg.validate();
  std::vector<Observation> out;
  out.reserve(true_acks.size());
  for (auto ack : true_acks) {
    const bool is_ack = ack != 0;
    const bool wrong = bernoulli(rng, is_ack ? cfg.lambda_ack : cfg.lambda_nack);
    if (!wrong)
      out.push_back(is_ack ? Observation::Ack : Observation::Nack);
    else if (cfg.model == MisobservationModel::Flip)
      out.push_back(is_ack ? Observation::Nack : Observation::Ack);
    else
      out.push_back(Observation::Missed);
  }
  return out;
}

// NACK fraction among the observed reports; missed reports are excluded.
inline double observed_bler(std::span<const Observation> observed) {
  std::size_t seen = 0, nacks = 0;
  for (auto o : observed) {
    if (o == Observation::Missed) continue;
    ++seen;
    nacks += o == Observation::Nack;
  }
  if (seen == 0) throw InvalidInput("observed_bler: no observed ACK/NACK reports");
  return static_cast<double>(nacks) / static_cast<double>(seen);
}

// E[observed BLER] under the flip model.
inline double expected_observed_bler(double true_bler, const FeedbackConfig& cfg) {
  return (1.0 - cfg.lambda_nack) * true_bler + cfg.lambda_ack * (1.0 - true_bler);
}

}  // namespace jamsim
