#include <gtest/gtest.h>

#include "jamsim/victim5g.hpp"

using namespace jamsim;

namespace {

std::shared_ptr<const LdpcCode> slot_code() {
  static const auto code = std::make_shared<const LdpcCode>(make_peg_code(1056, 570, 3, 2024));
  return code;
}

std::vector<Bits> random_codewords(const LdpcCode& code, std::size_t count, Rng& rng) {
  std::vector<Bits> cws;
  Bits info(code.k());
  for (std::size_t c = 0; c < count; ++c) {
    for (auto& b : info) b = static_cast<std::uint8_t>(rng() & 1U);
    cws.push_back(code.encode(info));
  }
  return cws;
}

struct BlerCount {
  std::size_t n = 0, errors = 0;
  double bler() const { return static_cast<double>(errors) / static_cast<double>(n); }
};

BlerCount run_steps(PdschLink& link, const std::optional<JammerAction>& jam, const ChannelConfig& chan,
                    std::size_t min_codewords, std::uint64_t seed) {
  HarqState harq;
  Rng rng(seed);
  BlerCount out;
  while (out.n < min_codewords) {
    const auto r = link.run_link_step(jam, chan, harq, rng);
    for (auto a : r.acks) {
      ++out.n;
      out.errors += a == 0;
    }
  }
  return out;
}

}  // namespace

TEST(SlotLayout, PilotAndDataCounts) {
  SlotConfig cfg;
  cfg.max_codewords_per_slot = 0;
  PdschLink link(cfg, slot_code());
  EXPECT_EQ(link.layout().count(ReRole::Dmrs), 306u);
  EXPECT_EQ(link.data_res(), 612u * 14 - 306);
  EXPECT_EQ(link.codewords_per_slot(), (612u * 14 - 306) * 4 / 1056);
  EXPECT_EQ(PdschLink(SlotConfig{}, slot_code()).codewords_per_slot(), 8u);
  // pilots sit on every other data subcarrier of the DMRS symbol only
  for (std::size_t m = 0; m < 14; ++m) {
    std::size_t n = 0;
    for (std::size_t k = 0; k < 1024; ++k) n += link.layout().role(k, m) == ReRole::Dmrs;
    EXPECT_EQ(n, m == 2 ? 306u : 0u);
  }
}

TEST(SlotLayout, ConfigErrors) {
  SlotConfig cfg;
  cfg.guard_each_side = 300;
  EXPECT_THROW(PdschLink(cfg, slot_code()), InvalidInput);
  SlotConfig c2;
  c2.dmrs_symbol_indices = {14};
  EXPECT_THROW(PdschLink(c2, slot_code()), InvalidInput);
  SlotConfig c3;
  c3.scheme = ModulationScheme::Awgn;
  EXPECT_THROW(PdschLink(c3, slot_code()), InvalidInput);
  EXPECT_THROW(PdschLink(SlotConfig{}, nullptr), InvalidInput);
}

TEST(BuildSlot, PilotsHaveUnitPowerAndCapacityIsEnforced) {
  PdschLink link(SlotConfig{}, slot_code());
  Rng rng(1);
  const auto cws = random_codewords(link.code(), 8, rng);
  const auto g = link.build_slot(cws, rng);
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (g.roles()[i] == ReRole::Dmrs) EXPECT_NEAR(std::norm(g.cells()[i]), 1.0, 1e-12);
    if (g.roles()[i] == ReRole::Guard) EXPECT_EQ(g.cells()[i], cplx{});
  }
  const auto nine = random_codewords(link.code(), 9, rng);
  EXPECT_THROW(link.build_slot(nine, rng), InvalidInput);
  const std::vector<std::uint8_t> ragged(link.code().k() + 1);
  EXPECT_THROW(link.build_slot_from_payload(ragged, rng), InvalidInput);
}

TEST(Receiver, NoiselessRoundTripRecoversBits) {
  PdschLink link(SlotConfig{}, slot_code());
  Rng rng(2);
  const auto cws = random_codewords(link.code(), 8, rng);
  const auto rx = link.transmit(link.build_slot(cws, rng), std::nullopt, {120, 0, 1, false}, rng);
  const auto eq = link.equalize(rx, link.estimate_channel(rx));
  EXPECT_EQ(eq.erasures, 0u);
  const auto llrs = link.demap(eq);
  const std::size_t n = link.code().n();
  for (std::size_t c = 0; c < cws.size(); ++c)
    for (std::size_t i = 0; i < n; ++i) ASSERT_EQ(llrs[c * n + i] < 0 ? 1 : 0, cws[c][i]);
}

TEST(Receiver, FlatGainIsEstimatedExactly) {
  PdschLink link(SlotConfig{}, slot_code());
  Rng rng(3);
  auto g = link.build_slot(random_codewords(link.code(), 8, rng), rng);
  const cplx gain = std::polar(1.7, 0.6);
  for (auto& v : g.cells()) v *= gain;
  const auto est = link.estimate_channel(g);
  for (auto k : link.ofdm().data_subcarriers)
    for (std::size_t m = 0; m < 14; ++m) ASSERT_LT(std::abs(est.h.at(k, m) - gain), 1e-12);
  EXPECT_LT(est.noise_var, 1e-20);
}

TEST(Receiver, NoiseVarianceEstimate) {
  PdschLink link(SlotConfig{}, slot_code());
  Rng rng(4);
  double sum = 0;
  const int slots = 10;
  for (int s = 0; s < slots; ++s) {
    auto g = link.build_slot(random_codewords(link.code(), 8, rng), rng);
    for (auto& v : g.cells()) v += complex_normal(rng, 1.0);
    sum += link.estimate_channel(g).noise_var;
  }
  EXPECT_NEAR(sum / slots, 1.0, 0.1);
}

TEST(Receiver, DmrsJammingInflatesNoiseEstimate) {
  PdschLink link(SlotConfig{}, slot_code());
  Rng rng(5);
  const ChannelConfig chan{20, 20, 1, false};
  const JammerAction dmrs{ModulationScheme::Awgn, 1.0, JammingMethod::DmrsJam};
  double clean = 0, jammed = 0;
  for (int s = 0; s < 5; ++s) {
    const auto tx = link.build_slot(random_codewords(link.code(), 8, rng), rng);
    clean += link.estimate_channel(link.transmit(tx, std::nullopt, chan, rng)).noise_var;
    jammed += link.estimate_channel(link.transmit(tx, dmrs, chan, rng)).noise_var;
  }
  EXPECT_GT(jammed, 5.0 * clean);
}

TEST(Receiver, EqualizeExamplesAndErasure) {
  SlotConfig cfg;
  PdschLink link(cfg, slot_code());
  Rng rng(6);
  const auto tx = link.build_slot(random_codewords(link.code(), 8, rng), rng);
  ResourceGrid rx = tx;
  for (auto& v : rx.cells()) v *= 2.0;
  ChannelEstimate est{link.layout(), 0.8};
  for (auto& v : est.h.cells()) v = 2.0;
  const auto first = link.ofdm().data_subcarriers.front();
  est.h.at(first, 0) = 0.0;  // first Data RE in placement order
  const auto eq = link.equalize(rx, est);
  ASSERT_EQ(eq.symbols.size(), link.data_res());
  EXPECT_EQ(eq.erasures, 1u);
  EXPECT_TRUE(std::isinf(eq.noise_var[0]));
  for (std::size_t i = 1; i < eq.symbols.size(); ++i) {
    ASSERT_NEAR(eq.noise_var[i], 0.2, 1e-15);
  }
  const auto llrs = link.demap(eq);
  for (int b = 0; b < 4; ++b) EXPECT_EQ(llrs[b], 0.0);
  // every other RE equalizes back to the transmitted symbol
  const auto order = data_symbols_in_order(tx, link.ofdm());
  for (std::size_t i = 1; i < 200; ++i) EXPECT_LT(std::abs(eq.symbols[i] - order[i]), 1e-12);
}

TEST(PdschLink, UnjammedHighSnrIsClean) {
  PdschLink link(SlotConfig{}, slot_code());
  const auto r = run_steps(link, std::nullopt, {24, 0, 1, false}, 400, 7);
  EXPECT_GE(r.n, 400u);
  EXPECT_LT(r.bler(), 0.01);
}

TEST(PdschLink, OverwhelmingJammerBreaksEveryBlock) {
  SlotConfig cfg;
  cfg.harq.enabled = false;
  PdschLink link(cfg, slot_code());
  const JammerAction all{ModulationScheme::Awgn, 1.0, JammingMethod::SlotRandomJam};
  const auto r = run_steps(link, all, {24, 40, 1, false}, 100, 8);
  EXPECT_DOUBLE_EQ(r.bler(), 1.0);
}

TEST(PdschLink, HarqNeverHurts) {
  SlotConfig with, without;
  without.harq.enabled = false;
  PdschLink a(with, slot_code()), b(without, slot_code());
  for (double snr : {8.0, 9.0, 10.0}) {
    const ChannelConfig chan{snr, 0, 1, false};
    EXPECT_LE(run_steps(a, std::nullopt, chan, 300, 9).bler(), run_steps(b, std::nullopt, chan, 300, 9).bler())
        << snr << " dB";
  }
}

TEST(PdschLink, StepBookkeeping) {
  PdschLink link(SlotConfig{}, slot_code());
  HarqState harq;
  Rng rng(10);
  const JammerAction jam{ModulationScheme::Qpsk, 0.5, JammingMethod::PdschDataJam};
  std::size_t sent = 0, resolved = 0;
  for (int s = 0; s < 10; ++s) {
    const auto r = link.run_link_step(jam, {20, 14, 1, false}, harq, rng, true);
    EXPECT_GE(r.slots, link.config().slots_per_step());
    EXPECT_FALSE(r.acks.empty());
    double nacks = 0;
    for (auto a : r.acks) nacks += a == 0;
    EXPECT_DOUBLE_EQ(r.true_bler, nacks / static_cast<double>(r.acks.size()));
    EXPECT_EQ(r.llr_samples.size(), r.slots * link.data_res() * 4);
    resolved += r.acks.size();
    sent += r.slots * link.codewords_per_slot();
  }
  // every transmission is either resolved, a retransmission, or still pending
  EXPECT_LE(resolved + harq.pending.size(), sent);
  EXPECT_LE(harq.pending.size(), link.codewords_per_slot());
}

TEST(PdschLink, DeterministicUnderSeed) {
  PdschLink a(SlotConfig{}, slot_code()), b(SlotConfig{}, slot_code());
  HarqState ha, hb;
  Rng ra(11), rb(11);
  const JammerAction jam{ModulationScheme::Bpsk, 0.3, JammingMethod::DmrsJam};
  for (int s = 0; s < 3; ++s) {
    const auto x = a.run_link_step(jam, {18, 12, 1, false}, ha, ra);
    const auto y = b.run_link_step(jam, {18, 12, 1, false}, hb, rb);
    EXPECT_EQ(x.acks, y.acks);
    EXPECT_EQ(x.mean_noise_var_est, y.mean_noise_var_est);
  }
}
