#include <gtest/gtest.h>

#include <cmath>

#include "jamsim/channel.hpp"
#include "jamsim/jammer.hpp"
#include "jamsim/victim5g.hpp"

using namespace jamsim;

namespace {

ResourceGrid sec3_roles() {
  const auto cfg = OfdmConfig::centered(512, 324, 41, true, std::vector<std::size_t>(40, 27));
  return ResourceGrid::from_config(cfg, 40);
}

ResourceGrid slot_roles() {
  auto code = std::make_shared<const LdpcCode>(make_peg_code(1056, 570, 3, 2024));
  PdschLink link(SlotConfig{}, code);
  return link.layout();
}

}  // namespace

TEST(Powers, Examples) {
  EXPECT_DOUBLE_EQ(powers_from_db({10, 0, 1, true}).p_v, 10.0);
  EXPECT_DOUBLE_EQ(powers_from_db({0, 0, 1, true}).p_j, 1.0);
  const auto p = powers_from_db({15, 10, 1, true});
  EXPECT_NEAR(p.p_v, 31.6227766017, 1e-9);
  EXPECT_NEAR(p.p_j, 10.0, 1e-9);
  EXPECT_THROW(powers_from_db({0, 0, 0.0, true}), InvalidInput);
}

TEST(Channel, NoiselessLimitPassesScaledVictim) {
  Rng rng(1);
  std::vector<cplx> v(100), j(100);
  for (auto& x : v) x = complex_normal(rng, 1.0);
  const ChannelConfig cfg{120, 0, 1.0, false};
  const double amp = 1e6;
  const auto y = apply_channel(v, j, cfg, rng);
  for (std::size_t t = 0; t < v.size(); ++t) EXPECT_LT(std::abs(y[t] - amp * v[t]) / amp, 2e-5);
}

TEST(Channel, NoiseVariance) {
  Rng rng(2);
  std::vector<cplx> z(100000);
  const auto y = apply_channel(z, z, ChannelConfig{0, 0, 2.5, false}, rng);
  double e = 0;
  for (auto v : y) e += std::norm(v);
  EXPECT_NEAR(e / static_cast<double>(y.size()), 2.5, 2.5 * 0.03);
}

TEST(Channel, MeasuredSnr) {
  Rng rng(3);
  const std::size_t n = 100000;
  std::vector<cplx> v(n), z(n);
  for (auto& x : v) x = complex_normal(rng, 1.0);
  const ChannelConfig cfg{13.0, 0, 1.0, true};
  const auto y = apply_channel(v, z, cfg, rng);
  double es = 0, en = 0;
  for (std::size_t t = 0; t < n; ++t) {
    const cplx s = std::sqrt(cfg.p_v()) * v[t];
    es += std::norm(s);
    en += std::norm(y[t] - s);
  }
  EXPECT_NEAR(linear_to_db(es / en), 13.0, 0.2);
}

TEST(Channel, CoherentPhaseIsZeroAndLinear) {
  std::vector<cplx> v(64), j(64);
  Rng g(4);
  for (auto& x : v) x = complex_normal(g, 1.0);
  for (auto& x : j) x = complex_normal(g, 3.0);
  const ChannelConfig coh{5, 0, 1, true};
  Rng a(7), b(7);
  const auto y1 = apply_channel(v, j, coh, a);
  const std::vector<cplx> zero(64);
  const auto y0 = apply_channel(v, zero, coh, b);
  for (std::size_t t = 0; t < 64; ++t) EXPECT_NEAR(std::abs(y1[t] - (y0[t] + j[t])), 0.0, 1e-12);
}

TEST(Channel, NonCoherentPhaseIsRedrawn) {
  const ChannelConfig nc{0, 0, 1, false};
  Rng rng(5);
  const double p1 = draw_phase(nc, rng), p2 = draw_phase(nc, rng);
  EXPECT_NE(p1, p2);
  EXPECT_GT(p1, 0.0);
  EXPECT_LE(p1, 2 * std::numbers::pi);
}

TEST(Channel, LengthMismatch) {
  Rng rng(6);
  std::vector<cplx> a(3), b(4);
  EXPECT_THROW(apply_channel(a, b, ChannelConfig{}, rng), InvalidInput);
}

TEST(Jammer, InstantaneousPowerExamples) {
  EXPECT_DOUBLE_EQ(instantaneous_power(10, 1.0, 1.0), 10.0);
  EXPECT_DOUBLE_EQ(instantaneous_power(10, 0.5, 1.0), 20.0);
  EXPECT_DOUBLE_EQ(instantaneous_power(10, 0.5, 0.25), 80.0);
  EXPECT_THROW(instantaneous_power(10, 0.0, 1.0), InvalidInput);
  EXPECT_THROW(instantaneous_power(10, 0.5, 0.0), InvalidInput);
  EXPECT_THROW(instantaneous_power(10, 1.5, 1.0), InvalidInput);
}

TEST(Jammer, ActionRejectsBadRho) {
  EXPECT_THROW((JammerAction{ModulationScheme::Awgn, 0.0, JammingMethod::SymbolJam}.validate()), InvalidInput);
  EXPECT_THROW(method_from_string("sideways"), InvalidInput);
  for (auto m : kAllMethods) EXPECT_EQ(method_from_string(to_string(m)), m);
}

TEST(Jammer, FullRhoRandomMaskIsAllEligible) {
  const auto roles = slot_roles();
  Rng rng(1);
  for (auto m : {JammingMethod::RandomReJam, JammingMethod::SlotRandomJam, JammingMethod::DmrsJam,
                 JammingMethod::PdschDataJam}) {
    const auto mask = make_mask(m, 1.0, roles, rng);
    for (std::size_t i = 0; i < mask.size(); ++i) EXPECT_EQ(mask[i] != 0, is_eligible(m, roles.roles()[i]));
  }
}

TEST(Jammer, MaskStructure) {
  const auto roles = sec3_roles();
  Rng rng(2);
  const auto sym = make_mask(JammingMethod::SymbolJam, 0.5, roles, rng);
  for (std::size_t m = 0; m < roles.n_symbols(); ++m) {
    std::set<int> vals;
    for (std::size_t k = 0; k < roles.n_sc(); ++k)
      if (roles.role(k, m) == ReRole::Data) vals.insert(sym[roles.index(k, m)]);
    EXPECT_EQ(vals.size(), 1u);
  }
  const auto sub = make_mask(JammingMethod::SubcarrierJam, 0.5, roles, rng);
  for (std::size_t k = 0; k < roles.n_sc(); ++k) {
    std::set<int> vals;
    for (std::size_t m = 0; m < roles.n_symbols(); ++m)
      if (roles.role(k, m) == ReRole::Data) vals.insert(sub[roles.index(k, m)]);
    EXPECT_LE(vals.size(), 1u);
  }
  for (auto mask : {sym, sub})
    for (std::size_t i = 0; i < mask.size(); ++i)
      if (roles.roles()[i] != ReRole::Data) EXPECT_EQ(mask[i], 0);
}

TEST(Jammer, DmrsAndDataMethodsStayInTheirLanes) {
  const auto roles = slot_roles();
  Rng rng(3);
  for (int rep = 0; rep < 20; ++rep) {
    const auto d = make_mask(JammingMethod::DmrsJam, 0.7, roles, rng);
    const auto p = make_mask(JammingMethod::PdschDataJam, 0.7, roles, rng);
    for (std::size_t i = 0; i < d.size(); ++i) {
      if (d[i]) EXPECT_EQ(roles.roles()[i], ReRole::Dmrs);
      if (p[i]) EXPECT_EQ(roles.roles()[i], ReRole::Data);
    }
  }
}

TEST(Jammer, RandomMaskOnFraction) {
  const auto roles = sec3_roles();
  Rng rng(4);
  std::size_t on = 0, eligible = 0;
  while (eligible < 100000) {
    const auto mask = make_mask(JammingMethod::RandomReJam, 0.3, roles, rng);
    for (std::size_t i = 0; i < mask.size(); ++i)
      if (roles.roles()[i] == ReRole::Data) {
        on += mask[i];
        ++eligible;
      }
  }
  EXPECT_NEAR(static_cast<double>(on) / static_cast<double>(eligible), 0.3, 0.01);
}

TEST(Jammer, TargetFractionFromRoles) {
  const auto roles = slot_roles();
  const double dmrs = static_cast<double>(roles.count(ReRole::Dmrs));
  const double data = static_cast<double>(roles.count(ReRole::Data));
  EXPECT_DOUBLE_EQ(target_fraction(JammingMethod::DmrsJam, roles.roles()), dmrs / (dmrs + data));
  EXPECT_DOUBLE_EQ(target_fraction(JammingMethod::PdschDataJam, roles.roles()), data / (dmrs + data));
  EXPECT_DOUBLE_EQ(target_fraction(JammingMethod::SlotRandomJam, roles.roles()), 1.0);
  EXPECT_THROW(target_fraction(JammingMethod::DmrsJam, sec3_roles().roles()), InvalidInput);
}

TEST(Jammer, AwgnOnPowerAndConstantModulus) {
  const auto roles = sec3_roles();
  Rng rng(5);
  const double p_inst = instantaneous_power(10, 0.5, 1.0);
  double e = 0;
  std::size_t n = 0;
  while (n < 100000) {
    const auto g = generate_jamming_grid({ModulationScheme::Awgn, 0.5, JammingMethod::RandomReJam}, 10, roles, rng);
    for (auto v : g.cells())
      if (v != cplx{}) {
        e += std::norm(v);
        ++n;
      }
  }
  EXPECT_NEAR(e / static_cast<double>(n) / p_inst, 1.0, 0.02);

  const auto g = generate_jamming_grid({ModulationScheme::Bpsk, 0.5, JammingMethod::RandomReJam}, 10, roles, rng);
  for (auto v : g.cells())
    if (v != cplx{}) EXPECT_NEAR(std::norm(v), p_inst, 1e-9);
}

TEST(Jammer, GuardsAlwaysZero) {
  const auto roles = sec3_roles();
  const auto slot = slot_roles();
  Rng rng(6);
  for (auto m : kAllMethods)
    for (auto s : kAllSchemes) {
      if (s == ModulationScheme::Qam16) continue;
      const bool pdsch = m == JammingMethod::PdschDataJam || m == JammingMethod::DmrsJam ||
                         m == JammingMethod::SlotRandomJam;
      const auto& r = pdsch ? slot : roles;
      const auto g = generate_jamming_grid({s, 1.0, m}, 10, r, rng);
      for (std::size_t i = 0; i < g.size(); ++i)
        if (r.roles()[i] == ReRole::Guard || r.roles()[i] == ReRole::Null) ASSERT_EQ(g.cells()[i], cplx{});
    }
}

TEST(Jammer, GeneratorMatchesMaskAndReusesStorage) {
  const auto sec3 = sec3_roles();
  const auto slot = slot_roles();
  for (auto m : kAllMethods) {
    const bool pdsch =
        m == JammingMethod::PdschDataJam || m == JammingMethod::DmrsJam || m == JammingMethod::SlotRandomJam;
    const auto& roles = pdsch ? slot : sec3;
    const JammingGenerator gen(m, roles);
    ResourceGrid out;
    for (int rep = 0; rep < 3; ++rep) {
      Rng a(100 + rep), b(100 + rep);
      const auto mask = make_mask(m, 0.4, roles, a);
      gen.generate({ModulationScheme::Bpsk, 0.4, m}, 10, b, out);
      for (std::size_t i = 0; i < mask.size(); ++i) ASSERT_EQ(mask[i] != 0, out.cells()[i] != cplx{}) << to_string(m);
      EXPECT_TRUE(std::equal(out.roles().begin(), out.roles().end(), roles.roles().begin()));
    }
  }
  Rng rng(1);
  EXPECT_THROW(JammingGenerator(JammingMethod::SymbolJam, sec3).generate({ModulationScheme::Awgn, 1.0,
                                                                           JammingMethod::RandomReJam}, 10, rng),
               InvalidInput);
}

TEST(BitPool, CoinFrequencyAndBitUniformity) {
  Rng rng(9);
  BitPool pool(rng);
  EXPECT_EQ(BitPool::threshold(1.0), std::uint64_t{1} << 32);
  EXPECT_EQ(BitPool::threshold(0.0), 0u);
  const auto thr = BitPool::threshold(0.3);
  const int n = 200000;
  int heads = 0;
  for (int i = 0; i < n; ++i) heads += pool.coin(thr);
  // 5 sigma of a Binomial(n, 0.3)
  EXPECT_NEAR(heads / double(n), 0.3, 5 * std::sqrt(0.3 * 0.7 / n));
  std::array<int, 16> counts{};
  for (int i = 0; i < 160000; ++i) ++counts[pool.take(4)];
  for (int c : counts) EXPECT_NEAR(c, 10000, 500);
  for (int i = 0; i < 1000; ++i) EXPECT_TRUE(BitPool(rng).coin(BitPool::threshold(1.0)));
}
