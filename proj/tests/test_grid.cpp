#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <set>

#include "jamsim/grid.hpp"
#include "jamsim/random.hpp"

using namespace jamsim;

namespace {

OfdmConfig sec3_layout(std::size_t symbols = 1) {
  return OfdmConfig::centered(512, 324, 41, true, std::vector<std::size_t>(symbols, 27));
}

Bits random_bits(std::size_t n, Rng& rng) {
  Bits b(n);
  for (auto& x : b) x = static_cast<std::uint8_t>(rng() & 1U);
  return b;
}

}  // namespace

TEST(MapBits, BpskZeroIsPlusOne) {
  const Bits b{0};
  const auto s = map_bits(b, ModulationScheme::Bpsk);
  ASSERT_EQ(s.size(), 1u);
  EXPECT_DOUBLE_EQ(s[0].real(), 1.0);
  EXPECT_DOUBLE_EQ(s[0].imag(), 0.0);
}

TEST(MapBits, BpskPi4IsRotated) {
  const Bits b{0};
  const auto s = map_bits(b, ModulationScheme::BpskPi4);
  EXPECT_NEAR(std::abs(s[0] - std::polar(1.0, std::numbers::pi / 4)), 0.0, 1e-15);
}

TEST(MapBits, Qam16RandomBitsHaveUnitEnergy) {
  Rng rng(5);
  const auto bits = random_bits(100000, rng);
  const auto s = map_bits(bits, ModulationScheme::Qam16);
  double e = 0;
  for (auto v : s) e += std::norm(v);
  EXPECT_NEAR(e / static_cast<double>(s.size()), 1.0, 0.02);
}

TEST(MapBits, Errors) {
  const Bits odd{0, 1, 1};
  EXPECT_THROW(map_bits(odd, ModulationScheme::Qpsk), InvalidInput);
  EXPECT_THROW(map_bits(odd, ModulationScheme::Awgn), InvalidInput);
}

TEST(Constellation, UnitEnergyAndInjective) {
  for (auto s : kAllSchemes) {
    if (s == ModulationScheme::Awgn) continue;
    const auto pts = constellation(s);
    ASSERT_EQ(pts.size(), std::size_t{1} << bits_per_symbol(s));
    double e = 0;
    for (auto p : pts) e += std::norm(p);
    EXPECT_NEAR(e / static_cast<double>(pts.size()), 1.0, 1e-12) << to_string(s);
    for (std::size_t i = 0; i < pts.size(); ++i)
      for (std::size_t j = i + 1; j < pts.size(); ++j) EXPECT_GT(std::abs(pts[i] - pts[j]), 1e-6);
  }
}

TEST(Constellation, Pi4VariantsAreExactRotations) {
  const std::pair<ModulationScheme, ModulationScheme> pairs[] = {{ModulationScheme::Bpsk, ModulationScheme::BpskPi4},
                                                                 {ModulationScheme::Qpsk, ModulationScheme::QpskPi4}};
  for (auto [base, rot] : pairs) {
    const auto a = constellation(base), b = constellation(rot);
    for (std::size_t i = 0; i < a.size(); ++i)
      EXPECT_NEAR(std::abs(a[i] * std::polar(1.0, std::numbers::pi / 4) - b[i]), 0.0, 1e-14);
  }
}

TEST(Constellation, QpskAndQam16AreGray) {
  for (auto s : {ModulationScheme::Qpsk, ModulationScheme::Qam16}) {
    const auto pts = constellation(s);
    double dmin = 1e9;
    for (std::size_t i = 0; i < pts.size(); ++i)
      for (std::size_t j = i + 1; j < pts.size(); ++j) dmin = std::min(dmin, std::abs(pts[i] - pts[j]));
    for (std::size_t i = 0; i < pts.size(); ++i)
      for (std::size_t j = i + 1; j < pts.size(); ++j)
        if (std::abs(std::abs(pts[i] - pts[j]) - dmin) < 1e-9) EXPECT_EQ(std::popcount(i ^ j), 1);
  }
}

TEST(OfdmConfig, Sec3Layout) {
  const auto cfg = sec3_layout();
  EXPECT_EQ(cfg.data_subcarriers.size(), 324u);
  EXPECT_EQ(cfg.guard_band.size(), 82u);
  ASSERT_TRUE(cfg.center_null.has_value());
  EXPECT_EQ(*cfg.center_null, 0u);
  std::set<std::size_t> all(cfg.data_subcarriers.begin(), cfg.data_subcarriers.end());
  EXPECT_EQ(all.size(), 324u);
  EXPECT_FALSE(all.count(0));
}

TEST(OfdmConfig, RejectsOverlapAndBadCp) {
  OfdmConfig cfg;
  cfg.n_sc = 8;
  cfg.data_subcarriers = {1, 2};
  cfg.guard_band = {2};
  cfg.cp_lengths = {0};
  EXPECT_THROW(cfg.validate(), InvalidInput);
  cfg.guard_band = {3};
  cfg.cp_lengths = {0, 0};
  EXPECT_THROW(cfg.validate(), InvalidInput);
  cfg.cp_lengths = {0};
  cfg.data_subcarriers = {9};
  EXPECT_THROW(cfg.validate(), InvalidInput);
}

TEST(Ofdm, SingleToneIsComplexExponential) {
  OfdmConfig cfg;
  cfg.n_sc = 64;
  cfg.data_subcarriers = {5};
  cfg.cp_lengths = {0};
  ResourceGrid g = ResourceGrid::from_config(cfg, 1);
  g.at(5, 0) = 1.0;
  const auto td = ofdm_modulate(g, cfg);
  ASSERT_EQ(td.size(), 64u);
  for (std::size_t t = 0; t < 64; ++t) {
    const cplx want = std::polar(1.0 / 8.0, 2 * std::numbers::pi * 5.0 * static_cast<double>(t) / 64.0);
    EXPECT_NEAR(std::abs(td[t] - want), 0.0, 1e-12);
  }
}

TEST(Ofdm, RoundTripAndCpLength) {
  const auto cfg = sec3_layout(3);
  Rng rng(2);
  ResourceGrid g = ResourceGrid::from_config(cfg, 3);
  for (std::size_t m = 0; m < 3; ++m)
    for (auto k : cfg.data_subcarriers) g.at(k, m) = complex_normal(rng, 1.0);
  const auto td = ofdm_modulate(g, cfg);
  EXPECT_EQ(td.size(), 3u * (512 + 27));
  const auto back = ofdm_demodulate(td, cfg);
  for (std::size_t i = 0; i < g.size(); ++i) EXPECT_NEAR(std::abs(back.cells()[i] - g.cells()[i]), 0.0, 1e-10);
  // guard and null cells stay exactly zero
  for (std::size_t i = 0; i < g.size(); ++i)
    if (back.roles()[i] == ReRole::Guard || back.roles()[i] == ReRole::Null)
      EXPECT_LT(std::abs(back.cells()[i]), 1e-12);
  // the prefix is the symbol tail
  for (std::size_t t = 0; t < 27; ++t) EXPECT_EQ(td[t], td[512 + t]);
}

TEST(Ofdm, ParsevalPerSymbol) {
  const auto cfg = sec3_layout();
  Rng rng(3);
  ResourceGrid g = ResourceGrid::from_config(cfg, 1);
  double ef = 0;
  for (auto k : cfg.data_subcarriers) {
    g.at(k, 0) = complex_normal(rng, 2.0);
    ef += std::norm(g.at(k, 0));
  }
  const auto td = ofdm_modulate(g, cfg);
  double et = 0;
  for (std::size_t t = 27; t < td.size(); ++t) et += std::norm(td[t]);
  EXPECT_NEAR(et / ef, 1.0, 1e-9);
}

TEST(Ofdm, ZeroInputAndNoiseVariance) {
  const auto cfg = sec3_layout(20);
  const std::vector<cplx> zeros(cfg.samples_per_unit());
  const auto g0 = ofdm_demodulate(zeros, cfg);
  for (auto v : g0.cells()) EXPECT_EQ(v, cplx{});

  Rng rng(4);
  std::vector<cplx> noise(cfg.samples_per_unit());
  for (auto& v : noise) v = complex_normal(rng, 1.7);
  const auto g = ofdm_demodulate(noise, cfg);
  double e = 0;
  for (auto v : g.cells()) e += std::norm(v);
  EXPECT_NEAR(e / static_cast<double>(g.size()), 1.7, 1.7 * 0.05);
}

TEST(Ofdm, ShapeErrors) {
  const auto cfg = sec3_layout(2);
  ResourceGrid wrong_sc(256, 2);
  EXPECT_THROW(ofdm_modulate(wrong_sc, cfg), InvalidInput);
  ResourceGrid wrong_sym = ResourceGrid::from_config(cfg, 3);
  EXPECT_THROW(ofdm_modulate(wrong_sym, cfg), InvalidInput);
  const std::vector<cplx> short_input(cfg.samples_per_unit() - 1);
  EXPECT_THROW(ofdm_demodulate(short_input, cfg), InvalidInput);
}
