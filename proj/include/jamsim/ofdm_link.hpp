#pragma once

// Coded CP-OFDM link with BPSK over a short LDPC code: two codewords per OFDM
// symbol, perfectly known unit channel, frequency-domain jamming.

#include <cmath>
#include <memory>
#include <optional>
#include <vector>

#include "jamsim/channel.hpp"
#include "jamsim/error.hpp"
#include "jamsim/fec.hpp"
#include "jamsim/grid.hpp"
#include "jamsim/jammer.hpp"
#include "jamsim/random.hpp"

namespace jamsim {

// Noise variance the demapper assumes.
enum class LlrNoiseModel {
  Thermal,        // sigma^2 only; the receiver is unaware of the jammer
  PerSymbol,      // noise-plus-interference power measured per OFDM symbol
  PerSubcarrier,  // same, measured per subcarrier across the unit
};

struct CodedOfdmConfig {
  std::size_t n_fft = 512;
  std::size_t n_data = 324;
  std::size_t guard_each_side = 41;
  bool dc_null = true;
  std::size_t cp_length = 27;
  std::size_t symbols_per_unit = 40;
  std::size_t code_n = 162;
  std::size_t code_k = 121;
  std::uint64_t code_seed = 27;
  std::size_t max_iters = 25;
  LlrNoiseModel llr_noise = LlrNoiseModel::PerSymbol;
};

struct UnitResult {
  std::vector<std::uint8_t> ok;  // per codeword, 1 = decoded correctly
  std::vector<double> llrs;      // channel LLRs when requested
};

class CodedOfdmLink {
 public:
  CodedOfdmLink(CodedOfdmConfig cfg, std::shared_ptr<const LdpcCode> code)
      : cfg_(cfg), code_(std::move(code)), decoder_(*code_) {
    ofdm_ = OfdmConfig::centered(cfg_.n_fft, cfg_.n_data, cfg_.guard_each_side, cfg_.dc_null,
                                 std::vector<std::size_t>(cfg_.symbols_per_unit, cfg_.cp_length));
    layout_ = ResourceGrid::from_config(ofdm_, cfg_.symbols_per_unit);
    require(code_->n() <= cfg_.n_data, "CodedOfdmLink: codeword longer than an OFDM symbol");
    per_symbol_ = cfg_.n_data / code_->n();
  }

  const OfdmConfig& ofdm() const { return ofdm_; }
  const ResourceGrid& layout() const { return layout_; }
  const LdpcCode& code() const { return *code_; }
  std::size_t codewords_per_unit() const { return per_symbol_ * cfg_.symbols_per_unit; }

  UnitResult run_unit(const std::optional<JammerAction>& jam, const ChannelConfig& chan, Rng& rng,
                      bool collect_llrs = false) {
    const std::size_t n = code_->n();
    const std::size_t count = codewords_per_unit();
    std::vector<Bits> cws(count);
    Bits info(code_->k());
    for (auto& cw : cws) {
      for (auto& b : info) b = static_cast<std::uint8_t>(rng() & 1U);
      cw = code_->encode(info);
    }
    // Codewords fill one OFDM symbol at a time; any leftover subcarriers of a
    // symbol stay empty.
    ResourceGrid tx = layout_;
    for (std::size_t m = 0; m < cfg_.symbols_per_unit; ++m) {
      ResourceGrid one = ResourceGrid::from_config(ofdm_, 1);
      map_codewords_to_grid(std::span<const Bits>(cws.data() + m * per_symbol_, per_symbol_),
                            ModulationScheme::Bpsk, one, ofdm_);
      std::copy(one.column(0).begin(), one.column(0).end(), tx.column(m).begin());
    }

    const auto victim_td = ofdm_modulate(tx, ofdm_);
    std::vector<cplx> jam_td(victim_td.size());
    if (jam) jam_td = ofdm_modulate(generate_jamming_grid(*jam, chan.jnr_db, layout_, rng), ofdm_, CyclicPrefix::Zero);
    const auto rx = ofdm_demodulate(apply_channel(victim_td, jam_td, chan, rng), ofdm_);

    const double amp = std::sqrt(chan.p_v());
    std::vector<double> sc_nv;
    if (cfg_.llr_noise == LlrNoiseModel::PerSubcarrier) {
      for (auto k : ofdm_.data_subcarriers) {
        double pwr = 0.0;
        for (std::size_t m = 0; m < cfg_.symbols_per_unit; ++m) pwr += std::norm(rx.at(k, m));
        sc_nv.push_back(std::max(pwr / static_cast<double>(cfg_.symbols_per_unit) - chan.p_v(), chan.sigma2) / 2.0);
      }
    }
    UnitResult res;
    res.ok.reserve(count);
    for (std::size_t m = 0; m < cfg_.symbols_per_unit; ++m) {
      std::vector<cplx> y;
      y.reserve(cfg_.n_data);
      for (auto k : ofdm_.data_subcarriers) y.push_back(rx.at(k, m));
      double nv = chan.sigma2;
      if (cfg_.llr_noise == LlrNoiseModel::PerSymbol) {
        double pwr = 0.0;
        for (auto v : y) pwr += std::norm(v);
        nv = std::max(pwr / static_cast<double>(y.size()) - chan.p_v(), chan.sigma2);
      }
      const LlrBlock llrs = sc_nv.empty() ? compute_llrs(y, ModulationScheme::Bpsk, amp, nv / 2.0)
                                          : compute_llrs(y, ModulationScheme::Bpsk, amp, std::span<const double>(sc_nv));
      if (collect_llrs) res.llrs.insert(res.llrs.end(), llrs.begin(), llrs.begin() + static_cast<std::ptrdiff_t>(per_symbol_ * n));
      for (const auto& block : extract_llrs_from_grid(llrs, n, per_symbol_)) {
        const auto& sent = cws[res.ok.size()];
        const DecodeResult dec = decoder_.decode(block, cfg_.max_iters);
        res.ok.push_back(dec.success && dec.bits == sent);
      }
    }
    return res;
  }

 private:
  CodedOfdmConfig cfg_;
  std::shared_ptr<const LdpcCode> code_;
  MinSumDecoder decoder_;
  OfdmConfig ofdm_;
  ResourceGrid layout_;
  std::size_t per_symbol_ = 0;
};

}  // namespace jamsim
