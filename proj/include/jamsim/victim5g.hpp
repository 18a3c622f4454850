#pragma once

// 5G-like PDSCH downlink: 14-symbol slots with a DMRS pilot symbol, 16QAM over
// a rate ~0.54 LDPC code, LS channel/noise estimation from the pilots, zero
// forcing equalization, and Chase-combining HARQ.

#include <cmath>
#include <deque>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "jamsim/channel.hpp"
#include "jamsim/error.hpp"
#include "jamsim/fec.hpp"
#include "jamsim/grid.hpp"
#include "jamsim/jammer.hpp"
#include "jamsim/random.hpp"

namespace jamsim {

struct HarqConfig {
  bool enabled = true;
  std::size_t max_retransmissions = 1;
};

struct SlotConfig {
  std::size_t n_fft = 1024;
  std::size_t n_data_sc = 612;
  std::size_t guard_each_side = 206;
  // 80-sample CP on the first symbol of each half slot, 72 elsewhere.
  std::vector<std::size_t> cp_pattern = {80, 72, 72, 72, 72, 72, 72, 80, 72, 72, 72, 72, 72, 72};
  std::vector<std::size_t> dmrs_symbol_indices = {2};
  std::size_t dmrs_subcarrier_stride = 2;
  ModulationScheme scheme = ModulationScheme::Qam16;
  std::size_t code_n = 1056;
  std::size_t code_k = 570;
  std::uint64_t code_seed = 2024;
  std::size_t frames_per_step = 4;
  std::size_t slots_per_frame = 1;
  std::size_t max_iters = 25;
  // Codewords carried per slot, 0 = as many as fit. Leftover data REs carry
  // filler, so a smaller budget cuts decode time without changing the grid.
  std::size_t max_codewords_per_slot = 8;
  HarqConfig harq;

  std::size_t slots_per_step() const { return frames_per_step * slots_per_frame; }

  void validate() const {
    require(n_data_sc + 2 * guard_each_side <= n_fft, "SlotConfig: data + guards exceed the FFT size");
    require(!cp_pattern.empty(), "SlotConfig: empty CP pattern");
    require(!dmrs_symbol_indices.empty(), "SlotConfig: at least one DMRS symbol is required");
    for (auto s : dmrs_symbol_indices) require(s < cp_pattern.size(), "SlotConfig: DMRS symbol outside slot");
    require(dmrs_subcarrier_stride >= 1, "SlotConfig: DMRS stride must be positive");
    require(n_data_sc / dmrs_subcarrier_stride >= 3, "SlotConfig: need at least 3 pilots per DMRS symbol");
    require(bits_per_symbol(scheme) > 0, "SlotConfig: victim scheme must carry bits");
    require(frames_per_step >= 1 && slots_per_frame >= 1, "SlotConfig: step must contain a slot");
    require(max_iters >= 1, "SlotConfig: max_iters must be positive");
  }
};

struct ChannelEstimate {
  ResourceGrid h;  // per-RE gain estimate
  double noise_var = 0.0;  // complex noise variance per RE
};

struct Equalized {
  std::vector<cplx> symbols;       // Data REs, placement order
  std::vector<double> noise_var;   // complex variance per symbol (inf = erased)
  std::size_t erasures = 0;
};

struct HarqProcess {
  Bits codeword;
  LlrBlock combined;
  std::size_t transmissions = 0;
};

struct HarqState {
  std::deque<HarqProcess> pending;
};

struct LinkStepResult {
  std::vector<std::uint8_t> acks;  // one per resolved codeword chain, 1 = ACK
  double true_bler = 0.0;
  std::vector<double> llr_samples;  // channel LLRs, only when requested
  std::size_t slots = 0;
  std::size_t erasures = 0;
  double mean_noise_var_est = 0.0;
};

class PdschLink {
 public:
  PdschLink(SlotConfig cfg, std::shared_ptr<const LdpcCode> code)
      : cfg_(std::move(cfg)), code_(std::move(code)) {
    cfg_.validate();
    require(code_ != nullptr, "PdschLink: missing LDPC code");
    ofdm_ = OfdmConfig::centered(cfg_.n_fft, cfg_.n_data_sc, cfg_.guard_each_side, false, cfg_.cp_pattern);
    layout_ = ResourceGrid::from_config(ofdm_, ofdm_.symbols_per_unit);
    for (auto m : cfg_.dmrs_symbol_indices)
      for (std::size_t i = 0; i < ofdm_.data_subcarriers.size(); i += cfg_.dmrs_subcarrier_stride)
        layout_.role(ofdm_.data_subcarriers[i], m) = ReRole::Dmrs;
    // Fixed QPSK pilot sequence, unit power.
    Rng pilot_rng(0x5eedu);
    const auto qpsk = constellation(ModulationScheme::Qpsk);
    std::uniform_int_distribution<std::size_t> pick(0, 3);
    pilots_.resize(layout_.size());
    for (std::size_t i = 0; i < layout_.size(); ++i)
      if (layout_.roles()[i] == ReRole::Dmrs) pilots_[i] = qpsk[pick(pilot_rng)];
    data_order_ = layout_.indices_of(ReRole::Data, ofdm_.data_subcarriers);
    const std::size_t bits = data_order_.size() * static_cast<std::size_t>(bits_per_symbol(cfg_.scheme));
    codewords_per_slot_ = bits / code_->n();
    if (cfg_.max_codewords_per_slot > 0) codewords_per_slot_ = std::min(codewords_per_slot_, cfg_.max_codewords_per_slot);
    require(codewords_per_slot_ >= 1, "PdschLink: codeword does not fit in a slot");
    decoder_ = std::make_unique<MinSumDecoder>(*code_);
  }

  PdschLink(const PdschLink&) = delete;
  PdschLink& operator=(const PdschLink&) = delete;
  PdschLink(PdschLink&&) = default;

  const SlotConfig& config() const { return cfg_; }
  const OfdmConfig& ofdm() const { return ofdm_; }
  const LdpcCode& code() const { return *code_; }
  const ResourceGrid& layout() const { return layout_; }
  std::size_t codewords_per_slot() const { return codewords_per_slot_; }
  std::size_t data_res() const { return data_order_.size(); }

  // Slot with pilots on the DMRS REs and the given codewords tiled over the
  // Data REs; Data REs past the last codeword get random filler symbols.
  ResourceGrid build_slot(std::span<const Bits> codewords, Rng& rng) const {
    if (codewords.size() > codewords_per_slot_)
      throw InvalidInput("build_slot: " + std::to_string(codewords.size()) + " codewords exceed slot capacity of " +
                         std::to_string(codewords_per_slot_));
    ResourceGrid grid = layout_;
    auto cells = grid.cells();
    const auto roles = grid.roles();
    for (std::size_t i = 0; i < cells.size(); ++i)
      if (roles[i] == ReRole::Dmrs) cells[i] = pilots_[i];
    map_codewords_to_grid(codewords, cfg_.scheme, grid, ofdm_);
    const auto points = constellation(cfg_.scheme);
    std::uniform_int_distribution<std::size_t> pick(0, points.size() - 1);
    const std::size_t used_res =
        codewords.size() * code_->n() / static_cast<std::size_t>(bits_per_symbol(cfg_.scheme));
    for (std::size_t i = used_res; i < data_order_.size(); ++i) cells[data_order_[i]] = points[pick(rng)];
    return grid;
  }

  // Encodes `payload` (a whole number of k-bit blocks) and builds the slot.
  ResourceGrid build_slot_from_payload(std::span<const std::uint8_t> payload, Rng& rng) const {
    const std::size_t k = code_->k();
    if (payload.size() % k != 0) throw InvalidInput("build_slot: payload is not a whole number of info blocks");
    if (payload.size() / k > codewords_per_slot_) throw InvalidInput("build_slot: payload exceeds slot capacity");
    std::vector<Bits> cws;
    for (std::size_t off = 0; off < payload.size(); off += k) cws.push_back(code_->encode(payload.subspan(off, k)));
    return build_slot(cws, rng);
  }

  // LS gains at the pilots, linear interpolation across subcarriers and
  // nearest-DMRS-symbol extension in time. The noise variance comes from the
  // second difference of neighbouring pilot estimates: for a locally linear
  // channel r = h_i - (h_{i-1} + h_{i+1}) / 2 is pure noise with variance
  // 1.5 sigma^2 at unit pilot power.
  ChannelEstimate estimate_channel(const ResourceGrid& rx) const {
    require(rx.n_sc() == layout_.n_sc() && rx.n_symbols() == layout_.n_symbols(),
            "estimate_channel: grid shape does not match the slot");
    const auto& order = ofdm_.data_subcarriers;
    const std::size_t n_data = order.size();
    ChannelEstimate est;
    est.h = layout_;
    double resid_sum = 0.0;
    std::size_t resid_count = 0;
    std::vector<std::vector<cplx>> per_dmrs;
    for (auto m : cfg_.dmrs_symbol_indices) {
      std::vector<std::size_t> pos;
      std::vector<cplx> ls;
      for (std::size_t i = 0; i < n_data; i += cfg_.dmrs_subcarrier_stride) {
        const std::size_t idx = layout_.index(order[i], m);
        pos.push_back(i);
        ls.push_back(rx.cells()[idx] / pilots_[idx]);
      }
      for (std::size_t p = 1; p + 1 < ls.size(); ++p) {
        resid_sum += std::norm(ls[p] - 0.5 * (ls[p - 1] + ls[p + 1]));
        ++resid_count;
      }
      std::vector<cplx> h(n_data);
      std::size_t p = 0;
      for (std::size_t i = 0; i < n_data; ++i) {
        while (p + 1 < pos.size() && pos[p + 1] <= i) ++p;
        if (i <= pos.front()) {
          h[i] = ls.front();
        } else if (p + 1 >= pos.size()) {
          h[i] = ls.back();
        } else {
          const double w = static_cast<double>(i - pos[p]) / static_cast<double>(pos[p + 1] - pos[p]);
          h[i] = (1.0 - w) * ls[p] + w * ls[p + 1];
        }
      }
      per_dmrs.push_back(std::move(h));
    }
    est.noise_var = resid_sum / static_cast<double>(resid_count) / 1.5;
    const auto& dmrs = cfg_.dmrs_symbol_indices;
    for (std::size_t m = 0; m < layout_.n_symbols(); ++m) {
      std::size_t nearest = 0;
      for (std::size_t d = 1; d < dmrs.size(); ++d) {
        const auto dist = [m](std::size_t s) { return m > s ? m - s : s - m; };
        if (dist(dmrs[d]) < dist(dmrs[nearest])) nearest = d;
      }
      for (std::size_t i = 0; i < n_data; ++i) est.h.at(order[i], m) = per_dmrs[nearest][i];
    }
    return est;
  }

  // Zero-forcing per Data RE; gains below 1e-12 are erased.
  Equalized equalize(const ResourceGrid& rx, const ChannelEstimate& est) const {
    Equalized eq;
    eq.symbols.reserve(data_order_.size());
    eq.noise_var.reserve(data_order_.size());
    for (auto idx : data_order_) {
      const cplx h = est.h.cells()[idx];
      if (std::abs(h) < 1e-12) {
        eq.symbols.emplace_back(0.0, 0.0);
        eq.noise_var.push_back(std::numeric_limits<double>::infinity());
        ++eq.erasures;
        continue;
      }
      eq.symbols.push_back(rx.cells()[idx] / h);
      eq.noise_var.push_back(est.noise_var / std::norm(h));
    }
    return eq;
  }

  // Channel LLRs for the Data REs in placement order.
  LlrBlock demap(const Equalized& eq) const {
    std::vector<double> per_dim(eq.noise_var.size());
    for (std::size_t i = 0; i < per_dim.size(); ++i) per_dim[i] = std::max(eq.noise_var[i] / 2.0, 1e-300);
    return compute_llrs(eq.symbols, cfg_.scheme, 1.0, per_dim);
  }

  // Slot through jammer + channel + receiver front end.
  ResourceGrid transmit(const ResourceGrid& tx, const std::optional<JammerAction>& jam, const ChannelConfig& chan,
                        Rng& rng) const {
    const auto victim_td = ofdm_modulate(tx, ofdm_);
    std::vector<cplx> jam_td(victim_td.size());
    if (jam) {
      const ResourceGrid j = generate_jamming_grid(*jam, chan.jnr_db, layout_, rng);
      jam_td = ofdm_modulate(j, ofdm_, CyclicPrefix::Zero);
    }
    const auto rx_td = apply_channel(victim_td, jam_td, chan, rng);
    return ofdm_demodulate(rx_td, ofdm_);
  }

  LinkStepResult run_link_step(const std::optional<JammerAction>& jam, const ChannelConfig& chan, HarqState& harq,
                               Rng& rng, bool collect_llrs = false) {
    LinkStepResult res;
    const std::size_t planned = cfg_.slots_per_step();
    // A step normally ends after `planned` slots; if every chain is still
    // waiting on a retransmission it runs on until one resolves.
    const std::size_t limit = planned + cfg_.harq.max_retransmissions + 1;
    double nv_sum = 0.0;
    for (std::size_t s = 0; s < limit && (s < planned || res.acks.empty()); ++s) {
      run_slot(jam, chan, harq, rng, res, collect_llrs, nv_sum);
      ++res.slots;
    }
    res.mean_noise_var_est = nv_sum / static_cast<double>(res.slots);
    std::size_t nacks = 0;
    for (auto a : res.acks) nacks += a == 0;
    res.true_bler = res.acks.empty() ? 0.0 : static_cast<double>(nacks) / static_cast<double>(res.acks.size());
    return res;
  }

 private:
  void run_slot(const std::optional<JammerAction>& jam, const ChannelConfig& chan, HarqState& harq, Rng& rng,
                LinkStepResult& res, bool collect_llrs, double& nv_sum) {
    std::vector<HarqProcess> procs;
    while (!harq.pending.empty() && procs.size() < codewords_per_slot_) {
      procs.push_back(std::move(harq.pending.front()));
      harq.pending.pop_front();
    }
    Bits info(code_->k());
    while (procs.size() < codewords_per_slot_) {
      for (auto& b : info) b = static_cast<std::uint8_t>(rng() & 1U);
      procs.push_back({code_->encode(info), LlrBlock(code_->n(), 0.0), 0});
    }
    std::vector<Bits> cws;
    cws.reserve(procs.size());
    for (const auto& p : procs) cws.push_back(p.codeword);

    const ResourceGrid tx = build_slot(cws, rng);
    const ResourceGrid rx = transmit(tx, jam, chan, rng);
    const ChannelEstimate est = estimate_channel(rx);
    nv_sum += est.noise_var;
    const Equalized eq = equalize(rx, est);
    res.erasures += eq.erasures;
    const LlrBlock llrs = demap(eq);
    if (collect_llrs) res.llr_samples.insert(res.llr_samples.end(), llrs.begin(), llrs.end());

    const std::size_t n = code_->n();
    for (std::size_t c = 0; c < procs.size(); ++c) {
      auto& p = procs[c];
      for (std::size_t i = 0; i < n; ++i) p.combined[i] += llrs[c * n + i];
      p.transmissions += 1;
      const DecodeResult dec = decoder_->decode(p.combined, cfg_.max_iters);
      // ACK needs a valid codeword that is also the transmitted one (ideal CRC).
      if (dec.success && dec.bits == p.codeword) {
        res.acks.push_back(1);
      } else if (cfg_.harq.enabled && p.transmissions <= cfg_.harq.max_retransmissions) {
        harq.pending.push_back(std::move(p));
      } else {
        res.acks.push_back(0);
      }
    }
  }

  SlotConfig cfg_;
  std::shared_ptr<const LdpcCode> code_;
  OfdmConfig ofdm_;
  ResourceGrid layout_;
  std::vector<cplx> pilots_;
  std::vector<std::size_t> data_order_;
  std::size_t codewords_per_slot_ = 0;
  std::unique_ptr<MinSumDecoder> decoder_;
};

}  // namespace jamsim
