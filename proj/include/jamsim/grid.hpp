#pragma once

// OFDM resource grid, constellation mapping and CP-OFDM (de)modulation.

#include <fftw3.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <mutex>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "jamsim/error.hpp"

namespace jamsim {

using cplx = std::complex<double>;
using Bits = std::vector<std::uint8_t>;

enum class ModulationScheme { Awgn, Bpsk, BpskPi4, Qpsk, QpskPi4, Qam16 };

inline constexpr std::array kAllSchemes = {ModulationScheme::Awgn,    ModulationScheme::Bpsk,
                                           ModulationScheme::BpskPi4, ModulationScheme::Qpsk,
                                           ModulationScheme::QpskPi4, ModulationScheme::Qam16};

inline std::string_view to_string(ModulationScheme s) {
  switch (s) {
    case ModulationScheme::Awgn: return "awgn";
    case ModulationScheme::Bpsk: return "bpsk";
    case ModulationScheme::BpskPi4: return "bpsk_pi4";
    case ModulationScheme::Qpsk: return "qpsk";
    case ModulationScheme::QpskPi4: return "qpsk_pi4";
    case ModulationScheme::Qam16: return "qam16";
  }
  return "?";
}

inline ModulationScheme scheme_from_string(std::string_view name) {
  for (auto s : kAllSchemes)
    if (to_string(s) == name) return s;
  throw InvalidInput("unknown modulation scheme '" + std::string(name) + "'");
}

inline int bits_per_symbol(ModulationScheme s) {
  switch (s) {
    case ModulationScheme::Awgn: return 0;
    case ModulationScheme::Bpsk:
    case ModulationScheme::BpskPi4: return 1;
    case ModulationScheme::Qpsk:
    case ModulationScheme::QpskPi4: return 2;
    case ModulationScheme::Qam16: return 4;
  }
  return 0;
}

inline bool is_pi4_rotated(ModulationScheme s) {
  return s == ModulationScheme::BpskPi4 || s == ModulationScheme::QpskPi4;
}

inline const cplx kPi4Rotation = std::polar(1.0, std::numbers::pi / 4.0);

// Constellation points indexed by the bit label read MSB-first, so label 0b10
// for QPSK means b0=1, b1=0. Gray labelled, unit average energy, bit 0 -> +1.
inline std::vector<cplx> constellation(ModulationScheme s) {
  std::vector<cplx> pts;
  switch (s) {
    case ModulationScheme::Awgn:
      throw InvalidInput("AWGN has no constellation");
    case ModulationScheme::Bpsk:
    case ModulationScheme::BpskPi4:
      pts = {cplx(1, 0), cplx(-1, 0)};
      break;
    case ModulationScheme::Qpsk:
    case ModulationScheme::QpskPi4: {
      const double a = 1.0 / std::numbers::sqrt2;
      for (int label = 0; label < 4; ++label) {
        const int b0 = (label >> 1) & 1, b1 = label & 1;
        pts.emplace_back(a * (1 - 2 * b0), a * (1 - 2 * b1));
      }
      break;
    }
    case ModulationScheme::Qam16: {
      const double a = 1.0 / std::sqrt(10.0);
      for (int label = 0; label < 16; ++label) {
        const int b0 = (label >> 3) & 1, b1 = (label >> 2) & 1;
        const int b2 = (label >> 1) & 1, b3 = label & 1;
        pts.emplace_back(a * (1 - 2 * b0) * (1 + 2 * b1), a * (1 - 2 * b2) * (1 + 2 * b3));
      }
      break;
    }
  }
  if (is_pi4_rotated(s))
    for (auto& p : pts) p *= kPi4Rotation;
  return pts;
}

inline std::vector<cplx> map_bits(std::span<const std::uint8_t> bits, ModulationScheme scheme) {
  if (scheme == ModulationScheme::Awgn)
    throw InvalidInput("map_bits: AWGN is not a bit-carrying scheme");
  const auto bps = static_cast<std::size_t>(bits_per_symbol(scheme));
  if (bits.size() % bps != 0)
    throw InvalidInput("map_bits: bit count " + std::to_string(bits.size()) +
                       " not divisible by " + std::to_string(bps));
  const auto points = constellation(scheme);
  std::vector<cplx> out;
  out.reserve(bits.size() / bps);
  for (std::size_t i = 0; i < bits.size(); i += bps) {
    unsigned label = 0;
    for (std::size_t b = 0; b < bps; ++b) label = (label << 1) | (bits[i + b] & 1U);
    out.push_back(points[label]);
  }
  return out;
}

enum class ReRole : std::uint8_t { Data, Dmrs, Guard, Null };

// Subcarrier indices are FFT bins: row k of the grid is multiplied by
// exp(j2πkt/N) in the time domain.
struct OfdmConfig {
  std::size_t n_sc = 0;
  std::vector<std::size_t> data_subcarriers;  // ascending frequency order
  std::vector<std::size_t> guard_band;
  std::optional<std::size_t> center_null;
  std::vector<std::size_t> cp_lengths;  // one per symbol of a unit
  std::size_t symbols_per_unit = 1;

  void validate() const {
    require(n_sc > 0, "OfdmConfig: n_sc must be positive");
    require(symbols_per_unit > 0, "OfdmConfig: symbols_per_unit must be positive");
    require(cp_lengths.size() == symbols_per_unit,
            "OfdmConfig: cp_lengths must have symbols_per_unit entries");
    std::vector<std::uint8_t> used(n_sc, 0);
    auto claim = [&](std::size_t k) {
      require(k < n_sc, "OfdmConfig: subcarrier index out of range");
      require(!used[k], "OfdmConfig: data/guard/null sets overlap");
      used[k] = 1;
    };
    for (auto k : data_subcarriers) claim(k);
    for (auto k : guard_band) claim(k);
    if (center_null) claim(*center_null);
  }

  // Per-bin role: unused bins (outside data/guard sets) are Null.
  std::vector<ReRole> subcarrier_roles() const {
    std::vector<ReRole> roles(n_sc, ReRole::Null);
    for (auto k : data_subcarriers) roles[k] = ReRole::Data;
    for (auto k : guard_band) roles[k] = ReRole::Guard;
    return roles;
  }

  std::size_t samples_per_unit() const {
    std::size_t total = 0;
    for (auto cp : cp_lengths) total += cp + n_sc;
    return total;
  }

  // Layout described in centred frequency order: [guard | data (DC null
  // optionally splitting it) | guard], placed symmetrically around DC.
  static OfdmConfig centered(std::size_t n_sc, std::size_t n_data, std::size_t guard_each_side,
                             bool dc_null, std::vector<std::size_t> cp_lengths) {
    OfdmConfig cfg;
    cfg.n_sc = n_sc;
    cfg.cp_lengths = std::move(cp_lengths);
    cfg.symbols_per_unit = cfg.cp_lengths.size();
    const std::size_t occupied = n_data + (dc_null ? 1 : 0);
    require(occupied + 2 * guard_each_side <= n_sc, "OfdmConfig: layout exceeds FFT size");
    const std::size_t half = n_sc / 2;
    const std::size_t start = half - (dc_null ? n_data / 2 : occupied / 2) - guard_each_side;
    auto bin = [&](std::size_t centred) { return (centred + n_sc - half) % n_sc; };
    std::size_t pos = start;
    for (std::size_t i = 0; i < guard_each_side; ++i) cfg.guard_band.push_back(bin(pos++));
    for (std::size_t i = 0; i < n_data; ++i) {
      if (dc_null && pos == half) cfg.center_null = bin(pos++);
      cfg.data_subcarriers.push_back(bin(pos++));
    }
    for (std::size_t i = 0; i < guard_each_side; ++i) cfg.guard_band.push_back(bin(pos++));
    cfg.validate();
    return cfg;
  }
};

class ResourceGrid {
 public:
  ResourceGrid() = default;
  ResourceGrid(std::size_t n_sc, std::size_t n_sym, ReRole fill = ReRole::Null)
      : n_sc_(n_sc), n_sym_(n_sym), cells_(n_sc * n_sym), roles_(n_sc * n_sym, fill) {}

  // Empty grid with roles taken from the OFDM layout.
  static ResourceGrid from_config(const OfdmConfig& cfg, std::size_t n_sym) {
    ResourceGrid g(cfg.n_sc, n_sym);
    const auto col = cfg.subcarrier_roles();
    for (std::size_t m = 0; m < n_sym; ++m)
      std::copy(col.begin(), col.end(), g.roles_.begin() + static_cast<std::ptrdiff_t>(m * cfg.n_sc));
    return g;
  }

  std::size_t n_sc() const { return n_sc_; }
  std::size_t n_symbols() const { return n_sym_; }
  std::size_t size() const { return cells_.size(); }
  std::size_t index(std::size_t sc, std::size_t sym) const { return sym * n_sc_ + sc; }

  cplx& at(std::size_t sc, std::size_t sym) { return cells_[index(sc, sym)]; }
  const cplx& at(std::size_t sc, std::size_t sym) const { return cells_[index(sc, sym)]; }
  ReRole& role(std::size_t sc, std::size_t sym) { return roles_[index(sc, sym)]; }
  ReRole role(std::size_t sc, std::size_t sym) const { return roles_[index(sc, sym)]; }

  std::span<cplx> cells() { return cells_; }
  std::span<const cplx> cells() const { return cells_; }
  std::span<ReRole> roles() { return roles_; }
  std::span<const ReRole> roles() const { return roles_; }
  std::span<cplx> column(std::size_t sym) { return {cells_.data() + sym * n_sc_, n_sc_}; }
  std::span<const cplx> column(std::size_t sym) const {
    return {cells_.data() + sym * n_sc_, n_sc_};
  }

  std::size_t count(ReRole r) const {
    return static_cast<std::size_t>(std::count(roles_.begin(), roles_.end(), r));
  }

  // Flat indices of REs with the given role, symbol-major and frequency-first
  // in the order of `subcarrier_order` (ascending bins if empty).
  std::vector<std::size_t> indices_of(ReRole r, std::span<const std::size_t> subcarrier_order = {}) const {
    std::vector<std::size_t> out;
    for (std::size_t m = 0; m < n_sym_; ++m) {
      if (subcarrier_order.empty()) {
        for (std::size_t k = 0; k < n_sc_; ++k)
          if (role(k, m) == r) out.push_back(index(k, m));
      } else {
        for (auto k : subcarrier_order)
          if (role(k, m) == r) out.push_back(index(k, m));
      }
    }
    return out;
  }

 private:
  std::size_t n_sc_ = 0;
  std::size_t n_sym_ = 0;
  std::vector<cplx> cells_;
  std::vector<ReRole> roles_;
};

namespace detail {

// FFTW plans are created once per (size, direction) under a lock; executing a
// plan on new arrays is thread-safe.
class FftPlans {
 public:
  static FftPlans& instance() {
    static FftPlans plans;
    return plans;
  }

  fftw_plan get(std::size_t n, int sign) {
    std::lock_guard lock(mu_);
    auto key = std::make_pair(n, sign);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;
    std::vector<cplx> a(n), b(n);
    fftw_plan p = fftw_plan_dft_1d(static_cast<int>(n), reinterpret_cast<fftw_complex*>(a.data()),
                                   reinterpret_cast<fftw_complex*>(b.data()), sign,
                                   FFTW_ESTIMATE | FFTW_UNALIGNED);
    plans_.emplace(key, p);
    return p;
  }

  FftPlans(const FftPlans&) = delete;
  FftPlans& operator=(const FftPlans&) = delete;
  ~FftPlans() {
    for (auto& [_, p] : plans_) fftw_destroy_plan(p);
  }

 private:
  FftPlans() = default;
  std::mutex mu_;
  std::map<std::pair<std::size_t, int>, fftw_plan> plans_;
};

// Unitary DFT: sign +1 is the synthesis direction (IFFT).
inline void unitary_dft(std::span<const cplx> in, std::span<cplx> out, int sign) {
  const std::size_t n = in.size();
  fftw_plan p = FftPlans::instance().get(n, sign);
  fftw_execute_dft(p, reinterpret_cast<fftw_complex*>(const_cast<cplx*>(in.data())),
                   reinterpret_cast<fftw_complex*>(out.data()));
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  for (auto& v : out) v *= scale;
}

}  // namespace detail

enum class CyclicPrefix { Copy, Zero };

inline std::vector<cplx> ofdm_modulate(const ResourceGrid& grid, const OfdmConfig& cfg,
                                       CyclicPrefix cp_mode = CyclicPrefix::Copy) {
  if (grid.n_sc() != cfg.n_sc)
    throw InvalidInput("ofdm_modulate: grid has " + std::to_string(grid.n_sc()) +
                       " subcarriers, config expects " + std::to_string(cfg.n_sc));
  if (grid.n_symbols() == 0 || grid.n_symbols() % cfg.symbols_per_unit != 0)
    throw InvalidInput("ofdm_modulate: symbol count is not a multiple of symbols_per_unit");
  const std::size_t n = cfg.n_sc;
  std::vector<cplx> out;
  out.reserve(grid.n_symbols() / cfg.symbols_per_unit * cfg.samples_per_unit());
  std::vector<cplx> td(n);
  for (std::size_t m = 0; m < grid.n_symbols(); ++m) {
    detail::unitary_dft(grid.column(m), td, +1);
    const std::size_t cp = cfg.cp_lengths[m % cfg.symbols_per_unit];
    if (cp > n) throw InvalidInput("ofdm_modulate: cyclic prefix longer than symbol");
    if (cp_mode == CyclicPrefix::Copy)
      out.insert(out.end(), td.end() - static_cast<std::ptrdiff_t>(cp), td.end());
    else
      out.insert(out.end(), cp, cplx{});
    out.insert(out.end(), td.begin(), td.end());
  }
  return out;
}

inline ResourceGrid ofdm_demodulate(std::span<const cplx> samples, const OfdmConfig& cfg) {
  const std::size_t per_unit = cfg.samples_per_unit();
  if (samples.empty() || samples.size() % per_unit != 0)
    throw InvalidInput("ofdm_demodulate: " + std::to_string(samples.size()) +
                       " samples is not a whole number of units of " + std::to_string(per_unit));
  const std::size_t n_sym = samples.size() / per_unit * cfg.symbols_per_unit;
  ResourceGrid grid = ResourceGrid::from_config(cfg, n_sym);
  std::size_t pos = 0;
  for (std::size_t m = 0; m < n_sym; ++m) {
    pos += cfg.cp_lengths[m % cfg.symbols_per_unit];
    detail::unitary_dft(samples.subspan(pos, cfg.n_sc), grid.column(m), -1);
    pos += cfg.n_sc;
  }
  return grid;
}

}  // namespace jamsim
