#pragma once

// Pulsed frequency-domain jammer: on/off masks per jamming method and the
// power-normalized jamming grid for one action.

#include <array>
#include <bit>
#include <cmath>
#include <string>
#include <string_view>
#include <vector>

#include "jamsim/channel.hpp"
#include "jamsim/error.hpp"
#include "jamsim/grid.hpp"
#include "jamsim/random.hpp"

namespace jamsim {

enum class JammingMethod { SymbolJam, SubcarrierJam, RandomReJam, PdschDataJam, DmrsJam, SlotRandomJam };

inline constexpr std::array kAllMethods = {JammingMethod::SymbolJam,    JammingMethod::SubcarrierJam,
                                           JammingMethod::RandomReJam,  JammingMethod::PdschDataJam,
                                           JammingMethod::DmrsJam,      JammingMethod::SlotRandomJam};

inline std::string_view to_string(JammingMethod m) {
  switch (m) {
    case JammingMethod::SymbolJam: return "symbol";
    case JammingMethod::SubcarrierJam: return "subcarrier";
    case JammingMethod::RandomReJam: return "random";
    case JammingMethod::PdschDataJam: return "pdsch_data";
    case JammingMethod::DmrsJam: return "dmrs";
    case JammingMethod::SlotRandomJam: return "slot_random";
  }
  return "?";
}

inline JammingMethod method_from_string(std::string_view name) {
  for (auto m : kAllMethods)
    if (to_string(m) == name) return m;
  throw InvalidInput("unknown jamming method '" + std::string(name) + "'");
}

struct JammerAction {
  ModulationScheme scheme = ModulationScheme::Awgn;
  double rho = 1.0;
  JammingMethod method = JammingMethod::RandomReJam;

  void validate() const {
    if (!(rho > 0.0 && rho <= 1.0))
      throw InvalidInput("JammerAction: rho must lie in (0, 1], got " + std::to_string(rho));
  }
  friend bool operator==(const JammerAction&, const JammerAction&) = default;
};

// Guard and Null REs are never eligible.
inline bool is_eligible(JammingMethod method, ReRole role) {
  switch (method) {
    case JammingMethod::PdschDataJam: return role == ReRole::Data;
    case JammingMethod::DmrsJam: return role == ReRole::Dmrs;
    default: return role == ReRole::Data || role == ReRole::Dmrs;
  }
}

inline double instantaneous_power(double jnr_db, double rho, double target_fraction) {
  if (!(rho > 0.0 && rho <= 1.0)) throw InvalidInput("instantaneous_power: rho must lie in (0, 1]");
  if (!(target_fraction > 0.0 && target_fraction <= 1.0))
    throw InvalidInput("instantaneous_power: target fraction must lie in (0, 1]");
  return db_to_linear(jnr_db) / (rho * target_fraction);
}

// Eligible REs over all data-carrying (Data + Dmrs) REs of the grid.
inline double target_fraction(JammingMethod method, std::span<const ReRole> roles) {
  std::size_t eligible = 0, carrying = 0;
  for (auto r : roles) {
    if (r == ReRole::Data || r == ReRole::Dmrs) ++carrying;
    if (is_eligible(method, r)) ++eligible;
  }
  if (eligible == 0 || carrying == 0)
    throw InvalidInput("target_fraction: grid has no REs eligible for method " +
                       std::string(to_string(method)));
  return static_cast<double>(eligible) / static_cast<double>(carrying);
}

// On/off mask, same layout as the grid (symbol-major).
inline std::vector<std::uint8_t> make_mask(JammingMethod method, double rho, const ResourceGrid& roles,
                                           Rng& rng) {
  if (!(rho > 0.0 && rho <= 1.0)) throw InvalidInput("make_mask: rho must lie in (0, 1]");
  const std::size_t n_sc = roles.n_sc(), n_sym = roles.n_symbols();
  std::vector<std::uint8_t> mask(roles.size(), 0);
  BitPool pool(rng);
  const auto thr = BitPool::threshold(rho);
  switch (method) {
    case JammingMethod::SymbolJam:
      for (std::size_t m = 0; m < n_sym; ++m) {
        if (!pool.coin(thr)) continue;
        for (std::size_t k = 0; k < n_sc; ++k)
          mask[roles.index(k, m)] = is_eligible(method, roles.role(k, m));
      }
      break;
    case JammingMethod::SubcarrierJam:
      for (std::size_t k = 0; k < n_sc; ++k) {
        bool carrying = false;
        for (std::size_t m = 0; m < n_sym && !carrying; ++m) carrying = is_eligible(method, roles.role(k, m));
        if (!carrying || !pool.coin(thr)) continue;
        for (std::size_t m = 0; m < n_sym; ++m)
          mask[roles.index(k, m)] = is_eligible(method, roles.role(k, m));
      }
      break;
    case JammingMethod::RandomReJam:
    case JammingMethod::PdschDataJam:
    case JammingMethod::DmrsJam:
    case JammingMethod::SlotRandomJam: {
      const auto r = roles.roles();
      for (std::size_t i = 0; i < r.size(); ++i)
        if (is_eligible(method, r[i])) mask[i] = pool.coin(thr);
      break;
    }
  }
  return mask;
}

// Jamming grid J(k) for one transmission unit. On-REs carry i.i.d. symbols of
// the action's scheme at power P_inst = JNR / (rho * target_fraction), so the
// expected power per data-carrying RE equals the JNR for every action.
//
// The generator precomputes the eligible REs and their on/off groups (one per
// symbol, per carrying subcarrier, or per RE) for a fixed layout; it draws
// exactly the same random sequence as make_mask followed by the symbol fill.
class JammingGenerator {
 public:
  JammingGenerator(JammingMethod method, const ResourceGrid& roles)
      : method_(method), n_sc_(roles.n_sc()), n_sym_(roles.n_symbols()), roles_(roles.roles().begin(), roles.roles().end()) {
    fraction_ = jamsim::target_fraction(method, roles.roles());
    std::vector<std::uint32_t> sc_group(n_sc_, kNone);
    if (method == JammingMethod::SubcarrierJam) {
      for (std::size_t k = 0; k < n_sc_; ++k)
        for (std::size_t m = 0; m < n_sym_; ++m)
          if (is_eligible(method, roles.role(k, m))) {
            sc_group[k] = static_cast<std::uint32_t>(n_groups_++);
            break;
          }
    } else if (method == JammingMethod::SymbolJam) {
      n_groups_ = n_sym_;
    }
    for (std::size_t i = 0; i < roles_.size(); ++i) {
      if (!is_eligible(method, roles_[i])) continue;
      eligible_.push_back(static_cast<std::uint32_t>(i));
      switch (method) {
        case JammingMethod::SymbolJam: group_.push_back(static_cast<std::uint32_t>(i / n_sc_)); break;
        case JammingMethod::SubcarrierJam: group_.push_back(sc_group[i % n_sc_]); break;
        default: group_.push_back(static_cast<std::uint32_t>(n_groups_++));
      }
    }
  }

  JammingMethod method() const { return method_; }
  double target_fraction() const { return fraction_; }

  // Writes the grid into `out`, reusing its storage when the shape matches.
  void generate(const JammerAction& action, double jnr_db, Rng& rng, ResourceGrid& out) const {
    action.validate();
    if (action.method != method_) throw InvalidInput("JammingGenerator: action method does not match");
    const double p_inst = instantaneous_power(jnr_db, action.rho, fraction_);
    if (out.n_sc() != n_sc_ || out.n_symbols() != n_sym_) {
      out = ResourceGrid(n_sc_, n_sym_);
      std::copy(roles_.begin(), roles_.end(), out.roles().begin());
    } else {
      std::fill(out.cells().begin(), out.cells().end(), cplx{});
    }
    std::vector<std::uint8_t> on(n_groups_);
    {
      BitPool pool(rng);
      const auto thr = BitPool::threshold(action.rho);
      for (auto& b : on) b = pool.coin(thr);
    }
    // compact the on-REs first; branching per RE mispredicts badly at rho ~ 0.5
    std::vector<std::uint32_t> hit(eligible_.size());
    std::size_t n = 0;
    for (std::size_t p = 0; p < eligible_.size(); ++p) {
      hit[n] = eligible_[p];
      n += on[group_[p]];
    }
    auto cells = out.cells();
    if (action.scheme == ModulationScheme::Awgn) {
      boost::random::normal_distribution<double> nd(0.0, std::sqrt(0.5 * p_inst));
      for (std::size_t q = 0; q < n; ++q) {
        const double re = nd(rng);
        cells[hit[q]] = {re, nd(rng)};
      }
    } else {
      const auto points = constellation(action.scheme);
      const double amp = std::sqrt(p_inst);
      // constellation sizes are powers of two
      const auto bits = static_cast<unsigned>(std::countr_zero(points.size()));
      BitPool pool(rng);
      for (std::size_t q = 0; q < n; ++q) cells[hit[q]] = amp * points[pool.take(bits)];
    }
  }

  ResourceGrid generate(const JammerAction& action, double jnr_db, Rng& rng) const {
    ResourceGrid out;
    generate(action, jnr_db, rng, out);
    return out;
  }

 private:
  static constexpr std::uint32_t kNone = ~std::uint32_t{0};
  JammingMethod method_;
  std::size_t n_sc_, n_sym_;
  std::vector<ReRole> roles_;
  double fraction_ = 1.0;
  std::size_t n_groups_ = 0;
  std::vector<std::uint32_t> eligible_, group_;
};

inline ResourceGrid generate_jamming_grid(const JammerAction& action, double jnr_db, const ResourceGrid& roles,
                                          Rng& rng) {
  action.validate();
  return JammingGenerator(action.method, roles).generate(action, jnr_db, rng);
}

}  // namespace jamsim
