#pragma once

// LDPC coding: code construction, systematic encoding, normalized min-sum
// decoding, alist I/O, soft demapping and codeword <-> grid placement.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <limits>
#include <numbers>
#include <numeric>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "jamsim/error.hpp"
#include "jamsim/grid.hpp"
#include "jamsim/random.hpp"

namespace jamsim {

using LlrBlock = std::vector<double>;

class LdpcCode {
 public:
  LdpcCode() = default;

  // `check_rows[i]` lists the variable (column) indices of parity check i.
  LdpcCode(std::size_t n, std::vector<std::vector<std::size_t>> check_rows)
      : n_(n), rows_(std::move(check_rows)) {
    require(n_ > 0, "LdpcCode: n must be positive");
    require(!rows_.empty(), "LdpcCode: parity-check matrix has no rows");
    cols_.assign(n_, {});
    for (std::size_t i = 0; i < rows_.size(); ++i) {
      auto& row = rows_[i];
      std::sort(row.begin(), row.end());
      require(std::adjacent_find(row.begin(), row.end()) == row.end(),
              "LdpcCode: duplicate entry in check row");
      for (auto v : row) {
        require(v < n_, "LdpcCode: column index out of range");
        cols_[v].push_back(i);
      }
    }
    build_encoder();
  }

  std::size_t n() const { return n_; }
  std::size_t k() const { return info_positions_.size(); }
  std::size_t m() const { return rows_.size(); }
  double rate() const { return static_cast<double>(k()) / static_cast<double>(n_); }
  std::size_t edges() const {
    std::size_t e = 0;
    for (const auto& r : rows_) e += r.size();
    return e;
  }

  const std::vector<std::vector<std::size_t>>& check_rows() const { return rows_; }
  const std::vector<std::vector<std::size_t>>& var_cols() const { return cols_; }
  const std::vector<std::size_t>& info_positions() const { return info_positions_; }

  Bits encode(std::span<const std::uint8_t> info) const {
    if (info.size() != k())
      throw InvalidInput("ldpc_encode: expected " + std::to_string(k()) + " info bits, got " +
                         std::to_string(info.size()));
    Bits cw(n_, 0);
    std::vector<std::uint64_t> packed((k() + 63) / 64, 0);
    for (std::size_t t = 0; t < info.size(); ++t) {
      const std::uint8_t b = info[t] & 1U;
      cw[info_positions_[t]] = b;
      if (b) packed[t / 64] |= std::uint64_t{1} << (t % 64);
    }
    for (std::size_t p = 0; p < parity_positions_.size(); ++p) {
      const auto& row = parity_rows_[p];
      std::uint64_t acc = 0;
      for (std::size_t w = 0; w < packed.size(); ++w) acc ^= row[w] & packed[w];
      cw[parity_positions_[p]] = static_cast<std::uint8_t>(std::popcount(acc) & 1);
    }
    return cw;
  }

  bool syndrome_ok(std::span<const std::uint8_t> cw) const {
    if (cw.size() != n_) return false;
    for (const auto& row : rows_) {
      unsigned s = 0;
      for (auto v : row) s ^= cw[v] & 1U;
      if (s) return false;
    }
    return true;
  }

 private:
  // Gaussian elimination over GF(2), pivoting from the last column backwards
  // so parity bits land at the end whenever H allows it. Pivot columns become
  // parity positions, the rest carry information (k = n - rank).
  void build_encoder() {
    const std::size_t words = (n_ + 63) / 64;
    std::vector<std::vector<std::uint64_t>> h(rows_.size(), std::vector<std::uint64_t>(words, 0));
    for (std::size_t i = 0; i < rows_.size(); ++i)
      for (auto v : rows_[i]) h[i][v / 64] |= std::uint64_t{1} << (v % 64);
    auto bit = [](const std::vector<std::uint64_t>& r, std::size_t c) {
      return (r[c / 64] >> (c % 64)) & 1U;
    };

    std::vector<std::size_t> pivot_col;
    std::size_t rank = 0;
    for (std::size_t c = n_; c-- > 0 && rank < h.size();) {
      std::size_t r = rank;
      while (r < h.size() && !bit(h[r], c)) ++r;
      if (r == h.size()) continue;
      std::swap(h[r], h[rank]);
      for (std::size_t i = 0; i < h.size(); ++i)
        if (i != rank && bit(h[i], c))
          for (std::size_t w = 0; w < words; ++w) h[i][w] ^= h[rank][w];
      pivot_col.push_back(c);
      ++rank;
    }

    std::vector<std::uint8_t> is_pivot(n_, 0);
    for (auto c : pivot_col) is_pivot[c] = 1;
    info_positions_.clear();
    for (std::size_t c = 0; c < n_; ++c)
      if (!is_pivot[c]) info_positions_.push_back(c);
    require(!info_positions_.empty(), "LdpcCode: parity-check matrix has full column rank");

    // Row r of the reduced matrix reads: c[pivot_col[r]] = sum over info
    // columns j with H[r][j] = 1 of c[j].
    const std::size_t info_words = (info_positions_.size() + 63) / 64;
    parity_positions_ = pivot_col;
    parity_rows_.assign(rank, std::vector<std::uint64_t>(info_words, 0));
    for (std::size_t r = 0; r < rank; ++r)
      for (std::size_t t = 0; t < info_positions_.size(); ++t)
        if (bit(h[r], info_positions_[t])) parity_rows_[r][t / 64] |= std::uint64_t{1} << (t % 64);
  }

  std::size_t n_ = 0;
  std::vector<std::vector<std::size_t>> rows_;
  std::vector<std::vector<std::size_t>> cols_;
  std::vector<std::size_t> info_positions_;
  std::vector<std::size_t> parity_positions_;
  std::vector<std::vector<std::uint64_t>> parity_rows_;
};

inline Bits ldpc_encode(std::span<const std::uint8_t> info, const LdpcCode& code) {
  return code.encode(info);
}

namespace detail {

// Progressive edge growth: each new edge of variable v goes to a check node
// at maximum graph distance from v, lowest current degree first, ties broken
// by the seeded RNG.
inline std::vector<std::vector<std::size_t>> peg_rows(std::size_t n, std::size_t m,
                                                      std::size_t col_weight, Rng& rng) {
  std::vector<std::vector<std::size_t>> var_adj(n), chk_adj(m);
  std::vector<std::size_t> depth_chk(m), depth_var(n);
  constexpr std::size_t kUnseen = std::numeric_limits<std::size_t>::max();

  auto pick_lowest_degree = [&](const std::vector<std::size_t>& candidates) {
    std::size_t best = kUnseen;
    std::vector<std::size_t> ties;
    for (auto c : candidates) {
      const std::size_t d = chk_adj[c].size();
      if (d < best) {
        best = d;
        ties.assign(1, c);
      } else if (d == best) {
        ties.push_back(c);
      }
    }
    return ties[std::uniform_int_distribution<std::size_t>(0, ties.size() - 1)(rng)];
  };

  std::vector<std::size_t> all(m);
  std::iota(all.begin(), all.end(), 0);
  for (std::size_t v = 0; v < n; ++v) {
    for (std::size_t e = 0; e < col_weight; ++e) {
      std::size_t chosen;
      if (e == 0) {
        chosen = pick_lowest_degree(all);
      } else {
        std::fill(depth_chk.begin(), depth_chk.end(), kUnseen);
        std::fill(depth_var.begin(), depth_var.end(), kUnseen);
        depth_var[v] = 0;
        std::vector<std::size_t> frontier{v};
        std::vector<std::size_t> last_layer;
        std::size_t reached = 0;
        for (std::size_t d = 0; !frontier.empty(); ++d) {
          std::vector<std::size_t> new_chk;
          for (auto u : frontier)
            for (auto c : var_adj[u])
              if (depth_chk[c] == kUnseen) {
                depth_chk[c] = d;
                new_chk.push_back(c);
              }
          if (new_chk.empty()) break;
          reached += new_chk.size();
          last_layer = new_chk;
          if (reached == m) break;
          std::vector<std::size_t> next;
          for (auto c : new_chk)
            for (auto u : chk_adj[c])
              if (depth_var[u] == kUnseen) {
                depth_var[u] = d + 1;
                next.push_back(u);
              }
          frontier = std::move(next);
        }
        std::vector<std::size_t> candidates;
        if (reached < m) {
          for (std::size_t c = 0; c < m; ++c)
            if (depth_chk[c] == kUnseen) candidates.push_back(c);
        } else {
          candidates = last_layer;
        }
        // A fully connected neighbourhood can leave only checks already
        // attached to v; fall back to any free check.
        std::erase_if(candidates, [&](std::size_t c) {
          return std::find(var_adj[v].begin(), var_adj[v].end(), c) != var_adj[v].end();
        });
        if (candidates.empty())
          for (std::size_t c = 0; c < m; ++c)
            if (std::find(var_adj[v].begin(), var_adj[v].end(), c) == var_adj[v].end())
              candidates.push_back(c);
        chosen = pick_lowest_degree(candidates);
      }
      var_adj[v].push_back(chosen);
      chk_adj[chosen].push_back(v);
    }
  }
  return chk_adj;
}

}  // namespace detail

// Regular-column-weight code with exactly k information bits. Parity checks are
// grown by PEG; when the resulting H is rank deficient the construction is
// retried with the next seed. Columns are permuted so that positions [0, k)
// carry the information bits.
inline LdpcCode make_peg_code(std::size_t n, std::size_t k, std::size_t col_weight,
                              std::uint64_t seed) {
  require(k > 0 && k < n, "make_peg_code: need 0 < k < n");
  require(col_weight >= 2 && col_weight <= n - k, "make_peg_code: bad column weight");
  const std::size_t m = n - k;
  for (std::uint64_t attempt = 0; attempt < 64; ++attempt) {
    Rng rng(mix_seed(seed + attempt));
    auto rows = detail::peg_rows(n, m, col_weight, rng);
    LdpcCode trial(n, rows);
    if (trial.k() != k) continue;
    std::vector<std::size_t> new_pos(n);
    const auto& info = trial.info_positions();
    std::vector<std::uint8_t> is_info(n, 0);
    for (std::size_t t = 0; t < info.size(); ++t) {
      new_pos[info[t]] = t;
      is_info[info[t]] = 1;
    }
    std::size_t next = k;
    for (std::size_t c = 0; c < n; ++c)
      if (!is_info[c]) new_pos[c] = next++;
    for (auto& row : rows)
      for (auto& v : row) v = new_pos[v];
    LdpcCode code(n, std::move(rows));
    if (code.k() == k) return code;
  }
  throw InvariantViolation("make_peg_code: could not build a full-rank parity-check matrix");
}

// -- alist ------------------------------------------------------------------

inline void write_alist(std::ostream& os, const LdpcCode& code) {
  const auto& rows = code.check_rows();
  const auto& cols = code.var_cols();
  std::size_t max_col = 0, max_row = 0;
  for (const auto& c : cols) max_col = std::max(max_col, c.size());
  for (const auto& r : rows) max_row = std::max(max_row, r.size());
  os << code.n() << ' ' << code.m() << '\n' << max_col << ' ' << max_row << '\n';
  for (std::size_t v = 0; v < cols.size(); ++v) os << cols[v].size() << (v + 1 < cols.size() ? ' ' : '\n');
  for (std::size_t i = 0; i < rows.size(); ++i) os << rows[i].size() << (i + 1 < rows.size() ? ' ' : '\n');
  auto emit = [&os](const std::vector<std::size_t>& list, std::size_t width) {
    for (std::size_t j = 0; j < width; ++j) {
      os << (j < list.size() ? list[j] + 1 : 0);
      os << (j + 1 < width ? ' ' : '\n');
    }
  };
  for (const auto& c : cols) emit(c, max_col);
  for (const auto& r : rows) emit(r, max_row);
}

inline LdpcCode read_alist(std::istream& is) {
  auto next = [&is](const char* what) {
    long long v;
    if (!(is >> v) || v < 0) throw InvalidInput(std::string("alist: malformed ") + what);
    return static_cast<std::size_t>(v);
  };
  const std::size_t n = next("n"), m = next("m");
  const std::size_t max_col = next("max column weight"), max_row = next("max row weight");
  require(n > 0 && m > 0, "alist: empty matrix");
  std::vector<std::size_t> col_w(n), row_w(m);
  for (auto& w : col_w) w = next("column weight");
  for (auto& w : row_w) w = next("row weight");
  std::vector<std::vector<std::size_t>> col_lists(n);
  for (std::size_t v = 0; v < n; ++v) {
    // Some writers omit the zero padding; read exactly max_col entries only
    // when they are present on the line.
    std::string line;
    std::getline(is >> std::ws, line);
    std::istringstream ls(line);
    long long x;
    while (ls >> x)
      if (x > 0) col_lists[v].push_back(static_cast<std::size_t>(x - 1));
    require(col_lists[v].size() == col_w[v], "alist: column list disagrees with its weight");
    require(col_lists[v].size() <= max_col, "alist: column exceeds max weight");
  }
  std::vector<std::vector<std::size_t>> rows(m);
  for (std::size_t i = 0; i < m; ++i) {
    std::string line;
    std::getline(is >> std::ws, line);
    std::istringstream ls(line);
    long long x;
    while (ls >> x)
      if (x > 0) rows[i].push_back(static_cast<std::size_t>(x - 1));
    require(rows[i].size() == row_w[i], "alist: row list disagrees with its weight");
    require(rows[i].size() <= max_row, "alist: row exceeds max weight");
  }
  for (std::size_t v = 0; v < n; ++v)
    for (auto i : col_lists[v]) {
      require(i < m, "alist: row index out of range");
      require(std::find(rows[i].begin(), rows[i].end(), v) != rows[i].end(),
              "alist: column and row lists are inconsistent");
    }
  return LdpcCode(n, std::move(rows));
}

inline void save_alist(const std::string& path, const LdpcCode& code) {
  std::ofstream os(path);
  if (!os) throw InvalidInput("cannot open '" + path + "' for writing");
  write_alist(os, code);
}

inline LdpcCode load_alist(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw InvalidInput("cannot open alist file '" + path + "'");
  return read_alist(is);
}

// -- decoding ---------------------------------------------------------------

struct DecodeResult {
  Bits bits;
  bool success = false;
  std::size_t iterations = 0;
  std::vector<double> posterior;  // a-posteriori LLRs after the last iteration
};

// Flooding normalized min-sum. Holds per-decoder scratch buffers, so give each
// thread its own instance; the code itself is shared read-only.
class MinSumDecoder {
 public:
  explicit MinSumDecoder(const LdpcCode& code, double normalization = 0.75)
      : code_(&code), alpha_(static_cast<float>(normalization)) {
    const auto& rows = code.check_rows();
    row_start_.reserve(rows.size() + 1);
    row_start_.push_back(0);
    for (const auto& r : rows) {
      for (auto v : r) edge_var_.push_back(static_cast<std::uint32_t>(v));
      row_start_.push_back(static_cast<std::uint32_t>(edge_var_.size()));
    }
    c2v_.resize(edge_var_.size());
    v2c_.resize(edge_var_.size());
    total_.resize(code.n());
  }

  DecodeResult decode(std::span<const double> llrs, std::size_t max_iters) {
    const std::size_t n = code_->n();
    if (llrs.size() != n)
      throw InvalidInput("ldpc_decode: expected " + std::to_string(n) + " LLRs, got " +
                         std::to_string(llrs.size()));
    require(max_iters > 0, "ldpc_decode: max_iters must be positive");
    std::fill(c2v_.begin(), c2v_.end(), 0.0f);
    DecodeResult res;
    res.bits.assign(n, 0);
    for (std::size_t v = 0; v < n; ++v) total_[v] = static_cast<float>(llrs[v]);
    for (std::size_t it = 1; it <= max_iters; ++it) {
      const std::size_t m = row_start_.size() - 1;
      for (std::size_t c = 0; c < m; ++c) {
        const std::uint32_t lo = row_start_[c], hi = row_start_[c + 1];
        float min1 = std::numeric_limits<float>::infinity(), min2 = min1;
        std::uint32_t arg = lo;
        std::uint32_t sign = 0;
        for (std::uint32_t e = lo; e < hi; ++e) {
          const float x = total_[edge_var_[e]] - c2v_[e];
          v2c_[e] = x;
          sign ^= x < 0.0f ? 1U : 0U;
          const float a = std::fabs(x);
          // branch-free two-smallest tracking
          arg = a < min1 ? e : arg;
          min2 = std::min(min2, std::max(min1, a));
          min1 = std::min(min1, a);
        }
        const float m1 = alpha_ * min1, m2 = alpha_ * min2;
        for (std::uint32_t e = lo; e < hi; ++e) {
          const float mag = e == arg ? m2 : m1;
          c2v_[e] = (sign ^ (v2c_[e] < 0.0f ? 1U : 0U)) ? -mag : mag;
        }
      }

      for (std::size_t v = 0; v < n; ++v) total_[v] = static_cast<float>(llrs[v]);
      for (std::size_t e = 0; e < edge_var_.size(); ++e) total_[edge_var_[e]] += c2v_[e];
      bool resolved = true;
      for (std::size_t v = 0; v < n; ++v) {
        res.bits[v] = total_[v] < 0.0f ? 1 : 0;
        resolved &= total_[v] != 0.0f;
      }
      res.iterations = it;
      if (resolved && code_->syndrome_ok(res.bits)) {
        res.success = true;
        break;
      }
    }
    res.posterior.assign(total_.begin(), total_.end());
    return res;
  }

 private:
  const LdpcCode* code_;
  float alpha_;
  std::vector<std::uint32_t> row_start_;
  std::vector<std::uint32_t> edge_var_;
  std::vector<float> c2v_, v2c_, total_;
};

inline DecodeResult ldpc_decode(std::span<const double> llrs, const LdpcCode& code,
                                std::size_t max_iters = 25) {
  MinSumDecoder dec(code);
  return dec.decode(llrs, max_iters);
}

// -- soft demapping ---------------------------------------------------------

namespace detail {

inline double demap_pam4_maxlog(double y, double amp, double nv, int which) {
  // Per-axis levels of the 16QAM map: label (b_sign, b_mag) -> (1-2b_sign)(1+2b_mag)/sqrt(10).
  const double a = amp / std::sqrt(10.0);
  static constexpr int kLevel[4] = {1, 3, -1, -3};  // label 00, 01, 10, 11
  double best0 = std::numeric_limits<double>::infinity(), best1 = best0;
  for (int label = 0; label < 4; ++label) {
    const int bit = which == 0 ? (label >> 1) & 1 : label & 1;
    const double d = y - a * kLevel[label];
    const double metric = d * d;
    if (bit == 0)
      best0 = std::min(best0, metric);
    else
      best1 = std::min(best1, metric);
  }
  return (best1 - best0) / (2.0 * nv);
}

}  // namespace detail

// Bit LLRs (positive favours 0) for equalized symbols y = amp*s + w, where
// noise_var[i] is the per-real-dimension variance of w at symbol i. Exact for
// BPSK/QPSK, max-log for 16QAM. π/4 variants are de-rotated first.
inline LlrBlock compute_llrs(std::span<const cplx> symbols, ModulationScheme scheme, double amp,
                             std::span<const double> noise_var) {
  require(noise_var.size() == symbols.size() || noise_var.size() == 1,
          "compute_llrs: noise_var must be scalar or per symbol");
  for (double v : noise_var)
    if (!(v > 0.0)) throw InvalidInput("compute_llrs: noise variance must be positive");
  const int bps = bits_per_symbol(scheme);
  if (bps == 0) throw InvalidInput("compute_llrs: AWGN carries no bits");
  LlrBlock out;
  out.reserve(symbols.size() * static_cast<std::size_t>(bps));
  const cplx derotate = is_pi4_rotated(scheme) ? std::conj(kPi4Rotation) : cplx(1, 0);
  for (std::size_t i = 0; i < symbols.size(); ++i) {
    const double nv = noise_var.size() == 1 ? noise_var[0] : noise_var[i];
    const cplx y = symbols[i] * derotate;
    switch (scheme) {
      case ModulationScheme::Bpsk:
      case ModulationScheme::BpskPi4:
        out.push_back(2.0 * amp * y.real() / nv);
        break;
      case ModulationScheme::Qpsk:
      case ModulationScheme::QpskPi4: {
        const double a = amp / std::numbers::sqrt2;
        out.push_back(2.0 * a * y.real() / nv);
        out.push_back(2.0 * a * y.imag() / nv);
        break;
      }
      case ModulationScheme::Qam16:
        out.push_back(detail::demap_pam4_maxlog(y.real(), amp, nv, 0));
        out.push_back(detail::demap_pam4_maxlog(y.real(), amp, nv, 1));
        out.push_back(detail::demap_pam4_maxlog(y.imag(), amp, nv, 0));
        out.push_back(detail::demap_pam4_maxlog(y.imag(), amp, nv, 1));
        break;
      case ModulationScheme::Awgn:
        break;
    }
  }
  return out;
}

inline LlrBlock compute_llrs(std::span<const cplx> symbols, ModulationScheme scheme, double amp,
                             double noise_var) {
  if (!(noise_var > 0.0)) throw InvalidInput("compute_llrs: noise variance must be positive");
  const double nv[1] = {noise_var};
  return compute_llrs(symbols, scheme, amp, std::span<const double>(nv, 1));
}

// -- codeword placement -----------------------------------------------------

// Fill the grid's Data REs frequency-first, symbol by symbol, with the mapped
// codewords. Subcarriers are visited in `cfg.data_subcarriers` order. Data REs
// beyond the codewords are left untouched.
inline void map_codewords_to_grid(std::span<const Bits> codewords, ModulationScheme scheme,
                                  ResourceGrid& grid, const OfdmConfig& cfg, double amplitude = 1.0) {
  const auto order = grid.indices_of(ReRole::Data, cfg.data_subcarriers);
  const auto bps = static_cast<std::size_t>(bits_per_symbol(scheme));
  std::size_t total_bits = 0;
  for (const auto& cw : codewords) total_bits += cw.size();
  if (bps == 0 || total_bits > order.size() * bps)
    throw InvalidInput("map_codewords_to_grid: " + std::to_string(total_bits) +
                       " bits exceed capacity of " + std::to_string(order.size() * bps));
  Bits stream;
  stream.reserve(total_bits + bps);
  for (const auto& cw : codewords) stream.insert(stream.end(), cw.begin(), cw.end());
  while (stream.size() % bps) stream.push_back(0);
  const auto symbols = map_bits(stream, scheme);
  auto cells = grid.cells();
  for (std::size_t i = 0; i < symbols.size(); ++i) cells[order[i]] = amplitude * symbols[i];
}

// Inverse of map_codewords_to_grid at the LLR level: `re_llrs` holds the
// per-bit LLRs of the Data REs in placement order.
inline std::vector<LlrBlock> extract_llrs_from_grid(std::span<const double> re_llrs, std::size_t n,
                                                    std::size_t count) {
  if (count * n > re_llrs.size())
    throw InvalidInput("extract_llrs_from_grid: not enough LLRs for the requested codewords");
  std::vector<LlrBlock> out;
  out.reserve(count);
  for (std::size_t c = 0; c < count; ++c)
    out.emplace_back(re_llrs.begin() + static_cast<std::ptrdiff_t>(c * n),
                     re_llrs.begin() + static_cast<std::ptrdiff_t>((c + 1) * n));
  return out;
}

// Equalized Data-RE symbols of a grid in placement order.
inline std::vector<cplx> data_symbols_in_order(const ResourceGrid& grid, const OfdmConfig& cfg) {
  const auto order = grid.indices_of(ReRole::Data, cfg.data_subcarriers);
  std::vector<cplx> out;
  out.reserve(order.size());
  for (auto i : order) out.push_back(grid.cells()[i]);
  return out;
}

}  // namespace jamsim
