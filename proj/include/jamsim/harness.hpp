#pragma once

// Experiment orchestration: scenario config, BLER sweeps over the coded OFDM
// link, LLR statistics, bandit learning runs on the PDSCH link, CSV output.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "jamsim/bandit.hpp"
#include "jamsim/channel.hpp"
#include "jamsim/error.hpp"
#include "jamsim/fec.hpp"
#include "jamsim/feedback.hpp"
#include "jamsim/grid.hpp"
#include "jamsim/jammer.hpp"
#include "jamsim/ofdm_link.hpp"
#include "jamsim/random.hpp"
#include "jamsim/victim5g.hpp"

namespace jamsim {

// -- small numerics -----------------------------------------------------------

inline std::vector<double> cumulative_average(std::span<const double> series) {
  if (series.empty()) throw InvalidInput("cumulative_average: empty series");
  std::vector<double> out(series.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < series.size(); ++i) {
    sum += series[i];
    out[i] = sum / static_cast<double>(i + 1);
  }
  return out;
}

// Linear interpolation between order statistics (the usual "type 7").
inline double quantile_sorted(std::span<const double> sorted, double p) {
  require(!sorted.empty(), "quantile: empty sample");
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

struct BoxSummary {
  std::size_t samples = 0;
  double min = 0, q1 = 0, median = 0, q3 = 0, max = 0;
  std::size_t outliers = 0;  // outside [q1 - 1.5 iqr, q3 + 1.5 iqr]

  double iqr() const { return q3 - q1; }
};

inline BoxSummary summarize(std::vector<double> values) {
  require(!values.empty(), "summarize: empty sample");
  std::sort(values.begin(), values.end());
  BoxSummary b;
  b.samples = values.size();
  b.min = values.front();
  b.max = values.back();
  b.q1 = quantile_sorted(values, 0.25);
  b.median = quantile_sorted(values, 0.5);
  b.q3 = quantile_sorted(values, 0.75);
  const double lo = b.q1 - 1.5 * b.iqr(), hi = b.q3 + 1.5 * b.iqr();
  for (double v : values) b.outliers += (v < lo || v > hi) ? 1 : 0;
  return b;
}

struct Interval {
  double lo = 0, hi = 0;
};

// Wilson score interval for a binomial proportion, z = 1.96 by default.
inline Interval wilson_interval(std::size_t successes, std::size_t trials, double z = 1.959963984540054) {
  require(trials > 0, "wilson_interval: no trials");
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double centre = (p + z2 / (2 * n)) / (1 + z2 / n);
  const double half = z * std::sqrt(p * (1 - p) / n + z2 / (4 * n * n)) / (1 + z2 / n);
  // the bounds are exactly 0 / 1 at the extremes; don't leave rounding residue
  return {successes == 0 ? 0.0 : std::max(0.0, centre - half), successes == trials ? 1.0 : std::min(1.0, centre + half)};
}

// Runs fn(i) for i in [0, n) on up to `threads` workers; results come back in
// index order whatever the completion order. The first exception is rethrown.
template <class Fn>
auto parallel_map(std::size_t n, Fn&& fn, std::size_t threads = 0) -> std::vector<decltype(fn(std::size_t{}))> {
  using R = decltype(fn(std::size_t{}));
  std::vector<std::optional<R>> slots(n);
  if (threads == 0) threads = std::max(1U, std::thread::hardware_concurrency());
  threads = std::min(threads, std::max<std::size_t>(n, 1));
  std::atomic<std::size_t> next{0};
  std::exception_ptr err;
  std::mutex err_mu;
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < n;) {
      try {
        slots[i].emplace(fn(i));
      } catch (...) {
        std::lock_guard lock(err_mu);
        if (!err) err = std::current_exception();
        next = n;
      }
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (err) std::rethrow_exception(err);
  std::vector<R> out;
  out.reserve(n);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

// -- scenario config ----------------------------------------------------------

enum class Experiment { BlerSweep, LlrStats, Bandit };

inline std::string_view to_string(Experiment e) {
  switch (e) {
    case Experiment::BlerSweep: return "bler_sweep";
    case Experiment::LlrStats: return "llr_stats";
    case Experiment::Bandit: return "bandit";
  }
  return "?";
}

struct SweepConfig {
  std::vector<double> snr_db = {10.0, 12.0, 14.0};
  std::vector<double> jnr_db = {10.0};
  std::vector<double> rho = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  std::vector<JammingMethod> methods = {JammingMethod::SymbolJam, JammingMethod::SubcarrierJam,
                                        JammingMethod::RandomReJam};
  std::vector<ModulationScheme> schemes = {ModulationScheme::Awgn};
  std::size_t blocks_per_point = 500;
  bool coherent = true;
  bool include_unjammed = true;
};

struct LlrConfig {
  std::vector<double> snr_db = {10.0};
  std::vector<double> jnr_db = {10.0};
  std::vector<double> rho = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  std::vector<JammingMethod> methods = {JammingMethod::SymbolJam, JammingMethod::SubcarrierJam,
                                        JammingMethod::RandomReJam};
  ModulationScheme scheme = ModulationScheme::Awgn;
  std::size_t samples_per_point = 100000;
  bool coherent = true;
  bool include_unjammed = true;
};

struct BanditConfig {
  double snr_db = 24.0;
  double jnr_db = 11.2;
  std::vector<double> lambdas = {0.05, 0.1, 0.15};
  bool baseline = true;  // also run lambda = 0
  MisobservationModel misobservation = MisobservationModel::Flip;
  double tau = 0.5;
  std::size_t m = 10;
  std::size_t steps = 1000;
  double bler_target = 0.0;
  double obs_noise_var = 1.0;
  std::vector<ModulationScheme> schemes = {ModulationScheme::Awgn, ModulationScheme::Bpsk, ModulationScheme::BpskPi4,
                                           ModulationScheme::Qpsk, ModulationScheme::QpskPi4};
  std::vector<JammingMethod> methods = {JammingMethod::PdschDataJam, JammingMethod::DmrsJam,
                                        JammingMethod::SlotRandomJam};
  bool coherent = false;
};

struct ScenarioConfig {
  std::optional<Experiment> experiment;
  std::uint64_t seed = 1;
  std::size_t replications = 20;
  std::size_t threads = 0;  // 0 = hardware concurrency
  std::string ofdm_code_file;  // alist; empty = built-in construction
  std::string slot_code_file;
  CodedOfdmConfig ofdm;
  SlotConfig slot;
  SweepConfig sweep;
  LlrConfig llr;
  BanditConfig bandit;

  void validate() const {
    require(replications >= 1, "config: replications must be at least 1");
    auto rho_ok = [](const std::vector<double>& v, const char* where) {
      require(!v.empty(), std::string("config: empty rho grid in ") + where);
      for (double r : v) require(r > 0.0 && r <= 1.0, std::string("config: rho values must lie in (0, 1] in ") + where);
    };
    rho_ok(sweep.rho, "sweep");
    rho_ok(llr.rho, "llr");
    require(!sweep.snr_db.empty() && !sweep.jnr_db.empty(), "config: sweep needs snr_db and jnr_db values");
    require(!llr.snr_db.empty() && !llr.jnr_db.empty(), "config: llr needs snr_db and jnr_db values");
    require(sweep.blocks_per_point >= 1, "config: blocks_per_point must be at least 1");
    require(llr.samples_per_point >= 1, "config: samples_per_point must be at least 1");
    require(bandit.steps >= 1, "config: steps must be at least 1");
    require(bandit.m >= 1, "config: m must be at least 1");
    require(bandit.tau >= 0.0, "config: tau must be nonnegative");
    require(bandit.obs_noise_var > 0.0, "config: obs_noise_var must be positive");
    require(bandit.bler_target >= 0.0 && bandit.bler_target <= 1.0, "config: bler_target must lie in [0, 1]");
    require(!bandit.lambdas.empty() || bandit.baseline, "config: bandit needs at least one lambda");
    for (double l : bandit.lambdas) require(l >= 0.0 && l <= 1.0, "config: lambda values must lie in [0, 1]");
    require(!bandit.schemes.empty() && !bandit.methods.empty(), "config: bandit needs schemes and methods");
    slot.validate();
    require(ofdm.code_n <= ofdm.n_data, "config: ofdm codeword longer than an OFDM symbol");
    require(ofdm.symbols_per_unit >= 1 && ofdm.max_iters >= 1, "config: bad ofdm section");
  }
};

// Desk profile for smoke runs: 100 blocks, 200 steps, 5 replications.
inline void apply_quick_profile(ScenarioConfig& cfg) {
  cfg.sweep.blocks_per_point = 100;
  cfg.llr.samples_per_point = std::min<std::size_t>(cfg.llr.samples_per_point, 20000);
  cfg.bandit.steps = 200;
  cfg.replications = 5;
}

namespace detail {

// Reads keys from one JSON object and rejects any it was not asked about.
class Section {
 public:
  Section(const nlohmann::json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw InvalidInput("config: '" + path_ + "' must be an object");
  }

  template <class T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
      throw InvalidInput("config: bad value for '" + where(key) + "'");
    }
  }

  void get_methods(const char* key, std::vector<JammingMethod>& out) {
    std::vector<std::string> names;
    get(key, names);
    if (!j_.contains(key)) return;
    out.clear();
    for (const auto& n : names) out.push_back(method_from_string(n));
  }

  void get_schemes(const char* key, std::vector<ModulationScheme>& out) {
    std::vector<std::string> names;
    get(key, names);
    if (!j_.contains(key)) return;
    out.clear();
    for (const auto& n : names) out.push_back(scheme_from_string(n));
  }

  std::optional<Section> sub(const char* key) {
    seen_.insert(key);
    if (!j_.contains(key)) return std::nullopt;
    return Section(j_.at(key), where(key));
  }

  void finish() const {
    for (const auto& [k, v] : j_.items())
      if (!seen_.count(k)) throw InvalidInput("config: unknown key '" + where(k) + "'");
  }

 private:
  std::string where(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  const nlohmann::json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

inline LlrNoiseModel llr_noise_from_string(const std::string& s) {
  if (s == "thermal") return LlrNoiseModel::Thermal;
  if (s == "per_symbol") return LlrNoiseModel::PerSymbol;
  if (s == "per_subcarrier") return LlrNoiseModel::PerSubcarrier;
  throw InvalidInput("config: unknown llr_noise '" + s + "'");
}

}  // namespace detail

inline ScenarioConfig parse_config(const nlohmann::json& j) {
  ScenarioConfig cfg;
  detail::Section top(j, "");
  std::string exp;
  top.get("experiment", exp);
  if (!exp.empty()) {
    if (exp == "bler_sweep") cfg.experiment = Experiment::BlerSweep;
    else if (exp == "llr_stats") cfg.experiment = Experiment::LlrStats;
    else if (exp == "bandit") cfg.experiment = Experiment::Bandit;
    else throw InvalidInput("config: unknown experiment '" + exp + "'");
  }
  top.get("seed", cfg.seed);
  top.get("replications", cfg.replications);
  top.get("threads", cfg.threads);

  if (auto s = top.sub("ofdm")) {
    auto& o = cfg.ofdm;
    s->get("n_fft", o.n_fft);
    s->get("n_data", o.n_data);
    s->get("guard_each_side", o.guard_each_side);
    s->get("dc_null", o.dc_null);
    s->get("cp_length", o.cp_length);
    s->get("symbols_per_unit", o.symbols_per_unit);
    s->get("code_n", o.code_n);
    s->get("code_k", o.code_k);
    s->get("code_seed", o.code_seed);
    s->get("code_file", cfg.ofdm_code_file);
    s->get("max_iters", o.max_iters);
    std::string noise;
    s->get("llr_noise", noise);
    if (!noise.empty()) o.llr_noise = detail::llr_noise_from_string(noise);
    s->finish();
  }
  if (auto s = top.sub("slot")) {
    auto& o = cfg.slot;
    s->get("n_fft", o.n_fft);
    s->get("n_data_sc", o.n_data_sc);
    s->get("guard_each_side", o.guard_each_side);
    s->get("cp_pattern", o.cp_pattern);
    s->get("dmrs_symbol_indices", o.dmrs_symbol_indices);
    s->get("dmrs_subcarrier_stride", o.dmrs_subcarrier_stride);
    std::string scheme;
    s->get("scheme", scheme);
    if (!scheme.empty()) o.scheme = scheme_from_string(scheme);
    s->get("code_n", o.code_n);
    s->get("code_k", o.code_k);
    s->get("code_seed", o.code_seed);
    s->get("code_file", cfg.slot_code_file);
    s->get("frames_per_step", o.frames_per_step);
    s->get("slots_per_frame", o.slots_per_frame);
    s->get("max_codewords_per_slot", o.max_codewords_per_slot);
    s->get("max_iters", o.max_iters);
    if (auto h = s->sub("harq")) {
      h->get("enabled", o.harq.enabled);
      h->get("max_retransmissions", o.harq.max_retransmissions);
      h->finish();
    }
    s->finish();
  }
  if (auto s = top.sub("sweep")) {
    auto& o = cfg.sweep;
    s->get("snr_db", o.snr_db);
    s->get("jnr_db", o.jnr_db);
    s->get("rho", o.rho);
    s->get_methods("methods", o.methods);
    s->get_schemes("schemes", o.schemes);
    s->get("blocks_per_point", o.blocks_per_point);
    s->get("coherent", o.coherent);
    s->get("include_unjammed", o.include_unjammed);
    s->finish();
  }
  if (auto s = top.sub("llr")) {
    auto& o = cfg.llr;
    s->get("snr_db", o.snr_db);
    s->get("jnr_db", o.jnr_db);
    s->get("rho", o.rho);
    s->get_methods("methods", o.methods);
    std::string scheme;
    s->get("scheme", scheme);
    if (!scheme.empty()) o.scheme = scheme_from_string(scheme);
    s->get("samples_per_point", o.samples_per_point);
    s->get("coherent", o.coherent);
    s->get("include_unjammed", o.include_unjammed);
    s->finish();
  }
  if (auto s = top.sub("bandit")) {
    auto& o = cfg.bandit;
    s->get("snr_db", o.snr_db);
    s->get("jnr_db", o.jnr_db);
    s->get("lambda", o.lambdas);
    s->get("baseline", o.baseline);
    std::string mis;
    s->get("misobservation", mis);
    if (mis == "flip") o.misobservation = MisobservationModel::Flip;
    else if (mis == "erasure") o.misobservation = MisobservationModel::Erasure;
    else if (!mis.empty()) throw InvalidInput("config: unknown misobservation model '" + mis + "'");
    s->get("tau", o.tau);
    s->get("m", o.m);
    s->get("steps", o.steps);
    s->get("bler_target", o.bler_target);
    s->get("obs_noise_var", o.obs_noise_var);
    s->get_schemes("schemes", o.schemes);
    s->get_methods("methods", o.methods);
    s->get("coherent", o.coherent);
    s->finish();
  }
  top.finish();
  cfg.validate();
  return cfg;
}

inline ScenarioConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw InvalidInput("cannot open config '" + path + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(is, nullptr, true, /*ignore_comments=*/true);
  } catch (const nlohmann::json::parse_error& e) {
    throw InvalidInput("config '" + path + "': " + e.what());
  }
  return parse_config(j);
}

inline std::shared_ptr<const LdpcCode> ofdm_code(const ScenarioConfig& cfg) {
  if (!cfg.ofdm_code_file.empty()) return std::make_shared<const LdpcCode>(load_alist(cfg.ofdm_code_file));
  return std::make_shared<const LdpcCode>(make_peg_code(cfg.ofdm.code_n, cfg.ofdm.code_k, 3, cfg.ofdm.code_seed));
}

inline std::shared_ptr<const LdpcCode> slot_code(const ScenarioConfig& cfg) {
  if (!cfg.slot_code_file.empty()) return std::make_shared<const LdpcCode>(load_alist(cfg.slot_code_file));
  return std::make_shared<const LdpcCode>(make_peg_code(cfg.slot.code_n, cfg.slot.code_k, 3, cfg.slot.code_seed));
}

// Stream purposes, so no two consumers ever share a generator.
namespace purpose {
inline constexpr std::uint64_t kSweep = 11, kLlr = 12, kAgent = 21, kVictim = 22, kFeedback = 23;
}

// -- BLER sweep ---------------------------------------------------------------

struct SweepPoint {
  double snr_db = 0, jnr_db = 0;
  std::optional<JammerAction> action;  // nullopt = jammer off
  std::size_t blocks = 0, errors = 0;

  double bler() const { return blocks ? static_cast<double>(errors) / static_cast<double>(blocks) : 0.0; }
  double std_err() const {
    const double p = bler();
    return blocks ? std::sqrt(p * (1 - p) / static_cast<double>(blocks)) : 0.0;
  }
  Interval ci95() const { return wilson_interval(errors, blocks); }
};

// Simulates whole units until at least `blocks` codewords have been sent.
inline SweepPoint simulate_point(CodedOfdmLink& link, double snr_db, double jnr_db,
                                 const std::optional<JammerAction>& action, std::size_t blocks, bool coherent,
                                 Rng& rng) {
  SweepPoint pt{snr_db, jnr_db, action, 0, 0};
  const ChannelConfig chan{snr_db, jnr_db, 1.0, coherent};
  while (pt.blocks < blocks) {
    const UnitResult u = link.run_unit(action, chan, rng);
    pt.blocks += u.ok.size();
    for (auto ok : u.ok) pt.errors += ok ? 0 : 1;
  }
  return pt;
}

inline std::vector<SweepPoint> run_bler_sweep(const ScenarioConfig& cfg) {
  cfg.validate();
  const auto code = ofdm_code(cfg);
  const auto& sw = cfg.sweep;
  std::vector<SweepPoint> grid;
  for (double snr : sw.snr_db)
    for (double jnr : sw.jnr_db) {
      if (sw.include_unjammed) grid.push_back({snr, jnr, std::nullopt});
      for (auto meth : sw.methods)
        for (auto sch : sw.schemes)
          for (double rho : sw.rho) grid.push_back({snr, jnr, JammerAction{sch, rho, meth}});
    }
  return parallel_map(
      grid.size(),
      [&](std::size_t i) {
        CodedOfdmLink link(cfg.ofdm, code);
        Rng rng = make_stream(cfg.seed, i, purpose::kSweep);
        const auto& g = grid[i];
        return simulate_point(link, g.snr_db, g.jnr_db, g.action, sw.blocks_per_point, sw.coherent, rng);
      },
      cfg.threads);
}

// -- LLR statistics -----------------------------------------------------------

struct LlrPoint {
  double snr_db = 0, jnr_db = 0;
  std::optional<JammingMethod> method;  // nullopt = jammer off
  double rho = 0;
  BoxSummary box;  // of |LLR|
};

inline std::vector<double> collect_llr_magnitudes(CodedOfdmLink& link, double snr_db, double jnr_db,
                                                  const std::optional<JammerAction>& action, std::size_t samples,
                                                  bool coherent, Rng& rng) {
  const ChannelConfig chan{snr_db, jnr_db, 1.0, coherent};
  std::vector<double> mags;
  mags.reserve(samples);
  while (mags.size() < samples) {
    const UnitResult u = link.run_unit(action, chan, rng, true);
    for (double l : u.llrs) {
      if (mags.size() == samples) break;
      mags.push_back(std::fabs(l));
    }
  }
  return mags;
}

inline std::vector<LlrPoint> run_llr_stats(const ScenarioConfig& cfg) {
  cfg.validate();
  const auto code = ofdm_code(cfg);
  const auto& lc = cfg.llr;
  std::vector<LlrPoint> grid;
  for (double snr : lc.snr_db)
    for (double jnr : lc.jnr_db) {
      if (lc.include_unjammed) grid.push_back({snr, jnr, std::nullopt, 0.0, {}});
      for (auto meth : lc.methods)
        for (double rho : lc.rho) grid.push_back({snr, jnr, meth, rho, {}});
    }
  return parallel_map(
      grid.size(),
      [&](std::size_t i) {
        CodedOfdmLink link(cfg.ofdm, code);
        Rng rng = make_stream(cfg.seed, i, purpose::kLlr);
        LlrPoint p = grid[i];
        std::optional<JammerAction> act;
        if (p.method) act = JammerAction{lc.scheme, p.rho, *p.method};
        p.box = summarize(collect_llr_magnitudes(link, p.snr_db, p.jnr_db, act, lc.samples_per_point, lc.coherent, rng));
        return p;
      },
      cfg.threads);
}

// -- bandit learning ----------------------------------------------------------

// One victim step under a jammer action: per-chain ACK (1) / NACK (0).
using AckEnvironment = std::function<std::vector<std::uint8_t>(const JammerAction&)>;

struct StepRecord {
  std::size_t replication = 0;
  std::size_t t = 0;  // 1-based
  JammerAction action;
  double true_bler = 0.0;
  std::optional<double> observed_bler;
  std::optional<double> cost;
  double cum_true_bler = 0.0;
  double cum_observed_bler = std::numeric_limits<double>::quiet_NaN();  // NaN until something was observed
};

// Runs one replication of agent + environment + unreliable feedback.
inline std::vector<StepRecord> run_bandit_replication(const ActionSpace& space, const CostParams& params,
                                                      const Posterior& prior, const FeedbackConfig& feedback,
                                                      std::size_t steps, std::size_t replication,
                                                      const AckEnvironment& env, Rng& agent_rng,
                                                      Rng& feedback_rng) {
  LinearThompsonAgent agent(space, params, prior);
  std::vector<StepRecord> out;
  out.reserve(steps);
  double true_sum = 0.0, obs_sum = 0.0;
  std::size_t obs_count = 0;
  for (std::size_t t = 1; t <= steps; ++t) {
    auto env_fn = [&](std::size_t a) {
      const auto acks = env(space[a]);
      require(!acks.empty(), "bandit environment returned no ACK/NACK reports");
      std::size_t nacks = 0;
      for (auto x : acks) nacks += x ? 0 : 1;
      EnvOutcome o;
      o.true_bler = static_cast<double>(nacks) / static_cast<double>(acks.size());
      const auto obs = observe(acks, feedback, feedback_rng);
      if (std::any_of(obs.begin(), obs.end(), [](Observation x) { return x != Observation::Missed; }))
        o.observed_bler = observed_bler(obs);
      return o;
    };
    const StepOutcome s = agent.step(env_fn, agent_rng);
    StepRecord r;
    r.replication = replication;
    r.t = t;
    r.action = space[s.action];
    r.true_bler = s.true_bler;
    r.observed_bler = s.observed_bler;
    r.cost = s.cost;
    true_sum += s.true_bler;
    r.cum_true_bler = true_sum / static_cast<double>(t);
    if (s.observed_bler) {
      obs_sum += *s.observed_bler;
      ++obs_count;
    }
    if (obs_count) r.cum_observed_bler = obs_sum / static_cast<double>(obs_count);
    out.push_back(r);
  }
  return out;
}

struct BanditRun {
  double lambda = 0.0;
  std::vector<std::vector<StepRecord>> replications;
  std::vector<double> mean_cum_true;      // per t, mean over replications
  std::vector<double> mean_cum_observed;  // NaN where no replication has observed anything yet
};

inline void aggregate(BanditRun& run) {
  require(!run.replications.empty(), "aggregate: no replications");
  const std::size_t steps = run.replications.front().size();
  run.mean_cum_true.assign(steps, 0.0);
  run.mean_cum_observed.assign(steps, 0.0);
  for (std::size_t t = 0; t < steps; ++t) {
    double st = 0.0, so = 0.0;
    std::size_t no = 0;
    for (const auto& rep : run.replications) {
      st += rep[t].cum_true_bler;
      if (!std::isnan(rep[t].cum_observed_bler)) {
        so += rep[t].cum_observed_bler;
        ++no;
      }
    }
    run.mean_cum_true[t] = st / static_cast<double>(run.replications.size());
    run.mean_cum_observed[t] = no ? so / static_cast<double>(no) : std::numeric_limits<double>::quiet_NaN();
  }
}

struct BanditResult {
  std::vector<BanditRun> runs;  // baseline (lambda = 0) first when requested
};

// Environment backed by a PDSCH link with its own HARQ state; one per replication.
inline AckEnvironment make_pdsch_environment(const ScenarioConfig& cfg, std::shared_ptr<const LdpcCode> code,
                                             std::size_t replication) {
  struct State {
    State(const ScenarioConfig& c, std::shared_ptr<const LdpcCode> code, std::size_t rep)
        : link(c.slot, std::move(code)),
          rng(make_stream(c.seed, rep, purpose::kVictim)),
          chan{c.bandit.snr_db, c.bandit.jnr_db, 1.0, c.bandit.coherent} {}
    PdschLink link;
    HarqState harq;
    Rng rng;
    ChannelConfig chan;
  };
  auto st = std::make_shared<State>(cfg, std::move(code), replication);
  return [st](const JammerAction& a) { return st->link.run_link_step(a, st->chan, st->harq, st->rng).acks; };
}

inline ActionSpace bandit_action_space(const BanditConfig& b) {
  return enumerate_actions(b.schemes, b.m, b.methods);
}

// `env_factory(replication)` builds a fresh environment per replication; the
// default runs the PDSCH link from the config.
inline BanditResult run_bandit_experiment(
    const ScenarioConfig& cfg, std::function<AckEnvironment(std::size_t)> env_factory = nullptr) {
  cfg.validate();
  const auto& b = cfg.bandit;
  if (!env_factory) {
    auto code = slot_code(cfg);
    env_factory = [&cfg, code](std::size_t rep) { return make_pdsch_environment(cfg, code, rep); };
  }
  const ActionSpace space = bandit_action_space(b);
  const CostParams params{b.bler_target, b.jnr_db, b.tau};
  Posterior prior;
  prior.obs_noise_var = b.obs_noise_var;

  std::vector<double> lambdas;
  if (b.baseline) lambdas.push_back(0.0);
  for (double l : b.lambdas)
    if (!(b.baseline && l == 0.0)) lambdas.push_back(l);

  BanditResult res;
  for (double lambda : lambdas) {
    FeedbackConfig fb{lambda, lambda, b.misobservation};
    BanditRun run;
    run.lambda = lambda;
    run.replications = parallel_map(
        cfg.replications,
        [&](std::size_t rep) {
          Rng agent_rng = make_stream(cfg.seed, rep, purpose::kAgent);
          Rng fb_rng = make_stream(cfg.seed, rep, purpose::kFeedback);
          const AckEnvironment env = env_factory(rep);
          return run_bandit_replication(space, params, prior, fb, b.steps, rep, env, agent_rng, fb_rng);
        },
        cfg.threads);
    aggregate(run);
    res.runs.push_back(std::move(run));
  }
  return res;
}

// -- CSV output ---------------------------------------------------------------

inline std::string fmt_num(double x) {
  if (std::isnan(x)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", x);
  return buf;
}

inline std::string fmt_opt(const std::optional<double>& x) {
  return x ? fmt_num(*x) : std::string("nan");
}

inline std::ofstream open_csv(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary);
  if (!os) throw InvalidInput("cannot open '" + path.string() + "' for writing");
  return os;
}

inline void write_sweep_csv(std::ostream& os, std::span<const SweepPoint> pts) {
  os << "snr_db,jnr_db,method,scheme,rho,blocks,errors,bler,std_err\n";
  for (const auto& p : pts) {
    os << fmt_num(p.snr_db) << ',' << fmt_num(p.jnr_db) << ','
       << (p.action ? to_string(p.action->method) : "none") << ','
       << (p.action ? to_string(p.action->scheme) : "none") << ','
       << fmt_num(p.action ? p.action->rho : 0.0) << ',' << p.blocks << ',' << p.errors << ','
       << fmt_num(p.bler()) << ',' << fmt_num(p.std_err()) << '\n';
  }
}

inline void write_llr_csv(std::ostream& os, std::span<const LlrPoint> pts) {
  os << "snr_db,jnr_db,method,rho,samples,min,q1,median,q3,max,iqr,outliers\n";
  for (const auto& p : pts) {
    const auto& b = p.box;
    os << fmt_num(p.snr_db) << ',' << fmt_num(p.jnr_db) << ',' << (p.method ? to_string(*p.method) : "none") << ','
       << fmt_num(p.rho) << ',' << b.samples << ',' << fmt_num(b.min) << ',' << fmt_num(b.q1) << ','
       << fmt_num(b.median) << ',' << fmt_num(b.q3) << ',' << fmt_num(b.max) << ',' << fmt_num(b.iqr()) << ','
       << b.outliers << '\n';
  }
}

inline void write_bandit_steps_csv(std::ostream& os, const BanditRun& run) {
  os << "t,replication,scheme,rho,method,true_bler,observed_bler,cost,cum_true_bler,cum_observed_bler\n";
  for (const auto& rep : run.replications)
    for (const auto& r : rep)
      os << r.t << ',' << r.replication << ',' << to_string(r.action.scheme) << ',' << fmt_num(r.action.rho) << ','
         << to_string(r.action.method) << ',' << fmt_num(r.true_bler) << ',' << fmt_opt(r.observed_bler) << ','
         << fmt_opt(r.cost) << ',' << fmt_num(r.cum_true_bler) << ',' << fmt_num(r.cum_observed_bler) << '\n';
}

inline void write_bandit_curves_csv(std::ostream& os, const BanditResult& res) {
  os << "lambda,t,cum_true_bler,cum_observed_bler\n";
  for (const auto& run : res.runs)
    for (std::size_t t = 0; t < run.mean_cum_true.size(); ++t)
      os << fmt_num(run.lambda) << ',' << t + 1 << ',' << fmt_num(run.mean_cum_true[t]) << ','
         << fmt_num(run.mean_cum_observed[t]) << '\n';
}

inline std::string bandit_steps_filename(double lambda) { return "bandit_lambda_" + fmt_num(lambda) + ".csv"; }

// Writes every CSV for an experiment into `dir`; returns the paths written.
inline std::vector<std::filesystem::path> write_sweep_outputs(const std::filesystem::path& dir,
                                                              std::span<const SweepPoint> pts) {
  const auto path = dir / "bler_sweep.csv";
  auto os = open_csv(path);
  write_sweep_csv(os, pts);
  return {path};
}

inline std::vector<std::filesystem::path> write_llr_outputs(const std::filesystem::path& dir,
                                                            std::span<const LlrPoint> pts) {
  const auto path = dir / "llr_stats.csv";
  auto os = open_csv(path);
  write_llr_csv(os, pts);
  return {path};
}

inline std::vector<std::filesystem::path> write_bandit_outputs(const std::filesystem::path& dir,
                                                               const BanditResult& res) {
  std::vector<std::filesystem::path> paths;
  for (const auto& run : res.runs) {
    paths.push_back(dir / bandit_steps_filename(run.lambda));
    auto os = open_csv(paths.back());
    write_bandit_steps_csv(os, run);
  }
  paths.push_back(dir / "bandit_curves.csv");
  auto os = open_csv(paths.back());
  write_bandit_curves_csv(os, res);
  return paths;
}

}  // namespace jamsim
