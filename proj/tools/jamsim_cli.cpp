// jamsim: run BLER sweeps, LLR statistics and bandit learning experiments.

#include <cstdint>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "jamsim/harness.hpp"

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = "results";
  bool quick = false;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config, "scenario config (JSON with nested sections)")->check(CLI::ExistingFile);
  sub->add_option("--seed", c.seed, "master seed, overrides the config");
  sub->add_option("--out", c.out, "output directory")->capture_default_str();
  sub->add_flag("--quick", c.quick, "desk profile: 100 blocks, 200 steps, 5 replications");
}

jamsim::ScenarioConfig resolve(const Common& c, jamsim::Experiment want) {
  jamsim::ScenarioConfig cfg = c.config.empty() ? jamsim::ScenarioConfig{} : jamsim::load_config(c.config);
  if (cfg.experiment && *cfg.experiment != want)
    throw jamsim::InvalidInput("config is for experiment '" + std::string(to_string(*cfg.experiment)) +
                               "', not '" + std::string(to_string(want)) + "'");
  if (c.seed) cfg.seed = *c.seed;
  if (c.quick) jamsim::apply_quick_profile(cfg);
  cfg.validate();
  return cfg;
}

void report(const std::vector<std::filesystem::path>& paths) {
  for (const auto& p : paths) std::cout << p.string() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"OFDM jamming link simulator with a Thompson-sampling jammer"};
  app.require_subcommand(1);

  Common sweep_opts, llr_opts, bandit_opts;
  auto* sweep = app.add_subcommand("bler-sweep", "BLER vs rho over the coded OFDM link");
  add_common(sweep, sweep_opts);
  auto* llr = app.add_subcommand("llr-stats", "|LLR| box statistics per method and rho");
  add_common(llr, llr_opts);
  auto* bandit = app.add_subcommand("bandit", "Thompson-sampling jammer against the PDSCH link");
  add_common(bandit, bandit_opts);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*sweep) {
      const auto cfg = resolve(sweep_opts, jamsim::Experiment::BlerSweep);
      report(jamsim::write_sweep_outputs(sweep_opts.out, jamsim::run_bler_sweep(cfg)));
    } else if (*llr) {
      const auto cfg = resolve(llr_opts, jamsim::Experiment::LlrStats);
      report(jamsim::write_llr_outputs(llr_opts.out, jamsim::run_llr_stats(cfg)));
    } else if (*bandit) {
      const auto cfg = resolve(bandit_opts, jamsim::Experiment::Bandit);
      report(jamsim::write_bandit_outputs(bandit_opts.out, jamsim::run_bandit_experiment(cfg)));
    }
  } catch (const std::exception& e) {
    std::cerr << "jamsim: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
