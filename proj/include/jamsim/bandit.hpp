#pragma once

// Linear contextual Thompson sampling over jammer actions.
//
// Each action i keeps a 3-feature context built from the costs it has
// produced so far: [mean cost, fraction of plays with cost > tau, max cost].
// The agent models cost(i) = <context_i, theta> + noise with a Gaussian
// posterior theta ~ N(theta_hat, B^-1), draws theta from it every step and
// plays the action whose context scores highest under the draw.

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "jamsim/channel.hpp"
#include "jamsim/error.hpp"
#include "jamsim/jammer.hpp"
#include "jamsim/random.hpp"

namespace jamsim {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

struct ActionSpace {
  std::vector<JammerAction> actions;
  std::size_t m = 1;

  std::size_t size() const { return actions.size(); }
  const JammerAction& operator[](std::size_t i) const { return actions[i]; }
};

// Cartesian product, schemes outermost, then rho = 1/M..1, then methods.
inline ActionSpace enumerate_actions(std::span<const ModulationScheme> schemes, std::size_t m,
                                     std::span<const JammingMethod> methods) {
  require(m >= 1, "enumerate_actions: M must be at least 1");
  require(!schemes.empty(), "enumerate_actions: no signaling schemes");
  require(!methods.empty(), "enumerate_actions: no jamming methods");
  ActionSpace space;
  space.m = m;
  for (auto s : schemes)
    for (std::size_t r = 1; r <= m; ++r)
      for (auto meth : methods)
        space.actions.push_back({s, static_cast<double>(r) / static_cast<double>(m), meth});
  return space;
}

struct CostParams {
  double bler_target = 0.0;
  double jnr_db = 0.0;
  double tau = 0.5;
};

// max(BLER - target, 0) / JNR_linear. Larger means a more damaging, more
// power-efficient action; the agent maximizes it.
inline double compute_cost(double bler, const CostParams& params) {
  require(bler >= 0.0 && bler <= 1.0, "compute_cost: BLER must lie in [0, 1]");
  return std::max(bler - params.bler_target, 0.0) / db_to_linear(params.jnr_db);
}

struct ActionStats {
  std::size_t plays = 0;
  double cost_sum = 0.0;
  std::size_t exceed_count = 0;
  double cost_max = 0.0;

  Vec3 context() const {
    if (plays == 0) return Vec3::Zero();
    const double p = static_cast<double>(plays);
    return {cost_sum / p, static_cast<double>(exceed_count) / p, cost_max};
  }
};

inline ActionStats update_context(ActionStats stats, double new_cost, double tau) {
  require(new_cost >= 0.0, "update_context: cost must be nonnegative");
  stats.cost_max = stats.plays == 0 ? new_cost : std::max(stats.cost_max, new_cost);
  stats.plays += 1;
  stats.cost_sum += new_cost;
  stats.exceed_count += new_cost > tau ? 1 : 0;
  return stats;
}

struct Posterior {
  Vec3 theta_hat = Vec3::Zero();
  Mat3 b = Mat3::Identity();  // precision
  double obs_noise_var = 1.0;
};

inline Vec3 sample_theta(const Posterior& post, Rng& rng) {
  if (!(post.obs_noise_var > 0.0)) throw InvariantViolation("sample_theta: observation noise must be positive");
  Eigen::LLT<Mat3> llt(post.b);
  if (llt.info() != Eigen::Success || !post.b.isApprox(post.b.transpose()))
    throw InvariantViolation("sample_theta: precision matrix is not symmetric positive definite");
  std::normal_distribution<double> nd(0.0, 1.0);
  Vec3 z;
  for (int i = 0; i < 3; ++i) z[i] = nd(rng);
  // B = L L^T, so L^-T z has covariance B^-1.
  return post.theta_hat + llt.matrixU().solve(z);
}

inline Posterior update_posterior(const Posterior& post, const Vec3& phi, double cost) {
  Posterior next = post;
  next.b = post.b + phi * phi.transpose() / post.obs_noise_var;
  const Vec3 rhs = post.b * post.theta_hat + phi * cost / post.obs_noise_var;
  next.theta_hat = next.b.llt().solve(rhs);
  return next;
}

// argmax_i <context_i, theta>, ties broken uniformly at random. Scores
// within a relative 1e-12 count as tied: the running mean of identical costs
// rounds differently depending on the play count.
inline std::size_t select_action(std::span<const ActionStats> stats, const Vec3& theta, Rng& rng) {
  require(!stats.empty(), "select_action: empty action space");
  std::vector<double> scores(stats.size());
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < stats.size(); ++i) {
    scores[i] = stats[i].context().dot(theta);
    best = std::max(best, scores[i]);
  }
  const double tol = 1e-12 * std::max(std::fabs(best), std::numeric_limits<double>::min());
  std::vector<std::size_t> ties;
  for (std::size_t i = 0; i < stats.size(); ++i)
    if (scores[i] >= best - tol) ties.push_back(i);
  if (ties.size() == 1) return ties.front();
  return ties[std::uniform_int_distribution<std::size_t>(0, ties.size() - 1)(rng)];
}

// What the environment reports for one step. The agent only reads
// `observed_bler`; `true_bler` is carried along for bookkeeping. A missing
// observation (every report erased) leaves the agent untouched.
struct EnvOutcome {
  std::optional<double> observed_bler;
  double true_bler = 0.0;
};

struct StepOutcome {
  std::size_t action = 0;
  std::optional<double> observed_bler;
  double true_bler = 0.0;
  std::optional<double> cost;
};

class LinearThompsonAgent {
 public:
  using Environment = std::function<EnvOutcome(std::size_t action)>;

  LinearThompsonAgent(ActionSpace space, CostParams params, Posterior prior = {})
      : space_(std::move(space)), params_(params), stats_(space_.size()), post_(std::move(prior)) {
    require(space_.size() > 0, "LinearThompsonAgent: empty action space");
    require(params_.tau >= 0.0, "LinearThompsonAgent: tau must be nonnegative");
  }

  StepOutcome step(const Environment& env, Rng& rng) {
    const Vec3 theta = sample_theta(post_, rng);
    StepOutcome out;
    out.action = select_action(stats_, theta, rng);
    const EnvOutcome res = env(out.action);
    out.true_bler = res.true_bler;
    out.observed_bler = res.observed_bler;
    if (!res.observed_bler) return out;
    const double cost = compute_cost(*res.observed_bler, params_);
    out.cost = cost;
    const Vec3 phi = stats_[out.action].context();
    stats_[out.action] = update_context(stats_[out.action], cost, params_.tau);
    post_ = update_posterior(post_, phi, cost);
    return out;
  }

  const ActionSpace& space() const { return space_; }
  const CostParams& params() const { return params_; }
  const Posterior& posterior() const { return post_; }
  std::span<const ActionStats> stats() const { return stats_; }

  nlohmann::json snapshot() const {
    nlohmann::json j;
    j["m"] = space_.m;
    j["cost"] = {{"bler_target", params_.bler_target}, {"jnr_db", params_.jnr_db}, {"tau", params_.tau}};
    auto& acts = j["actions"] = nlohmann::json::array();
    for (std::size_t i = 0; i < space_.size(); ++i) {
      const auto& a = space_[i];
      const auto& s = stats_[i];
      acts.push_back({{"scheme", to_string(a.scheme)},
                      {"rho", a.rho},
                      {"method", to_string(a.method)},
                      {"plays", s.plays},
                      {"cost_sum", s.cost_sum},
                      {"exceed_count", s.exceed_count},
                      {"cost_max", s.cost_max}});
    }
    j["posterior"] = {{"theta_hat", {post_.theta_hat[0], post_.theta_hat[1], post_.theta_hat[2]}},
                      {"obs_noise_var", post_.obs_noise_var}};
    auto& b = j["posterior"]["b"] = nlohmann::json::array();
    for (int r = 0; r < 3; ++r) b.push_back({post_.b(r, 0), post_.b(r, 1), post_.b(r, 2)});
    return j;
  }

  static LinearThompsonAgent restore(const nlohmann::json& j) {
    try {
      ActionSpace space;
      space.m = j.at("m").get<std::size_t>();
      std::vector<ActionStats> stats;
      for (const auto& a : j.at("actions")) {
        space.actions.push_back({scheme_from_string(a.at("scheme").get<std::string>()), a.at("rho").get<double>(),
                                 method_from_string(a.at("method").get<std::string>())});
        ActionStats s;
        s.plays = a.at("plays").get<std::size_t>();
        s.cost_sum = a.at("cost_sum").get<double>();
        s.exceed_count = a.at("exceed_count").get<std::size_t>();
        s.cost_max = a.at("cost_max").get<double>();
        require(s.exceed_count <= s.plays, "snapshot: exceed_count exceeds plays");
        stats.push_back(s);
      }
      CostParams params{j.at("cost").at("bler_target").get<double>(), j.at("cost").at("jnr_db").get<double>(),
                        j.at("cost").at("tau").get<double>()};
      Posterior post;
      const auto& p = j.at("posterior");
      for (int i = 0; i < 3; ++i) post.theta_hat[i] = p.at("theta_hat").at(i).get<double>();
      for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) post.b(r, c) = p.at("b").at(r).at(c).get<double>();
      post.obs_noise_var = p.at("obs_noise_var").get<double>();
      LinearThompsonAgent agent(std::move(space), params, post);
      agent.stats_ = std::move(stats);
      return agent;
    } catch (const nlohmann::json::exception& e) {
      throw InvalidInput(std::string("agent snapshot: ") + e.what());
    }
  }

 private:
  ActionSpace space_;
  CostParams params_;
  std::vector<ActionStats> stats_;
  Posterior post_;
};

}  // namespace jamsim
