#pragma once
// Recurrent attention agent: encoder f_g -> GRU core f_h -> score head f_i
// (sigmoid regression), Gaussian location head f_l, internally shaped rewards,
// and REINFORCE-with-baseline training with backprop through time.

#include <cstdint>
#include <ostream>
#include <vector>

#include "idio/encoder.hpp"
#include "idio/gru.hpp"
#include "idio/nn.hpp"
#include "idio/optim.hpp"
#include "idio/page.hpp"
#include "idio/rng.hpp"

namespace idio {

struct RewardConfig {
  double t_r1 = 0.1;
  double t_r2 = 0.5;
};

// r = i_t            if i_t - i_prev >= T_r1 and i_t > T_r2
//     -(1 - i_t)     if i_t - i_prev <  T_r1 and i_t > T_r2
//     -i_t           otherwise
// Threshold comparisons carry a 1e-9 slack so decimal-specified boundaries
// (e.g. 0.6 - 0.5 >= 0.1) behave as in exact arithmetic.
double shape_reward(double i_t, double i_prev, const RewardConfig& cfg);

// Tail return R_t = sum_{u >= t} gamma^(u-t) * r_u, 0-based t.
double discounted_return(const std::vector<double>& rewards, double gamma,
                         std::size_t t);
std::vector<double> discounted_returns(const std::vector<double>& rewards,
                                       double gamma);

enum class FirstLocation { uniform, policy };

struct PolicyConfig {
  double location_variance = 0.01;  // fixed sigma_l^2
  int episodes = 1000;              // N, total episode budget for training
  int steps_per_episode = 16;       // T = k
  double discount = 0.95;           // gamma
  int episodes_per_update = 8;
  int select_episodes = 4;          // stochastic rollouts pooled by select_top_k
  FirstLocation first_location = FirstLocation::uniform;
};

struct AgentConfig {
  EncoderConfig encoder;
  std::size_t hidden_dim = 64;
  RewardConfig reward;
  PolicyConfig policy;
  double gt_sigma = 0.05;  // ground-truth kernel width for scorer targets
  // Sequential-mode scorer warmup before the RL phase: supervised regression
  // on sliding windows of the training pages. 0 disables it.
  int scorer_warmup_epochs = 0;
  std::size_t warmup_stride = 8;
  // Scorer/policy optimizer learning rates; 0 means "use the shared SGD
  // config". The REINFORCE gradient is orders of magnitude larger than the
  // regression gradients (advantage times (z-mu)/sigma^2), so the policy
  // usually wants a much smaller step than the scorer.
  double scorer_lr = 0.0;
  double policy_lr = 0.0;
};

struct StepRecord {
  NormLocation loc;  // l_t
  bool from_policy = false;
  double mu_pre[2] = {0, 0};
  double mu[2] = {0, 0};  // policy mean that generated loc
  double z[2] = {0, 0};   // pre-clamp Gaussian sample
  double log_prob = 0.0;

  Patch patch;
  std::vector<double> feature;  // g_t
  ConvEncoder::Cache enc_cache;
  GruCell::Cache gru_cache;
  std::vector<double> hidden;  // h_t
  double score = 0.0;          // i_t
  double reward = 0.0;         // r_t
};

struct Trajectory {
  std::vector<StepRecord> steps;
  const PageSample* page = nullptr;
  std::uint64_t seed = 0;

  std::vector<double> rewards() const;
};

struct ScoredPatch {
  Patch patch;
  double score = 0.0;  // predicted i
};

class AttentionAgent {
 public:
  explicit AttentionAgent(AgentConfig cfg);

  void init(Rng& rng);
  const AgentConfig& config() const { return cfg_; }

  ParamRefs policy_params();    // encoder + GRU + score head + location head
  ParamRefs baseline_params();  // value head only
  ParamRefs all_params();       // everything, checkpoint order

  struct Proposal {
    double mu_pre[2], mu[2], z[2];
    NormLocation loc;
    double log_prob;
  };
  // mu = sigmoid(linear(h)); z ~ N(mu, sigma_l^2 I) (z = mu when greedy);
  // loc = clamp(z); log_prob at the pre-clamp sample.
  Proposal propose_location(const std::vector<double>& hidden, Rng& rng,
                            bool greedy) const;

  double predict_score(const std::vector<double>& hidden) const;
  double baseline_value(const std::vector<double>& hidden) const;

  Trajectory rollout_episode(const PageSample& page, Rng rng,
                             bool greedy = false) const;
  // Fixed location sequence, no policy terms (deterministic; for tests).
  Trajectory scripted_rollout(const PageSample& page,
                              const std::vector<NormLocation>& locs) const;
  // Policy-proposed steps evaluated at fixed pre-clamp samples z
  // (deterministic forward of the log-prob chain; for gradient checks).
  Trajectory scripted_rollout_z(const PageSample& page,
                                const std::vector<std::pair<double, double>>& zs) const;

  // Reverse pass over one episode. dscore[t] is dL/di_t; dlogprob[t] is the
  // scalar multiplier on grad log pi(l_t | s_t). Gradients accumulate into
  // the policy params; caller zeroes grads and steps the optimizer.
  void episode_backward(const Trajectory& traj, const std::vector<double>& dscore,
                        const std::vector<double>& dlogprob);

  // (1/N) sum_n sum_t (R_t - b_t) grad log pi, ascended. b_t is the value
  // head at the hidden state that proposed l_t.
  void policy_gradient_update(const std::vector<Trajectory>& batch,
                              SgdMomentum& opt);

  // One MSE step of the value head toward the tail returns; returns the
  // pre-update MSE. Baseline gradients do not reach policy params.
  double train_baseline(const std::vector<Trajectory>& batch, SgdMomentum& opt);

  // One MSE step of the full scorer chain (encoder+GRU+head) on in-episode
  // targets[t] per trajectory; returns the pre-update MSE.
  double scorer_step_on_trajectories(const std::vector<Trajectory>& batch,
                                     const std::vector<std::vector<double>>& targets,
                                     SgdMomentum& opt);

  // Standalone labelled patches (each carries actual_score), trained as
  // single-step episodes from the initial hidden state.
  double train_scorer(const std::vector<Patch>& labelled, SgdMomentum& opt,
                      int epochs);

  // One-step score of an isolated patch (no history).
  double score_patch(const Patch& p) const;

  // Pools stochastic rollouts, deduplicates centers closer than patch_side/2
  // pixels keeping the higher score, tops up with greedy rollouts; exactly k
  // patches, scores non-increasing.
  std::vector<ScoredPatch> select_top_k(const PageSample& page, int k, Rng rng) const;

  struct TrainLogEntry {
    int epoch;
    double mean_return, baseline_mse, scorer_mse, mean_top_score;
  };
  // Interleaved per-epoch training: policy gradient, baseline MSE, scorer MSE
  // (episode targets from the analytic oracle plus a few random patches).
  std::vector<TrainLogEntry> train(const std::vector<const PageSample*>& pages,
                                   Rng rng, const SgdConfig& sgd,
                                   std::ostream* log = nullptr);

  ConvEncoder& encoder() { return encoder_; }
  const ConvEncoder& encoder() const { return encoder_; }

 private:
  Trajectory run_episode(const PageSample& page, Rng* rng, bool greedy,
                         const std::vector<NormLocation>* fixed_locs,
                         const std::vector<std::pair<double, double>>* fixed_zs) const;

  AgentConfig cfg_;
  ConvEncoder encoder_;
  GruCell gru_;
  LinearLayer score_head_;     // hidden -> 1, sigmoid
  LinearLayer location_head_;  // hidden -> 2, sigmoid
  LinearLayer baseline_head_;  // hidden -> 1
  std::vector<double> h0_;
};

}  // namespace idio
