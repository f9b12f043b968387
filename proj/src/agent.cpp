#include "idio/agent.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace idio {
namespace {

constexpr double kBoundaryEps = 1e-9;
constexpr double kTwoPi = 6.283185307179586;

}  // namespace

double shape_reward(double i_t, double i_prev, const RewardConfig& cfg) {
  const bool rose = (i_t - i_prev) - cfg.t_r1 >= -kBoundaryEps;
  const bool high = i_t - cfg.t_r2 > kBoundaryEps;
  if (rose && high) return i_t;
  if (!rose && high) return -(1.0 - i_t);
  return -i_t;
}

double discounted_return(const std::vector<double>& rewards, double gamma,
                         std::size_t t) {
  if (t >= rewards.size()) throw std::out_of_range("return index out of range");
  double acc = 0.0;
  for (std::size_t u = rewards.size(); u-- > t;) acc = rewards[u] + gamma * acc;
  return acc;
}

std::vector<double> discounted_returns(const std::vector<double>& rewards,
                                       double gamma) {
  std::vector<double> out(rewards.size(), 0.0);
  double acc = 0.0;
  for (std::size_t u = rewards.size(); u-- > 0;) {
    acc = rewards[u] + gamma * acc;
    out[u] = acc;
  }
  return out;
}

std::vector<double> Trajectory::rewards() const {
  std::vector<double> r(steps.size());
  for (std::size_t t = 0; t < steps.size(); ++t) r[t] = steps[t].reward;
  return r;
}

AttentionAgent::AttentionAgent(AgentConfig cfg)
    : cfg_(cfg),
      encoder_(cfg.encoder),
      gru_(cfg.hidden_dim, cfg.encoder.feature_dim),
      score_head_(1, cfg.hidden_dim),
      location_head_(2, cfg.hidden_dim),
      baseline_head_(1, cfg.hidden_dim),
      h0_(cfg.hidden_dim, 0.0) {
  if (cfg.policy.location_variance <= 0.0)
    throw std::invalid_argument("location variance must be > 0");
  if (cfg.policy.discount <= 0.0 || cfg.policy.discount > 1.0)
    throw std::invalid_argument("discount must be in (0,1]");
  if (cfg.policy.steps_per_episode < 1)
    throw std::invalid_argument("steps_per_episode must be >= 1");
}

void AttentionAgent::init(Rng& rng) {
  encoder_.init(rng);
  gru_.init(rng);
  score_head_.init(rng);
  location_head_.init(rng);
  baseline_head_.init(rng);
}

ParamRefs AttentionAgent::policy_params() {
  ParamRefs refs;
  encoder_.collect("agent.encoder", refs);
  gru_.collect("agent.gru", refs);
  score_head_.collect("agent.score", refs);
  location_head_.collect("agent.location", refs);
  return refs;
}

ParamRefs AttentionAgent::baseline_params() {
  ParamRefs refs;
  baseline_head_.collect("agent.baseline", refs);
  return refs;
}

ParamRefs AttentionAgent::all_params() {
  ParamRefs refs = policy_params();
  baseline_head_.collect("agent.baseline", refs);
  return refs;
}

AttentionAgent::Proposal AttentionAgent::propose_location(
    const std::vector<double>& hidden, Rng& rng, bool greedy) const {
  Proposal p;
  location_head_.forward(hidden.data(), p.mu_pre);
  p.mu[0] = stable_sigmoid(p.mu_pre[0]);
  p.mu[1] = stable_sigmoid(p.mu_pre[1]);
  const double sigma = std::sqrt(cfg_.policy.location_variance);
  for (int d = 0; d < 2; ++d)
    p.z[d] = greedy ? p.mu[d] : p.mu[d] + sigma * rng.normal();
  p.loc.x = std::clamp(p.z[0], 0.0, 1.0);
  p.loc.y = std::clamp(p.z[1], 0.0, 1.0);
  const double s2 = cfg_.policy.location_variance;
  p.log_prob = 0.0;
  for (int d = 0; d < 2; ++d)
    p.log_prob += -0.5 * std::log(kTwoPi * s2) -
                  (p.z[d] - p.mu[d]) * (p.z[d] - p.mu[d]) / (2.0 * s2);
  return p;
}

double AttentionAgent::predict_score(const std::vector<double>& hidden) const {
  double pre = 0.0;
  score_head_.forward(hidden.data(), &pre);
  return stable_sigmoid(pre);
}

double AttentionAgent::baseline_value(const std::vector<double>& hidden) const {
  double v = 0.0;
  baseline_head_.forward(hidden.data(), &v);
  return v;
}

Trajectory AttentionAgent::run_episode(
    const PageSample& page, Rng* rng, bool greedy,
    const std::vector<NormLocation>* fixed_locs,
    const std::vector<std::pair<double, double>>* fixed_zs) const {
  const int T = fixed_locs   ? static_cast<int>(fixed_locs->size())
                : fixed_zs   ? static_cast<int>(fixed_zs->size())
                             : cfg_.policy.steps_per_episode;
  Trajectory traj;
  traj.page = &page;
  if (rng) traj.seed = rng->seed();
  traj.steps.resize(static_cast<std::size_t>(T));

  std::vector<double> h = h0_;
  std::vector<double> h_next(cfg_.hidden_dim);
  double prev_score = 0.0;  // i_0 := 0

  for (int t = 0; t < T; ++t) {
    StepRecord& rec = traj.steps[static_cast<std::size_t>(t)];
    if (fixed_locs) {
      rec.loc = (*fixed_locs)[static_cast<std::size_t>(t)];
      rec.from_policy = false;
    } else if (fixed_zs) {
      Proposal p;
      location_head_.forward(h.data(), p.mu_pre);
      p.mu[0] = stable_sigmoid(p.mu_pre[0]);
      p.mu[1] = stable_sigmoid(p.mu_pre[1]);
      p.z[0] = (*fixed_zs)[static_cast<std::size_t>(t)].first;
      p.z[1] = (*fixed_zs)[static_cast<std::size_t>(t)].second;
      const double s2 = cfg_.policy.location_variance;
      p.log_prob = 0.0;
      for (int d = 0; d < 2; ++d)
        p.log_prob += -0.5 * std::log(kTwoPi * s2) -
                      (p.z[d] - p.mu[d]) * (p.z[d] - p.mu[d]) / (2.0 * s2);
      rec.from_policy = true;
      std::copy(p.mu_pre, p.mu_pre + 2, rec.mu_pre);
      std::copy(p.mu, p.mu + 2, rec.mu);
      std::copy(p.z, p.z + 2, rec.z);
      rec.log_prob = p.log_prob;
      rec.loc.x = std::clamp(p.z[0], 0.0, 1.0);
      rec.loc.y = std::clamp(p.z[1], 0.0, 1.0);
    } else if (t == 0 && cfg_.policy.first_location == FirstLocation::uniform) {
      rec.loc.x = rng->uniform();
      rec.loc.y = rng->uniform();
      rec.from_policy = false;
    } else {
      Proposal p = propose_location(h, *rng, greedy);
      rec.from_policy = true;
      std::copy(p.mu_pre, p.mu_pre + 2, rec.mu_pre);
      std::copy(p.mu, p.mu + 2, rec.mu);
      std::copy(p.z, p.z + 2, rec.z);
      rec.log_prob = p.log_prob;
      rec.loc = p.loc;
    }

    rec.patch = extract_patch(page, rec.loc, cfg_.encoder.input_side);
    encoder_.forward(rec.patch.pixels, rec.feature, &rec.enc_cache);
    gru_.forward(h.data(), rec.feature.data(), h_next.data(), &rec.gru_cache);
    rec.hidden = h_next;
    rec.score = predict_score(rec.hidden);
    rec.reward = shape_reward(rec.score, prev_score, cfg_.reward);
    prev_score = rec.score;
    h = rec.hidden;
  }
  return traj;
}

Trajectory AttentionAgent::rollout_episode(const PageSample& page, Rng rng,
                                           bool greedy) const {
  return run_episode(page, &rng, greedy, nullptr, nullptr);
}

Trajectory AttentionAgent::scripted_rollout(
    const PageSample& page, const std::vector<NormLocation>& locs) const {
  return run_episode(page, nullptr, false, &locs, nullptr);
}

Trajectory AttentionAgent::scripted_rollout_z(
    const PageSample& page,
    const std::vector<std::pair<double, double>>& zs) const {
  return run_episode(page, nullptr, false, nullptr, &zs);
}

void AttentionAgent::episode_backward(const Trajectory& traj,
                                      const std::vector<double>& dscore,
                                      const std::vector<double>& dlogprob) {
  const std::size_t T = traj.steps.size();
  const double s2 = cfg_.policy.location_variance;
  std::vector<double> dh_next(cfg_.hidden_dim, 0.0);
  std::vector<double> dh(cfg_.hidden_dim);
  std::vector<double> dg(cfg_.encoder.feature_dim);

  auto add_policy_term = [&](const StepRecord& rec, double w, const double* x,
                             double* dx) {
    double dmu_pre[2];
    for (int d = 0; d < 2; ++d) {
      const double dmu = w * (rec.z[d] - rec.mu[d]) / s2;
      dmu_pre[d] = dmu * rec.mu[d] * (1.0 - rec.mu[d]);
    }
    location_head_.backward(x, dmu_pre, dx);
  };

  for (std::size_t t = T; t-- > 0;) {
    const StepRecord& rec = traj.steps[t];
    dh = dh_next;
    std::fill(dh_next.begin(), dh_next.end(), 0.0);

    if (t < dscore.size() && dscore[t] != 0.0) {
      const double dpre = dscore[t] * rec.score * (1.0 - rec.score);
      score_head_.backward(rec.hidden.data(), &dpre, dh.data());
    }
    if (t + 1 < T && traj.steps[t + 1].from_policy && t + 1 < dlogprob.size() &&
        dlogprob[t + 1] != 0.0) {
      add_policy_term(traj.steps[t + 1], dlogprob[t + 1], rec.hidden.data(),
                      dh.data());
    }

    std::fill(dg.begin(), dg.end(), 0.0);
    gru_.backward(rec.gru_cache, dh.data(), dh_next.data(), dg.data());
    encoder_.backward(rec.enc_cache, dg.data());
  }

  if (!traj.steps.empty() && traj.steps[0].from_policy && !dlogprob.empty() &&
      dlogprob[0] != 0.0) {
    add_policy_term(traj.steps[0], dlogprob[0], h0_.data(), nullptr);
  }
}

void AttentionAgent::policy_gradient_update(const std::vector<Trajectory>& batch,
                                            SgdMomentum& opt) {
  if (batch.empty()) throw std::invalid_argument("empty trajectory batch");
  ParamRefs params = policy_params();
  zero_grads(params);

  const double inv_n = 1.0 / static_cast<double>(batch.size());
  const std::vector<double> no_dscore;
  for (const Trajectory& traj : batch) {
    const auto returns = discounted_returns(traj.rewards(), cfg_.policy.discount);
    std::vector<double> dlogprob(traj.steps.size(), 0.0);
    for (std::size_t t = 0; t < traj.steps.size(); ++t) {
      if (!traj.steps[t].from_policy) continue;
      const std::vector<double>& h_from =
          t == 0 ? h0_ : traj.steps[t - 1].hidden;
      const double advantage = returns[t] - baseline_value(h_from);
      dlogprob[t] = -advantage * inv_n;  // minimize -J
    }
    episode_backward(traj, no_dscore, dlogprob);
  }
  opt.step(params);
}

double AttentionAgent::train_baseline(const std::vector<Trajectory>& batch,
                                      SgdMomentum& opt) {
  ParamRefs params = baseline_params();
  zero_grads(params);

  std::size_t n_pairs = 0;
  for (const Trajectory& traj : batch)
    for (const StepRecord& rec : traj.steps)
      if (rec.from_policy) ++n_pairs;
  if (n_pairs == 0) return 0.0;

  double mse = 0.0;
  for (const Trajectory& traj : batch) {
    const auto returns = discounted_returns(traj.rewards(), cfg_.policy.discount);
    for (std::size_t t = 0; t < traj.steps.size(); ++t) {
      if (!traj.steps[t].from_policy) continue;
      const std::vector<double>& h_from =
          t == 0 ? h0_ : traj.steps[t - 1].hidden;
      const double pred = baseline_value(h_from);
      const double err = pred - returns[t];
      mse += err * err;
      const double dpred = 2.0 * err / static_cast<double>(n_pairs);
      baseline_head_.backward(h_from.data(), &dpred, nullptr);
    }
  }
  opt.step(params);
  return mse / static_cast<double>(n_pairs);
}

double AttentionAgent::scorer_step_on_trajectories(
    const std::vector<Trajectory>& batch,
    const std::vector<std::vector<double>>& targets, SgdMomentum& opt) {
  ParamRefs params = policy_params();
  zero_grads(params);

  std::size_t total = 0;
  for (const Trajectory& traj : batch) total += traj.steps.size();
  if (total == 0) return 0.0;

  double mse = 0.0;
  const std::vector<double> no_dlogprob;
  for (std::size_t n = 0; n < batch.size(); ++n) {
    const Trajectory& traj = batch[n];
    std::vector<double> dscore(traj.steps.size(), 0.0);
    for (std::size_t t = 0; t < traj.steps.size(); ++t) {
      const double err = traj.steps[t].score - targets[n][t];
      mse += err * err;
      dscore[t] = 2.0 * err / static_cast<double>(total);
    }
    episode_backward(traj, dscore, no_dlogprob);
  }
  opt.step(params);
  return mse / static_cast<double>(total);
}

double AttentionAgent::train_scorer(const std::vector<Patch>& labelled,
                                    SgdMomentum& opt, int epochs) {
  if (labelled.empty()) throw std::invalid_argument("no labelled patches");
  for (const Patch& p : labelled)
    if (!p.actual_score)
      throw std::invalid_argument("labelled patch lacks actual_score");

  ParamRefs params = policy_params();
  double mse = 0.0;
  for (int e = 0; e < epochs; ++e) {
    zero_grads(params);
    mse = 0.0;
    for (const Patch& p : labelled) {
      StepRecord rec;
      encoder_.forward(p.pixels, rec.feature, &rec.enc_cache);
      rec.hidden.resize(cfg_.hidden_dim);
      gru_.forward(h0_.data(), rec.feature.data(), rec.hidden.data(),
                   &rec.gru_cache);
      rec.score = predict_score(rec.hidden);
      const double err = rec.score - *p.actual_score;
      mse += err * err;

      Trajectory traj;
      traj.steps.push_back(std::move(rec));
      const std::vector<double> dscore = {
          2.0 * err / static_cast<double>(labelled.size())};
      episode_backward(traj, dscore, {});
    }
    mse /= static_cast<double>(labelled.size());
    opt.step(params);
  }
  return mse;
}

double AttentionAgent::score_patch(const Patch& p) const {
  std::vector<double> feature;
  encoder_.forward(p.pixels, feature, nullptr);
  std::vector<double> h(cfg_.hidden_dim);
  gru_.forward(h0_.data(), feature.data(), h.data(), nullptr);
  return predict_score(h);
}

std::vector<ScoredPatch> AttentionAgent::select_top_k(const PageSample& page,
                                                      int k, Rng rng) const {
  if (k < 1) throw std::invalid_argument("k must be >= 1");
  const std::size_t side = cfg_.encoder.input_side;
  if (page.pixels.height < side || page.pixels.width < side)
    throw std::invalid_argument("page smaller than patch");

  struct Visit {
    NormLocation loc;
    double px, py;  // pixel coords
    double score;
  };
  std::vector<Visit> pool;
  auto pool_trajectory = [&](const Trajectory& traj) {
    for (const StepRecord& rec : traj.steps) {
      Visit v;
      v.loc = rec.loc;
      v.px = static_cast<double>(loc_to_pixel(rec.loc.x, page.pixels.width));
      v.py = static_cast<double>(loc_to_pixel(rec.loc.y, page.pixels.height));
      v.score = rec.score;
      pool.push_back(v);
    }
  };

  const int T = cfg_.policy.steps_per_episode;
  int episodes = cfg_.policy.select_episodes;
  episodes = std::max(episodes, (k + T - 1) / T);
  for (int e = 0; e < episodes; ++e)
    pool_trajectory(rollout_episode(page, rng.derive(static_cast<std::uint64_t>(e))));

  const double min_dist = static_cast<double>(side) / 2.0;
  auto pick = [&](std::vector<Visit>& candidates, std::vector<Visit>& accepted) {
    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const Visit& a, const Visit& b) { return a.score > b.score; });
    for (const Visit& v : candidates) {
      if (static_cast<int>(accepted.size()) >= k) break;
      bool clash = false;
      for (const Visit& a : accepted) {
        if (std::hypot(v.px - a.px, v.py - a.py) < min_dist) {
          clash = true;
          break;
        }
      }
      if (!clash) accepted.push_back(v);
    }
  };

  std::vector<Visit> accepted;
  pick(pool, accepted);

  // Top up with greedy rollouts from fresh starts.
  for (int attempt = 0;
       static_cast<int>(accepted.size()) < k && attempt < 32; ++attempt) {
    pool.clear();
    pool_trajectory(rollout_episode(
        page, rng.derive(1000 + static_cast<std::uint64_t>(attempt)), true));
    pick(pool, accepted);
  }
  // Degenerate pages may not offer k separated locations; relax the radius
  // rather than return fewer than k.
  while (static_cast<int>(accepted.size()) < k) {
    Visit v;
    v.loc.x = rng.uniform();
    v.loc.y = rng.uniform();
    v.px = static_cast<double>(loc_to_pixel(v.loc.x, page.pixels.width));
    v.py = static_cast<double>(loc_to_pixel(v.loc.y, page.pixels.height));
    Patch p = extract_patch(page, v.loc, side);
    v.score = score_patch(p);
    accepted.push_back(v);
  }

  std::stable_sort(accepted.begin(), accepted.end(),
                   [](const Visit& a, const Visit& b) { return a.score > b.score; });
  accepted.resize(static_cast<std::size_t>(k));

  std::vector<ScoredPatch> out;
  out.reserve(accepted.size());
  for (const Visit& v : accepted) {
    ScoredPatch sp;
    sp.patch = extract_patch(page, v.loc, side);
    sp.score = v.score;
    out.push_back(std::move(sp));
  }
  return out;
}

std::vector<AttentionAgent::TrainLogEntry> AttentionAgent::train(
    const std::vector<const PageSample*>& pages, Rng rng, const SgdConfig& sgd,
    std::ostream* log) {
  if (pages.empty()) throw std::invalid_argument("no training pages");
  SgdConfig scorer_sgd = sgd;
  if (cfg_.scorer_lr > 0.0) scorer_sgd.learning_rate = cfg_.scorer_lr;
  SgdConfig policy_sgd = sgd;
  if (cfg_.policy_lr > 0.0) policy_sgd.learning_rate = cfg_.policy_lr;
  SgdMomentum opt_policy(policy_sgd), opt_baseline(sgd), opt_scorer(scorer_sgd);
  SgdMomentum opt_scorer_traj(sgd);

  const int B = std::max(1, cfg_.policy.episodes_per_update);
  const int epochs = std::max(1, cfg_.policy.episodes / B);
  const int top_m = std::min(cfg_.policy.steps_per_episode, 8);

  // Scorer regression runs through the deployed regime: scripted episodes of
  // coverage locations (uniform plus a peak-biased fraction) with oracle
  // targets, so both the one-step and the in-history score paths stay
  // calibrated no matter where the current policy wanders.
  const int T = cfg_.policy.steps_per_episode;
  auto coverage_trajectory = [&](Rng& r, Trajectory* traj,
                                 std::vector<double>* tgt) {
    const PageSample& page = *pages[r.uniform_index(pages.size())];
    std::vector<NormLocation> locs(static_cast<std::size_t>(T));
    for (auto& l : locs) {
      if (!page.planted.empty() && r.uniform() < 0.25) {
        const auto& g = page.planted[r.uniform_index(page.planted.size())];
        const double jitter = 1.5 * cfg_.gt_sigma;
        l.x = std::clamp(g.center.x + r.uniform(-jitter, jitter), 0.0, 1.0);
        l.y = std::clamp(g.center.y + r.uniform(-jitter, jitter), 0.0, 1.0);
      } else {
        l.x = r.uniform();
        l.y = r.uniform();
      }
    }
    *traj = scripted_rollout(page, locs);
    tgt->resize(locs.size());
    for (std::size_t t = 0; t < locs.size(); ++t)
      (*tgt)[t] = ground_truth_score(page, locs[t], cfg_.gt_sigma);
  };
  auto scorer_refine_step = [&](Rng& r, const std::vector<Trajectory>* on_policy) {
    std::vector<Trajectory> trajs(3);
    std::vector<std::vector<double>> tgts(3);
    for (int c = 0; c < 3; ++c) coverage_trajectory(r, &trajs[c], &tgts[c]);
    if (on_policy && !on_policy->empty()) {
      const Trajectory& src = (*on_policy)[r.uniform_index(on_policy->size())];
      std::vector<NormLocation> locs;
      for (const StepRecord& rec : src.steps) locs.push_back(rec.loc);
      Trajectory revisit = scripted_rollout(*src.page, locs);
      std::vector<double> tgt(locs.size());
      for (std::size_t t = 0; t < locs.size(); ++t)
        tgt[t] = ground_truth_score(*src.page, locs[t], cfg_.gt_sigma);
      trajs.push_back(std::move(revisit));
      tgts.push_back(std::move(tgt));
    }
    return scorer_step_on_trajectories(trajs, tgts, opt_scorer);
  };
  constexpr int kScorerSteps = 6;

  // Warmup phase (sequential mode): the reward field is usable from the
  // first RL epoch. One warmup epoch sees roughly 32k labelled locations.
  if (cfg_.scorer_warmup_epochs > 0) {
    Rng warm_rng = rng.derive(0xabcdULL);
    const int steps_per_epoch = std::max(1, 32768 / (4 * T));
    for (int epoch = 0; epoch < cfg_.scorer_warmup_epochs; ++epoch)
      for (int s = 0; s < steps_per_epoch; ++s)
        scorer_refine_step(warm_rng, nullptr);
  }

  std::vector<TrainLogEntry> history;
  for (int epoch = 0; epoch < epochs; ++epoch) {
    std::vector<Trajectory> batch;
    std::vector<std::vector<double>> targets;
    Rng epoch_rng = rng.derive(static_cast<std::uint64_t>(epoch));
    double mean_return = 0.0, mean_top = 0.0;
    for (int b = 0; b < B; ++b) {
      const PageSample& page = *pages[epoch_rng.uniform_index(pages.size())];
      Trajectory traj = rollout_episode(
          page, epoch_rng.derive(100 + static_cast<std::uint64_t>(b)));
      std::vector<double> tgt(traj.steps.size());
      std::vector<double> scores(traj.steps.size());
      for (std::size_t t = 0; t < traj.steps.size(); ++t) {
        tgt[t] = ground_truth_score(page, traj.steps[t].loc, cfg_.gt_sigma);
        scores[t] = traj.steps[t].score;
      }
      mean_return += discounted_return(traj.rewards(), cfg_.policy.discount, 0);
      std::sort(scores.begin(), scores.end(), std::greater<>());
      for (int j = 0; j < top_m; ++j) mean_top += scores[static_cast<std::size_t>(j)];
      batch.push_back(std::move(traj));
      targets.push_back(std::move(tgt));
    }
    mean_return /= B;
    mean_top /= static_cast<double>(B * top_m);

    policy_gradient_update(batch, opt_policy);
    const double baseline_mse = train_baseline(batch, opt_baseline);
    double scorer_mse =
        scorer_step_on_trajectories(batch, targets, opt_scorer_traj);

    for (int s = 0; s < kScorerSteps; ++s) {
      std::vector<Patch> minibatch;
      for (std::size_t j = 0; j < kScorerBatch / 2; ++j)
        minibatch.push_back(
            labelled_at(coverage[epoch_rng.uniform_index(coverage.size())]));
      for (std::size_t j = 0; j < std::min(kScorerBatch / 2, replay.size()); ++j)
        minibatch.push_back(replay[epoch_rng.uniform_index(replay.size())]);
      train_scorer(minibatch, opt_scorer, 1);
    }

    TrainLogEntry entry{epoch, mean_return, baseline_mse, scorer_mse, mean_top};
    history.push_back(entry);
    if (log) {
      char buf[160];
      std::snprintf(buf, sizeof buf, "%d,%.6f,%.6f,%.6f,%.6f\n", entry.epoch,
                    entry.mean_return, entry.baseline_mse, entry.scorer_mse,
                    entry.mean_top_score);
      (*log) << buf;
    }
  }
  return history;
}

}  // namespace idio
