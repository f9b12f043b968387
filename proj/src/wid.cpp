#include "idio/wid.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace idio {

double patch_weight(double i_j, const FusionConfig& cfg) {
  if (i_j < 0.0 || i_j > 1.0) throw std::invalid_argument("score out of [0,1]");
  return i_j > cfg.weight_floor_threshold ? cfg.alpha_w * i_j : 1.0;
}

FuseResult fuse_decisions(const std::vector<std::vector<double>>& probs,
                          const std::vector<double>& weights) {
  if (probs.empty() || probs.size() != weights.size())
    throw std::invalid_argument("fuse_decisions: empty or mismatched inputs");
  const std::size_t d = probs[0].size();
  FuseResult out;
  out.probs.assign(d, 0.0);
  double total = 0.0;
  for (std::size_t j = 0; j < probs.size(); ++j) {
    if (probs[j].size() != d)
      throw std::invalid_argument("fuse_decisions: ragged probability vectors");
    if (!(weights[j] > 0.0))
      throw std::invalid_argument("fuse_decisions: weights must be > 0");
    for (std::size_t c = 0; c < d; ++c) out.probs[c] += weights[j] * probs[j][c];
    total += weights[j];
  }
  for (double& v : out.probs) v /= total;
  out.writer_id = 0;
  for (std::size_t c = 1; c < d; ++c)
    if (out.probs[c] > out.probs[static_cast<std::size_t>(out.writer_id)])
      out.writer_id = static_cast<int>(c);
  return out;
}

double top_n_accuracy(const std::vector<std::vector<double>>& predictions,
                      const std::vector<int>& labels, int n) {
  if (predictions.size() != labels.size())
    throw std::invalid_argument("predictions/labels length mismatch");
  if (predictions.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t p = 0; p < predictions.size(); ++p) {
    const auto& z = predictions[p];
    const std::size_t label = static_cast<std::size_t>(labels[p]);
    if (label >= z.size()) throw std::invalid_argument("label out of range");
    std::size_t rank = 0;
    for (std::size_t c = 0; c < z.size(); ++c) {
      if (z[c] > z[label] || (z[c] == z[label] && c < label)) ++rank;
    }
    if (rank < static_cast<std::size_t>(n)) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(predictions.size());
}

WriterId::WriterId(WiConfig cfg)
    : cfg_(cfg),
      encoder_(cfg.encoder),
      head_(static_cast<std::size_t>(cfg.n_writers), cfg.encoder.feature_dim) {
  if (cfg_.n_writers < 2) throw std::invalid_argument("need d >= 2 writers");
  if (cfg_.encoder.input_side != cfg_.pad_target)
    throw std::invalid_argument("WI encoder input must equal pad target");
}

void WriterId::init(Rng& rng) {
  encoder_.init(rng);
  head_.init(rng);
}

ParamRefs WriterId::params() {
  ParamRefs refs;
  encoder_.collect("wi.encoder", refs);
  head_.collect("wi.head", refs);
  return refs;
}

std::vector<double> WriterId::patch_class_probs(const Patch& padded,
                                                bool train_mode, Rng* rng) const {
  std::vector<double> feature;
  encoder_.forward(padded.pixels, feature, nullptr);
  if (train_mode) {
    if (!rng) throw std::invalid_argument("train mode needs an rng");
    const auto mask = dropout_mask(feature.size(), cfg_.dropout_rate, *rng);
    for (std::size_t i = 0; i < feature.size(); ++i) feature[i] *= mask[i];
  }
  std::vector<double> logits(static_cast<std::size_t>(cfg_.n_writers));
  head_.forward(feature.data(), logits.data());
  std::vector<double> probs(logits.size());
  softmax_vec(logits.data(), probs.data(), logits.size());
  return probs;
}

double WriterId::train(const std::vector<SelectedPage>& train_pages, Rng rng,
                       std::ostream* log) {
  struct Example {
    Patch padded;
    int label;
  };
  std::vector<Example> examples;
  for (const auto& sp : train_pages) {
    if (sp.page->writer_id < 0 || sp.page->writer_id >= cfg_.n_writers)
      throw std::invalid_argument("writer label outside [0,d)");
    for (const auto& scored : sp.patches)
      examples.push_back(
          {pad_patch(scored.patch, cfg_.pad_target, *sp.page), sp.page->writer_id});
  }
  if (examples.empty()) throw std::invalid_argument("no training patches");

  SgdMomentum opt(cfg_.sgd);
  ParamRefs refs = params();
  const std::size_t d = static_cast<std::size_t>(cfg_.n_writers);

  std::vector<std::size_t> order(examples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  double epoch_loss = 0.0;
  for (int epoch = 0; epoch < cfg_.epochs; ++epoch) {
    Rng erng = rng.derive(static_cast<std::uint64_t>(epoch));
    for (std::size_t i = 0; i + 1 < order.size(); ++i) {
      const std::size_t j = i + erng.uniform_index(order.size() - i);
      std::swap(order[i], order[j]);
    }
    epoch_loss = 0.0;
    std::size_t done = 0;
    while (done < order.size()) {
      const std::size_t batch =
          std::min<std::size_t>(static_cast<std::size_t>(cfg_.batch_size),
                                order.size() - done);
      zero_grads(refs);
      for (std::size_t b = 0; b < batch; ++b) {
        const Example& ex = examples[order[done + b]];
        ConvEncoder::Cache cache;
        std::vector<double> feature;
        encoder_.forward(ex.padded.pixels, feature, &cache);
        const auto mask = dropout_mask(feature.size(), cfg_.dropout_rate, erng);
        std::vector<double> dropped(feature.size());
        for (std::size_t i2 = 0; i2 < feature.size(); ++i2)
          dropped[i2] = feature[i2] * mask[i2];

        std::vector<double> logits(d), probs(d);
        head_.forward(dropped.data(), logits.data());
        softmax_vec(logits.data(), probs.data(), d);
        const std::size_t label = static_cast<std::size_t>(ex.label);
        epoch_loss += -std::log(std::max(probs[label], 1e-300));

        // d(CE)/dlogits = probs - onehot
        std::vector<double> dlogits = probs;
        dlogits[label] -= 1.0;
        const double inv = 1.0 / static_cast<double>(batch);
        for (double& v : dlogits) v *= inv;
        std::vector<double> dfeat(feature.size(), 0.0);
        head_.backward(dropped.data(), dlogits.data(), dfeat.data());
        for (std::size_t i2 = 0; i2 < dfeat.size(); ++i2) dfeat[i2] *= mask[i2];
        encoder_.backward(cache, dfeat.data());
      }
      opt.step(refs);
      done += batch;
    }
    epoch_loss /= static_cast<double>(examples.size());
    if (log) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "%d,%.6f\n", epoch, epoch_loss);
      (*log) << buf;
    }
  }
  return epoch_loss;
}

FuseResult WriterId::classify(const SelectedPage& sp) const {
  if (sp.patches.empty()) throw std::invalid_argument("page has no patches");
  std::vector<std::vector<double>> probs;
  std::vector<double> weights;
  for (const auto& scored : sp.patches) {
    Patch padded = pad_patch(scored.patch, cfg_.pad_target, *sp.page);
    probs.push_back(patch_class_probs(padded, false, nullptr));
    weights.push_back(patch_weight(scored.score, cfg_.fusion));
  }
  return fuse_decisions(probs, weights);
}

}  // namespace idio
