#include "idio/wver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <stdexcept>

#include "idio/kernels.hpp"

namespace idio {

const char* aggregation_name(Aggregation a) {
  return a == Aggregation::maf ? "maf" : "xaf";
}

Aggregation aggregation_from_name(const std::string& name) {
  if (name == "maf") return Aggregation::maf;
  if (name == "xaf") return Aggregation::xaf;
  throw std::invalid_argument("unknown aggregation: " + name);
}

namespace {

void check_features(const std::vector<std::vector<double>>& features) {
  if (features.empty()) throw std::invalid_argument("no features to aggregate");
  for (const auto& f : features)
    if (f.size() != features[0].size())
      throw std::invalid_argument("ragged feature lengths");
}

}  // namespace

std::vector<double> maf(const std::vector<std::vector<double>>& features) {
  check_features(features);
  const std::size_t q = features[0].size();
  std::vector<double> out(q, 0.0);
  for (const auto& f : features) kern::axpy(1.0, f.data(), out.data(), q);
  // divide, not multiply by the reciprocal: keeps the componentwise mean
  // bit-identical to a plain loop oracle
  const double k = static_cast<double>(features.size());
  for (double& v : out) v /= k;
  return out;
}

std::vector<double> xaf(const std::vector<std::vector<double>>& features) {
  check_features(features);
  std::vector<double> out = features[0];
  for (std::size_t j = 1; j < features.size(); ++j)
    for (std::size_t x = 0; x < out.size(); ++x)
      out[x] = std::max(out[x], features[j][x]);
  return out;
}

double euclidean_distance(const std::vector<double>& a,
                          const std::vector<double>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("length mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return std::sqrt(acc);
}

double triplet_loss(const std::vector<double>& va, const std::vector<double>& vp,
                    const std::vector<double>& vn, double margin) {
  if (margin <= 0.0) throw std::invalid_argument("margin must be > 0");
  return std::max(euclidean_distance(va, vp) - euclidean_distance(va, vn) + margin,
                  0.0);
}

double triplet_gradients(const std::vector<double>& va,
                         const std::vector<double>& vp,
                         const std::vector<double>& vn, double margin,
                         std::vector<double>& dva, std::vector<double>& dvp,
                         std::vector<double>& dvn) {
  const double d_ap = euclidean_distance(va, vp);
  const double d_an = euclidean_distance(va, vn);
  const double l = d_ap - d_an + margin;
  if (l <= 0.0) return 0.0;
  for (std::size_t x = 0; x < va.size(); ++x) {
    const double g_ap = d_ap > 1e-12 ? (va[x] - vp[x]) / d_ap : 0.0;
    const double g_an = d_an > 1e-12 ? (va[x] - vn[x]) / d_an : 0.0;
    dva[x] += g_ap - g_an;
    dvp[x] -= g_ap;
    dvn[x] += g_an;
  }
  return l;
}

std::vector<TripletIdx> mine_hard_triplets(
    const std::vector<std::vector<double>>& embeddings,
    const std::vector<int>& labels) {
  if (embeddings.size() != labels.size())
    throw std::invalid_argument("embeddings/labels length mismatch");
  std::vector<TripletIdx> out;
  for (std::size_t a = 0; a < embeddings.size(); ++a) {
    double worst_pos = -1.0, best_neg = std::numeric_limits<double>::infinity();
    std::size_t p_idx = a, n_idx = a;
    bool has_pos = false, has_neg = false;
    for (std::size_t j = 0; j < embeddings.size(); ++j) {
      if (j == a) continue;
      const double d = euclidean_distance(embeddings[a], embeddings[j]);
      if (labels[j] == labels[a]) {
        if (d > worst_pos) {
          worst_pos = d;
          p_idx = j;
          has_pos = true;
        }
      } else if (d < best_neg) {
        best_neg = d;
        n_idx = j;
        has_neg = true;
      }
    }
    if (has_pos && has_neg) out.push_back({a, p_idx, n_idx});
  }
  return out;
}

SweepResult balanced_accuracy_sweep(const std::vector<double>& pairs_same,
                                    const std::vector<double>& pairs_diff,
                                    double step) {
  if (pairs_same.empty() || pairs_diff.empty())
    throw std::invalid_argument("empty pair set");
  if (step <= 0.0) throw std::invalid_argument("step must be > 0");

  std::vector<double> same = pairs_same, diff = pairs_diff;
  std::sort(same.begin(), same.end());
  std::sort(diff.begin(), diff.end());
  const double lo = std::min(same.front(), diff.front());
  const double hi = std::max(same.back(), diff.back());

  auto eval = [&](double t) {
    const double tpr =
        static_cast<double>(std::upper_bound(same.begin(), same.end(), t) -
                            same.begin()) /
        static_cast<double>(same.size());
    const double tnr =
        static_cast<double>(diff.end() -
                            std::upper_bound(diff.begin(), diff.end(), t)) /
        static_cast<double>(diff.size());
    return std::pair<double, double>(tpr, tnr);
  };

  SweepResult best;
  best.accuracy = -1.0;
  for (std::size_t i = 0;; ++i) {
    const double t = std::min(lo + static_cast<double>(i) * step, hi);
    const auto [tpr, tnr] = eval(t);
    const double acc = 0.5 * (tpr + tnr);
    if (acc > best.accuracy) {
      best.accuracy = acc;
      best.threshold = t;
      best.tpr = tpr;
      best.tnr = tnr;
    }
    if (t >= hi) break;
  }
  return best;
}

WriterVerify::WriterVerify(WvConfig cfg)
    : cfg_(cfg), encoder_(cfg.encoder), threshold_({1}) {
  if (cfg_.triplet.margin <= 0.0) throw std::invalid_argument("margin must be > 0");
  if (cfg_.encoder.input_side != cfg_.pad_target)
    throw std::invalid_argument("WV encoder input must equal pad target");
}

void WriterVerify::init(Rng& rng) { encoder_.init(rng); }

ParamRefs WriterVerify::params() {
  ParamRefs refs;
  encoder_.collect("wv.encoder", refs);
  return refs;
}

ParamRefs WriterVerify::checkpoint_params() {
  ParamRefs refs = params();
  refs.push_back({"wv.threshold", &threshold_, nullptr});
  return refs;
}

PageEmbedding WriterVerify::embed(const SelectedPage& sp) const {
  if (sp.patches.empty()) throw std::invalid_argument("page has no patches");
  std::vector<std::vector<double>> feats;
  feats.reserve(sp.patches.size());
  for (const auto& scored : sp.patches) {
    Patch padded = pad_patch(scored.patch, cfg_.pad_target, *sp.page);
    std::vector<double> f;
    encoder_.forward(padded.pixels, f, nullptr);
    feats.push_back(std::move(f));
  }
  PageEmbedding emb;
  emb.values = cfg_.mode == Aggregation::maf ? maf(feats) : xaf(feats);
  emb.aggregation = cfg_.mode;
  emb.page_id = sp.page->id;
  return emb;
}

double WriterVerify::train(const std::vector<SelectedPage>& train_pages, Rng rng,
                           std::ostream* log) {
  if (train_pages.empty()) throw std::invalid_argument("no training pages");

  std::map<int, std::vector<std::size_t>> by_writer;
  for (std::size_t i = 0; i < train_pages.size(); ++i)
    by_writer[train_pages[i].page->writer_id].push_back(i);
  std::vector<int> writers;
  for (const auto& [w, pages] : by_writer)
    if (pages.size() >= 2) writers.push_back(w);
  if (writers.size() < 2)
    throw std::invalid_argument("need >= 2 writers with >= 2 pages each");

  ParamRefs refs = params();
  SgdMomentum opt(cfg_.sgd);
  const std::size_t q = cfg_.encoder.feature_dim;

  double last_loss = 0.0;
  for (int epoch = 0; epoch < cfg_.epochs; ++epoch) {
    Rng erng = rng.derive(static_cast<std::uint64_t>(epoch));

    // P writers x K pages batch.
    std::vector<int> pool = writers;
    for (std::size_t i = 0; i + 1 < pool.size(); ++i)
      std::swap(pool[i], pool[i + erng.uniform_index(pool.size() - i)]);
    const std::size_t p_count = std::min<std::size_t>(
        static_cast<std::size_t>(cfg_.triplet.batch_writers), pool.size());
    std::vector<std::size_t> batch;
    std::vector<int> labels;
    for (std::size_t wi = 0; wi < p_count; ++wi) {
      auto pages = by_writer[pool[wi]];
      for (std::size_t i = 0; i + 1 < pages.size(); ++i)
        std::swap(pages[i], pages[i + erng.uniform_index(pages.size() - i)]);
      const std::size_t take = std::min<std::size_t>(
          static_cast<std::size_t>(cfg_.triplet.batch_per_writer), pages.size());
      for (std::size_t i = 0; i < take; ++i) {
        batch.push_back(pages[i]);
        labels.push_back(pool[wi]);
      }
    }

    std::vector<std::vector<double>> embeddings(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i)
      embeddings[i] = embed(train_pages[batch[i]]).values;

    const auto triplets = mine_hard_triplets(embeddings, labels);
    std::vector<std::vector<double>> demb(batch.size(),
                                          std::vector<double>(q, 0.0));
    double loss = 0.0;
    for (const auto& tri : triplets) {
      loss += triplet_gradients(embeddings[tri.anchor], embeddings[tri.positive],
                                embeddings[tri.negative], cfg_.triplet.margin,
                                demb[tri.anchor], demb[tri.positive],
                                demb[tri.negative]);
    }
    last_loss = loss;

    if (loss > 0.0) {
      zero_grads(refs);
      for (std::size_t i = 0; i < batch.size(); ++i) {
        bool any = false;
        for (double v : demb[i])
          if (v != 0.0) {
            any = true;
            break;
          }
        if (!any) continue;
        const SelectedPage& sp = train_pages[batch[i]];
        // Recompute with caches, then push d_embedding through the
        // aggregation into each patch feature.
        std::vector<ConvEncoder::Cache> caches(sp.patches.size());
        std::vector<std::vector<double>> feats(sp.patches.size());
        for (std::size_t j = 0; j < sp.patches.size(); ++j) {
          Patch padded = pad_patch(sp.patches[j].patch, cfg_.pad_target, *sp.page);
          encoder_.forward(padded.pixels, feats[j], &caches[j]);
        }
        const std::size_t k = sp.patches.size();
        if (cfg_.mode == Aggregation::maf) {
          std::vector<double> dfeat(q);
          for (std::size_t x = 0; x < q; ++x)
            dfeat[x] = demb[i][x] / static_cast<double>(k);
          for (std::size_t j = 0; j < k; ++j)
            encoder_.backward(caches[j], dfeat.data());
        } else {
          std::vector<std::vector<double>> dfeats(k, std::vector<double>(q, 0.0));
          for (std::size_t x = 0; x < q; ++x) {
            std::size_t arg = 0;
            for (std::size_t j = 1; j < k; ++j)
              if (feats[j][x] > feats[arg][x]) arg = j;
            dfeats[arg][x] = demb[i][x];
          }
          for (std::size_t j = 0; j < k; ++j)
            encoder_.backward(caches[j], dfeats[j].data());
        }
      }
      opt.step(refs);
    }

    if (log) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "%d,%.6f\n", epoch, loss);
      (*log) << buf;
    }
  }
  return last_loss;
}

}  // namespace idio
