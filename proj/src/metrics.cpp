#include "idio/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace idio {

double mae_metric(const std::vector<PredictedPatch>& predictions,
                  const std::vector<TruthBox>& truths,
                  const std::function<double(NormLocation)>& oracle) {
  if (predictions.empty()) throw std::invalid_argument("no predictions");
  if (truths.empty() && !oracle) throw std::invalid_argument("no ground truth");

  double total = 0.0;
  for (const auto& pred : predictions) {
    double actual = 0.0;
    std::size_t matched = 0;
    for (const auto& t : truths) {
      if (iou(pred.box, t.box) > 0.5) {
        actual += t.actual;
        ++matched;
      }
    }
    if (matched > 0) {
      actual /= static_cast<double>(matched);
    } else if (oracle) {
      actual = oracle(pred.center);
    } else {
      throw std::invalid_argument("prediction with no IoU match and no oracle");
    }
    total += std::fabs(pred.predicted - actual);
  }
  return 100.0 * total / static_cast<double>(predictions.size());
}

double mis_metric(const std::vector<double>& actual_scores) {
  if (actual_scores.empty()) throw std::invalid_argument("no selected patches");
  double total = 0.0;
  for (double v : actual_scores) total += v;
  return total / static_cast<double>(actual_scores.size());
}

std::vector<TruthBox> truth_boxes(const PageSample& page, std::size_t side) {
  std::vector<TruthBox> out;
  out.reserve(page.planted.size());
  for (const auto& g : page.planted) {
    TruthBox t;
    t.box = patch_box(page, g.center, side);
    t.actual = std::clamp(g.rarity, 0.0, 1.0);
    out.push_back(t);
  }
  return out;
}

StandaloneScorer::StandaloneScorer(EncoderConfig cfg)
    : cfg_(cfg), encoder_(cfg), head_(1, cfg.feature_dim) {}

void StandaloneScorer::init(Rng& rng) {
  encoder_.init(rng);
  head_.init(rng);
}

ParamRefs StandaloneScorer::params() {
  ParamRefs refs;
  encoder_.collect("norl.encoder", refs);
  head_.collect("norl.head", refs);
  return refs;
}

double StandaloneScorer::train(const std::vector<Patch>& labelled, Rng rng,
                               const SgdConfig& sgd, int epochs, int batch_size) {
  if (labelled.empty()) throw std::invalid_argument("no labelled patches");
  for (const auto& p : labelled)
    if (!p.actual_score) throw std::invalid_argument("patch lacks actual_score");

  SgdMomentum opt(sgd);
  ParamRefs refs = params();
  std::vector<std::size_t> order(labelled.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  double mse = 0.0;
  for (int epoch = 0; epoch < epochs; ++epoch) {
    Rng erng = rng.derive(static_cast<std::uint64_t>(epoch));
    for (std::size_t i = 0; i + 1 < order.size(); ++i)
      std::swap(order[i], order[i + erng.uniform_index(order.size() - i)]);
    mse = 0.0;
    std::size_t done = 0;
    while (done < order.size()) {
      const std::size_t batch = std::min<std::size_t>(
          static_cast<std::size_t>(batch_size), order.size() - done);
      zero_grads(refs);
      for (std::size_t b = 0; b < batch; ++b) {
        const Patch& p = labelled[order[done + b]];
        ConvEncoder::Cache cache;
        std::vector<double> feature;
        encoder_.forward(p.pixels, feature, &cache);
        double pre = 0.0;
        head_.forward(feature.data(), &pre);
        const double y = stable_sigmoid(pre);
        const double err = y - *p.actual_score;
        mse += err * err;
        const double dpre = 2.0 * err * y * (1.0 - y) / static_cast<double>(batch);
        std::vector<double> dfeat(feature.size(), 0.0);
        head_.backward(feature.data(), &dpre, dfeat.data());
        encoder_.backward(cache, dfeat.data());
      }
      opt.step(refs);
      done += batch;
    }
    mse /= static_cast<double>(labelled.size());
  }
  return mse;
}

double StandaloneScorer::score(const Patch& p) const {
  std::vector<double> feature;
  encoder_.forward(p.pixels, feature, nullptr);
  double pre = 0.0;
  head_.forward(feature.data(), &pre);
  return stable_sigmoid(pre);
}

std::vector<Patch> window_training_patches(
    const std::vector<const PageSample*>& pages, std::size_t side,
    std::size_t stride, double sigma) {
  std::vector<Patch> out;
  for (const PageSample* page : pages) {
    for (Patch& p : slide_windows(*page, side, stride)) {
      p.actual_score = ground_truth_score(*page, p.center, sigma);
      out.push_back(std::move(p));
    }
  }
  return out;
}

std::vector<ScoredPatch> ablation_rand_k(const AttentionAgent& agent,
                                         const PageSample& page, int k, Rng rng) {
  if (k < 1) throw std::invalid_argument("k must be >= 1");
  std::vector<ScoredPatch> out;
  out.reserve(static_cast<std::size_t>(k));
  for (int j = 0; j < k; ++j) {
    NormLocation loc{rng.uniform(), rng.uniform()};
    ScoredPatch sp;
    sp.patch = extract_patch(page, loc, agent.config().encoder.input_side);
    sp.score = agent.score_patch(sp.patch);
    out.push_back(std::move(sp));
  }
  std::stable_sort(out.begin(), out.end(), [](const ScoredPatch& a,
                                              const ScoredPatch& b) {
    return a.score > b.score;
  });
  return out;
}

std::vector<Patch> ablation_all(const PageSample& page, std::size_t side,
                                std::size_t stride) {
  return slide_windows(page, side, stride);
}

std::vector<ScoredPatch> ablation_all_scored(const AttentionAgent& agent,
                                             const PageSample& page,
                                             std::size_t side,
                                             std::size_t stride) {
  std::vector<ScoredPatch> out;
  for (Patch& p : ablation_all(page, side, stride)) {
    ScoredPatch sp;
    sp.score = agent.score_patch(p);
    sp.patch = std::move(p);
    out.push_back(std::move(sp));
  }
  return out;
}

std::vector<ScoredPatch> ablation_no_rl(const PageSample& page, int k,
                                        std::size_t side, std::size_t stride,
                                        const StandaloneScorer& scorer) {
  std::vector<ScoredPatch> all;
  for (Patch& p : slide_windows(page, side, stride)) {
    ScoredPatch sp;
    sp.score = scorer.score(p);
    sp.patch = std::move(p);
    all.push_back(std::move(sp));
  }
  std::stable_sort(all.begin(), all.end(), [](const ScoredPatch& a,
                                              const ScoredPatch& b) {
    return a.score > b.score;
  });
  if (static_cast<std::size_t>(k) < all.size())
    all.resize(static_cast<std::size_t>(k));
  return all;
}

const char* method_name(SelectionMethod m) {
  switch (m) {
    case SelectionMethod::proposed: return "proposed";
    case SelectionMethod::rand_k: return "rand";
    case SelectionMethod::all_windows: return "all";
    case SelectionMethod::no_rl: return "norl";
  }
  return "?";
}

SelectionMethod method_from_name(const std::string& name) {
  if (name == "proposed") return SelectionMethod::proposed;
  if (name == "rand") return SelectionMethod::rand_k;
  if (name == "all") return SelectionMethod::all_windows;
  if (name == "norl") return SelectionMethod::no_rl;
  throw std::invalid_argument("unknown selection method: " + name);
}

std::vector<ScoredPatch> select_patches(SelectionMethod m,
                                        const AttentionAgent& agent,
                                        const StandaloneScorer* norl,
                                        const PageSample& page, int k,
                                        std::size_t stride, Rng rng) {
  switch (m) {
    case SelectionMethod::proposed:
      return agent.select_top_k(page, k, rng);
    case SelectionMethod::rand_k:
      return ablation_rand_k(agent, page, k, rng);
    case SelectionMethod::all_windows:
      return ablation_all_scored(agent, page, agent.config().encoder.input_side,
                                 stride);
    case SelectionMethod::no_rl:
      if (!norl) throw std::invalid_argument("no_rl method needs a scorer");
      return ablation_no_rl(page, k, agent.config().encoder.input_side, stride,
                            *norl);
  }
  throw std::logic_error("unreachable");
}

std::uint64_t stable_hash(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;  // FNV-1a
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::vector<const PageSample*> pages_of(const std::vector<PageSample>& corpus,
                                        const std::map<std::string, SplitPart>& split,
                                        SplitPart part,
                                        std::optional<Style> style) {
  std::vector<const PageSample*> out;
  for (const auto& page : corpus) {
    if (style && page.style != *style) continue;
    auto it = split.find(page.id);
    if (it == split.end() || it->second != part) continue;
    out.push_back(&page);
  }
  return out;
}

SelectedPage make_selected(SelectionMethod m, const AttentionAgent& agent,
                           const StandaloneScorer* norl, const PageSample& page,
                           int k, std::size_t stride, std::uint64_t seed,
                           std::uint64_t salt) {
  SelectedPage sp;
  sp.page = &page;
  Rng rng(seed ^ stable_hash(page.id) ^ (salt * 0x9e3779b97f4a7c15ULL));
  sp.patches = select_patches(m, agent, norl, page, k, stride, rng);
  return sp;
}

namespace {

std::vector<SelectedPage> select_all(const std::vector<const PageSample*>& pages,
                                     SelectionMethod m,
                                     const AttentionAgent& agent,
                                     const StandaloneScorer* norl,
                                     const ExperimentConfig& cfg,
                                     std::uint64_t salt) {
  std::vector<SelectedPage> out;
  out.reserve(pages.size());
  for (const PageSample* page : pages)
    out.push_back(make_selected(m, agent, norl, *page, cfg.k, cfg.window_stride,
                                cfg.seed, salt));
  return out;
}

std::vector<std::size_t> top_indices(const std::vector<double>& z, std::size_t n) {
  std::vector<std::size_t> idx(z.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    if (z[a] != z[b]) return z[a] > z[b];
    return a < b;
  });
  idx.resize(std::min(n, idx.size()));
  return idx;
}

}  // namespace

WiEvalResult run_wi_directed(const std::vector<PageSample>& corpus,
                             const std::map<std::string, SplitPart>& split,
                             const AttentionAgent& agent,
                             const StandaloneScorer* norl, Style style_a,
                             Style style_b, const ExperimentConfig& cfg) {
  const auto train_pages = pages_of(corpus, split, SplitPart::train, style_a);
  const auto test_pages = pages_of(corpus, split, SplitPart::test, style_b);
  if (train_pages.empty() || test_pages.empty())
    throw std::runtime_error("missing style split for directed WI run");

  WriterId model(cfg.wi);
  Rng model_rng(cfg.seed ^ 0x77691d0ULL);
  model.init(model_rng);
  model.train(select_all(train_pages, cfg.method, agent, norl, cfg, 1),
              Rng(cfg.seed ^ 0x7261696eULL));

  const int repeats =
      cfg.method == SelectionMethod::rand_k ? std::max(1, cfg.rand_repeats) : 1;
  WiEvalResult result;
  double top1 = 0.0, top2 = 0.0, top5 = 0.0;
  for (int r = 0; r < repeats; ++r) {
    std::vector<std::vector<double>> zs;
    std::vector<int> labels;
    for (const PageSample* page : test_pages) {
      SelectedPage sp = make_selected(cfg.method, agent, norl, *page, cfg.k,
                                      cfg.window_stride, cfg.seed,
                                      2 + static_cast<std::uint64_t>(r));
      FuseResult fused = model.classify(sp);
      if (r == 0) {
        WiPageRecord rec;
        rec.page_id = page->id;
        rec.true_label = page->writer_id;
        for (std::size_t i : top_indices(fused.probs, 5)) {
          rec.top_labels.push_back(static_cast<int>(i));
          rec.top_probs.push_back(fused.probs[i]);
        }
        result.records.push_back(std::move(rec));
      }
      zs.push_back(std::move(fused.probs));
      labels.push_back(page->writer_id);
    }
    const int d = cfg.wi.n_writers;
    top1 += top_n_accuracy(zs, labels, 1);
    top2 += top_n_accuracy(zs, labels, std::min(2, d));
    top5 += top_n_accuracy(zs, labels, std::min(5, d));
  }
  result.top1 = top1 / repeats;
  result.top2 = top2 / repeats;
  result.top5 = top5 / repeats;
  return result;
}

namespace {

void pair_distances(const std::vector<PageEmbedding>& embs,
                    const std::vector<const PageSample*>& pages,
                    std::vector<double>* same, std::vector<double>* diff,
                    std::vector<WvPairRecord>* records, double threshold) {
  for (std::size_t i = 0; i < embs.size(); ++i) {
    for (std::size_t j = i + 1; j < embs.size(); ++j) {
      const double d = euclidean_distance(embs[i].values, embs[j].values);
      const bool label_same = pages[i]->writer_id == pages[j]->writer_id;
      (label_same ? same : diff)->push_back(d);
      if (records) {
        WvPairRecord rec;
        rec.page_a = pages[i]->id;
        rec.page_b = pages[j]->id;
        rec.pair_id = rec.page_a + "|" + rec.page_b;
        rec.distance = d;
        rec.label_same = label_same;
        rec.decided_same = d <= threshold;
        records->push_back(std::move(rec));
      }
    }
  }
}

}  // namespace

WvEvalResult run_wv_directed(const std::vector<PageSample>& corpus,
                             const std::map<std::string, SplitPart>& split,
                             const AttentionAgent& agent,
                             const StandaloneScorer* norl, Style style_a,
                             Style style_b, const ExperimentConfig& cfg) {
  const auto train_pages = pages_of(corpus, split, SplitPart::train, style_a);
  const auto val_pages = pages_of(corpus, split, SplitPart::val, style_a);
  const auto test_pages = pages_of(corpus, split, SplitPart::test, style_b);
  if (train_pages.empty() || test_pages.empty())
    throw std::runtime_error("missing style split for directed WV run");

  WriterVerify model(cfg.wv);
  Rng model_rng(cfg.seed ^ 0x77765230ULL);
  model.init(model_rng);
  model.train(select_all(train_pages, cfg.method, agent, norl, cfg, 1),
              Rng(cfg.seed ^ 0x77767472ULL));

  // Freeze the decision threshold on the training style's validation split.
  if (!val_pages.empty()) {
    std::vector<PageEmbedding> val_embs;
    for (const SelectedPage& sp :
         select_all(val_pages, cfg.method, agent, norl, cfg, 3))
      val_embs.push_back(model.embed(sp));
    std::vector<double> same, diff;
    pair_distances(val_embs, val_pages, &same, &diff, nullptr, 0.0);
    if (!same.empty() && !diff.empty())
      model.set_threshold(balanced_accuracy_sweep(same, diff).threshold);
  }

  const int repeats =
      cfg.method == SelectionMethod::rand_k ? std::max(1, cfg.rand_repeats) : 1;
  WvEvalResult result;
  result.frozen_threshold = model.threshold();
  double acc = 0.0, tpr = 0.0, tnr = 0.0, thr = 0.0;
  for (int r = 0; r < repeats; ++r) {
    std::vector<PageEmbedding> embs;
    for (const PageSample* page : test_pages)
      embs.push_back(model.embed(make_selected(cfg.method, agent, norl, *page,
                                               cfg.k, cfg.window_stride, cfg.seed,
                                               4 + static_cast<std::uint64_t>(r))));
    std::vector<double> same, diff;
    pair_distances(embs, test_pages, &same, &diff,
                   r == 0 ? &result.records : nullptr, model.threshold());
    const SweepResult sweep = balanced_accuracy_sweep(same, diff);
    acc += sweep.accuracy;
    tpr += sweep.tpr;
    tnr += sweep.tnr;
    thr += sweep.threshold;
  }
  result.sweep.accuracy = acc / repeats;
  result.sweep.tpr = tpr / repeats;
  result.sweep.tnr = tnr / repeats;
  result.sweep.threshold = thr / repeats;
  return result;
}

ThreeTupleResult three_tuple_eval(const std::vector<PageSample>& corpus,
                                  const std::map<std::string, SplitPart>& split,
                                  const AttentionAgent& agent,
                                  const StandaloneScorer* norl, Task task,
                                  const ExperimentConfig& cfg) {
  auto directed = [&](Style a, Style b) {
    if (task == Task::wi)
      return run_wi_directed(corpus, split, agent, norl, a, b, cfg).top1;
    return run_wv_directed(corpus, split, agent, norl, a, b, cfg).sweep.accuracy;
  };
  auto pair_mean = [&](Style a, Style b) {
    return 0.5 * (directed(a, b) + directed(b, a));
  };
  ThreeTupleResult out;
  out.ae_smv = pair_mean(Style::slow, Style::medium);
  out.ae_sfv = pair_mean(Style::slow, Style::fast);
  out.ae_mfv = pair_mean(Style::medium, Style::fast);
  return out;
}

double scorer_window_mae(const AttentionAgent& agent,
                         const std::vector<const PageSample*>& pages,
                         std::size_t side, std::size_t stride, double sigma) {
  double total = 0.0;
  for (const PageSample* page : pages) {
    std::vector<PredictedPatch> preds;
    for (const Patch& p : slide_windows(*page, side, stride)) {
      PredictedPatch pp;
      pp.box = patch_box(*page, p.center, side);
      pp.center = p.center;
      pp.predicted = agent.score_patch(p);
      preds.push_back(pp);
    }
    total += mae_metric(preds, truth_boxes(*page, side),
                        [&](NormLocation loc) {
                          return ground_truth_score(*page, loc, sigma);
                        });
  }
  return total / static_cast<double>(pages.size());
}

}  // namespace idio
