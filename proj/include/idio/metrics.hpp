#pragma once
// Measurement protocol: MAE against IoU-matched ground-truth boxes, MIS,
// cross-style 3-tuple experiments, and the selection ablations.

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "idio/agent.hpp"
#include "idio/corpus.hpp"
#include "idio/page.hpp"
#include "idio/wid.hpp"
#include "idio/wver.hpp"

namespace idio {

struct PredictedPatch {
  BoundingBox box;
  NormLocation center;
  double predicted = 0.0;
};

struct TruthBox {
  BoundingBox box;
  double actual = 0.0;
};

// Mean |i_pred - i_actual| * 100. The actual score of a prediction is the
// mean over ground-truth boxes with IoU > 0.5; predictions with no match are
// scored by the analytic oracle at their center. Throws when there is no
// ground truth of either kind.
double mae_metric(const std::vector<PredictedPatch>& predictions,
                  const std::vector<TruthBox>& truths,
                  const std::function<double(NormLocation)>& oracle);

// Mean actual score of the selected patches.
double mis_metric(const std::vector<double>& actual_scores);

// side x side boxes centered at the planted glyph centers, actual = rarity.
std::vector<TruthBox> truth_boxes(const PageSample& page, std::size_t side);

// GRU-free patch scorer (encoder + regression head) used by Method-Ablate_RL.
class StandaloneScorer {
 public:
  explicit StandaloneScorer(EncoderConfig cfg);
  void init(Rng& rng);
  ParamRefs params();
  // Labelled patches must carry actual_score; returns final epoch MSE.
  double train(const std::vector<Patch>& labelled, Rng rng, const SgdConfig& sgd,
               int epochs, int batch_size = 32);
  double score(const Patch& p) const;

 private:
  EncoderConfig cfg_;
  ConvEncoder encoder_;
  LinearLayer head_;
};

// Sliding-window patches of the pages labelled by the analytic oracle at the
// window centers (training corpus for the standalone scorer).
std::vector<Patch> window_training_patches(const std::vector<const PageSample*>& pages,
                                           std::size_t side, std::size_t stride,
                                           double sigma);

// --- selection ablations -----------------------------------------------

// k uniform-random in-page locations, scored by the agent's one-step scorer.
std::vector<ScoredPatch> ablation_rand_k(const AttentionAgent& agent,
                                         const PageSample& page, int k, Rng rng);

// All windows (delegates to slide_windows), row-major order.
std::vector<Patch> ablation_all(const PageSample& page, std::size_t side,
                                std::size_t stride);
// Same windows with the agent's one-step scores attached, order preserved.
std::vector<ScoredPatch> ablation_all_scored(const AttentionAgent& agent,
                                             const PageSample& page,
                                             std::size_t side, std::size_t stride);

// Score every window with the standalone scorer, return the k best
// (scores non-increasing).
std::vector<ScoredPatch> ablation_no_rl(const PageSample& page, int k,
                                        std::size_t side, std::size_t stride,
                                        const StandaloneScorer& scorer);

enum class SelectionMethod { proposed, rand_k, all_windows, no_rl };
const char* method_name(SelectionMethod m);
SelectionMethod method_from_name(const std::string& name);

std::vector<ScoredPatch> select_patches(SelectionMethod m,
                                        const AttentionAgent& agent,
                                        const StandaloneScorer* norl,
                                        const PageSample& page, int k,
                                        std::size_t stride, Rng rng);

// --- experiments ---------------------------------------------------------

enum class Task { wi, wv };

struct ExperimentConfig {
  int k = 16;
  SelectionMethod method = SelectionMethod::proposed;
  int rand_repeats = 30;  // evaluation-time repeats for rand_k
  std::size_t window_stride = 32;
  WiConfig wi;
  WvConfig wv;
  std::uint64_t seed = 1;
};

std::vector<const PageSample*> pages_of(const std::vector<PageSample>& corpus,
                                        const std::map<std::string, SplitPart>& split,
                                        SplitPart part,
                                        std::optional<Style> style);

SelectedPage make_selected(SelectionMethod m, const AttentionAgent& agent,
                           const StandaloneScorer* norl, const PageSample& page,
                           int k, std::size_t stride, std::uint64_t seed,
                           std::uint64_t salt);

struct WiPageRecord {
  std::string page_id;
  int true_label = -1;
  std::vector<int> top_labels;
  std::vector<double> top_probs;
};

struct WiEvalResult {
  double top1 = 0.0, top2 = 0.0, top5 = 0.0;
  std::vector<WiPageRecord> records;
};

struct WvPairRecord {
  std::string pair_id, page_a, page_b;
  double distance = 0.0;
  bool label_same = false;
  bool decided_same = false;
};

struct WvEvalResult {
  SweepResult sweep;
  double frozen_threshold = 0.0;
  std::vector<WvPairRecord> records;
};

// Train on style_a's train split, evaluate on style_b's test split.
WiEvalResult run_wi_directed(const std::vector<PageSample>& corpus,
                             const std::map<std::string, SplitPart>& split,
                             const AttentionAgent& agent,
                             const StandaloneScorer* norl, Style style_a,
                             Style style_b, const ExperimentConfig& cfg);

WvEvalResult run_wv_directed(const std::vector<PageSample>& corpus,
                             const std::map<std::string, SplitPart>& split,
                             const AttentionAgent& agent,
                             const StandaloneScorer* norl, Style style_a,
                             Style style_b, const ExperimentConfig& cfg);

struct ThreeTupleResult {
  double ae_smv = 0.0, ae_sfv = 0.0, ae_mfv = 0.0;
};

// Each entry is the mean of the two directed runs of its style pair; WI uses
// Top-1 accuracy, WV the balanced-accuracy sweep.
ThreeTupleResult three_tuple_eval(const std::vector<PageSample>& corpus,
                                  const std::map<std::string, SplitPart>& split,
                                  const AttentionAgent& agent,
                                  const StandaloneScorer* norl, Task task,
                                  const ExperimentConfig& cfg);

// MAE (percent) of the agent's one-step scorer over sliding windows of the
// given pages, matched to planted truth boxes per the IoU protocol.
double scorer_window_mae(const AttentionAgent& agent,
                         const std::vector<const PageSample*>& pages,
                         std::size_t side, std::size_t stride, double sigma);

std::uint64_t stable_hash(const std::string& s);

}  // namespace idio
