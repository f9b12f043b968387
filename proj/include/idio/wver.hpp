#pragma once
// Writer verification: MAF/XAF page-level aggregation of patch features,
// triplet metric learning with in-batch hard mining, and the balanced
// accuracy threshold sweep.

#include <ostream>
#include <string>
#include <vector>

#include "idio/encoder.hpp"
#include "idio/optim.hpp"
#include "idio/rng.hpp"
#include "idio/wid.hpp"  // SelectedPage

namespace idio {

enum class Aggregation { maf, xaf };
const char* aggregation_name(Aggregation a);
Aggregation aggregation_from_name(const std::string& name);

// Componentwise mean / max over k equal-length vectors. Throw on empty or
// ragged input.
std::vector<double> maf(const std::vector<std::vector<double>>& features);
std::vector<double> xaf(const std::vector<std::vector<double>>& features);

struct PageEmbedding {
  std::vector<double> values;
  Aggregation aggregation = Aggregation::maf;
  std::string page_id;
};

double euclidean_distance(const std::vector<double>& a,
                          const std::vector<double>& b);

// max(D(A,P) - D(A,N) + margin, 0)
double triplet_loss(const std::vector<double>& va, const std::vector<double>& vp,
                    const std::vector<double>& vn, double margin);

// Accumulates d(triplet_loss)/d{va,vp,vn}; the subgradient at the hinge kink
// is 0. Returns the loss.
double triplet_gradients(const std::vector<double>& va,
                         const std::vector<double>& vp,
                         const std::vector<double>& vn, double margin,
                         std::vector<double>& dva, std::vector<double>& dvp,
                         std::vector<double>& dvn);

struct TripletConfig {
  double margin = 0.2;       // alpha_m
  int batch_writers = 5;     // P
  int batch_per_writer = 2;  // K
};

struct TripletIdx {
  std::size_t anchor, positive, negative;
};

// Every element anchors once; P = same-writer sample maximizing D(A,P),
// N = different-writer sample minimizing D(A,N). Anchors whose writer has a
// single sample are skipped.
std::vector<TripletIdx> mine_hard_triplets(
    const std::vector<std::vector<double>>& embeddings,
    const std::vector<int>& labels);

struct SweepResult {
  double accuracy = 0.0;
  double threshold = 0.0;  // smallest optimal t_d
  double tpr = 0.0, tnr = 0.0;
};

// t_d swept from min to max of all observed distances inclusive, given step;
// TPR = |{same <= t}| / |same|, TNR = |{diff > t}| / |diff|.
SweepResult balanced_accuracy_sweep(const std::vector<double>& pairs_same,
                                    const std::vector<double>& pairs_diff,
                                    double step = 0.1);

struct WvConfig {
  TripletConfig triplet;
  Aggregation mode = Aggregation::maf;
  EncoderConfig encoder;  // input_side must equal pad_target
  std::size_t pad_target = 41;
  SgdConfig sgd;
  int epochs = 40;
};

class WriterVerify {
 public:
  explicit WriterVerify(WvConfig cfg);

  void init(Rng& rng);
  const WvConfig& config() const { return cfg_; }
  ParamRefs params();             // trainable encoder
  ParamRefs checkpoint_params();  // + frozen decision threshold

  PageEmbedding embed(const SelectedPage& sp) const;

  // Sum of mined-triplet losses per P*K batch, SGD-momentum; the triplet
  // branches share the single encoder. Returns the last epoch's batch loss.
  double train(const std::vector<SelectedPage>& train_pages, Rng rng,
               std::ostream* log = nullptr);

  double threshold() const { return threshold_[0]; }
  void set_threshold(double t) { threshold_[0] = t; }

 private:
  WvConfig cfg_;
  ConvEncoder encoder_;
  Tensor threshold_;
};

}  // namespace idio
