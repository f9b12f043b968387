#pragma once
// Writer identification: per-patch softmax classifier over d writers on
// padded patches, idiosyncrasy-weighted decision fusion, Top-N evaluation.

#include <ostream>
#include <string>
#include <vector>

#include "idio/agent.hpp"
#include "idio/encoder.hpp"
#include "idio/nn.hpp"
#include "idio/optim.hpp"
#include "idio/page.hpp"
#include "idio/rng.hpp"

namespace idio {

struct FusionConfig {
  double alpha_w = 10.0;
  double weight_floor_threshold = 0.1;
};

// w_j = alpha_w * i_j if i_j > threshold (strict), else 1.
double patch_weight(double i_j, const FusionConfig& cfg);

struct FuseResult {
  std::vector<double> probs;  // z, a probability vector
  int writer_id = -1;         // argmax, smallest-index tie-break
};

// z_d = sum_j w_j s_j[d] / sum_j w_j.
FuseResult fuse_decisions(const std::vector<std::vector<double>>& probs,
                          const std::vector<double>& weights);

// Fraction of pages whose true label ranks among the n largest fused probs
// (ties resolved by smaller index first, consistent with the argmax rule).
double top_n_accuracy(const std::vector<std::vector<double>>& predictions,
                      const std::vector<int>& labels, int n);

// A page together with its selected (patch, predicted score) list.
struct SelectedPage {
  const PageSample* page = nullptr;
  std::vector<ScoredPatch> patches;
};

struct WiConfig {
  int n_writers = 10;  // d
  double dropout_rate = 0.2;
  FusionConfig fusion;
  EncoderConfig encoder;         // input_side must equal pad_target
  std::size_t pad_target = 41;
  SgdConfig sgd;
  int epochs = 60;
  int batch_size = 32;
};

class WriterId {
 public:
  explicit WriterId(WiConfig cfg);

  void init(Rng& rng);
  const WiConfig& config() const { return cfg_; }
  ParamRefs params();

  // Softmax over writers for one padded patch. Dropout is applied only in
  // train mode (rng required then).
  std::vector<double> patch_class_probs(const Patch& padded, bool train_mode,
                                        Rng* rng) const;

  // Per-patch cross-entropy over the selected patches of the training pages
  // (labels from PageSample::writer_id). Returns the last epoch's mean loss.
  double train(const std::vector<SelectedPage>& train_pages, Rng rng,
               std::ostream* log = nullptr);

  // Pads each selected patch, classifies, fuses with Eq.-8 weights.
  FuseResult classify(const SelectedPage& sp) const;

 private:
  WiConfig cfg_;
  ConvEncoder encoder_;
  LinearLayer head_;  // q -> d
};

}  // namespace idio
