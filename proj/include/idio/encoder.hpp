#pragma once
// Pluggable patch feature extractor: strided 3x3 conv + tanh stages, global
// average pooling, linear projection. Stands in for a backbone truncated at
// its average-pooling layer, at a size trainable on CPU in minutes.

#include <string>
#include <vector>

#include "idio/nn.hpp"
#include "idio/page.hpp"
#include "idio/rng.hpp"
#include "idio/tensor.hpp"

namespace idio {

struct EncoderConfig {
  std::size_t input_side = 32;
  std::size_t feature_dim = 64;              // q_g (RL path) / q (verify path)
  std::vector<std::size_t> channels = {16, 32};  // one entry per conv stage
  bool pooled = true;
};

class ConvEncoder {
 public:
  ConvEncoder() = default;
  explicit ConvEncoder(EncoderConfig cfg);

  void init(Rng& rng);
  const EncoderConfig& config() const { return cfg_; }
  std::size_t out_dim() const { return cfg_.feature_dim; }

  struct Cache {
    std::vector<std::vector<double>> stage_in;   // activations entering each stage
    std::vector<std::vector<double>> cols;       // im2col buffers per stage
    std::vector<std::vector<double>> stage_out;  // post-tanh outputs
    std::vector<double> proj_in;                 // pooled (or flattened) vector
  };

  // feature gets resized to feature_dim. cache may be null for inference.
  void forward(const Image& patch, std::vector<double>& feature, Cache* cache) const;
  // Accumulates parameter gradients from dL/dfeature; patches are leaves so
  // no input gradient is produced.
  void backward(const Cache& cache, const double* dfeature);

  void zero_grad();
  void collect(const std::string& prefix, ParamRefs& out);

 private:
  struct Stage {
    LinearLayer map;  // (out_c) x (in_c*9), conv expressed over im2col columns
    std::size_t in_side = 0, out_side = 0, in_ch = 0, out_ch = 0;
  };

  EncoderConfig cfg_;
  std::vector<Stage> stages_;
  LinearLayer proj_;
};

// Deterministic, differentiable feature of an unpadded/padded patch.
// Throws on a patch side not matching the encoder config.
std::vector<double> encode_patch(const Patch& patch, const ConvEncoder& enc);

}  // namespace idio
