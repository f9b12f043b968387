#include "idio/encoder.hpp"

#include <stdexcept>

#include "idio/kernels.hpp"

namespace idio {
namespace {

constexpr std::size_t kKernel = 3;
constexpr std::size_t kStride = 2;

std::size_t conv_out_side(std::size_t in_side) {
  if (in_side < kKernel) throw std::invalid_argument("encoder input too small");
  return (in_side - kKernel) / kStride + 1;
}

}  // namespace

ConvEncoder::ConvEncoder(EncoderConfig cfg) : cfg_(std::move(cfg)) {
  if (cfg_.channels.empty()) throw std::invalid_argument("need >= 1 conv stage");
  std::size_t side = cfg_.input_side;
  std::size_t ch = 1;
  for (std::size_t out_ch : cfg_.channels) {
    Stage st;
    st.in_side = side;
    st.out_side = conv_out_side(side);
    st.in_ch = ch;
    st.out_ch = out_ch;
    st.map = LinearLayer(out_ch, ch * kKernel * kKernel);
    stages_.push_back(std::move(st));
    side = stages_.back().out_side;
    ch = out_ch;
  }
  const std::size_t proj_in = cfg_.pooled ? ch : ch * side * side;
  proj_ = LinearLayer(cfg_.feature_dim, proj_in);
}

void ConvEncoder::init(Rng& rng) {
  for (auto& st : stages_) st.map.init(rng);
  proj_.init(rng);
}

void ConvEncoder::forward(const Image& patch, std::vector<double>& feature,
                          Cache* cache) const {
  if (patch.height != cfg_.input_side || patch.width != cfg_.input_side)
    throw std::invalid_argument("patch side does not match encoder input");

  std::vector<double> act = patch.pixels;  // 1 x side x side, channel-major
  if (cache) {
    cache->stage_in.clear();
    cache->cols.clear();
    cache->stage_out.clear();
  }

  for (const auto& st : stages_) {
    const std::size_t o = st.out_side, in = st.in_side;
    const std::size_t col_len = st.in_ch * kKernel * kKernel;
    std::vector<double> cols(o * o * col_len);
    std::vector<double> out(st.out_ch * o * o);
    std::vector<double> pre(st.out_ch);
    for (std::size_t oy = 0; oy < o; ++oy) {
      for (std::size_t ox = 0; ox < o; ++ox) {
        double* col = cols.data() + (oy * o + ox) * col_len;
        std::size_t w = 0;
        for (std::size_t c = 0; c < st.in_ch; ++c)
          for (std::size_t ky = 0; ky < kKernel; ++ky)
            for (std::size_t kx = 0; kx < kKernel; ++kx)
              col[w++] = act[c * in * in + (oy * kStride + ky) * in +
                             (ox * kStride + kx)];
        st.map.forward(col, pre.data());
        for (std::size_t c = 0; c < st.out_ch; ++c)
          out[c * o * o + oy * o + ox] = std::tanh(pre[c]);
      }
    }
    if (cache) {
      cache->stage_in.push_back(std::move(act));
      cache->cols.push_back(std::move(cols));
      cache->stage_out.push_back(out);
    }
    act = std::move(out);
  }

  const auto& last = stages_.back();
  std::vector<double> proj_in;
  if (cfg_.pooled) {
    const std::size_t hw = last.out_side * last.out_side;
    proj_in.assign(last.out_ch, 0.0);
    for (std::size_t c = 0; c < last.out_ch; ++c)
      proj_in[c] = kern::sum(act.data() + c * hw, hw) / static_cast<double>(hw);
  } else {
    proj_in = act;
  }

  feature.assign(cfg_.feature_dim, 0.0);
  proj_.forward(proj_in.data(), feature.data());
  if (cache) cache->proj_in = std::move(proj_in);
}

void ConvEncoder::backward(const Cache& cache, const double* dfeature) {
  std::vector<double> dproj_in(proj_.in_dim(), 0.0);
  proj_.backward(cache.proj_in.data(), dfeature, dproj_in.data());

  const auto& last = stages_.back();
  std::vector<double> dact;
  if (cfg_.pooled) {
    const std::size_t hw = last.out_side * last.out_side;
    dact.assign(last.out_ch * hw, 0.0);
    for (std::size_t c = 0; c < last.out_ch; ++c) {
      const double v = dproj_in[c] / static_cast<double>(hw);
      for (std::size_t i = 0; i < hw; ++i) dact[c * hw + i] = v;
    }
  } else {
    dact = std::move(dproj_in);
  }

  for (std::size_t s = stages_.size(); s-- > 0;) {
    auto& st = stages_[s];
    const std::size_t o = st.out_side, in = st.in_side;
    const std::size_t col_len = st.in_ch * kKernel * kKernel;
    const auto& out = cache.stage_out[s];
    const auto& cols = cache.cols[s];
    std::vector<double> dprev(s > 0 ? st.in_ch * in * in : 0, 0.0);
    std::vector<double> dpre(st.out_ch);
    std::vector<double> dcol(col_len);
    for (std::size_t oy = 0; oy < o; ++oy) {
      for (std::size_t ox = 0; ox < o; ++ox) {
        for (std::size_t c = 0; c < st.out_ch; ++c) {
          const double y = out[c * o * o + oy * o + ox];
          dpre[c] = dact[c * o * o + oy * o + ox] * (1.0 - y * y);
        }
        const double* col = cols.data() + (oy * o + ox) * col_len;
        if (s > 0) {
          std::fill(dcol.begin(), dcol.end(), 0.0);
          st.map.backward(col, dpre.data(), dcol.data());
          std::size_t w = 0;
          for (std::size_t c = 0; c < st.in_ch; ++c)
            for (std::size_t ky = 0; ky < kKernel; ++ky)
              for (std::size_t kx = 0; kx < kKernel; ++kx)
                dprev[c * in * in + (oy * kStride + ky) * in +
                      (ox * kStride + kx)] += dcol[w++];
        } else {
          st.map.backward(col, dpre.data(), nullptr);
        }
      }
    }
    dact = std::move(dprev);
  }
}

void ConvEncoder::zero_grad() {
  for (auto& st : stages_) {
    st.map.dw.fill(0.0);
    st.map.db.fill(0.0);
  }
  proj_.dw.fill(0.0);
  proj_.db.fill(0.0);
}

void ConvEncoder::collect(const std::string& prefix, ParamRefs& out) {
  for (std::size_t s = 0; s < stages_.size(); ++s)
    stages_[s].map.collect(prefix + ".conv" + std::to_string(s), out);
  proj_.collect(prefix + ".proj", out);
}

std::vector<double> encode_patch(const Patch& patch, const ConvEncoder& enc) {
  std::vector<double> feature;
  enc.forward(patch.pixels, feature, nullptr);
  return feature;
}

}  // namespace idio
