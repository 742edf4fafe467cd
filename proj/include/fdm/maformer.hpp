#pragma once

#include <array>
#include <memory>
#include <string>
#include <vector>

#include "fdm/layers.hpp"
#include "fdm/lowpass.hpp"
#include "fdm/msfa.hpp"
#include "fdm/tensor.hpp"

namespace fdm {

// High-pass reconstruction network: a U-Net of STMC blocks, each mixing a
// mosaic-periodic convolution branch with shifted-window attention.
struct ModelConfig {
    int bands = 16;
    int width = 32;  // stem output channels; doubles at each encoder stage
    int period = 4;  // mosaic period at full resolution
    int window = 4;
    std::array<int, 4> blocks{2, 2, 2, 2};  // STMCs per stage (3 encoder + bottleneck)
    int heads = 4;
    int mlp_ratio = 4;
    int mwp_hidden = 16;
    int msfa_kernel = 8;

    void validate() const;
};

// The mosaic period as seen by features downsampled s times: every 2x
// downsampling halves the apparent period until it degenerates to 1.
int stage_period(const ModelConfig& cfg, int stage);
int stage_width(const ModelConfig& cfg, int stage);

std::string config_to_text(const ModelConfig& cfg);
// Parses key=value lines, ignoring unknown keys; missing keys keep defaults.
ModelConfig config_from_text(const std::string& text);

// Predicts one k x k spatial kernel per relative-position class from the
// normalized (m/p, n/p) encoding through two 1x1 convolutions. A learnable
// per-tap level (initialized to one) sets the baseline modulation.
class Mwp {
public:
    Mwp(ParamStore& ps, const std::string& name, int period, int hidden, int k);

    Tensor forward();                     // {1, k*k, p, p}
    void backward(const Tensor& grad_out);

    Tensor& encoding() { return encoding_; }
    Tensor* level = nullptr;  // {k*k}

    int period, k;

private:
    Tensor encoding_;  // {1, 2, p, p}
    Conv2d in_;
    Pointwise relu_;
    Conv2d out_;
};

// Convolution whose effective kernel at output pixel (i,j) is a shared base
// kernel modulated per spatial tap by the predicted kernel of class
// (i mod p, j mod p). Stride 1, same-size padding.
class MsfaConv {
public:
    MsfaConv(ParamStore& ps, const std::string& name, int in_ch, int out_ch, int period,
             int k, int mwp_hidden, PadMode mode = PadMode::kZero);

    Tensor forward(const Tensor& x);
    Tensor backward(const Tensor& gout);

    Mwp mwp;
    Tensor* weight = nullptr;  // {out_ch, in_ch, k, k}
    Tensor* bias = nullptr;    // {out_ch}
    int in_ch, out_ch, period, k;

private:
    void build_effective();

    PadMode mode_;
    int pb_, pa_;
    Tensor mod_;                // cached {1, k*k, p, p}
    Tensor padded_;             // cached padded input
    std::vector<double> eff_;   // [(o*in+ci)*k2+t][a][b]
    std::vector<double> deff_;
};

// Averages positions that share (i,j)'s relative position along the period-p
// lattice anchored at (i,j), then crops to half extents.
Tensor msfa_pool(const Tensor& x, int p);
Tensor msfa_pool_backward(const Tensor& gout, int p, int in_h, int in_w);

// 3x3 conv -> relu -> 3x3 conv with an identity skip.
class RConv {
public:
    RConv(ParamStore& ps, const std::string& name, int ch);
    Tensor forward(const Tensor& x);
    Tensor backward(const Tensor& gout);

private:
    Conv2d c1_;
    Pointwise relu_;
    Conv2d c2_;
};

// Periodic branch of an STMC: MsfaConv, lattice pooling to half extents, two
// residual convs, nearest-neighbor upsample back.
class PeriodicBranch {
public:
    PeriodicBranch(ParamStore& ps, const std::string& name, int ch, int period, int msfa_k,
                   int mwp_hidden);
    Tensor forward(const Tensor& x);
    Tensor backward(const Tensor& gout);

    MsfaConv conv;

private:
    int period_;
    int in_h_ = 0, in_w_ = 0;
    RConv r1_, r2_;
    NearestUpsample2x up_;
};

// {B,C,M,N} -> {B*(M/K)*(N/K), K*K, C} token windows, cyclically shifted by
// (-shift, -shift) first. window_reverse is the exact inverse.
Tensor window_partition(const Tensor& x, int K, int shift);
Tensor window_reverse(const Tensor& w, int K, int shift, int batch, int ch, int h, int wd);

// Multi-head scaled dot-product attention over token windows with a dense
// learnable pairwise bias shared across heads and windows.
class WindowAttention {
public:
    WindowAttention(ParamStore& ps, const std::string& name, int ch, int window, int heads);

    Tensor forward(const Tensor& x);  // {Nw, K*K, C}
    Tensor backward(const Tensor& gout);

    Tensor* wq = nullptr;
    Tensor* wk = nullptr;
    Tensor* wv = nullptr;
    Tensor* wo = nullptr;
    Tensor* table = nullptr;  // {K*K, K*K}
    int ch, window, heads;

    // Rows of the most recent forward's softmax maps, {Nw*heads, K*K, K*K}.
    const Tensor& last_attention() const { return attn_; }

private:
    Tensor x_, q_, k_, v_;
    Tensor attn_;  // {Nw*heads, T, T}
    Tensor ctx_;
};

// Pre-norm window-attention block: x + Attn(LN(x)), then + MLP(LN(.)).
class SwinBlock {
public:
    SwinBlock(ParamStore& ps, const std::string& name, int ch, int window, int heads,
              int mlp_ratio, int shift);

    Tensor forward(const Tensor& x);
    Tensor backward(const Tensor& gout);

    WindowAttention attn;
    int shift;

private:
    int window_;
    int batch_ = 0, ch_ = 0, h_ = 0, w_ = 0;
    LayerNormChannel ln1_;
    LayerNormChannel ln2_;
    Conv2d fc1_;
    Pointwise gelu_;
    Conv2d fc2_;
};

// Split-transform-merge block: 1x1 projection, channel split, periodic branch
// on the first half, window attention on the second, 1x1 fusion.
class Stmc {
public:
    Stmc(ParamStore& ps, const std::string& name, int width, int period, int window,
         int heads, int mlp_ratio, int mwp_hidden, int msfa_k, int shift);

    Tensor forward(const Tensor& x);
    Tensor backward(const Tensor& gout);

    PeriodicBranch periodic;
    SwinBlock swin;

private:
    int width_;
    Conv2d proj_;
    Conv2d fuse_;
};

// The full high-pass network: MsfaConv stem, three encoder stages with
// stride-2 downsampling, a bottleneck, three decoder stages with transposed
// convolutions and additive encoder skips, MsfaConv head.
class MaFormer {
public:
    MaFormer(ParamStore& ps, const ModelConfig& cfg);

    Tensor forward(const Tensor& x);  // {B,1,M,N} -> {B,bands,M,N}
    Tensor backward(const Tensor& gout);

    const ModelConfig& config() const { return cfg_; }

private:
    void check_extents(int h, int w) const;

    ModelConfig cfg_;
    MsfaConv stem_;
    std::vector<std::vector<Stmc>> enc_;  // 3 stages
    std::vector<Conv2d> down_;            // 3 stride-2 2x2, bias-free
    std::vector<Stmc> mid_;
    std::vector<ConvTranspose2d> up_;     // 3, bias-free
    std::vector<std::vector<Stmc>> dec_;  // 3 stages, finest last
    std::unique_ptr<MsfaConv> head_;      // built last so registration follows dataflow
    std::vector<Tensor> skip_;
    std::vector<Tensor> skip_grad_;
};

// High-pass estimate for a single mosaic.
HsiCube maformer_apply(MaFormer& net, const MosaicImage& mosaic);

// Low-pass reconstruction plus the network's high-pass estimate. Unclamped;
// clamp only at export.
HsiCube fdmnet_apply(MaFormer& net, const MosaicImage& mosaic, const LowpassConfig& lowcfg);

}  // namespace fdm
