#pragma once

#include <string>

#include "fdm/rng.hpp"
#include "fdm/tensor.hpp"

namespace fdm {

enum class PadMode { kZero, kPeriodic };

// Replicates a (N,C,H,W) tensor into (N,C,H+pb+pa,W+pb2+pa2) with zero or
// periodic borders.
Tensor pad_input(const Tensor& x, int pb_h, int pa_h, int pb_w, int pa_w, PadMode mode);

// Adjoint of pad_input: folds a padded-gradient tensor back onto the
// original extents (crop for zero padding, wrap-add for periodic).
Tensor unpad_fold(const Tensor& gpad, int pb_h, int pa_h, int pb_w, int pa_w, PadMode mode);

// y(n,co,i,j) = sum_{ci,u,v} w(co,ci,u,v) * x(n,ci,i*s+u,j*s+v), no padding.
Tensor valid_conv(const Tensor& x, const Tensor& w, int stride);

// Adjoint of valid_conv in its input argument:
// out(n,ci,i*s+u,j*s+v) += w(co,ci,u,v) * y(n,co,i,j).
Tensor scatter_conv(const Tensor& y, const Tensor& w, int stride, int out_h, int out_w);

// gw(co,ci,u,v) += sum_{n,i,j} coeff(n,co,i,j) * field(n,ci,i*s+u,j*s+v).
void accumulate_conv_weight_grad(const Tensor& field, const Tensor& coeff, int stride,
                                 Tensor& gw);

// Cross-correlation with explicit padding. Defaults: same-size padding
// ((k-1)/2 before, the rest after) when stride is 1, no padding otherwise.
class Conv2d {
public:
    Conv2d(ParamStore& ps, const std::string& name, int in_ch, int out_ch, int k,
           int stride = 1, bool with_bias = true, PadMode mode = PadMode::kZero,
           int pad_before = -1, int pad_after = -1);

    Tensor forward(const Tensor& x);
    Tensor backward(const Tensor& gout);

    Tensor* weight = nullptr;
    Tensor* bias = nullptr;
    int in_ch, out_ch, k, stride, pad_before, pad_after;
    PadMode mode;

private:
    Tensor padded_;  // cached padded input
};

// Stride-s transposed convolution (zero "padding"): output extents
// (H-1)*s + k. The weight has conv-view layout (co,ci,k,k) where co is this
// layer's input channel count, making it the exact adjoint of a Conv2d with
// the same weight.
class ConvTranspose2d {
public:
    ConvTranspose2d(ParamStore& ps, const std::string& name, int in_ch, int out_ch, int k,
                    int stride, bool with_bias = false);

    Tensor forward(const Tensor& x);
    Tensor backward(const Tensor& gout);

    Tensor* weight = nullptr;
    Tensor* bias = nullptr;
    int in_ch, out_ch, k, stride;

private:
    Tensor input_;
};

enum class Activation { kRelu, kGelu };

// Elementwise activation; gelu is the exact erf form.
class Pointwise {
public:
    explicit Pointwise(Activation kind) : kind(kind) {}
    Tensor forward(const Tensor& x);
    Tensor backward(const Tensor& gout) const;
    Activation kind;

private:
    Tensor input_;
};

double gelu_scalar(double x);
double gelu_grad_scalar(double x);

// Normalizes over the channel axis of each (n,h,w) token; learnable
// per-channel scale and shift; epsilon 1e-5.
class LayerNormChannel {
public:
    LayerNormChannel(ParamStore& ps, const std::string& name, int channels);
    Tensor forward(const Tensor& x);
    Tensor backward(const Tensor& gout);

    Tensor* scale = nullptr;
    Tensor* shift = nullptr;
    int channels;
    static constexpr double kEps = 1e-5;

private:
    Tensor xhat_;     // cached normalized input
    Tensor inv_std_;  // (N,1,H,W)
};

// Row-wise softmax of a rank-2 matrix with max subtraction.
Tensor softmax_rows(const Tensor& m);

// Given A = softmax_rows(S) and dA, returns dS = A * (dA - rowsum(dA * A)).
Tensor softmax_rows_backward(const Tensor& a, const Tensor& da);

// Nearest-neighbor 2x spatial upsampling.
class NearestUpsample2x {
public:
    Tensor forward(const Tensor& x);
    Tensor backward(const Tensor& gout) const;

private:
    int in_h = 0, in_w = 0;
};

// Registration-order initialization: *.bias and *.shift to zero, *.scale to
// one, everything else N(0, 0.02^2).
void init_params(ParamStore& ps, Rng& rng);

}  // namespace fdm
