#include "fdm/layers.hpp"

#include <algorithm>
#include <cmath>

namespace fdm {

Tensor pad_input(const Tensor& x, int pb_h, int pa_h, int pb_w, int pa_w, PadMode mode) {
    check(x.rank() == 4, "pad_input: rank-4 tensor expected");
    check(pb_h >= 0 && pa_h >= 0 && pb_w >= 0 && pa_w >= 0, "pad_input: negative padding");
    int n = x.dims[0], c = x.dims[1], h = x.dims[2], w = x.dims[3];
    int hp = h + pb_h + pa_h, wp = w + pb_w + pa_w;
    Tensor out({n, c, hp, wp});
    for (int ni = 0; ni < n; ++ni)
        for (int ci = 0; ci < c; ++ci) {
            const double* src = x.v.data() + (static_cast<std::size_t>(ni) * c + ci) * h * w;
            double* dst = out.v.data() + (static_cast<std::size_t>(ni) * c + ci) * hp * wp;
            for (int i = 0; i < hp; ++i) {
                int si = i - pb_h;
                if (mode == PadMode::kPeriodic) si = ((si % h) + h) % h;
                if (si < 0 || si >= h) continue;  // zero rows stay zero
                for (int j = 0; j < wp; ++j) {
                    int sj = j - pb_w;
                    if (mode == PadMode::kPeriodic) sj = ((sj % w) + w) % w;
                    if (sj < 0 || sj >= w) continue;
                    dst[static_cast<std::size_t>(i) * wp + j] = src[static_cast<std::size_t>(si) * w + sj];
                }
            }
        }
    return out;
}

Tensor unpad_fold(const Tensor& gpad, int pb_h, int pa_h, int pb_w, int pa_w, PadMode mode) {
    check(gpad.rank() == 4, "unpad_fold: rank-4 tensor expected");
    int n = gpad.dims[0], c = gpad.dims[1], hp = gpad.dims[2], wp = gpad.dims[3];
    int h = hp - pb_h - pa_h, w = wp - pb_w - pa_w;
    check(h >= 1 && w >= 1, "unpad_fold: padding exceeds extents");
    Tensor out({n, c, h, w});
    for (int ni = 0; ni < n; ++ni)
        for (int ci = 0; ci < c; ++ci) {
            const double* src = gpad.v.data() + (static_cast<std::size_t>(ni) * c + ci) * hp * wp;
            double* dst = out.v.data() + (static_cast<std::size_t>(ni) * c + ci) * h * w;
            for (int i = 0; i < hp; ++i) {
                int si = i - pb_h;
                if (mode == PadMode::kPeriodic)
                    si = ((si % h) + h) % h;
                else if (si < 0 || si >= h)
                    continue;
                for (int j = 0; j < wp; ++j) {
                    int sj = j - pb_w;
                    if (mode == PadMode::kPeriodic)
                        sj = ((sj % w) + w) % w;
                    else if (sj < 0 || sj >= w)
                        continue;
                    dst[static_cast<std::size_t>(si) * w + sj] += src[static_cast<std::size_t>(i) * wp + j];
                }
            }
        }
    return out;
}

static void check_conv_shapes(const Tensor& x, const Tensor& w) {
    check(x.rank() == 4 && w.rank() == 4, "conv: rank-4 tensors expected");
    check(w.dims[1] == x.dims[1],
          "conv: channel mismatch, input " + x.shape_str() + " vs kernel " + w.shape_str());
    check(w.dims[2] == w.dims[3], "conv: square kernels only");
}

Tensor valid_conv(const Tensor& x, const Tensor& w, int stride) {
    check_conv_shapes(x, w);
    check(stride >= 1, "conv: stride must be >= 1");
    int n = x.dims[0], ci = x.dims[1], h = x.dims[2], wd = x.dims[3];
    int co = w.dims[0], k = w.dims[2];
    check(h >= k && wd >= k, "conv: input smaller than kernel");
    int ho = (h - k) / stride + 1, wo = (wd - k) / stride + 1;
    Tensor y({n, co, ho, wo});
    const double* xv = x.v.data();
    const double* wv = w.v.data();
    double* yv = y.v.data();
    for (int ni = 0; ni < n; ++ni)
        for (int c = 0; c < co; ++c) {
            const double* wc = wv + static_cast<std::size_t>(c) * ci * k * k;
            double* yc = yv + (static_cast<std::size_t>(ni) * co + c) * ho * wo;
            for (int i = 0; i < ho; ++i)
                for (int j = 0; j < wo; ++j) {
                    double acc = 0.0;
                    for (int cc = 0; cc < ci; ++cc) {
                        const double* xc = xv + ((static_cast<std::size_t>(ni) * ci + cc) * h +
                                                 static_cast<std::size_t>(i) * stride) * wd +
                                           static_cast<std::size_t>(j) * stride;
                        const double* wk = wc + static_cast<std::size_t>(cc) * k * k;
                        for (int u = 0; u < k; ++u) {
                            const double* xr = xc + static_cast<std::size_t>(u) * wd;
                            const double* wr = wk + static_cast<std::size_t>(u) * k;
                            for (int v = 0; v < k; ++v) acc += xr[v] * wr[v];
                        }
                    }
                    yc[static_cast<std::size_t>(i) * wo + j] = acc;
                }
        }
    return y;
}

Tensor scatter_conv(const Tensor& y, const Tensor& w, int stride, int out_h, int out_w) {
    check(y.rank() == 4 && w.rank() == 4, "scatter_conv: rank-4 tensors expected");
    check(y.dims[1] == w.dims[0], "scatter_conv: channel mismatch");
    int n = y.dims[0], co = y.dims[1], ho = y.dims[2], wo = y.dims[3];
    int ci = w.dims[1], k = w.dims[2];
    check((ho - 1) * stride + k <= out_h && (wo - 1) * stride + k <= out_w,
          "scatter_conv: target extents too small");
    Tensor x({n, ci, out_h, out_w});
    const double* yv = y.v.data();
    const double* wv = w.v.data();
    double* xv = x.v.data();
    for (int ni = 0; ni < n; ++ni)
        for (int c = 0; c < co; ++c) {
            const double* wc = wv + static_cast<std::size_t>(c) * ci * k * k;
            const double* yc = yv + (static_cast<std::size_t>(ni) * co + c) * ho * wo;
            for (int i = 0; i < ho; ++i)
                for (int j = 0; j < wo; ++j) {
                    double g = yc[static_cast<std::size_t>(i) * wo + j];
                    if (g == 0.0) continue;
                    for (int cc = 0; cc < ci; ++cc) {
                        double* xc = xv + ((static_cast<std::size_t>(ni) * ci + cc) * out_h +
                                           static_cast<std::size_t>(i) * stride) * out_w +
                                     static_cast<std::size_t>(j) * stride;
                        const double* wk = wc + static_cast<std::size_t>(cc) * k * k;
                        for (int u = 0; u < k; ++u) {
                            double* xr = xc + static_cast<std::size_t>(u) * out_w;
                            const double* wr = wk + static_cast<std::size_t>(u) * k;
                            for (int v = 0; v < k; ++v) xr[v] += wr[v] * g;
                        }
                    }
                }
        }
    return x;
}

void accumulate_conv_weight_grad(const Tensor& field, const Tensor& coeff, int stride,
                                 Tensor& gw) {
    check(field.rank() == 4 && coeff.rank() == 4 && gw.rank() == 4,
          "conv weight grad: rank-4 tensors expected");
    int n = field.dims[0], ci = field.dims[1], h = field.dims[2], wd = field.dims[3];
    int co = coeff.dims[1], ho = coeff.dims[2], wo = coeff.dims[3];
    int k = gw.dims[2];
    check(coeff.dims[0] == n, "conv weight grad: batch mismatch");
    check(gw.dims[0] == co && gw.dims[1] == ci, "conv weight grad: kernel shape mismatch");
    gw.ensure_grad();
    const double* fv = field.v.data();
    const double* cv = coeff.v.data();
    double* gv = gw.g.data();
    for (int ni = 0; ni < n; ++ni)
        for (int c = 0; c < co; ++c) {
            const double* cc0 = cv + (static_cast<std::size_t>(ni) * co + c) * ho * wo;
            double* gc = gv + static_cast<std::size_t>(c) * ci * k * k;
            for (int i = 0; i < ho; ++i)
                for (int j = 0; j < wo; ++j) {
                    double g = cc0[static_cast<std::size_t>(i) * wo + j];
                    if (g == 0.0) continue;
                    for (int cc = 0; cc < ci; ++cc) {
                        const double* fr0 = fv + ((static_cast<std::size_t>(ni) * ci + cc) * h +
                                                  static_cast<std::size_t>(i) * stride) * wd +
                                            static_cast<std::size_t>(j) * stride;
                        double* gk = gc + static_cast<std::size_t>(cc) * k * k;
                        for (int u = 0; u < k; ++u) {
                            const double* fr = fr0 + static_cast<std::size_t>(u) * wd;
                            double* gr = gk + static_cast<std::size_t>(u) * k;
                            for (int v = 0; v < k; ++v) gr[v] += g * fr[v];
                        }
                    }
                }
        }
}

Conv2d::Conv2d(ParamStore& ps, const std::string& name, int in_ch, int out_ch, int k,
               int stride, bool with_bias, PadMode mode, int pad_before, int pad_after)
    : in_ch(in_ch), out_ch(out_ch), k(k), stride(stride), mode(mode) {
    check(in_ch >= 1 && out_ch >= 1 && k >= 1 && stride >= 1, "Conv2d: bad geometry");
    if (pad_before < 0) {
        this->pad_before = (stride == 1) ? (k - 1) / 2 : 0;
        this->pad_after = (stride == 1) ? k - 1 - this->pad_before : 0;
    } else {
        check(pad_after >= 0, "Conv2d: pad_after must accompany pad_before");
        this->pad_before = pad_before;
        this->pad_after = pad_after;
    }
    weight = ps.create(name + ".weight", {out_ch, in_ch, k, k});
    if (with_bias) bias = ps.create(name + ".bias", {out_ch});
}

Tensor Conv2d::forward(const Tensor& x) {
    check(x.rank() == 4 && x.dims[1] == in_ch,
          "Conv2d: expected " + std::to_string(in_ch) + " channels, got " + x.shape_str());
    padded_ = pad_input(x, pad_before, pad_after, pad_before, pad_after, mode);
    Tensor y = valid_conv(padded_, *weight, stride);
    if (bias) {
        int n = y.dims[0], co = y.dims[1];
        std::size_t plane = static_cast<std::size_t>(y.dims[2]) * y.dims[3];
        for (int ni = 0; ni < n; ++ni)
            for (int c = 0; c < co; ++c) {
                double b = bias->v[c];
                double* yc = y.v.data() + (static_cast<std::size_t>(ni) * co + c) * plane;
                for (std::size_t i = 0; i < plane; ++i) yc[i] += b;
            }
    }
    return y;
}

Tensor Conv2d::backward(const Tensor& gout) {
    check(padded_.rank() == 4, "Conv2d: backward before forward");
    accumulate_conv_weight_grad(padded_, gout, stride, *weight);
    if (bias) {
        int n = gout.dims[0], co = gout.dims[1];
        std::size_t plane = static_cast<std::size_t>(gout.dims[2]) * gout.dims[3];
        for (int ni = 0; ni < n; ++ni)
            for (int c = 0; c < co; ++c) {
                const double* gc = gout.v.data() + (static_cast<std::size_t>(ni) * co + c) * plane;
                double s = 0.0;
                for (std::size_t i = 0; i < plane; ++i) s += gc[i];
                bias->g[c] += s;
            }
    }
    Tensor gpad = scatter_conv(gout, *weight, stride, padded_.dims[2], padded_.dims[3]);
    return unpad_fold(gpad, pad_before, pad_after, pad_before, pad_after, mode);
}

ConvTranspose2d::ConvTranspose2d(ParamStore& ps, const std::string& name, int in_ch,
                                 int out_ch, int k, int stride, bool with_bias)
    : in_ch(in_ch), out_ch(out_ch), k(k), stride(stride) {
    check(in_ch >= 1 && out_ch >= 1 && k >= 1 && stride >= 1, "ConvTranspose2d: bad geometry");
    weight = ps.create(name + ".weight", {in_ch, out_ch, k, k});
    if (with_bias) bias = ps.create(name + ".bias", {out_ch});
}

Tensor ConvTranspose2d::forward(const Tensor& x) {
    check(x.rank() == 4 && x.dims[1] == in_ch,
          "ConvTranspose2d: expected " + std::to_string(in_ch) + " channels, got " + x.shape_str());
    input_ = x;
    int oh = (x.dims[2] - 1) * stride + k;
    int ow = (x.dims[3] - 1) * stride + k;
    Tensor y = scatter_conv(x, *weight, stride, oh, ow);
    if (bias) {
        std::size_t plane = static_cast<std::size_t>(oh) * ow;
        for (int ni = 0; ni < y.dims[0]; ++ni)
            for (int c = 0; c < out_ch; ++c) {
                double b = bias->v[c];
                double* yc = y.v.data() + (static_cast<std::size_t>(ni) * out_ch + c) * plane;
                for (std::size_t i = 0; i < plane; ++i) yc[i] += b;
            }
    }
    return y;
}

Tensor ConvTranspose2d::backward(const Tensor& gout) {
    check(input_.rank() == 4, "ConvTranspose2d: backward before forward");
    accumulate_conv_weight_grad(gout, input_, stride, *weight);
    if (bias) {
        std::size_t plane = static_cast<std::size_t>(gout.dims[2]) * gout.dims[3];
        for (int ni = 0; ni < gout.dims[0]; ++ni)
            for (int c = 0; c < out_ch; ++c) {
                const double* gc = gout.v.data() + (static_cast<std::size_t>(ni) * out_ch + c) * plane;
                double s = 0.0;
                for (std::size_t i = 0; i < plane; ++i) s += gc[i];
                bias->g[c] += s;
            }
    }
    return valid_conv(gout, *weight, stride);
}

double gelu_scalar(double x) { return 0.5 * x * (1.0 + std::erf(x / std::sqrt(2.0))); }

double gelu_grad_scalar(double x) {
    double cdf = 0.5 * (1.0 + std::erf(x / std::sqrt(2.0)));
    double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * kPi);
    return cdf + x * pdf;
}

Tensor Pointwise::forward(const Tensor& x) {
    input_ = x;
    Tensor y = x;
    if (kind == Activation::kRelu)
        for (double& t : y.v) t = std::max(0.0, t);
    else
        for (double& t : y.v) t = gelu_scalar(t);
    return y;
}

Tensor Pointwise::backward(const Tensor& gout) const {
    check(input_.numel() == gout.numel(), "Pointwise: backward shape mismatch");
    Tensor gin = gout;
    if (kind == Activation::kRelu) {
        for (std::size_t i = 0; i < gin.v.size(); ++i)
            gin.v[i] = input_.v[i] > 0.0 ? gout.v[i] : 0.0;
    } else {
        for (std::size_t i = 0; i < gin.v.size(); ++i)
            gin.v[i] = gout.v[i] * gelu_grad_scalar(input_.v[i]);
    }
    return gin;
}

LayerNormChannel::LayerNormChannel(ParamStore& ps, const std::string& name, int channels)
    : channels(channels) {
    scale = ps.create(name + ".scale", {channels});
    shift = ps.create(name + ".shift", {channels});
}

Tensor LayerNormChannel::forward(const Tensor& x) {
    check(x.rank() == 4 && x.dims[1] == channels, "LayerNormChannel: channel mismatch");
    int n = x.dims[0], c = x.dims[1], h = x.dims[2], w = x.dims[3];
    std::size_t plane = static_cast<std::size_t>(h) * w;
    xhat_ = Tensor({n, c, h, w});
    inv_std_ = Tensor({n, 1, h, w});
    Tensor y({n, c, h, w});
    for (int ni = 0; ni < n; ++ni) {
        const double* xb = x.v.data() + static_cast<std::size_t>(ni) * c * plane;
        double* hb = xhat_.v.data() + static_cast<std::size_t>(ni) * c * plane;
        double* yb = y.v.data() + static_cast<std::size_t>(ni) * c * plane;
        double* ib = inv_std_.v.data() + static_cast<std::size_t>(ni) * plane;
        for (std::size_t t = 0; t < plane; ++t) {
            double mean = 0.0;
            for (int cc = 0; cc < c; ++cc) mean += xb[cc * plane + t];
            mean /= c;
            double var = 0.0;
            for (int cc = 0; cc < c; ++cc) {
                double d = xb[cc * plane + t] - mean;
                var += d * d;
            }
            var /= c;
            double inv = 1.0 / std::sqrt(var + kEps);
            ib[t] = inv;
            for (int cc = 0; cc < c; ++cc) {
                double xh = (xb[cc * plane + t] - mean) * inv;
                hb[cc * plane + t] = xh;
                yb[cc * plane + t] = scale->v[cc] * xh + shift->v[cc];
            }
        }
    }
    return y;
}

Tensor LayerNormChannel::backward(const Tensor& gout) {
    check(xhat_.same_shape(gout), "LayerNormChannel: backward shape mismatch");
    int n = gout.dims[0], c = gout.dims[1], h = gout.dims[2], w = gout.dims[3];
    std::size_t plane = static_cast<std::size_t>(h) * w;
    Tensor gin({n, c, h, w});
    for (int ni = 0; ni < n; ++ni) {
        const double* gb = gout.v.data() + static_cast<std::size_t>(ni) * c * plane;
        const double* hb = xhat_.v.data() + static_cast<std::size_t>(ni) * c * plane;
        const double* ib = inv_std_.v.data() + static_cast<std::size_t>(ni) * plane;
        double* ob = gin.v.data() + static_cast<std::size_t>(ni) * c * plane;
        for (std::size_t t = 0; t < plane; ++t) {
            double m1 = 0.0, m2 = 0.0;
            for (int cc = 0; cc < c; ++cc) {
                double dxh = gb[cc * plane + t] * scale->v[cc];
                m1 += dxh;
                m2 += dxh * hb[cc * plane + t];
            }
            m1 /= c;
            m2 /= c;
            for (int cc = 0; cc < c; ++cc) {
                double dxh = gb[cc * plane + t] * scale->v[cc];
                ob[cc * plane + t] = ib[t] * (dxh - m1 - hb[cc * plane + t] * m2);
                scale->g[cc] += gb[cc * plane + t] * hb[cc * plane + t];
                shift->g[cc] += gb[cc * plane + t];
            }
        }
    }
    return gin;
}

Tensor softmax_rows(const Tensor& m) {
    check(m.rank() == 2, "softmax_rows: rank-2 matrix expected");
    int rows = m.dims[0], cols = m.dims[1];
    Tensor out({rows, cols});
    for (int i = 0; i < rows; ++i) {
        const double* r = m.v.data() + static_cast<std::size_t>(i) * cols;
        double* o = out.v.data() + static_cast<std::size_t>(i) * cols;
        double mx = r[0];
        for (int j = 1; j < cols; ++j) mx = std::max(mx, r[j]);
        check(is_finite(mx), "softmax_rows: non-finite entry");
        double sum = 0.0;
        for (int j = 0; j < cols; ++j) {
            o[j] = std::exp(r[j] - mx);
            sum += o[j];
        }
        for (int j = 0; j < cols; ++j) o[j] /= sum;
    }
    return out;
}

Tensor softmax_rows_backward(const Tensor& a, const Tensor& da) {
    check(a.same_shape(da), "softmax_rows_backward: shape mismatch");
    int rows = a.dims[0], cols = a.dims[1];
    Tensor out({rows, cols});
    for (int i = 0; i < rows; ++i) {
        const double* av = a.v.data() + static_cast<std::size_t>(i) * cols;
        const double* dv = da.v.data() + static_cast<std::size_t>(i) * cols;
        double* o = out.v.data() + static_cast<std::size_t>(i) * cols;
        double dot = 0.0;
        for (int j = 0; j < cols; ++j) dot += av[j] * dv[j];
        for (int j = 0; j < cols; ++j) o[j] = av[j] * (dv[j] - dot);
    }
    return out;
}

Tensor NearestUpsample2x::forward(const Tensor& x) {
    check(x.rank() == 4, "NearestUpsample2x: rank-4 tensor expected");
    in_h = x.dims[2];
    in_w = x.dims[3];
    Tensor y({x.dims[0], x.dims[1], 2 * in_h, 2 * in_w});
    for (int ni = 0; ni < x.dims[0]; ++ni)
        for (int c = 0; c < x.dims[1]; ++c) {
            const double* src = x.v.data() + (static_cast<std::size_t>(ni) * x.dims[1] + c) *
                                                 in_h * in_w;
            double* dst = y.v.data() + (static_cast<std::size_t>(ni) * x.dims[1] + c) *
                                           (4 * static_cast<std::size_t>(in_h) * in_w);
            for (int i = 0; i < 2 * in_h; ++i)
                for (int j = 0; j < 2 * in_w; ++j)
                    dst[static_cast<std::size_t>(i) * 2 * in_w + j] =
                        src[static_cast<std::size_t>(i / 2) * in_w + j / 2];
        }
    return y;
}

Tensor NearestUpsample2x::backward(const Tensor& gout) const {
    check(gout.rank() == 4 && gout.dims[2] == 2 * in_h && gout.dims[3] == 2 * in_w,
          "NearestUpsample2x: backward shape mismatch");
    Tensor gin({gout.dims[0], gout.dims[1], in_h, in_w});
    for (int ni = 0; ni < gout.dims[0]; ++ni)
        for (int c = 0; c < gout.dims[1]; ++c) {
            const double* src = gout.v.data() + (static_cast<std::size_t>(ni) * gout.dims[1] + c) *
                                                    (4 * static_cast<std::size_t>(in_h) * in_w);
            double* dst = gin.v.data() + (static_cast<std::size_t>(ni) * gout.dims[1] + c) *
                                             in_h * in_w;
            for (int i = 0; i < 2 * in_h; ++i)
                for (int j = 0; j < 2 * in_w; ++j)
                    dst[static_cast<std::size_t>(i / 2) * in_w + j / 2] +=
                        src[static_cast<std::size_t>(i) * 2 * in_w + j];
        }
    return gin;
}

void init_params(ParamStore& ps, Rng& rng) {
    for (std::size_t i = 0; i < ps.size(); ++i) {
        const std::string& name = ps.name(i);
        Tensor& p = ps.param(i);
        if (name.ends_with(".bias") || name.ends_with(".shift"))
            std::fill(p.v.begin(), p.v.end(), 0.0);
        else if (name.ends_with(".scale"))
            std::fill(p.v.begin(), p.v.end(), 1.0);
        else
            for (double& x : p.v) x = rng.normal(0.0, 0.02);
    }
}

}  // namespace fdm
