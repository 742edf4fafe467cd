#include "fdm/maformer.hpp"

#include <cmath>
#include <cstring>
#include <sstream>

#include "fdm/bridge.hpp"

namespace fdm {

namespace {

void add_into(Tensor& a, const Tensor& b) {
    check(a.dims == b.dims, "add: shape mismatch " + a.shape_str() + " vs " + b.shape_str());
    for (std::size_t i = 0; i < a.v.size(); ++i) a.v[i] += b.v[i];
}

Tensor channel_slice(const Tensor& x, int c0, int c1) {
    int b = x.dims[0], ch = x.dims[1], h = x.dims[2], w = x.dims[3];
    check(0 <= c0 && c0 < c1 && c1 <= ch, "channel_slice: bad range");
    Tensor out({b, c1 - c0, h, w});
    std::size_t plane = static_cast<std::size_t>(h) * w;
    for (int n = 0; n < b; ++n)
        for (int c = c0; c < c1; ++c)
            std::memcpy(&out.v[((static_cast<std::size_t>(n) * (c1 - c0)) + (c - c0)) * plane],
                        &x.v[((static_cast<std::size_t>(n) * ch) + c) * plane],
                        plane * sizeof(double));
    return out;
}

Tensor channel_concat(const Tensor& a, const Tensor& b) {
    check(a.dims[0] == b.dims[0] && a.dims[2] == b.dims[2] && a.dims[3] == b.dims[3],
          "concat: shape mismatch " + a.shape_str() + " vs " + b.shape_str());
    int n = a.dims[0], ca = a.dims[1], cb = b.dims[1], h = a.dims[2], w = a.dims[3];
    Tensor out({n, ca + cb, h, w});
    std::size_t plane = static_cast<std::size_t>(h) * w;
    for (int i = 0; i < n; ++i) {
        std::memcpy(&out.v[static_cast<std::size_t>(i) * (ca + cb) * plane],
                    &a.v[static_cast<std::size_t>(i) * ca * plane], ca * plane * sizeof(double));
        std::memcpy(&out.v[(static_cast<std::size_t>(i) * (ca + cb) + ca) * plane],
                    &b.v[static_cast<std::size_t>(i) * cb * plane], cb * plane * sizeof(double));
    }
    return out;
}

// {Nw,T,C} x {C,D} -> {Nw,T,D}
Tensor t3_mul(const Tensor& x, const Tensor& w) {
    int nw = x.dims[0], t = x.dims[1], c = x.dims[2], d = w.dims[1];
    check(w.dims[0] == c, "matmul: shape mismatch");
    Tensor out({nw, t, d});
    for (int i = 0; i < nw * t; ++i) {
        const double* xr = &x.v[static_cast<std::size_t>(i) * c];
        double* orow = &out.v[static_cast<std::size_t>(i) * d];
        for (int a = 0; a < c; ++a) {
            double xv = xr[a];
            const double* wr = &w.v[static_cast<std::size_t>(a) * d];
            for (int bcol = 0; bcol < d; ++bcol) orow[bcol] += xv * wr[bcol];
        }
    }
    return out;
}

// {Nw,T,D} x {C,D}^T -> {Nw,T,C}
Tensor t3_mul_t(const Tensor& x, const Tensor& w) {
    int nw = x.dims[0], t = x.dims[1], d = x.dims[2], c = w.dims[0];
    check(w.dims[1] == d, "matmul: shape mismatch");
    Tensor out({nw, t, c});
    for (int i = 0; i < nw * t; ++i) {
        const double* xr = &x.v[static_cast<std::size_t>(i) * d];
        double* orow = &out.v[static_cast<std::size_t>(i) * c];
        for (int a = 0; a < c; ++a) {
            const double* wr = &w.v[static_cast<std::size_t>(a) * d];
            double acc = 0.0;
            for (int bcol = 0; bcol < d; ++bcol) acc += xr[bcol] * wr[bcol];
            orow[a] = acc;
        }
    }
    return out;
}

// w.g[c][d] += sum over rows of x[..,c] * g[..,d]
void t3_acc_wgrad(const Tensor& x, const Tensor& g, Tensor& w) {
    int rows = x.dims[0] * x.dims[1], c = x.dims[2], d = g.dims[2];
    for (int i = 0; i < rows; ++i) {
        const double* xr = &x.v[static_cast<std::size_t>(i) * c];
        const double* gr = &g.v[static_cast<std::size_t>(i) * d];
        for (int a = 0; a < c; ++a) {
            double xv = xr[a];
            double* wr = &w.g[static_cast<std::size_t>(a) * d];
            for (int bcol = 0; bcol < d; ++bcol) wr[bcol] += xv * gr[bcol];
        }
    }
}

int half_width(int w) {
    check(w % 2 == 0, "stmc: width must be even");
    return w / 2;
}

const ModelConfig& validated(const ModelConfig& cfg) {
    cfg.validate();
    return cfg;
}

}  // namespace

void ModelConfig::validate() const {
    check(bands >= 1, "model: bands must be positive");
    check(width >= 2 && width % 2 == 0, "model: width must be even and at least 2");
    check(period >= 1, "model: period must be positive");
    check(window >= 1, "model: window must be positive");
    check(heads >= 1, "model: heads must be positive");
    check((width / 2) % heads == 0, "model: half width must be divisible by heads");
    for (int b : blocks) check(b >= 1, "model: each stage needs at least one block");
    check(mlp_ratio >= 1, "model: mlp_ratio must be positive");
    check(mwp_hidden >= 1, "model: mwp_hidden must be positive");
    check(msfa_kernel >= 1, "model: msfa_kernel must be positive");
}

int stage_period(const ModelConfig& cfg, int stage) {
    int p = cfg.period >> stage;
    return p < 1 ? 1 : p;
}

int stage_width(const ModelConfig& cfg, int stage) { return cfg.width << stage; }

std::string config_to_text(const ModelConfig& cfg) {
    std::ostringstream os;
    os << "bands=" << cfg.bands << "\n";
    os << "width=" << cfg.width << "\n";
    os << "period=" << cfg.period << "\n";
    os << "window=" << cfg.window << "\n";
    os << "blocks=" << cfg.blocks[0] << "," << cfg.blocks[1] << "," << cfg.blocks[2] << ","
       << cfg.blocks[3] << "\n";
    os << "heads=" << cfg.heads << "\n";
    os << "mlp_ratio=" << cfg.mlp_ratio << "\n";
    os << "mwp_hidden=" << cfg.mwp_hidden << "\n";
    os << "msfa_kernel=" << cfg.msfa_kernel << "\n";
    return os.str();
}

ModelConfig config_from_text(const std::string& text) {
    ModelConfig cfg;
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
        auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        std::string key = line.substr(0, eq);
        std::string val = line.substr(eq + 1);
        try {
            if (key == "bands") cfg.bands = std::stoi(val);
            else if (key == "width") cfg.width = std::stoi(val);
            else if (key == "period") cfg.period = std::stoi(val);
            else if (key == "window") cfg.window = std::stoi(val);
            else if (key == "heads") cfg.heads = std::stoi(val);
            else if (key == "mlp_ratio") cfg.mlp_ratio = std::stoi(val);
            else if (key == "mwp_hidden") cfg.mwp_hidden = std::stoi(val);
            else if (key == "msfa_kernel") cfg.msfa_kernel = std::stoi(val);
            else if (key == "blocks") {
                std::istringstream bs(val);
                std::string tok;
                for (int i = 0; i < 4 && std::getline(bs, tok, ','); ++i)
                    cfg.blocks[static_cast<std::size_t>(i)] = std::stoi(tok);
            }
        } catch (const std::exception&) {
            fail("model config: bad value for " + key + ": " + val);
        }
    }
    cfg.validate();
    return cfg;
}

Mwp::Mwp(ParamStore& ps, const std::string& name, int period_in, int hidden, int k_in)
    : period(period_in),
      k(k_in),
      encoding_({1, 2, period_in, period_in}),
      in_(ps, name + ".in", 2, hidden, 1),
      relu_(Activation::kRelu),
      out_(ps, name + ".out", hidden, k_in * k_in, 1, 1, false) {
    level = ps.create(name + ".out.scale", {k * k});
    for (int m = 0; m < period; ++m)
        for (int n = 0; n < period; ++n) {
            encoding_.at(0, 0, m, n) = double(m) / period;
            encoding_.at(0, 1, m, n) = double(n) / period;
        }
}

Tensor Mwp::forward() {
    Tensor h = in_.forward(encoding_);
    Tensor r = relu_.forward(h);
    Tensor o = out_.forward(r);
    for (int c = 0; c < k * k; ++c)
        for (int m = 0; m < period; ++m)
            for (int n = 0; n < period; ++n) o.at(0, c, m, n) += level->v[static_cast<std::size_t>(c)];
    return o;
}

void Mwp::backward(const Tensor& grad_out) {
    for (int c = 0; c < k * k; ++c)
        for (int m = 0; m < period; ++m)
            for (int n = 0; n < period; ++n)
                level->g[static_cast<std::size_t>(c)] += grad_out.at(0, c, m, n);
    Tensor dr = out_.backward(grad_out);
    Tensor dh = relu_.backward(dr);
    in_.backward(dh);  // the encoding is a constant, its gradient is dropped
}

MsfaConv::MsfaConv(ParamStore& ps, const std::string& name, int in_ch_a, int out_ch_a,
                   int period_a, int k_a, int mwp_hidden, PadMode mode)
    : mwp(ps, name + ".mwp", period_a, mwp_hidden, k_a),
      in_ch(in_ch_a),
      out_ch(out_ch_a),
      period(period_a),
      k(k_a),
      mode_(mode),
      pb_((k_a - 1) / 2),
      pa_(k_a - 1 - (k_a - 1) / 2) {
    check(in_ch >= 1 && out_ch >= 1 && period >= 1 && k >= 1, "msfa_conv: bad configuration");
    weight = ps.create(name + ".weight", {out_ch, in_ch, k, k});
    bias = ps.create(name + ".bias", {out_ch});
}

void MsfaConv::build_effective() {
    int k2 = k * k, pp = period * period;
    eff_.assign(static_cast<std::size_t>(out_ch) * in_ch * k2 * pp, 0.0);
    for (int o = 0; o < out_ch; ++o)
        for (int ci = 0; ci < in_ch; ++ci)
            for (int t = 0; t < k2; ++t) {
                double wv = weight->v[static_cast<std::size_t>((o * in_ch + ci) * k2 + t)];
                double* dst = &eff_[static_cast<std::size_t>((o * in_ch + ci) * k2 + t) * pp];
                const double* m = &mod_.v[static_cast<std::size_t>(t) * pp];
                for (int c = 0; c < pp; ++c) dst[c] = wv * m[c];
            }
}

Tensor MsfaConv::forward(const Tensor& x) {
    check(x.dims.size() == 4 && x.dims[1] == in_ch,
          "msfa_conv: expected {B," + std::to_string(in_ch) + ",H,W}, got " + x.shape_str());
    int b = x.dims[0], m = x.dims[2], n = x.dims[3];
    check(m % period == 0 && n % period == 0,
          "msfa_conv: extents " + std::to_string(m) + "x" + std::to_string(n) +
              " not divisible by period " + std::to_string(period));
    mod_ = mwp.forward();
    padded_ = pad_input(x, pb_, pa_, pb_, pa_, mode_);
    build_effective();

    int ph = m + pb_ + pa_, pw = n + pb_ + pa_;
    int k2 = k * k, pp = period * period, p = period;
    Tensor out({b, out_ch, m, n});
    for (int nb = 0; nb < b; ++nb)
        for (int o = 0; o < out_ch; ++o) {
            double* obase = &out.v[(static_cast<std::size_t>(nb) * out_ch + o) *
                                   static_cast<std::size_t>(m) * n];
            double bv = bias->v[static_cast<std::size_t>(o)];
            for (int i = 0; i < m * n; ++i) obase[i] = bv;
            for (int ci = 0; ci < in_ch; ++ci) {
                const double* effc = &eff_[static_cast<std::size_t>((o * in_ch + ci) * k2) * pp];
                const double* xc = &padded_.v[(static_cast<std::size_t>(nb) * in_ch + ci) *
                                              static_cast<std::size_t>(ph) * pw];
                for (int i = 0; i < m; ++i) {
                    int a = i % p;
                    double* orow = obase + static_cast<std::size_t>(i) * n;
                    for (int u = 0; u < k; ++u) {
                        const double* xrow = xc + static_cast<std::size_t>(i + u) * pw;
                        for (int v = 0; v < k; ++v) {
                            const double* xoff = xrow + v;
                            const double* wvec = effc + static_cast<std::size_t>(u * k + v) * pp + a * p;
                            for (int j0 = 0; j0 < n; j0 += p)
                                for (int bb = 0; bb < p; ++bb) orow[j0 + bb] += xoff[j0 + bb] * wvec[bb];
                        }
                    }
                }
            }
        }
    return out;
}

Tensor MsfaConv::backward(const Tensor& gout) {
    int b = gout.dims[0], m = gout.dims[2], n = gout.dims[3];
    check(gout.dims[1] == out_ch && b == padded_.dims[0], "msfa_conv: gradient shape mismatch");
    int ph = m + pb_ + pa_, pw = n + pb_ + pa_;
    int k2 = k * k, pp = period * period, p = period;
    deff_.assign(eff_.size(), 0.0);
    Tensor gpad({b, in_ch, ph, pw});

    for (int nb = 0; nb < b; ++nb)
        for (int o = 0; o < out_ch; ++o) {
            const double* gbase = &gout.v[(static_cast<std::size_t>(nb) * out_ch + o) *
                                          static_cast<std::size_t>(m) * n];
            double acc = 0.0;
            for (int i = 0; i < m * n; ++i) acc += gbase[i];
            bias->g[static_cast<std::size_t>(o)] += acc;
            for (int ci = 0; ci < in_ch; ++ci) {
                const double* effc = &eff_[static_cast<std::size_t>((o * in_ch + ci) * k2) * pp];
                double* deffc = &deff_[static_cast<std::size_t>((o * in_ch + ci) * k2) * pp];
                const double* xc = &padded_.v[(static_cast<std::size_t>(nb) * in_ch + ci) *
                                              static_cast<std::size_t>(ph) * pw];
                double* gxc = &gpad.v[(static_cast<std::size_t>(nb) * in_ch + ci) *
                                      static_cast<std::size_t>(ph) * pw];
                for (int i = 0; i < m; ++i) {
                    int a = i % p;
                    const double* grow = gbase + static_cast<std::size_t>(i) * n;
                    for (int u = 0; u < k; ++u) {
                        const double* xrow = xc + static_cast<std::size_t>(i + u) * pw;
                        double* gxrow = gxc + static_cast<std::size_t>(i + u) * pw;
                        for (int v = 0; v < k; ++v) {
                            const double* xoff = xrow + v;
                            double* gxoff = gxrow + v;
                            const double* wvec = effc + static_cast<std::size_t>(u * k + v) * pp + a * p;
                            double* dvec = deffc + static_cast<std::size_t>(u * k + v) * pp + a * p;
                            for (int j0 = 0; j0 < n; j0 += p)
                                for (int bb = 0; bb < p; ++bb) {
                                    double gv = grow[j0 + bb];
                                    gxoff[j0 + bb] += gv * wvec[bb];
                                    dvec[bb] += gv * xoff[j0 + bb];
                                }
                        }
                    }
                }
            }
        }

    // Split the effective-kernel gradient between the base kernel and the
    // modulation maps.
    Tensor dmod({1, k2, p, p});
    for (int o = 0; o < out_ch; ++o)
        for (int ci = 0; ci < in_ch; ++ci)
            for (int t = 0; t < k2; ++t) {
                std::size_t base = static_cast<std::size_t>((o * in_ch + ci) * k2 + t) * pp;
                double wv = weight->v[static_cast<std::size_t>((o * in_ch + ci) * k2 + t)];
                double wacc = 0.0;
                for (int c = 0; c < pp; ++c) {
                    double d = deff_[base + c];
                    wacc += d * mod_.v[static_cast<std::size_t>(t) * pp + c];
                    dmod.v[static_cast<std::size_t>(t) * pp + c] += d * wv;
                }
                weight->g[static_cast<std::size_t>((o * in_ch + ci) * k2 + t)] += wacc;
            }
    mwp.backward(dmod);
    return unpad_fold(gpad, pb_, pa_, pb_, pa_, mode_);
}

Tensor msfa_pool(const Tensor& x, int p) {
    check(x.dims.size() == 4, "msfa_pool: expected a rank-4 tensor");
    check(p >= 1, "msfa_pool: period must be positive");
    int b = x.dims[0], ch = x.dims[1], m = x.dims[2], n = x.dims[3];
    check(m % (2 * p) == 0 && n % (2 * p) == 0,
          "msfa_pool: extents " + std::to_string(m) + "x" + std::to_string(n) +
              " not divisible by twice the period " + std::to_string(p));
    int mo = m / 2, no = n / 2;
    Tensor out({b, ch, mo, no});
    for (int nb = 0; nb < b; ++nb)
        for (int c = 0; c < ch; ++c) {
            const double* xc = &x.v[(static_cast<std::size_t>(nb) * ch + c) *
                                    static_cast<std::size_t>(m) * n];
            double* oc = &out.v[(static_cast<std::size_t>(nb) * ch + c) *
                                static_cast<std::size_t>(mo) * no];
            for (int i = 0; i < mo; ++i)
                for (int j = 0; j < no; ++j) {
                    double acc = 0.0;
                    int cnt = 0;
                    for (int r = i; r < m; r += p)
                        for (int s = j; s < n; s += p) {
                            acc += xc[static_cast<std::size_t>(r) * n + s];
                            ++cnt;
                        }
                    oc[static_cast<std::size_t>(i) * no + j] = acc / cnt;
                }
        }
    return out;
}

Tensor msfa_pool_backward(const Tensor& gout, int p, int in_h, int in_w) {
    int b = gout.dims[0], ch = gout.dims[1], mo = gout.dims[2], no = gout.dims[3];
    check(mo == in_h / 2 && no == in_w / 2, "msfa_pool: gradient shape mismatch");
    Tensor gin({b, ch, in_h, in_w});
    for (int nb = 0; nb < b; ++nb)
        for (int c = 0; c < ch; ++c) {
            const double* gc = &gout.v[(static_cast<std::size_t>(nb) * ch + c) *
                                       static_cast<std::size_t>(mo) * no];
            double* xc = &gin.v[(static_cast<std::size_t>(nb) * ch + c) *
                                static_cast<std::size_t>(in_h) * in_w];
            for (int i = 0; i < mo; ++i)
                for (int j = 0; j < no; ++j) {
                    int cr = (in_h - 1 - i) / p + 1;
                    int cs = (in_w - 1 - j) / p + 1;
                    double gv = gc[static_cast<std::size_t>(i) * no + j] / (double(cr) * cs);
                    for (int r = i; r < in_h; r += p)
                        for (int s = j; s < in_w; s += p)
                            xc[static_cast<std::size_t>(r) * in_w + s] += gv;
                }
        }
    return gin;
}

RConv::RConv(ParamStore& ps, const std::string& name, int ch)
    : c1_(ps, name + ".c1", ch, ch, 3), relu_(Activation::kRelu), c2_(ps, name + ".c2", ch, ch, 3) {}

Tensor RConv::forward(const Tensor& x) {
    Tensor y = c2_.forward(relu_.forward(c1_.forward(x)));
    add_into(y, x);
    return y;
}

Tensor RConv::backward(const Tensor& gout) {
    Tensor d = c1_.backward(relu_.backward(c2_.backward(gout)));
    add_into(d, gout);
    return d;
}

PeriodicBranch::PeriodicBranch(ParamStore& ps, const std::string& name, int ch, int period,
                               int msfa_k, int mwp_hidden)
    : conv(ps, name + ".conv", ch, ch, period, msfa_k, mwp_hidden),
      period_(period),
      r1_(ps, name + ".r1", ch),
      r2_(ps, name + ".r2", ch) {}

Tensor PeriodicBranch::forward(const Tensor& x) {
    in_h_ = x.dims[2];
    in_w_ = x.dims[3];
    Tensor f = conv.forward(x);
    f = msfa_pool(f, period_);
    f = r2_.forward(r1_.forward(f));
    return up_.forward(f);
}

Tensor PeriodicBranch::backward(const Tensor& gout) {
    Tensor g = up_.backward(gout);
    g = r1_.backward(r2_.backward(g));
    g = msfa_pool_backward(g, period_, in_h_, in_w_);
    return conv.backward(g);
}

Tensor window_partition(const Tensor& x, int K, int shift) {
    check(x.dims.size() == 4, "window_partition: expected a rank-4 tensor");
    int b = x.dims[0], c = x.dims[1], m = x.dims[2], n = x.dims[3];
    check(K >= 1 && m % K == 0 && n % K == 0,
          "window_partition: extents " + std::to_string(m) + "x" + std::to_string(n) +
              " not divisible by window " + std::to_string(K));
    check(shift >= 0 && shift < K, "window_partition: shift must lie in [0, K)");
    int wh = m / K, ww = n / K, t = K * K;
    Tensor out({b * wh * ww, t, c});
    for (int nb = 0; nb < b; ++nb)
        for (int ci = 0; ci < c; ++ci) {
            const double* xc = &x.v[(static_cast<std::size_t>(nb) * c + ci) *
                                    static_cast<std::size_t>(m) * n];
            for (int wr = 0; wr < wh; ++wr)
                for (int wc = 0; wc < ww; ++wc) {
                    std::size_t wi = (static_cast<std::size_t>(nb) * wh + wr) * ww + wc;
                    for (int u = 0; u < K; ++u) {
                        int i = (wr * K + u + shift) % m;
                        for (int v = 0; v < K; ++v) {
                            int j = (wc * K + v + shift) % n;
                            out.v[(wi * t + u * K + v) * c + ci] = xc[static_cast<std::size_t>(i) * n + j];
                        }
                    }
                }
        }
    return out;
}

Tensor window_reverse(const Tensor& w, int K, int shift, int batch, int ch, int h, int wd) {
    int wh = h / K, ww = wd / K, t = K * K;
    check(w.dims.size() == 3 && w.dims[0] == batch * wh * ww && w.dims[1] == t && w.dims[2] == ch,
          "window_reverse: got " + w.shape_str());
    Tensor out({batch, ch, h, wd});
    for (int nb = 0; nb < batch; ++nb)
        for (int ci = 0; ci < ch; ++ci) {
            double* xc = &out.v[(static_cast<std::size_t>(nb) * ch + ci) *
                                static_cast<std::size_t>(h) * wd];
            for (int wr = 0; wr < wh; ++wr)
                for (int wc = 0; wc < ww; ++wc) {
                    std::size_t wi = (static_cast<std::size_t>(nb) * wh + wr) * ww + wc;
                    for (int u = 0; u < K; ++u) {
                        int i = (wr * K + u + shift) % h;
                        for (int v = 0; v < K; ++v) {
                            int j = (wc * K + v + shift) % wd;
                            xc[static_cast<std::size_t>(i) * wd + j] = w.v[(wi * t + u * K + v) * ch + ci];
                        }
                    }
                }
        }
    return out;
}

WindowAttention::WindowAttention(ParamStore& ps, const std::string& name, int ch_a, int window_a,
                                 int heads_a)
    : ch(ch_a), window(window_a), heads(heads_a) {
    check(heads >= 1 && ch % heads == 0, "attention: channels must be divisible by heads");
    int t = window * window;
    wq = ps.create(name + ".wq", {ch, ch});
    wk = ps.create(name + ".wk", {ch, ch});
    wv = ps.create(name + ".wv", {ch, ch});
    wo = ps.create(name + ".wo", {ch, ch});
    table = ps.create(name + ".table", {t, t});
}

Tensor WindowAttention::forward(const Tensor& x) {
    int t = window * window;
    check(x.dims.size() == 3 && x.dims[1] == t && x.dims[2] == ch,
          "attention: expected {Nw," + std::to_string(t) + "," + std::to_string(ch) + "}, got " +
              x.shape_str());
    int nw = x.dims[0], d = ch / heads;
    double scl = 1.0 / std::sqrt(double(d));
    x_ = x;
    q_ = t3_mul(x, *wq);
    k_ = t3_mul(x, *wk);
    v_ = t3_mul(x, *wv);
    attn_ = Tensor({nw * heads, t, t});
    for (int w = 0; w < nw; ++w)
        for (int h = 0; h < heads; ++h) {
            std::size_t abase = (static_cast<std::size_t>(w) * heads + h) * t * t;
            for (int t1 = 0; t1 < t; ++t1) {
                double* arow = &attn_.v[abase + static_cast<std::size_t>(t1) * t];
                const double* qrow = &q_.v[(static_cast<std::size_t>(w) * t + t1) * ch + h * d];
                double mx = -1e300;
                for (int t2 = 0; t2 < t; ++t2) {
                    const double* krow = &k_.v[(static_cast<std::size_t>(w) * t + t2) * ch + h * d];
                    double s = 0.0;
                    for (int a = 0; a < d; ++a) s += qrow[a] * krow[a];
                    s = s * scl + table->v[static_cast<std::size_t>(t1) * t + t2];
                    arow[t2] = s;
                    if (s > mx) mx = s;
                }
                double sum = 0.0;
                for (int t2 = 0; t2 < t; ++t2) {
                    arow[t2] = std::exp(arow[t2] - mx);
                    sum += arow[t2];
                }
                for (int t2 = 0; t2 < t; ++t2) arow[t2] /= sum;
            }
        }
    ctx_ = Tensor({nw, t, ch});
    for (int w = 0; w < nw; ++w)
        for (int h = 0; h < heads; ++h) {
            std::size_t abase = (static_cast<std::size_t>(w) * heads + h) * t * t;
            for (int t1 = 0; t1 < t; ++t1) {
                const double* arow = &attn_.v[abase + static_cast<std::size_t>(t1) * t];
                double* crow = &ctx_.v[(static_cast<std::size_t>(w) * t + t1) * ch + h * d];
                for (int t2 = 0; t2 < t; ++t2) {
                    const double* vrow = &v_.v[(static_cast<std::size_t>(w) * t + t2) * ch + h * d];
                    double av = arow[t2];
                    for (int a = 0; a < d; ++a) crow[a] += av * vrow[a];
                }
            }
        }
    return t3_mul(ctx_, *wo);
}

Tensor WindowAttention::backward(const Tensor& gout) {
    int t = window * window, nw = x_.dims[0], d = ch / heads;
    double scl = 1.0 / std::sqrt(double(d));
    check(gout.dims == std::vector<int>({nw, t, ch}), "attention: gradient shape mismatch");

    t3_acc_wgrad(ctx_, gout, *wo);
    Tensor dctx = t3_mul_t(gout, *wo);

    Tensor dq({nw, t, ch}), dk({nw, t, ch}), dv({nw, t, ch});
    std::vector<double> da(static_cast<std::size_t>(t) * t), ds(static_cast<std::size_t>(t) * t);
    for (int w = 0; w < nw; ++w)
        for (int h = 0; h < heads; ++h) {
            std::size_t abase = (static_cast<std::size_t>(w) * heads + h) * t * t;
            // dA = dctx . V^T, dV += A^T . dctx (per head slice)
            for (int t1 = 0; t1 < t; ++t1) {
                const double* crow = &dctx.v[(static_cast<std::size_t>(w) * t + t1) * ch + h * d];
                const double* arow = &attn_.v[abase + static_cast<std::size_t>(t1) * t];
                double* darow = &da[static_cast<std::size_t>(t1) * t];
                for (int t2 = 0; t2 < t; ++t2) {
                    const double* vrow = &v_.v[(static_cast<std::size_t>(w) * t + t2) * ch + h * d];
                    double* dvrow = &dv.v[(static_cast<std::size_t>(w) * t + t2) * ch + h * d];
                    double acc = 0.0;
                    double av = arow[t2];
                    for (int a = 0; a < d; ++a) {
                        acc += crow[a] * vrow[a];
                        dvrow[a] += av * crow[a];
                    }
                    darow[t2] = acc;
                }
            }
            // dS = A * (dA - rowsum(dA * A))
            for (int t1 = 0; t1 < t; ++t1) {
                const double* arow = &attn_.v[abase + static_cast<std::size_t>(t1) * t];
                const double* darow = &da[static_cast<std::size_t>(t1) * t];
                double dot = 0.0;
                for (int t2 = 0; t2 < t; ++t2) dot += arow[t2] * darow[t2];
                double* dsrow = &ds[static_cast<std::size_t>(t1) * t];
                for (int t2 = 0; t2 < t; ++t2) dsrow[t2] = arow[t2] * (darow[t2] - dot);
            }
            // dQ += scl * dS . K, dK += scl * dS^T . Q, table grads
            for (int t1 = 0; t1 < t; ++t1) {
                const double* dsrow = &ds[static_cast<std::size_t>(t1) * t];
                double* dqrow = &dq.v[(static_cast<std::size_t>(w) * t + t1) * ch + h * d];
                const double* qrow = &q_.v[(static_cast<std::size_t>(w) * t + t1) * ch + h * d];
                for (int t2 = 0; t2 < t; ++t2) {
                    double sv = dsrow[t2];
                    table->g[static_cast<std::size_t>(t1) * t + t2] += sv;
                    const double* krow = &k_.v[(static_cast<std::size_t>(w) * t + t2) * ch + h * d];
                    double* dkrow = &dk.v[(static_cast<std::size_t>(w) * t + t2) * ch + h * d];
                    for (int a = 0; a < d; ++a) {
                        dqrow[a] += scl * sv * krow[a];
                        dkrow[a] += scl * sv * qrow[a];
                    }
                }
            }
        }

    t3_acc_wgrad(x_, dq, *wq);
    t3_acc_wgrad(x_, dk, *wk);
    t3_acc_wgrad(x_, dv, *wv);
    Tensor dx = t3_mul_t(dq, *wq);
    add_into(dx, t3_mul_t(dk, *wk));
    add_into(dx, t3_mul_t(dv, *wv));
    return dx;
}

SwinBlock::SwinBlock(ParamStore& ps, const std::string& name, int ch, int window, int heads,
                     int mlp_ratio, int shift_a)
    : attn(ps, name + ".attn", ch, window, heads),
      shift(shift_a),
      window_(window),
      ln1_(ps, name + ".ln1", ch),
      ln2_(ps, name + ".ln2", ch),
      fc1_(ps, name + ".fc1", ch, ch * mlp_ratio, 1),
      gelu_(Activation::kGelu),
      fc2_(ps, name + ".fc2", ch * mlp_ratio, ch, 1) {
    check(shift >= 0 && shift < window, "swin: shift must lie in [0, window)");
}

Tensor SwinBlock::forward(const Tensor& x) {
    batch_ = x.dims[0];
    ch_ = x.dims[1];
    h_ = x.dims[2];
    w_ = x.dims[3];
    Tensor t = ln1_.forward(x);
    Tensor wnd = window_partition(t, window_, shift);
    Tensor att = attn.forward(wnd);
    Tensor y = window_reverse(att, window_, shift, batch_, ch_, h_, w_);
    add_into(y, x);
    Tensor t2 = ln2_.forward(y);
    Tensor mlp = fc2_.forward(gelu_.forward(fc1_.forward(t2)));
    add_into(mlp, y);
    return mlp;
}

Tensor SwinBlock::backward(const Tensor& gout) {
    Tensor dy = ln2_.backward(fc1_.backward(gelu_.backward(fc2_.backward(gout))));
    add_into(dy, gout);
    Tensor datt = window_partition(dy, window_, shift);
    Tensor dwnd = attn.backward(datt);
    Tensor dt = window_reverse(dwnd, window_, shift, batch_, ch_, h_, w_);
    Tensor dx = ln1_.backward(dt);
    add_into(dx, dy);
    return dx;
}

Stmc::Stmc(ParamStore& ps, const std::string& name, int width, int period, int window, int heads,
           int mlp_ratio, int mwp_hidden, int msfa_k, int shift)
    : periodic(ps, name + ".per", half_width(width), period, msfa_k, mwp_hidden),
      swin(ps, name + ".swin", width / 2, window, heads, mlp_ratio, shift),
      width_(width),
      proj_(ps, name + ".proj", width, width, 1),
      fuse_(ps, name + ".fuse", width, width, 1) {}

Tensor Stmc::forward(const Tensor& x) {
    check(x.dims.size() == 4 && x.dims[1] == width_,
          "stmc: expected width " + std::to_string(width_) + ", got " + x.shape_str());
    int half = width_ / 2;
    Tensor t = proj_.forward(x);
    Tensor pa = periodic.forward(channel_slice(t, 0, half));
    Tensor nb = swin.forward(channel_slice(t, half, width_));
    return fuse_.forward(channel_concat(pa, nb));
}

Tensor Stmc::backward(const Tensor& gout) {
    int half = width_ / 2;
    Tensor dcat = fuse_.backward(gout);
    Tensor dxa = periodic.backward(channel_slice(dcat, 0, half));
    Tensor dxb = swin.backward(channel_slice(dcat, half, width_));
    return proj_.backward(channel_concat(dxa, dxb));
}

MaFormer::MaFormer(ParamStore& ps, const ModelConfig& cfg)
    : cfg_(validated(cfg)),
      stem_(ps, "stem", 1, cfg.width, cfg.period, cfg.msfa_kernel, cfg.mwp_hidden) {
    auto shift_of = [&](int b) { return (b % 2) ? cfg_.window / 2 : 0; };
    auto stage_name = [](const std::string& base, int s, int b) {
        return base + std::to_string(s) + ".b" + std::to_string(b);
    };

    enc_.resize(3);
    down_.reserve(3);
    for (int s = 0; s < 3; ++s) {
        int w = stage_width(cfg_, s), p = stage_period(cfg_, s);
        enc_[static_cast<std::size_t>(s)].reserve(static_cast<std::size_t>(cfg_.blocks[static_cast<std::size_t>(s)]));
        for (int b = 0; b < cfg_.blocks[static_cast<std::size_t>(s)]; ++b)
            enc_[static_cast<std::size_t>(s)].emplace_back(ps, stage_name("enc", s, b), w, p,
                                                           cfg_.window, cfg_.heads, cfg_.mlp_ratio,
                                                           cfg_.mwp_hidden, cfg_.msfa_kernel,
                                                           shift_of(b));
        down_.emplace_back(ps, "down" + std::to_string(s), w, stage_width(cfg_, s + 1), 2, 2,
                           false);
    }

    mid_.reserve(static_cast<std::size_t>(cfg_.blocks[3]));
    for (int b = 0; b < cfg_.blocks[3]; ++b)
        mid_.emplace_back(ps, "mid.b" + std::to_string(b), stage_width(cfg_, 3),
                          stage_period(cfg_, 3), cfg_.window, cfg_.heads, cfg_.mlp_ratio,
                          cfg_.mwp_hidden, cfg_.msfa_kernel, shift_of(b));

    dec_.resize(3);
    up_.reserve(3);
    for (int s = 2; s >= 0; --s) {
        int w = stage_width(cfg_, s), p = stage_period(cfg_, s);
        up_.emplace_back(ps, "up" + std::to_string(s), stage_width(cfg_, s + 1), w, 2, 2, false);
        dec_[static_cast<std::size_t>(s)].reserve(static_cast<std::size_t>(cfg_.blocks[static_cast<std::size_t>(s)]));
        for (int b = 0; b < cfg_.blocks[static_cast<std::size_t>(s)]; ++b)
            dec_[static_cast<std::size_t>(s)].emplace_back(ps, stage_name("dec", s, b), w, p,
                                                           cfg_.window, cfg_.heads, cfg_.mlp_ratio,
                                                           cfg_.mwp_hidden, cfg_.msfa_kernel,
                                                           shift_of(b));
    }

    head_ = std::make_unique<MsfaConv>(ps, "head", cfg_.width, cfg_.bands, cfg_.period,
                                       cfg_.msfa_kernel, cfg_.mwp_hidden);
    skip_.resize(3);
    skip_grad_.resize(3);
}

void MaFormer::check_extents(int h, int w) const {
    for (int s = 0; s < 4; ++s) {
        int hs = h >> s, ws = w >> s;
        std::string at = "maformer stage " + std::to_string(s) + ": extents " +
                         std::to_string(hs) + "x" + std::to_string(ws);
        if (s < 3 && (hs % 2 != 0 || ws % 2 != 0)) fail(at + " are not even, cannot downsample");
        if (hs % cfg_.window != 0 || ws % cfg_.window != 0)
            fail(at + " not divisible by window " + std::to_string(cfg_.window));
        int p2 = 2 * stage_period(cfg_, s);
        if (hs % p2 != 0 || ws % p2 != 0)
            fail(at + " not divisible by twice the period " +
                 std::to_string(stage_period(cfg_, s)));
    }
}

Tensor MaFormer::forward(const Tensor& x) {
    check(x.dims.size() == 4 && x.dims[1] == 1,
          "maformer: expected a {B,1,M,N} mosaic tensor, got " + x.shape_str());
    check_extents(x.dims[2], x.dims[3]);
    Tensor h = stem_.forward(x);
    for (int s = 0; s < 3; ++s) {
        for (auto& blk : enc_[static_cast<std::size_t>(s)]) h = blk.forward(h);
        skip_[static_cast<std::size_t>(s)] = h;
        h = down_[static_cast<std::size_t>(s)].forward(h);
    }
    for (auto& blk : mid_) h = blk.forward(h);
    for (int s = 2; s >= 0; --s) {
        h = up_[static_cast<std::size_t>(2 - s)].forward(h);
        add_into(h, skip_[static_cast<std::size_t>(s)]);
        for (auto& blk : dec_[static_cast<std::size_t>(s)]) h = blk.forward(h);
    }
    return head_->forward(h);
}

Tensor MaFormer::backward(const Tensor& gout) {
    Tensor g = head_->backward(gout);
    for (int s = 0; s < 3; ++s) {
        auto& stage = dec_[static_cast<std::size_t>(s)];
        for (auto it = stage.rbegin(); it != stage.rend(); ++it) g = it->backward(g);
        skip_grad_[static_cast<std::size_t>(s)] = g;
        g = up_[static_cast<std::size_t>(2 - s)].backward(g);
    }
    for (auto it = mid_.rbegin(); it != mid_.rend(); ++it) g = it->backward(g);
    for (int s = 2; s >= 0; --s) {
        g = down_[static_cast<std::size_t>(s)].backward(g);
        add_into(g, skip_grad_[static_cast<std::size_t>(s)]);
        auto& stage = enc_[static_cast<std::size_t>(s)];
        for (auto it = stage.rbegin(); it != stage.rend(); ++it) g = it->backward(g);
    }
    return stem_.backward(g);
}

HsiCube maformer_apply(MaFormer& net, const MosaicImage& mosaic) {
    check(mosaic.pattern.p == net.config().period,
          "maformer: mosaic period " + std::to_string(mosaic.pattern.p) +
              " does not match the model period " + std::to_string(net.config().period));
    Tensor x = mosaic_to_tensor(mosaic);
    Tensor y = net.forward(x);
    return tensor_item_to_cube(y, 0);
}

HsiCube fdmnet_apply(MaFormer& net, const MosaicImage& mosaic, const LowpassConfig& lowcfg) {
    HsiCube low = reconstruct_lowpass(mosaic, lowcfg);
    HsiCube high = maformer_apply(net, mosaic);
    check(low.bands == high.bands, "fdmnet: band count mismatch");
    for (std::size_t i = 0; i < low.data.size(); ++i) low.data[i] += high.data[i];
    return low;
}

}  // namespace fdm
