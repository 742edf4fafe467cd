#include "fdm/loss.hpp"

#include <cmath>

#include "fdm/fft.hpp"

namespace fdm {

namespace {

double sign(double x) { return (x > 0.0) - (x < 0.0); }

void check_cube_shapes(const HsiCube& a, const HsiCube& b, const char* what) {
    check(a.rows == b.rows && a.cols == b.cols && a.bands == b.bands,
          std::string(what) + ": cube shape mismatch");
}

}  // namespace

FreqSpectrum dft2(const Image& im) {
    for (double x : im.v)
        if (!is_finite(x)) fail("dft2: non-finite input");
    FreqSpectrum out;
    out.rows = im.rows;
    out.cols = im.cols;
    out.f = fft2_real(im.rows, im.cols, im.v.data());
    double scale = 1.0 / (static_cast<double>(im.rows) * im.cols);
    for (auto& c : out.f) c *= scale;
    return out;
}

Image ffl_weight_matrix(const Image& pred, const Image& ref, double alpha) {
    check(pred.same_shape(ref), "ffl_weight_matrix: shape mismatch");
    FreqSpectrum fp = dft2(pred);
    FreqSpectrum fr = dft2(ref);
    Image w(pred.rows, pred.cols);
    for (std::size_t i = 0; i < w.numel(); ++i)
        w.v[i] = std::pow(std::abs(fp.f[i] - fr.f[i]), alpha);
    return w;
}

double focal_frequency_loss(const Image& pred, const Image& ref, double alpha,
                            const Image* frozen_w, Image* grad) {
    check(pred.same_shape(ref), "focal_frequency_loss: shape mismatch");
    int rows = pred.rows, cols = pred.cols;
    double mn = static_cast<double>(rows) * cols;
    FreqSpectrum fp = dft2(pred);
    FreqSpectrum fr = dft2(ref);

    std::vector<std::complex<double>> delta(fp.f.size());
    for (std::size_t i = 0; i < delta.size(); ++i) delta[i] = fp.f[i] - fr.f[i];

    Image w;
    if (frozen_w) {
        check(frozen_w->rows == rows && frozen_w->cols == cols,
              "focal_frequency_loss: frozen weight shape mismatch");
        w = *frozen_w;
    } else {
        w = Image(rows, cols);
        for (std::size_t i = 0; i < delta.size(); ++i)
            w.v[i] = std::pow(std::abs(delta[i]), alpha);
    }

    double loss = 0.0;
    for (std::size_t i = 0; i < delta.size(); ++i) loss += w.v[i] * std::norm(delta[i]);
    loss /= mn;

    if (grad) {
        // With w held constant: d loss / d pred(x,y)
        //   = (2 / (MN)^2) * Re( sum_{u,v} w * conj(delta) * e^{-2 pi i (ux/M + vy/N)} ).
        std::vector<std::complex<double>> wfd(delta.size());
        for (std::size_t i = 0; i < delta.size(); ++i) wfd[i] = w.v[i] * std::conj(delta[i]);
        auto spatial = fft2(rows, cols, wfd.data(), false);
        *grad = Image(rows, cols);
        double scale = 2.0 / (mn * mn);
        for (std::size_t i = 0; i < spatial.size(); ++i) grad->v[i] = scale * spatial[i].real();
    }
    return loss;
}

double l1_masked(const HsiCube& pred, const HsiCube& ref, const SampleMask& mask,
                 bool literal, HsiCube* grad) {
    check_cube_shapes(pred, ref, "l1_masked");
    check(mask.rows == pred.rows && mask.cols == pred.cols && mask.bands == pred.bands,
          "l1_masked: mask shape mismatch");
    double mn = static_cast<double>(pred.rows) * pred.cols;
    double norm = literal ? mn * pred.bands : mn;
    if (grad) *grad = HsiCube(pred.rows, pred.cols, pred.bands);
    double sum = 0.0;
    for (std::size_t i = 0; i < pred.data.size(); ++i) {
        bool on = mask.m[i] != 0;
        double d;
        if (literal)
            d = ref.data[i] - (on ? pred.data[i] : 0.0);
        else
            d = on ? ref.data[i] - pred.data[i] : 0.0;
        sum += std::abs(d);
        if (grad && on) grad->data[i] = -sign(d) / norm;
    }
    return sum / norm;
}

double l1_full(const HsiCube& pred_low, const HsiCube& pred_high, const HsiCube& ref,
               HsiCube* grad) {
    check_cube_shapes(pred_low, pred_high, "l1_full");
    check_cube_shapes(pred_low, ref, "l1_full");
    double n = static_cast<double>(ref.data.size());
    if (grad) *grad = HsiCube(ref.rows, ref.cols, ref.bands);
    double sum = 0.0;
    for (std::size_t i = 0; i < ref.data.size(); ++i) {
        double d = pred_low.data[i] + pred_high.data[i] - ref.data[i];
        sum += std::abs(d);
        if (grad) grad->data[i] = sign(d) / n;
    }
    return sum / n;
}

LossTerms total_loss(const HsiCube& pred_low, const HsiCube& pred_high, const HsiCube& ref,
                     const SampleMask& mask, const LossWeights& w, HsiCube* grad_high,
                     const std::vector<Image>* frozen_ffl_w, bool literal_masked,
                     double ffl_alpha) {
    w.validate();
    check_cube_shapes(pred_low, pred_high, "total_loss");
    check_cube_shapes(pred_low, ref, "total_loss");
    if (frozen_ffl_w)
        check(static_cast<int>(frozen_ffl_w->size()) == ref.bands,
              "total_loss: frozen ffl weights must cover every band");

    HsiCube full(ref.rows, ref.cols, ref.bands);
    for (std::size_t i = 0; i < full.data.size(); ++i)
        full.data[i] = pred_low.data[i] + pred_high.data[i];

    LossTerms t;
    HsiCube g1, g3;
    t.l1s = l1_masked(full, ref, mask, literal_masked, grad_high ? &g1 : nullptr);
    t.l1c = l1_full(pred_low, pred_high, ref, grad_high ? &g3 : nullptr);

    if (grad_high) *grad_high = HsiCube(ref.rows, ref.cols, ref.bands);
    for (int k = 0; k < ref.bands; ++k) {
        Image gb;
        double lb = focal_frequency_loss(full.band(k), ref.band(k), ffl_alpha,
                                         frozen_ffl_w ? &(*frozen_ffl_w)[k] : nullptr,
                                         grad_high ? &gb : nullptr);
        t.ffl += lb / ref.bands;
        if (grad_high) {
            double* gk = grad_high->data.data() +
                         static_cast<std::size_t>(k) * ref.rows * ref.cols;
            double s = w.alpha2 / ref.bands;
            for (std::size_t i = 0; i < gb.numel(); ++i) gk[i] += s * gb.v[i];
        }
    }

    t.total = w.alpha1 * t.l1s + w.alpha2 * t.ffl + w.alpha3 * t.l1c;
    if (grad_high)
        for (std::size_t i = 0; i < grad_high->data.size(); ++i)
            grad_high->data[i] += w.alpha1 * g1.data[i] + w.alpha3 * g3.data[i];
    return t;
}

}  // namespace fdm
