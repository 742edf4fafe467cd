#pragma once

#include <complex>
#include <vector>

#include "fdm/image.hpp"
#include "fdm/msfa.hpp"

namespace fdm {

struct LossWeights {
    double alpha1 = 0.1;
    double alpha2 = 1.0;
    double alpha3 = 1.0;

    void validate() const {
        check(alpha1 >= 0.0 && alpha2 >= 0.0 && alpha3 >= 0.0, "loss weights: negative weight");
        check(alpha1 + alpha2 + alpha3 > 0.0, "loss weights: all zero");
    }
};

struct FreqSpectrum {
    int rows = 0;
    int cols = 0;
    std::vector<std::complex<double>> f;

    std::complex<double>& at(int u, int v) { return f[static_cast<std::size_t>(u) * cols + v]; }
    std::complex<double> at(int u, int v) const { return f[static_cast<std::size_t>(u) * cols + v]; }
};

// F(u,v) = (1/MN) * sum_{x,y} f(x,y) exp(-2 pi i (u x / M + v y / N)).
FreqSpectrum dft2(const Image& im);

// |F_pred - F_ref|^alpha per frequency bin, the focal weight matrix.
Image ffl_weight_matrix(const Image& pred, const Image& ref, double alpha);

// (1/MN) * sum w(u,v) |F_pred - F_ref|^2 with w from ffl_weight_matrix (or the
// supplied frozen matrix). The weight is treated as a constant during
// differentiation; grad (if requested) is with respect to pred's pixels.
double focal_frequency_loss(const Image& pred, const Image& ref, double alpha,
                            const Image* frozen_w = nullptr, Image* grad = nullptr);

// Mean absolute error over mask-selected entries, normalized by M*N (the mask
// selects exactly one band per pixel). With literal=true the term is instead
// mean(|ref - pred*mask|) over all entries, the unmasked-difference variant.
double l1_masked(const HsiCube& pred, const HsiCube& ref, const SampleMask& mask,
                 bool literal = false, HsiCube* grad = nullptr);

// Mean absolute error of (pred_low + pred_high) vs ref; grad is w.r.t. pred_high.
double l1_full(const HsiCube& pred_low, const HsiCube& pred_high, const HsiCube& ref,
               HsiCube* grad = nullptr);

struct LossTerms {
    double total = 0.0;
    double l1s = 0.0;
    double ffl = 0.0;
    double l1c = 0.0;
};

// total = alpha1*l1s + alpha2*ffl + alpha3*l1c, every term evaluated on the
// full reconstruction pred_low + pred_high; ffl averages over bands. Gradient
// flows only into pred_high (the low-pass path is not learned). frozen_ffl_w,
// when given, fixes the per-band focal weights (finite-difference testing).
LossTerms total_loss(const HsiCube& pred_low, const HsiCube& pred_high, const HsiCube& ref,
                     const SampleMask& mask, const LossWeights& w,
                     HsiCube* grad_high = nullptr,
                     const std::vector<Image>* frozen_ffl_w = nullptr,
                     bool literal_masked = false, double ffl_alpha = 1.0);

}  // namespace fdm
