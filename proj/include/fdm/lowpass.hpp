#pragma once

#include "fdm/msfa.hpp"

namespace fdm {

enum class UpsampleMode { kFourierZeroPad, kLanczos };

struct LowpassConfig {
    UpsampleMode mode = UpsampleMode::kFourierZeroPad;
    int lanczos_n = 3;  // window parameter (lobes)
    int radius = 2;     // guided-filter box radius
    double eps = 1e-4;  // guided-filter regularizer

    void validate() const {
        check(lanczos_n >= 1, "lowpass: lanczos_n must be >= 1");
        check(radius >= 1, "lowpass: radius must be >= 1");
        check(eps > 0.0, "lowpass: eps must be positive");
    }
};

// Trigonometric upsampling: embed the subimage spectrum symmetrically in a
// factor-times-larger zero spectrum (Nyquist row/column split half-half so the
// embedding stays Hermitian), inverse transform, rescale. Exact on signals
// band-limited to the coarse Nyquist range, and interpolating: output at
// (factor*s, factor*t) equals sub(s, t).
Image fourier_zero_pad_upsample(const Image& sub, int factor);

// Windowed-sinc kernel, support |t| < n; exactly 1 at t = 0 and 0 at other
// integers.
double lanczos_kernel(double t, int n);

// Separable Lanczos upsampling. Output pixel (X, Y) evaluates the interpolant
// at coarse coordinates ((X-i0)/factor, (Y-j0)/factor); per-position weight
// rows are renormalized to sum 1, and edge windows keep only valid taps.
Image lanczos_upsample(const Image& sub, int factor, int n, int i0 = 0, int j0 = 0);

// Tent-kernel counterpart with edge clamping; used by the baseline demosaicer.
Image bilinear_upsample(const Image& sub, int factor, int i0 = 0, int j0 = 0);

// out(i,j) = im((i - di) mod rows, (j - dj) mod cols).
Image cyclic_shift(const Image& im, int di, int dj);

// Mean over the (2r+1)^2 box around each pixel, truncated at the borders and
// normalized by the number of in-range taps.
Image box_mean(const Image& im, int r);

// Local-linear-model guided filter (per window: a = cov(I,p)/(var(I)+eps),
// b = mean(p) - a*mean(I); output = mean(a)*I + mean(b)).
Image guided_filter(const Image& input, const Image& guide, int r, double eps);

// Per-band upsampling of the de-interleaved mosaic, each band anchored at its
// first sample position in the pattern tile. No clamping; this is the
// pre-filter stack whose values at sampled positions equal the mosaic.
HsiCube upsample_stack(const MosaicImage& mos, const LowpassConfig& cfg);

// upsample_stack + guided filtering against upsampled band 0, clamped to [0,1].
HsiCube reconstruct_lowpass(const MosaicImage& mos, const LowpassConfig& cfg);

// Per-band bilinear upsampling, clamped to [0,1].
HsiCube bilinear_demosaic(const MosaicImage& mos);

void clamp01(HsiCube& cube);

}  // namespace fdm
