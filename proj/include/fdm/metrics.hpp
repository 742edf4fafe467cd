#pragma once

#include "fdm/msfa.hpp"

namespace fdm {

struct MetricReport {
    double psnr = 0.0;
    double ssim = 0.0;
    double sam = 0.0;
    double mrae = 0.0;
};

// 10*log10(1/MSE) over the whole cube, capped at 100 dB when MSE < 1e-10.
double psnr_value(const HsiCube& pred, const HsiCube& ref);

// Mean SSIM of one band pair over the valid (fully covered) window positions;
// 11x11 Gaussian window, sigma 1.5, K1 = 0.01, K2 = 0.03, dynamic range 1.
double ssim_band(const Image& pred, const Image& ref);

// Per-band SSIM averaged over bands.
double ssim_value(const HsiCube& pred, const HsiCube& ref);

// Mean over pixels of arccos(<x, xhat> / (|x| |xhat|)), the angle between
// reference and reconstructed spectra; pixels with a zero vector are skipped.
double sam_value(const HsiCube& pred, const HsiCube& ref);

// Mean of |x - xhat| / (x + 1e-6) over all entries, x the reference.
double mrae_value(const HsiCube& pred, const HsiCube& ref);

MetricReport metrics(const HsiCube& pred, const HsiCube& ref);

}  // namespace fdm
