#pragma once

#include <complex>
#include <vector>

namespace fdm {

// Unnormalized 2-D DFT, row-major:
//   forward: out(u,v) = Σ_{x,y} in(x,y) · exp(-2πi(ux/rows + vy/cols))
//   inverse: same with exp(+2πi...), still unnormalized.
// Backed by FFTW with deterministic (estimate-only) planning.
std::vector<std::complex<double>> fft2(int rows, int cols,
                                       const std::complex<double>* in, bool inverse);

std::vector<std::complex<double>> fft2_real(int rows, int cols, const double* in);

}  // namespace fdm
