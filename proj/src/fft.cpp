#include "fdm/fft.hpp"

#include <fftw3.h>

#include <cstring>

#include "fdm/common.hpp"

namespace fdm {

std::vector<std::complex<double>> fft2(int rows, int cols,
                                       const std::complex<double>* in, bool inverse) {
    check(rows >= 1 && cols >= 1, "fft2: empty transform");
    std::size_t n = static_cast<std::size_t>(rows) * cols;
    std::vector<std::complex<double>> buf(in, in + n);
    std::vector<std::complex<double>> out(n);
    fftw_plan plan = fftw_plan_dft_2d(
        rows, cols, reinterpret_cast<fftw_complex*>(buf.data()),
        reinterpret_cast<fftw_complex*>(out.data()),
        inverse ? FFTW_BACKWARD : FFTW_FORWARD, FFTW_ESTIMATE | FFTW_PRESERVE_INPUT);
    if (!plan) fail("fft2: planner failed");
    fftw_execute(plan);
    fftw_destroy_plan(plan);
    return out;
}

std::vector<std::complex<double>> fft2_real(int rows, int cols, const double* in) {
    std::size_t n = static_cast<std::size_t>(rows) * cols;
    std::vector<std::complex<double>> cin(n);
    for (std::size_t i = 0; i < n; ++i) cin[i] = in[i];
    return fft2(rows, cols, cin.data(), false);
}

}  // namespace fdm
