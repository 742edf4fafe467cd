#include "fdm/synth.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "fdm/common.hpp"
#include "fdm/image.hpp"
#include "fdm/rng.hpp"

namespace fdm {

void SceneSpec::validate() const {
    check(rows >= 1 && cols >= 1 && bands >= 1, "scene: extents must be positive");
    check(wave_count >= 0, "scene: negative wave count");
    check(rect_count >= 0, "scene: negative rectangle count");
    check(freq_bound >= 0, "scene: negative frequency bound");
    check(2 * freq_bound < std::min(rows, cols), "scene: frequency bound reaches Nyquist");
    check(base_level >= 0.0 && smooth_amp >= 0.0 && detail_amp >= 0.0 && noise_level >= 0.0,
          "scene: negative amplitude");
    check(is_finite(phase_ramp), "scene: non-finite phase ramp");
}

namespace {

// Cosine taper from 1 at the first band to `lo` at the last.
double band_taper(int b, int bands, double lo) {
    double t = bands > 1 ? static_cast<double>(b) / (bands - 1) : 0.0;
    double mid = 0.5 * (1.0 + lo);
    return mid + (1.0 - mid) * std::cos(kPi * t);
}

}  // namespace

SynthScene generate_scene(const SceneSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);
    const int rows = spec.rows;
    const int cols = spec.cols;
    const int bands = spec.bands;

    SynthScene out;
    out.smooth = HsiCube(rows, cols, bands, spec.base_level);
    out.detail = HsiCube(rows, cols, bands);
    out.noise = HsiCube(rows, cols, bands);

    struct Wave {
        int kx = 0;
        int ky = 0;
        double phase = 0.0;
        double ramp = 0.0;
        double amp = 0.0;
    };
    std::vector<Wave> waves(static_cast<std::size_t>(spec.wave_count));
    double amp_total = 0.0;
    for (Wave& w : waves) {
        w.kx = rng.uniform_int(0, spec.freq_bound);
        w.ky = rng.uniform_int(0, spec.freq_bound);
        if (rng.uniform() < 0.5) w.ky = -w.ky;
        w.phase = rng.uniform(0.0, 2.0 * kPi);
        double dir = rng.uniform() < 0.5 ? -1.0 : 1.0;
        w.ramp = dir * spec.phase_ramp * rng.uniform(0.5, 1.0);
        w.amp = rng.uniform(0.5, 1.0);
        amp_total += w.amp;
    }
    if (amp_total > 0.0)
        for (Wave& w : waves) w.amp *= spec.smooth_amp / amp_total;

    for (int b = 0; b < bands; ++b) {
        double gain = band_taper(b, bands, 0.7);
        for (const Wave& w : waves) {
            double scale = gain * w.amp;
            double offset = w.phase + w.ramp * b;
            for (int i = 0; i < rows; ++i) {
                double row_part = 2.0 * kPi * w.kx * i / rows + offset;
                for (int j = 0; j < cols; ++j) {
                    double theta = row_part + 2.0 * kPi * w.ky * j / cols;
                    out.smooth.at(i, j, b) += scale * std::cos(theta);
                }
            }
        }
    }

    double psi = rng.uniform(0.0, 2.0 * kPi);
    struct Rect {
        int i0 = 0;
        int j0 = 0;
        int h = 0;
        int w = 0;
        double amp = 0.0;
    };
    std::vector<Rect> rects(static_cast<std::size_t>(spec.rect_count));
    double rect_total = 0.0;
    for (Rect& r : rects) {
        int hmax = std::max(1, rows / 4);
        int wmax = std::max(1, cols / 4);
        r.h = rng.uniform_int(std::min(2, hmax), hmax);
        r.w = rng.uniform_int(std::min(2, wmax), wmax);
        r.i0 = rng.uniform_int(0, rows - r.h);
        r.j0 = rng.uniform_int(0, cols - r.w);
        r.amp = rng.uniform(-1.0, 1.0);
        rect_total += std::fabs(r.amp);
    }
    if (rect_total > 0.0)
        for (Rect& r : rects) r.amp *= spec.detail_amp / rect_total;

    Image layout(rows, cols);
    for (const Rect& r : rects)
        for (int i = r.i0; i < r.i0 + r.h; ++i)
            for (int j = r.j0; j < r.j0 + r.w; ++j) layout.at(i, j) += r.amp;

    for (int b = 0; b < bands; ++b) {
        // Strictly positive gains keep every band's detail sign-aligned.
        double gain = 0.55 + 0.45 * std::cos(kPi * (bands > 1 ? static_cast<double>(b) / (bands - 1) : 0.0) + psi);
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < cols; ++j) out.detail.at(i, j, b) = gain * layout.at(i, j);
    }

    for (double& v : out.noise.data) v = spec.noise_level * rng.uniform(-1.0, 1.0);

    out.cube = HsiCube(rows, cols, bands);
    for (std::size_t idx = 0; idx < out.cube.data.size(); ++idx) {
        double v = out.smooth.data[idx] + out.detail.data[idx] + out.noise.data[idx];
        out.cube.data[idx] = std::clamp(v, 0.0, 1.0);
    }
    return out;
}

}  // namespace fdm
