#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "fdm/lowpass.hpp"
#include "fdm/rng.hpp"

using namespace fdm;

namespace {

Image cosine_image(int rows, int cols, int qr, int qc, double amp, double phase) {
    Image im(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j)
            im.at(i, j) = amp * std::cos(2.0 * kPi * (qr * i / double(rows) + qc * j / double(cols)) + phase);
    return im;
}

double max_abs_diff(const Image& a, const Image& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.numel(); ++i) worst = std::max(worst, std::abs(a.v[i] - b.v[i]));
    return worst;
}

double mse(const HsiCube& a, const HsiCube& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        double d = a.data[i] - b.data[i];
        s += d * d;
    }
    return s / double(a.data.size());
}

// Cube whose bands are affine in one shared band-limited field; every band is
// exactly representable on the coarse sampling lattice of a period-4 pattern.
HsiCube smooth_cube(int rows, int cols) {
    Image base(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j)
            base.at(i, j) = 0.5 * std::cos(2.0 * kPi * (2.0 * i / rows + 3.0 * j / cols)) +
                            0.5 * std::cos(2.0 * kPi * i / rows) * std::cos(2.0 * kPi * j / cols);
    HsiCube cube(rows, cols, 16);
    for (int k = 0; k < 16; ++k) {
        double gain = 0.15 + 0.015 * k;
        double offset = 0.45 + 0.005 * k;
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < cols; ++j) cube.at(i, j, k) = offset + gain * base.at(i, j);
    }
    return cube;
}

}  // namespace

TEST_CASE("fourier zero-pad preserves constants") {
    Image sub(4, 4, 0.7);
    Image up = fourier_zero_pad_upsample(sub, 4);
    REQUIRE(up.rows == 16);
    REQUIRE(up.cols == 16);
    for (double x : up.v) CHECK(x == doctest::Approx(0.7).epsilon(1e-12));
}

TEST_CASE("fourier zero-pad with factor 1 is the identity") {
    Rng rng(3);
    Image sub(6, 5);
    for (double& x : sub.v) x = rng.uniform();
    Image up = fourier_zero_pad_upsample(sub, 1);
    CHECK(max_abs_diff(up, sub) < 1e-12);
}

TEST_CASE("fourier zero-pad reproduces band-limited cosines") {
    int m = 8, f = 4;
    Image sub = cosine_image(m, m, 1, 0, 1.0, 0.0);
    Image up = fourier_zero_pad_upsample(sub, f);
    Image want = cosine_image(m * f, m * f, 1, 0, 1.0, 0.0);
    CHECK(max_abs_diff(up, want) < 1e-9);

    sub = cosine_image(m, m, 2, 3, 0.8, 0.4);
    up = fourier_zero_pad_upsample(sub, f);
    want = cosine_image(m * f, m * f, 2, 3, 0.8, 0.4);
    CHECK(max_abs_diff(up, want) < 1e-9);
}

TEST_CASE("fourier zero-pad interpolates through the samples") {
    Rng rng(11);
    Image sub(8, 8);
    for (double& x : sub.v) x = rng.uniform();
    Image up = fourier_zero_pad_upsample(sub, 4);
    for (int s = 0; s < 8; ++s)
        for (int t = 0; t < 8; ++t)
            CHECK(std::abs(up.at(4 * s, 4 * t) - sub.at(s, t)) < 1e-12);
}

TEST_CASE("fourier zero-pad preserves the mean") {
    Rng rng(12);
    Image sub(8, 6);
    for (double& x : sub.v) x = rng.uniform();
    Image up = fourier_zero_pad_upsample(sub, 4);
    double coarse = 0.0, fine = 0.0;
    for (double x : sub.v) coarse += x;
    for (double x : up.v) fine += x;
    CHECK(std::abs(coarse / sub.numel() - fine / up.numel()) < 1e-9);
}

TEST_CASE("fourier zero-pad rejects non-finite input") {
    Image sub(4, 4, 0.0);
    sub.at(1, 2) = std::nan("");
    CHECK_THROWS_AS(fourier_zero_pad_upsample(sub, 2), std::runtime_error);
}

TEST_CASE("lanczos kernel endpoints") {
    for (int n : {1, 2, 3, 4}) {
        CHECK(lanczos_kernel(0.0, n) == 1.0);
        for (int k = 1; k < n; ++k) {
            CHECK(lanczos_kernel(double(k), n) == 0.0);
            CHECK(lanczos_kernel(double(-k), n) == 0.0);
        }
        CHECK(lanczos_kernel(double(n), n) == 0.0);
        CHECK(lanczos_kernel(double(-n) - 0.5, n) == 0.0);
    }
    CHECK(lanczos_kernel(0.5, 3) > 0.0);
    CHECK(lanczos_kernel(2.5, 3) != 0.0);
}

TEST_CASE("lanczos preserves constants after renormalization") {
    for (int n : {2, 3}) {
        Image sub(5, 7, 0.31);
        Image up = lanczos_upsample(sub, 4, n);
        REQUIRE(up.rows == 20);
        for (double x : up.v) CHECK(x == doctest::Approx(0.31).epsilon(1e-12));
    }
}

TEST_CASE("lanczos and bilinear interpolate through anchored samples") {
    Rng rng(5);
    Image sub(6, 6);
    for (double& x : sub.v) x = rng.uniform();
    for (int i0 : {0, 1, 3}) {
        Image lz = lanczos_upsample(sub, 4, 3, i0, 2);
        Image bl = bilinear_upsample(sub, 4, i0, 2);
        for (int s = 0; s < 6; ++s)
            for (int t = 0; t < 6; ++t) {
                CHECK(lz.at(i0 + 4 * s, 2 + 4 * t) == sub.at(s, t));
                CHECK(bl.at(i0 + 4 * s, 2 + 4 * t) == sub.at(s, t));
            }
    }
}

TEST_CASE("bilinear midpoints average their neighbors") {
    Image sub(1, 3);
    sub.at(0, 0) = 0.0;
    sub.at(0, 1) = 1.0;
    sub.at(0, 2) = 0.5;
    Image up = bilinear_upsample(sub, 2);
    CHECK(up.at(0, 1) == doctest::Approx(0.5));
    CHECK(up.at(0, 3) == doctest::Approx(0.75));
    CHECK(up.at(0, 5) == doctest::Approx(0.5));  // clamped past the last sample
}

TEST_CASE("cyclic shift round trip") {
    Rng rng(8);
    Image im(5, 9);
    for (double& x : im.v) x = rng.uniform();
    Image back = cyclic_shift(cyclic_shift(im, 2, 3), -2, -3);
    CHECK(max_abs_diff(back, im) == 0.0);
    CHECK(cyclic_shift(im, 1, 0).at(1, 0) == im.at(0, 0));
}

TEST_CASE("box mean truncates edge windows") {
    Image im(3, 3, 0.0);
    im.at(0, 0) = 1.0;
    Image m = box_mean(im, 1);
    CHECK(m.at(0, 0) == doctest::Approx(0.25));
    CHECK(m.at(1, 1) == doctest::Approx(1.0 / 9.0));
    CHECK(m.at(2, 2) == doctest::Approx(0.0));

    Image c(4, 6, 0.42);
    Image mc = box_mean(c, 2);
    for (double x : mc.v) CHECK(x == doctest::Approx(0.42).epsilon(1e-12));
}

TEST_CASE("guided filter maps constant input to constant output") {
    Rng rng(13);
    Image guide(10, 10);
    for (double& x : guide.v) x = rng.uniform();
    Image input(10, 10, 0.6);
    Image out = guided_filter(input, guide, 2, 1e-4);
    for (double x : out.v) CHECK(x == doctest::Approx(0.6).epsilon(1e-9));
}

TEST_CASE("guided filter approaches identity when guide equals input") {
    Rng rng(14);
    Image input(12, 12);
    for (double& x : input.v) x = rng.uniform();  // variance far above eps
    Image out = guided_filter(input, input, 2, 1e-12);
    CHECK(max_abs_diff(out, input) < 1e-6);
}

TEST_CASE("guided filter is invariant to constant guide shifts") {
    Rng rng(15);
    Image input(9, 11), guide(9, 11);
    for (double& x : input.v) x = rng.uniform();
    for (double& x : guide.v) x = rng.uniform();
    Image shifted = guide;
    for (double& x : shifted.v) x += 0.3;
    Image a = guided_filter(input, guide, 2, 1e-4);
    Image b = guided_filter(input, shifted, 2, 1e-4);
    CHECK(max_abs_diff(a, b) < 1e-9);
}

TEST_CASE("guided filter rejects non-finite input") {
    Image input(4, 4, 0.5), guide(4, 4, 0.5);
    input.at(0, 0) = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(guided_filter(input, guide, 1, 1e-4), std::runtime_error);
}

TEST_CASE("upsample stack agrees with the mosaic at sampled positions") {
    Rng rng(21);
    HsiCube cube(16, 16, 16);
    for (double& x : cube.data) x = rng.uniform();
    MosaicImage mos = mosaic(cube, default_pattern());
    for (UpsampleMode mode : {UpsampleMode::kFourierZeroPad, UpsampleMode::kLanczos}) {
        LowpassConfig cfg;
        cfg.mode = mode;
        HsiCube stack = upsample_stack(mos, cfg);
        for (int i = 0; i < 16; ++i)
            for (int j = 0; j < 16; ++j) {
                int k = mos.pattern.band_for_pixel(i, j);
                CHECK(std::abs(stack.at(i, j, k) - mos.im.at(i, j)) < 1e-6);
            }
    }
}

TEST_CASE("upsample stack preserves per-band sample means") {
    Rng rng(22);
    HsiCube cube(16, 16, 16);
    for (double& x : cube.data) x = rng.uniform();
    MosaicImage mos = mosaic(cube, default_pattern());
    LowpassConfig cfg;  // fourier mode
    HsiCube stack = upsample_stack(mos, cfg);
    auto subs = band_extract(mos);
    for (int k = 0; k < 16; ++k) {
        double coarse = 0.0;
        for (double x : subs[k].v) coarse += x;
        coarse /= subs[k].numel();
        double fine = 0.0;
        Image b = stack.band(k);
        for (double x : b.v) fine += x;
        fine /= b.numel();
        CHECK(std::abs(coarse - fine) < 1e-9);
    }
}

TEST_CASE("constant cube survives the full lowpass reconstruction") {
    HsiCube cube(16, 16, 16, 0.25);
    MosaicImage mos = mosaic(cube, default_pattern());
    for (UpsampleMode mode : {UpsampleMode::kFourierZeroPad, UpsampleMode::kLanczos}) {
        LowpassConfig cfg;
        cfg.mode = mode;
        HsiCube rec = reconstruct_lowpass(mos, cfg);
        for (double x : rec.data) CHECK(x == doctest::Approx(0.25).epsilon(1e-6));
    }
}

TEST_CASE("lowpass reconstruction is accurate on a smooth scene") {
    HsiCube cube = smooth_cube(32, 32);
    MosaicImage mos = mosaic(cube, default_pattern());
    LowpassConfig cfg;
    HsiCube rec = reconstruct_lowpass(mos, cfg);

    SampleMask mask = sample_mask(32, 32, mos.pattern);
    double worst = 0.0;
    for (int i = 0; i < 32; ++i)
        for (int j = 0; j < 32; ++j)
            for (int k = 0; k < 16; ++k)
                if (mask.at(i, j, k))
                    worst = std::max(worst, std::abs(rec.at(i, j, k) - cube.at(i, j, k)));
    CHECK(worst < 0.05);

    HsiCube bl = bilinear_demosaic(mos);
    double psnr_low = 10.0 * std::log10(1.0 / mse(rec, cube));
    double psnr_bl = 10.0 * std::log10(1.0 / mse(bl, cube));
    CHECK(psnr_low > psnr_bl);
}
