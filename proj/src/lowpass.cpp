#include "fdm/lowpass.hpp"

#include <algorithm>
#include <cmath>

#include "fdm/fft.hpp"

namespace fdm {

static void check_finite(const Image& im, const char* what) {
    for (double x : im.v)
        if (!is_finite(x)) fail(std::string(what) + ": non-finite input");
}

// Spectrum index mapping for one axis: source bin a of an m-point transform
// lands in an mo-point transform at one target (weight 1), or at both Nyquist
// copies (weight 1/2 each) when m is even and a = m/2.
struct BinTargets {
    int idx[2];
    double w[2];
    int count;
};

static BinTargets axis_bin_targets(int a, int m, int mo) {
    BinTargets t{};
    if (m % 2 == 0 && a == m / 2 && mo > m) {
        t.count = 2;
        t.idx[0] = m / 2;
        t.w[0] = 0.5;
        t.idx[1] = mo - m / 2;
        t.w[1] = 0.5;
    } else {
        t.count = 1;
        t.w[0] = 1.0;
        t.idx[0] = (a <= m / 2) ? a : mo + a - m;
    }
    return t;
}

Image fourier_zero_pad_upsample(const Image& sub, int factor) {
    check(factor >= 1, "fourier_zero_pad_upsample: factor must be >= 1");
    check(sub.rows >= 1 && sub.cols >= 1, "fourier_zero_pad_upsample: empty input");
    check_finite(sub, "fourier_zero_pad_upsample");

    int mi = sub.rows, ni = sub.cols;
    int mo = mi * factor, no = ni * factor;
    auto spec = fft2_real(mi, ni, sub.v.data());

    std::vector<std::complex<double>> big(static_cast<std::size_t>(mo) * no, 0.0);
    for (int a = 0; a < mi; ++a) {
        BinTargets ta = axis_bin_targets(a, mi, mo);
        for (int b = 0; b < ni; ++b) {
            BinTargets tb = axis_bin_targets(b, ni, no);
            std::complex<double> val = spec[static_cast<std::size_t>(a) * ni + b];
            for (int ia = 0; ia < ta.count; ++ia)
                for (int ib = 0; ib < tb.count; ++ib)
                    big[static_cast<std::size_t>(ta.idx[ia]) * no + tb.idx[ib]] +=
                        ta.w[ia] * tb.w[ib] * val;
        }
    }

    auto dense = fft2(mo, no, big.data(), true);
    double scale = 1.0 / (static_cast<double>(mi) * ni);
    Image out(mo, no);
    double worst_imag = 0.0;
    for (std::size_t i = 0; i < dense.size(); ++i) {
        out.v[i] = dense[i].real() * scale;
        worst_imag = std::max(worst_imag, std::abs(dense[i].imag()) * scale);
    }
    if (worst_imag >= 1e-9)
        fail("fourier_zero_pad_upsample: imaginary residue " + std::to_string(worst_imag));
    return out;
}

double lanczos_kernel(double t, int n) {
    if (std::abs(t) >= n) return 0.0;
    if (t == std::round(t)) return t == 0.0 ? 1.0 : 0.0;
    double pt = kPi * t;
    return (std::sin(pt) / pt) * (n * std::sin(pt / n) / pt);
}

namespace {

struct TapRow {
    int first;
    std::vector<double> w;
};

// Per-output-position interpolation weights along one axis. Kernel values
// outside the coarse grid are dropped and the remaining row renormalized.
template <typename KernelAt>
std::vector<TapRow> axis_taps(int coarse, int fine, int factor, int support, int origin,
                              KernelAt kernel) {
    std::vector<TapRow> taps(fine);
    for (int X = 0; X < fine; ++X) {
        double x = static_cast<double>(X - origin) / factor;
        int lo = static_cast<int>(std::floor(x - support)) + 1;
        int hi = static_cast<int>(std::ceil(x + support)) - 1;
        lo = std::max(lo, 0);
        hi = std::min(hi, coarse - 1);
        check(hi >= lo, "axis_taps: no valid taps");
        TapRow row;
        row.first = lo;
        row.w.resize(hi - lo + 1);
        double sum = 0.0;
        for (int m = lo; m <= hi; ++m) {
            row.w[m - lo] = kernel(x - m);
            sum += row.w[m - lo];
        }
        check(sum > 0.0, "axis_taps: degenerate weight row");
        for (double& w : row.w) w /= sum;
        taps[X] = std::move(row);
    }
    return taps;
}

Image apply_separable(const Image& sub, const std::vector<TapRow>& row_taps,
                      const std::vector<TapRow>& col_taps) {
    int fr = static_cast<int>(row_taps.size());
    int fc = static_cast<int>(col_taps.size());
    Image tmp(fr, sub.cols);
    for (int X = 0; X < fr; ++X) {
        const TapRow& t = row_taps[X];
        for (int j = 0; j < sub.cols; ++j) {
            double acc = 0.0;
            for (std::size_t k = 0; k < t.w.size(); ++k) acc += t.w[k] * sub.at(t.first + k, j);
            tmp.at(X, j) = acc;
        }
    }
    Image out(fr, fc);
    for (int X = 0; X < fr; ++X)
        for (int Y = 0; Y < fc; ++Y) {
            const TapRow& t = col_taps[Y];
            double acc = 0.0;
            for (std::size_t k = 0; k < t.w.size(); ++k) acc += t.w[k] * tmp.at(X, t.first + k);
            out.at(X, Y) = acc;
        }
    return out;
}

}  // namespace

Image lanczos_upsample(const Image& sub, int factor, int n, int i0, int j0) {
    check(factor >= 1 && n >= 1, "lanczos_upsample: factor and n must be >= 1");
    check_finite(sub, "lanczos_upsample");
    auto kern = [n](double t) { return lanczos_kernel(t, n); };
    auto rt = axis_taps(sub.rows, sub.rows * factor, factor, n, i0, kern);
    auto ct = axis_taps(sub.cols, sub.cols * factor, factor, n, j0, kern);
    return apply_separable(sub, rt, ct);
}

Image bilinear_upsample(const Image& sub, int factor, int i0, int j0) {
    check(factor >= 1, "bilinear_upsample: factor must be >= 1");
    check_finite(sub, "bilinear_upsample");
    auto tent = [](double t) { return std::max(0.0, 1.0 - std::abs(t)); };
    auto rt = axis_taps(sub.rows, sub.rows * factor, factor, 1, i0, tent);
    auto ct = axis_taps(sub.cols, sub.cols * factor, factor, 1, j0, tent);
    return apply_separable(sub, rt, ct);
}

Image cyclic_shift(const Image& im, int di, int dj) {
    Image out(im.rows, im.cols);
    for (int i = 0; i < im.rows; ++i) {
        int si = ((i - di) % im.rows + im.rows) % im.rows;
        for (int j = 0; j < im.cols; ++j) {
            int sj = ((j - dj) % im.cols + im.cols) % im.cols;
            out.at(i, j) = im.at(si, sj);
        }
    }
    return out;
}

Image box_mean(const Image& im, int r) {
    check(r >= 0, "box_mean: negative radius");
    int rows = im.rows, cols = im.cols;
    std::vector<double> sat(static_cast<std::size_t>(rows + 1) * (cols + 1), 0.0);
    auto s = [&](int i, int j) -> double& { return sat[static_cast<std::size_t>(i) * (cols + 1) + j]; };
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j)
            s(i + 1, j + 1) = im.at(i, j) + s(i, j + 1) + s(i + 1, j) - s(i, j);
    Image out(rows, cols);
    for (int i = 0; i < rows; ++i) {
        int i0 = std::max(0, i - r), i1 = std::min(rows - 1, i + r);
        for (int j = 0; j < cols; ++j) {
            int j0 = std::max(0, j - r), j1 = std::min(cols - 1, j + r);
            double sum = s(i1 + 1, j1 + 1) - s(i0, j1 + 1) - s(i1 + 1, j0) + s(i0, j0);
            out.at(i, j) = sum / ((i1 - i0 + 1) * (j1 - j0 + 1));
        }
    }
    return out;
}

Image guided_filter(const Image& input, const Image& guide, int r, double eps) {
    check(input.same_shape(guide), "guided_filter: input/guide shape mismatch");
    check(r >= 1, "guided_filter: radius must be >= 1");
    check(eps > 0.0, "guided_filter: eps must be positive");
    check_finite(input, "guided_filter");
    check_finite(guide, "guided_filter");

    Image mean_i = box_mean(guide, r);
    Image mean_p = box_mean(input, r);
    Image ii(input.rows, input.cols), ip(input.rows, input.cols);
    for (std::size_t k = 0; k < input.numel(); ++k) {
        ii.v[k] = guide.v[k] * guide.v[k];
        ip.v[k] = guide.v[k] * input.v[k];
    }
    Image corr_ii = box_mean(ii, r);
    Image corr_ip = box_mean(ip, r);

    Image a(input.rows, input.cols), b(input.rows, input.cols);
    for (std::size_t k = 0; k < input.numel(); ++k) {
        double var_i = corr_ii.v[k] - mean_i.v[k] * mean_i.v[k];
        double cov_ip = corr_ip.v[k] - mean_i.v[k] * mean_p.v[k];
        a.v[k] = cov_ip / (var_i + eps);
        b.v[k] = mean_p.v[k] - a.v[k] * mean_i.v[k];
    }
    Image mean_a = box_mean(a, r);
    Image mean_b = box_mean(b, r);
    Image out(input.rows, input.cols);
    for (std::size_t k = 0; k < input.numel(); ++k)
        out.v[k] = mean_a.v[k] * guide.v[k] + mean_b.v[k];
    return out;
}

HsiCube upsample_stack(const MosaicImage& mos, const LowpassConfig& cfg) {
    cfg.validate();
    auto subs = band_extract(mos);
    const MsfaPattern& pat = mos.pattern;
    HsiCube out(mos.im.rows, mos.im.cols, pat.bands);
    for (int k = 0; k < pat.bands; ++k) {
        auto [i0, j0] = pat.anchor(k);
        Image up;
        if (cfg.mode == UpsampleMode::kFourierZeroPad)
            up = cyclic_shift(fourier_zero_pad_upsample(subs[k], pat.p), i0, j0);
        else
            up = lanczos_upsample(subs[k], pat.p, cfg.lanczos_n, i0, j0);
        out.set_band(k, up);
    }
    return out;
}

HsiCube reconstruct_lowpass(const MosaicImage& mos, const LowpassConfig& cfg) {
    HsiCube stack = upsample_stack(mos, cfg);
    Image guide = stack.band(0);
    HsiCube out(stack.rows, stack.cols, stack.bands);
    for (int k = 0; k < stack.bands; ++k)
        out.set_band(k, guided_filter(stack.band(k), guide, cfg.radius, cfg.eps));
    clamp01(out);
    return out;
}

HsiCube bilinear_demosaic(const MosaicImage& mos) {
    auto subs = band_extract(mos);
    const MsfaPattern& pat = mos.pattern;
    HsiCube out(mos.im.rows, mos.im.cols, pat.bands);
    for (int k = 0; k < pat.bands; ++k) {
        auto [i0, j0] = pat.anchor(k);
        out.set_band(k, bilinear_upsample(subs[k], pat.p, i0, j0));
    }
    clamp01(out);
    return out;
}

void clamp01(HsiCube& cube) {
    for (double& x : cube.data) x = std::clamp(x, 0.0, 1.0);
}

}  // namespace fdm
