#include "fdm/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace fdm {

namespace {

void check_shapes(const HsiCube& a, const HsiCube& b, const char* what) {
    check(a.rows == b.rows && a.cols == b.cols && a.bands == b.bands,
          std::string(what) + ": cube shape mismatch");
}

constexpr int kSsimRadius = 5;  // 11x11 window

const std::vector<double>& ssim_window() {
    static const std::vector<double> w = [] {
        const double sigma = 1.5;
        std::vector<double> win(11 * 11);
        double sum = 0.0;
        for (int i = -kSsimRadius; i <= kSsimRadius; ++i)
            for (int j = -kSsimRadius; j <= kSsimRadius; ++j) {
                double v = std::exp(-(i * i + j * j) / (2.0 * sigma * sigma));
                win[(i + kSsimRadius) * 11 + (j + kSsimRadius)] = v;
                sum += v;
            }
        for (double& v : win) v /= sum;
        return win;
    }();
    return w;
}

}  // namespace

double psnr_value(const HsiCube& pred, const HsiCube& ref) {
    check_shapes(pred, ref, "psnr");
    double mse = 0.0;
    for (std::size_t i = 0; i < ref.data.size(); ++i) {
        double d = pred.data[i] - ref.data[i];
        mse += d * d;
    }
    mse /= static_cast<double>(ref.data.size());
    if (mse < 1e-10) return 100.0;
    return 10.0 * std::log10(1.0 / mse);
}

double ssim_band(const Image& pred, const Image& ref) {
    check(pred.same_shape(ref), "ssim: band shape mismatch");
    check(pred.rows >= 11 && pred.cols >= 11, "ssim: image smaller than the 11x11 window");
    const std::vector<double>& win = ssim_window();
    const double c1 = 0.01 * 0.01;
    const double c2 = 0.03 * 0.03;
    double total = 0.0;
    long count = 0;
    for (int ci = kSsimRadius; ci < pred.rows - kSsimRadius; ++ci)
        for (int cj = kSsimRadius; cj < pred.cols - kSsimRadius; ++cj) {
            double mx = 0.0, my = 0.0;
            for (int i = -kSsimRadius; i <= kSsimRadius; ++i)
                for (int j = -kSsimRadius; j <= kSsimRadius; ++j) {
                    double w = win[(i + kSsimRadius) * 11 + (j + kSsimRadius)];
                    mx += w * pred.at(ci + i, cj + j);
                    my += w * ref.at(ci + i, cj + j);
                }
            double vx = 0.0, vy = 0.0, cxy = 0.0;
            for (int i = -kSsimRadius; i <= kSsimRadius; ++i)
                for (int j = -kSsimRadius; j <= kSsimRadius; ++j) {
                    double w = win[(i + kSsimRadius) * 11 + (j + kSsimRadius)];
                    double dx = pred.at(ci + i, cj + j) - mx;
                    double dy = ref.at(ci + i, cj + j) - my;
                    vx += w * dx * dx;
                    vy += w * dy * dy;
                    cxy += w * dx * dy;
                }
            double num = (2.0 * mx * my + c1) * (2.0 * cxy + c2);
            double den = (mx * mx + my * my + c1) * (vx + vy + c2);
            total += num / den;
            ++count;
        }
    return total / count;
}

double ssim_value(const HsiCube& pred, const HsiCube& ref) {
    check_shapes(pred, ref, "ssim");
    double total = 0.0;
    for (int k = 0; k < ref.bands; ++k) total += ssim_band(pred.band(k), ref.band(k));
    return total / ref.bands;
}

double sam_value(const HsiCube& pred, const HsiCube& ref) {
    check_shapes(pred, ref, "sam");
    double total = 0.0;
    long count = 0;
    for (int i = 0; i < ref.rows; ++i)
        for (int j = 0; j < ref.cols; ++j) {
            double dot = 0.0, np = 0.0, nr = 0.0;
            for (int k = 0; k < ref.bands; ++k) {
                double a = pred.at(i, j, k);
                double b = ref.at(i, j, k);
                dot += a * b;
                np += a * a;
                nr += b * b;
            }
            if (np == 0.0 || nr == 0.0) continue;
            double c = std::clamp(dot / std::sqrt(np * nr), -1.0, 1.0);
            total += std::acos(c);
            ++count;
        }
    return count ? total / count : 0.0;
}

double mrae_value(const HsiCube& pred, const HsiCube& ref) {
    check_shapes(pred, ref, "mrae");
    double total = 0.0;
    for (std::size_t i = 0; i < ref.data.size(); ++i)
        total += std::abs(ref.data[i] - pred.data[i]) / (ref.data[i] + 1e-6);
    return total / static_cast<double>(ref.data.size());
}

MetricReport metrics(const HsiCube& pred, const HsiCube& ref) {
    check_shapes(pred, ref, "metrics");
    return {psnr_value(pred, ref), ssim_value(pred, ref), sam_value(pred, ref),
            mrae_value(pred, ref)};
}

}  // namespace fdm
