#include "fdm/msfa.hpp"

#include <algorithm>

namespace fdm {

void MsfaPattern::validate() const {
    check(p >= 1, "pattern: period must be >= 1");
    check(bands >= 1, "pattern: band count must be >= 1");
    check(static_cast<int>(band_at.size()) == p * p, "pattern: layout must have p*p entries");
    std::vector<int> seen(bands, 0);
    for (int b : band_at) {
        check(b >= 0 && b < bands, "pattern: band index out of range");
        ++seen[b];
    }
    if (p * p >= bands) {
        for (int k = 0; k < bands; ++k)
            check(seen[k] > 0, "pattern: band " + std::to_string(k) + " missing from layout");
    }
}

std::pair<int, int> MsfaPattern::anchor(int k) const {
    for (int m = 0; m < p; ++m)
        for (int n = 0; n < p; ++n)
            if (at(m, n) == k) return {m, n};
    fail("pattern: band " + std::to_string(k) + " missing from layout");
}

int MsfaPattern::count(int k) const {
    return static_cast<int>(std::count(band_at.begin(), band_at.end(), k));
}

MsfaPattern default_pattern() { return rowmajor_pattern(4, 16); }

MsfaPattern rowmajor_pattern(int p, int bands) {
    MsfaPattern pat;
    pat.p = p;
    pat.bands = bands;
    pat.band_at.resize(static_cast<std::size_t>(p) * p);
    for (int i = 0; i < p * p; ++i) pat.band_at[i] = i % bands;
    pat.validate();
    return pat;
}

Image HsiCube::band(int k) const {
    check(k >= 0 && k < bands, "cube: band index out of range");
    Image im(rows, cols);
    std::copy_n(data.begin() + static_cast<std::size_t>(k) * rows * cols, im.numel(), im.v.begin());
    return im;
}

void HsiCube::set_band(int k, const Image& im) {
    check(k >= 0 && k < bands, "cube: band index out of range");
    check(im.rows == rows && im.cols == cols, "cube: band shape mismatch");
    std::copy(im.v.begin(), im.v.end(), data.begin() + static_cast<std::size_t>(k) * rows * cols);
}

static void check_divisible(int rows, int cols, int p, const char* what) {
    check(rows % p == 0 && cols % p == 0,
          std::string(what) + ": extents " + std::to_string(rows) + "x" + std::to_string(cols) +
              " not divisible by period " + std::to_string(p));
}

MosaicImage mosaic(const HsiCube& cube, const MsfaPattern& pattern) {
    pattern.validate();
    check_divisible(cube.rows, cube.cols, pattern.p, "mosaic");
    MosaicImage out;
    out.pattern = pattern;
    out.im = Image(cube.rows, cube.cols);
    for (int i = 0; i < cube.rows; ++i)
        for (int j = 0; j < cube.cols; ++j)
            out.im.at(i, j) = cube.at(i, j, pattern.band_for_pixel(i, j));
    return out;
}

SampleMask sample_mask(int rows, int cols, const MsfaPattern& pattern) {
    pattern.validate();
    check_divisible(rows, cols, pattern.p, "sample_mask");
    SampleMask mask;
    mask.rows = rows;
    mask.cols = cols;
    mask.bands = pattern.bands;
    mask.m.assign(static_cast<std::size_t>(rows) * cols * pattern.bands, 0);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) {
            int k = pattern.band_for_pixel(i, j);
            mask.m[(static_cast<std::size_t>(k) * rows + i) * cols + j] = 1;
        }
    return mask;
}

std::vector<int> relative_position_map(int rows, int cols, int p) {
    check(p >= 1, "relative_position_map: period must be >= 1");
    std::vector<int> map(static_cast<std::size_t>(rows) * cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j)
            map[static_cast<std::size_t>(i) * cols + j] = (i % p) * p + (j % p);
    return map;
}

std::vector<Image> band_extract(const MosaicImage& mos) {
    const MsfaPattern& pat = mos.pattern;
    pat.validate();
    check_divisible(mos.im.rows, mos.im.cols, pat.p, "band_extract");
    for (int k = 0; k < pat.bands; ++k)
        check(pat.count(k) == 1,
              "band_extract: band " + std::to_string(k) + " must appear exactly once per tile");
    int sr = mos.im.rows / pat.p;
    int sc = mos.im.cols / pat.p;
    std::vector<Image> subs(pat.bands, Image(sr, sc));
    for (int k = 0; k < pat.bands; ++k) {
        auto [m, n] = pat.anchor(k);
        for (int s = 0; s < sr; ++s)
            for (int t = 0; t < sc; ++t)
                subs[k].at(s, t) = mos.im.at(s * pat.p + m, t * pat.p + n);
    }
    return subs;
}

MosaicImage band_interleave(const std::vector<Image>& subs, const MsfaPattern& pattern) {
    pattern.validate();
    check(static_cast<int>(subs.size()) == pattern.bands, "band_interleave: band count mismatch");
    for (int k = 0; k < pattern.bands; ++k)
        check(pattern.count(k) == 1,
              "band_interleave: band " + std::to_string(k) + " must appear exactly once per tile");
    int sr = subs[0].rows;
    int sc = subs[0].cols;
    for (const Image& s : subs) check(s.rows == sr && s.cols == sc, "band_interleave: ragged subimages");
    MosaicImage out;
    out.pattern = pattern;
    out.im = Image(sr * pattern.p, sc * pattern.p);
    for (int k = 0; k < pattern.bands; ++k) {
        auto [m, n] = pattern.anchor(k);
        for (int s = 0; s < sr; ++s)
            for (int t = 0; t < sc; ++t)
                out.im.at(s * pattern.p + m, t * pattern.p + n) = subs[k].at(s, t);
    }
    return out;
}

}  // namespace fdm
