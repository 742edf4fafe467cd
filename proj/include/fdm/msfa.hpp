#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "fdm/image.hpp"

namespace fdm {

// Periodic multispectral filter array: a p×p tile of band indices that
// repeats across the sensor. band_at is row-major.
struct MsfaPattern {
    int p = 0;
    int bands = 0;
    std::vector<int> band_at;  // p*p entries in [0, bands)

    int at(int m, int n) const { return band_at[static_cast<std::size_t>(m) * p + n]; }
    int band_for_pixel(int i, int j) const { return at(i % p, j % p); }

    void validate() const;

    // First row-major occurrence of band k inside the tile.
    std::pair<int, int> anchor(int k) const;

    // Number of occurrences of band k inside the tile.
    int count(int k) const;
};

// 4×4 pattern with bands 0..15 laid out row-major.
MsfaPattern default_pattern();

// Pattern with period p over C bands, filled row-major modulo C.
MsfaPattern rowmajor_pattern(int p, int bands);

// Hyperspectral cube, band-major storage: data[k][i][j].
struct HsiCube {
    int rows = 0;
    int cols = 0;
    int bands = 0;
    std::vector<double> data;

    HsiCube() = default;
    HsiCube(int r, int c, int b, double fill = 0.0)
        : rows(r), cols(c), bands(b), data(static_cast<std::size_t>(r) * c * b, fill) {}

    double& at(int i, int j, int k) {
        return data[(static_cast<std::size_t>(k) * rows + i) * cols + j];
    }
    double at(int i, int j, int k) const {
        return data[(static_cast<std::size_t>(k) * rows + i) * cols + j];
    }

    Image band(int k) const;
    void set_band(int k, const Image& im);
};

// Single-channel sensor readout plus the pattern that produced it.
struct MosaicImage {
    Image im;
    MsfaPattern pattern;
};

// One-hot per-pixel band indicator, same storage layout as HsiCube.
struct SampleMask {
    int rows = 0;
    int cols = 0;
    int bands = 0;
    std::vector<std::uint8_t> m;

    std::uint8_t at(int i, int j, int k) const {
        return m[(static_cast<std::size_t>(k) * rows + i) * cols + j];
    }
};

MosaicImage mosaic(const HsiCube& cube, const MsfaPattern& pattern);
SampleMask sample_mask(int rows, int cols, const MsfaPattern& pattern);

// Entry (i,j) = (i mod p, j mod p), packed as m*p + n.
std::vector<int> relative_position_map(int rows, int cols, int p);

// De-interleave a mosaic into per-band (M/p)×(N/p) subimages. Requires each
// band to appear exactly once in the pattern tile.
std::vector<Image> band_extract(const MosaicImage& mos);

// Inverse of band_extract.
MosaicImage band_interleave(const std::vector<Image>& subs, const MsfaPattern& pattern);

}  // namespace fdm
