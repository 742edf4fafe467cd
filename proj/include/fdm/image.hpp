#pragma once

#include <cstddef>
#include <vector>

#include "fdm/common.hpp"

namespace fdm {

// Single-channel 2-D image, row-major doubles.
struct Image {
    int rows = 0;
    int cols = 0;
    std::vector<double> v;

    Image() = default;
    Image(int r, int c, double fill = 0.0) : rows(r), cols(c), v(static_cast<std::size_t>(r) * c, fill) {
        check(r >= 0 && c >= 0, "Image: negative extent");
    }

    double& at(int i, int j) { return v[static_cast<std::size_t>(i) * cols + j]; }
    double at(int i, int j) const { return v[static_cast<std::size_t>(i) * cols + j]; }
    std::size_t numel() const { return v.size(); }

    bool same_shape(const Image& o) const { return rows == o.rows && cols == o.cols; }
};

}  // namespace fdm
