#include "fdm/bridge.hpp"

#include <algorithm>

namespace fdm {

Tensor cube_to_tensor(const HsiCube& cube) {
    Tensor t({1, cube.bands, cube.rows, cube.cols});
    std::copy(cube.data.begin(), cube.data.end(), t.v.begin());
    return t;
}

HsiCube tensor_item_to_cube(const Tensor& t, int item) {
    check(t.rank() == 4, "tensor_item_to_cube: rank-4 tensor expected");
    check(item >= 0 && item < t.dims[0], "tensor_item_to_cube: batch index out of range");
    HsiCube cube(t.dims[2], t.dims[3], t.dims[1]);
    std::size_t n = cube.data.size();
    std::copy_n(t.v.begin() + static_cast<std::size_t>(item) * n, n, cube.data.begin());
    return cube;
}

Tensor mosaic_to_tensor(const MosaicImage& mos) { return image_to_tensor(mos.im); }

Tensor image_to_tensor(const Image& im) {
    Tensor t({1, 1, im.rows, im.cols});
    std::copy(im.v.begin(), im.v.end(), t.v.begin());
    return t;
}

}  // namespace fdm
