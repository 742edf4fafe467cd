#pragma once

#include "fdm/msfa.hpp"
#include "fdm/tensor.hpp"

namespace fdm {

// HsiCube data is band-major (k,i,j), which is CHW; these are layout-preserving.
Tensor cube_to_tensor(const HsiCube& cube);              // (1,C,M,N)
HsiCube tensor_item_to_cube(const Tensor& t, int item);  // batch slice -> cube
Tensor mosaic_to_tensor(const MosaicImage& mos);         // (1,1,M,N)
Tensor image_to_tensor(const Image& im);                 // (1,1,M,N)

}  // namespace fdm
