#pragma once

#include <string>

#include "fdm/msfa.hpp"

namespace fdm {

// "HSIC 1 <M> <N> <C>\n" followed by C*M*N little-endian float32 samples,
// band-major, row-major within a band. Payload length is exact and samples
// are stored at float32 precision, so save/load round trips are bit-identical
// once a cube has passed through the format.
void save_hsic(const std::string& path, const HsiCube& cube);
HsiCube load_hsic(const std::string& path);

// "MOSA 1 <M> <N> <p>\n" followed by the p*p band indices in ASCII on one
// line, then M*N little-endian float32 samples.
void save_mosaic(const std::string& path, const MosaicImage& mos);
MosaicImage load_mosaic(const std::string& path);

// 8-bit RGB image of three 1-based band indices; [0,1] maps linearly onto
// [0,255] with ties rounded up. PNG or PPM, chosen by the file extension.
void export_falsecolor(const HsiCube& cube, int band_r, int band_g, int band_b,
                       const std::string& path);

}  // namespace fdm
