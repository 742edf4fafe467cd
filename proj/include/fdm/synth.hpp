#pragma once

#include <cstdint>

#include "fdm/msfa.hpp"

namespace fdm {

// Recipe for a synthetic hyperspectral scene: a band-limited smooth field
// (2-D cosines whose phase drifts linearly across bands), a piecewise
// constant detail field (random rectangles sharing one spatial layout, scaled
// per band), and uniform per-voxel noise. Each amplitude is a budget: the
// component stays within that distance of zero, so the default recipe never
// reaches the output clamp.
struct SceneSpec {
    int rows = 64;
    int cols = 64;
    int bands = 16;
    double base_level = 0.5;

    int wave_count = 6;
    int freq_bound = 7;  // max DFT index per axis for the smooth field
    double smooth_amp = 0.25;
    double phase_ramp = 0.01;  // per-band phase drift in radians, scaled per wave

    int rect_count = 12;
    double detail_amp = 0.15;

    double noise_level = 0.02;
    std::uint64_t seed = 0;

    void validate() const;
};

// Generated cube plus its additive parts: cube = clamp01(smooth + detail +
// noise). Parts are returned unclamped so smooth-field reconstruction and
// detail recovery can be scored independently.
struct SynthScene {
    HsiCube cube;
    HsiCube smooth;
    HsiCube detail;
    HsiCube noise;
};

SynthScene generate_scene(const SceneSpec& spec);

}  // namespace fdm
