#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "fdm/rng.hpp"
#include "fdm/tensor.hpp"

namespace fdm {

struct GradCheckReport {
    bool ok = false;
    double max_rel_err = 0.0;
    std::string worst_coord;
    int checked = 0;
    std::string note;
};

// Central-difference comparison against analytic gradients.
//
// compute_grads() must zero and then fill the .g buffer of every probe
// tensor at the current point; eval() must recompute the scalar objective
// from current tensor values. Coordinates are sampled per tensor (all of
// them when the tensor is small). Relative error uses |fd|+|an| with a small
// floor so near-zero gradient pairs do not produce spurious failures.
GradCheckReport fd_gradcheck(const std::function<double()>& eval,
                             const std::function<void()>& compute_grads,
                             const std::vector<std::pair<std::string, Tensor*>>& probes,
                             double h, double tol, Rng& rng, int samples_per_tensor = 24);

}  // namespace fdm
