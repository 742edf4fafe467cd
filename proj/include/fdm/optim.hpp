#pragma once

#include <vector>

#include "fdm/tensor.hpp"

namespace fdm {

struct AdamConfig {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Bias-corrected Adam over a ParamStore. A step with any non-finite gradient
// is rejected atomically (no parameter or moment is touched).
class Adam {
public:
    Adam(ParamStore& ps, AdamConfig cfg = {});

    void step();
    void set_lr(double lr) { cfg_.lr = lr; }
    double lr() const { return cfg_.lr; }
    long step_count() const { return t_; }

private:
    ParamStore* ps_;
    AdamConfig cfg_;
    long t_ = 0;
    std::vector<std::vector<double>> m_, v_;
};

// lr0 * 2^-(epoch/1000), the halving schedule.
double lr_at_epoch(double lr0, long epoch);

}  // namespace fdm
