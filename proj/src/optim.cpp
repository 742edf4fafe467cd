#include "fdm/optim.hpp"

#include <cmath>

namespace fdm {

Adam::Adam(ParamStore& ps, AdamConfig cfg) : ps_(&ps), cfg_(cfg) {
    check(cfg_.lr > 0.0, "adam: learning rate must be positive");
    m_.resize(ps.size());
    v_.resize(ps.size());
    for (std::size_t i = 0; i < ps.size(); ++i) {
        m_[i].assign(ps.param(i).numel(), 0.0);
        v_[i].assign(ps.param(i).numel(), 0.0);
    }
}

void Adam::step() {
    for (std::size_t i = 0; i < ps_->size(); ++i) {
        const Tensor& p = ps_->param(i);
        check(p.g.size() == p.v.size(), "adam: parameter " + ps_->name(i) + " has no gradient");
        for (double g : p.g)
            if (!is_finite(g)) fail("adam: non-finite gradient in " + ps_->name(i));
    }
    ++t_;
    double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < ps_->size(); ++i) {
        Tensor& p = ps_->param(i);
        std::vector<double>& m = m_[i];
        std::vector<double>& v = v_[i];
        for (std::size_t j = 0; j < p.v.size(); ++j) {
            double g = p.g[j];
            m[j] = cfg_.beta1 * m[j] + (1.0 - cfg_.beta1) * g;
            v[j] = cfg_.beta2 * v[j] + (1.0 - cfg_.beta2) * g * g;
            double mhat = m[j] / bc1;
            double vhat = v[j] / bc2;
            p.v[j] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
        }
    }
}

double lr_at_epoch(double lr0, long epoch) {
    return std::ldexp(lr0, -static_cast<int>(epoch / 1000));
}

}  // namespace fdm
