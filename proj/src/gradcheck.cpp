#include "fdm/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace fdm {

GradCheckReport fd_gradcheck(const std::function<double()>& eval,
                             const std::function<void()>& compute_grads,
                             const std::vector<std::pair<std::string, Tensor*>>& probes,
                             double h, double tol, Rng& rng, int samples_per_tensor) {
    GradCheckReport rep;
    compute_grads();

    std::vector<std::vector<double>> analytic;
    analytic.reserve(probes.size());
    for (const auto& [name, t] : probes) {
        if (t->g.size() != t->v.size()) {
            rep.note = "probe " + name + " has no gradient buffer";
            return rep;
        }
        analytic.push_back(t->g);
    }

    bool all_finite = true;
    for (std::size_t pi = 0; pi < probes.size(); ++pi) {
        Tensor* t = probes[pi].second;
        std::size_t n = t->numel();
        std::vector<std::size_t> coords;
        if (n <= static_cast<std::size_t>(samples_per_tensor)) {
            coords.resize(n);
            for (std::size_t i = 0; i < n; ++i) coords[i] = i;
        } else {
            coords.resize(samples_per_tensor);
            for (auto& c : coords) c = static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(n) - 1));
        }
        for (std::size_t c : coords) {
            double old = t->v[c];
            t->v[c] = old + h;
            double fp = eval();
            t->v[c] = old - h;
            double fm = eval();
            t->v[c] = old;
            if (!is_finite(fp) || !is_finite(fm)) {
                all_finite = false;
                rep.note = "non-finite objective at " + probes[pi].first + "[" + std::to_string(c) + "]";
                continue;
            }
            double fd = (fp - fm) / (2.0 * h);
            double an = analytic[pi][c];
            double rel = std::abs(fd - an) / std::max(std::abs(fd) + std::abs(an), 1e-6);
            ++rep.checked;
            if (rel > rep.max_rel_err) {
                rep.max_rel_err = rel;
                rep.worst_coord = probes[pi].first + "[" + std::to_string(c) + "]";
            }
        }
    }
    rep.ok = all_finite && rep.max_rel_err < tol && rep.checked > 0;
    return rep;
}

}  // namespace fdm
