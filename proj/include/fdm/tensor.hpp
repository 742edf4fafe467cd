#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "fdm/common.hpp"

namespace fdm {

// Dense tensor of doubles, rank 1..4, row-major, with an optional gradient
// buffer of the same shape. Activations use NCHW order.
struct Tensor {
    std::vector<int> dims;
    std::vector<double> v;
    std::vector<double> g;  // empty until ensure_grad()

    Tensor() = default;
    explicit Tensor(std::vector<int> shape) : dims(std::move(shape)) {
        check(!dims.empty() && dims.size() <= 4, "Tensor: rank must be 1..4");
        std::size_t n = 1;
        for (int d : dims) {
            check(d > 0, "Tensor: extents must be positive");
            n *= static_cast<std::size_t>(d);
        }
        v.assign(n, 0.0);
    }

    static Tensor zeros(std::vector<int> shape) { return Tensor(std::move(shape)); }

    int rank() const { return static_cast<int>(dims.size()); }
    std::size_t numel() const { return v.size(); }

    bool same_shape(const Tensor& o) const { return dims == o.dims; }

    std::string shape_str() const {
        std::string s = "(";
        for (std::size_t i = 0; i < dims.size(); ++i) {
            if (i) s += "x";
            s += std::to_string(dims[i]);
        }
        return s + ")";
    }

    void ensure_grad() {
        if (g.size() != v.size()) g.assign(v.size(), 0.0);
    }
    void zero_grad() {
        if (!g.empty()) std::fill(g.begin(), g.end(), 0.0);
    }

    // Rank-checked accessors; hot loops index v directly.
    double& at(int i) {
        return v[static_cast<std::size_t>(i)];
    }
    double& at(int i, int j) {
        return v[static_cast<std::size_t>(i) * dims[1] + j];
    }
    double& at(int i, int j, int k) {
        return v[(static_cast<std::size_t>(i) * dims[1] + j) * dims[2] + k];
    }
    double& at(int n, int c, int h, int w) {
        return v[((static_cast<std::size_t>(n) * dims[1] + c) * dims[2] + h) * dims[3] + w];
    }
    double at(int i) const { return v[static_cast<std::size_t>(i)]; }
    double at(int i, int j) const { return v[static_cast<std::size_t>(i) * dims[1] + j]; }
    double at(int i, int j, int k) const {
        return v[(static_cast<std::size_t>(i) * dims[1] + j) * dims[2] + k];
    }
    double at(int n, int c, int h, int w) const {
        return v[((static_cast<std::size_t>(n) * dims[1] + c) * dims[2] + h) * dims[3] + w];
    }
};

// Owns named parameter tensors. Registration order is stable and is the
// serialization order; names are unique.
class ParamStore {
public:
    Tensor* create(const std::string& name, std::vector<int> shape) {
        check(index_.find(name) == index_.end(), "ParamStore: duplicate parameter name " + name);
        params_.push_back(std::make_unique<Tensor>(std::move(shape)));
        params_.back()->ensure_grad();
        names_.push_back(name);
        index_[name] = params_.size() - 1;
        return params_.back().get();
    }

    Tensor* find(const std::string& name) {
        auto it = index_.find(name);
        return it == index_.end() ? nullptr : params_[it->second].get();
    }

    std::size_t size() const { return params_.size(); }
    const std::string& name(std::size_t i) const { return names_[i]; }
    Tensor& param(std::size_t i) { return *params_[i]; }
    const Tensor& param(std::size_t i) const { return *params_[i]; }

    void zero_grads() {
        for (auto& p : params_) p->zero_grad();
    }

    std::size_t total_scalars() const {
        std::size_t n = 0;
        for (auto& p : params_) n += p->numel();
        return n;
    }

private:
    std::vector<std::unique_ptr<Tensor>> params_;
    std::vector<std::string> names_;
    std::map<std::string, std::size_t> index_;
};

}  // namespace fdm
