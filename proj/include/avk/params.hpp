#pragma once

#include <Eigen/Core>
#include <cmath>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "avk/error.hpp"
#include "avk/rng.hpp"

namespace avk {

/// One named parameter tensor with its gradient and Adam moment buffers.
struct Tensor {
    Eigen::MatrixXd value;
    Eigen::MatrixXd grad;
    Eigen::MatrixXd m;
    Eigen::MatrixXd v;

    Tensor(Eigen::Index rows, Eigen::Index cols)
        : value(Eigen::MatrixXd::Zero(rows, cols)),
          grad(Eigen::MatrixXd::Zero(rows, cols)),
          m(Eigen::MatrixXd::Zero(rows, cols)),
          v(Eigen::MatrixXd::Zero(rows, cols)) {}
};

/// Insertion-ordered collection of named tensors plus one Adam step counter.
class ParameterSet {
public:
    Tensor& add(const std::string& name, Eigen::Index rows, Eigen::Index cols) {
        if (index_.count(name)) throw UsageError("duplicate parameter name: " + name);
        index_.emplace(name, items_.size());
        items_.emplace_back(name, Tensor(rows, cols));
        return items_.back().second;
    }

    bool has(std::string_view name) const { return index_.count(std::string(name)) != 0; }

    Tensor& at(std::string_view name) {
        auto it = index_.find(std::string(name));
        if (it == index_.end()) throw UsageError("unknown parameter: " + std::string(name));
        return items_[it->second].second;
    }
    const Tensor& at(std::string_view name) const {
        return const_cast<ParameterSet*>(this)->at(name);
    }

    std::size_t size() const { return items_.size(); }
    auto begin() { return items_.begin(); }
    auto end() { return items_.end(); }
    auto begin() const { return items_.begin(); }
    auto end() const { return items_.end(); }

    long long step_count() const { return step_; }

    void zero_grad() {
        for (auto& [name, t] : items_) t.grad.setZero();
    }

    bool grads_finite() const {
        for (const auto& [name, t] : items_) {
            if (!t.grad.allFinite()) return false;
        }
        return true;
    }

    /// Standard Adam update over every tensor. Throws NumericError on
    /// non-finite gradients without touching any parameter.
    void adam_step(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8) {
        if (!grads_finite()) throw NumericError("non-finite gradient in adam_step");
        ++step_;
        const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step_));
        const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step_));
        for (auto& [name, t] : items_) {
            t.m = beta1 * t.m + (1.0 - beta1) * t.grad;
            t.v = beta2 * t.v + (1.0 - beta2) * t.grad.cwiseProduct(t.grad);
            t.value -= (lr * (t.m / bc1).array() / ((t.v / bc2).array().sqrt() + eps)).matrix();
        }
    }

    /// Uniform(-scale, scale) init for a tensor; biases are left zero by callers.
    static void init_uniform(Tensor& t, double scale, Rng& rng) {
        for (Eigen::Index i = 0; i < t.value.rows(); ++i)
            for (Eigen::Index j = 0; j < t.value.cols(); ++j)
                t.value(i, j) = rng.uniform(-scale, scale);
    }

    std::vector<Eigen::MatrixXd> snapshot_values() const {
        std::vector<Eigen::MatrixXd> out;
        out.reserve(items_.size());
        for (const auto& [name, t] : items_) out.push_back(t.value);
        return out;
    }

    void restore_values(const std::vector<Eigen::MatrixXd>& snapshot) {
        if (snapshot.size() != items_.size())
            throw UsageError("parameter snapshot size mismatch");
        for (std::size_t i = 0; i < items_.size(); ++i) items_[i].second.value = snapshot[i];
    }

private:
    std::vector<std::pair<std::string, Tensor>> items_;
    std::unordered_map<std::string, std::size_t> index_;
    long long step_ = 0;
};

}  // namespace avk
