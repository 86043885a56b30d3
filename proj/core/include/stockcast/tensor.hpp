#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "stockcast/rng.hpp"

namespace stockcast::ad {

/// Dense n-dimensional array of doubles, row-major. Rank 2 is the workhorse;
/// conv kernels are rank 3 and scalars are {1,1}.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> shape);  // zero-filled
    Tensor(std::vector<std::size_t> shape, std::vector<double> data);

    static Tensor scalar(double v) { return Tensor({1, 1}, {v}); }
    static Tensor uniform(std::vector<std::size_t> shape, Rng& rng, double lo, double hi);

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t numel() const { return data_.size(); }
    bool empty() const { return data_.empty(); }
    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
    std::string shape_str() const;

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }
    std::vector<double>& vec() { return data_; }
    const std::vector<double>& vec() const { return data_; }

    // rank-2 accessors
    std::size_t rows() const { return shape_[0]; }
    std::size_t cols() const { return shape_[1]; }
    double& at(std::size_t r, std::size_t c) { return data_[r * shape_[1] + c]; }
    double at(std::size_t r, std::size_t c) const { return data_[r * shape_[1] + c]; }

    // rank-3 accessor (i, j, k)
    double& at3(std::size_t i, std::size_t j, std::size_t k) {
        return data_[(i * shape_[1] + j) * shape_[2] + k];
    }
    double at3(std::size_t i, std::size_t j, std::size_t k) const {
        return data_[(i * shape_[1] + j) * shape_[2] + k];
    }

    bool all_finite() const;
    void fill(double v);

private:
    std::vector<std::size_t> shape_;
    std::vector<double> data_;
};

}  // namespace stockcast::ad
