#pragma once

#include <cstddef>
#include <vector>

#include "gsteal/errors.hpp"

namespace gsteal {

// Dense row-major tensor of 64-bit floats. Rank is arbitrary but nearly all
// uses are 2-D ([rows x cols]); scalars are stored as shape {1, 1}.
class Tensor {
public:
    Tensor() = default;

    static Tensor zeros(std::vector<std::size_t> shape);
    static Tensor scalar(double v);
    // Checked construction: shape product must match the value count and
    // every value must be finite. Used at API boundaries (file and wire
    // decode, fixtures); internal kernels write into zeros() directly.
    static Tensor from(std::vector<std::size_t> shape, std::vector<double> values);

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    // 2-D accessors.
    std::size_t rows() const;
    std::size_t cols() const;
    double& at(std::size_t r, std::size_t c);
    double at(std::size_t r, std::size_t c) const;

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::vector<double>& values() { return data_; }
    const std::vector<double>& values() const { return data_; }

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
    bool operator==(const Tensor& other) const {
        return shape_ == other.shape_ && data_ == other.data_;
    }

private:
    std::vector<std::size_t> shape_;
    std::vector<double> data_;
};

}  // namespace gsteal
