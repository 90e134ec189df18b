#include "gsteal/tensor.hpp"

#include <cmath>
#include <string>

namespace gsteal {

namespace {
std::size_t shape_product(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return n;
}
}  // namespace

Tensor Tensor::zeros(std::vector<std::size_t> shape) {
    Tensor t;
    t.shape_ = std::move(shape);
    t.data_.assign(shape_product(t.shape_), 0.0);
    return t;
}

Tensor Tensor::scalar(double v) {
    Tensor t = zeros({1, 1});
    t.data_[0] = v;
    return t;
}

Tensor Tensor::from(std::vector<std::size_t> shape, std::vector<double> values) {
    if (shape_product(shape) != values.size()) {
        throw DimensionError("tensor: shape product " +
                             std::to_string(shape_product(shape)) +
                             " != value count " + std::to_string(values.size()));
    }
    for (double v : values) {
        if (!std::isfinite(v)) throw DimensionError("tensor: non-finite value");
    }
    Tensor t;
    t.shape_ = std::move(shape);
    t.data_ = std::move(values);
    return t;
}

std::size_t Tensor::rows() const {
    if (shape_.size() != 2) throw DimensionError("tensor: rows() on non-2D tensor");
    return shape_[0];
}

std::size_t Tensor::cols() const {
    if (shape_.size() != 2) throw DimensionError("tensor: cols() on non-2D tensor");
    return shape_[1];
}

double& Tensor::at(std::size_t r, std::size_t c) {
    return data_[r * cols() + c];
}

double Tensor::at(std::size_t r, std::size_t c) const {
    return data_[r * cols() + c];
}

}  // namespace gsteal
