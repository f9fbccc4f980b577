#pragma once

#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <vector>

#include "spikemap/errors.hpp"

namespace spikemap {

// Dense row-major tensor of doubles. Shapes are small (rank <= 4 in practice).
class Tensor {
  public:
    Tensor() = default;

    Tensor(std::vector<std::size_t> shape, std::vector<double> data);

    static Tensor zeros(std::vector<std::size_t> shape);

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    std::vector<double>& raw() { return data_; }
    const std::vector<double>& raw() const { return data_; }

    // 3-D access for C x H x W feature maps.
    double& at3(std::size_t c, std::size_t h, std::size_t w, std::size_t H, std::size_t W) {
        return data_[(c * H + h) * W + w];
    }
    double at3(std::size_t c, std::size_t h, std::size_t w, std::size_t H, std::size_t W) const {
        return data_[(c * H + h) * W + w];
    }

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

  private:
    std::vector<std::size_t> shape_;
    std::vector<double> data_;
};

std::string shape_to_string(const std::vector<std::size_t>& shape);

// y = W x (+ b). W is [out x in]; x may have any shape with size() == in.
Tensor matvec(const Tensor& weights, const Tensor& x, const Tensor& bias);

// Cross-correlation of a C x H x W input with F x C x k x k kernels,
// zero padding, square stride. Output is F x H' x W'.
Tensor conv2d(const Tensor& input, const Tensor& kernels, const Tensor& bias,
              std::size_t stride, std::size_t padding);

Tensor avg_pool2d(const Tensor& input, std::size_t window, std::size_t stride);

}  // namespace spikemap
