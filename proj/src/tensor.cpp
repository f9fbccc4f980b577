#include "spikemap/tensor.hpp"

#include <Eigen/Dense>
#include <sstream>

namespace spikemap {

namespace {

std::size_t shape_product(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return n;
}

using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    for (std::size_t d : shape_) {
        if (d == 0) {
            throw DimensionError("tensor shape has a zero dimension: " + shape_to_string(shape_));
        }
    }
    if (shape_product(shape_) != data_.size()) {
        throw DimensionError("tensor data length " + std::to_string(data_.size()) +
                             " does not match shape " + shape_to_string(shape_));
    }
}

Tensor Tensor::zeros(std::vector<std::size_t> shape) {
    std::size_t n = shape_product(shape);
    return Tensor(std::move(shape), std::vector<double>(n, 0.0));
}

std::string shape_to_string(const std::vector<std::size_t>& shape) {
    std::ostringstream out;
    out << "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i > 0) out << "x";
        out << shape[i];
    }
    out << "]";
    return out.str();
}

Tensor matvec(const Tensor& weights, const Tensor& x, const Tensor& bias) {
    if (weights.rank() != 2) {
        throw DimensionError("matvec expects a 2-D weight tensor, got " +
                             shape_to_string(weights.shape()));
    }
    const std::size_t out_dim = weights.shape()[0];
    const std::size_t in_dim = weights.shape()[1];
    if (x.size() != in_dim) {
        throw DimensionError("matvec dimension mismatch: weights " +
                             shape_to_string(weights.shape()) + " vs input " +
                             shape_to_string(x.shape()));
    }
    if (!bias.empty() && bias.size() != out_dim) {
        throw DimensionError("matvec bias length " + std::to_string(bias.size()) +
                             " does not match output dimension " + std::to_string(out_dim));
    }

    Tensor y = Tensor::zeros({out_dim});
    Eigen::Map<const RowMajorMatrix> W(weights.data(), static_cast<Eigen::Index>(out_dim),
                                       static_cast<Eigen::Index>(in_dim));
    Eigen::Map<const Eigen::VectorXd> xv(x.data(), static_cast<Eigen::Index>(in_dim));
    Eigen::Map<Eigen::VectorXd> yv(y.data(), static_cast<Eigen::Index>(out_dim));
    yv.noalias() = W * xv;
    if (!bias.empty()) {
        Eigen::Map<const Eigen::VectorXd> bv(bias.data(), static_cast<Eigen::Index>(out_dim));
        yv += bv;
    }
    return y;
}

Tensor conv2d(const Tensor& input, const Tensor& kernels, const Tensor& bias,
              std::size_t stride, std::size_t padding) {
    if (input.rank() != 3 || kernels.rank() != 4) {
        throw DimensionError("conv2d expects CxHxW input and FxCxkxk kernels, got " +
                             shape_to_string(input.shape()) + " and " +
                             shape_to_string(kernels.shape()));
    }
    const std::size_t C = input.shape()[0], H = input.shape()[1], W = input.shape()[2];
    const std::size_t F = kernels.shape()[0], KC = kernels.shape()[1];
    const std::size_t kh = kernels.shape()[2], kw = kernels.shape()[3];
    if (KC != C) {
        throw DimensionError("conv2d channel mismatch: input " + shape_to_string(input.shape()) +
                             " vs kernels " + shape_to_string(kernels.shape()));
    }
    if (H + 2 * padding < kh || W + 2 * padding < kw) {
        throw DimensionError("conv2d kernel " + shape_to_string(kernels.shape()) +
                             " larger than padded input " + shape_to_string(input.shape()));
    }
    if (!bias.empty() && bias.size() != F) {
        throw DimensionError("conv2d bias length does not match filter count");
    }
    const std::size_t out_h = (H + 2 * padding - kh) / stride + 1;
    const std::size_t out_w = (W + 2 * padding - kw) / stride + 1;

    Tensor out = Tensor::zeros({F, out_h, out_w});
    for (std::size_t f = 0; f < F; ++f) {
        const double b = bias.empty() ? 0.0 : bias[f];
        for (std::size_t oy = 0; oy < out_h; ++oy) {
            for (std::size_t ox = 0; ox < out_w; ++ox) {
                double acc = 0.0;
                for (std::size_t c = 0; c < C; ++c) {
                    for (std::size_t ky = 0; ky < kh; ++ky) {
                        const std::ptrdiff_t iy =
                            static_cast<std::ptrdiff_t>(oy * stride + ky) -
                            static_cast<std::ptrdiff_t>(padding);
                        if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(H)) continue;
                        for (std::size_t kx = 0; kx < kw; ++kx) {
                            const std::ptrdiff_t ix =
                                static_cast<std::ptrdiff_t>(ox * stride + kx) -
                                static_cast<std::ptrdiff_t>(padding);
                            if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(W)) continue;
                            acc += kernels[((f * C + c) * kh + ky) * kw + kx] *
                                   input.at3(c, static_cast<std::size_t>(iy),
                                             static_cast<std::size_t>(ix), H, W);
                        }
                    }
                }
                out.at3(f, oy, ox, out_h, out_w) = acc + b;
            }
        }
    }
    return out;
}

Tensor avg_pool2d(const Tensor& input, std::size_t window, std::size_t stride) {
    if (input.rank() != 3) {
        throw DimensionError("avg_pool2d expects a CxHxW input, got " +
                             shape_to_string(input.shape()));
    }
    const std::size_t C = input.shape()[0], H = input.shape()[1], W = input.shape()[2];
    if (window > H || window > W) {
        throw DimensionError("avg_pool2d window " + std::to_string(window) +
                             " exceeds spatial extent of " + shape_to_string(input.shape()));
    }
    const std::size_t out_h = (H - window) / stride + 1;
    const std::size_t out_w = (W - window) / stride + 1;
    const double inv_area = 1.0 / static_cast<double>(window * window);

    Tensor out = Tensor::zeros({C, out_h, out_w});
    for (std::size_t c = 0; c < C; ++c) {
        for (std::size_t oy = 0; oy < out_h; ++oy) {
            for (std::size_t ox = 0; ox < out_w; ++ox) {
                double acc = 0.0;
                for (std::size_t ky = 0; ky < window; ++ky) {
                    for (std::size_t kx = 0; kx < window; ++kx) {
                        acc += input.at3(c, oy * stride + ky, ox * stride + kx, H, W);
                    }
                }
                out.at3(c, oy, ox, out_h, out_w) = acc * inv_area;
            }
        }
    }
    return out;
}

}  // namespace spikemap
