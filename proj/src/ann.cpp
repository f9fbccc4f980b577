#include "spikemap/ann.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <random>

namespace spikemap {

namespace {

using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

bool is_weighted(const LayerSpec& layer) {
    return std::holds_alternative<DenseLayer>(layer) || std::holds_alternative<ConvLayer>(layer);
}

double max_abs(const Tensor& t) {
    double m = 0.0;
    for (double v : t.raw()) m = std::max(m, std::fabs(v));
    return m;
}

// Uniform double in [0,1), identical across platforms for a given engine state.
double next_unit(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

Tensor apply_activation(const Tensor& x, const ActivationLayer& act) {
    Tensor y = x;
    for (double& v : y.raw()) v = leaky_relu(v, act.alpha_pos, act.alpha_neg);
    return y;
}

}  // namespace

double leaky_relu(double x, double alpha_pos, double alpha_neg) {
    return x > 0.0 ? alpha_pos * x : alpha_neg * x;
}

std::size_t AnnNetwork::weighted_layer_count() const {
    std::size_t n = 0;
    for (const auto& layer : layers) {
        if (is_weighted(layer)) ++n;
    }
    return n;
}

void AnnNetwork::validate(const std::vector<std::size_t>& input_shape) const {
    if (layers.empty()) throw ConfigError("network has no layers");
    if (!std::holds_alternative<DenseLayer>(layers.back())) {
        throw ConfigError("final layer must be Dense (logit layer)");
    }
    for (std::size_t i = 0; i < layers.size(); ++i) {
        if (const auto* act = std::get_if<ActivationLayer>(&layers[i])) {
            if (act->alpha_pos <= 0.0 || act->alpha_neg < 0.0) {
                throw ConfigError("invalid activation slopes at layer " + std::to_string(i));
            }
            if (i == 0 || !is_weighted(layers[i - 1])) {
                throw ConfigError("activation at layer " + std::to_string(i) +
                                  " must directly follow a weighted layer");
            }
        }
    }
    // Shape composition check via a dry run on zeros.
    forward(*this, Tensor::zeros(input_shape));
}

Tensor forward(const AnnNetwork& net, const Tensor& input, ActivationRecord* record,
               std::vector<Tensor>* activations) {
    const std::size_t n_weighted = net.weighted_layer_count();
    if (record) {
        record->max_output.resize(n_weighted, 0.0);
        record->max_weight.resize(n_weighted, 0.0);
    }
    if (activations) activations->assign(n_weighted, Tensor());

    Tensor x = input;
    std::size_t w_idx = 0;  // index of the weighted layer most recently applied
    auto note_output = [&](const Tensor& z) {
        if (record) record->max_output[w_idx - 1] = std::max(record->max_output[w_idx - 1], max_abs(z));
        if (activations) (*activations)[w_idx - 1] = z;
    };

    for (const auto& layer : net.layers) {
        if (const auto* dense = std::get_if<DenseLayer>(&layer)) {
            x = matvec(dense->weights, x, dense->bias);
            ++w_idx;
            if (record) {
                record->max_weight[w_idx - 1] =
                    std::max(record->max_weight[w_idx - 1], max_abs(dense->weights));
            }
            note_output(x);
        } else if (const auto* conv = std::get_if<ConvLayer>(&layer)) {
            x = conv2d(x, conv->kernels, conv->bias, conv->stride, conv->padding);
            ++w_idx;
            if (record) {
                record->max_weight[w_idx - 1] =
                    std::max(record->max_weight[w_idx - 1], max_abs(conv->kernels));
            }
            note_output(x);
        } else if (const auto* pool = std::get_if<AvgPoolLayer>(&layer)) {
            x = avg_pool2d(x, pool->window, pool->stride);
        } else {
            const auto& act = std::get<ActivationLayer>(layer);
            x = apply_activation(x, act);
            note_output(x);  // z of the preceding weighted layer is post-activation
        }
    }
    return x;
}

ActivationRecord record_dataset_stats(const AnnNetwork& net, const LabeledDataset& dataset) {
    if (dataset.size() == 0) throw ConfigError("record_dataset_stats: empty dataset");
    ActivationRecord record;
    for (const auto& input : dataset.inputs) {
        forward(net, input, &record);
    }
    return record;
}

double softmax_cross_entropy(const Tensor& logits, int label) {
    double max_logit = logits[0];
    for (double v : logits.raw()) max_logit = std::max(max_logit, v);
    double sum = 0.0;
    for (double v : logits.raw()) sum += std::exp(v - max_logit);
    return std::log(sum) - (logits[static_cast<std::size_t>(label)] - max_logit);
}

double dataset_loss(const AnnNetwork& net, const LabeledDataset& dataset) {
    double total = 0.0;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        total += softmax_cross_entropy(forward(net, dataset.inputs[i]), dataset.labels[i]);
    }
    return total / static_cast<double>(dataset.size());
}

double dataset_accuracy(const AnnNetwork& net, const LabeledDataset& dataset) {
    std::size_t correct = 0;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        Tensor logits = forward(net, dataset.inputs[i]);
        std::size_t best = 0;
        for (std::size_t j = 1; j < logits.size(); ++j) {
            if (logits[j] > logits[best]) best = j;
        }
        if (static_cast<int>(best) == dataset.labels[i]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(dataset.size());
}

namespace {

// One backpropagation pass for a single sample. Caches every layer input on the
// way forward, then walks the layers in reverse accumulating parameter grads.
struct BackpropPass {
    const AnnNetwork& net;
    std::vector<Tensor> layer_inputs;

    Tensor run_forward(const Tensor& input) {
        layer_inputs.clear();
        Tensor x = input;
        for (const auto& layer : net.layers) {
            layer_inputs.push_back(x);
            if (const auto* dense = std::get_if<DenseLayer>(&layer)) {
                x = matvec(dense->weights, x, dense->bias);
            } else if (const auto* conv = std::get_if<ConvLayer>(&layer)) {
                x = conv2d(x, conv->kernels, conv->bias, conv->stride, conv->padding);
            } else if (const auto* pool = std::get_if<AvgPoolLayer>(&layer)) {
                x = avg_pool2d(x, pool->window, pool->stride);
            } else {
                x = apply_activation(x, std::get<ActivationLayer>(layer));
            }
        }
        return x;
    }

    // grad_out holds dL/d(logits); grads[i] holds {dW, db} for layer i.
    void run_backward(Tensor grad_out, std::vector<std::pair<Tensor, Tensor>>& grads) {
        for (std::size_t i = net.layers.size(); i-- > 0;) {
            const auto& layer = net.layers[i];
            const Tensor& x = layer_inputs[i];
            if (const auto* dense = std::get_if<DenseLayer>(&layer)) {
                const std::size_t out_dim = dense->weights.shape()[0];
                const std::size_t in_dim = dense->weights.shape()[1];
                Tensor dx = Tensor::zeros(x.shape());
                Eigen::Map<const RowMajorMatrix> W(dense->weights.data(),
                                                   static_cast<Eigen::Index>(out_dim),
                                                   static_cast<Eigen::Index>(in_dim));
                Eigen::Map<const Eigen::VectorXd> dy(grad_out.data(),
                                                     static_cast<Eigen::Index>(out_dim));
                Eigen::Map<const Eigen::VectorXd> xv(x.data(), static_cast<Eigen::Index>(in_dim));
                Eigen::Map<RowMajorMatrix> dW(grads[i].first.data(),
                                              static_cast<Eigen::Index>(out_dim),
                                              static_cast<Eigen::Index>(in_dim));
                Eigen::Map<Eigen::VectorXd> dxv(dx.data(), static_cast<Eigen::Index>(in_dim));
                dW.noalias() += dy * xv.transpose();
                if (!grads[i].second.empty()) {
                    Eigen::Map<Eigen::VectorXd> db(grads[i].second.data(),
                                                   static_cast<Eigen::Index>(out_dim));
                    db += dy;
                }
                dxv.noalias() = W.transpose() * dy;
                grad_out = std::move(dx);
            } else if (const auto* conv = std::get_if<ConvLayer>(&layer)) {
                grad_out = conv_backward(*conv, x, grad_out, grads[i]);
            } else if (const auto* pool = std::get_if<AvgPoolLayer>(&layer)) {
                grad_out = pool_backward(*pool, x, grad_out);
            } else {
                const auto& act = std::get<ActivationLayer>(layer);
                Tensor dx = Tensor::zeros(x.shape());
                for (std::size_t j = 0; j < x.size(); ++j) {
                    dx[j] = grad_out[j] * (x[j] > 0.0 ? act.alpha_pos : act.alpha_neg);
                }
                grad_out = std::move(dx);
            }
        }
    }

    static Tensor conv_backward(const ConvLayer& conv, const Tensor& x, const Tensor& dy,
                                std::pair<Tensor, Tensor>& grad) {
        const std::size_t C = x.shape()[0], H = x.shape()[1], W = x.shape()[2];
        const std::size_t F = conv.kernels.shape()[0];
        const std::size_t kh = conv.kernels.shape()[2], kw = conv.kernels.shape()[3];
        const std::size_t out_h = dy.shape()[1], out_w = dy.shape()[2];
        Tensor dx = Tensor::zeros(x.shape());
        for (std::size_t f = 0; f < F; ++f) {
            for (std::size_t oy = 0; oy < out_h; ++oy) {
                for (std::size_t ox = 0; ox < out_w; ++ox) {
                    const double g = dy.at3(f, oy, ox, out_h, out_w);
                    if (!grad.second.empty()) grad.second[f] += g;
                    for (std::size_t c = 0; c < C; ++c) {
                        for (std::size_t ky = 0; ky < kh; ++ky) {
                            const std::ptrdiff_t iy =
                                static_cast<std::ptrdiff_t>(oy * conv.stride + ky) -
                                static_cast<std::ptrdiff_t>(conv.padding);
                            if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(H)) continue;
                            for (std::size_t kx = 0; kx < kw; ++kx) {
                                const std::ptrdiff_t ix =
                                    static_cast<std::ptrdiff_t>(ox * conv.stride + kx) -
                                    static_cast<std::ptrdiff_t>(conv.padding);
                                if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(W)) continue;
                                const std::size_t kidx = ((f * C + c) * kh + ky) * kw + kx;
                                grad.first[kidx] +=
                                    g * x.at3(c, static_cast<std::size_t>(iy),
                                              static_cast<std::size_t>(ix), H, W);
                                dx.at3(c, static_cast<std::size_t>(iy),
                                       static_cast<std::size_t>(ix), H, W) +=
                                    g * conv.kernels[kidx];
                            }
                        }
                    }
                }
            }
        }
        return dx;
    }

    static Tensor pool_backward(const AvgPoolLayer& pool, const Tensor& x, const Tensor& dy) {
        const std::size_t C = x.shape()[0], H = x.shape()[1], W = x.shape()[2];
        const std::size_t out_h = dy.shape()[1], out_w = dy.shape()[2];
        const double inv_area = 1.0 / static_cast<double>(pool.window * pool.window);
        Tensor dx = Tensor::zeros(x.shape());
        for (std::size_t c = 0; c < C; ++c) {
            for (std::size_t oy = 0; oy < out_h; ++oy) {
                for (std::size_t ox = 0; ox < out_w; ++ox) {
                    const double g = dy.at3(c, oy, ox, out_h, out_w) * inv_area;
                    for (std::size_t ky = 0; ky < pool.window; ++ky) {
                        for (std::size_t kx = 0; kx < pool.window; ++kx) {
                            dx.at3(c, oy * pool.stride + ky, ox * pool.stride + kx, H, W) += g;
                        }
                    }
                }
            }
        }
        return dx;
    }
};

void apply_sgd_update(AnnNetwork& net, const std::vector<std::pair<Tensor, Tensor>>& grads,
                      double lr, bool zero_bias) {
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        Tensor* weights = nullptr;
        Tensor* bias = nullptr;
        if (auto* dense = std::get_if<DenseLayer>(&net.layers[i])) {
            weights = &dense->weights;
            bias = &dense->bias;
        } else if (auto* conv = std::get_if<ConvLayer>(&net.layers[i])) {
            weights = &conv->kernels;
            bias = &conv->bias;
        } else {
            continue;
        }
        for (std::size_t j = 0; j < weights->size(); ++j) {
            (*weights)[j] -= lr * grads[i].first[j];
        }
        if (!zero_bias && !bias->empty()) {
            for (std::size_t j = 0; j < bias->size(); ++j) {
                (*bias)[j] -= lr * grads[i].second[j];
            }
        }
    }
}

}  // namespace

AnnNetwork train(AnnNetwork net, const LabeledDataset& dataset, const TrainConfig& config) {
    if (dataset.size() == 0) throw ConfigError("train: empty dataset");
    std::mt19937_64 rng(config.seed);
    std::vector<std::size_t> order(dataset.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    BackpropPass pass{net, {}};
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        // Fisher-Yates with our own draws so shuffles are platform independent.
        for (std::size_t i = order.size(); i-- > 1;) {
            std::size_t j = static_cast<std::size_t>(rng() % (i + 1));
            std::swap(order[i], order[j]);
        }
        double epoch_loss = 0.0;
        for (std::size_t s : order) {
            Tensor logits = pass.run_forward(dataset.inputs[s]);
            epoch_loss += softmax_cross_entropy(logits, dataset.labels[s]);

            // dL/dlogits = softmax(logits) - onehot(label)
            double max_logit = logits[0];
            for (double v : logits.raw()) max_logit = std::max(max_logit, v);
            double sum = 0.0;
            for (double v : logits.raw()) sum += std::exp(v - max_logit);
            Tensor grad_out = Tensor::zeros(logits.shape());
            for (std::size_t j = 0; j < logits.size(); ++j) {
                grad_out[j] = std::exp(logits[j] - max_logit) / sum;
            }
            grad_out[static_cast<std::size_t>(dataset.labels[s])] -= 1.0;

            std::vector<std::pair<Tensor, Tensor>> grads(net.layers.size());
            for (std::size_t i = 0; i < net.layers.size(); ++i) {
                if (const auto* dense = std::get_if<DenseLayer>(&net.layers[i])) {
                    grads[i].first = Tensor::zeros(dense->weights.shape());
                    if (!dense->bias.empty()) grads[i].second = Tensor::zeros(dense->bias.shape());
                } else if (const auto* conv = std::get_if<ConvLayer>(&net.layers[i])) {
                    grads[i].first = Tensor::zeros(conv->kernels.shape());
                    if (!conv->bias.empty()) grads[i].second = Tensor::zeros(conv->bias.shape());
                }
            }
            pass.run_backward(std::move(grad_out), grads);
            apply_sgd_update(net, grads, config.lr, config.zero_bias);
        }
        if (!std::isfinite(epoch_loss)) {
            throw NumericError("training diverged at epoch " + std::to_string(epoch));
        }
    }
    return net;
}

AnnNetwork init_mlp(const std::vector<std::size_t>& layer_sizes, double alpha_pos,
                    double alpha_neg, std::uint64_t seed, bool zero_bias) {
    if (layer_sizes.size() < 2) throw ConfigError("init_mlp needs at least input and output sizes");
    std::mt19937_64 rng(seed);
    AnnNetwork net;
    for (std::size_t i = 0; i + 1 < layer_sizes.size(); ++i) {
        const std::size_t fan_in = layer_sizes[i];
        const std::size_t fan_out = layer_sizes[i + 1];
        const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        Tensor weights = Tensor::zeros({fan_out, fan_in});
        for (std::size_t j = 0; j < weights.size(); ++j) {
            weights[j] = (2.0 * next_unit(rng) - 1.0) * limit;
        }
        Tensor bias = zero_bias ? Tensor() : Tensor::zeros({fan_out});
        net.layers.push_back(DenseLayer{std::move(weights), std::move(bias)});
        if (i + 2 < layer_sizes.size()) {
            net.layers.push_back(ActivationLayer{alpha_pos, alpha_neg});
        }
    }
    return net;
}

}  // namespace spikemap
