#include "gredp/model.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace gredp {

namespace {

Tensor3 as_flat(const Tensor3& t) {
    Tensor3 out(t.size(), 1, 1);
    out.data = t.data;
    return out;
}

RealVec uniform_init(std::size_t count, std::size_t fan_in, RngState& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    RealVec out(count);
    for (auto& w : out) w = (2.0 * rng.uniform() - 1.0) * bound;
    return out;
}

void check_pooled(std::size_t h, std::size_t w, const char* model) {
    if (h == 0 || w == 0) {
        throw std::invalid_argument(std::string(model) + ": input too small for the printed layer stack");
    }
}

}  // namespace

std::size_t choose_block_size(std::size_t m, std::size_t n) {
    const std::size_t g = std::gcd(m, n);
    for (std::size_t d = std::min<std::size_t>(g, 16); d >= 2; --d) {
        if (g % d == 0) return d;
    }
    return 1;
}

void Model::init_params(std::uint64_t seed) {
    RngState rng(seed);
    for (auto& node : layers) {
        if (auto* conv = std::get_if<Conv2dLayer>(&node)) {
            const std::size_t fan_in = conv->spec.in_channels * conv->spec.kernel_size * conv->spec.kernel_size;
            conv->weights = uniform_init(conv->spec.weight_count(), fan_in, rng);
            conv->bias.assign(conv->spec.out_channels, 0.0);
        } else if (auto* fc = std::get_if<CirculantFCLayer>(&node)) {
            fc->weights = uniform_init(fc->spec.weight_count(), fc->spec.in_dim, rng);
            fc->bias.assign(fc->spec.out_dim, 0.0);
        }
    }
    step = 0;
}

RealVec Model::forward(const Tensor3& x, ForwardCache* cache) const {
    Tensor3 cur = x;
    if (cache) {
        cache->inputs.clear();
        cache->pool_argmax.assign(layers.size(), {});
    }
    for (std::size_t i = 0; i < layers.size(); ++i) {
        if (cache) cache->inputs.push_back(cur);
        const LayerNode& node = layers[i];
        if (const auto* conv = std::get_if<Conv2dLayer>(&node)) {
            Tensor3 out = conv2d_forward(cur, conv->weights, conv->spec);
            for (std::size_t c = 0; c < out.channels; ++c) {
                for (std::size_t r = 0; r < out.height; ++r) {
                    for (std::size_t s = 0; s < out.width; ++s) out.at(c, r, s) += conv->bias[c];
                }
            }
            cur = std::move(out);
        } else if (const auto* fc = std::get_if<CirculantFCLayer>(&node)) {
            RealVec out = circfc_forward(cur.data, fc->weights, fc->spec);
            for (std::size_t u = 0; u < out.size(); ++u) out[u] += fc->bias[u];
            cur = Tensor3(out.size(), 1, 1);
            cur.data = std::move(out);
        } else if (const auto* pool = std::get_if<MaxPoolLayer>(&node)) {
            cur = max_pool2d(cur, pool->kernel, cache ? &cache->pool_argmax[i] : nullptr);
        } else if (const auto* pool = std::get_if<AvgPoolLayer>(&node)) {
            cur = avg_pool2d(cur, pool->kernel);
        } else if (std::holds_alternative<ReluLayer>(node)) {
            cur.data = relu(cur.data);
        } else {
            cur = as_flat(cur);
        }
    }
    if (cache) cache->logits = cur.data;
    return cur.data;
}

PerSampleGrads Model::backward(const ForwardCache& cache, const RealVec& logit_grad) const {
    if (cache.inputs.size() != layers.size()) {
        throw std::invalid_argument("Model::backward: cache does not match this model");
    }
    PerSampleGrads grads(layers.size());
    Tensor3 dcur(logit_grad.size(), 1, 1);
    dcur.data = logit_grad;
    for (std::size_t idx = layers.size(); idx-- > 0;) {
        const LayerNode& node = layers[idx];
        const Tensor3& input = cache.inputs[idx];
        if (const auto* conv = std::get_if<Conv2dLayer>(&node)) {
            grads[idx].weights = conv2d_weight_grad(dcur, input, conv->spec);
            grads[idx].bias.assign(conv->spec.out_channels, 0.0);
            for (std::size_t c = 0; c < dcur.channels; ++c) {
                double acc = 0.0;
                for (std::size_t r = 0; r < dcur.height; ++r) {
                    for (std::size_t s = 0; s < dcur.width; ++s) acc += dcur.at(c, r, s);
                }
                grads[idx].bias[c] = acc;
            }
            if (idx > 0) dcur = conv2d_input_grad(dcur, conv->weights, conv->spec);
        } else if (const auto* fc = std::get_if<CirculantFCLayer>(&node)) {
            grads[idx].weights = circfc_weight_grad(dcur.data, input.data, fc->spec);
            grads[idx].bias = dcur.data;
            if (idx > 0) {
                RealVec dx = circfc_input_grad(dcur.data, fc->weights, fc->spec);
                dcur = Tensor3(dx.size(), 1, 1);
                dcur.data = std::move(dx);
            }
        } else if (const auto* pool = std::get_if<MaxPoolLayer>(&node)) {
            dcur = max_pool2d_backward(dcur, input, pool->kernel, cache.pool_argmax[idx]);
        } else if (const auto* pool = std::get_if<AvgPoolLayer>(&node)) {
            dcur = avg_pool2d_backward(dcur, input, pool->kernel);
        } else if (std::holds_alternative<ReluLayer>(node)) {
            dcur.data = relu_backward(dcur.data, input.data);
        } else {
            Tensor3 reshaped(input.channels, input.height, input.width);
            reshaped.data = dcur.data;
            dcur = std::move(reshaped);
        }
    }
    return grads;
}

std::size_t Model::param_count() const {
    std::size_t n = 0;
    for (const auto& node : layers) {
        if (const auto* conv = std::get_if<Conv2dLayer>(&node)) {
            n += conv->spec.weight_count() + conv->spec.out_channels;
        } else if (const auto* fc = std::get_if<CirculantFCLayer>(&node)) {
            n += fc->spec.weight_count() + fc->spec.out_dim;
        }
    }
    return n;
}

void Model::apply_update(const PerSampleGrads& grads, double lr) {
    if (grads.size() != layers.size()) throw std::invalid_argument("apply_update: gradient layout mismatch");
    for (std::size_t i = 0; i < layers.size(); ++i) {
        if (auto* conv = std::get_if<Conv2dLayer>(&layers[i])) {
            for (std::size_t k = 0; k < conv->weights.size(); ++k) conv->weights[k] -= lr * grads[i].weights[k];
            for (std::size_t k = 0; k < conv->bias.size(); ++k) conv->bias[k] -= lr * grads[i].bias[k];
        } else if (auto* fc = std::get_if<CirculantFCLayer>(&layers[i])) {
            for (std::size_t k = 0; k < fc->weights.size(); ++k) fc->weights[k] -= lr * grads[i].weights[k];
            for (std::size_t k = 0; k < fc->bias.size(); ++k) fc->bias[k] -= lr * grads[i].bias[k];
        }
    }
    ++step;
}

namespace {

struct StackBuilder {
    Model model;
    std::size_t c, h, w;
    const char* name;

    StackBuilder(std::size_t c_, std::size_t h_, std::size_t w_, const char* name_)
        : c(c_), h(h_), w(w_), name(name_) {}

    void conv(std::size_t out_channels, std::size_t kernel) {
        ConvLayerSpec spec{c, out_channels, kernel, h, w};
        spec.validate();
        model.layers.push_back(Conv2dLayer{spec, {}, {}});
        c = out_channels;
        h = spec.out_height();
        w = spec.out_width();
    }
    void relu() { model.layers.push_back(ReluLayer{}); }
    void max_pool(std::size_t k) {
        model.layers.push_back(MaxPoolLayer{k});
        h /= k;
        w /= k;
        check_pooled(h, w, name);
    }
    void avg_pool(std::size_t k) {
        model.layers.push_back(AvgPoolLayer{k});
        h /= k;
        w /= k;
        check_pooled(h, w, name);
    }
    void flatten() {
        model.layers.push_back(FlattenLayer{});
        c = c * h * w;
        h = 1;
        w = 1;
    }
    void fc(std::size_t out_dim) {
        CirculantFCSpec spec{out_dim, c, choose_block_size(out_dim, c)};
        spec.validate();
        model.layers.push_back(CirculantFCLayer{spec, {}, {}});
        c = out_dim;
    }
};

}  // namespace

Model build_lenet5(std::size_t in_channels, std::size_t in_h, std::size_t in_w, std::size_t classes) {
    StackBuilder b(in_channels, in_h, in_w, "lenet5");
    b.conv(6, 5);
    b.relu();
    b.max_pool(2);
    b.conv(6, 5);
    b.relu();
    b.max_pool(2);
    b.flatten();
    b.fc(120);
    b.relu();
    b.fc(84);
    b.relu();
    b.fc(classes);
    return std::move(b.model);
}

Model build_resnet20_style(std::size_t in_channels, std::size_t in_h, std::size_t in_w, std::size_t classes) {
    StackBuilder b(in_channels, in_h, in_w, "resnet20");
    b.conv(7, 3);
    b.relu();
    b.avg_pool(2);
    b.conv(6, 3);
    b.relu();
    b.avg_pool(2);
    b.conv(6, 3);
    b.relu();
    b.avg_pool(2);
    b.flatten();
    b.fc(64);
    b.relu();
    b.fc(classes);
    return std::move(b.model);
}

Model build_model3(std::size_t in_channels, std::size_t in_h, std::size_t in_w, std::size_t classes) {
    StackBuilder b(in_channels, in_h, in_w, "model3");
    b.conv(2, 3);
    b.relu();
    b.max_pool(2);
    b.conv(2, 3);
    b.relu();
    b.max_pool(2);
    b.conv(2, 3);
    b.relu();
    b.max_pool(2);
    b.flatten();
    b.fc(120);
    b.relu();
    b.fc(classes);
    return std::move(b.model);
}

Model build_alexnet_style(std::size_t in_channels, std::size_t in_h, std::size_t in_w, std::size_t classes) {
    StackBuilder b(in_channels, in_h, in_w, "alexnet");
    for (int stage = 0; stage < 5; ++stage) {
        b.conv(1, 3);
        b.relu();
        b.max_pool(2);
    }
    b.flatten();
    b.fc(120);
    b.relu();
    b.fc(84);
    b.relu();
    b.fc(classes);
    return std::move(b.model);
}

Model build_circulant_mlp(std::size_t in_dim, std::size_t hidden, std::size_t classes) {
    StackBuilder b(in_dim, 1, 1, "mlp");
    b.flatten();
    b.fc(hidden);
    b.relu();
    b.fc(classes);
    return std::move(b.model);
}

Model build_model(const std::string& name, std::size_t in_channels, std::size_t in_h, std::size_t in_w,
                  std::size_t classes) {
    if (name == "lenet5") return build_lenet5(in_channels, in_h, in_w, classes);
    if (name == "resnet20") return build_resnet20_style(in_channels, in_h, in_w, classes);
    if (name == "model3") return build_model3(in_channels, in_h, in_w, classes);
    if (name == "alexnet") return build_alexnet_style(in_channels, in_h, in_w, classes);
    if (name == "mlp") return build_circulant_mlp(in_channels * in_h * in_w, 64, classes);
    throw std::invalid_argument("unknown model '" + name + "' (expected lenet5|resnet20|model3|alexnet|mlp)");
}

}  // namespace gredp
