#ifndef GREDP_MODEL_HPP
#define GREDP_MODEL_HPP

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "gredp/layers.hpp"
#include "gredp/rng.hpp"

namespace gredp {

struct Conv2dLayer {
    ConvLayerSpec spec;
    RealVec weights;  // (oc, ic, u, v) flat
    RealVec bias;     // per output channel
};

struct CirculantFCLayer {
    CirculantFCSpec spec;
    RealVec weights;  // (i, j, t) flat block first-rows
    RealVec bias;     // per output unit
};

struct MaxPoolLayer {
    std::size_t kernel = 2;
};

struct AvgPoolLayer {
    std::size_t kernel = 2;
};

struct ReluLayer {};

// Collapses (c, h, w) into (c*h*w, 1, 1) ahead of the FC stack.
struct FlattenLayer {};

using LayerNode = std::variant<Conv2dLayer, CirculantFCLayer, MaxPoolLayer, AvgPoolLayer, ReluLayer, FlattenLayer>;

// Per-layer gradient of one sample. Parameter-free layers keep both
// vectors empty.
struct LayerGrads {
    RealVec weights;
    RealVec bias;
};

using PerSampleGrads = std::vector<LayerGrads>;

// Activations recorded by a forward pass, consumed by backward.
struct ForwardCache {
    std::vector<Tensor3> inputs;                       // input to each layer
    std::vector<std::vector<std::size_t>> pool_argmax;  // per layer (max pools only)
    RealVec logits;
};

// An ordered layer stack with a step counter; parameter shapes are fixed
// at construction.
class Model {
public:
    std::vector<LayerNode> layers;
    std::uint64_t step = 0;

    // Uniform init in [-1/sqrt(fan_in), +1/sqrt(fan_in)], biases zero.
    void init_params(std::uint64_t seed);

    RealVec forward(const Tensor3& x, ForwardCache* cache = nullptr) const;
    PerSampleGrads backward(const ForwardCache& cache, const RealVec& logit_grad) const;

    std::size_t param_count() const;
    // Shift every parameter by -lr * grad, grads laid out as PerSampleGrads.
    void apply_update(const PerSampleGrads& grads, double lr);
};

// Architectures used by the experiments, built for a given input shape.
Model build_lenet5(std::size_t in_channels, std::size_t in_h, std::size_t in_w, std::size_t classes);
Model build_resnet20_style(std::size_t in_channels, std::size_t in_h, std::size_t in_w, std::size_t classes);
Model build_model3(std::size_t in_channels, std::size_t in_h, std::size_t in_w, std::size_t classes);
Model build_alexnet_style(std::size_t in_channels, std::size_t in_h, std::size_t in_w, std::size_t classes);
Model build_circulant_mlp(std::size_t in_dim, std::size_t hidden, std::size_t classes);

Model build_model(const std::string& name, std::size_t in_channels, std::size_t in_h, std::size_t in_w,
                  std::size_t classes);

// Largest divisor of gcd(m, n) not exceeding 16; block size used when the
// tables leave it unstated.
std::size_t choose_block_size(std::size_t m, std::size_t n);

}  // namespace gredp

#endif  // GREDP_MODEL_HPP
