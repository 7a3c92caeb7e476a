#ifndef GREDP_LAYERS_HPP
#define GREDP_LAYERS_HPP

#include <cstddef>
#include <vector>

#include "gredp/mechanisms.hpp"
#include "gredp/spectral.hpp"

namespace gredp {

// Channel-major activation tensor: data[(c * height + y) * width + x].
struct Tensor3 {
    std::size_t channels = 0;
    std::size_t height = 0;
    std::size_t width = 0;
    RealVec data;

    Tensor3() = default;
    Tensor3(std::size_t c, std::size_t h, std::size_t w) : channels(c), height(h), width(w), data(c * h * w, 0.0) {}

    double& at(std::size_t c, std::size_t y, std::size_t x) { return data[(c * height + y) * width + x]; }
    double at(std::size_t c, std::size_t y, std::size_t x) const { return data[(c * height + y) * width + x]; }
    std::size_t size() const { return channels * height * width; }
};

// Valid (no padding), stride-1 convolution shapes.
struct ConvLayerSpec {
    std::size_t in_channels = 1;
    std::size_t out_channels = 1;
    std::size_t kernel_size = 1;
    std::size_t in_height = 1;
    std::size_t in_width = 1;

    std::size_t out_height() const { return in_height - kernel_size + 1; }
    std::size_t out_width() const { return in_width - kernel_size + 1; }
    std::size_t weight_count() const { return in_channels * out_channels * kernel_size * kernel_size; }
    // Flat index of kernel element (oc, ic, u, v).
    std::size_t weight_index(std::size_t oc, std::size_t ic, std::size_t u, std::size_t v) const {
        return ((oc * in_channels + ic) * kernel_size + u) * kernel_size + v;
    }
    void validate() const;
};

// Block-circulant fully-connected shapes: out_dim x in_dim matrix of
// d x d circulant blocks, each determined by its first row.
struct CirculantFCSpec {
    std::size_t out_dim = 1;   // m
    std::size_t in_dim = 1;    // n
    std::size_t block_size = 1;  // d, divides both m and n

    std::size_t block_rows() const { return out_dim / block_size; }  // p
    std::size_t block_cols() const { return in_dim / block_size; }   // q
    std::size_t weight_count() const { return block_rows() * block_cols() * block_size; }
    std::size_t weight_index(std::size_t i, std::size_t j, std::size_t t) const {
        return (i * block_cols() + j) * block_size + t;
    }
    void validate() const;
};

// ---- Convolution ----

// o[oc] = sum_ic x[ic] (*) k[oc][ic], valid, stride 1.
Tensor3 conv2d_forward(const Tensor3& x, const RealVec& kernels, const ConvLayerSpec& spec);

// Gradient of the loss w.r.t. the conv input, given upstream = dL/d(output).
Tensor3 conv2d_input_grad(const Tensor3& upstream, const RealVec& kernels, const ConvLayerSpec& spec);

// Time-domain weight gradient (the production backward path).
RealVec conv2d_weight_grad(const Tensor3& upstream, const Tensor3& x, const ConvLayerSpec& spec);

// Frequency-domain weight gradient with the perturbation mechanism applied
// per (oc, ic) kernel on the spectral product, then inverse transform, real
// part, crop to d x d. With sigma = 0 and mech = gredp this equals the
// time-domain gradient up to transform round-off.
RealVec conv2d_weight_grad_spectral(const Tensor3& upstream, const Tensor3& x,
                                    const ConvLayerSpec& spec, const NoiseSpec& noise,
                                    const MechanismKind& mech, RngState& rng);

// ---- Block-circulant fully connected ----

// o_i = sum_j circ(w_{i,j}) x_j, computed through length-d transforms with
// the per-block spectra accumulated in the frequency domain.
RealVec circfc_forward(const RealVec& x, const RealVec& weights, const CirculantFCSpec& spec);

RealVec circfc_input_grad(const RealVec& upstream, const RealVec& weights, const CirculantFCSpec& spec);

RealVec circfc_weight_grad(const RealVec& upstream, const RealVec& x, const CirculantFCSpec& spec);

// Frequency-domain weight gradient, mechanism applied per (i, j) block.
RealVec circfc_weight_grad_spectral(const RealVec& upstream, const RealVec& x,
                                    const CirculantFCSpec& spec, const NoiseSpec& noise,
                                    const MechanismKind& mech, RngState& rng);

// ---- Activations, pooling, loss ----

RealVec relu(const RealVec& x);
RealVec relu_backward(const RealVec& upstream, const RealVec& x);

// Pooling with stride = kernel size; ragged edges are dropped.
Tensor3 max_pool2d(const Tensor3& x, std::size_t k, std::vector<std::size_t>* argmax = nullptr);
Tensor3 max_pool2d_backward(const Tensor3& upstream, const Tensor3& x, std::size_t k,
                            const std::vector<std::size_t>& argmax);
Tensor3 avg_pool2d(const Tensor3& x, std::size_t k);
Tensor3 avg_pool2d_backward(const Tensor3& upstream, const Tensor3& x, std::size_t k);

// Softmax cross entropy over logits with an integer class label.
struct LossResult {
    double loss = 0.0;
    RealVec logit_grad;
};
LossResult cross_entropy_loss(const RealVec& logits, std::size_t label);

}  // namespace gredp

#endif  // GREDP_LAYERS_HPP
