#include <doctest.h>

#include <random>

#include "gredp/layers.hpp"
#include "oracles.hpp"

using namespace gredp;

namespace {

const NoiseSpec kNoiseless(1e9, 0.0);

RealVec spectral_conv_grad_noiseless(const Tensor3& up, const Tensor3& x, const ConvLayerSpec& spec) {
    RngState rng(0);
    return conv2d_weight_grad_spectral(up, x, spec, kNoiseless, MechanismKind::gredp(), rng);
}

}  // namespace

TEST_CASE("conv2d_forward: 1x1 unit kernel is the identity") {
    std::mt19937 gen(21);
    const Tensor3 x = oracles::random_tensor(gen, 1, 4, 5);
    const ConvLayerSpec spec{1, 1, 1, 4, 5};
    const Tensor3 out = conv2d_forward(x, RealVec{1.0}, spec);
    for (std::size_t i = 0; i < x.data.size(); ++i) CHECK(out.data[i] == x.data[i]);
}

TEST_CASE("conv2d_forward: all-ones 3x3 input with all-ones 2x2 kernel") {
    Tensor3 x(1, 3, 3);
    for (auto& v : x.data) v = 1.0;
    const ConvLayerSpec spec{1, 1, 2, 3, 3};
    const Tensor3 out = conv2d_forward(x, RealVec(4, 1.0), spec);
    REQUIRE(out.height == 2);
    REQUIRE(out.width == 2);
    for (double v : out.data) CHECK(v == doctest::Approx(4.0));
}

TEST_CASE("conv2d_forward matches the quadruple-loop oracle") {
    std::mt19937 gen(22);
    const ConvLayerSpec spec{2, 3, 3, 8, 8};
    const Tensor3 x = oracles::random_tensor(gen, 2, 8, 8);
    const RealVec k = oracles::random_real_vec(gen, spec.weight_count());
    const Tensor3 lib = conv2d_forward(x, k, spec);
    const Tensor3 ref = oracles::conv_forward(x, k, spec);
    CHECK(oracles::rel_error(lib.data, ref.data) < 1e-9);
}

TEST_CASE("conv2d_forward rejects shape mismatches naming both shapes") {
    const ConvLayerSpec spec{1, 1, 3, 8, 8};
    const Tensor3 wrong(1, 6, 8);
    CHECK_THROWS_WITH_AS(conv2d_forward(wrong, RealVec(9, 0.0), spec), doctest::Contains("expected 1x8x8"),
                         std::invalid_argument);
    CHECK_THROWS_AS((ConvLayerSpec{1, 1, 9, 8, 8}.validate()), std::invalid_argument);
}

TEST_CASE("conv2d_weight_grad_spectral: zero upstream gives zero gradients") {
    std::mt19937 gen(23);
    const ConvLayerSpec spec{1, 2, 3, 6, 6};
    const Tensor3 x = oracles::random_tensor(gen, 1, 6, 6);
    const Tensor3 up(2, spec.out_height(), spec.out_width());
    const RealVec grad = spectral_conv_grad_noiseless(up, x, spec);
    for (double g : grad) CHECK(std::abs(g) < 1e-12);
}

TEST_CASE("conv2d_weight_grad_spectral: hand case matches the sliding-window sum") {
    std::mt19937 gen(24);
    const ConvLayerSpec spec{1, 1, 2, 3, 3};
    const Tensor3 x = oracles::random_tensor(gen, 1, 3, 3);
    Tensor3 up(1, 2, 2);
    for (auto& v : up.data) v = 1.0;
    const RealVec grad = spectral_conv_grad_noiseless(up, x, spec);
    const RealVec ref = oracles::conv_weight_grad(up, x, spec);
    CHECK(oracles::rel_error(grad, ref) < 1e-6);
}

TEST_CASE("conv2d_weight_grad_spectral matches brute force over random shapes") {
    std::mt19937 gen(25);
    std::uniform_int_distribution<std::size_t> chan(1, 3), size(5, 10), kern(0, 1);
    for (int it = 0; it < 25; ++it) {
        const std::size_t d = kern(gen) == 0 ? 3 : 5;
        const std::size_t h = std::max(size(gen), d), w = std::max(size(gen), d);
        const ConvLayerSpec spec{chan(gen), chan(gen), d, h, w};
        const Tensor3 x = oracles::random_tensor(gen, spec.in_channels, h, w);
        const Tensor3 up = oracles::random_tensor(gen, spec.out_channels, spec.out_height(), spec.out_width());
        CAPTURE(spec.in_channels);
        CAPTURE(spec.out_channels);
        CAPTURE(d);
        CAPTURE(h);
        CAPTURE(w);
        const RealVec grad = spectral_conv_grad_noiseless(up, x, spec);
        const RealVec ref = oracles::conv_weight_grad(up, x, spec);
        CHECK(oracles::rel_error(grad, ref) < 1e-6);
    }
}

TEST_CASE("conv2d_weight_grad_spectral matches finite differences of a quadratic loss") {
    std::mt19937 gen(26);
    // Shapes from the three-kernel 3x3 convolution rows of the architecture tables.
    const ConvLayerSpec spec{3, 2, 3, 7, 7};
    const Tensor3 x = oracles::random_tensor(gen, 3, 7, 7);
    RealVec weights = oracles::random_real_vec(gen, spec.weight_count());

    // L = 0.5 * |conv(x, w)|^2, so dL/d(out) = out.
    auto loss = [&](const RealVec& w) {
        const Tensor3 out = oracles::conv_forward(x, w, spec);
        double acc = 0.0;
        for (double v : out.data) acc += 0.5 * v * v;
        return acc;
    };
    const Tensor3 upstream = oracles::conv_forward(x, weights, spec);
    const RealVec analytic = spectral_conv_grad_noiseless(upstream, x, spec);
    const RealVec fd = oracles::finite_difference(loss, weights, 1e-5);
    CHECK(oracles::rel_error(analytic, fd) < 1e-4);
}

TEST_CASE("conv2d time-domain backward agrees with the spectral path and the oracle") {
    std::mt19937 gen(27);
    const ConvLayerSpec spec{2, 2, 3, 9, 8};
    const Tensor3 x = oracles::random_tensor(gen, 2, 9, 8);
    const Tensor3 up = oracles::random_tensor(gen, 2, spec.out_height(), spec.out_width());
    const RealVec direct = conv2d_weight_grad(up, x, spec);
    CHECK(oracles::rel_error(direct, oracles::conv_weight_grad(up, x, spec)) < 1e-12);
    CHECK(oracles::rel_error(spectral_conv_grad_noiseless(up, x, spec), direct) < 1e-6);
}

TEST_CASE("conv2d_input_grad matches finite differences") {
    std::mt19937 gen(28);
    const ConvLayerSpec spec{2, 2, 3, 6, 6};
    const RealVec weights = oracles::random_real_vec(gen, spec.weight_count());
    Tensor3 x = oracles::random_tensor(gen, 2, 6, 6);

    auto loss = [&](const RealVec& flat_x) {
        Tensor3 xt(2, 6, 6);
        xt.data = flat_x;
        const Tensor3 out = oracles::conv_forward(xt, weights, spec);
        double acc = 0.0;
        for (double v : out.data) acc += 0.5 * v * v;
        return acc;
    };
    const Tensor3 upstream = oracles::conv_forward(x, weights, spec);
    const Tensor3 analytic = conv2d_input_grad(upstream, weights, spec);
    const RealVec fd = oracles::finite_difference(loss, x.data, 1e-5);
    CHECK(oracles::rel_error(analytic.data, fd) < 1e-4);
}

TEST_CASE("circfc_forward: identity blocks sum the input segments") {
    const CirculantFCSpec spec{4, 8, 4};
    RealVec w(spec.weight_count(), 0.0);
    w[spec.weight_index(0, 0, 0)] = 1.0;
    w[spec.weight_index(0, 1, 0)] = 1.0;
    const RealVec x{1.0, 2.0, 3.0, 4.0, 10.0, 20.0, 30.0, 40.0};
    const RealVec out = circfc_forward(x, w, spec);
    CHECK(out[0] == doctest::Approx(11.0).epsilon(1e-12));
    CHECK(out[1] == doctest::Approx(22.0).epsilon(1e-12));
    CHECK(out[2] == doctest::Approx(33.0).epsilon(1e-12));
    CHECK(out[3] == doctest::Approx(44.0).epsilon(1e-12));
}

TEST_CASE("circfc_forward: 2x2 circulant by hand") {
    const CirculantFCSpec spec{2, 2, 2};
    const double a = 0.7, b = -1.3, x1 = 2.0, x2 = 0.5;
    const RealVec out = circfc_forward(RealVec{x1, x2}, RealVec{a, b}, spec);
    CHECK(out[0] == doctest::Approx(a * x1 + b * x2).epsilon(1e-12));
    CHECK(out[1] == doctest::Approx(b * x1 + a * x2).epsilon(1e-12));
}

TEST_CASE("circfc_forward equals the materialized dense circulant matmul") {
    std::mt19937 gen(29);
    const CirculantFCSpec spec{8, 12, 4};  // p=2, q=3, d=4
    const RealVec w = oracles::random_real_vec(gen, spec.weight_count());
    const RealVec x = oracles::random_real_vec(gen, 12);
    const RealVec lib = circfc_forward(x, w, spec);
    const RealVec ref = oracles::dense_matvec(oracles::dense_circulant(w, spec), x);
    CHECK(oracles::rel_error(lib, ref) < 1e-9);
}

TEST_CASE("circfc faithfulness holds across block shapes") {
    std::mt19937 gen(30);
    const std::size_t cases[][3] = {{2, 2, 2}, {6, 9, 3}, {10, 15, 5}, {24, 12, 12}, {7, 7, 7}};
    for (const auto& c : cases) {
        const CirculantFCSpec spec{c[0], c[1], c[2]};
        CAPTURE(c[0]);
        CAPTURE(c[1]);
        CAPTURE(c[2]);
        const RealVec w = oracles::random_real_vec(gen, spec.weight_count());
        const RealVec x = oracles::random_real_vec(gen, spec.in_dim);
        const RealVec lib = circfc_forward(x, w, spec);
        const RealVec ref = oracles::dense_matvec(oracles::dense_circulant(w, spec), x);
        CHECK(oracles::rel_error(lib, ref) < 1e-9);
    }
}

TEST_CASE("circfc rejects block sizes that do not divide the dims") {
    CHECK_THROWS_AS((CirculantFCSpec{10, 8, 3}.validate()), std::invalid_argument);
}

TEST_CASE("circfc_weight_grad_spectral: zero upstream gives zero gradients") {
    std::mt19937 gen(31);
    const CirculantFCSpec spec{4, 6, 2};
    const RealVec x = oracles::random_real_vec(gen, 6);
    RngState rng(0);
    const RealVec grad = circfc_weight_grad_spectral(RealVec(4, 0.0), x, spec, kNoiseless,
                                                     MechanismKind::gredp(), rng);
    for (double g : grad) CHECK(std::abs(g) < 1e-12);
}

TEST_CASE("circfc_weight_grad_spectral: d=2 single block matches the symbolic gradient") {
    const CirculantFCSpec spec{2, 2, 2};
    const double x1 = 1.7, x2 = -0.4, u1 = 0.3, u2 = 0.9;
    RngState rng(0);
    const RealVec grad =
        circfc_weight_grad_spectral(RealVec{u1, u2}, RealVec{x1, x2}, spec, kNoiseless,
                                    MechanismKind::gredp(), rng);
    // o = (a x1 + b x2, b x1 + a x2), so dL/da = u1 x1 + u2 x2 and dL/db = u1 x2 + u2 x1.
    CHECK(grad[0] == doctest::Approx(u1 * x1 + u2 * x2).epsilon(1e-12));
    CHECK(grad[1] == doctest::Approx(u1 * x2 + u2 * x1).epsilon(1e-12));
}

TEST_CASE("circfc_weight_grad_spectral matches finite differences") {
    std::mt19937 gen(32);
    const CirculantFCSpec spec{8, 8, 4};  // p=2, q=2, d=4
    const RealVec x = oracles::random_real_vec(gen, 8);
    RealVec w = oracles::random_real_vec(gen, spec.weight_count());

    auto loss = [&](const RealVec& weights) {
        const RealVec out = oracles::dense_matvec(oracles::dense_circulant(weights, spec), x);
        double acc = 0.0;
        for (double v : out) acc += 0.5 * v * v;
        return acc;
    };
    const RealVec upstream = oracles::dense_matvec(oracles::dense_circulant(w, spec), x);
    RngState rng(0);
    const RealVec analytic =
        circfc_weight_grad_spectral(upstream, x, spec, kNoiseless, MechanismKind::gredp(), rng);
    const RealVec fd = oracles::finite_difference(loss, w, 1e-5);
    CHECK(oracles::rel_error(analytic, fd) < 1e-4);
}

TEST_CASE("circfc time-domain weight/input gradients agree with finite differences") {
    std::mt19937 gen(33);
    const CirculantFCSpec spec{6, 9, 3};
    RealVec w = oracles::random_real_vec(gen, spec.weight_count());
    RealVec x = oracles::random_real_vec(gen, 9);
    const RealVec upstream = circfc_forward(x, w, spec);

    auto loss_w = [&](const RealVec& weights) {
        const RealVec out = circfc_forward(x, weights, spec);
        double acc = 0.0;
        for (double v : out) acc += 0.5 * v * v;
        return acc;
    };
    CHECK(oracles::rel_error(circfc_weight_grad(upstream, x, spec),
                             oracles::finite_difference(loss_w, w, 1e-5)) < 1e-4);

    auto loss_x = [&](const RealVec& input) {
        const RealVec out = circfc_forward(input, w, spec);
        double acc = 0.0;
        for (double v : out) acc += 0.5 * v * v;
        return acc;
    };
    CHECK(oracles::rel_error(circfc_input_grad(upstream, w, spec),
                             oracles::finite_difference(loss_x, x, 1e-5)) < 1e-4);
}

TEST_CASE("relu and its backward") {
    const RealVec out = relu(RealVec{-1.0, 2.0});
    CHECK(out[0] == 0.0);
    CHECK(out[1] == 2.0);
    const RealVec back = relu_backward(RealVec{5.0, 7.0}, RealVec{-1.0, 2.0});
    CHECK(back[0] == 0.0);
    CHECK(back[1] == 7.0);
}

TEST_CASE("max_pool2d reduces [[1,2],[3,4]] to [[4]] and routes the gradient") {
    Tensor3 x(1, 2, 2);
    x.data = {1.0, 2.0, 3.0, 4.0};
    std::vector<std::size_t> argmax;
    const Tensor3 out = max_pool2d(x, 2, &argmax);
    REQUIRE(out.size() == 1);
    CHECK(out.data[0] == 4.0);
    Tensor3 up(1, 1, 1);
    up.data = {10.0};
    const Tensor3 back = max_pool2d_backward(up, x, 2, argmax);
    CHECK(back.data[0] == 0.0);
    CHECK(back.data[3] == 10.0);
}

TEST_CASE("avg_pool2d averages and spreads the gradient uniformly") {
    Tensor3 x(1, 2, 2);
    x.data = {1.0, 2.0, 3.0, 4.0};
    const Tensor3 out = avg_pool2d(x, 2);
    CHECK(out.data[0] == doctest::Approx(2.5));
    Tensor3 up(1, 1, 1);
    up.data = {8.0};
    const Tensor3 back = avg_pool2d_backward(up, x, 2);
    for (double v : back.data) CHECK(v == doctest::Approx(2.0));
}

TEST_CASE("pooling drops ragged edges") {
    Tensor3 x(1, 5, 5);
    for (std::size_t i = 0; i < 25; ++i) x.data[i] = static_cast<double>(i);
    const Tensor3 out = max_pool2d(x, 2);
    CHECK(out.height == 2);
    CHECK(out.width == 2);
}

TEST_CASE("cross_entropy_loss gradient matches finite differences") {
    std::mt19937 gen(34);
    RealVec logits = oracles::random_real_vec(gen, 10, -2.0, 2.0);
    const std::size_t label = 3;
    auto loss = [&](const RealVec& z) { return cross_entropy_loss(z, label).loss; };
    const LossResult res = cross_entropy_loss(logits, label);
    CHECK(res.loss > 0.0);
    CHECK(oracles::rel_error(res.logit_grad, oracles::finite_difference(loss, logits, 1e-6)) < 1e-4);
}

TEST_CASE("cross_entropy_loss rejects out-of-range labels") {
    CHECK_THROWS_WITH_AS(cross_entropy_loss(RealVec{0.1, 0.2}, 2), doctest::Contains("out of range"),
                         std::invalid_argument);
}

TEST_CASE("spectral conv gradient with per-batch style noise draws changes with the mechanism") {
    // Exercises the DPSGD and filtered variants of the layer path.
    std::mt19937 gen(35);
    const ConvLayerSpec spec{1, 1, 2, 4, 4};
    const Tensor3 x = oracles::random_tensor(gen, 1, 4, 4);
    const Tensor3 up = oracles::random_tensor(gen, 1, 3, 3);
    const RealVec ref = oracles::conv_weight_grad(up, x, spec);

    RngState r1(5);
    const RealVec dpsgd_grad =
        conv2d_weight_grad_spectral(up, x, spec, kNoiseless, MechanismKind::dpsgd(), r1);
    CHECK(oracles::rel_error(dpsgd_grad, ref) < 1e-6);

    RngState r2(5);
    const RealVec filtered =
        conv2d_weight_grad_spectral(up, x, spec, kNoiseless, MechanismKind::spectral_dp(0.5), r2);
    CHECK(oracles::rel_error(filtered, ref) > 0.01);
}
