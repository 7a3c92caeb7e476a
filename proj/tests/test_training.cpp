#include <doctest.h>

#include <algorithm>
#include <random>

#include "gredp/training.hpp"
#include "oracles.hpp"

using namespace gredp;

namespace {

RealVec conv_weights(const Model& m, std::size_t layer) {
    return std::get<Conv2dLayer>(m.layers[layer]).weights;
}

Dataset tiny_blobs(std::size_t count, std::uint64_t seed) {
    SyntheticSpec spec;
    spec.dims = 4;
    spec.classes = 2;
    spec.count = count;
    spec.seed = seed;
    return gen_synthetic(spec);
}

}  // namespace

TEST_CASE("sample_batch: B = N returns the whole dataset, shuffled") {
    const Dataset data = tiny_blobs(12, 1);
    RngState rng(9);
    const Batch batch = sample_batch(data, 12, rng);
    REQUIRE(batch.size() == 12);
    // Same multiset of labels.
    std::vector<std::size_t> got = batch.labels, want = data.labels;
    std::sort(got.begin(), got.end());
    std::sort(want.begin(), want.end());
    CHECK(got == want);
}

TEST_CASE("sample_batch: single-sample dataset") {
    const Dataset data = tiny_blobs(2, 2);
    Dataset one;
    one.classes = data.classes;
    one.inputs = {data.inputs[0]};
    one.labels = {data.labels[0]};
    RngState rng(1);
    const Batch batch = sample_batch(one, 1, rng);
    REQUIRE(batch.size() == 1);
    CHECK(batch.labels[0] == one.labels[0]);
}

TEST_CASE("sample_batch rejects an empty dataset") {
    Dataset empty;
    RngState rng(1);
    CHECK_THROWS_AS(sample_batch(empty, 1, rng), std::invalid_argument);
}

TEST_CASE("EpochSchedule: identical seed gives an identical index sequence") {
    RngState r1(77), r2(77);
    EpochSchedule a(100, 10, r1), b(100, 10, r2);
    for (int step = 0; step < 25; ++step) {
        CHECK(a.next_indices() == b.next_indices());
    }
}

TEST_CASE("EpochSchedule: an epoch covers every index exactly once") {
    RngState rng(3);
    EpochSchedule sched(40, 10, rng);
    std::vector<std::size_t> seen;
    for (int i = 0; i < 4; ++i) {
        const auto idx = sched.next_indices();
        seen.insert(seen.end(), idx.begin(), idx.end());
    }
    std::sort(seen.begin(), seen.end());
    for (std::size_t i = 0; i < 40; ++i) CHECK(seen[i] == i);
}

TEST_CASE("aggregation: per-sample inverse+real equals one inverse on the sum") {
    std::mt19937 gen(51);
    std::vector<RealVec> grads;
    for (int i = 0; i < 3; ++i) grads.push_back(oracles::random_real_vec(gen, 8));
    const NoiseSpec spec(100.0, 1.0);

    RngState lib_rng(123);
    const RealVec lib = aggregate_layer_gradients(grads, spec, MechanismKind::gredp(),
                                                  NoiseGranularity::kPerSample, lib_rng);

    // Manual route: transform, clip, noise, inverse, real per sample, then sum.
    RngState manual_rng(123);
    RealVec manual(8, 0.0);
    for (const RealVec& g : grads) {
        ComplexVec spectrum = clip(fft1d(to_complex(g)), spec.clip_bound);
        const ComplexVec tau = sample_complex_noise(8, spec, manual_rng);
        for (std::size_t k = 0; k < 8; ++k) spectrum[k] += tau[k];
        const RealVec part = real_part(ifft1d(spectrum));
        for (std::size_t k = 0; k < 8; ++k) manual[k] += part[k];
    }
    CHECK(oracles::rel_error(lib, manual) < 1e-9);
}

TEST_CASE("aggregation: summed per-sample noise has variance B/2 per coordinate") {
    const std::vector<RealVec> zeros(16, RealVec(8, 0.0));
    const NoiseSpec spec(1.0, 1.0);
    RngState rng(7);
    double sum = 0.0, sumsq = 0.0;
    std::size_t n = 0;
    for (int trial = 0; trial < 100000; ++trial) {
        const RealVec out = aggregate_layer_gradients(zeros, spec, MechanismKind::gredp(),
                                                      NoiseGranularity::kPerSample, rng);
        for (double x : out) {
            sum += x;
            sumsq += x * x;
            ++n;
        }
    }
    const double mean = sum / static_cast<double>(n);
    const double var = sumsq / static_cast<double>(n) - mean * mean;
    CHECK(var > 8.0 * 0.97);
    CHECK(var < 8.0 * 1.03);
}

TEST_CASE("dp_step with sigma 0 and B = 1 reproduces the plain SGD update") {
    const Dataset data = tiny_blobs(4, 11);
    Model noiseless = build_circulant_mlp(4, 8, 2);
    noiseless.init_params(21);
    Model reference = noiseless;

    Batch batch;
    batch.inputs = {data.inputs[0]};
    batch.labels = {data.labels[0]};

    TrainingConfig cfg;
    cfg.batch_size = 1;
    cfg.learning_rate = 0.1;
    cfg.noise = NoiseSpec(1e9, 0.0);
    cfg.mechanism = MechanismKind::gredp();
    RngState rng(1);
    dp_step(noiseless, batch, cfg, rng);

    // Plain SGD: backward then eta * grad, no clip, no transform.
    ForwardCache cache;
    const RealVec logits = reference.forward(batch.inputs[0], &cache);
    const LossResult loss = cross_entropy_loss(logits, batch.labels[0]);
    reference.apply_update(reference.backward(cache, loss.logit_grad), 0.1);

    const auto& a = std::get<CirculantFCLayer>(noiseless.layers[1]);
    const auto& b = std::get<CirculantFCLayer>(reference.layers[1]);
    CHECK(oracles::rel_error(a.weights, b.weights) < 1e-6);
    CHECK(oracles::rel_error(a.bias, b.bias) < 1e-6);
}

TEST_CASE("dp_step with sigma 0 applies the mean of per-sample clipped gradients") {
    const Dataset data = tiny_blobs(6, 12);
    Model model = build_circulant_mlp(4, 8, 2);
    model.init_params(31);
    Model before = model;

    Batch batch;
    for (std::size_t i = 0; i < 6; ++i) {
        batch.inputs.push_back(data.inputs[i]);
        batch.labels.push_back(data.labels[i]);
    }
    TrainingConfig cfg;
    cfg.batch_size = 6;
    cfg.learning_rate = 0.2;
    cfg.noise = NoiseSpec(0.05, 0.0);  // small bound, clipping active
    cfg.mechanism = MechanismKind::gredp();
    RngState rng(2);
    dp_step(model, batch, cfg, rng);

    // Naive loop oracle: clip each per-sample gradient in the time domain
    // (the transform is unitary, so the norms agree), average, step.
    Model oracle = before;
    std::vector<PerSampleGrads> per_sample;
    ForwardCache cache;
    for (std::size_t i = 0; i < 6; ++i) {
        const RealVec logits = oracle.forward(batch.inputs[i], &cache);
        per_sample.push_back(oracle.backward(cache, cross_entropy_loss(logits, batch.labels[i]).logit_grad));
    }
    PerSampleGrads mean(oracle.layers.size());
    for (std::size_t l = 0; l < oracle.layers.size(); ++l) {
        if (per_sample[0][l].weights.empty()) continue;
        mean[l].weights.assign(per_sample[0][l].weights.size(), 0.0);
        mean[l].bias.assign(per_sample[0][l].bias.size(), 0.0);
        for (const auto& g : per_sample) {
            const RealVec cw = clip(g[l].weights, 0.05);
            const RealVec cb = clip(g[l].bias, 0.05);
            for (std::size_t k = 0; k < cw.size(); ++k) mean[l].weights[k] += cw[k] / 6.0;
            for (std::size_t k = 0; k < cb.size(); ++k) mean[l].bias[k] += cb[k] / 6.0;
        }
    }
    oracle.apply_update(mean, 0.2);

    const auto& a = std::get<CirculantFCLayer>(model.layers[1]);
    const auto& b = std::get<CirculantFCLayer>(oracle.layers[1]);
    CHECK(oracles::rel_error(a.weights, b.weights) < 1e-9);
    const auto& a2 = std::get<CirculantFCLayer>(model.layers[3]);
    const auto& b2 = std::get<CirculantFCLayer>(oracle.layers[3]);
    CHECK(oracles::rel_error(a2.weights, b2.weights) < 1e-9);
}

TEST_CASE("per-batch DPSGD aggregation reduces to the hand-rolled reference step") {
    std::mt19937 gen(52);
    std::vector<RealVec> grads;
    for (int i = 0; i < 4; ++i) grads.push_back(oracles::random_real_vec(gen, 10));
    const NoiseSpec spec(0.5, 1.3);

    RngState lib_rng(55);
    const RealVec lib = aggregate_layer_gradients(grads, spec, MechanismKind::dpsgd(),
                                                  NoiseGranularity::kPerBatch, lib_rng);

    RngState ref_rng(55);
    RealVec ref(10, 0.0);
    for (const RealVec& g : grads) {
        const RealVec c = clip(g, 0.5);
        for (std::size_t k = 0; k < 10; ++k) ref[k] += c[k];
    }
    for (auto& x : ref) x += 0.5 * 1.3 * ref_rng.gaussian();

    REQUIRE(lib.size() == ref.size());
    for (std::size_t k = 0; k < 10; ++k) CHECK(lib[k] == ref[k]);
}

TEST_CASE("noise enters each parameter group exactly once per sample (per-sample) or once (per-batch)") {
    const Dataset data = tiny_blobs(8, 13);
    Model model = build_circulant_mlp(4, 8, 2);
    model.init_params(41);
    Batch batch;
    for (std::size_t i = 0; i < 8; ++i) {
        batch.inputs.push_back(data.inputs[i]);
        batch.labels.push_back(data.labels[i]);
    }
    TrainingConfig cfg;
    cfg.batch_size = 8;
    cfg.noise = NoiseSpec(1.0, 1.0);
    cfg.mechanism = MechanismKind::gredp();

    // Two parameter layers, each with a weight and a bias group.
    cfg.granularity = NoiseGranularity::kPerSample;
    RngState r1(1);
    CHECK(dp_step(model, batch, cfg, r1).noise_events == 8 * 2 * 2);

    cfg.granularity = NoiseGranularity::kPerBatch;
    RngState r2(1);
    CHECK(dp_step(model, batch, cfg, r2).noise_events == 2 * 2);
}

TEST_CASE("dp_step aborts on a non-finite loss with a diagnostic") {
    // A bare conv stack reaches the loss with a NaN weight intact (the
    // circulant layers would reject it earlier, inside the transform).
    Model model;
    Conv2dLayer conv;
    conv.spec = ConvLayerSpec{1, 3, 2, 2, 2};
    conv.weights.assign(conv.spec.weight_count(), 0.1);
    conv.weights[0] = std::numeric_limits<double>::quiet_NaN();
    conv.bias.assign(3, 0.0);
    model.layers.push_back(conv);

    Batch batch;
    batch.inputs.push_back(Tensor3(1, 2, 2));
    batch.inputs[0].data = {0.5, 0.25, -0.5, 1.0};
    batch.labels = {0};
    TrainingConfig cfg;
    cfg.batch_size = 1;
    cfg.noise = NoiseSpec(1.0, 0.0);
    RngState rng(1);
    CHECK_THROWS_WITH_AS(dp_step(model, batch, cfg, rng), doctest::Contains("non-finite loss"),
                         std::runtime_error);
}

TEST_CASE("per-sample isolation: one sample's input only changes its own gradients") {
    const Dataset data = tiny_blobs(3, 15);
    Model model = build_circulant_mlp(4, 8, 2);
    model.init_params(61);

    auto grads_for = [&](const Tensor3& x, std::size_t label) {
        ForwardCache cache;
        const RealVec logits = model.forward(x, &cache);
        return model.backward(cache, cross_entropy_loss(logits, label).logit_grad);
    };

    const PerSampleGrads g0 = grads_for(data.inputs[0], data.labels[0]);
    const PerSampleGrads g1 = grads_for(data.inputs[1], data.labels[1]);
    Tensor3 zeroed = data.inputs[2];
    std::fill(zeroed.data.begin(), zeroed.data.end(), 0.0);
    (void)grads_for(zeroed, data.labels[2]);
    // Recompute samples 0 and 1: identical bits.
    const PerSampleGrads g0b = grads_for(data.inputs[0], data.labels[0]);
    const PerSampleGrads g1b = grads_for(data.inputs[1], data.labels[1]);
    for (std::size_t l = 0; l < g0.size(); ++l) {
        CHECK(g0[l].weights == g0b[l].weights);
        CHECK(g1[l].weights == g1b[l].weights);
    }
}

TEST_CASE("train: zero epochs returns the initial model and an empty log") {
    const Dataset data = tiny_blobs(10, 16);
    Model model = build_circulant_mlp(4, 8, 2);
    model.init_params(71);
    const RealVec before = std::get<CirculantFCLayer>(model.layers[1]).weights;

    TrainingConfig cfg;
    cfg.batch_size = 5;
    cfg.epochs = 0;
    cfg.noise = NoiseSpec(1.0, 0.0);
    const MetricsLog log = train(model, data, data, cfg);
    CHECK(log.empty());
    CHECK(std::get<CirculantFCLayer>(model.layers[1]).weights == before);
}

TEST_CASE("train: noiseless mlp reaches 100% train accuracy on separable blobs") {
    SyntheticSpec spec;
    spec.dims = 8;
    spec.classes = 2;
    spec.count = 200;
    spec.seed = 17;
    const Dataset data = gen_synthetic(spec);

    Model model = build_circulant_mlp(8, 16, 2);
    model.init_params(81);
    TrainingConfig cfg;
    cfg.batch_size = 20;
    cfg.epochs = 5;
    cfg.learning_rate = 0.5;
    cfg.noise = NoiseSpec(1e9, 0.0);
    cfg.seed = 5;
    const MetricsLog log = train(model, data, data, cfg);
    REQUIRE(log.size() == 5);
    CHECK(log.back().val_acc == doctest::Approx(1.0));
    CHECK(log.back().epsilon_spent == 0.0);
    CHECK(log.back().step == 50);
}

TEST_CASE("train: identical seeds give bit-identical parameter trajectories") {
    const Dataset data = tiny_blobs(40, 18);
    TrainingConfig cfg;
    cfg.batch_size = 10;
    cfg.epochs = 3;
    cfg.noise = NoiseSpec(1.0, 1.5);
    cfg.mechanism = MechanismKind::gredp();
    cfg.seed = 99;

    Model a = build_circulant_mlp(4, 8, 2);
    a.init_params(99);
    Model b = a;
    const MetricsLog la = train(a, data, data, cfg);
    const MetricsLog lb = train(b, data, data, cfg);

    const auto& fa = std::get<CirculantFCLayer>(a.layers[1]);
    const auto& fb = std::get<CirculantFCLayer>(b.layers[1]);
    CHECK(fa.weights == fb.weights);
    CHECK(fa.bias == fb.bias);
    REQUIRE(la.size() == lb.size());
    for (std::size_t i = 0; i < la.size(); ++i) {
        CHECK(la[i].train_loss == lb[i].train_loss);
        CHECK(la[i].val_acc == lb[i].val_acc);
        CHECK(la[i].epsilon_spent == lb[i].epsilon_spent);
    }
}

TEST_CASE("train: spent epsilon is monotone across epochs") {
    const Dataset data = tiny_blobs(40, 19);
    TrainingConfig cfg;
    cfg.batch_size = 10;
    cfg.epochs = 4;
    cfg.noise = NoiseSpec(1.0, 2.0);
    cfg.seed = 7;
    Model model = build_circulant_mlp(4, 8, 2);
    model.init_params(7);
    const MetricsLog log = train(model, data, data, cfg);
    REQUIRE(log.size() == 4);
    for (std::size_t i = 1; i < log.size(); ++i) {
        CHECK(log[i].epsilon_spent > log[i - 1].epsilon_spent);
    }
}

TEST_CASE("training config validation") {
    TrainingConfig cfg;
    cfg.batch_size = 100;
    CHECK_THROWS_AS(cfg.validate(50), std::invalid_argument);
    cfg.batch_size = 10;
    cfg.learning_rate = 0.0;
    CHECK_THROWS_AS(cfg.validate(50), std::invalid_argument);
}

TEST_CASE("conv model trains one dp step end to end") {
    // Smoke: the whole per-sample pipeline on a small conv stack.
    std::mt19937 gen(53);
    Dataset data;
    data.classes = 3;
    for (int i = 0; i < 4; ++i) {
        data.inputs.push_back(oracles::random_tensor(gen, 1, 22, 22));
        data.labels.push_back(static_cast<std::size_t>(i % 3));
    }
    Model model = build_model3(1, 22, 22, 3);
    model.init_params(91);
    const RealVec before = conv_weights(model, 0);

    Batch batch;
    for (std::size_t i = 0; i < 4; ++i) {
        batch.inputs.push_back(data.inputs[i]);
        batch.labels.push_back(data.labels[i]);
    }
    TrainingConfig cfg;
    cfg.batch_size = 4;
    cfg.noise = NoiseSpec(1.0, 0.5);
    cfg.mechanism = MechanismKind::spectral_dp(0.5);
    RngState rng(3);
    const StepStats stats = dp_step(model, batch, cfg, rng);
    CHECK(std::isfinite(stats.mean_loss));
    CHECK(conv_weights(model, 0) != before);
}
