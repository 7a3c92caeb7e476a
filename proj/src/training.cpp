#include "gredp/training.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "gredp/accountant.hpp"

namespace gredp {

NoiseGranularity parse_granularity(const std::string& name) {
    if (name == "per-sample") return NoiseGranularity::kPerSample;
    if (name == "per-batch") return NoiseGranularity::kPerBatch;
    throw std::invalid_argument("unknown noise granularity '" + name + "' (expected per-sample|per-batch)");
}

void TrainingConfig::validate(std::size_t dataset_size) const {
    if (batch_size == 0) throw std::invalid_argument("TrainingConfig: batch_size must be >= 1");
    if (batch_size > dataset_size) {
        throw std::invalid_argument("TrainingConfig: batch_size " + std::to_string(batch_size) +
                                    " exceeds dataset size " + std::to_string(dataset_size));
    }
    if (!(learning_rate > 0.0)) throw std::invalid_argument("TrainingConfig: learning_rate must be > 0");
    noise.validate();
    mechanism.validate();
}

EpochSchedule::EpochSchedule(std::size_t dataset_size, std::size_t batch_size, RngState rng)
    : batch_size_(batch_size), cursor_(0), order_(dataset_size), rng_(rng) {
    if (dataset_size == 0) throw std::invalid_argument("EpochSchedule: empty dataset");
    if (batch_size == 0 || batch_size > dataset_size) {
        throw std::invalid_argument("EpochSchedule: batch size must lie in [1, dataset size]");
    }
    for (std::size_t i = 0; i < dataset_size; ++i) order_[i] = i;
    reshuffle();
}

void EpochSchedule::reshuffle() {
    for (std::size_t i = order_.size(); i > 1; --i) {
        const std::size_t j = std::min(static_cast<std::size_t>(rng_.uniform() * static_cast<double>(i)), i - 1);
        std::swap(order_[i - 1], order_[j]);
    }
    cursor_ = 0;
}

std::vector<std::size_t> EpochSchedule::next_indices() {
    if (cursor_ + batch_size_ > order_.size()) reshuffle();
    std::vector<std::size_t> out(order_.begin() + static_cast<std::ptrdiff_t>(cursor_),
                                 order_.begin() + static_cast<std::ptrdiff_t>(cursor_ + batch_size_));
    cursor_ += batch_size_;
    return out;
}

Batch sample_batch(const Dataset& dataset, std::size_t batch_size, RngState& rng) {
    if (dataset.size() == 0) throw std::invalid_argument("sample_batch: empty dataset");
    EpochSchedule schedule(dataset.size(), batch_size, rng);
    Batch batch;
    for (std::size_t idx : schedule.next_indices()) {
        batch.inputs.push_back(dataset.inputs[idx]);
        batch.labels.push_back(dataset.labels[idx]);
    }
    return batch;
}

namespace {

std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

std::size_t spectral_keep(const MechanismKind& mech, std::size_t n) {
    if (mech.variant == MechanismKind::Variant::kSpectralDp) {
        return static_cast<std::size_t>(std::ceil(mech.rho * static_cast<double>(n)));
    }
    return n;
}

}  // namespace

RealVec aggregate_layer_gradients(const std::vector<RealVec>& per_sample_grads,
                                  const NoiseSpec& noise, const MechanismKind& mech,
                                  NoiseGranularity granularity, RngState& rng,
                                  std::size_t* noise_events) {
    if (per_sample_grads.empty()) throw std::invalid_argument("aggregate_layer_gradients: no gradients");
    mech.validate();
    if (mech.variant == MechanismKind::Variant::kDpsgd) {
        return aggregate_layer_gradients_time(per_sample_grads, noise, granularity, rng, noise_events);
    }

    const std::size_t len = per_sample_grads.front().size();
    // Flattened layer gradients are zero-padded to a power of two so the
    // per-sample transforms in the hot loop take the radix-2 path. The
    // transform is unitary and the padding carries no signal, so clipping
    // and the per-coordinate noise statistics are unchanged.
    const std::size_t padded = next_pow2(len);
    const std::size_t keep = spectral_keep(mech, padded);

    ComplexVec spectrum_sum(padded, Complex{0.0, 0.0});
    ComplexVec padded_g(padded);
    for (const RealVec& g : per_sample_grads) {
        if (g.size() != len) throw std::invalid_argument("aggregate_layer_gradients: ragged gradients");
        std::fill(padded_g.begin(), padded_g.end(), Complex{0.0, 0.0});
        for (std::size_t i = 0; i < len; ++i) padded_g[i] = Complex{g[i], 0.0};
        ComplexVec spectrum = clip(fft1d(padded_g), noise.clip_bound);
        if (granularity == NoiseGranularity::kPerSample) {
            const ComplexVec tau = sample_complex_noise(padded, noise, rng);
            for (std::size_t i = 0; i < padded; ++i) spectrum[i] += tau[i];
            if (noise_events) ++*noise_events;
        }
        for (std::size_t i = 0; i < padded; ++i) spectrum_sum[i] += spectrum[i];
    }
    if (granularity == NoiseGranularity::kPerBatch) {
        const ComplexVec tau = sample_complex_noise(padded, noise, rng);
        for (std::size_t i = 0; i < padded; ++i) spectrum_sum[i] += tau[i];
        if (noise_events) ++*noise_events;
    }
    for (std::size_t i = keep; i < padded; ++i) spectrum_sum[i] = Complex{0.0, 0.0};

    // One inverse transform and one real-part selection on the sum.
    const RealVec summed = real_part(ifft1d(spectrum_sum));
    return RealVec(summed.begin(), summed.begin() + static_cast<std::ptrdiff_t>(len));
}

RealVec aggregate_layer_gradients_time(const std::vector<RealVec>& per_sample_grads,
                                       const NoiseSpec& noise, NoiseGranularity granularity,
                                       RngState& rng, std::size_t* noise_events) {
    if (per_sample_grads.empty()) throw std::invalid_argument("aggregate_layer_gradients_time: no gradients");
    const std::size_t len = per_sample_grads.front().size();
    RealVec sum(len, 0.0);
    const double noise_std = noise.clip_bound * noise.sigma;
    for (const RealVec& g : per_sample_grads) {
        if (g.size() != len) throw std::invalid_argument("aggregate_layer_gradients_time: ragged gradients");
        RealVec clipped = clip(g, noise.clip_bound);
        if (granularity == NoiseGranularity::kPerSample) {
            for (auto& x : clipped) x += noise_std * rng.gaussian();
            if (noise_events) ++*noise_events;
        }
        for (std::size_t i = 0; i < len; ++i) sum[i] += clipped[i];
    }
    if (granularity == NoiseGranularity::kPerBatch) {
        for (auto& x : sum) x += noise_std * rng.gaussian();
        if (noise_events) ++*noise_events;
    }
    return sum;
}

StepStats dp_step(Model& model, const Batch& batch, const TrainingConfig& cfg, RngState& rng) {
    if (batch.size() == 0) throw std::invalid_argument("dp_step: empty batch");
    if (batch.inputs.size() != batch.labels.size()) throw std::invalid_argument("dp_step: ragged batch");

    const std::size_t num_layers = model.layers.size();
    std::vector<std::vector<RealVec>> weight_grads(num_layers), bias_grads(num_layers);
    StepStats stats;

    ForwardCache cache;
    for (std::size_t s = 0; s < batch.size(); ++s) {
        const RealVec logits = model.forward(batch.inputs[s], &cache);
        const LossResult loss = cross_entropy_loss(logits, batch.labels[s]);
        if (!std::isfinite(loss.loss)) {
            throw std::runtime_error("dp_step: non-finite loss at batch sample " + std::to_string(s) +
                                     " (step " + std::to_string(model.step) + ")");
        }
        stats.mean_loss += loss.loss;
        PerSampleGrads grads = model.backward(cache, loss.logit_grad);
        for (std::size_t l = 0; l < num_layers; ++l) {
            if (grads[l].weights.empty()) continue;
            weight_grads[l].push_back(std::move(grads[l].weights));
            bias_grads[l].push_back(std::move(grads[l].bias));
        }
    }
    stats.mean_loss /= static_cast<double>(batch.size());

    PerSampleGrads update(num_layers);
    for (std::size_t l = 0; l < num_layers; ++l) {
        if (weight_grads[l].empty()) continue;
        update[l].weights = aggregate_layer_gradients(weight_grads[l], cfg.noise, cfg.mechanism,
                                                      cfg.granularity, rng, &stats.noise_events);
        // Biases stay in the time domain: clip plus real Gaussian.
        update[l].bias = aggregate_layer_gradients_time(bias_grads[l], cfg.noise, cfg.granularity,
                                                        rng, &stats.noise_events);
    }
    model.apply_update(update, cfg.learning_rate / static_cast<double>(batch.size()));
    return stats;
}

double evaluate_accuracy(const Model& model, const Dataset& dataset) {
    if (dataset.size() == 0) return 0.0;
    std::size_t correct = 0;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        const RealVec logits = model.forward(dataset.inputs[i]);
        const std::size_t pred =
            static_cast<std::size_t>(std::max_element(logits.begin(), logits.end()) - logits.begin());
        if (pred == dataset.labels[i]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(dataset.size());
}

MetricsLog train(Model& model, const Dataset& train_set, const Dataset& val_set,
                 const TrainingConfig& cfg) {
    cfg.validate(train_set.size());
    MetricsLog log;
    const std::size_t steps_per_epoch = train_set.size() / cfg.batch_size;
    if (cfg.epochs == 0 || steps_per_epoch == 0) return log;

    RngState base(cfg.seed);
    EpochSchedule schedule(train_set.size(), cfg.batch_size, base.derive(1));
    RngState noise_rng = base.derive(2);
    const std::vector<double> alpha_grid = default_alpha_grid();

    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        double epoch_loss = 0.0;
        for (std::size_t s = 0; s < steps_per_epoch; ++s) {
            Batch batch;
            for (std::size_t idx : schedule.next_indices()) {
                batch.inputs.push_back(train_set.inputs[idx]);
                batch.labels.push_back(train_set.labels[idx]);
            }
            epoch_loss += dp_step(model, batch, cfg, noise_rng).mean_loss;
        }
        EpochRecord rec;
        rec.step = model.step;
        rec.epoch = epoch;
        rec.train_loss = epoch_loss / static_cast<double>(steps_per_epoch);
        rec.val_acc = evaluate_accuracy(model, val_set);
        rec.epsilon_spent = cfg.noise.sigma > 0.0
                                ? spent_epsilon(cfg.noise.sigma, model.step, cfg.delta, alpha_grid)
                                : 0.0;
        log.push_back(rec);
    }
    return log;
}

}  // namespace gredp
