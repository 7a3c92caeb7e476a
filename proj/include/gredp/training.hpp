#ifndef GREDP_TRAINING_HPP
#define GREDP_TRAINING_HPP

#include <cstdint>
#include <vector>

#include "gredp/dataset.hpp"
#include "gredp/mechanisms.hpp"
#include "gredp/model.hpp"
#include "gredp/rng.hpp"

namespace gredp {

// Per-sample: noise is drawn for every sample's clipped gradient, the way
// the training loop prints it. Per-batch: one draw on the clipped sum, the
// DPSGD convention the baselines assume.
enum class NoiseGranularity { kPerSample, kPerBatch };

NoiseGranularity parse_granularity(const std::string& name);

struct TrainingConfig {
    std::size_t batch_size = 500;
    std::size_t epochs = 1;
    double learning_rate = 0.01;
    NoiseSpec noise;
    MechanismKind mechanism = MechanismKind::gredp();
    NoiseGranularity granularity = NoiseGranularity::kPerSample;
    std::uint64_t seed = 0;
    double delta = 1e-5;  // feeds the running accountant

    void validate(std::size_t dataset_size) const;
};

struct Batch {
    std::vector<Tensor3> inputs;
    std::vector<std::size_t> labels;

    std::size_t size() const { return inputs.size(); }
};

// Shuffled-epoch schedule: indices are reshuffled once per epoch and dealt
// out in batch-size chunks without replacement.
class EpochSchedule {
public:
    EpochSchedule(std::size_t dataset_size, std::size_t batch_size, RngState rng);

    std::vector<std::size_t> next_indices();
    std::size_t batches_per_epoch() const { return order_.size() / batch_size_; }

private:
    void reshuffle();

    std::size_t batch_size_;
    std::size_t cursor_;
    std::vector<std::size_t> order_;
    RngState rng_;
};

Batch sample_batch(const Dataset& dataset, std::size_t batch_size, RngState& rng);

// Clip-and-perturb aggregation of one layer's per-sample gradients,
// following the per-sample loop of the training algorithm: spectral
// mechanisms transform each flattened gradient (zero-padded to a power of
// two), clip it to c in the frequency domain, add split complex noise
// (per-sample granularity) or a single draw on the sum (per-batch), then
// apply one inverse transform and real-part selection to the sum. Returns
// the summed gradient; callers divide by the batch size. noise_events
// counts mechanism noise applications when non-null.
RealVec aggregate_layer_gradients(const std::vector<RealVec>& per_sample_grads,
                                  const NoiseSpec& noise, const MechanismKind& mech,
                                  NoiseGranularity granularity, RngState& rng,
                                  std::size_t* noise_events = nullptr);

// Time-domain clip + Gaussian aggregation (the bias path, and DPSGD).
RealVec aggregate_layer_gradients_time(const std::vector<RealVec>& per_sample_grads,
                                       const NoiseSpec& noise, NoiseGranularity granularity,
                                       RngState& rng, std::size_t* noise_events = nullptr);

struct StepStats {
    double mean_loss = 0.0;
    std::size_t noise_events = 0;
};

// One training step: per-sample gradients, per-layer clip + noise, batch
// aggregation, inverse transform + real-part selection, SGD update with
// step lr/B. Aborts with a diagnostic if a sample's loss is non-finite.
StepStats dp_step(Model& model, const Batch& batch, const TrainingConfig& cfg, RngState& rng);

struct EpochRecord {
    std::size_t step = 0;
    std::size_t epoch = 0;
    double train_loss = 0.0;
    double val_acc = 0.0;
    double epsilon_spent = 0.0;
};

using MetricsLog = std::vector<EpochRecord>;

double evaluate_accuracy(const Model& model, const Dataset& dataset);

// epochs * (N / batch) steps of the configured mechanism, logging one
// record per epoch.
MetricsLog train(Model& model, const Dataset& train_set, const Dataset& val_set,
                 const TrainingConfig& cfg);

}  // namespace gredp

#endif  // GREDP_TRAINING_HPP
