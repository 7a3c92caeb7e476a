#ifndef GREDP_EXPERIMENT_HPP
#define GREDP_EXPERIMENT_HPP

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "gredp/config.hpp"
#include "gredp/dataset.hpp"
#include "gredp/training.hpp"

namespace gredp {

struct ExperimentConfig {
    std::string experiment_id = "exp";
    std::string model = "mlp";
    std::string dataset = "synthetic";  // "synthetic" or a directory of IDX files
    std::size_t train_limit = 0;        // 0 = whole train split
    std::size_t val_limit = 0;

    std::size_t synth_dims = 16;
    std::size_t synth_classes = 2;
    std::size_t synth_count = 400;

    MechanismKind mechanism = MechanismKind::gredp();
    double epsilon = 1.0;
    double delta = 1e-5;
    double clip = 1.0;
    double sigma = -1.0;  // < 0: calibrate from (epsilon, delta)
    std::size_t batch = 500;
    double lr = 0.01;
    std::size_t epochs = 1;
    std::uint64_t seed = 1;
    std::size_t trials = 1;
    NoiseGranularity granularity = NoiseGranularity::kPerSample;
    std::string out;

    // Calibrated noise multiplier actually used for training.
    double effective_sigma() const;
    void validate() const;
};

// Fill an ExperimentConfig from a flat key=value map; unknown keys are
// rejected so typos cannot silently fall back to defaults.
ExperimentConfig experiment_from_config(const ConfigMap& kv);

struct ResultRow {
    std::string experiment_id;
    std::uint64_t seed = 0;
    std::string mechanism;
    double epsilon = 0.0;  // spent budget at this row's step
    double delta = 0.0;
    double clip = 0.0;
    double sigma = 0.0;
    std::size_t batch = 0;
    double lr = 0.0;
    std::size_t epoch = 0;
    std::string metric;
    double value = 0.0;
};

void write_csv_header(std::ostream& os, bool with_timestamp = true);
void write_csv_row(std::ostream& os, const ResultRow& row);

// Loads the configured dataset as (train, validation).
std::pair<Dataset, Dataset> load_experiment_data(const ExperimentConfig& cfg);

// Trains `trials` models (seeds base, base+1, ...) and appends one row per
// (seed, epoch, metric), flushing after every epoch group.
std::vector<ResultRow> run_experiment(const ExperimentConfig& cfg, std::ostream& csv);

// ---- Statistical verification ----

struct VerifyOptions {
    std::size_t trials = 1000000;  // pipeline invocations for the length-8 checks
    double tolerance = 0.02;       // relative to the population target
    std::uint64_t seed = 42;
    // Test hook: scales pipeline outputs before variance estimation, which
    // is what a mis-normalized transform would do. 1.0 in normal use.
    double pipeline_output_scale = 1.0;
};

struct VerifyCheck {
    std::string name;
    double target = 0.0;
    double empirical = 0.0;
    double tolerance = 0.0;
    bool pass = false;
};

std::vector<VerifyCheck> verify_theorems(const VerifyOptions& opts);

// One line per check: "<name> target=<x> empirical=<y> tol=<t> PASS|FAIL".
void write_verify_report(std::ostream& os, const std::vector<VerifyCheck>& checks);

}  // namespace gredp

#endif  // GREDP_EXPERIMENT_HPP
