#include "gredp/experiment.hpp"

#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <ostream>
#include <stdexcept>

#include "gredp/accountant.hpp"

namespace gredp {

namespace {

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

std::string fmt_short(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

double parse_double(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(value, &pos);
        if (pos != value.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw std::invalid_argument("config key '" + key + "': cannot parse number '" + value + "'");
    }
}

std::uint64_t parse_uint(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        const unsigned long long v = std::stoull(value, &pos);
        if (pos != value.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw std::invalid_argument("config key '" + key + "': cannot parse integer '" + value + "'");
    }
}

}  // namespace

double ExperimentConfig::effective_sigma() const {
    return sigma >= 0.0 ? sigma : calibrate_sigma(epsilon, delta);
}

void ExperimentConfig::validate() const {
    if (trials < 1) throw std::invalid_argument("ExperimentConfig: trials must be >= 1");
    mechanism.validate();
    if (sigma < 0.0) {
        // Budget must be valid when sigma is derived from it.
        if (!(epsilon > 0.0)) throw std::invalid_argument("ExperimentConfig: epsilon must be > 0");
        if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("ExperimentConfig: delta must lie in (0, 1)");
    }
    if (!(clip > 0.0)) throw std::invalid_argument("ExperimentConfig: clip must be > 0");
    if (dataset != "synthetic" && !std::filesystem::exists(dataset)) {
        throw std::invalid_argument("ExperimentConfig: dataset path does not exist: " + dataset);
    }
}

ExperimentConfig experiment_from_config(const ConfigMap& kv) {
    ExperimentConfig cfg;
    std::string mechanism_name = "gredp";
    double rho = 0.5;
    for (const auto& [key, value] : kv) {
        if (key == "experiment") cfg.experiment_id = value;
        else if (key == "model") cfg.model = value;
        else if (key == "dataset") cfg.dataset = value;
        else if (key == "train_limit") cfg.train_limit = parse_uint(key, value);
        else if (key == "val_limit") cfg.val_limit = parse_uint(key, value);
        else if (key == "synth_dims") cfg.synth_dims = parse_uint(key, value);
        else if (key == "synth_classes") cfg.synth_classes = parse_uint(key, value);
        else if (key == "synth_count") cfg.synth_count = parse_uint(key, value);
        else if (key == "mechanism") mechanism_name = value;
        else if (key == "rho") rho = parse_double(key, value);
        else if (key == "epsilon") cfg.epsilon = parse_double(key, value);
        else if (key == "delta") cfg.delta = parse_double(key, value);
        else if (key == "clip") cfg.clip = parse_double(key, value);
        else if (key == "sigma") cfg.sigma = parse_double(key, value);
        else if (key == "batch") cfg.batch = parse_uint(key, value);
        else if (key == "lr") cfg.lr = parse_double(key, value);
        else if (key == "epochs") cfg.epochs = parse_uint(key, value);
        else if (key == "seed") cfg.seed = parse_uint(key, value);
        else if (key == "trials") cfg.trials = parse_uint(key, value);
        else if (key == "noise_granularity") cfg.granularity = parse_granularity(value);
        else if (key == "out") cfg.out = value;
        else throw std::invalid_argument("unknown config key '" + key + "'");
    }
    cfg.mechanism = parse_mechanism(mechanism_name, rho);
    return cfg;
}

void write_csv_header(std::ostream& os, bool with_timestamp) {
    if (with_timestamp) {
        const std::time_t now = std::time(nullptr);
        char stamp[32];
        std::strftime(stamp, sizeof(stamp), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
        os << "# generated " << stamp << "\n";
    }
    os << "experiment,seed,mechanism,epsilon,delta,clip,sigma,batch,lr,epoch,metric,value\n";
}

void write_csv_row(std::ostream& os, const ResultRow& row) {
    os << row.experiment_id << ',' << row.seed << ',' << row.mechanism << ',' << fmt_double(row.epsilon)
       << ',' << fmt_double(row.delta) << ',' << fmt_double(row.clip) << ',' << fmt_double(row.sigma)
       << ',' << row.batch << ',' << fmt_double(row.lr) << ',' << row.epoch << ',' << row.metric << ','
       << fmt_double(row.value) << "\n";
}

std::pair<Dataset, Dataset> load_experiment_data(const ExperimentConfig& cfg) {
    Dataset train, val;
    if (cfg.dataset == "synthetic") {
        SyntheticSpec spec;
        spec.dims = cfg.synth_dims;
        spec.classes = cfg.synth_classes;
        spec.count = cfg.synth_count;
        spec.seed = cfg.seed;
        const Dataset full = gen_synthetic(spec);
        auto split = split_dataset(full, full.size() * 3 / 4);
        train = std::move(split.first);
        val = std::move(split.second);
    } else {
        const std::filesystem::path dir(cfg.dataset);
        train = load_mnist_idx((dir / "train-images-idx3-ubyte").string(),
                               (dir / "train-labels-idx1-ubyte").string());
        const auto test_images = dir / "t10k-images-idx3-ubyte";
        if (std::filesystem::exists(test_images)) {
            val = load_mnist_idx(test_images.string(), (dir / "t10k-labels-idx1-ubyte").string());
        } else {
            auto split = split_dataset(train, train.size() * 5 / 6);
            train = std::move(split.first);
            val = std::move(split.second);
        }
    }
    train = take_prefix(train, cfg.train_limit);
    val = take_prefix(val, cfg.val_limit);
    return {std::move(train), std::move(val)};
}

std::vector<ResultRow> run_experiment(const ExperimentConfig& cfg, std::ostream& csv) {
    cfg.validate();
    auto [train_set, val_set] = load_experiment_data(cfg);
    const double sigma = cfg.effective_sigma();

    std::vector<ResultRow> rows;
    for (std::size_t trial = 0; trial < cfg.trials; ++trial) {
        const std::uint64_t trial_seed = cfg.seed + trial;
        const Tensor3& sample = train_set.inputs.front();
        Model model = build_model(cfg.model, sample.channels, sample.height, sample.width, train_set.classes);
        model.init_params(trial_seed);

        TrainingConfig tc;
        tc.batch_size = cfg.batch;
        tc.epochs = cfg.epochs;
        tc.learning_rate = cfg.lr;
        tc.noise = NoiseSpec(cfg.clip, sigma);
        tc.mechanism = cfg.mechanism;
        tc.granularity = cfg.granularity;
        tc.seed = trial_seed;
        tc.delta = cfg.delta;

        const MetricsLog log = train(model, train_set, val_set, tc);
        for (const EpochRecord& rec : log) {
            ResultRow base;
            base.experiment_id = cfg.experiment_id;
            base.seed = trial_seed;
            base.mechanism = cfg.mechanism.name();
            base.epsilon = rec.epsilon_spent;
            base.delta = cfg.delta;
            base.clip = cfg.clip;
            base.sigma = sigma;
            base.batch = cfg.batch;
            base.lr = cfg.lr;
            base.epoch = rec.epoch;

            ResultRow loss_row = base;
            loss_row.metric = "train_loss";
            loss_row.value = rec.train_loss;
            write_csv_row(csv, loss_row);
            rows.push_back(loss_row);

            ResultRow acc_row = base;
            acc_row.metric = "val_acc";
            acc_row.value = rec.val_acc;
            write_csv_row(csv, acc_row);
            rows.push_back(acc_row);

            csv.flush();
        }
    }
    return rows;
}

namespace {

struct VarianceAccumulator {
    double sum = 0.0;
    double sumsq = 0.0;
    std::size_t n = 0;

    void add(double x) {
        sum += x;
        sumsq += x * x;
        ++n;
    }
    double variance() const {
        if (n == 0) return 0.0;
        const double mean = sum / static_cast<double>(n);
        return sumsq / static_cast<double>(n) - mean * mean;
    }
};

VerifyCheck make_check(std::string name, double target, double empirical, double tol) {
    VerifyCheck c;
    c.name = std::move(name);
    c.target = target;
    c.empirical = empirical;
    c.tolerance = tol;
    c.pass = std::abs(empirical - target) <= tol * target;
    return c;
}

double gredp_pipeline_variance(std::size_t n, const NoiseSpec& spec, std::size_t trials,
                               double out_scale, RngState& rng) {
    const RealVec zeros(n, 0.0);
    VarianceAccumulator acc;
    for (std::size_t t = 0; t < trials; ++t) {
        const RealVec out = fre(zeros, spec, rng);
        for (double x : out) acc.add(out_scale * x);
    }
    return acc.variance();
}

}  // namespace

std::vector<VerifyCheck> verify_theorems(const VerifyOptions& opts) {
    if (opts.trials == 0) throw std::invalid_argument("verify_theorems: trials must be >= 1");
    std::vector<VerifyCheck> checks;
    RngState rng(opts.seed);
    const double scale = opts.pipeline_output_scale;
    const NoiseSpec unit(1.0, 1.0);

    // Theorem 1: the gradient-preserving pipeline halves the per-coordinate
    // noise variance relative to time-domain perturbation.
    const double gredp_var = gredp_pipeline_variance(8, unit, opts.trials, scale, rng);
    checks.push_back(make_check("theorem1-gredp", 0.5, gredp_var, opts.tolerance));

    {
        const RealVec zeros(8, 0.0);
        VarianceAccumulator acc;
        for (std::size_t t = 0; t < opts.trials; ++t) {
            const RealVec out = dpsgd_perturb(zeros, unit, rng);
            for (double x : out) acc.add(scale * x);
        }
        checks.push_back(make_check("theorem1-dpsgd", 1.0, acc.variance(), opts.tolerance));
        checks.push_back(make_check("theorem1-ratio", 0.5, gredp_var / acc.variance(), 2.0 * opts.tolerance));
    }

    // Theorem 2: the (a, b) noise split does not move the output variance.
    // Length 128 keeps the DC/Nyquist coordinates (where an uneven split
    // does not average to 1/2) from dominating the pooled estimate.
    const std::pair<double, double> splits[] = {
        {1.0, 0.0}, {0.0, 1.0}, {0.6, 0.8}, {std::sqrt(0.5), std::sqrt(0.5)}};
    const std::size_t split_trials = std::max<std::size_t>(opts.trials / 8, 1);
    for (const auto& [a, b] : splits) {
        const double var =
            gredp_pipeline_variance(128, unit.with_split(a, b), split_trials, scale, rng);
        checks.push_back(make_check("theorem2-split-" + fmt_short(a) + "-" + fmt_short(b), 0.5, var,
                                    opts.tolerance));
    }

    // Corollary 1: 2D pipeline on an 8x8 zero matrix.
    {
        const RealMat zeros(8, 8);
        const std::size_t trials_2d = std::max<std::size_t>(opts.trials / 10, 1);
        VarianceAccumulator acc;
        for (std::size_t t = 0; t < trials_2d; ++t) {
            const RealMat out = fre2d(zeros, unit, rng);
            for (double x : out.data) acc.add(scale * x);
        }
        checks.push_back(make_check("corollary1-2d", 0.5, acc.variance(), opts.tolerance));
    }

    // Filtering baseline noise level: retaining K of N coefficients leaves
    // (K/N) of the pipeline's variance.
    {
        const RealVec zeros(8, 0.0);
        VarianceAccumulator acc;
        for (std::size_t t = 0; t < opts.trials; ++t) {
            const RealVec out = spectraldp_perturb(zeros, unit, 0.5, rng);
            for (double x : out) acc.add(scale * x);
        }
        checks.push_back(make_check("spectraldp-rho0.5", 0.25, acc.variance(), opts.tolerance));
    }

    return checks;
}

void write_verify_report(std::ostream& os, const std::vector<VerifyCheck>& checks) {
    for (const VerifyCheck& c : checks) {
        os << c.name << " target=" << fmt_short(c.target) << " empirical=" << fmt_short(c.empirical)
           << " tol=" << fmt_short(c.tolerance) << ' ' << (c.pass ? "PASS" : "FAIL") << "\n";
    }
}

}  // namespace gredp
