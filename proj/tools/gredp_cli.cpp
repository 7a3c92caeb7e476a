// Command-line front end: train | sweep | verify | gen-data.

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gredp/accountant.hpp"
#include "gredp/config.hpp"
#include "gredp/dataset.hpp"
#include "gredp/experiment.hpp"

namespace {

std::vector<std::string> split_list(const std::string& csv) {
    std::vector<std::string> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

// Flags mirror config keys; a flag given on the command line overrides the
// file value.
struct KeyedFlags {
    std::map<std::string, std::string> values;

    void add(CLI::App* app, const std::string& flag, const std::string& key, const std::string& desc) {
        auto* opt = app->add_option_function<std::string>(
            flag, [this, key](const std::string& v) { values[key] = v; }, desc);
        opt->expected(1);
    }
};

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open output file: " + path);
    return out;
}

int run_train(const std::string& config_path, const KeyedFlags& flags) {
    gredp::ConfigMap kv;
    if (!config_path.empty()) kv = gredp::load_config_file(config_path);
    for (const auto& [k, v] : flags.values) kv[k] = v;
    gredp::ExperimentConfig cfg = gredp::experiment_from_config(kv);
    if (cfg.out.empty()) {
        gredp::write_csv_header(std::cout);
        gredp::run_experiment(cfg, std::cout);
    } else {
        std::ofstream out = open_out(cfg.out);
        gredp::write_csv_header(out);
        gredp::run_experiment(cfg, out);
        std::cerr << "wrote " << cfg.out << "\n";
    }
    return 0;
}

int run_sweep(const std::string& config_path, const KeyedFlags& flags, const std::string& mechanisms,
              const std::string& epsilons, const std::string& clips) {
    gredp::ConfigMap kv;
    if (!config_path.empty()) kv = gredp::load_config_file(config_path);
    for (const auto& [k, v] : flags.values) kv[k] = v;
    gredp::ExperimentConfig base = gredp::experiment_from_config(kv);

    std::ofstream file;
    std::ostream* out = &std::cout;
    if (!base.out.empty()) {
        file = open_out(base.out);
        out = &file;
    }
    gredp::write_csv_header(*out);
    for (const std::string& mech : split_list(mechanisms)) {
        for (const std::string& eps : split_list(epsilons)) {
            for (const std::string& clip : split_list(clips)) {
                gredp::ExperimentConfig cfg = base;
                cfg.mechanism = gredp::parse_mechanism(mech, cfg.mechanism.rho);
                cfg.epsilon = std::stod(eps);
                cfg.clip = std::stod(clip);
                cfg.experiment_id = base.experiment_id + "-" + cfg.mechanism.name() + "-eps" + eps + "-c" + clip;
                std::cerr << "running " << cfg.experiment_id << "\n";
                gredp::run_experiment(cfg, *out);
            }
        }
    }
    if (!base.out.empty()) std::cerr << "wrote " << base.out << "\n";
    return 0;
}

int run_verify(std::size_t trials, double tol, std::uint64_t seed, const std::string& out_path) {
    gredp::VerifyOptions opts;
    opts.trials = trials;
    opts.tolerance = tol;
    opts.seed = seed;
    const auto checks = gredp::verify_theorems(opts);
    gredp::write_verify_report(std::cout, checks);
    if (!out_path.empty()) {
        std::ofstream out = open_out(out_path);
        gredp::write_verify_report(out, checks);
    }
    for (const auto& c : checks) {
        if (!c.pass) return 1;
    }
    return 0;
}

int run_gen_data(std::size_t dims, std::size_t classes, std::size_t count, std::uint64_t seed,
                 const std::string& out_path) {
    gredp::SyntheticSpec spec;
    spec.dims = dims;
    spec.classes = classes;
    spec.count = count;
    spec.seed = seed;
    const gredp::Dataset ds = gredp::gen_synthetic(spec);

    std::ofstream file;
    std::ostream* out = &std::cout;
    if (!out_path.empty()) {
        file = open_out(out_path);
        out = &file;
    }
    for (std::size_t d = 0; d < dims; ++d) *out << 'x' << d << ',';
    *out << "label\n";
    for (std::size_t i = 0; i < ds.size(); ++i) {
        for (double v : ds.inputs[i].data) *out << v << ',';
        *out << ds.labels[i] << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Differentially private training with frequency-domain noise reduction"};
    app.require_subcommand(1);

    std::string config_path;
    KeyedFlags flags;

    auto add_experiment_flags = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "flat key=value config file");
        flags.add(cmd, "--experiment", "experiment", "experiment id prefix");
        flags.add(cmd, "--model", "model", "lenet5|resnet20|model3|alexnet|mlp");
        flags.add(cmd, "--dataset", "dataset", "'synthetic' or a directory of IDX files");
        flags.add(cmd, "--train-limit", "train_limit", "cap on training samples (0 = all)");
        flags.add(cmd, "--val-limit", "val_limit", "cap on validation samples (0 = all)");
        flags.add(cmd, "--synth-dims", "synth_dims", "synthetic feature dimension");
        flags.add(cmd, "--synth-classes", "synth_classes", "synthetic class count");
        flags.add(cmd, "--synth-count", "synth_count", "synthetic sample count");
        flags.add(cmd, "--mechanism", "mechanism", "dpsgd|spectral-dp|gredp");
        flags.add(cmd, "--rho", "rho", "retained-coefficient ratio for spectral-dp");
        flags.add(cmd, "--epsilon", "epsilon", "privacy budget epsilon");
        flags.add(cmd, "--delta", "delta", "privacy budget delta");
        flags.add(cmd, "--clip", "clip", "l2 clipping bound");
        flags.add(cmd, "--sigma", "sigma", "noise multiplier (otherwise calibrated from epsilon, delta)");
        flags.add(cmd, "--batch", "batch", "batch size");
        flags.add(cmd, "--lr", "lr", "learning rate");
        flags.add(cmd, "--epochs", "epochs", "training epochs");
        flags.add(cmd, "--seed", "seed", "base seed");
        flags.add(cmd, "--trials", "trials", "independent trials (seeds base, base+1, ...)");
        flags.add(cmd, "--noise-granularity", "noise_granularity", "per-sample|per-batch");
        flags.add(cmd, "--out", "out", "output CSV path (stdout if omitted)");
    };

    CLI::App* train = app.add_subcommand("train", "train one configuration and emit per-epoch metrics");
    add_experiment_flags(train);

    CLI::App* sweep = app.add_subcommand("sweep", "mechanism/budget/clip grid into one CSV");
    add_experiment_flags(sweep);
    std::string mechanisms = "dpsgd,spectral-dp,gredp";
    std::string epsilons = "0.5,1,1.5,2";
    std::string clips = "0.1,1";
    sweep->add_option("--mechanisms", mechanisms, "comma list of mechanisms");
    sweep->add_option("--epsilons", epsilons, "comma list of epsilon values");
    sweep->add_option("--clips", clips, "comma list of clipping bounds");

    CLI::App* verify = app.add_subcommand("verify", "Monte-Carlo variance verification report");
    std::size_t v_trials = 1000000;
    double v_tol = 0.02;
    std::uint64_t v_seed = 42;
    std::string v_out;
    verify->add_option("--trials", v_trials, "pipeline invocations per check");
    verify->add_option("--tol", v_tol, "relative tolerance");
    verify->add_option("--seed", v_seed, "rng seed");
    verify->add_option("--out", v_out, "also write the report here");

    CLI::App* gen = app.add_subcommand("gen-data", "emit a synthetic dataset as CSV");
    std::size_t g_dims = 8, g_classes = 2, g_count = 200;
    std::uint64_t g_seed = 7;
    std::string g_out;
    gen->add_option("--dims", g_dims, "feature dimension (>= classes)");
    gen->add_option("--classes", g_classes, "class count");
    gen->add_option("--count", g_count, "sample count");
    gen->add_option("--seed", g_seed, "rng seed");
    gen->add_option("--out", g_out, "output CSV path (stdout if omitted)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (train->parsed()) return run_train(config_path, flags);
        if (sweep->parsed()) return run_sweep(config_path, flags, mechanisms, epsilons, clips);
        if (verify->parsed()) return run_verify(v_trials, v_tol, v_seed, v_out);
        if (gen->parsed()) return run_gen_data(g_dims, g_classes, g_count, g_seed, g_out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
