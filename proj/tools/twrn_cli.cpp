#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "twrn/analysis.hpp"
#include "twrn/bounds.hpp"
#include "twrn/errors.hpp"
#include "twrn/estimators.hpp"
#include "twrn/experiments.hpp"
#include "twrn/io.hpp"

namespace fs = std::filesystem;
using namespace twrn;

namespace {

enum ExitCode { ok = 0, validation = 1, numerical = 2, io_failure = 3 };

struct Options {
    std::string config_path;
    std::string out_path;
    std::optional<std::uint64_t> seed;
    std::string method = "both";
    bool grid_validate = false;
    std::string batch_path;   // estimate
    std::string from_path;    // iters
};

io::AppConfig load_config(const Options& opt) {
    io::AppConfig cfg = opt.config_path.empty() ? io::parse_config("{}") : io::read_config_file(opt.config_path);
    if (opt.seed) cfg.experiment.master_seed = *opt.seed;
    return cfg;
}

std::vector<Method> selected_methods(const Options& opt, const std::vector<Method>& fallback) {
    if (opt.method == "both") return fallback.empty() ? std::vector<Method>{Method::ml, Method::msev} : fallback;
    return {parse_method(opt.method)};
}

std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string g_config_path;

// Writes to the file, or stdout when path is empty.
void emit(const std::string& path, const std::string& text) {
    if (path.empty()) {
        std::cout << text;
        return;
    }
    std::error_code ec;
    if (!g_config_path.empty() && fs::equivalent(path, g_config_path, ec)) {
        throw Error(ErrorKind::invalid_argument, "refusing to overwrite the config file " + g_config_path);
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::io, "cannot open " + path + " for writing");
    out << text;
    if (!out) throw Error(ErrorKind::io, "write to " + path + " failed");
}

std::string with_extension(const std::string& path, const std::string& ext) {
    return fs::path(path).replace_extension(ext).string();
}

std::string with_suffix(const std::string& path, const std::string& suffix) {
    fs::path p(path);
    return (p.parent_path() / (p.stem().string() + suffix)).string();
}

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::io, "cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

ChannelState config_channel(const io::AppConfig& cfg) {
    if (cfg.channel) return *cfg.channel;
    RngStream rng = RngStream::derive(cfg.experiment.master_seed, 0, StreamRole::channel);
    return draw_channel(rng);
}

int cmd_simulate(const Options& opt) {
    if (opt.out_path.empty()) throw Error(ErrorKind::invalid_argument, "simulate: --out <batch.csv> is required");
    const io::AppConfig cfg = load_config(opt);
    const ChannelState channel = config_channel(cfg);
    RngStream rng = RngStream::derive(cfg.experiment.master_seed, 0, StreamRole::batch);
    const ObservationBatch batch = simulate_batch(cfg.system, channel, rng, cfg.pilot_count,
                                                  cfg.noiseless ? NoiseMode::noiseless : NoiseMode::gaussian);
    std::ostringstream csv;
    io::write_batch_csv(csv, batch);
    emit(opt.out_path, csv.str());

    io::BatchEnvelope env;
    env.config = cfg.system;
    env.channel = channel;
    env.seed = cfg.experiment.master_seed;
    env.csv_file = fs::path(opt.out_path).filename().string();
    emit(with_extension(opt.out_path, ".json"), io::serialize_envelope(env));
    return ok;
}

int cmd_estimate(const Options& opt) {
    const io::AppConfig cfg = load_config(opt);
    ObservationBatch batch;
    if (opt.batch_path.empty()) {
        const ChannelState channel = config_channel(cfg);
        RngStream rng = RngStream::derive(cfg.experiment.master_seed, 0, StreamRole::batch);
        batch = simulate_batch(cfg.system, channel, rng, cfg.pilot_count,
                               cfg.noiseless ? NoiseMode::noiseless : NoiseMode::gaussian);
    } else if (fs::path(opt.batch_path).extension() == ".json") {
        const io::BatchEnvelope env = io::parse_envelope(read_text(opt.batch_path));
        const fs::path csv = fs::path(opt.batch_path).parent_path() / env.csv_file;
        std::ifstream in(csv);
        if (!in) throw Error(ErrorKind::io, "cannot open batch CSV " + csv.string());
        batch = io::read_batch_csv(in, env.config);
    } else {
        std::ifstream in(opt.batch_path);
        if (!in) throw Error(ErrorKind::io, "cannot open batch CSV " + opt.batch_path);
        batch = io::read_batch_csv(in, cfg.system);
    }

    const std::vector<Method> methods = selected_methods(opt, {Method::ml, Method::msev});
    std::string text;
    if (!opt.out_path.empty() && fs::path(opt.out_path).extension() == ".csv") {
        text = io::report_csv_header() + "\n";
        for (Method m : methods) text += io::report_csv_row(estimate(batch, m, cfg.solver)) + "\n";
    } else {
        text = "[\n";
        for (std::size_t i = 0; i < methods.size(); ++i) {
            std::string one = io::serialize_report(estimate(batch, methods[i], cfg.solver));
            while (!one.empty() && one.back() == '\n') one.pop_back();
            text += one + (i + 1 < methods.size() ? ",\n" : "\n");
        }
        text += "]\n";
    }
    emit(opt.out_path, text);
    return ok;
}

int cmd_bounds(const Options& opt) {
    const io::AppConfig cfg = load_config(opt);
    const ExperimentSpec spec = cfg.experiment_spec();
    std::vector<ChannelState> channels;
    if (cfg.channel) {
        channels.push_back(*cfg.channel);
    } else {
        channels = experiment_channels(spec.master_seed, spec.channel_realizations);
    }
    std::vector<BoundReport> reports;
    for (std::size_t r = 0; r < channels.size(); ++r) {
        RngStream rng = RngStream::derive(spec.master_seed, r, StreamRole::crb_symbols);
        BoundReport rep;
        rep.crb_a = averaged_crb_a(cfg.system, channels[r], spec.crb_symbol_draws, rng).mean;
        rep.mcrb_a = mcrb_a(cfg.system, channels[r]);
        rep.n = cfg.system.n;
        rep.channel = channels[r];
        reports.push_back(rep);
    }
    std::ostringstream csv;
    io::write_bound_csv(csv, reports, cfg.system.snr_db());
    emit(opt.out_path, csv.str());
    return ok;
}

int cmd_verify(const Options& opt) {
    const io::AppConfig cfg = load_config(opt);
    VerifyOptions v;
    v.config = cfg.system;
    v.seed = cfg.experiment.master_seed;
    const auto checks = run_verification_suite(v);
    emit(opt.out_path, io::serialize_checks(checks));
    int status = ok;
    for (const auto& c : checks) {
        if (!c.passed) {
            std::cerr << "twrn: check failed: " << c.check_name << " (measured " << c.measured << ", tolerance "
                      << c.tolerance << ")\n";
            status = numerical;
        }
    }
    return status;
}

ExperimentSpec sweep_spec(const Options& opt, SweepKind kind) {
    const io::AppConfig cfg = load_config(opt);
    ExperimentSpec spec = cfg.experiment_spec();
    if (spec.sweep != kind) {
        // the config describes the other sweep; fall back to this sweep's default grid
        spec.values = kind == SweepKind::snr ? std::vector<double>{0, 5, 10, 15, 20, 25, 30}
                                             : std::vector<double>{25, 50, 100, 200, 400};
        spec.sweep = kind;
    }
    spec.methods = selected_methods(opt, spec.methods);
    if (opt.grid_validate) spec.grid_validation = true;
    spec.validate();
    return spec;
}

int cmd_sweep(const Options& opt, SweepKind kind) {
    if (opt.out_path.empty()) throw Error(ErrorKind::invalid_argument, "sweep: --out <results.csv> is required");
    const ExperimentSpec spec = sweep_spec(opt, kind);
    const ExperimentResult result = run_experiment(spec);
    std::ostringstream csv, metrics;
    io::write_experiment_csv(csv, result);
    io::write_metric_csv(metrics, result);
    emit(opt.out_path, csv.str());
    emit(with_suffix(opt.out_path, "_metrics.csv"), metrics.str());
    emit(with_suffix(opt.out_path, "_meta.json"), io::serialize_experiment_sidecar(spec, result, utc_timestamp()));
    return ok;
}

int cmd_iters(const Options& opt) {
    ExperimentResult result;
    if (!opt.from_path.empty()) {
        std::ifstream in(opt.from_path);
        if (!in) throw Error(ErrorKind::io, "cannot open " + opt.from_path);
        result = io::read_experiment_csv(in);
    } else {
        result = run_experiment(sweep_spec(opt, SweepKind::snr));
    }
    std::ostringstream csv;
    io::write_iteration_csv(csv, result.sweep, iteration_statistics(result));
    emit(opt.out_path, csv.str());
    return ok;
}

int exit_code_for(const Error& e) {
    if (e.kind() == ErrorKind::io) return io_failure;
    if (e.is_numerical()) return numerical;
    return validation;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Channel estimation simulator for amplify-and-forward two-way relay networks"};
    app.require_subcommand(1);
    Options opt;

    const auto common = [&](CLI::App* sub) {
        sub->add_option("--config", opt.config_path, "JSON config file");
        sub->add_option("--out", opt.out_path, "output file (stdout when omitted, where allowed)");
        sub->add_option("--seed", opt.seed, "master seed override");
        sub->add_option("--method", opt.method, "ml, msev or both")->check(CLI::IsMember({"ml", "msev", "both"}));
        sub->add_flag("--grid-validate", opt.grid_validate, "also solve every cell by grid search");
    };

    auto* simulate = app.add_subcommand("simulate", "draw one observation batch (CSV plus JSON sidecar)");
    auto* estimate_cmd = app.add_subcommand("estimate", "estimate the channel from a batch");
    auto* bounds = app.add_subcommand("bounds", "averaged CRB and modified CRB for the configured channels");
    auto* verify = app.add_subcommand("verify", "run the analysis checks and write a pass/fail report");
    auto* sweep_snr = app.add_subcommand("sweep-snr", "MSE and bounds versus SNR");
    auto* sweep_n = app.add_subcommand("sweep-n", "MSE and bounds versus sample size");
    auto* iters = app.add_subcommand("iters", "steepest-descent iteration statistics");
    for (auto* sub : {simulate, estimate_cmd, bounds, verify, sweep_snr, sweep_n, iters}) common(sub);
    estimate_cmd->add_option("--batch", opt.batch_path, "batch sidecar (.json) or batch CSV; simulated when omitted");
    iters->add_option("--from", opt.from_path, "experiment CSV to summarise; runs an SNR sweep when omitted");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? ok : validation;
    }

    g_config_path = opt.config_path;
    try {
        if (*simulate) return cmd_simulate(opt);
        if (*estimate_cmd) return cmd_estimate(opt);
        if (*bounds) return cmd_bounds(opt);
        if (*verify) return cmd_verify(opt);
        if (*sweep_snr) return cmd_sweep(opt, SweepKind::snr);
        if (*sweep_n) return cmd_sweep(opt, SweepKind::sample_size);
        if (*iters) return cmd_iters(opt);
    } catch (const Error& e) {
        std::cerr << "twrn: " << e.what() << "\n";
        return exit_code_for(e);
    } catch (const fs::filesystem_error& e) {
        std::cerr << "twrn: " << e.what() << "\n";
        return io_failure;
    } catch (const std::exception& e) {
        std::cerr << "twrn: " << e.what() << "\n";
        return numerical;
    }
    return validation;
}
