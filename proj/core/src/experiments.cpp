#include "twrn/experiments.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>

#include "twrn/bounds.hpp"
#include "twrn/errors.hpp"
#include "twrn/io.hpp"
#include "twrn/parallel.hpp"

namespace twrn {
namespace {

struct SolveRecord {
    double squared_error = 0.0;
    int iterations = 0;
    double ls_per_iteration = 0.0;
    bool converged = true;
};

struct TrialRecord {
    std::vector<SolveRecord> descent;  // one per spec.methods entry
    std::vector<SolveRecord> grid;     // one per spec.methods entry when validating
};

struct BoundRecord {
    double crb = 0.0;
    double mcrb = 0.0;
};

SystemConfig cell_config(const ExperimentSpec& spec, double value) {
    if (spec.sweep == SweepKind::snr) return spec.config_template.with_snr_db(value);
    SystemConfig c = spec.config_template;
    c.n = static_cast<std::size_t>(std::llround(value));
    return c;
}

SolveRecord descend(const ObservationBatch& batch, Method method, const SolverConfig& solver, cplx truth) {
    SolveRecord rec;
    try {
        const EstimateReport report = estimate(batch, method, solver);
        rec.squared_error = std::norm(report.a_hat - truth);
        rec.iterations = report.optimizer_stats.iterations;
        rec.ls_per_iteration = report.optimizer_stats.line_search_per_iteration();
        rec.converged = report.optimizer_stats.converged;
    } catch (const DivergedError& e) {
        rec.squared_error = std::norm(e.last_finite_iterate() - truth);
        rec.converged = false;
    }
    return rec;
}

SolveRecord grid_solve(const ObservationBatch& batch, Method method, const GridOptions& options, cplx truth) {
    GridSpec grid;
    grid.center = sample_average_initializer(batch);
    grid.step = options.step;
    grid.half_width = options.half_width_scale * std::max(1.0, std::abs(grid.center));
    const Objective f = make_objective(batch, method);
    const cplx found = options.refined ? refined_grid_search(f, grid) : grid_search(f, grid);
    SolveRecord rec;
    rec.squared_error = std::norm(found - truth);
    return rec;
}

std::uint64_t double_bits(double v) { return std::bit_cast<std::uint64_t>(v); }

}  // namespace

std::string_view to_string(SweepKind kind) { return kind == SweepKind::snr ? "snr" : "n"; }

std::string RowMethod::label() const {
    std::string out(to_string(method));
    if (grid) out += "_grid";
    return out;
}

void ExperimentSpec::validate() const {
    auto fail = [](const std::string& msg) { throw Error(ErrorKind::invalid_argument, "experiment: " + msg); };
    if (values.empty()) fail("sweep values must be nonempty");
    for (std::size_t i = 1; i < values.size(); ++i) {
        if (!(values[i] > values[i - 1])) fail("sweep values must be strictly ascending");
    }
    if (sweep == SweepKind::sample_size) {
        for (double v : values) {
            if (v < 2.0 || v != std::floor(v)) fail("sample sizes must be integers >= 2");
        }
    }
    if (channel_realizations < 1) fail("channel_realizations must be >= 1");
    if (trials_per_cell < 1) fail("trials_per_cell must be >= 1");
    if (methods.empty()) fail("at least one method is required");
    if (crb_symbol_draws < 1) fail("crb_symbol_draws must be >= 1");
    if (!(grid.step > 0.0) || !(grid.half_width_scale > 0.0)) fail("grid step and scale must be > 0");
    config_template.validate();
    solver.validate();
    for (double v : values) {
        const SystemConfig c = cell_config(*this, v);
        c.validate();
        if (pilot_count > c.n) fail("pilot_count exceeds the sample size of a cell");
    }
}

const ExperimentRow& ExperimentResult::row(double sweep_value, RowMethod method) const {
    for (const auto& r : rows) {
        if (r.sweep_value == sweep_value && r.method == method) return r;
    }
    throw Error(ErrorKind::invalid_argument, "experiment result has no row for " + method.label() + " at " +
                                                 io::format_double(sweep_value));
}

std::vector<ChannelState> experiment_channels(std::uint64_t master_seed, std::size_t count) {
    std::vector<ChannelState> out;
    out.reserve(count);
    for (std::size_t r = 0; r < count; ++r) {
        RngStream rng = RngStream::derive(master_seed, r, StreamRole::channel);
        out.push_back(draw_channel(rng));
    }
    return out;
}

ExperimentResult run_experiment(const ExperimentSpec& spec) {
    spec.validate();
    const std::size_t cells = spec.values.size();
    const std::size_t realizations = spec.channel_realizations;
    const std::size_t trials = spec.trials_per_cell;
    const std::size_t methods = spec.methods.size();
    const std::vector<ChannelState> channels = experiment_channels(spec.master_seed, realizations);

    std::vector<TrialRecord> records(cells * realizations * trials);
    parallel_for(records.size(), spec.threads, [&](std::size_t idx) {
        const std::size_t c = idx / (realizations * trials);
        const std::size_t r = (idx / trials) % realizations;
        const std::size_t t = idx % trials;
        const SystemConfig config = cell_config(spec, spec.values[c]);
        RngStream rng = RngStream::derive(spec.master_seed, mix_seed(mix_seed(c, r), t), StreamRole::batch);
        const ObservationBatch batch = simulate_batch(config, channels[r], rng, spec.pilot_count);
        TrialRecord& rec = records[idx];
        const cplx truth = channels[r].a();
        for (Method m : spec.methods) {
            rec.descent.push_back(descend(batch, m, spec.solver, truth));
            if (spec.grid_validation) rec.grid.push_back(grid_solve(batch, m, spec.grid, truth));
        }
    });

    std::vector<BoundRecord> bounds(cells * realizations);
    parallel_for(bounds.size(), spec.threads, [&](std::size_t idx) {
        const std::size_t c = idx / realizations;
        const std::size_t r = idx % realizations;
        const SystemConfig config = cell_config(spec, spec.values[c]);
        RngStream rng = RngStream::derive(spec.master_seed, mix_seed(c, r), StreamRole::crb_symbols);
        try {
            bounds[idx].crb = averaged_crb_a(config, channels[r], spec.crb_symbol_draws, rng).mean;
        } catch (const SingularFimError&) {
            // too many singular symbol draws (tiny N); the cell reports no bound
            bounds[idx].crb = std::numeric_limits<double>::quiet_NaN();
        }
        bounds[idx].mcrb = mcrb_a(config, channels[r]);
    });

    ExperimentResult result;
    result.sweep = spec.sweep;
    for (std::size_t c = 0; c < cells; ++c) {
        double crb = 0.0;
        double mcrb = 0.0;
        for (std::size_t r = 0; r < realizations; ++r) {
            crb += bounds[c * realizations + r].crb;
            mcrb += bounds[c * realizations + r].mcrb;
        }
        crb /= static_cast<double>(realizations);
        mcrb /= static_cast<double>(realizations);

        for (int pass = 0; pass < (spec.grid_validation ? 2 : 1); ++pass) {
            for (std::size_t mi = 0; mi < methods; ++mi) {
                ExperimentRow row;
                row.sweep_value = spec.values[c];
                row.method = {spec.methods[mi], pass == 1};
                row.crb_a_avg = crb;
                row.mcrb_a = mcrb;
                double se = 0.0;
                double iters = 0.0;
                double ls = 0.0;
                std::size_t ls_count = 0;
                std::size_t failed = 0;
                for (std::size_t k = 0; k < realizations * trials; ++k) {
                    const TrialRecord& rec = records[c * realizations * trials + k];
                    const SolveRecord& s = pass == 1 ? rec.grid[mi] : rec.descent[mi];
                    se += s.squared_error;
                    iters += s.iterations;
                    if (s.iterations > 0) {
                        ls += s.ls_per_iteration;
                        ++ls_count;
                    }
                    failed += s.converged ? 0 : 1;
                }
                row.solves = realizations * trials;
                const double count = static_cast<double>(row.solves);
                row.mse = se / count;
                row.mean_sd_iterations = iters / count;
                row.mean_ls_iterations = ls_count > 0 ? ls / static_cast<double>(ls_count) : 0.0;
                row.nonconverged_fraction = static_cast<double>(failed) / count;
                if (row.nonconverged_fraction > spec.max_nonconverged_fraction) {
                    throw Error(ErrorKind::diverged,
                                "experiment cell " + std::string(to_string(spec.sweep)) + "=" +
                                    io::format_double(row.sweep_value) + " method " + row.method.label() +
                                    ": non-converged fraction " + io::format_double(row.nonconverged_fraction) +
                                    " exceeds " + io::format_double(spec.max_nonconverged_fraction));
                }
                result.rows.push_back(row);
            }
        }
    }

    result.spec_fingerprint = fingerprint(io::serialize_spec(spec));
    std::string channel_bytes;
    for (const auto& ch : channels) {
        for (double v : {ch.h().real(), ch.h().imag(), ch.g().real(), ch.g().imag()}) {
            const std::uint64_t bits = double_bits(v);
            channel_bytes.append(reinterpret_cast<const char*>(&bits), sizeof bits);
        }
    }
    result.channel_fingerprint = fingerprint(channel_bytes);
    return result;
}

ExperimentResult run_mse_vs_snr(const ExperimentSpec& spec) {
    if (spec.sweep != SweepKind::snr) throw Error(ErrorKind::invalid_argument, "run_mse_vs_snr: spec is not an SNR sweep");
    return run_experiment(spec);
}

ExperimentResult run_mse_vs_n(const ExperimentSpec& spec) {
    if (spec.sweep != SweepKind::sample_size) {
        throw Error(ErrorKind::invalid_argument, "run_mse_vs_n: spec is not a sample-size sweep");
    }
    return run_experiment(spec);
}

std::vector<IterationRow> iteration_statistics(const ExperimentResult& result) {
    std::vector<IterationRow> out;
    for (const auto& row : result.rows) {
        if (row.method.grid) continue;
        out.push_back({row.sweep_value, row.method.method, row.mean_sd_iterations, row.mean_ls_iterations});
    }
    return out;
}

std::string fingerprint(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace twrn
