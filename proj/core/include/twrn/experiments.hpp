#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "twrn/estimators.hpp"
#include "twrn/model.hpp"
#include "twrn/optimize.hpp"

namespace twrn {

enum class SweepKind { snr, sample_size };

std::string_view to_string(SweepKind kind);

/// Extent of the validation grid: centred on the sample-average estimate with
/// half width half_width_scale * max(1, |a_s|).
struct GridOptions {
    double half_width_scale = 3.0;
    double step = 1e-3;
    /// Coarse-to-fine search instead of the exhaustive scan.
    bool refined = true;

    friend bool operator==(const GridOptions&, const GridOptions&) = default;
};

struct ExperimentSpec {
    SweepKind sweep = SweepKind::snr;
    /// SNR values in dB, or sample sizes N; nonempty and ascending.
    std::vector<double> values{0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0};
    /// For SNR sweeps sigma^2 is overwritten per cell; for N sweeps n is.
    SystemConfig config_template;
    std::size_t channel_realizations = 100;
    std::size_t trials_per_cell = 1;
    std::vector<Method> methods{Method::ml, Method::msev};
    SolverConfig solver;
    bool grid_validation = false;
    GridOptions grid;
    std::uint64_t master_seed = 1;
    std::size_t crb_symbol_draws = 50;
    std::size_t pilot_count = 4;
    /// Worker threads; 0 = hardware concurrency. Does not affect results.
    unsigned threads = 0;
    /// A cell fails when more than this fraction of its solves did not converge.
    double max_nonconverged_fraction = 0.05;

    void validate() const;
};

/// Row label: the method and whether the grid or steepest descent solved it.
struct RowMethod {
    Method method = Method::msev;
    bool grid = false;

    std::string label() const;  ///< "ml", "msev", "ml_grid", "msev_grid"
    friend bool operator==(const RowMethod&, const RowMethod&) = default;
};

struct ExperimentRow {
    double sweep_value = 0.0;
    RowMethod method;
    double mse = 0.0;                ///< mean |a_hat - a|^2
    double mean_sd_iterations = 0.0;
    double mean_ls_iterations = 0.0; ///< line-search evaluations per descent step
    double crb_a_avg = 0.0;
    double mcrb_a = 0.0;
    double nonconverged_fraction = 0.0;
    std::size_t solves = 0;
};

struct ExperimentResult {
    SweepKind sweep = SweepKind::snr;
    std::vector<ExperimentRow> rows;
    std::string spec_fingerprint;
    std::string channel_fingerprint;

    const ExperimentRow& row(double sweep_value, RowMethod method) const;
};

/// The fixed channel set shared by every cell of an experiment.
std::vector<ChannelState> experiment_channels(std::uint64_t master_seed, std::size_t count);

/// Runs every (sweep value, channel realization, trial) cell. Throws
/// Error(diverged) naming the cell when its non-converged fraction exceeds
/// spec.max_nonconverged_fraction; non-converged solves inside the limit
/// contribute their last iterate.
ExperimentResult run_experiment(const ExperimentSpec& spec);

/// run_experiment for an SNR sweep (throws if spec.sweep is not snr).
ExperimentResult run_mse_vs_snr(const ExperimentSpec& spec);
/// run_experiment for a sample-size sweep.
ExperimentResult run_mse_vs_n(const ExperimentSpec& spec);

struct IterationRow {
    double sweep_value = 0.0;
    Method method = Method::msev;
    double mean_sd_iterations = 0.0;
    double mean_ls_per_iteration = 0.0;
};

std::vector<IterationRow> iteration_statistics(const ExperimentResult& result);

/// Hex FNV-1a 64 of a byte string.
std::string fingerprint(std::string_view bytes);

}  // namespace twrn
