#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "twrn/analysis.hpp"
#include "twrn/bounds.hpp"
#include "twrn/estimators.hpp"
#include "twrn/experiments.hpp"
#include "twrn/model.hpp"

namespace twrn::io {

/// Contents of a JSON config file with sections
/// {system, channel?, solver, grid?, experiment}.
struct AppConfig {
    SystemConfig system;
    std::size_t pilot_count = 4;
    bool noiseless = false;
    std::optional<ChannelState> channel;  ///< absent: drawn from the master seed
    SolverConfig solver;
    std::optional<GridOptions> grid;
    ExperimentSpec experiment;  ///< kept in sync with the sections above by parse_config

    /// Experiment spec with the system template, solver and grid sections applied.
    ExperimentSpec experiment_spec() const;
};

/// Throws Error(invalid_argument) on malformed input.
AppConfig parse_config(const std::string& json_text);
std::string serialize_config(const AppConfig& config);

AppConfig read_config_file(const std::string& path);

/// Formats a double so that it round-trips exactly ("%.17g").
std::string format_double(double value);

// Observation batches ------------------------------------------------------

/// CSV columns: index, re_t1, im_t1, re_t2, im_t2, re_z, im_z, is_pilot.
void write_batch_csv(std::ostream& out, const ObservationBatch& batch);
/// Reads samples; config is not part of the CSV and must be supplied.
ObservationBatch read_batch_csv(std::istream& in, const SystemConfig& config);

/// JSON envelope carrying the system config and the ground-truth channel.
struct BatchEnvelope {
    SystemConfig config;
    std::optional<ChannelState> channel;
    std::uint64_t seed = 0;
    std::string csv_file;
};

std::string serialize_envelope(const BatchEnvelope& envelope);
BatchEnvelope parse_envelope(const std::string& json_text);

// Estimates ----------------------------------------------------------------

std::string serialize_report(const EstimateReport& report);
std::string report_csv_header();
std::string report_csv_row(const EstimateReport& report);

// Experiments --------------------------------------------------------------

/// Header: sweep_name, sweep_value, method, mse, sd_iters, ls_iters, crb_a,
/// mcrb_a, nonconverged_fraction.
void write_experiment_csv(std::ostream& out, const ExperimentResult& result);
ExperimentResult read_experiment_csv(std::istream& in);

/// JSON sidecar with the spec, fingerprints and a metadata block (the only
/// place a timestamp may appear).
std::string serialize_experiment_sidecar(const ExperimentSpec& spec, const ExperimentResult& result,
                                         const std::string& timestamp);

/// Canonical JSON of a spec; the experiment fingerprint hashes this text.
std::string serialize_spec(const ExperimentSpec& spec);

/// Long form: sweep_name, sweep_value, metric, value with metric in
/// {mse_ml, mse_msev, mse_ml_grid, mse_msev_grid, crb_a, mcrb_a}.
void write_metric_csv(std::ostream& out, const ExperimentResult& result);

/// Bound rows in the long-form metric schema (sweep_name "single").
void write_bound_csv(std::ostream& out, const std::vector<BoundReport>& reports, double sweep_value);

void write_iteration_csv(std::ostream& out, SweepKind sweep, const std::vector<IterationRow>& rows);

// Analysis ------------------------------------------------------------------

/// Columns: snr_db, g_at_u, g_at_a, lambda_at_u, lambda_at_a.
void write_high_snr_csv(std::ostream& out, const std::vector<HighSnrRow>& rows);

/// JSON array of {check_name, status, measured, tolerance}.
std::string serialize_checks(const std::vector<CheckResult>& checks);

}  // namespace twrn::io
