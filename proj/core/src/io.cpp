#include "twrn/io.hpp"

#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "twrn/errors.hpp"

namespace twrn::io {
namespace {

using nlohmann::json;

[[noreturn]] void invalid(const std::string& msg) { throw Error(ErrorKind::invalid_argument, msg); }

void require_keys(const json& obj, const char* section, std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) invalid(std::string("config section '") + section + "' must be an object");
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [key, value] : obj.items()) {
        if (!ok.count(key)) invalid(std::string("config section '") + section + "': unknown key '" + key + "'");
    }
}

template <typename T>
void read_field(const json& obj, const char* key, T& target) {
    if (!obj.contains(key)) return;
    try {
        target = obj.at(key).get<T>();
    } catch (const json::exception& e) {
        invalid(std::string("config key '") + key + "': " + e.what());
    }
}

json complex_to_json(cplx v) { return json::array({v.real(), v.imag()}); }

cplx complex_from_json(const json& j, const char* what) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
        invalid(std::string(what) + " must be a [re, im] pair");
    }
    return {j[0].get<double>(), j[1].get<double>()};
}

json system_to_json(const SystemConfig& s) {
    return {{"p1", s.p1}, {"p2", s.p2}, {"pr", s.pr}, {"sigma2", s.sigma2}, {"m", s.m}, {"n", s.n}};
}

SystemConfig system_from_json(const json& j) {
    SystemConfig s;
    read_field(j, "p1", s.p1);
    read_field(j, "p2", s.p2);
    read_field(j, "pr", s.pr);
    read_field(j, "sigma2", s.sigma2);
    read_field(j, "m", s.m);
    read_field(j, "n", s.n);
    if (j.contains("snr_db")) {
        if (j.contains("sigma2")) invalid("config: give either system.sigma2 or system.snr_db, not both");
        double db = 0.0;
        read_field(j, "snr_db", db);
        s = s.with_snr_db(db);
    }
    return s;
}

json channel_to_json(const ChannelState& c) { return {{"h", complex_to_json(c.h())}, {"g", complex_to_json(c.g())}}; }

ChannelState channel_from_json(const json& j) {
    require_keys(j, "channel", {"h", "g"});
    if (!j.contains("h") || !j.contains("g")) invalid("config: channel needs both h and g");
    return {complex_from_json(j.at("h"), "channel.h"), complex_from_json(j.at("g"), "channel.g")};
}

json solver_to_json(const SolverConfig& s) {
    json init = std::holds_alternative<cplx>(s.initializer) ? complex_to_json(std::get<cplx>(s.initializer))
                                                            : json("sample_average");
    return {{"initializer", init},
            {"grad_tolerance", s.grad_tolerance},
            {"max_iterations", s.max_iterations},
            {"backtrack_alpha", s.backtrack_alpha},
            {"backtrack_beta", s.backtrack_beta},
            {"initial_step", s.initial_step},
            {"max_backtracks", s.max_backtracks},
            {"fd_step", s.fd_step},
            {"gradient", s.gradient == GradientMode::analytic ? "analytic" : "finite_difference"}};
}

SolverConfig solver_from_json(const json& j) {
    require_keys(j, "solver",
                 {"initializer", "grad_tolerance", "max_iterations", "backtrack_alpha", "backtrack_beta",
                  "initial_step", "max_backtracks", "fd_step", "gradient"});
    SolverConfig s;
    if (j.contains("initializer")) {
        const json& init = j.at("initializer");
        if (init.is_string()) {
            if (init.get<std::string>() != "sample_average") invalid("solver.initializer: expected 'sample_average' or [re, im]");
            s.initializer = SampleAverageStart{};
        } else {
            s.initializer = complex_from_json(init, "solver.initializer");
        }
    }
    read_field(j, "grad_tolerance", s.grad_tolerance);
    read_field(j, "max_iterations", s.max_iterations);
    read_field(j, "backtrack_alpha", s.backtrack_alpha);
    read_field(j, "backtrack_beta", s.backtrack_beta);
    read_field(j, "initial_step", s.initial_step);
    read_field(j, "max_backtracks", s.max_backtracks);
    read_field(j, "fd_step", s.fd_step);
    if (j.contains("gradient")) {
        std::string mode;
        read_field(j, "gradient", mode);
        if (mode == "analytic") s.gradient = GradientMode::analytic;
        else if (mode == "finite_difference") s.gradient = GradientMode::finite_difference;
        else invalid("solver.gradient must be 'analytic' or 'finite_difference'");
    }
    return s;
}

json grid_to_json(const GridOptions& g) {
    return {{"half_width_scale", g.half_width_scale}, {"step", g.step}, {"refined", g.refined}};
}

GridOptions grid_from_json(const json& j) {
    require_keys(j, "grid", {"half_width_scale", "step", "refined"});
    GridOptions g;
    read_field(j, "half_width_scale", g.half_width_scale);
    read_field(j, "step", g.step);
    read_field(j, "refined", g.refined);
    return g;
}

json experiment_to_json(const ExperimentSpec& e) {
    json methods = json::array();
    for (Method m : e.methods) methods.push_back(std::string(to_string(m)));
    return {{"sweep", std::string(to_string(e.sweep))},
            {"values", e.values},
            {"channel_realizations", e.channel_realizations},
            {"trials_per_cell", e.trials_per_cell},
            {"methods", methods},
            {"grid_validation", e.grid_validation},
            {"master_seed", e.master_seed},
            {"crb_symbol_draws", e.crb_symbol_draws},
            {"threads", e.threads},
            {"max_nonconverged_fraction", e.max_nonconverged_fraction}};
}

void experiment_from_json(const json& j, ExperimentSpec& e) {
    require_keys(j, "experiment",
                 {"sweep", "values", "channel_realizations", "trials_per_cell", "methods", "grid_validation",
                  "master_seed", "crb_symbol_draws", "threads", "max_nonconverged_fraction"});
    if (j.contains("sweep")) {
        std::string sweep;
        read_field(j, "sweep", sweep);
        if (sweep == "snr") e.sweep = SweepKind::snr;
        else if (sweep == "n" || sweep == "sample_size") e.sweep = SweepKind::sample_size;
        else invalid("experiment.sweep must be 'snr' or 'n'");
    }
    read_field(j, "values", e.values);
    read_field(j, "channel_realizations", e.channel_realizations);
    read_field(j, "trials_per_cell", e.trials_per_cell);
    if (j.contains("methods")) {
        std::vector<std::string> names;
        read_field(j, "methods", names);
        e.methods.clear();
        for (const auto& n : names) e.methods.push_back(parse_method(n));
    }
    read_field(j, "grid_validation", e.grid_validation);
    read_field(j, "master_seed", e.master_seed);
    read_field(j, "crb_symbol_draws", e.crb_symbol_draws);
    read_field(j, "threads", e.threads);
    read_field(j, "max_nonconverged_fraction", e.max_nonconverged_fraction);
}

json parse_json(const std::string& text, const char* what) {
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        invalid(std::string(what) + ": " + e.what());
    }
}

}  // namespace

std::string format_double(double value) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    return buf;
}

ExperimentSpec AppConfig::experiment_spec() const {
    ExperimentSpec spec = experiment;
    spec.config_template = system;
    spec.solver = solver;
    spec.pilot_count = pilot_count;
    if (grid) spec.grid = *grid;
    return spec;
}

AppConfig parse_config(const std::string& json_text) {
    const json root = parse_json(json_text, "config");
    require_keys(root, "root", {"system", "channel", "solver", "grid", "experiment"});
    AppConfig cfg;
    if (root.contains("system")) {
        const json& s = root.at("system");
        require_keys(s, "system", {"p1", "p2", "pr", "sigma2", "snr_db", "m", "n", "pilot_count", "noiseless"});
        cfg.system = system_from_json(s);
        read_field(s, "pilot_count", cfg.pilot_count);
        read_field(s, "noiseless", cfg.noiseless);
    }
    if (root.contains("channel") && !root.at("channel").is_null()) cfg.channel = channel_from_json(root.at("channel"));
    if (root.contains("solver")) cfg.solver = solver_from_json(root.at("solver"));
    if (root.contains("grid") && !root.at("grid").is_null()) cfg.grid = grid_from_json(root.at("grid"));
    if (root.contains("experiment")) experiment_from_json(root.at("experiment"), cfg.experiment);

    cfg.system.validate();
    cfg.solver.validate();
    if (cfg.pilot_count > cfg.system.n) invalid("config: system.pilot_count exceeds system.n");
    cfg.experiment = cfg.experiment_spec();
    cfg.experiment.validate();
    return cfg;
}

std::string serialize_config(const AppConfig& cfg) {
    json root;
    json system = system_to_json(cfg.system);
    system["pilot_count"] = cfg.pilot_count;
    system["noiseless"] = cfg.noiseless;
    root["system"] = system;
    if (cfg.channel) root["channel"] = channel_to_json(*cfg.channel);
    root["solver"] = solver_to_json(cfg.solver);
    if (cfg.grid) root["grid"] = grid_to_json(*cfg.grid);
    root["experiment"] = experiment_to_json(cfg.experiment);
    return root.dump(2) + "\n";
}

AppConfig read_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::io, "cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

void write_batch_csv(std::ostream& out, const ObservationBatch& batch) {
    out << "index,re_t1,im_t1,re_t2,im_t2,re_z,im_z,is_pilot\n";
    for (std::size_t i = 0; i < batch.size(); ++i) {
        out << i << ',' << format_double(batch.t1[i].real()) << ',' << format_double(batch.t1[i].imag()) << ','
            << format_double(batch.t2[i].real()) << ',' << format_double(batch.t2[i].imag()) << ','
            << format_double(batch.z[i].real()) << ',' << format_double(batch.z[i].imag()) << ','
            << (batch.pilot_mask[i] ? 1 : 0) << '\n';
    }
}

ObservationBatch read_batch_csv(std::istream& in, const SystemConfig& config) {
    ObservationBatch batch;
    batch.config = config;
    std::string line;
    if (!std::getline(in, line) || line.rfind("index,", 0) != 0) invalid("batch CSV: missing header");
    std::size_t expected = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<std::string> cells;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (cells.size() != 8) invalid("batch CSV: expected 8 columns in line " + std::to_string(expected + 2));
        try {
            if (std::stoull(cells[0]) != expected) invalid("batch CSV: indices must be consecutive from 0");
            batch.t1.emplace_back(std::stod(cells[1]), std::stod(cells[2]));
            batch.t2.emplace_back(std::stod(cells[3]), std::stod(cells[4]));
            batch.z.emplace_back(std::stod(cells[5]), std::stod(cells[6]));
            batch.pilot_mask.push_back(cells[7] == "1");
        } catch (const std::logic_error&) {
            invalid("batch CSV: malformed number in line " + std::to_string(expected + 2));
        }
        ++expected;
    }
    if (batch.z.size() != config.n) {
        invalid("batch CSV: " + std::to_string(batch.z.size()) + " samples but config.n = " + std::to_string(config.n));
    }
    return batch;
}

std::string serialize_envelope(const BatchEnvelope& envelope) {
    json root;
    root["system"] = system_to_json(envelope.config);
    if (envelope.channel) {
        json ch = channel_to_json(*envelope.channel);
        ch["a"] = complex_to_json(envelope.channel->a());
        ch["b"] = complex_to_json(envelope.channel->b());
        ch["phi_b"] = envelope.channel->phi_b();
        root["channel"] = ch;
    }
    root["seed"] = envelope.seed;
    root["csv_file"] = envelope.csv_file;
    return root.dump(2) + "\n";
}

BatchEnvelope parse_envelope(const std::string& json_text) {
    const json root = parse_json(json_text, "batch envelope");
    BatchEnvelope env;
    if (!root.contains("system")) invalid("batch envelope: missing system section");
    env.config = system_from_json(root.at("system"));
    if (root.contains("channel")) {
        const json& ch = root.at("channel");
        env.channel = ChannelState(complex_from_json(ch.at("h"), "channel.h"), complex_from_json(ch.at("g"), "channel.g"));
    }
    read_field(root, "seed", env.seed);
    read_field(root, "csv_file", env.csv_file);
    return env;
}

std::string serialize_report(const EstimateReport& report) {
    json root;
    root["method"] = std::string(to_string(report.method));
    root["a_hat"] = complex_to_json(report.a_hat);
    root["b_mag_hat"] = report.b_mag_hat;
    root["psi_hat"] = report.psi_hat;
    root["phi_b_hat"] = report.phi_b_hat ? json(*report.phi_b_hat) : json(nullptr);
    root["objective_value"] = report.objective_value;
    root["optimizer_stats"] = {{"iterations", report.optimizer_stats.iterations},
                               {"line_search_steps", report.optimizer_stats.line_search_steps},
                               {"converged", report.optimizer_stats.converged},
                               {"stalled", report.optimizer_stats.stalled}};
    return root.dump(2) + "\n";
}

std::string report_csv_header() {
    return "method,re_a_hat,im_a_hat,b_mag_hat,phi_b_hat,objective_value,iterations,line_search_steps,converged";
}

std::string report_csv_row(const EstimateReport& r) {
    std::ostringstream out;
    out << to_string(r.method) << ',' << format_double(r.a_hat.real()) << ',' << format_double(r.a_hat.imag()) << ','
        << format_double(r.b_mag_hat) << ',' << (r.phi_b_hat ? format_double(*r.phi_b_hat) : std::string()) << ','
        << format_double(r.objective_value) << ',' << r.optimizer_stats.iterations << ','
        << r.optimizer_stats.line_search_steps << ',' << (r.optimizer_stats.converged ? 1 : 0);
    return out.str();
}

void write_experiment_csv(std::ostream& out, const ExperimentResult& result) {
    out << "sweep_name,sweep_value,method,mse,sd_iters,ls_iters,crb_a,mcrb_a,nonconverged_fraction\n";
    for (const auto& row : result.rows) {
        out << to_string(result.sweep) << ',' << format_double(row.sweep_value) << ',' << row.method.label() << ','
            << format_double(row.mse) << ',' << format_double(row.mean_sd_iterations) << ','
            << format_double(row.mean_ls_iterations) << ',' << format_double(row.crb_a_avg) << ','
            << format_double(row.mcrb_a) << ',' << format_double(row.nonconverged_fraction) << '\n';
    }
}

ExperimentResult read_experiment_csv(std::istream& in) {
    ExperimentResult result;
    std::string line;
    if (!std::getline(in, line) || line.rfind("sweep_name,", 0) != 0) invalid("experiment CSV: missing header");
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<std::string> cells;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (cells.size() != 9) invalid("experiment CSV: expected 9 columns");
        result.sweep = cells[0] == "snr" ? SweepKind::snr : SweepKind::sample_size;
        ExperimentRow row;
        std::string label = cells[2];
        const auto suffix = label.find("_grid");
        row.method.grid = suffix != std::string::npos;
        row.method.method = parse_method(label.substr(0, suffix));
        try {
            row.sweep_value = std::stod(cells[1]);
            row.mse = std::stod(cells[3]);
            row.mean_sd_iterations = std::stod(cells[4]);
            row.mean_ls_iterations = std::stod(cells[5]);
            row.crb_a_avg = std::stod(cells[6]);
            row.mcrb_a = std::stod(cells[7]);
            row.nonconverged_fraction = std::stod(cells[8]);
        } catch (const std::logic_error&) {
            invalid("experiment CSV: malformed number");
        }
        result.rows.push_back(row);
    }
    return result;
}

std::string serialize_spec(const ExperimentSpec& spec) {
    json root;
    root["experiment"] = experiment_to_json(spec);
    root["system"] = system_to_json(spec.config_template);
    root["solver"] = solver_to_json(spec.solver);
    root["grid"] = grid_to_json(spec.grid);
    root["pilot_count"] = spec.pilot_count;
    // threads only changes scheduling, never results
    root["experiment"].erase("threads");
    return root.dump();
}

std::string serialize_experiment_sidecar(const ExperimentSpec& spec, const ExperimentResult& result,
                                         const std::string& timestamp) {
    json root;
    root["spec"] = json::parse(serialize_spec(spec));
    root["spec_fingerprint"] = result.spec_fingerprint;
    root["channel_fingerprint"] = result.channel_fingerprint;
    root["metadata"] = {{"timestamp", timestamp}};
    return root.dump(2) + "\n";
}

void write_metric_csv(std::ostream& out, const ExperimentResult& result) {
    out << "sweep_name,sweep_value,metric,value\n";
    const std::string sweep(to_string(result.sweep));
    std::set<double> bounds_written;
    for (const auto& row : result.rows) {
        out << sweep << ',' << format_double(row.sweep_value) << ",mse_" << row.method.label() << ','
            << format_double(row.mse) << '\n';
        if (bounds_written.insert(row.sweep_value).second) {
            out << sweep << ',' << format_double(row.sweep_value) << ",crb_a," << format_double(row.crb_a_avg) << '\n';
            out << sweep << ',' << format_double(row.sweep_value) << ",mcrb_a," << format_double(row.mcrb_a) << '\n';
        }
    }
}

void write_bound_csv(std::ostream& out, const std::vector<BoundReport>& reports, double sweep_value) {
    out << "sweep_name,sweep_value,metric,value\n";
    for (const auto& r : reports) {
        out << "single," << format_double(sweep_value) << ",crb_a," << format_double(r.crb_a) << '\n';
        out << "single," << format_double(sweep_value) << ",mcrb_a," << format_double(r.mcrb_a) << '\n';
    }
}

void write_iteration_csv(std::ostream& out, SweepKind sweep, const std::vector<IterationRow>& rows) {
    out << "sweep_name,sweep_value,method,mean_sd_iterations,mean_ls_per_iteration\n";
    for (const auto& r : rows) {
        out << to_string(sweep) << ',' << format_double(r.sweep_value) << ',' << to_string(r.method) << ','
            << format_double(r.mean_sd_iterations) << ',' << format_double(r.mean_ls_per_iteration) << '\n';
    }
}

void write_high_snr_csv(std::ostream& out, const std::vector<HighSnrRow>& rows) {
    out << "snr_db,g_at_u,g_at_a,lambda_at_u,lambda_at_a\n";
    for (const auto& r : rows) {
        out << format_double(r.snr_db) << ',' << format_double(r.g_at_u) << ',' << format_double(r.g_at_a) << ','
            << format_double(r.lambda_at_u) << ',' << format_double(r.lambda_at_a) << '\n';
    }
}

std::string serialize_checks(const std::vector<CheckResult>& checks) {
    json arr = json::array();
    for (const auto& c : checks) {
        arr.push_back({{"check_name", c.check_name},
                       {"status", c.passed ? "pass" : "fail"},
                       {"measured", c.measured},
                       {"tolerance", c.tolerance}});
    }
    return arr.dump(2) + "\n";
}

}  // namespace twrn::io
