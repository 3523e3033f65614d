#include "twrn/estimators.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>
#include <string>

#include "twrn/errors.hpp"

namespace twrn {
namespace {

void require_samples(const ObservationBatch& batch, std::size_t minimum, const char* who) {
    if (batch.size() < minimum) {
        throw Error(ErrorKind::insufficient_samples,
                    std::string(who) + ": need at least " + std::to_string(minimum) + " samples");
    }
    if (batch.t1.size() != batch.size()) {
        throw Error(ErrorKind::invalid_argument, std::string(who) + ": t1 and z lengths differ");
    }
}

double envelope_sum_of_squares(const ObservationBatch& batch, cplx u) {
    const double amp = batch.config.amplification();
    const std::size_t n = batch.size();
    // Two passes over envelopes shifted by the first one, so identical
    // envelopes give exactly zero. The envelopes are recomputed, not stored.
    const double shift = std::abs(batch.z[0] - amp * u * batch.t1[0]);
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += std::abs(batch.z[i] - amp * u * batch.t1[i]) - shift;
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dev = std::abs(batch.z[i] - amp * u * batch.t1[i]) - shift - mean;
        ss += dev * dev;
    }
    return ss;
}

}  // namespace

double wrap_two_pi(double angle) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    double w = std::fmod(angle, two_pi);
    if (w < 0.0) w += two_pi;
    if (w >= two_pi) w = 0.0;
    return w;
}

ResidualView make_residuals(const ObservationBatch& batch, cplx u) {
    const double amp = batch.config.amplification();
    ResidualView view;
    view.candidate = u;
    view.cleaned.resize(batch.size());
    view.envelopes.resize(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
        view.cleaned[i] = batch.z[i] - amp * u * batch.t1[i];
        view.envelopes[i] = std::abs(view.cleaned[i]);
    }
    return view;
}

double sample_envelope_variance(const ObservationBatch& batch, cplx u) {
    require_samples(batch, 2, "sample_envelope_variance");
    return envelope_sum_of_squares(batch, u) / static_cast<double>(batch.size() - 1);
}

double ml_objective(const ObservationBatch& batch, cplx u) {
    require_samples(batch, 2, "ml_objective");
    const double amp = batch.config.amplification();
    const double denom = amp * amp * std::abs(u) + 1.0;
    const double ss = envelope_sum_of_squares(batch, u);
    return ss / (batch.config.sigma2 * denom) + static_cast<double>(batch.size()) * std::log(denom);
}

double msev_objective(const ObservationBatch& batch, cplx u) { return sample_envelope_variance(batch, u); }

cplx sample_average_initializer(const ObservationBatch& batch) {
    require_samples(batch, 1, "sample_average_initializer");
    cplx acc{0.0, 0.0};
    for (std::size_t i = 0; i < batch.size(); ++i) acc += std::conj(batch.t1[i]) * batch.z[i];
    const double scale = static_cast<double>(batch.size()) * batch.config.amplification() * batch.config.p1;
    return acc / scale;
}

std::string_view to_string(Method method) { return method == Method::ml ? "ml" : "msev"; }

Method parse_method(std::string_view text) {
    std::string lower(text);
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (lower == "ml") return Method::ml;
    if (lower == "msev") return Method::msev;
    throw Error(ErrorKind::invalid_argument, "unknown method '" + std::string(text) + "'");
}

NuisanceEstimates recover_nuisance(const ObservationBatch& batch, cplx a_hat) {
    const ResidualView view = make_residuals(batch, a_hat);
    NuisanceEstimates out;
    double envelope_sum = 0.0;
    for (double e : view.envelopes) envelope_sum += e;
    const double amp = batch.config.amplification();
    out.b_mag_hat = envelope_sum / (static_cast<double>(batch.size()) * amp * std::sqrt(batch.config.p2));
    out.psi_hat.resize(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
        // angle(0) is taken as 0.
        out.psi_hat[i] = view.envelopes[i] == 0.0 ? 0.0 : wrap_two_pi(std::arg(view.cleaned[i]));
    }
    return out;
}

Objective make_objective(const ObservationBatch& batch, Method method) {
    if (method == Method::ml) return [&batch](cplx u) { return ml_objective(batch, u); };
    return [&batch](cplx u) { return msev_objective(batch, u); };
}

GradientFn make_gradient(const ObservationBatch& batch, Method method, const SolverConfig& solver) {
    const ObjectiveKind kind = method == Method::ml ? ObjectiveKind::ml : ObjectiveKind::msev;
    if (solver.gradient == GradientMode::finite_difference) {
        Objective f = make_objective(batch, method);
        const double h = solver.fd_step;
        return [f, h](cplx u) { return finite_difference_gradient(f, u, h); };
    }
    return [&batch, kind](cplx u) { return analytic_gradient(kind, batch, u, SingularPolicy::subgradient); };
}

EstimateReport estimate(const ObservationBatch& batch, Method method, const SolverConfig& solver) {
    require_samples(batch, 2, "estimate");
    solver.validate();
    const cplx start = std::holds_alternative<cplx>(solver.initializer)
                           ? std::get<cplx>(solver.initializer)
                           : sample_average_initializer(batch);

    const SolveResult solved =
        steepest_descent(make_objective(batch, method), make_gradient(batch, method, solver), start, solver);

    EstimateReport report;
    report.method = method;
    report.a_hat = solved.argmin;
    report.objective_value = solved.value;
    report.optimizer_stats = solved.stats;
    NuisanceEstimates nuisance = recover_nuisance(batch, report.a_hat);
    report.b_mag_hat = nuisance.b_mag_hat;
    report.psi_hat = std::move(nuisance.psi_hat);
    if (batch.pilot_count() > 0) report.phi_b_hat = resolve_phase_from_pilots(report, batch);
    return report;
}

double resolve_phase_from_pilots(const EstimateReport& report, const ObservationBatch& batch) {
    double s = 0.0;
    double c = 0.0;
    std::size_t used = 0;
    for (std::size_t i = 0; i < batch.pilot_mask.size(); ++i) {
        if (!batch.pilot_mask[i]) continue;
        if (i >= report.psi_hat.size() || i >= batch.t2.size()) {
            throw Error(ErrorKind::invalid_argument, "resolve_phase_from_pilots: report and batch lengths differ");
        }
        const double diff = report.psi_hat[i] - std::arg(batch.t2[i]);
        s += std::sin(diff);
        c += std::cos(diff);
        ++used;
    }
    if (used == 0) throw Error(ErrorKind::missing_pilots, "resolve_phase_from_pilots: batch has no pilots");
    return wrap_two_pi(std::atan2(s, c));
}

}  // namespace twrn
