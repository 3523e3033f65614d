#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include "twrn/model.hpp"
#include "twrn/optimize.hpp"

namespace twrn {

/// Received samples with self-interference removed using candidate u:
/// cleaned_i = z_i - A u t1_i, envelopes_i = |cleaned_i|.
struct ResidualView {
    std::vector<cplx> cleaned;
    std::vector<double> envelopes;
    cplx candidate;
};

ResidualView make_residuals(const ObservationBatch& batch, cplx u);

/// W_N(u): sample variance (1/(N-1) normalisation) of the cleaned envelopes.
double sample_envelope_variance(const ObservationBatch& batch, cplx u);

/// ML criterion (N-1) W_N(u) / (sigma^2 (A^2 |u| + 1)) + N log(A^2 |u| + 1).
double ml_objective(const ObservationBatch& batch, cplx u);

/// MSEV criterion; identical to sample_envelope_variance.
double msev_objective(const ObservationBatch& batch, cplx u);

/// a_s = (1 / (N A P1)) sum conj(t1_i) z_i.
cplx sample_average_initializer(const ObservationBatch& batch);

enum class Method { ml, msev };

std::string_view to_string(Method method);
/// Accepts "ml" and "msev" (case-insensitive).
Method parse_method(std::string_view text);

struct EstimateReport {
    cplx a_hat;
    double b_mag_hat = 0.0;
    std::vector<double> psi_hat;  ///< wrapped to [0, 2 pi)
    std::optional<double> phi_b_hat;
    double objective_value = 0.0;
    Method method = Method::msev;
    OptimizerStats optimizer_stats;
};

/// |b| estimate and per-sample phases implied by a given a_hat.
struct NuisanceEstimates {
    double b_mag_hat = 0.0;
    std::vector<double> psi_hat;
};

NuisanceEstimates recover_nuisance(const ObservationBatch& batch, cplx a_hat);

/// Minimises the chosen criterion with steepest descent, then recovers |b|,
/// the psi_i and, when the batch carries pilots, phi_b. A solve that runs out
/// of iterations is returned with optimizer_stats.converged == false.
EstimateReport estimate(const ObservationBatch& batch, Method method, const SolverConfig& solver);

/// Objective and gradient closures for one batch, as used by estimate().
Objective make_objective(const ObservationBatch& batch, Method method);
GradientFn make_gradient(const ObservationBatch& batch, Method method, const SolverConfig& solver);

/// Circular mean of psi_hat_i - angle(t2_i) over the pilot positions, in
/// [0, 2 pi). Throws Error(missing_pilots) without pilots.
double resolve_phase_from_pilots(const EstimateReport& report, const ObservationBatch& batch);

/// Wraps an angle to [0, 2 pi).
double wrap_two_pi(double angle);

}  // namespace twrn
