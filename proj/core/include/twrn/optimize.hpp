#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <variant>

#include "twrn/model.hpp"

namespace twrn {

/// Partial derivatives of a real objective with respect to Re{u} and Im{u}.
struct Gradient {
    double d_re = 0.0;
    double d_im = 0.0;

    double norm() const;
    cplx as_complex() const { return {d_re, d_im}; }
};

using Objective = std::function<double(cplx)>;
using GradientFn = std::function<Gradient(cplx)>;

struct SampleAverageStart {
    friend bool operator==(const SampleAverageStart&, const SampleAverageStart&) = default;
};
using Initializer = std::variant<SampleAverageStart, cplx>;

enum class GradientMode { analytic, finite_difference };

struct SolverConfig {
    Initializer initializer = SampleAverageStart{};
    double grad_tolerance = 1e-8;
    int max_iterations = 500;
    double backtrack_alpha = 0.3;
    double backtrack_beta = 0.5;
    double initial_step = 10.0;
    /// Cap on step shrinkings in one line search.
    int max_backtracks = 80;
    double fd_step = 1e-6;
    GradientMode gradient = GradientMode::analytic;

    void validate() const;

    friend bool operator==(const SolverConfig&, const SolverConfig&) = default;
};

struct OptimizerStats {
    int iterations = 0;            ///< accepted descent steps
    long line_search_steps = 0;    ///< objective evaluations spent inside line searches
    bool converged = false;
    /// Terminated because no step could lower the objective in double
    /// precision (counted as converged).
    bool stalled = false;

    /// Mean line-search evaluations per accepted descent step.
    double line_search_per_iteration() const;
};

struct SolveResult {
    cplx argmin;
    double value = 0.0;
    OptimizerStats stats;
};

/// Steepest descent with Armijo backtracking: u <- u - t grad, where t starts
/// at config.initial_step and shrinks by beta until
/// f(u - t grad) <= f(u) - alpha t |grad|^2. Stops when |grad| <= grad_tolerance,
/// when the iteration budget runs out (converged = false), or when the line
/// search cannot decrease f at machine resolution (stalled, converged = true).
/// Throws DivergedError if the objective or gradient is non-finite at an
/// iterate.
SolveResult steepest_descent(const Objective& objective, const GradientFn& gradient, cplx start,
                             const SolverConfig& config);

/// Square lattice center + step (i, j), |i|, |j| <= floor(half_width / step).
struct GridSpec {
    cplx center{0.0, 0.0};
    double half_width = 3.0;
    double step = 1e-3;

    /// Points per axis, 2 K + 1.
    std::size_t points_per_axis() const;
    /// Requires step <= half_width and at least 9 points per axis.
    void validate() const;
};

/// Exhaustive search; ties go to the smallest |u|, then the smallest phase in
/// [0, 2 pi).
cplx grid_search(const Objective& objective, const GridSpec& grid);

/// Coarse-to-fine search on the same lattice as grid_search: the coarsest
/// level has at most max_axis_points points per axis, each finer level is a
/// factor 10 denser and spans +-2 coarse steps around the previous winner.
/// Agrees with grid_search whenever the basin of the global minimum is wider
/// than the coarse spacing.
cplx refined_grid_search(const Objective& objective, const GridSpec& grid,
                         std::size_t max_axis_points = 401);

/// Central-difference gradient with step h.
Gradient finite_difference_gradient(const Objective& objective, cplx u, double h);

enum class ObjectiveKind { ml, msev };

enum class SingularPolicy {
    /// ML gradient at |u| < 1e-12 throws Error(singular_point).
    raise,
    /// ML gradient at |u| < 1e-12 uses subgradient 0 for the |u| terms.
    subgradient,
};

/// Closed-form gradient of the ML objective or the sample envelope variance
/// with respect to (Re{u}, Im{u}). Samples whose cleaned value is exactly 0
/// contribute 0.
Gradient analytic_gradient(ObjectiveKind kind, const ObservationBatch& batch, cplx u,
                           SingularPolicy policy = SingularPolicy::raise);

}  // namespace twrn
