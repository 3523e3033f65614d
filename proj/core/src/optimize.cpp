#include "twrn/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <vector>
#include <limits>
#include <numbers>
#include <string>

#include "twrn/errors.hpp"

namespace twrn {

double Gradient::norm() const { return std::hypot(d_re, d_im); }

double OptimizerStats::line_search_per_iteration() const {
    if (iterations == 0) return 0.0;
    return static_cast<double>(line_search_steps) / static_cast<double>(iterations);
}

void SolverConfig::validate() const {
    auto fail = [](const std::string& msg) { throw Error(ErrorKind::invalid_argument, msg); };
    if (!(grad_tolerance > 0.0)) fail("solver: grad_tolerance must be > 0");
    if (max_iterations < 1) fail("solver: max_iterations must be >= 1");
    if (!(backtrack_alpha > 0.0 && backtrack_alpha < 0.5)) fail("solver: backtrack_alpha must lie in (0, 0.5)");
    if (!(backtrack_beta > 0.0 && backtrack_beta < 1.0)) fail("solver: backtrack_beta must lie in (0, 1)");
    if (!(initial_step > 0.0)) fail("solver: initial_step must be > 0");
    if (max_backtracks < 1) fail("solver: max_backtracks must be >= 1");
    if (!(fd_step > 0.0)) fail("solver: fd_step must be > 0");
}

SolveResult steepest_descent(const Objective& objective, const GradientFn& gradient, cplx start,
                             const SolverConfig& config) {
    config.validate();
    SolveResult result;
    cplx u = start;
    double f = objective(u);
    if (!std::isfinite(f)) {
        throw DivergedError("steepest_descent: objective is not finite at the start point", u);
    }

    OptimizerStats& stats = result.stats;
    for (;;) {
        const Gradient g = gradient(u);
        if (!std::isfinite(g.d_re) || !std::isfinite(g.d_im)) {
            throw DivergedError("steepest_descent: gradient is not finite", u);
        }
        const double gnorm = g.norm();
        if (gnorm <= config.grad_tolerance) {
            stats.converged = true;
            break;
        }
        if (stats.iterations >= config.max_iterations) break;

        const double decrease_rate = config.backtrack_alpha * gnorm * gnorm;
        double t = config.initial_step;
        bool accepted = false;
        cplx trial = u;
        double f_trial = f;
        for (int k = 0; k < config.max_backtracks; ++k) {
            trial = u - t * g.as_complex();
            f_trial = objective(trial);
            ++stats.line_search_steps;
            if (std::isfinite(f_trial) && f_trial <= f - t * decrease_rate) {
                accepted = true;
                break;
            }
            t *= config.backtrack_beta;
        }
        if (!accepted || trial == u) {
            stats.stalled = true;
            stats.converged = true;
            break;
        }
        u = trial;
        f = f_trial;
        ++stats.iterations;
    }
    result.argmin = u;
    result.value = f;
    return result;
}

std::size_t GridSpec::points_per_axis() const {
    const auto k = static_cast<std::size_t>(std::floor(half_width / step + 1e-9));
    return 2 * k + 1;
}

void GridSpec::validate() const {
    if (!(step > 0.0) || !(half_width > 0.0) || !std::isfinite(half_width)) {
        throw Error(ErrorKind::invalid_argument, "grid: step and half_width must be finite and > 0");
    }
    if (step > half_width) throw Error(ErrorKind::invalid_argument, "grid: step must not exceed half_width");
    if (points_per_axis() < 9) {
        throw Error(ErrorKind::invalid_argument, "grid: at least 9 points per axis are required");
    }
    if (!std::isfinite(center.real()) || !std::isfinite(center.imag())) {
        throw Error(ErrorKind::invalid_argument, "grid: center must be finite");
    }
}

namespace {

double wrapped_phase(cplx u) {
    double p = std::arg(u);
    if (p < 0.0) p += 2.0 * std::numbers::pi;
    return p;
}

struct GridBest {
    cplx point{0.0, 0.0};
    double value = std::numeric_limits<double>::infinity();
    long i = 0;
    long j = 0;
    bool found = false;

    void offer(cplx u, double v, long ui, long uj) {
        if (std::isnan(v)) return;
        if (!found || v < value || (v == value && breaks_tie(u))) {
            point = u;
            value = v;
            i = ui;
            j = uj;
            found = true;
        }
    }

    bool breaks_tie(cplx u) const {
        const double mu = std::abs(u);
        const double mb = std::abs(point);
        if (mu != mb) return mu < mb;
        return wrapped_phase(u) < wrapped_phase(point);
    }
};

// Scans lattice indices [lo, hi] on both axes with the given index stride.
void scan(const Objective& objective, const GridSpec& grid, long lo_re, long hi_re, long lo_im,
          long hi_im, long stride, GridBest& best) {
    for (long i = lo_re; i <= hi_re; i += stride) {
        for (long j = lo_im; j <= hi_im; j += stride) {
            const cplx u = grid.center + cplx(static_cast<double>(i) * grid.step,
                                              static_cast<double>(j) * grid.step);
            best.offer(u, objective(u), i, j);
        }
    }
}

}  // namespace

cplx grid_search(const Objective& objective, const GridSpec& grid) {
    grid.validate();
    const long k = static_cast<long>(grid.points_per_axis() / 2);
    GridBest best;
    scan(objective, grid, -k, k, -k, k, 1, best);
    if (!best.found) throw Error(ErrorKind::invalid_argument, "grid_search: objective is NaN everywhere");
    return best.point;
}

cplx refined_grid_search(const Objective& objective, const GridSpec& grid,
                         std::size_t max_axis_points) {
    grid.validate();
    if (max_axis_points < 9) max_axis_points = 9;
    const long k = static_cast<long>(grid.points_per_axis() / 2);
    long stride = 1;
    while (2 * (k / stride) + 1 > static_cast<long>(max_axis_points)) stride *= 10;

    GridBest best;
    const long top = (k / stride) * stride;
    scan(objective, grid, -top, top, -top, top, stride, best);
    while (stride > 1) {
        const long window = 2 * stride;
        stride /= 10;
        const long ci = best.i;
        const long cj = best.j;
        auto clip_lo = [&](long c) { return std::max(-k, c - window); };
        auto clip_hi = [&](long c) { return std::min(k, c + window); };
        // Align the window start to the finer stride relative to index 0.
        auto align = [&](long v) {
            long r = v % stride;
            if (r < 0) r += stride;
            return r == 0 ? v : v + (stride - r);
        };
        scan(objective, grid, align(clip_lo(ci)), clip_hi(ci), align(clip_lo(cj)), clip_hi(cj),
             stride, best);
    }
    if (!best.found) {
        throw Error(ErrorKind::invalid_argument, "refined_grid_search: objective is NaN everywhere");
    }
    return best.point;
}

Gradient finite_difference_gradient(const Objective& objective, cplx u, double h) {
    const double d_re = (objective(u + cplx(h, 0.0)) - objective(u - cplx(h, 0.0))) / (2.0 * h);
    const double d_im = (objective(u + cplx(0.0, h)) - objective(u - cplx(0.0, h))) / (2.0 * h);
    return {d_re, d_im};
}

Gradient analytic_gradient(ObjectiveKind kind, const ObservationBatch& batch, cplx u,
                           SingularPolicy policy) {
    const std::size_t n = batch.size();
    if (n < 2) throw Error(ErrorKind::insufficient_samples, "analytic_gradient: need at least 2 samples");
    const double amp = batch.config.amplification();

    std::vector<double> env(n);
    std::vector<cplx> cleaned(n);
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        cleaned[i] = batch.z[i] - amp * u * batch.t1[i];
        env[i] = std::abs(cleaned[i]);
        mean += env[i];
    }
    mean /= static_cast<double>(n);

    // dS/du for S = sum_i (e_i - mean)^2; the mean's own derivative drops out.
    double ss = 0.0;
    double ds_re = 0.0;
    double ds_im = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dev = env[i] - mean;
        ss += dev * dev;
        if (env[i] == 0.0) continue;
        const cplx w = std::conj(cleaned[i]) * batch.t1[i];
        ds_re += 2.0 * dev * (-amp * w.real() / env[i]);
        ds_im += 2.0 * dev * (amp * w.imag() / env[i]);
    }

    if (kind == ObjectiveKind::msev) {
        const double scale = 1.0 / static_cast<double>(n - 1);
        return {ds_re * scale, ds_im * scale};
    }

    const double abs_u = std::abs(u);
    const double amp2 = amp * amp;
    const double sigma2 = batch.config.sigma2;
    const double denom = amp2 * abs_u + 1.0;
    double dabs_re = 0.0;
    double dabs_im = 0.0;
    if (abs_u < 1e-12) {
        if (policy == SingularPolicy::raise) {
            throw Error(ErrorKind::singular_point,
                        "analytic_gradient: the ML objective is not differentiable at u = 0; "
                        "evaluate at a perturbed point");
        }
    } else {
        dabs_re = u.real() / abs_u;
        dabs_im = u.imag() / abs_u;
    }
    const double nn = static_cast<double>(n);
    const double common = -ss * amp2 / (sigma2 * denom * denom) + nn * amp2 / denom;
    return {ds_re / (sigma2 * denom) + common * dabs_re, ds_im / (sigma2 * denom) + common * dabs_im};
}

}  // namespace twrn
