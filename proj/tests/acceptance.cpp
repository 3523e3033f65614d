// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "twrn/analysis.hpp"
#include "twrn/bounds.hpp"
#include "twrn/errors.hpp"
#include "twrn/estimators.hpp"
#include "twrn/experiments.hpp"
#include "twrn/io.hpp"
#include "twrn/specialfn.hpp"

using namespace twrn;

namespace {

struct Outcome {
    bool passed = false;
    std::string detail;
};

std::string fmt(const char* pattern, double a, double b = 0.0, double c = 0.0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, pattern, a, b, c);
    return buf;
}

// 1. Laguerre/Q identity, positivity and the limit 1/2.
Outcome special_function_identity() {
    double worst = 0.0;
    bool positive = true;
    for (double x = 1e-6; x <= 1e3 * (1 + 1e-12); x *= std::pow(10.0, 0.05)) {
        const double l = specialfn::laguerre_half_neg(x);
        const double q = specialfn::q_function(x);
        worst = std::max(worst, oracle::relative_error(std::numbers::pi / 4.0 * l * l - x, q));
        positive = positive && q > 0.0;
    }
    const double limit_gap = std::fabs(specialfn::q_function(100.0) - 0.5);
    return {worst <= 1e-12 && positive && limit_gap < 0.01,
            fmt("max rel err %.2e (tol 1e-12), Q>0 %g, |Q(100)-0.5| %.2e (tol 0.01)", worst, positive, limit_gap)};
}

// 2. Sample envelope variance over 1e6 samples against the closed form.
Outcome variance_law() {
    RngStream rng(20260101);
    const double sigma2_cycle[] = {1.0, 0.1, 0.01, 0.3};
    double worst = 0.0;
    for (int k = 0; k < 20; ++k) {
        SystemConfig c;
        c.sigma2 = sigma2_cycle[k % 4];
        c.n = 1000000;
        const ChannelState ch = draw_channel(rng);
        const cplx u = ch.a() + rng.complex_gaussian(0.5);
        const auto batch = simulate_batch(c, ch, rng, 0);
        const double sample = sample_envelope_variance(batch, u);
        const double theory = theoretical_variance(make_context(c, ch), u);
        worst = std::max(worst, oracle::relative_error(sample, theory));
    }
    return {worst < 0.02, fmt("max rel deviation %.4f over 20 pairs (tol 0.02)", worst)};
}

// 3. The ML limit has a nonzero slope at the truth and its minimiser is elsewhere.
Outcome inconsistency_witness() {
    RngStream rng(33);
    const SystemConfig c = SystemConfig{}.with_snr_db(10.0);
    int accepted = 0;
    int derivative_ok = 0;
    int displaced = 0;
    double worst_fd = 0.0;
    while (accepted < 50) {
        const ChannelState ch = draw_channel(rng);
        if (std::fabs(ch.a().real()) <= 0.1) continue;
        ++accepted;
        const auto ctx = make_context(c, ch);
        const auto d = limit_derivative_at_truth(ctx);
        const auto f = [&](cplx u) { return ml_limit_function(ctx, u); };
        const cplx fd = oracle::central_difference(f, ch.a(), 1e-5);
        const double rel = std::abs(cplx(d.d_re, d.d_im) - fd) / std::abs(fd);
        worst_fd = std::max(worst_fd, rel);
        const bool sign_ok = d.d_re != 0.0 && (d.d_re > 0.0) == (ch.a().real() > 0.0);
        if (sign_ok && rel < 1e-4) ++derivative_ok;

        GridSpec g;
        g.center = ch.a();
        g.half_width = 1.0;
        g.step = 1e-3;
        const cplx best = refined_grid_search(f, g);
        const double steps = std::max(std::fabs(best.real() - ch.a().real()), std::fabs(best.imag() - ch.a().imag())) / 1e-3;
        if (steps > 5.0) ++displaced;
    }
    const double frac = displaced / 50.0;
    return {derivative_ok == 50 && frac >= 0.9,
            fmt("derivative ok %g/50 (max fd rel err %.2e, tol 1e-4), argmin displaced > 5 steps in %.0f%% (need 90%%)",
                derivative_ok, worst_fd, 100.0 * frac)};
}

ExperimentSpec base_spec() {
    ExperimentSpec spec;
    spec.master_seed = 2024;
    spec.channel_realizations = 100;
    spec.crb_symbol_draws = 50;
    return spec;
}

// 4. MSEV improves with N and the ML gap widens.
Outcome consistency_trend() {
    ExperimentSpec spec = base_spec();
    spec.sweep = SweepKind::sample_size;
    spec.values = {50, 100, 200, 400};
    spec.config_template = spec.config_template.with_snr_db(15.0);
    spec.crb_symbol_draws = 5;
    const auto r = run_mse_vs_n(spec);
    bool decreasing = true;
    std::ostringstream msev;
    for (std::size_t i = 0; i < spec.values.size(); ++i) {
        const double m = r.row(spec.values[i], {Method::msev, false}).mse;
        msev << (i ? " " : "") << fmt("%.3e", m);
        if (i > 0) decreasing = decreasing && m < r.row(spec.values[i - 1], {Method::msev, false}).mse;
    }
    const auto gap = [&](double n) {
        return r.row(n, {Method::ml, false}).mse - r.row(n, {Method::msev, false}).mse;
    };
    const double g50 = gap(50), g400 = gap(400);
    return {decreasing && g400 > g50,
            "MSEV mse " + msev.str() + fmt(", gap(50) %.3e, gap(400) %.3e", g50, g400)};
}

// 5 and 10 share the SNR sweep.
ExperimentResult snr_sweep() {
    ExperimentSpec spec = base_spec();
    spec.values = {0, 5, 10, 15, 20, 25, 30};
    return run_mse_vs_snr(spec);
}

Outcome ordering_and_bound(const ExperimentResult& r) {
    bool ordered = true;
    for (double snr : {0.0, 5.0, 10.0, 15.0}) {
        ordered = ordered && r.row(snr, {Method::msev, false}).mse <= r.row(snr, {Method::ml, false}).mse;
    }
    const auto& ml = r.row(30, {Method::ml, false});
    const auto& msev = r.row(30, {Method::msev, false});
    const double rml = ml.mse / ml.crb_a_avg;
    const double rmsev = msev.mse / msev.crb_a_avg;
    const auto within = [](double ratio) { return ratio >= 0.2 && ratio <= 5.0; };
    return {ordered && within(rml) && within(rmsev),
            fmt("MSEV <= ML at 0-15 dB: %g; at 30 dB MSE/CRB ml %.3f msev %.3f (need within 5x)", ordered, rml, rmsev)};
}

Outcome iteration_economy(const ExperimentResult& r) {
    bool ok = true;
    double worst_sd = 0.0, worst_ls = 0.0;
    for (const auto& row : iteration_statistics(r)) {
        if (row.method != Method::msev) continue;
        const auto& ml = r.row(row.sweep_value, {Method::ml, false});
        const auto& ms = r.row(row.sweep_value, {Method::msev, false});
        ok = ok && ms.mean_sd_iterations <= ml.mean_sd_iterations && ms.mean_ls_iterations <= ml.mean_ls_iterations;
        worst_sd = std::max(worst_sd, ms.mean_sd_iterations / ml.mean_sd_iterations);
        worst_ls = std::max(worst_ls, ms.mean_ls_iterations / ml.mean_ls_iterations);
    }
    return {ok, fmt("max MSEV/ML ratio: SD iterations %.3f, line-search steps per iteration %.3f (need <= 1)", worst_sd,
                    worst_ls)};
}

// 6. Steepest descent against the 1e-3 grid.
Outcome optimizer_fidelity() {
    ExperimentSpec spec = base_spec();
    spec.values = {10, 20};
    spec.channel_realizations = 30;
    spec.grid_validation = true;
    spec.crb_symbol_draws = 5;
    const auto r = run_experiment(spec);
    double worst = 0.0;
    for (double snr : spec.values) {
        for (Method m : spec.methods) {
            worst = std::max(worst, oracle::relative_error(r.row(snr, {m, false}).mse, r.row(snr, {m, true}).mse));
        }
    }
    return {worst <= 0.05, fmt("max relative MSE difference %.4f (tol 0.05)", worst)};
}

// 7. Analytic gradients against central differences.
Outcome gradient_correctness() {
    RngStream rng(77);
    double worst = 0.0;
    for (int k = 0; k < 100; ++k) {
        SystemConfig c = SystemConfig{}.with_snr_db(5.0 * (k % 7));
        const ChannelState ch = draw_channel(rng);
        const auto batch = simulate_batch(c, ch, rng, 0);
        cplx u = ch.a() + rng.complex_gaussian(0.5);
        if (std::abs(u) < 0.05) u += 0.1;  // keep away from the |u| kink of the ML term
        for (auto [kind, method] : {std::pair{ObjectiveKind::ml, Method::ml}, std::pair{ObjectiveKind::msev, Method::msev}}) {
            const Gradient g = analytic_gradient(kind, batch, u);
            const cplx fd = oracle::central_difference(make_objective(batch, method), u, 1e-6);
            worst = std::max(worst, std::abs(g.as_complex() - fd) / std::abs(fd));
        }
    }
    return {worst < 1e-5, fmt("max relative error %.2e over 200 evaluations (tol 1e-5)", worst)};
}

// 8. Bound machinery.
Outcome crb_machinery() {
    RngStream rng(88);
    double worst_schur = 0.0;
    for (std::size_t n = 2; n <= 20; ++n) {
        SystemConfig c;
        c.n = n;
        const ChannelState ch = draw_channel(rng);
        const auto t1 = draw_mpsk_symbols(c.m, n, c.p1, rng);
        const auto t2 = draw_mpsk_symbols(c.m, n, c.p2, rng);
        const FimBlocks blocks = build_fim_blocks(c, ch, t1, t2);
        try {
            worst_schur = std::max(worst_schur, oracle::relative_error(crb_a(blocks), oracle::leading_trace_of_inverse(assemble_full_fim(blocks))));
        } catch (const SingularFimError&) {
        }
    }

    double worst_mcrb = 0.0;
    SystemConfig c;
    for (int k = 0; k < 100; ++k) {
        const ChannelState ch = draw_channel(rng);
        worst_mcrb = std::max(worst_mcrb, oracle::relative_error(mcrb_a(c, ch), mcrb_a_from_mfim(c, ch)));
    }

    SystemConfig small;
    small.n = 3;
    small.sigma2 = 0.3;
    const ChannelState ch3({0.7, -0.4}, {0.5, 0.8});
    const auto t1 = draw_mpsk_symbols(small.m, 3, small.p1, rng);
    const auto t2 = draw_mpsk_symbols(small.m, 3, small.p2, rng);
    const double mc = oracle::normalized_max_deviation(assemble_full_fim(build_fim_blocks(small, ch3, t1, t2)),
                                                       oracle::score_outer_product_fim(small, ch3, t1, t2, 100000, 5));

    int above = 0;
    for (int k = 0; k < 50; ++k) {
        const ChannelState ch = draw_channel(rng);
        if (averaged_crb_a(c, ch, 50, rng).mean >= mcrb_a(c, ch)) ++above;
    }
    return {worst_schur <= 1e-10 && worst_mcrb <= 1e-12 && mc <= 0.03 && above == 50,
            fmt("Schur vs inverse %.1e (tol 1e-10), MCRB forms %.1e (tol 1e-12), ", worst_schur, worst_mcrb) +
                fmt("score FIM %.4f (tol 0.03), avg CRB >= MCRB %g/50", mc, above)};
}

// 9. G at a wrong point explodes with SNR while G at the truth stays put.
Outcome high_snr_divergence() {
    SystemConfig c;
    const ChannelState ch({0.8, 0.3}, {-0.4, 0.9});
    const auto rows = high_snr_probe(c, ch, ch.a() + 0.5, {10.0, 60.0}, 50, 909);
    const double ratio = rows[1].g_at_u / rows[1].g_at_a;
    const double drift = rows[1].g_at_a / rows[0].g_at_a;
    return {ratio > 1e3 && drift <= 10.0 && drift >= 0.1,
            fmt("median G(a+0.5)/G(a) at 60 dB %.3e (need > 1e3), G(a) 60 dB / 10 dB %.3f (need within 10x)", ratio, drift)};
}

// 11. Same seed, same bytes, whatever the thread count.
Outcome determinism() {
    ExperimentSpec spec = base_spec();
    spec.values = {0, 15, 30};
    spec.channel_realizations = 20;
    spec.crb_symbol_draws = 10;
    spec.grid_validation = true;
    spec.grid.half_width_scale = 0.5;
    const auto csv = [](const ExperimentSpec& s) {
        std::ostringstream out;
        io::write_experiment_csv(out, run_experiment(s));
        return out.str();
    };
    spec.threads = 1;
    const std::string a = csv(spec);
    const std::string b = csv(spec);
    spec.threads = 3;
    const std::string d = csv(spec);
    return {a == b && a == d && !a.empty(), fmt("%g bytes; repeat identical %g, 3 threads identical %g", a.size(), a == b, a == d)};
}

}  // namespace

int main() {
    int failures = 0;
    const auto run = [&](int id, const char* name, const std::function<Outcome()>& body) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome out;
        try {
            out = body();
        } catch (const std::exception& e) {
            out = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (!out.passed) ++failures;
        std::printf("[%s] %2d %-28s %s (%.1f s)\n", out.passed ? "PASS" : "FAIL", id, name, out.detail.c_str(), secs);
        std::fflush(stdout);
    };

    run(1, "special-function identity", special_function_identity);
    run(2, "variance law", variance_law);
    run(3, "inconsistency witness", inconsistency_witness);
    run(4, "consistency trend", consistency_trend);
    ExperimentResult sweep;
    run(5, "ordering and bound approach", [&] {
        sweep = snr_sweep();
        return ordering_and_bound(sweep);
    });
    run(6, "optimizer fidelity", optimizer_fidelity);
    run(7, "gradient correctness", gradient_correctness);
    run(8, "CRB machinery", crb_machinery);
    run(9, "high-SNR divergence", high_snr_divergence);
    run(10, "iteration economy", [&] {
        if (sweep.rows.empty()) return Outcome{false, "SNR sweep unavailable"};
        return iteration_economy(sweep);
    });
    run(11, "determinism", determinism);

    std::printf("%d of 11 criteria passed\n", 11 - failures);
    return failures == 0 ? 0 : 1;
}
