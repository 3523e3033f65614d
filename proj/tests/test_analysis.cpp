#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "twrn/analysis.hpp"
#include "twrn/errors.hpp"
#include "twrn/estimators.hpp"
#include "twrn/optimize.hpp"
#include "twrn/specialfn.hpp"

using namespace twrn;

namespace {

// E|mu + w| for w ~ CN(0, s2), by quadrature over the Rice density.
double rice_mean(double mu, double s2) {
    const double sd = std::sqrt(s2);
    const double hi = mu + 12.0 * sd;
    const int steps = 20000;
    const double dr = hi / steps;
    double sum = 0.0;
    for (int k = 1; k < steps; ++k) {
        const double r = k * dr;
        const double arg = 2.0 * r * mu / s2;
        // exp(-(r^2 + mu^2)/s2) I0(arg) with the growth folded into the exponent
        const double i0 = arg < 600.0 ? std::cyl_bessel_i(0.0, arg) * std::exp(-arg)
                                      : 1.0 / std::sqrt(2.0 * std::numbers::pi * arg);
        sum += r * (2.0 * r / s2) * std::exp(-(r - mu) * (r - mu) / s2) * i0;
    }
    return sum * dr;
}

// Envelope variance of z - A u t1 averaged over the M^2 equiprobable symbol pairs.
double variance_by_quadrature(const SystemConfig& c, const ChannelState& ch, cplx u) {
    const double amp = c.amplification();
    const double s2 = c.effective_noise(std::abs(ch.a()));
    double m1 = 0.0, m2 = 0.0;
    for (int l1 = 1; l1 <= c.m; ++l1) {
        for (int l2 = 1; l2 <= c.m; ++l2) {
            const cplx mean = amp * (ch.a() - u) * std::polar(std::sqrt(c.p1), mpsk_phase(c.m, l1)) +
                              amp * ch.b() * std::polar(std::sqrt(c.p2), mpsk_phase(c.m, l2));
            m1 += rice_mean(std::abs(mean), s2);
            m2 += std::norm(mean) + s2;
        }
    }
    const double k = c.m * c.m;
    return m2 / k - (m1 / k) * (m1 / k);
}

SystemConfig base(double sigma2) {
    SystemConfig c;
    c.sigma2 = sigma2;
    return c;
}

}  // namespace

TEST_CASE("theoretical variance agrees with Rice quadrature") {
    const ChannelState ch({0.6, -0.3}, {0.2, 0.9});
    for (double sigma2 : {1.0, 0.1, 0.01}) {
        const auto ctx = make_context(base(sigma2), ch);
        for (cplx u : {ch.a(), cplx(0.0, 0.0), cplx(1.0, 1.0), ch.a() + cplx(0.05, -0.02)}) {
            const double want = variance_by_quadrature(ctx.config, ch, u);
            CHECK(oracle::relative_error(theoretical_variance(ctx, u), want) < 1e-6);
        }
    }
}

TEST_CASE("theoretical variance matches long-batch sample variance") {
    SystemConfig c = base(0.2);
    c.n = 400000;
    const ChannelState ch({-0.5, 0.7}, {0.8, 0.4});
    RngStream rng(6);
    const auto batch = simulate_batch(c, ch, rng, 0);
    const auto ctx = make_context(c, ch);
    for (cplx u : {ch.a(), cplx(0.2, 0.1)}) {
        CHECK(oracle::relative_error(sample_envelope_variance(batch, u), theoretical_variance(ctx, u)) < 0.02);
    }
}

TEST_CASE("lambda_k is a non-centrality over the effective noise") {
    const ChannelState ch({0.6, -0.3}, {0.2, 0.9});
    const auto ctx = make_context(base(0.1), ch);
    const double amp2 = ctx.config.amplification() * ctx.config.amplification();
    const double s2 = ctx.config.effective_noise(std::abs(ch.a()));
    CHECK(lambda_k(ctx, {0.0, 0.0}, 0) == doctest::Approx(amp2 * std::norm(ch.b()) / s2).epsilon(1e-14));
    const cplx v(0.3, 0.2);
    for (int k = 0; k < 4; ++k) {
        const double want = std::norm(std::sqrt(amp2) * v + std::sqrt(amp2) * ch.b() *
                                                                std::polar(1.0, -2.0 * std::numbers::pi * k / 4.0)) /
                            s2;
        CHECK(lambda_k(ctx, v, k) == doctest::Approx(want).epsilon(1e-12));
    }
}

TEST_CASE("bracket at the truth equals Q") {
    for (double sigma2 : {2.0, 0.1, 1e-4}) {
        const ChannelState ch({0.3, 0.5}, {-1.0, 0.3});
        const auto ctx = make_context(base(sigma2), ch);
        const double x = lambda_k(ctx, {0.0, 0.0}, 0);
        CHECK(truth_bracket(ctx) == doctest::Approx(specialfn::q_function(x)).epsilon(1e-10));
        CHECK(truth_bracket(ctx) > 0.0);
    }
}

TEST_CASE("limit derivative at the truth against central differences") {
    const ChannelState channels[] = {ChannelState({0.8, 0.3}, {0.5, -0.6}), ChannelState({-0.4, 0.9}, {1.0, 0.1}),
                                     ChannelState({0.1, -1.1}, {0.3, 0.3})};
    for (const auto& ch : channels) {
        const auto ctx = make_context(base(0.1), ch);
        const auto d = limit_derivative_at_truth(ctx);
        const cplx fd = oracle::central_difference([&](cplx u) { return ml_limit_function(ctx, u); }, ch.a(), 1e-5);
        CHECK(std::fabs(d.d_re - fd.real()) < 1e-4 * std::max(1.0, std::fabs(fd.real())));
        CHECK(std::fabs(d.d_im - fd.imag()) < 1e-4 * std::max(1.0, std::fabs(fd.imag())));
        // sign follows Re a and Im a
        CHECK((d.d_re > 0) == (ch.a().real() > 0));
        CHECK((d.d_im > 0) == (ch.a().imag() > 0));
    }
}

TEST_CASE("limit derivative needs a nonzero channel") {
    const auto ctx = make_context(base(0.1), ChannelState({0.0, 0.0}, {1.0, 0.0}));
    try {
        limit_derivative_at_truth(ctx);
        FAIL("expected singular_point");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::singular_point);
    }
}

TEST_CASE("ML limit function composes variance and log term") {
    const ChannelState ch({0.3, 0.4}, {0.6, 0.6});
    const auto ctx = make_context(base(0.1), ch);
    const cplx u(0.5, 0.0);
    const double d = ctx.config.amplification() * ctx.config.amplification() * 0.5 + 1.0;
    CHECK(ml_limit_function(ctx, u) ==
          doctest::Approx(theoretical_variance(ctx, u) / (0.1 * d) + std::log(d)).epsilon(1e-14));
}

TEST_CASE("context ratios") {
    SystemConfig c;
    c.p1 = 2.0;
    c.p2 = 1.0;
    c.pr = 1.5;
    c.sigma2 = 0.05;
    const auto ctx = make_context(c, ChannelState{});
    CHECK(ctx.alpha == doctest::Approx(2.0));
    CHECK(ctx.beta_r == doctest::Approx(0.5));
    const double amp = c.amplification();
    CHECK(amplification_squared_from_ratios(ctx.alpha, ctx.beta_r, c.snr()) == doctest::Approx(amp * amp).epsilon(1e-14));
}

TEST_CASE("divergence probability") {
    CHECK(divergence_probability(4, 11) == doctest::Approx(0.9970703125).epsilon(1e-15));
    CHECK(divergence_probability(2, 5) == doctest::Approx(1.0 - 1.0 * 1.0).epsilon(1e-15));
    CHECK(divergence_probability(4, 2) == doctest::Approx(1.0 - 0.5 * 3.0));
}

TEST_CASE("high-SNR probe: G at a wrong point diverges, at the truth it stays bounded") {
    SystemConfig c;
    c.n = 100;
    const ChannelState ch({0.7, 0.2}, {0.4, -0.8});
    const auto rows = high_snr_probe(c, ch, ch.a() + cplx(0.1, 0.05), {10, 30, 50, 70}, 20, 9);
    REQUIRE(rows.size() == 4);
    CHECK(rows.back().g_at_u / rows.front().g_at_u > 1e3);
    for (std::size_t i = 1; i < rows.size(); ++i) {
        CHECK(rows[i].g_at_u > rows[i - 1].g_at_u);
        CHECK(rows[i].snr_db > rows[i - 1].snr_db);
    }
    for (const auto& r : rows) CHECK(r.g_at_a < 10.0);
    const auto again = high_snr_probe(c, ch, ch.a() + cplx(0.1, 0.05), {10, 30, 50, 70}, 20, 9);
    CHECK(again.back().g_at_u == rows.back().g_at_u);
}

TEST_CASE("verification suite passes at a default operating point") {
    VerifyOptions opt;
    opt.monte_carlo_samples = 100000;
    opt.channels = 8;
    const auto checks = run_verification_suite(opt);
    CHECK(checks.size() >= 9);
    for (const auto& check : checks) {
        INFO(check.check_name << " measured " << check.measured << " tolerance " << check.tolerance);
        CHECK(check.passed);
    }
}

TEST_CASE("lambda_k special cases and mean over k") {
    const auto ctx = make_context(base(0.1), ChannelState({0.6, -0.3}, {0.2, 0.9}));
    const double amp2 = ctx.config.amplification() * ctx.config.amplification();
    const double s2 = ctx.config.effective_noise(std::abs(ctx.channel.a()));
    const cplx v(-0.4, 0.25);
    double mean = 0.0;
    for (int k = 0; k < 4; ++k) mean += lambda_k(ctx, v, k) / 4.0;
    CHECK(mean == doctest::Approx((amp2 * std::norm(v) + amp2 * std::norm(ctx.channel.b())) / s2).epsilon(1e-12));

    const auto no_b = make_context(base(0.1), ChannelState({0.6, -0.3}, {0.0, 0.0}));
    const double s2b = no_b.config.effective_noise(std::abs(no_b.channel.a()));
    for (int k = 0; k < 4; ++k) CHECK(lambda_k(no_b, v, k) == doctest::Approx(amp2 * std::norm(v) / s2b).epsilon(1e-14));
}

TEST_CASE("W(a) is the effective noise times 1 - Q") {
    const ChannelState ch({-0.7, 0.5}, {0.3, 0.3});
    const auto ctx = make_context(base(0.05), ch);
    const double s2 = ctx.config.effective_noise(std::abs(ch.a()));
    const double x = lambda_k(ctx, {0.0, 0.0}, 0);
    CHECK(theoretical_variance(ctx, ch.a()) == doctest::Approx(s2 * (1.0 - specialfn::q_function(x))).epsilon(1e-12));
}

TEST_CASE("W has its minimum at the true channel") {
    RngStream rng(31);
    const ChannelState ch({0.5, 0.8}, {-0.6, 0.4});
    const auto ctx = make_context(base(0.1), ch);
    const double at_truth = theoretical_variance(ctx, ch.a());
    std::uniform_real_distribution<double> radius(0.01, 1.0), angle(0.0, 2.0 * std::numbers::pi);
    for (int i = 0; i < 100; ++i) {
        const cplx delta = std::polar(radius(rng.engine()), angle(rng.engine()));
        CHECK(theoretical_variance(ctx, ch.a() + delta) > at_truth);
    }
}

TEST_CASE("ML limit function: value at the origin and Monte-Carlo agreement") {
    const ChannelState ch({0.4, 0.3}, {0.9, -0.2});
    SystemConfig c = base(0.1);
    const auto ctx = make_context(c, ch);
    CHECK(ml_limit_function(ctx, {0.0, 0.0}) == doctest::Approx(theoretical_variance(ctx, {0.0, 0.0}) / 0.1).epsilon(1e-14));

    c.n = 1000000;
    RngStream rng(12);
    const auto batch = simulate_batch(c, ch, rng, 0);
    for (cplx u : {cplx(0.3, 0.2), ch.a(), cplx(-0.5, 0.1)}) {
        const double y = ml_objective(batch, u) / static_cast<double>(c.n - 1);
        CHECK(oracle::relative_error(y, ml_limit_function(ctx, u)) < 0.02);
    }
}

TEST_CASE("ML limit function is not minimised at the truth") {
    const ChannelState ch({0.7, 0.3}, {0.5, 0.6});
    const auto ctx = make_context(base(0.1), ch);
    GridSpec g;
    g.center = ch.a();
    g.half_width = 0.5;
    g.step = 1e-3;
    const cplx best = refined_grid_search([&](cplx u) { return ml_limit_function(ctx, u); }, g);
    CHECK(std::abs(best - ch.a()) > 5e-3);
}

TEST_CASE("purely imaginary a has no real derivative component") {
    const cplx h = std::polar(1.1, std::numbers::pi / 4.0);
    const ChannelState ch(h, {0.4, 0.2});
    REQUIRE(std::fabs(ch.a().real()) < 1e-15);
    const auto d = limit_derivative_at_truth(make_context(base(0.1), ch));
    CHECK(std::fabs(d.d_re) < 1e-14);
    CHECK(d.d_im != 0.0);
}

TEST_CASE("bracket equals Q to 1e-12 and the derivative matches to 1e-5") {
    RngStream rng(4);
    for (int i = 0; i < 20; ++i) {
        const ChannelState ch = draw_channel(rng);
        const auto ctx = make_context(base(0.1), ch);
        CHECK(oracle::relative_error(truth_bracket(ctx), specialfn::q_function(lambda_k(ctx, {0.0, 0.0}, 0))) < 1e-12);
        const auto d = limit_derivative_at_truth(ctx);
        const cplx fd = oracle::central_difference([&](cplx u) { return ml_limit_function(ctx, u); }, ch.a(), 1e-5);
        CHECK(std::abs(cplx(d.d_re, d.d_im) - fd) / std::abs(fd) < 1e-5);
    }
}
