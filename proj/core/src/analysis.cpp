#include "twrn/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "twrn/errors.hpp"
#include "twrn/estimators.hpp"
#include "twrn/optimize.hpp"
#include "twrn/specialfn.hpp"

namespace twrn {
namespace {

double median(std::vector<double> values) {
    if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
    const std::size_t mid = values.size() / 2;
    std::nth_element(values.begin(), values.begin() + static_cast<long>(mid), values.end());
    const double upper = values[mid];
    if (values.size() % 2 == 1) return upper;
    const double lower = *std::max_element(values.begin(), values.begin() + static_cast<long>(mid));
    return 0.5 * (lower + upper);
}

double effective_noise(const AsymptoticContext& ctx) {
    return ctx.config.effective_noise(std::abs(ctx.channel.a()));
}

}  // namespace

AsymptoticContext make_context(const SystemConfig& config, const ChannelState& channel) {
    config.validate();
    AsymptoticContext ctx;
    ctx.config = config;
    ctx.channel = channel;
    ctx.alpha = config.p1 / config.p2;
    ctx.beta_r = config.pr / (config.p1 + config.p2);
    return ctx;
}

double lambda_k(const AsymptoticContext& ctx, cplx v, int k) {
    const SystemConfig& c = ctx.config;
    const double amp2 = c.amplification() * c.amplification();
    const double abs_v = std::abs(v);
    const double abs_b = std::abs(ctx.channel.b());
    const double angle = std::arg(v) - ctx.channel.phi_b() + 2.0 * std::numbers::pi * k / c.m;
    const double numerator = amp2 * abs_v * abs_v * c.p1 + amp2 * abs_b * abs_b * c.p2 +
                             2.0 * amp2 * abs_v * abs_b * std::sqrt(c.p1 * c.p2) * std::cos(angle);
    // A squared magnitude; clip the rounding residue below zero.
    return std::max(0.0, numerator / effective_noise(ctx));
}

double theoretical_variance(const AsymptoticContext& ctx, cplx u) {
    const SystemConfig& c = ctx.config;
    const double amp2 = c.amplification() * c.amplification();
    const cplx v = ctx.channel.a() - u;
    const double abs_b = std::abs(ctx.channel.b());
    const double noise = effective_noise(ctx);
    double laguerre_sum = 0.0;
    for (int k = 0; k < c.m; ++k) laguerre_sum += specialfn::laguerre_half_neg(lambda_k(ctx, v, k));
    const double second_moment = amp2 * std::norm(v) * c.p1 + amp2 * abs_b * abs_b * c.p2 + noise;
    const double mean_sq = std::numbers::pi * noise / (4.0 * c.m * c.m) * laguerre_sum * laguerre_sum;
    return second_moment - mean_sq;
}

double ml_limit_function(const AsymptoticContext& ctx, cplx u) {
    const double amp2 = ctx.config.amplification() * ctx.config.amplification();
    const double denom = amp2 * std::abs(u) + 1.0;
    return theoretical_variance(ctx, u) / (ctx.config.sigma2 * denom) + std::log(denom);
}

double truth_bracket(const AsymptoticContext& ctx) {
    return 1.0 - theoretical_variance(ctx, ctx.channel.a()) / effective_noise(ctx);
}

LimitDerivative limit_derivative_at_truth(const AsymptoticContext& ctx) {
    const cplx a = ctx.channel.a();
    const double abs_a = std::abs(a);
    if (abs_a == 0.0) {
        throw Error(ErrorKind::singular_point, "limit_derivative_at_truth: undefined for a = 0");
    }
    const double amp2 = ctx.config.amplification() * ctx.config.amplification();
    const double factor = amp2 / (abs_a * (amp2 * abs_a + 1.0)) * truth_bracket(ctx);
    return {factor * a.real(), factor * a.imag()};
}

std::vector<HighSnrRow> high_snr_probe(const SystemConfig& config_template, const ChannelState& channel,
                                       cplx u, const std::vector<double>& snr_db_list, int trials,
                                       std::uint64_t master_seed) {
    if (trials < 1) throw Error(ErrorKind::invalid_argument, "high_snr_probe: trials must be >= 1");
    if (!std::is_sorted(snr_db_list.begin(), snr_db_list.end())) {
        throw Error(ErrorKind::invalid_argument, "high_snr_probe: snr list must be ascending");
    }
    const double alpha = config_template.p1 / config_template.p2;
    const double beta_r = config_template.pr / (config_template.p1 + config_template.p2);
    const cplx a = channel.a();

    std::vector<HighSnrRow> rows;
    rows.reserve(snr_db_list.size());
    for (std::size_t s = 0; s < snr_db_list.size(); ++s) {
        SystemConfig config = config_template;
        config.p1 = alpha * config.p2;
        config.pr = beta_r * (config.p1 + config.p2);
        config = config.with_snr_db(snr_db_list[s]);

        std::vector<double> gu, ga, lu, la;
        for (int t = 0; t < trials; ++t) {
            RngStream rng = RngStream::derive(master_seed, mix_seed(s, static_cast<std::uint64_t>(t)),
                                              StreamRole::probe);
            const ObservationBatch batch = simulate_batch(config, channel, rng, 0);
            gu.push_back(sample_envelope_variance(batch, u) / config.sigma2);
            ga.push_back(sample_envelope_variance(batch, a) / config.sigma2);
            lu.push_back(ml_objective(batch, u));
            la.push_back(ml_objective(batch, a));
        }
        rows.push_back({snr_db_list[s], median(gu), median(ga), median(lu), median(la)});
    }
    return rows;
}

double divergence_probability(int m, std::size_t n) {
    return 1.0 - std::pow(2.0 / m, static_cast<double>(n) - 1.0) * (m - 1);
}

double amplification_squared_from_ratios(double alpha, double beta_r, double gamma) {
    return beta_r * (1.0 + alpha) * gamma / ((1.0 + alpha) * gamma + 1.0);
}

std::vector<CheckResult> run_verification_suite(const VerifyOptions& options) {
    options.config.validate();
    std::vector<CheckResult> out;

    // Special-function layer on a log grid over [1e-6, 1e3].
    {
        double min_q = std::numeric_limits<double>::infinity();
        double worst_identity = 0.0;
        constexpr int points = 400;
        for (int i = 0; i <= points; ++i) {
            const double x = std::pow(10.0, -6.0 + 9.0 * i / points);
            const double q = specialfn::q_function(x);
            const double l = specialfn::laguerre_half_neg(x);
            const double rebuilt = 0.25 * std::numbers::pi * l * l - x;
            min_q = std::min(min_q, q);
            worst_identity = std::max(worst_identity, std::fabs(rebuilt - q) / std::fabs(q));
        }
        out.push_back({"q_positive_on_log_grid", min_q > 0.0, min_q, 0.0});
        out.push_back({"laguerre_q_identity", worst_identity <= 1e-12, worst_identity, 1e-12});
        const double limit_gap = std::fabs(specialfn::q_function(100.0) - 0.5);
        out.push_back({"q_limit_one_half", limit_gap < 0.01, limit_gap, 0.01});
    }

    double worst_bracket = 0.0;
    double worst_variance = 0.0;
    double worst_derivative = 0.0;
    bool signs_ok = true;
    for (int c = 0; c < options.channels; ++c) {
        RngStream rng = RngStream::derive(options.seed, static_cast<std::uint64_t>(c), StreamRole::probe);
        const ChannelState channel = draw_channel(rng);
        const AsymptoticContext ctx = make_context(options.config, channel);
        const double amp2 = options.config.amplification() * options.config.amplification();
        const double x = amp2 * std::norm(channel.b()) * options.config.p2 / ctx.config.effective_noise(std::abs(channel.a()));
        worst_bracket = std::max(worst_bracket, std::fabs(truth_bracket(ctx) - specialfn::q_function(x)));

        const cplx u = channel.a() + rng.complex_gaussian(0.5);
        SystemConfig big = options.config;
        big.n = options.monte_carlo_samples;
        const ObservationBatch batch = simulate_batch(big, channel, rng, 0);
        const double w_mc = sample_envelope_variance(batch, u);
        const double w_th = theoretical_variance(ctx, u);
        worst_variance = std::max(worst_variance, std::fabs(w_mc - w_th) / w_th);

        const LimitDerivative d = limit_derivative_at_truth(ctx);
        const Gradient fd = finite_difference_gradient(
            [&ctx](cplx v) { return ml_limit_function(ctx, v); }, channel.a(), 1e-5);
        const double scale = std::hypot(d.d_re, d.d_im);
        worst_derivative = std::max(worst_derivative, std::hypot(fd.d_re - d.d_re, fd.d_im - d.d_im) / scale);
        if (channel.a().real() != 0.0 && d.d_re * channel.a().real() <= 0.0) signs_ok = false;
        if (channel.a().imag() != 0.0 && d.d_im * channel.a().imag() <= 0.0) signs_ok = false;
    }
    out.push_back({"truth_bracket_equals_q", worst_bracket <= 1e-10, worst_bracket, 1e-10});
    out.push_back({"variance_law_monte_carlo", worst_variance <= 0.02, worst_variance, 0.02});
    out.push_back({"derivative_at_truth_vs_finite_difference", worst_derivative <= 1e-4, worst_derivative, 1e-4});
    out.push_back({"derivative_sign_follows_channel", signs_ok, signs_ok ? 1.0 : 0.0, 0.0});

    // High-SNR divergence of G at u = a + 0.5.
    {
        RngStream rng = RngStream::derive(options.seed, 0, StreamRole::channel);
        const ChannelState channel = draw_channel(rng);
        SystemConfig probe_config = options.config;
        probe_config.m = 4;
        probe_config.n = 100;
        const auto rows = high_snr_probe(probe_config, channel, channel.a() + 0.5, {10.0, 60.0}, 50, options.seed);
        const double ratio = rows[1].g_at_u / rows[1].g_at_a;
        out.push_back({"high_snr_divergence_ratio", ratio > 1e3, ratio, 1e3});
        const double drift = rows[1].g_at_a / rows[0].g_at_a;
        const bool bounded = drift < 10.0 && drift > 0.1;
        out.push_back({"high_snr_bounded_at_truth", bounded, drift, 10.0});
    }
    return out;
}

}  // namespace twrn
