#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "twrn/model.hpp"

namespace twrn {

/// Large-N / high-SNR analysis of the two criteria for a fixed channel.
struct AsymptoticContext {
    SystemConfig config;
    ChannelState channel;
    double alpha = 1.0;   ///< P1 / P2
    double beta_r = 0.5;  ///< Pr / (P1 + P2)
};

AsymptoticContext make_context(const SystemConfig& config, const ChannelState& channel);

/// Non-centrality of the k-th relative phase offset between t1 and t2 for
/// residual channel v = a - u:
///   (A^2|v|^2 P1 + A^2|b|^2 P2 + 2 A^2 |v||b| sqrt(P1 P2) cos(arg v - phi_b + 2 pi k / M))
///   / (sigma^2 (A^2 |a| + 1)).
double lambda_k(const AsymptoticContext& ctx, cplx v, int k);

/// Limit of W_N(u) as N grows: the variance of |z - A u t1|.
double theoretical_variance(const AsymptoticContext& ctx, cplx u);

/// Limit of the ML criterion divided by N - 1:
///   W(u) / (sigma^2 (A^2 |u| + 1)) + log(A^2 |u| + 1).
double ml_limit_function(const AsymptoticContext& ctx, cplx u);

/// 1 - W(a) / (sigma^2 (A^2 |a| + 1)); equals Q(A^2 |b|^2 P2 / (sigma^2 (A^2|a|+1))).
double truth_bracket(const AsymptoticContext& ctx);

struct LimitDerivative {
    double d_re = 0.0;
    double d_im = 0.0;
};

/// Gradient of ml_limit_function at u = a in closed form. Nonzero whenever
/// a has a nonzero real or imaginary part, so the ML limit has no extremum
/// at the true channel. Throws Error(singular_point) for a = 0.
LimitDerivative limit_derivative_at_truth(const AsymptoticContext& ctx);

struct HighSnrRow {
    double snr_db = 0.0;
    double g_at_u = 0.0;       ///< median W_N(u) / sigma^2
    double g_at_a = 0.0;       ///< median W_N(a) / sigma^2
    double lambda_at_u = 0.0;  ///< median ML criterion at u
    double lambda_at_a = 0.0;  ///< median ML criterion at a
};

/// For each SNR (dB, ascending) sets sigma^2 = P2 / gamma with the template's
/// P1 / P2 and Pr / (P1 + P2) ratios held fixed, simulates `trials` batches
/// and reports medians. Cells use independent derived streams.
std::vector<HighSnrRow> high_snr_probe(const SystemConfig& config_template, const ChannelState& channel,
                                       cplx u, const std::vector<double>& snr_db_list, int trials,
                                       std::uint64_t master_seed);

/// 1 - (2/M)^(N-1) (M-1).
double divergence_probability(int m, std::size_t n);

/// A^2 recomputed from (alpha, beta_r, gamma): beta (1+alpha) gamma / ((1+alpha) gamma + 1).
double amplification_squared_from_ratios(double alpha, double beta_r, double gamma);

struct CheckResult {
    std::string check_name;
    bool passed = false;
    double measured = 0.0;
    double tolerance = 0.0;
};

struct VerifyOptions {
    SystemConfig config;  ///< base powers / M / N; sigma^2 taken as the operating point
    std::uint64_t seed = 1;
    int channels = 20;
    std::size_t monte_carlo_samples = 200000;
};

/// Identity, limit and convergence checks of the analysis layer: Q > 0 and
/// the Laguerre/Q identity on a log grid, the W(u) Monte-Carlo match,
/// the derivative at the truth against finite differences, and the high-SNR
/// divergence of G.
std::vector<CheckResult> run_verification_suite(const VerifyOptions& options);

}  // namespace twrn
