#include "twrn/bounds.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "twrn/errors.hpp"

namespace twrn {
namespace {

// The (Re a, Im a) block shared by the FIM and the modified FIM.
Eigen::Matrix2d channel_block(const SystemConfig& config, const ChannelState& channel) {
    const cplx a = channel.a();
    const double abs_a = std::abs(a);
    if (abs_a == 0.0) throw Error(ErrorKind::singular_point, "FIM: a = 0 makes the |a| terms undefined");
    const double amp2 = config.amplification() * config.amplification();
    const double denom = amp2 * abs_a + 1.0;
    const double nn = static_cast<double>(config.n);
    const double mean_term = 2.0 * amp2 * nn * config.p1 / (config.sigma2 * denom);
    const double var_scale = amp2 * amp2 * nn / (abs_a * abs_a * denom * denom);
    Eigen::Matrix2d out;
    out(0, 0) = mean_term + var_scale * a.real() * a.real();
    out(1, 1) = mean_term + var_scale * a.imag() * a.imag();
    out(0, 1) = out(1, 0) = var_scale * a.real() * a.imag();
    return out;
}

double symmetric_condition(const Eigen::Matrix2d& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(m, Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues()(0);
    const double hi = es.eigenvalues()(1);
    if (lo <= 0.0) return std::numeric_limits<double>::infinity();
    return hi / lo;
}

}  // namespace

FimBlocks build_fim_blocks(const SystemConfig& config, const ChannelState& channel,
                           std::span<const cplx> t1, std::span<const cplx> t2) {
    config.validate();
    const std::size_t n = config.n;
    if (t1.size() != n || t2.size() != n) {
        throw Error(ErrorKind::invalid_argument, "build_fim_blocks: symbol vectors must have length n");
    }
    const cplx b = channel.b();
    const double abs_b = std::abs(b);
    if (abs_b == 0.0) {
        throw Error(ErrorKind::degenerate_parametrization, "build_fim_blocks: b = 0 leaves the phases unidentifiable");
    }

    FimBlocks blocks;
    blocks.block_a = channel_block(config, channel);

    const double amp2 = config.amplification() * config.amplification();
    const double scale = 2.0 * amp2 / config.effective_noise(std::abs(channel.a()));
    blocks.block_b.resize(2, static_cast<Eigen::Index>(n + 1));
    cplx cross{0.0, 0.0};
    for (std::size_t i = 0; i < n; ++i) cross += std::conj(t1[i]) * t2[i];
    cross *= std::polar(1.0, channel.phi_b());
    blocks.block_b(0, 0) = scale * cross.real();
    blocks.block_b(1, 0) = scale * cross.imag();
    for (std::size_t i = 0; i < n; ++i) {
        const cplx w = std::conj(b) * t1[i] * std::conj(t2[i]);
        const auto col = static_cast<Eigen::Index>(i + 1);
        blocks.block_b(0, col) = scale * w.imag();
        blocks.block_b(1, col) = scale * w.real();
    }

    blocks.block_c_diag.resize(static_cast<Eigen::Index>(n + 1));
    blocks.block_c_diag(0) = scale * static_cast<double>(n) * config.p2;
    blocks.block_c_diag.tail(static_cast<Eigen::Index>(n)).setConstant(scale * abs_b * abs_b * config.p2);
    return blocks;
}

Eigen::MatrixXd assemble_full_fim(const FimBlocks& blocks) {
    const auto m = blocks.block_c_diag.size();
    Eigen::MatrixXd full = Eigen::MatrixXd::Zero(m + 2, m + 2);
    full.topLeftCorner<2, 2>() = blocks.block_a;
    full.topRightCorner(2, m) = blocks.block_b;
    full.bottomLeftCorner(m, 2) = blocks.block_b.transpose();
    full.bottomRightCorner(m, m).diagonal() = blocks.block_c_diag;
    return full;
}

double crb_a(const FimBlocks& blocks) {
    const Eigen::VectorXd c_inv = blocks.block_c_diag.cwiseInverse();
    const Eigen::Matrix2d schur =
        blocks.block_a - blocks.block_b * c_inv.asDiagonal() * blocks.block_b.transpose();
    const double cond = symmetric_condition(schur);
    if (!std::isfinite(cond) || cond > 1e14) {
        throw SingularFimError("crb_a: Schur complement is singular (condition number " +
                                   std::to_string(cond) + ")",
                               cond);
    }
    return schur.inverse().trace();
}

Eigen::Matrix3d modified_fim(const SystemConfig& config, const ChannelState& channel) {
    config.validate();
    Eigen::Matrix3d out = Eigen::Matrix3d::Zero();
    out.topLeftCorner<2, 2>() = channel_block(config, channel);
    const double amp2 = config.amplification() * config.amplification();
    out(2, 2) = 2.0 * amp2 * static_cast<double>(config.n) * config.p2 /
                config.effective_noise(std::abs(channel.a()));
    return out;
}

double mcrb_a(const SystemConfig& config, const ChannelState& channel) {
    config.validate();
    const double amp2 = config.amplification() * config.amplification();
    const double d = amp2 * std::abs(channel.a()) + 1.0;
    const double s2 = config.sigma2;
    const double p1 = config.p1;
    const double nn = static_cast<double>(config.n);
    const double num = 4.0 * s2 * p1 * d * d + s2 * s2 * amp2 * d;
    const double den = 4.0 * nn * amp2 * p1 * p1 * d + 2.0 * nn * s2 * amp2 * amp2 * p1;
    return num / den;
}

double mcrb_a_from_mfim(const SystemConfig& config, const ChannelState& channel) {
    const Eigen::Matrix3d inv = modified_fim(config, channel).inverse();
    return inv(0, 0) + inv(1, 1);
}

AveragedCrb averaged_crb_a(const SystemConfig& config, const ChannelState& channel,
                           std::size_t symbol_draws, RngStream& rng) {
    if (symbol_draws < 1) throw Error(ErrorKind::invalid_argument, "averaged_crb_a: symbol_draws must be >= 1");
    AveragedCrb out;
    double sum = 0.0;
    double sum_sq = 0.0;
    double worst_cond = 0.0;
    for (std::size_t d = 0; d < symbol_draws; ++d) {
        const auto t1 = draw_mpsk_symbols(config.m, config.n, config.p1, rng);
        const auto t2 = draw_mpsk_symbols(config.m, config.n, config.p2, rng);
        try {
            const double v = crb_a(build_fim_blocks(config, channel, t1, t2));
            sum += v;
            sum_sq += v * v;
            ++out.draws_used;
        } catch (const SingularFimError& e) {
            ++out.singular_draws;
            worst_cond = std::max(worst_cond, e.condition_number());
        }
    }
    if (static_cast<double>(out.singular_draws) > 0.01 * static_cast<double>(symbol_draws)) {
        throw SingularFimError("averaged_crb_a: " + std::to_string(out.singular_draws) + " of " +
                                   std::to_string(symbol_draws) + " symbol draws gave a singular FIM",
                               worst_cond);
    }
    const double k = static_cast<double>(out.draws_used);
    out.mean = sum / k;
    if (out.draws_used > 1) {
        const double var = std::max(0.0, (sum_sq - k * out.mean * out.mean) / (k - 1.0));
        out.standard_error = std::sqrt(var / k);
    }
    return out;
}

}  // namespace twrn
