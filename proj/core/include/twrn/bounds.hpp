#pragma once

#include <cstddef>
#include <span>

#include <Eigen/Dense>

#include "twrn/model.hpp"

namespace twrn {

/// Fisher information for theta = [Re a, Im a, |b|, psi_1 .. psi_N] in block
/// form [[A, B], [B^T, C]], with C diagonal.
struct FimBlocks {
    Eigen::Matrix2d block_a;
    Eigen::Matrix<double, 2, Eigen::Dynamic> block_b;  ///< 2 x (N + 1)
    Eigen::VectorXd block_c_diag;                      ///< N + 1

    std::size_t n() const { return static_cast<std::size_t>(block_c_diag.size()) - 1; }
};

/// Throws Error(degenerate_parametrization) when b = 0 and
/// Error(singular_point) when a = 0.
FimBlocks build_fim_blocks(const SystemConfig& config, const ChannelState& channel,
                           std::span<const cplx> t1, std::span<const cplx> t2);

/// Dense (N + 3) x (N + 3) FIM assembled from the blocks.
Eigen::MatrixXd assemble_full_fim(const FimBlocks& blocks);

/// tr((A - B C^{-1} B^T)^{-1}). Throws SingularFimError carrying the
/// condition number of the Schur complement when it is not positive definite.
double crb_a(const FimBlocks& blocks);

/// Modified FIM over [Re a, Im a, |b|]: the expectation of the leading 3 x 3
/// FIM block over the data symbols.
Eigen::Matrix3d modified_fim(const SystemConfig& config, const ChannelState& channel);

/// Closed-form modified bound on E|a_hat - a|^2.
double mcrb_a(const SystemConfig& config, const ChannelState& channel);

/// Same quantity by inverting modified_fim().
double mcrb_a_from_mfim(const SystemConfig& config, const ChannelState& channel);

struct AveragedCrb {
    double mean = 0.0;
    double standard_error = 0.0;
    std::size_t draws_used = 0;
    std::size_t singular_draws = 0;
};

/// CRB_a averaged over independent (t1, t2) draws. Singular draws are skipped
/// and counted; more than 1% singular throws SingularFimError.
AveragedCrb averaged_crb_a(const SystemConfig& config, const ChannelState& channel,
                           std::size_t symbol_draws, RngStream& rng);

struct BoundReport {
    double crb_a = 0.0;
    double mcrb_a = 0.0;
    std::size_t n = 0;
    ChannelState channel;
};

}  // namespace twrn
