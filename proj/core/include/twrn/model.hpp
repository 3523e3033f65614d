#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

namespace twrn {

using cplx = std::complex<double>;

/// Powers, noise level, modulation order and block length of one
/// amplify-and-forward two-way relay link.
struct SystemConfig {
    double p1 = 1.0;      ///< transmit power of T1
    double p2 = 1.0;      ///< transmit power of T2
    double pr = 1.0;      ///< relay power
    double sigma2 = 0.1;  ///< per-hop noise variance
    int m = 4;            ///< PSK order, even, >= 2
    std::size_t n = 100;  ///< samples per block, >= 2

    /// A = sqrt(Pr / (P1 + P2 + sigma^2)); keeps the relay's long-term power at Pr.
    double amplification() const;
    /// Transmit SNR gamma = P2 / sigma^2 (linear).
    double snr() const;
    double snr_db() const;
    /// Effective noise variance seen at T1 for channel magnitude |a|:
    /// sigma^2 (A^2 |a| + 1).
    double effective_noise(double abs_a) const;

    /// Same config with sigma^2 set so that snr_db() == db.
    SystemConfig with_snr_db(double db) const;

    /// Throws Error(invalid_argument) when a field is out of range.
    void validate() const;

    friend bool operator==(const SystemConfig&, const SystemConfig&) = default;
};

/// Reciprocal flat-fading channel pair; a = h^2 and b = g h are derived.
class ChannelState {
public:
    ChannelState() = default;
    ChannelState(cplx h, cplx g) : h_(h), g_(g), a_(h * h), b_(g * h) {}

    cplx h() const { return h_; }
    cplx g() const { return g_; }
    cplx a() const { return a_; }
    cplx b() const { return b_; }
    /// angle of b in (-pi, pi]
    double phi_b() const { return std::arg(b_); }

    friend bool operator==(const ChannelState&, const ChannelState&) = default;

private:
    cplx h_{1.0, 0.0};
    cplx g_{1.0, 0.0};
    cplx a_{1.0, 0.0};
    cplx b_{1.0, 0.0};
};

/// One block of N received samples at T1 together with the symbols that
/// produced them. t2 is ground truth only; estimators read it exclusively at
/// pilot positions.
struct ObservationBatch {
    std::vector<cplx> t1;
    std::vector<cplx> t2;
    std::vector<cplx> z;
    std::vector<bool> pilot_mask;
    SystemConfig config;

    std::size_t size() const { return z.size(); }
    std::size_t pilot_count() const;
};

enum class StreamRole : std::uint64_t {
    channel = 1,
    batch = 2,
    crb_symbols = 3,
    probe = 4,
    generic = 5,
};

/// Seeded random stream. Streams are derived from (master seed, trial index,
/// role) by hashing so independent trials can be generated in any order.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed) : engine_(seed) {}

    static RngStream derive(std::uint64_t master_seed, std::uint64_t trial_index, StreamRole role);

    /// CN(0, variance): real and imaginary parts each N(0, variance / 2).
    cplx complex_gaussian(double variance);
    /// Uniform integer in [0, count).
    std::size_t uniform_index(std::size_t count);

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

/// splitmix64-based mixing used for stream derivation and fingerprints.
std::uint64_t mix_seed(std::uint64_t state, std::uint64_t value);

/// Phase of the l-th M-PSK point, (2l - 1) pi / M for l = 1..M.
double mpsk_phase(int m, int l);

std::vector<cplx> draw_mpsk_symbols(int m, std::size_t n, double power, RngStream& rng);

/// h, g ~ CN(0, 1), independent.
ChannelState draw_channel(RngStream& rng);

enum class NoiseMode { gaussian, noiseless };

/// z_i = A a t1_i + A b t2_i + A h n_i + eta_i with n, eta ~ CN(0, sigma^2).
/// The first pilot_count positions are flagged as pilots.
ObservationBatch simulate_batch(const SystemConfig& config, const ChannelState& channel,
                                RngStream& rng, std::size_t pilot_count,
                                NoiseMode noise = NoiseMode::gaussian);

}  // namespace twrn
