#include "twrn/model.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "twrn/errors.hpp"

namespace twrn {

double SystemConfig::amplification() const { return std::sqrt(pr / (p1 + p2 + sigma2)); }

double SystemConfig::snr() const { return p2 / sigma2; }

double SystemConfig::snr_db() const { return 10.0 * std::log10(snr()); }

double SystemConfig::effective_noise(double abs_a) const {
    const double amp = amplification();
    return sigma2 * (amp * amp * abs_a + 1.0);
}

SystemConfig SystemConfig::with_snr_db(double db) const {
    SystemConfig out = *this;
    out.sigma2 = p2 / std::pow(10.0, db / 10.0);
    return out;
}

void SystemConfig::validate() const {
    auto fail = [](const std::string& msg) { throw Error(ErrorKind::invalid_argument, msg); };
    if (!(p1 > 0.0) || !(p2 > 0.0) || !(pr > 0.0)) fail("powers p1, p2, pr must be > 0");
    if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) fail("sigma2 must be finite and > 0");
    if (m < 2 || m % 2 != 0) fail("modulation order m must be an even integer >= 2");
    if (n < 2) fail("sample count n must be >= 2");
}

std::size_t ObservationBatch::pilot_count() const {
    std::size_t count = 0;
    for (bool p : pilot_mask) count += p ? 1 : 0;
    return count;
}

std::uint64_t mix_seed(std::uint64_t state, std::uint64_t value) {
    std::uint64_t x = state ^ (value + 0x9e3779b97f4a7c15ULL + (state << 6) + (state >> 2));
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

RngStream RngStream::derive(std::uint64_t master_seed, std::uint64_t trial_index, StreamRole role) {
    std::uint64_t s = mix_seed(0x7477726e2d726e67ULL, master_seed);
    s = mix_seed(s, trial_index);
    s = mix_seed(s, static_cast<std::uint64_t>(role));
    return RngStream(s);
}

cplx RngStream::complex_gaussian(double variance) {
    const double scale = std::sqrt(0.5 * variance);
    const double re = normal_(engine_);
    const double im = normal_(engine_);
    return {scale * re, scale * im};
}

std::size_t RngStream::uniform_index(std::size_t count) {
    std::uniform_int_distribution<std::size_t> dist(0, count - 1);
    return dist(engine_);
}

double mpsk_phase(int m, int l) {
    return (2.0 * l - 1.0) * std::numbers::pi / static_cast<double>(m);
}

std::vector<cplx> draw_mpsk_symbols(int m, std::size_t n, double power, RngStream& rng) {
    if (m < 2) throw Error(ErrorKind::invalid_argument, "draw_mpsk_symbols: m must be >= 2");
    if (!(power > 0.0)) throw Error(ErrorKind::invalid_argument, "draw_mpsk_symbols: power must be > 0");
    const double amplitude = std::sqrt(power);
    std::vector<cplx> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const int l = static_cast<int>(rng.uniform_index(static_cast<std::size_t>(m))) + 1;
        out.push_back(std::polar(amplitude, mpsk_phase(m, l)));
    }
    return out;
}

ChannelState draw_channel(RngStream& rng) {
    const cplx h = rng.complex_gaussian(1.0);
    const cplx g = rng.complex_gaussian(1.0);
    return {h, g};
}

ObservationBatch simulate_batch(const SystemConfig& config, const ChannelState& channel,
                                RngStream& rng, std::size_t pilot_count, NoiseMode noise) {
    config.validate();
    if (pilot_count > config.n) {
        throw Error(ErrorKind::invalid_argument, "simulate_batch: pilot_count exceeds n");
    }
    ObservationBatch batch;
    batch.config = config;
    batch.t1 = draw_mpsk_symbols(config.m, config.n, config.p1, rng);
    batch.t2 = draw_mpsk_symbols(config.m, config.n, config.p2, rng);
    batch.z.resize(config.n);
    batch.pilot_mask.assign(config.n, false);
    for (std::size_t i = 0; i < pilot_count; ++i) batch.pilot_mask[i] = true;

    const double amp = config.amplification();
    const cplx a = channel.a();
    const cplx b = channel.b();
    const cplx h = channel.h();
    for (std::size_t i = 0; i < config.n; ++i) {
        cplx relay_noise{0.0, 0.0};
        cplx terminal_noise{0.0, 0.0};
        if (noise == NoiseMode::gaussian) {
            relay_noise = rng.complex_gaussian(config.sigma2);
            terminal_noise = rng.complex_gaussian(config.sigma2);
        }
        batch.z[i] = amp * a * batch.t1[i] + amp * b * batch.t2[i] + amp * h * relay_noise +
                     terminal_noise;
    }
    return batch;
}

}  // namespace twrn
