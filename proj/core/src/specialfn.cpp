#include "twrn/specialfn.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "twrn/errors.hpp"

namespace twrn::specialfn {
namespace {

void require_nonnegative(double x, const char* who) {
    if (!(x >= 0.0)) {
        throw Error(ErrorKind::domain, std::string(who) + ": argument must be >= 0, got " +
                                           std::to_string(x));
    }
}

// Unscaled power series. All terms are positive, so there is no cancellation.
double series(int order, double x) {
    const double q = 0.25 * x * x;
    double term = order == 0 ? 1.0 : 0.5 * x;
    double sum = term;
    for (int k = 1; k < 500; ++k) {
        term *= q / (static_cast<double>(k) * static_cast<double>(k + order));
        sum += term;
        if (term <= 1e-17 * sum) break;
    }
    return sum;
}

// e^{-x} I_order(x) from the large-argument expansion
//   e^x / sqrt(2 pi x) * sum_k prod_{j<=k} ((2j-1)^2 - mu) / (k! (8x)^k),  mu = 4 order^2,
// truncated at its smallest term.
double asymptotic_scaled(int order, double x) {
    const double mu = 4.0 * order * order;
    double term = 1.0;
    double sum = 1.0;
    double previous = 1.0;
    for (int k = 1; k < 200; ++k) {
        const double odd = 2.0 * k - 1.0;
        term *= (odd * odd - mu) / (8.0 * x * k);
        const double magnitude = std::fabs(term);
        if (magnitude >= previous) break;
        sum += term;
        if (magnitude <= 1e-17 * std::fabs(sum)) break;
        previous = magnitude;
    }
    return sum / std::sqrt(2.0 * std::numbers::pi * x);
}

double scaled(int order, double x) {
    if (x <= kSeriesCrossover) return std::exp(-x) * series(order, x);
    return asymptotic_scaled(order, x);
}

}  // namespace

double bessel_i(int order, double x, Scaling scaling) {
    if (order != 0 && order != 1) {
        throw Error(ErrorKind::unsupported_order,
                    "bessel_i: only orders 0 and 1 are supported, got " + std::to_string(order));
    }
    require_nonnegative(x, "bessel_i");
    if (scaling == Scaling::exponential) return scaled(order, x);
    if (x <= kSeriesCrossover) return series(order, x);
    return asymptotic_scaled(order, x) * std::exp(x);
}

ScaledBesselPair scaled_bessel_pair(double x) {
    require_nonnegative(x, "scaled_bessel_pair");
    return {scaled(0, x), scaled(1, x), x};
}

double laguerre_half_neg(double x) {
    require_nonnegative(x, "laguerre_half_neg");
    const auto p = scaled_bessel_pair(0.5 * x);
    return (1.0 + x) * p.i0_scaled + x * p.i1_scaled;
}

double q_function(double x) {
    require_nonnegative(x, "q_function");
    const auto p = scaled_bessel_pair(0.5 * x);
    const double i0 = p.i0_scaled;
    const double i1 = p.i1_scaled;
    const double bracket = (1.0 + x) * (1.0 + x) * i0 * i0 + 2.0 * x * (1.0 + x) * i0 * i1 +
                           x * x * i1 * i1;
    return 0.25 * std::numbers::pi * bracket - x;
}

}  // namespace twrn::specialfn
