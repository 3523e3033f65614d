#pragma once

// Special-function kernels used by the envelope-variance and bound formulas:
// modified Bessel functions of order 0 and 1, the Laguerre function L_{1/2}
// at negative arguments, and Q(x) = (pi/4) L_{1/2}(-x)^2 - x.
//
// Everything that multiplies e^{-x} by Bessel products is evaluated in
// exponentially scaled form, so arguments up to 1e6 (and 1e8 for the scaled
// Bessel kernels) never overflow.

namespace twrn::specialfn {

enum class Scaling { plain, exponential };

/// I_order(x) for order in {0, 1}; with Scaling::exponential returns
/// e^{-x} I_order(x). Throws Error(domain) for x < 0 and
/// Error(unsupported_order) for any other order.
double bessel_i(int order, double x, Scaling scaling = Scaling::plain);

struct ScaledBesselPair {
    double i0_scaled;  ///< e^{-x} I_0(x), in (0, 1]
    double i1_scaled;  ///< e^{-x} I_1(x), in [0, i0_scaled)
    double argument;
};

ScaledBesselPair scaled_bessel_pair(double x);

/// Argument at and below which the power series is used.
inline constexpr double kSeriesCrossover = 15.0;

/// L_{1/2}(-x) = e^{-x/2} [(1 + x) I_0(x/2) + x I_1(x/2)], x >= 0.
double laguerre_half_neg(double x);

/// Q(x) = (pi/4) L_{1/2}(-x)^2 - x, evaluated from the expanded scaled
/// Bessel products. Q(0) = pi/4 and Q decreases towards 1/2.
double q_function(double x);

}  // namespace twrn::specialfn
