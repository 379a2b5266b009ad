#pragma once

#include <stdexcept>

namespace flowcorr {

// Thrown when a result leaves the representable range of double.
struct RangeError : std::range_error {
    using std::range_error::range_error;
};

// Modified Bessel function of the second kind, K_nu(x), fractional order.
//
// Half-integer orders use the closed exponential forms. Other orders use
// Temme's series for x <= 2 and Steed's continued fraction for x > 2,
// with an order-uniform expansion taking over for very large nu.
// Symmetric in nu (K_nu = K_{-nu}). Relative error <= 1e-10 over
// x in [1e-8, 700] for the orders the Matern kernel needs.
//
// Throws std::domain_error for x <= 0 and RangeError once the result
// under/overflows double (x beyond the exp-underflow range, or tiny x at
// large order).
double bessel_k(double nu, double x);

// log K_nu(x); finite over a much wider range than bessel_k itself.
double log_bessel_k(double nu, double x);

// ln Gamma and Gamma wrappers (thread-safe, unlike std::lgamma's signgam).
double gamma_ln(double x);

} // namespace flowcorr
