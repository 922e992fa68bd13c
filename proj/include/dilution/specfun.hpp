#pragma once

// Log-space special functions for the binomial dilution likelihoods.
//
// Every probability is carried as a natural log; -infinity encodes an
// impossible event and NaN is never returned for in-domain arguments.
// The binomial functions accept a real "number of trials" n, extending the
// combinatorial coefficient through the gamma function.

#include <span>
#include <stdexcept>

namespace dilution::specfun {

class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// ln Gamma(x) for x > 0 (Lanczos, g = 607/128).
double log_gamma(double x);

// ln Gamma(z) - Stirling's approximation, for z >= 10.
double stirling_correction(double z);

// ln Gamma(x + k) - ln Gamma(x) - k ln x, accurate when x >> k where the
// naive difference cancels. x > 0, k >= 0.
double log_rising_excess(double x, double k);

// ln Gamma(x + k) - ln Gamma(x), x > 0, k >= 0.
double log_gamma_ratio(double x, double k);

// ln B(a, b), stable when one argument is huge.
double log_beta(double a, double b);

// ln C(n, y) with real 0 <= y <= n.
double log_binomial_coeff(double n, double y);

// ln P[Y = y] for Y ~ Bi(n, p). Bi(0, p) is a point mass at 0.
double log_binomial_pmf(double y, double n, double p);

// ln P[Y > cthr] for Y ~ Bi(n, p); -inf when cthr >= n.
double log_binomial_sf(long long cthr, double n, double p);

// ln I_x(a, b), the regularized incomplete beta function.
double log_incomplete_beta(double a, double b, double x);

double log_sum_exp(std::span<const double> values);

// ln(1 - exp(v)) for v <= 0.
double log1m_exp(double v);

}  // namespace dilution::specfun
