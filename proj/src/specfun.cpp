#include "dilution/specfun.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>

namespace dilution::specfun {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kLnSqrt2Pi = 0.91893853320467274178;  // ln sqrt(2 pi)
constexpr double kLn2Pi = 1.83787706640934548356;

// Godfrey's coefficients for g = 607/128.
constexpr double kLanczosG = 607.0 / 128.0;
constexpr std::array<double, 15> kLanczos{
    0.99999999999999709182,     57.156235665862923517,     -59.597960355475491248,
    14.136097974741747174,      -0.49191381609762019978,   .33994649984811888699e-4,
    .46523628927048575665e-4,   -.98374475304879564677e-4, .15808870322491248884e-3,
    -.21026444172410488319e-3,  .21743961811521264320e-3,  -.16431810653676389022e-3,
    .84418223983852743293e-4,   -.26190838401581408670e-4, .36899182659531622704e-5};

double lanczos_log_gamma(double x) {
    x -= 1.0;
    double sum = kLanczos[0];
    for (std::size_t i = 1; i < kLanczos.size(); ++i) sum += kLanczos[i] / (x + static_cast<double>(i));
    const double t = x + kLanczosG + 0.5;
    return kLnSqrt2Pi + (x + 0.5) * std::log(t) - t + std::log(sum);
}

double stirling_series(double z) {
    const double r = 1.0 / z;
    const double r2 = r * r;
    return r * (1.0 / 12.0 -
                r2 * (1.0 / 360.0 - r2 * (1.0 / 1260.0 - r2 * (1.0 / 1680.0 - r2 / 1188.0))));
}

// ln Gamma(n + 1) - [(n + 1/2) ln n - n + ln sqrt(2 pi)]
double stirlerr(double n) {
    if (n > 15.0) return stirling_series(n);
    if (n == 0.0) return 0.0;
    return log_gamma(n + 1.0) - (n + 0.5) * std::log(n) + n - kLnSqrt2Pi;
}

// x ln(x / np) + np - x, without cancellation when x ~ np.
double bd0(double x, double np) {
    if (std::abs(x - np) < 0.1 * (x + np)) {
        double v = (x - np) / (x + np);
        double s = (x - np) * v;
        if (std::abs(s) < std::numeric_limits<double>::min()) return s;
        double ej = 2.0 * x * v;
        v *= v;
        for (int j = 1; j < 1000; ++j) {
            ej *= v;
            const double s1 = s + ej / (2 * j + 1);
            if (s1 == s) return s1;
            s = s1;
        }
    }
    return x * std::log(x / np) + np - x;
}

// (1 + t) log1p(t) - t
double one_plus_t_log1p_minus_t(double t) {
    if (std::abs(t) < 0.1) {
        double term = t * t;
        double sum = 0.0;
        for (int j = 2; j < 60; ++j) {
            const double add = term / (static_cast<double>(j) * (j - 1));
            sum += (j % 2 == 0) ? add : -add;
            if (std::abs(add) < 1e-18 * std::abs(sum)) break;
            term *= t;
        }
        return sum;
    }
    return (1.0 + t) * std::log1p(t) - t;
}

void check_probability(double p) {
    if (!(p >= 0.0 && p <= 1.0)) throw DomainError("probability outside [0, 1]");
}

bool is_integral(double v) { return std::floor(v) == v; }

// Modified Lentz evaluation of the incomplete-beta continued fraction.
double beta_continued_fraction(double a, double b, double x) {
    constexpr int kMaxIter = 100000;
    constexpr double kEps = 1e-16;
    constexpr double kTiny = 1e-300;
    const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < kEps) return h;
    }
    return h;
}

// ln I_x(a, b) on the side where the continued fraction converges fast.
double log_incomplete_beta_cf(double a, double b, double x) {
    const double front = a * std::log(x) + b * std::log1p(-x) - log_beta(a, b) - std::log(a);
    return front + std::log(beta_continued_fraction(a, b, x));
}

}  // namespace

double log_gamma(double x) {
    if (std::isnan(x)) throw DomainError("log_gamma of NaN");
    if (x <= 0.0 && is_integral(x)) return kInf;
    if (x < 0.5) {
        // Reflection; only the magnitude is returned.
        return std::log(std::numbers::pi / std::abs(std::sin(std::numbers::pi * x))) -
               log_gamma(1.0 - x);
    }
    if (x >= 10.0) return (x - 0.5) * std::log(x) - x + kLnSqrt2Pi + stirling_series(x);
    return lanczos_log_gamma(x);
}

double stirling_correction(double z) {
    if (z >= 10.0) return stirling_series(z);
    return log_gamma(z) - ((z - 0.5) * std::log(z) - z + kLnSqrt2Pi);
}

double log_rising_excess(double x, double k) {
    if (!(x > 0.0) || !(k >= 0.0)) throw DomainError("log_rising_excess needs x > 0, k >= 0");
    if (k == 0.0) return 0.0;
    if (x < 10.0) return log_gamma(x + k) - log_gamma(x) - k * std::log(x);
    const double t = k / x;
    return x * one_plus_t_log1p_minus_t(t) - 0.5 * std::log1p(t) +
           stirling_correction(x + k) - stirling_correction(x);
}

double log_gamma_ratio(double x, double k) {
    if (k == 0.0) return 0.0;
    return k * std::log(x) + log_rising_excess(x, k);
}

double log_beta(double a, double b) {
    if (!(a > 0.0) || !(b > 0.0)) throw DomainError("log_beta needs positive arguments");
    const double small = std::min(a, b), big = std::max(a, b);
    if (big < 10.0) return log_gamma(a) + log_gamma(b) - log_gamma(a + b);
    // Gamma(big + small) / Gamma(big) = big^small * exp(excess)
    return log_gamma(small) - small * std::log(big) - log_rising_excess(big, small);
}

double log_binomial_coeff(double n, double y) {
    if (!(n >= 0.0) || !(y >= 0.0) || y > n) throw DomainError("log_binomial_coeff needs 0 <= y <= n");
    double k = std::min(y, n - y);
    if (k == 0.0) return 0.0;
    if (is_integral(k) && k <= 20.0) {
        // n (n-1) ... (n-k+1) / k!, exact for real n
        double s = 0.0;
        for (int i = 0; i < static_cast<int>(k); ++i) s += std::log((n - i) / (i + 1.0));
        return s;
    }
    const double m = n - k;
    return stirlerr(n) - stirlerr(k) - stirlerr(m) + k * std::log(n / k) -
           (m + 0.5) * std::log1p(-k / n) - 0.5 * std::log(k) - kLnSqrt2Pi;
}

double log_binomial_pmf(double y, double n, double p) {
    check_probability(p);
    if (!(n >= 0.0)) throw DomainError("binomial trials must be non-negative");
    if (y < 0.0 || y > n || !is_integral(y)) return -kInf;
    if (n == 0.0) return 0.0;
    const double q = 1.0 - p;
    if (p == 0.0) return y == 0.0 ? 0.0 : -kInf;
    if (q == 0.0) return y == n ? 0.0 : -kInf;
    if (y == 0.0) return n * std::log1p(-p);
    if (y == n) return n * std::log(p);
    const double lc = stirlerr(n) - stirlerr(y) - stirlerr(n - y) - bd0(y, n * p) - bd0(n - y, n * q);
    const double lf = kLn2Pi + std::log(y) + std::log1p(-y / n);
    return lc - 0.5 * lf;
}

double log_binomial_sf(long long cthr, double n, double p) {
    check_probability(p);
    if (!(n >= 0.0)) throw DomainError("binomial trials must be non-negative");
    if (cthr < 0) return 0.0;
    const double c = static_cast<double>(cthr);
    if (c >= n || p == 0.0) return -kInf;
    if (p == 1.0) return 0.0;

    // ln P[Y <= c] by the pmf recursion, which holds for real n.
    const double ratio = p / (1.0 - p);
    double log_scale = n * std::log1p(-p);
    double term = 1.0, sum = 1.0;
    for (long long y = 0; y < cthr; ++y) {
        term *= (n - static_cast<double>(y)) / static_cast<double>(y + 1) * ratio;
        sum += term;
        if (sum > 1e280) {
            log_scale += std::log(sum);
            term /= sum;
            sum = 1.0;
        }
    }
    const double log_cdf = log_scale + std::log(sum);
    if (log_cdf <= -std::numbers::ln2) return log1m_exp(log_cdf);
    // Survival below 1/2: direct continued fraction, no cancellation.
    return log_incomplete_beta(c + 1.0, n - c, p);
}

double log_incomplete_beta(double a, double b, double x) {
    if (!(a > 0.0) || !(b > 0.0)) throw DomainError("incomplete beta needs a, b > 0");
    check_probability(x);
    if (x == 0.0) return -kInf;
    if (x == 1.0) return 0.0;
    if (x < (a + 1.0) / (a + b + 2.0)) return log_incomplete_beta_cf(a, b, x);
    return log1m_exp(log_incomplete_beta_cf(b, a, 1.0 - x));
}

double log_sum_exp(std::span<const double> values) {
    if (values.empty()) throw DomainError("log_sum_exp of an empty list");
    const double m = *std::max_element(values.begin(), values.end());
    if (m == -kInf || m == kInf) return m;
    double s = 0.0;
    for (double v : values) s += std::exp(v - m);
    return m + std::log(s);
}

double log1m_exp(double v) {
    if (v > 0.0) throw DomainError("log1m_exp needs v <= 0");
    // Maechler's switch point
    return v > -std::numbers::ln2 ? std::log(-std::expm1(v)) : std::log1p(-std::exp(v));
}

}  // namespace dilution::specfun
