#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <tuple>
#include <vector>

#include "dilution/kernels.hpp"
#include "dilution/specfun.hpp"
#include "oracles.hpp"

using namespace dilution;

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

template <class F>
double simpson(F f, double lo, double hi, int n) {
    const double h = (hi - lo) / n;
    double s = f(lo) + f(hi);
    for (int i = 1; i < n; ++i) s += f(lo + i * h) * (i % 2 ? 4.0 : 2.0);
    return s * h / 3.0;
}

RepetitionCounts rep_of(std::initializer_list<long> ys, int j = 0) {
    RepetitionCounts r{"R", j, {}, {}};
    for (long y : ys) r.drops.push_back(y < 0 ? Observation::censored() : Observation::count(y));
    return r;
}
}  // namespace

TEST_SUITE("kernels") {

TEST_CASE("success probability") {
    const auto dp = DilutionDesign::drop_plate();
    CHECK(success_prob(dp, 0, 0.0).s_star == doctest::Approx(1e-3).epsilon(1e-14));
    CHECK(success_prob(dp, 3).s_star == doctest::Approx(9.5e-7).epsilon(1e-14));
    CHECK(success_prob(DilutionDesign::spread_plate(), 0, 0.0).s_star == doctest::Approx(2.5e-3).epsilon(1e-14));
    CHECK_THROWS_AS(success_prob(dp, 7), DataError);
    CHECK_THROWS_AS(success_prob(dp, -1), DataError);
}

TEST_CASE("collapsed pmf equals the enumerated cascade") {
    struct Toy {
        double alpha, alpha0, alpha_p, q;
        int j;
    };
    const Toy toys[] = {{2, 1, 2, 0.0, 0}, {3, 2, 4, 0.1, 2}, {10, 1, 5, 0.05, 2}, {2, 4, 3, 0.2, 1}};
    for (const auto& t : toys) {
        const auto design = DilutionDesign::from_ratios(t.alpha0, t.alpha_p, t.alpha, 4, 1, 30, t.q);
        const double s = success_prob(design, t.j).s_star;
        for (int n0 : {0, 1, 5, 50, 200}) {
            const auto want = oracle::cascade_drop_pmf(n0, t.j, t.alpha, t.alpha0, t.alpha_p, t.q);
            for (int y = 0; y <= n0; ++y) {
                const double got = std::exp(specfun::log_binomial_pmf(y, n0, s));
                CHECK(std::abs(got - want[y]) < 1e-10);
            }
        }
    }
}

TEST_CASE("repetition likelihood") {
    const auto dp = DilutionDesign::drop_plate();
    const auto zeros = zero_repetition(dp, "Z");
    CHECK(rep_log_likelihood(zeros, 0.0, dp) == 0.0);
    CHECK(std::abs(rep_log_likelihood(zeros, 1000.0, dp) - -9.5045153599544810797) < 1e-12);

    auto one = zeros;
    one.drops[0] = Observation::count(1);
    CHECK(rep_log_likelihood(one, 0.0, dp) == -kInf);
    CHECK(std::isfinite(rep_log_likelihood(one, 1.0, dp)));

    // drop order is irrelevant
    auto a = rep_of({13, 10, 6, 9, 16, 0, 2, -1, 1, 3}, 3);
    auto b = a;
    std::mt19937 g(3);
    for (int i = 0; i < 5; ++i) {
        std::shuffle(b.drops.begin(), b.drops.end(), g);
        for (double n0 : {31.0, 2e6, 1.08e7, 5.5e8}) CHECK(rep_log_likelihood(a, n0, dp) == rep_log_likelihood(b, n0, dp));
    }
}

TEST_CASE("censored drops make the likelihood nondecreasing up to c") {
    const auto dp = DilutionDesign::drop_plate();
    auto r = zero_repetition(dp, "C");
    r.drops[0] = Observation::censored();
    r.drops[1] = Observation::censored();
    double prev = -kInf;
    for (double n0 = 0; n0 <= 40; n0 += 0.25) {
        const double v = rep_log_likelihood(r, n0, dp);
        if (n0 <= 30) CHECK(v >= prev);
        prev = v;
    }
}

TEST_CASE("scopes select tubes") {
    const auto dp = DilutionDesign::drop_plate().with_D(2);
    RepetitionCounts r{"R", 3, {Observation::count(12), Observation::count(7)},
                       {{2, {Observation::censored(), Observation::censored()}},
                        {4, {Observation::count(1), Observation::count(0)}}}};
    CHECK(RepLikelihood(r, dp, DilutionScope::Selected).tubes().size() == 1);
    CHECK(RepLikelihood(r, dp, DilutionScope::CountableAndAbove).tubes().size() == 2);
    CHECK(RepLikelihood(r, dp, DilutionScope::AllRecorded).tubes().size() == 3);
    const double n0 = 1.1e7;
    const double all = RepLikelihood(r, dp, DilutionScope::AllRecorded)(n0);
    const double parts = specfun::log_binomial_pmf(12, n0, 9.5e-7) + specfun::log_binomial_pmf(7, n0, 9.5e-7) +
                         2 * specfun::log_binomial_sf(30, n0, 9.5e-6) + specfun::log_binomial_pmf(1, n0, 9.5e-8) +
                         n0 * std::log1p(-9.5e-8);
    CHECK(all == doctest::Approx(parts).epsilon(1e-12));
}

TEST_CASE("gamma hierarchy density moments") {
    const double e = 5.0, a = 20.0;
    auto dens = [&](double x) { return std::exp(log_hier_density(x, e, a)); };
    const double mass = simpson(dens, 1e-9, 20.0, 200000);
    const double mean = simpson([&](double x) { return x * dens(x); }, 1e-9, 20.0, 200000);
    const double m2 = simpson([&](double x) { return x * x * dens(x); }, 1e-9, 20.0, 200000);
    CHECK(std::abs(mass - 1.0) < 1e-8);
    CHECK(std::abs(mean - e) < 1e-6);
    CHECK(std::abs(std::sqrt(m2 - mean * mean) - e / std::sqrt(a)) < 1e-6);

    // near-Gaussian for large shape
    const double sd = 5.0 / std::sqrt(30.0);
    const double gauss = std::exp(-0.0) / (sd * std::sqrt(2 * std::numbers::pi));
    CHECK(std::abs(std::exp(log_hier_density(5.0, 5.0, 30.0)) / gauss - 1.0) < 0.05);

    CHECK_THROWS_AS(log_hier_density(1.0, 0.0, 1.0), specfun::DomainError);
    CHECK_THROWS_AS(log_hier_density(1.0, 1.0, -1.0), specfun::DomainError);
    CHECK_THROWS_AS(log_hier_density(-1.0, 1.0, 1.0), specfun::DomainError);
}

TEST_CASE("abundance density") {
    const double e = 5.0, a = 50.0;
    for (double n0 : {0.5, 3.0, 1e3, 7.7e6, 1e10}) {
        const double want = log_hier_density(std::log10(n0 + 1), e, a) - std::log((n0 + 1) * std::numbers::ln10);
        CHECK(std::abs(log_n0_density(n0, e, a) - want) < 1e-12);
    }
    // total mass over [0, 1e10], integrating in u = ln(n0 + 1)
    const double mass = simpson(
        [&](double u) {
            const double n0 = std::expm1(u);
            return std::exp(log_n0_density(n0, e, a)) * (n0 + 1.0);
        },
        0.0, std::log1p(1e10), 400000);
    CHECK(std::abs(mass - 1.0) < 1e-6);
    CHECK_THROWS_AS(log_n0_density(-1.0, e, a), specfun::DomainError);

    // mode for (6, 100): dense-grid argmax against the stationary point
    const double x_mode = 99.0 / (100.0 / 6.0 + std::numbers::ln10);
    double best = -kInf, arg = 0;
    for (double x = 4.0; x < 7.0; x += 1e-6) {
        const double v = log_n0_density(std::pow(10.0, x) - 1.0, 6.0, 100.0);
        if (v > best) best = v, arg = x;
    }
    CHECK(std::abs(arg - x_mode) < 1e-5);
}

TEST_CASE("beta-binomial") {
    CHECK(std::abs(log_betabinomial_pmf(2, 100, 0.01, 101) - -2.0663471548469954497) < 1e-12);
    const double s = 9.5e-7;
    // two ~2e7-sized rising-factorial terms cancel here; 1e-8 is their rounding floor
    CHECK(std::abs(log_betabinomial_pmf(13, 1.2e7, s, 1 / s + 1) - -3.6107758952584484109) < 1e-8);
    CHECK(log_betabinomial_pmf(0, 0, 0.3, 2.0) == 0.0);
    CHECK(log_betabinomial_pmf(4, 3, 0.3, 2.0) == -kInf);
    CHECK_THROWS_AS(log_betabinomial_pmf(1, 3, 0.3, 0.0), specfun::DomainError);

    // huge lambda collapses to the binomial
    for (long y : {0L, 3L, 13L, 25L}) {
        const double bb = std::exp(log_betabinomial_pmf(y, 1.2e7, s, 1e9 / s));
        const double bin = std::exp(specfun::log_binomial_pmf(y, 1.2e7, s));
        CHECK(std::abs(bb - bin) < 1e-6);
    }

    // survival complements the pmf sum
    const double lam = 50.0;
    std::vector<double> terms;
    for (int y = 0; y <= 30; ++y) terms.push_back(log_betabinomial_pmf(y, 400.0, 0.05, lam));
    const double cdf = std::exp(specfun::log_sum_exp(terms));
    CHECK(std::abs(std::exp(log_betabinomial_sf(30, 400.0, 0.05, lam)) + cdf - 1.0) < 1e-12);
    CHECK(log_betabinomial_sf(30, 30.0, 0.05, lam) == -kInf);
    // real n just above c, and the drop-plate scale, against the direct pmf sum
    for (const auto& [n, p, l] : {std::tuple{30.5, 0.3, 4.0}, std::tuple{3e7, 9.5e-7, 1 / 9.5e-7 + 1}}) {
        std::vector<double> direct;
        for (int y = 0; y <= 30; ++y) direct.push_back(log_betabinomial_pmf(y, n, p, l));
        const double want = specfun::log1m_exp(std::min(0.0, specfun::log_sum_exp(direct)));
        CHECK(log_betabinomial_sf(30, n, p, l) == doctest::Approx(want).epsilon(1e-10));
    }
}

}
