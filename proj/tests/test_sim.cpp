#include <doctest.h>

#include <cmath>
#include <map>
#include <sstream>
#include <vector>

#include "dilution/kernels.hpp"
#include "dilution/sim.hpp"
#include "dilution/specfun.hpp"
#include "oracles.hpp"

using namespace dilution;

namespace {

}  // namespace

TEST_SUITE("sim") {

TEST_CASE("binomial sampler moments") {
    mcmc::Rng rng(3);
    struct Case {
        std::int64_t n;
        double p;
    };
    for (const auto c : {Case{20, 0.1}, Case{1000, 0.02}, Case{100000, 0.3}, Case{10'000'000'000LL, 1e-3},
                         Case{50, 0.9}, Case{1'000'000, 1e-7}}) {
        const int draws = 200000;
        double s = 0, s2 = 0;
        for (int i = 0; i < draws; ++i) {
            const double v = static_cast<double>(sample_binomial(c.n, c.p, rng));
            REQUIRE(v >= 0);
            REQUIRE(v <= c.n);
            s += v;
            s2 += v * v;
        }
        const double mean = s / draws, var = s2 / draws - mean * mean;
        const double mu = c.n * c.p, sigma2 = c.n * c.p * (1 - c.p);
        CAPTURE(c.n);
        CAPTURE(c.p);
        CHECK(std::abs(mean - mu) < 4.0 * std::sqrt(sigma2 / draws));
        // variance of the sample variance is about 2 sigma^4 / draws for these shapes
        CHECK(std::abs(var - sigma2) < 6.0 * sigma2 * std::sqrt(2.0 / draws) + 1e-12);
    }
    CHECK(sample_binomial(0, 0.3, rng) == 0);
    CHECK(sample_binomial(17, 0.0, rng) == 0);
    CHECK(sample_binomial(17, 1.0, rng) == 17);
    CHECK_THROWS(sample_binomial(-1, 0.3, rng));
    CHECK_THROWS(sample_binomial(5, 1.5, rng));
}

TEST_CASE("binomial sampler matches the pmf on both branches") {
    mcmc::Rng rng(8);
    for (const auto& [n, p] : {std::pair<std::int64_t, double>{60, 0.2}, {400, 0.25}}) {
        const long draws = 400000;
        std::map<std::int64_t, long> hist;
        for (long i = 0; i < draws; ++i) ++hist[sample_binomial(n, p, rng)];
        const double tv = oracle::tv_against_pmf(
            hist, draws, [&](std::int64_t y) { return std::exp(specfun::log_binomial_pmf(y, n, p)); }, n);
        CAPTURE(n);
        CHECK(tv < 0.01);
    }
}

TEST_CASE("cascade structure") {
    const auto d = DilutionDesign::drop_plate();
    const auto zero = simulate_cascade(0, d, 5);
    for (std::size_t j = 0; j < zero.n.size(); ++j) {
        CHECK(zero.n[j] == 0);
        for (auto y : zero.y[j]) CHECK(y == 0);
    }
    // q close to 1 removes every colony
    const auto none = simulate_cascade(100000, d.with_q(1.0 - 1e-12), 5);
    for (const auto& row : none.y) {
        for (auto y : row) CHECK(y == 0);
    }
    CHECK_THROWS_AS((void)d.with_q(1.0), DataError);
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        const auto r = simulate_cascade(123456789, d, seed);
        REQUIRE(r.n.size() == static_cast<std::size_t>(d.J()));
        REQUIRE(r.y.size() == static_cast<std::size_t>(d.J()));
        for (std::size_t j = 0; j < r.n.size(); ++j) {
            if (j > 0) CHECK(r.n[j] <= r.n[j - 1]);
            REQUIRE(r.y[j].size() == static_cast<std::size_t>(d.D()));
            for (auto y : r.y[j]) CHECK(y <= r.n[j]);
        }
    }
    CHECK_THROWS_AS(simulate_cascade(-1, d, 1), DataError);
}

TEST_CASE("tube means follow the dilution factors") {
    const auto d = DilutionDesign::spread_plate();  // alpha0 = 4
    const int sims = 100000;
    const std::int64_t n0 = 10000;
    std::vector<double> s(d.J(), 0.0), s2(d.J(), 0.0);
    for (int i = 0; i < sims; ++i) {
        const auto r = simulate_cascade(n0, d, mcmc::derive_seed(99, i));
        for (int j = 0; j < d.J(); ++j) {
            s[j] += r.n[j];
            s2[j] += static_cast<double>(r.n[j]) * r.n[j];
        }
    }
    double expected = static_cast<double>(n0);
    for (int j = 1; j < d.J(); ++j) {
        expected /= d.alpha() * (j == 1 ? d.alpha0() : 1.0);
        const double mean = s[j] / sims, var = s2[j] / sims - mean * mean;
        CAPTURE(j);
        CHECK(std::abs(mean - expected) <= 3.0 * std::sqrt(var / sims) + 1e-12);
    }
}

TEST_CASE("simulated drop counts follow the collapsed pmf") {
    // a coarse toy design so that dilution 3 still carries counts
    const auto toy = DilutionDesign::from_ratios(1.0, 2.0, 2.0, 5, 1, 1000, 0.05);
    const auto plate = DilutionDesign::drop_plate();
    struct Case {
        DilutionDesign d;
        int j;
        long draws;
    };
    for (const auto& c : {Case{toy, 3, 400000}, Case{plate, 0, 100000}, Case{plate, 3, 100000}}) {
        std::map<std::int64_t, long> hist;
        for (long i = 0; i < c.draws; ++i) ++hist[simulate_cascade(500, c.d, mcmc::derive_seed(17, i)).y[c.j][0]];
        const double s = success_prob(c.d, c.j).s_star;
        const double tv = oracle::tv_against_pmf(
            hist, c.draws, [&](std::int64_t y) { return std::exp(specfun::log_binomial_pmf(y, 500, s)); }, 500);
        CAPTURE(c.j);
        CHECK(tv < 0.01);
    }
}

TEST_CASE("first countable dilution") {
    CascadeRealization zeros{{0, 0, 0}, {{0, 0}, {0, 0}, {0, 0}}};
    CHECK(first_countable_dilution(zeros, 30) == 0);

    // TNTC at dilutions 0-2, countable at 3
    CascadeRealization fig{{}, {{900, 850}, {95, 88}, {31, 12}, {13, 10}, {1, 2}}};
    CHECK(first_countable_dilution(fig, 30) == 3);
    const auto d = DilutionDesign::drop_plate().with_J(5).with_D(2);
    const auto rep = to_repetition(fig, d, "R1");
    CHECK(rep.selected_dilution == 3);
    CHECK(rep.drops == std::vector<Observation>{Observation::count(13), Observation::count(10)});
    REQUIRE(rep.other_tubes.size() == 4);
    CHECK(rep.other_tubes[2].dilution == 2);
    CHECK(rep.other_tubes[2].drops == std::vector<Observation>{Observation::censored(), Observation::count(12)});
    CHECK(rep.other_tubes[3].dilution == 4);

    CascadeRealization single{{100}, {{45, 3}}};
    CHECK_FALSE(first_countable_dilution(single, 30).has_value());
    const auto all_tntc = to_repetition(single, DilutionDesign::drop_plate().with_J(1).with_D(2), "R");
    CHECK(all_tntc.selected_dilution == 0);
    CHECK(all_tntc.drops.front().is_censored());
}

TEST_CASE("simulated experiments survive a file round trip") {
    const auto d = DilutionDesign::drop_plate();
    const auto ex = simulate_experiment(3'000'000, 3, d, 42);
    REQUIRE(ex.K() == 3);
    std::stringstream ss;
    write_counts(ss, {ex});
    const auto back = parse_counts(ss, d, ex.treatment);
    REQUIRE(back.size() == 1);
    REQUIRE(back[0].K() == 3);
    for (std::size_t k = 0; k < 3; ++k) {
        CHECK(back[0].reps[k].selected_dilution == ex.reps[k].selected_dilution);
        CHECK(back[0].reps[k].drops == ex.reps[k].drops);
    }
    CHECK(simulate_experiment(3'000'000, 3, d, 42).reps == ex.reps);
}

TEST_CASE("all-dilution study") {
    const auto d = DilutionDesign::drop_plate().with_J(6);
    const auto r = all_vs_first_study(d, 500, 30, 4);
    CHECK(r.support.size() == r.pmf_first.size());
    double z = 0;
    for (double v : r.pmf_recorded) z += v;
    CHECK(z == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.tv_recorded >= 0.0);
    CHECK(r.tv_recorded < 0.1);
    CHECK(r.rel_diff_countable < 0.05);
    // TNTC tubes below the selected dilution add almost nothing
    CHECK(std::abs(r.mean_recorded - r.mean_countable) < 0.01 * r.mean_countable);

    // scheduling does not change the result
    const auto threaded = all_vs_first_study(d, 500, 30, 4, {}, 3);
    CHECK(threaded.pmf_first == r.pmf_first);
    CHECK(threaded.pmf_recorded == r.pmf_recorded);

    // No colonies anywhere: every data set is the same and each posterior is
    // geometric, P(n) ~ rho^n with rho the probability that all drops of
    // the used dilutions miss a given CFU. The extra zero tubes do sharpen it.
    const auto zero = all_vs_first_study(d, 0, 10, 4);
    auto geometric_mean = [&](int dilutions) {
        double log_rho = 0;
        for (int j = 0; j < dilutions; ++j) log_rho += d.D() * std::log1p(-success_prob(d, j).s_star);
        return std::exp(log_rho) / -std::expm1(log_rho);
    };
    CHECK(zero.mean_first == doctest::Approx(geometric_mean(1)).epsilon(1e-6));
    CHECK(zero.mean_countable == doctest::Approx(geometric_mean(d.J())).epsilon(1e-6));
    CHECK(zero.mean_recorded == zero.mean_countable);
    CHECK(zero.rel_diff_countable < 0.12);

    CHECK_THROWS_AS(all_vs_first_study(d, 100000, 10, 1), DataError);
}

}
