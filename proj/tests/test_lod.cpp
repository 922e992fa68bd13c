#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "dilution/lod.hpp"

using namespace dilution;

TEST_SUITE("lod") {

TEST_CASE("binned upper bound") {
    std::vector<double> v;
    for (int i = 1; i <= 100; ++i) v.push_back(i);
    // 99 values lie below 100, only 89 below 90
    CHECK(binned_upper_bound(v, 0.95, 10.0) == 100.0);
    CHECK(binned_upper_bound(v, 0.5, 10.0) == 60.0);
    CHECK(binned_upper_bound({0.0, 0.0, 0.0}, 0.95, 10.0) == 10.0);
    CHECK_THROWS(binned_upper_bound({}, 0.95, 10.0));
    CHECK_THROWS(binned_upper_bound(v, 1.0, 10.0));
    CHECK_THROWS(binned_upper_bound(v, 0.95, 0.0));

    // smallest multiple of the width reaching the credibility
    std::mt19937_64 gen(5);
    std::exponential_distribution<double> ex(1.0 / 40.0);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> s(200 + trial);
        for (double& x : s) x = ex(gen);
        const double cred = 0.5 + 0.009 * trial;
        const double L = binned_upper_bound(s, cred, 10.0);
        auto frac_below = [&](double l) {
            return static_cast<double>(std::count_if(s.begin(), s.end(), [&](double x) { return x < l; })) / s.size();
        };
        CHECK(std::fmod(L, 10.0) == 0.0);
        CHECK(frac_below(L) >= cred);
        CHECK(frac_below(L - 10.0) < cred);
    }
}

TEST_CASE("spread-plate limit for three zero repetitions") {
    const auto r = lod(DilutionDesign::spread_plate(), 3);
    CHECK(r.K == 3);
    CHECK(r.ess_e >= 2000);
    // frozen from this chain (seed 1, 10^6 iterations)
    CHECK(r.limit == 80.0);
    CHECK(r.quantile == doctest::Approx(78.772830311450605).epsilon(1e-6));
    // tensor-grid quadrature over (e, a, x) gives 78.16
    CHECK(std::abs(r.quantile - 78.16) < 0.03 * 78.16);

    // lower credibility, lower bound
    auto v = r.chain.e();
    for (double& x : v) x = std::expm1(x * std::log(10.0));
    CHECK(binned_upper_bound(v, 0.5, 10.0) <= r.limit);

    const auto bins = binned_abundance(r.chain, 10.0, 1000.0);
    CHECK(bins.size() == 100);
    double total = 0;
    for (double b : bins) total += b;
    CHECK(total <= 1.0);
    CHECK(total > 0.99);
    // zero data: the first bin is the mode
    CHECK(std::max_element(bins.begin(), bins.end()) == bins.begin());

    CHECK_THROWS_AS(lod(DilutionDesign::spread_plate(), 0), DataError);
}

TEST_CASE("drop-plate limits do not grow with K") {
    const auto d = DilutionDesign::drop_plate();
    double prev = INFINITY;
    for (int K : {1, 3, 12}) {
        const auto r = lod(d, K);
        CAPTURE(K);
        CHECK(r.limit <= prev);
        prev = r.limit;
    }
}

}
