#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "dilution/exactpost.hpp"
#include "dilution/hier.hpp"
#include "dilution/specfun.hpp"
#include "dilution/sim.hpp"
#include "oracles.hpp"

using namespace dilution;

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

RepetitionCounts rep_of(std::string id, int j, std::initializer_list<long> ys) {
    RepetitionCounts r{std::move(id), j, {}, {}};
    for (long y : ys) r.drops.push_back(y < 0 ? Observation::censored() : Observation::count(y));
    return r;
}

Experiment experiment_of(std::vector<RepetitionCounts> reps, DilutionDesign d = DilutionDesign::drop_plate()) {
    return Experiment{d, "t", "", std::move(reps)};
}

// Ten drops near 4.75 expected CFU at dilution 2: N0 around 5e5.
const std::initializer_list<long> kSynthetic = {5, 3, 6, 4, 7, 2, 5, 4, 6, 5};

double mean_of(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); }

double sd_of(const std::vector<double>& v) {
    const double m = mean_of(v);
    double ss = 0;
    for (double x : v) ss += (x - m) * (x - m);
    return std::sqrt(ss / (v.size() - 1));
}

}  // namespace

TEST_SUITE("hier") {

TEST_CASE("toy log-posterior matches the term-by-term value") {
    const auto ex = experiment_of({zero_repetition(DilutionDesign::drop_plate(), "R1")});
    const Priors priors;
    const HierParams p{2.0, 50.0, {1.5}};
    // likelihood -0.29105465057515830, gamma term -1.2541624056347938,
    // priors -8.6171931914162374 (mpmath, 40 digits)
    CHECK(log_posterior(p, ex, priors) == doctest::Approx(-10.162410247626189).epsilon(1e-13));
    CHECK(log_posterior(p, ex, priors, N0Prior::UniformN0Surrogate) ==
          doctest::Approx(-5.8745001628871652).epsilon(1e-13));

    // recomputed here from its parts
    const double s = 1e-3 * 0.95, n = std::pow(10.0, 1.5) - 1.0;
    const double parts = 10 * n * std::log1p(-s) + 50 * std::log(25.0) - std::lgamma(50.0) + 49 * std::log(1.5) -
                         37.5 - std::log(10.0) - std::log(500.0) - 0.1;
    CHECK(log_posterior(p, ex, priors) == doctest::Approx(parts).epsilon(1e-12));
}

TEST_CASE("support boundaries give -inf") {
    const auto ex = experiment_of({zero_repetition(DilutionDesign::drop_plate(), "R1")});
    const Priors priors;
    CHECK(log_posterior({0.0, 5.0, {1.0}}, ex, priors) == -kInf);
    CHECK(log_posterior({10.0, 5.0, {1.0}}, ex, priors) == -kInf);
    CHECK(log_posterior({2.0, 0.0, {1.0}}, ex, priors) == -kInf);
    CHECK(log_posterior({2.0, -1.0, {1.0}}, ex, priors) == -kInf);
    CHECK(log_posterior({2.0, 5.0, {0.0}}, ex, priors) == -kInf);
    CHECK(log_posterior({2.0, 5.0, {10.0}}, ex, priors) == -kInf);
    CHECK(std::isfinite(log_posterior({2.0, 5.0, {9.99}}, ex, priors)));
    CHECK_THROWS_AS(log_posterior({2.0, 5.0, {1.0, 2.0}}, ex, priors), DataError);
    // a colony needs N0 >= 1, i.e. x >= log10(2)
    const auto one = experiment_of({rep_of("R", 0, {1, 0, 0, 0, 0, 0, 0, 0, 0, 0})});
    CHECK(log_posterior({2.0, 5.0, {0.2}}, one, priors) == -kInf);
    CHECK(std::isfinite(log_posterior({2.0, 5.0, {0.31}}, one, priors)));
}

TEST_CASE("repetitions are exchangeable and additive") {
    const auto d = DilutionDesign::drop_plate();
    std::vector<RepetitionCounts> reps = {rep_of("A", 2, kSynthetic), rep_of("B", 3, {0, 1, 0, 2, 0, 0, 1, 0, 0, 1}),
                                          rep_of("C", 1, {30, 28, -1, 25, 29, 22, 30, 27, 24, 26})};
    const Priors priors;
    const HierParams p{5.4, 120.0, {5.7, 5.1, 6.6}};
    const double v = log_posterior(p, experiment_of(reps), priors);
    REQUIRE(std::isfinite(v));

    auto r2 = reps;
    std::swap(r2[0], r2[2]);
    CHECK(log_posterior({5.4, 120.0, {6.6, 5.1, 5.7}}, experiment_of(r2), priors) == doctest::Approx(v).epsilon(1e-14));

    // dropping rep B removes its likelihood and gamma term, nothing else
    const double without = log_posterior({5.4, 120.0, {5.7, 6.6}}, experiment_of({reps[0], reps[2]}), priors);
    const double part = rep_log_likelihood(reps[1], std::pow(10.0, 5.1) - 1.0, d) + log_hier_density(5.1, 5.4, 120.0);
    CHECK(std::abs(v - without - part) < 1e-12 * std::abs(v));

    // the surrogate adds ln(10^x ln 10) per repetition
    const double sur = log_posterior(p, experiment_of(reps), priors, N0Prior::UniformN0Surrogate);
    double extra = 0;
    for (double x : p.x) extra += x * std::log(10.0) + std::log(std::log(10.0));
    CHECK(sur - v == doctest::Approx(extra).epsilon(1e-12));
}

TEST_CASE("K = 1 chain agrees with tensor-grid quadrature") {
    const auto ex = experiment_of({rep_of("R", 2, kSynthetic)});
    const Priors priors;
    const auto g = oracle::quadrature_e(std::vector<long>(kSynthetic), 1e-5 * 0.95, 5.2, 6.2, priors.M, priors.b);
    const auto chain = fit(ex, priors, 500000, 7);
    const auto e = chain.e();
    CHECK(chain.ess_e() >= 2000);
    CHECK(std::abs(mean_of(e) - g.mean()) < 0.05);
    for (double p : {0.025, 0.5, 0.975}) {
        CAPTURE(p);
        CHECK(std::abs(oracle::quantile_of(e, p) - g.quantile(p)) < 0.05);
    }
}

TEST_CASE("all sampler coordinates target the same posterior") {
    const auto d = DilutionDesign::drop_plate();
    // one informative and one diffuse repetition
    const auto ex = experiment_of({rep_of("R", 2, kSynthetic), rep_of("Z", 0, {0, 1, 0, 0, 0, 0, 0, 0, 0, 0})}, d);
    std::vector<PosteriorChain> fits;
    for (auto c : {Coordinates::Natural, Coordinates::Log, Coordinates::Standardized}) {
        HierOptions o;
        o.coordinates = c;
        fits.push_back(fit_unchecked(ex, {}, 500000, 3, o));
    }
    for (std::size_t i = 1; i < fits.size(); ++i) {
        CAPTURE(i);
        CHECK(std::abs(mean_of(fits[i].x(0)) - mean_of(fits[0].x(0))) < 0.01);
        CHECK(std::abs(oracle::quantile_of(fits[i].x(1), 0.5) - oracle::quantile_of(fits[0].x(1), 0.5)) < 0.05);
        CHECK(std::abs(oracle::quantile_of(fits[i].e(), 0.5) - oracle::quantile_of(fits[0].e(), 0.5)) < 0.1);
    }
}

TEST_CASE("identical seeds give identical chains") {
    const auto ex = experiment_of({rep_of("A", 2, kSynthetic), zero_repetition(DilutionDesign::drop_plate(), "B")});
    const auto a = fit_unchecked(ex, {}, 20000, 11);
    const auto b = fit_unchecked(ex, {}, 20000, 11);
    const auto c = fit_unchecked(ex, {}, 20000, 12);
    CHECK(a.chain.samples == b.chain.samples);
    CHECK(a.chain.log_post == b.chain.log_post);
    CHECK(a.chain.samples != c.chain.samples);
    CHECK(a.names() == std::vector<std::string>{"e", "a", "x_A", "x_B"});
}

TEST_CASE("stored log-posterior matches the samples") {
    const auto ex = experiment_of({rep_of("A", 2, kSynthetic), rep_of("B", 3, {0, 1, 0, 0, 0, 0, 0, 0, 0, 1})});
    const auto fitted = fit_unchecked(ex, {}, 5000, 5);
    const HierModel model(ex, {});
    for (std::size_t t = 0; t < fitted.chain.length(); t += 499) {
        const auto row = fitted.chain.row(t);
        CHECK(fitted.chain.log_post[t] == doctest::Approx(model.log_posterior(row)).epsilon(1e-9));
    }
}

TEST_CASE("starting points lie in the support and differ") {
    const auto ex = experiment_of({rep_of("A", 2, kSynthetic), zero_repetition(DilutionDesign::drop_plate(), "B"),
                                   rep_of("C", 0, {-1, -1, -1, -1, -1, -1, -1, -1, -1, -1})});
    const HierModel model(ex, {});
    mcmc::Rng rng(4);
    for (int i = 0; i < 20; ++i) {
        const auto [p0, p1] = initial_points(model, ex, rng);
        CHECK(std::isfinite(model.log_posterior(p0)));
        CHECK(std::isfinite(model.log_posterior(p1)));
        for (std::size_t k = 0; k < p0.size(); ++k) CHECK(p0[k] != p1[k]);
    }
}

TEST_CASE("short chains fail the ESS floor with a report") {
    const auto ex = experiment_of({rep_of("R", 2, kSynthetic)});
    try {
        (void)fit(ex, {}, 2000, 1);
        FAIL("expected a diagnostic failure");
    } catch (const DiagnosticFailure& err) {
        CHECK(std::string(err.what()).find("x_R=") != std::string::npos);
        CHECK(err.chain().chain.length() == 2000);
    }
}

TEST_CASE("zero reps pull a single-colony rep down") {
    const auto d = DilutionDesign::drop_plate();
    const auto single = rep_of("C", 0, {1, 0, 0, 0, 0, 0, 0, 0, 0, 0});
    const auto ex = experiment_of({zero_repetition(d, "A"), zero_repetition(d, "B"), single});
    const auto chain = fit_unchecked(ex, {}, 200000, 9);
    const auto free = free_posterior(single, d);
    double free_mean = 0;
    for (std::size_t i = 0; i < free.size(); ++i) free_mean += free.mass(i) * std::log10(free.midpoint(i) + 1.0);
    const double hier_mean = mean_of(chain.x(2));
    CHECK(hier_mean < free_mean);
    // and the zero reps move up toward it
    CHECK(mean_of(chain.x(0)) > 0.0);
}

TEST_CASE("large counts: posterior mean of E is near the classical mean") {
    const auto ex = experiment_of({rep_of("A", 3, {22, 18, 25, 20, 19, 24, 21, 17, 23, 20}),
                                   rep_of("B", 3, {12, 15, 10, 14, 11, 13, 16, 12, 10, 14}),
                                   rep_of("C", 2, {28, 26, 29, 25, 30, 27, 24, 28, 26, 29})});
    const auto chain = fit_unchecked(ex, {}, 200000, 2);
    const auto cls = classical_summary(ex);
    CHECK(std::abs(mean_of(chain.e()) - cls.mean) < 0.2);
}

TEST_CASE("activation probability is a CDF in e_h") {
    const auto ex = experiment_of({zero_repetition(DilutionDesign::drop_plate(), "A")});
    const auto chain = fit_unchecked(ex, {}, 20000, 1);
    CHECK(activation_probability(chain, 10.0) == 1.0);
    CHECK(activation_probability(chain, 0.0) == 0.0);
    double prev = 0;
    for (double eh = 0; eh <= 10.0; eh += 0.25) {
        const double p = activation_probability(chain, eh);
        CHECK(p >= prev);
        prev = p;
    }
}

TEST_CASE("log reduction") {
    const auto ex = experiment_of({rep_of("R", 2, kSynthetic)});
    const auto chain = fit_unchecked(ex, {}, 100000, 21);
    const auto other = fit_unchecked(ex, {}, 100000, 22);

    // identical distributions: P(LR > 0) near 1/2
    const auto lr = log_reduction(chain, other, 0.0);
    const double n_eff = std::min(chain.ess_e(), other.ess_e());
    CHECK(std::abs(lr.prob_exceed - 0.5) < 4.0 * 0.5 / std::sqrt(n_eff));

    // shifting the control by delta shifts every sample by delta
    auto shifted = chain.e();
    for (double& v : shifted) v += 0.7;
    const auto base = log_reduction(chain.e(), other.e(), 3.0);
    const auto moved = log_reduction(shifted, other.e(), 3.0);
    REQUIRE(base.samples.size() == moved.samples.size());
    CHECK(mean_of(moved.samples) - mean_of(base.samples) == doctest::Approx(0.7).epsilon(1e-9));

    // the same chain against itself is identically zero
    const auto self = log_reduction(chain, chain, 0.0);
    CHECK(self.prob_exceed == 0.0);

    // truncation to the shorter chain
    std::vector<double> c{1, 2, 3, 4}, t{0, 0};
    const auto lt = log_reduction(c, t, 1.5);
    CHECK(lt.samples.size() == 2);
    CHECK(lt.prob_exceed == 0.5);
}

TEST_CASE("classical summary") {
    const auto d = DilutionDesign::drop_plate();
    // crude abundances are not affected by q
    const auto d0 = d.with_q(0.0);
    auto rep_with_mean = [](std::string id, int j, double mean10) {
        // ten drops summing to mean10 * 10
        RepetitionCounts r{std::move(id), j, {}, {}};
        const long total = std::lround(mean10 * 10);
        for (int i = 0; i < 10; ++i) r.drops.push_back(Observation::count(total / 10 + (i < total % 10 ? 1 : 0)));
        return r;
    };
    // 7.9 CFU at j=4 -> 7.9e7, 12.6 -> 1.26e8, 10 -> 1e8
    const Experiment ex{d0, "t", "", {rep_with_mean("A", 4, 7.9), rep_with_mean("B", 4, 12.6), rep_with_mean("C", 4, 10.0)}};
    const auto s = classical_summary(ex);
    std::vector<double> v{std::log10(7.9e7 + 1), std::log10(1.26e8 + 1), std::log10(1e8 + 1)};
    CHECK(s.mean == doctest::Approx(mean_of(v)).epsilon(1e-12));
    CHECK(s.sd == doctest::Approx(sd_of(v)).epsilon(1e-10));
    CHECK(s.lower == doctest::Approx(s.mean - 3 * s.sd));
    CHECK(s.upper == doctest::Approx(s.mean + 3 * s.sd));

    // identical reps have no spread
    const Experiment same{d, "t", "", {rep_of("A", 1, kSynthetic), rep_of("B", 1, kSynthetic)}};
    CHECK(classical_summary(same).sd == 0.0);

    // near-zero data push the 3-sigma interval below zero
    const Experiment low{d, "t", "", {zero_repetition(d, "A"), zero_repetition(d, "B"),
                                      rep_of("C", 0, {2, 1, 0, 1, 0, 0, 1, 0, 0, 0})}};
    CHECK(classical_summary(low).lower < 0.0);

    const Experiment censored{d, "t", "", {rep_of("A", 0, {-1, -1, -1, -1, -1, -1, -1, -1, -1, -1})}};
    CHECK_THROWS_AS(classical_summary(censored), DataError);
}

TEST_CASE("posterior of E concentrates as K grows") {
    const auto d = DilutionDesign::drop_plate();
    double sd3 = 0, sd12 = 0;
    const int reps = 20;
    for (int r = 0; r < reps; ++r) {
        // the K = 3 data are the first three reps of the K = 12 data
        const auto ex12 = simulate_experiment(300'000, 12, d, mcmc::derive_seed(31, r));
        Experiment ex3 = ex12;
        ex3.reps.resize(3);
        sd3 += sd_of(fit_unchecked(ex3, {}, 100000, r + 1).e()) / reps;
        sd12 += sd_of(fit_unchecked(ex12, {}, 100000, r + 1).e()) / reps;
    }
    CAPTURE(sd3);
    CAPTURE(sd12);
    CHECK(sd12 < sd3);
}

}
