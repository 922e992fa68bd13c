#include "dilution/sim.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "dilution/kernels.hpp"
#include "dilution/specfun.hpp"

namespace dilution {

namespace {

std::int64_t binomial_inversion(std::int64_t n, double p, mcmc::Rng& rng) {
    const double ratio = p / (1.0 - p);
    const double p0 = std::exp(static_cast<double>(n) * std::log1p(-p));
    for (;;) {
        double u = rng.uniform(), pk = p0;
        std::int64_t k = 0;
        while (u > pk && k < n) {
            u -= pk;
            pk *= ratio * static_cast<double>(n - k) / static_cast<double>(k + 1);
            ++k;
        }
        // rounding can leave u above the whole mass; draw again
        if (u <= pk) return k;
    }
}

// Hormann (1993), p <= 1/2 and n p >= 10.
std::int64_t binomial_btrs(std::int64_t n, double p, mcmc::Rng& rng) {
    const double nd = static_cast<double>(n), q = 1.0 - p;
    const double spq = std::sqrt(nd * p * q);
    const double b = 1.15 + 2.53 * spq;
    const double a = -0.0873 + 0.0248 * b + 0.01 * p;
    const double c = nd * p + 0.5;
    const double vr = 0.92 - 4.2 / b;
    const double alpha = (2.83 + 5.1 / b) * spq;
    const double lpq = std::log(p / q);
    const double m = std::floor((nd + 1.0) * p);
    const double h = specfun::log_gamma(m + 1.0) + specfun::log_gamma(nd - m + 1.0);
    for (;;) {
        const double u = rng.uniform() - 0.5;
        double v = rng.uniform();
        const double us = 0.5 - std::abs(u);
        const double k = std::floor((2.0 * a / us + b) * u + c);
        if (k < 0.0 || k > nd) continue;
        if (us >= 0.07 && v <= vr) return static_cast<std::int64_t>(k);
        v = std::log(v * alpha / (a / (us * us) + b));
        if (v <= h - specfun::log_gamma(k + 1.0) - specfun::log_gamma(nd - k + 1.0) + (k - m) * lpq) {
            return static_cast<std::int64_t>(k);
        }
    }
}

}  // namespace

std::int64_t sample_binomial(std::int64_t n, double p, mcmc::Rng& rng) {
    if (n < 0 || !(p >= 0.0 && p <= 1.0)) throw specfun::DomainError("binomial needs n >= 0 and p in [0, 1]");
    if (n == 0 || p == 0.0) return 0;
    if (p == 1.0) return n;
    if (p > 0.5) return n - sample_binomial(n, 1.0 - p, rng);
    if (static_cast<double>(n) * p < 30.0) return binomial_inversion(n, p, rng);
    return binomial_btrs(n, p, rng);
}

CascadeRealization simulate_cascade(std::int64_t n0, const DilutionDesign& design, mcmc::Rng& rng) {
    if (n0 < 0) throw DataError("N0 must be non-negative");
    CascadeRealization r;
    const int J = design.J(), D = design.D();
    r.n.resize(static_cast<std::size_t>(J));
    r.y.assign(static_cast<std::size_t>(J), std::vector<std::int64_t>(static_cast<std::size_t>(D)));
    r.n[0] = n0;
    for (int j = 1; j < J; ++j) {
        const double keep = 1.0 / design.alpha() / (j == 1 ? design.alpha0() : 1.0);
        r.n[j] = sample_binomial(r.n[j - 1], keep, rng);
    }
    for (int j = 0; j < J; ++j) {
        const double keep = (1.0 - design.q()) / design.alpha_p() / (j == 0 ? design.alpha0() : 1.0);
        for (int i = 0; i < D; ++i) r.y[j][i] = sample_binomial(r.n[j], keep, rng);
    }
    return r;
}

CascadeRealization simulate_cascade(std::int64_t n0, const DilutionDesign& design, std::uint64_t seed) {
    mcmc::Rng rng(seed);
    return simulate_cascade(n0, design, rng);
}

std::optional<int> first_countable_dilution(const CascadeRealization& r, int c) {
    for (std::size_t j = 0; j < r.y.size(); ++j) {
        if (std::all_of(r.y[j].begin(), r.y[j].end(), [&](std::int64_t y) { return y <= c; })) {
            return static_cast<int>(j);
        }
    }
    return std::nullopt;
}

RepetitionCounts to_repetition(const CascadeRealization& r, const DilutionDesign& design, std::string rep_id) {
    const int J = static_cast<int>(r.y.size());
    const int selected = first_countable_dilution(r, design.c()).value_or(J - 1);
    auto tube = [&](int j) {
        TubeCounts t{j, {}};
        for (std::int64_t y : r.y[j]) {
            t.drops.push_back(y > design.c() ? Observation::censored() : Observation::count(y));
        }
        return t;
    };
    RepetitionCounts rep{std::move(rep_id), selected, tube(selected).drops, {}};
    for (int j = 0; j < J; ++j) {
        if (j != selected) rep.other_tubes.push_back(tube(j));
    }
    return rep;
}

Experiment simulate_experiment(std::int64_t n0, int K, const DilutionDesign& design, std::uint64_t seed,
                               std::string treatment, std::string lab) {
    if (K < 1) throw DataError("K must be at least 1");
    Experiment ex{design, std::move(treatment), std::move(lab), {}};
    for (int k = 0; k < K; ++k) {
        const auto r = simulate_cascade(n0, design, mcmc::derive_seed(seed, static_cast<std::uint64_t>(k)));
        ex.reps.push_back(to_repetition(r, design, "R" + std::to_string(k + 1)));
    }
    return ex;
}

// ---------------------------------------------------------------------------

StudyReport all_vs_first_study(const DilutionDesign& design, std::int64_t n0_true, int n_sims, std::uint64_t seed,
                               const Priors& priors, unsigned threads) {
    if (n_sims < 1) throw DataError("n_sims must be at least 1");
    if (n0_true < 0 || n0_true > priors.abundance_cap()) throw DataError("N0 outside the prior range");
    const double expected = static_cast<double>(n0_true) * success_prob(design, 0).s_star;
    if (expected > design.c()) throw DataError("expected first-dilution counts exceed c");

    struct Sim {
        DiscretePosterior first, countable, recorded;
    };
    std::vector<Sim> sims(static_cast<std::size_t>(n_sims));
    auto run = [&](std::size_t s) {
        const auto r = simulate_cascade(n0_true, design, mcmc::derive_seed(seed, s));
        const auto rep = to_repetition(r, design, "S" + std::to_string(s + 1));
        sims[s] = {free_posterior(rep, design, priors, DilutionScope::Selected),
                   free_posterior(rep, design, priors, DilutionScope::CountableAndAbove),
                   free_posterior(rep, design, priors, DilutionScope::AllRecorded)};
    };
    threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(n_sims)));
    if (threads == 1) {
        for (std::size_t s = 0; s < sims.size(); ++s) run(s);
    } else {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < threads; ++t) {
            pool.emplace_back([&, t] {
                for (std::size_t s = t; s < sims.size(); s += threads) run(s);
            });
        }
    }

    std::int64_t lo = priors.abundance_cap(), hi = 0;
    for (const auto& s : sims) {
        for (const auto* p : {&s.first, &s.countable, &s.recorded}) {
            lo = std::min(lo, p->support.front());
            hi = std::max(hi, p->support.back() + p->width.back() - 1);
        }
    }
    if (hi - lo > 10'000'000) throw DataError("posterior supports too wide for a common grid");

    StudyReport out;
    out.n0_true = n0_true;
    out.n_sims = n_sims;
    const auto n = static_cast<std::size_t>(hi - lo + 1);
    out.support.resize(n);
    for (std::size_t i = 0; i < n; ++i) out.support[i] = lo + static_cast<std::int64_t>(i);
    out.pmf_first.assign(n, 0.0);
    out.pmf_countable.assign(n, 0.0);
    out.pmf_recorded.assign(n, 0.0);
    auto accumulate = [&](const DiscretePosterior& p, std::vector<double>& pmf) {
        for (std::size_t b = 0; b < p.size(); ++b) {
            const double per = p.mass(b) / static_cast<double>(p.width[b]) / n_sims;
            for (std::int64_t v = p.support[b]; v < p.support[b] + p.width[b]; ++v) pmf[v - lo] += per;
        }
    };
    for (const auto& s : sims) {
        accumulate(s.first, out.pmf_first);
        accumulate(s.countable, out.pmf_countable);
        accumulate(s.recorded, out.pmf_recorded);
    }
    for (auto* pmf : {&out.pmf_first, &out.pmf_countable, &out.pmf_recorded}) {
        double z = 0.0;
        for (double v : *pmf) z += v;
        for (double& v : *pmf) v /= z;
    }
    auto mean = [&](const std::vector<double>& pmf) {
        double m = 0.0;
        for (std::size_t i = 0; i < n; ++i) m += pmf[i] * static_cast<double>(out.support[i]);
        return m;
    };
    auto tv = [&](const std::vector<double>& a, const std::vector<double>& b) {
        double t = 0.0;
        for (std::size_t i = 0; i < n; ++i) t += std::abs(a[i] - b[i]);
        return 0.5 * t;
    };
    auto rel = [](double a, double b) { return b == 0.0 ? (a == 0.0 ? 0.0 : 1.0) : std::abs(a - b) / b; };
    out.mean_first = mean(out.pmf_first);
    out.mean_countable = mean(out.pmf_countable);
    out.mean_recorded = mean(out.pmf_recorded);
    out.tv_countable = tv(out.pmf_countable, out.pmf_first);
    out.tv_recorded = tv(out.pmf_recorded, out.pmf_first);
    out.rel_diff_countable = rel(out.mean_countable, out.mean_first);
    out.rel_diff_recorded = rel(out.mean_recorded, out.mean_first);
    return out;
}

}  // namespace dilution
