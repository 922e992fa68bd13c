#include "dilution/exactpost.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dilution/specfun.hpp"

namespace dilution {

namespace sf = specfun;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double log_add(double a, double b) {
    if (a == -kInf) return b;
    if (b == -kInf) return a;
    const double m = std::max(a, b);
    return m + std::log1p(std::exp(-std::abs(a - b)));
}

// ln of the probability mass beyond `edge` of a log-concave sequence whose
// last step (towards the tail) changed the log-likelihood by `step` < 0,
// capped by `count` copies of the edge value.
double log_tail(double edge_value, double step, std::int64_t count) {
    if (count <= 0 || edge_value == -kInf) return -kInf;
    const double flat = edge_value + std::log(static_cast<double>(count));
    if (!(step < 0.0)) return flat;
    const double geometric = edge_value + step - sf::log1m_exp(step);
    return std::min(flat, geometric);
}

}  // namespace

// ---------------------------------------------------------------------------

double DiscretePosterior::mass(std::size_t i) const { return std::exp(log_mass.at(i)); }

double DiscretePosterior::mean() const {
    double m = 0.0;
    for (std::size_t i = 0; i < size(); ++i) m += mass(i) * midpoint(i);
    return m;
}

double DiscretePosterior::quantile(double p) const {
    if (!(p >= 0.0 && p <= 1.0)) throw sf::DomainError("quantile level outside [0, 1]");
    double cum = 0.0;
    for (std::size_t i = 0; i < size(); ++i) {
        cum += mass(i);
        if (cum >= p) return midpoint(i);
    }
    return midpoint(size() - 1);
}

double DiscretePosterior::log_pmf(std::int64_t n) const {
    auto it = std::upper_bound(support.begin(), support.end(), n);
    if (it == support.begin()) return -kInf;
    const auto i = static_cast<std::size_t>(std::distance(support.begin(), it) - 1);
    if (n >= support[i] + width[i]) return -kInf;
    return log_mass[i] - std::log(static_cast<double>(width[i]));
}

double DiscretePosterior::sample(double u) const {
    double cum = 0.0;
    for (std::size_t i = 0; i < size(); ++i) {
        const double m = mass(i);
        if (u < cum + m || i + 1 == size()) {
            if (width[i] == 1) return static_cast<double>(support[i]);
            const double frac = std::clamp((u - cum) / m, 0.0, 1.0);
            const auto offset = std::min(width[i] - 1, static_cast<std::int64_t>(frac * static_cast<double>(width[i])));
            return static_cast<double>(support[i] + offset);
        }
        cum += m;
    }
    return static_cast<double>(support.back());
}

// ---------------------------------------------------------------------------

Bracket find_bracket(const LogLikelihood& loglik, const LikelihoodShape& shape, std::int64_t cap,
                     const SupportOptions& options) {
    const std::int64_t floor_n = shape.min_admissible;
    if (floor_n > cap) return {1, 0, std::nullopt, floor_n};  // empty: data impossible under the prior

    auto L = [&](std::int64_t n) { return loglik(static_cast<double>(n)); };

    if (shape.plateau) {
        std::int64_t n = std::max<std::int64_t>(floor_n, 1);
        double v = L(n);
        while (v < -options.plateau_tolerance && n < cap) {
            n = std::min(cap, 2 * n);
            v = L(n);
        }
        if (v >= -options.plateau_tolerance) return {floor_n, n - 1, n, floor_n};
        // cap reached before the plateau: an ordinary increasing likelihood
    }

    const auto start = std::clamp<std::int64_t>(static_cast<std::int64_t>(std::llround(shape.start)), floor_n, cap);
    double best = L(start);
    if (!std::isfinite(best)) throw DataError("likelihood is zero at the search start");

    std::int64_t lo = start, hi = start;
    auto expand_up = [&](std::int64_t from) {
        std::int64_t d = std::max<std::int64_t>(1, from - start);
        while (hi < cap) {
            hi = std::min(cap, start + d);
            const double v = L(hi);
            best = std::max(best, v);
            if (v < best - options.drop_nats) break;
            d *= 2;
        }
    };
    auto expand_down = [&](std::int64_t from) {
        std::int64_t d = std::max<std::int64_t>(1, start - from);
        while (lo > floor_n) {
            lo = std::max(floor_n, start - d);
            const double v = L(lo);
            best = std::max(best, v);
            if (v < best - options.drop_nats) break;
            d *= 2;
        }
    };
    expand_up(start);
    expand_down(start);

    const double log_tol = std::log(options.tail_tolerance);
    for (int round = 0; round < 200; ++round) {
        double up = -kInf, down = -kInf;
        if (hi < cap) {
            const double v = L(hi);
            up = log_tail(v, v - L(hi - 1), cap - hi);
        }
        if (lo > floor_n) {
            const double v = L(lo);
            down = log_tail(v, v - L(lo + 1), lo - floor_n);
        }
        // relative to the largest single term, which underestimates the total
        if (log_add(up, down) - best < log_tol) break;
        if (up - best >= log_tol - std::log(2.0)) expand_up(2 * hi - start + 1);
        if (down - best >= log_tol - std::log(2.0)) expand_down(2 * lo - start - 1);
    }
    return {lo, hi, std::nullopt, floor_n};
}

DiscretePosterior posterior_on_bracket(const LogLikelihood& loglik, const Bracket& bracket, std::int64_t cap,
                                       const SupportOptions& options) {
    DiscretePosterior post;
    const std::int64_t span = bracket.hi >= bracket.lo ? bracket.hi - bracket.lo + 1 : 0;
    const std::int64_t w = span <= options.max_points ? 1 : (span + options.max_points - 1) / options.max_points;
    const std::int64_t bins = span == 0 ? 0 : (span + w - 1) / w;
    post.support.reserve(static_cast<std::size_t>(bins) + 1);
    post.width.reserve(post.support.capacity());
    post.log_mass.reserve(post.support.capacity());

    double tail_edge = -kInf;
    for (std::int64_t b = 0; b < bins; ++b) {
        const std::int64_t l = bracket.lo + b * w;
        const std::int64_t width = std::min(w, bracket.hi - l + 1);
        const double mid = static_cast<double>(l) + 0.5 * static_cast<double>(width - 1);
        post.support.push_back(l);
        post.width.push_back(width);
        post.log_mass.push_back(loglik(mid) + (width > 1 ? std::log(static_cast<double>(width)) : 0.0));
    }
    if (bracket.plateau_from) {
        const std::int64_t l = *bracket.plateau_from;
        const std::int64_t width = cap - l + 1;
        post.support.push_back(l);
        post.width.push_back(width);
        post.log_mass.push_back(loglik(static_cast<double>(l)) + std::log(static_cast<double>(width)));
    }
    if (post.support.empty()) {
        post.log_evidence = -kInf;
        return post;
    }
    const double log_z = sf::log_sum_exp(post.log_mass);
    post.log_evidence = log_z - std::log(static_cast<double>(cap) + 1.0);
    if (log_z == -kInf) return post;
    for (double& v : post.log_mass) v -= log_z;

    // Excluded tails, relative to the total.
    auto L = [&](std::int64_t n) { return loglik(static_cast<double>(n)); };
    if (!bracket.plateau_from && span > 0) {
        if (bracket.hi < cap) {
            const double v = L(bracket.hi);
            tail_edge = log_add(tail_edge, log_tail(v, v - L(bracket.hi - 1), cap - bracket.hi));
        }
        if (bracket.lo > bracket.floor) {
            const double v = L(bracket.lo);
            tail_edge = log_add(tail_edge, log_tail(v, v - L(bracket.lo + 1), bracket.lo - bracket.floor));
        }
    }
    post.tail_bound = std::exp(tail_edge - log_z);
    return post;
}

LikelihoodShape shape_of(const RepLikelihood& likelihood, const DilutionDesign& design) {
    LikelihoodShape shape;
    shape.start = likelihood.crude_estimate();
    shape.min_admissible = likelihood.max_count();
    for (const auto& t : likelihood.tubes()) {
        if (t.censored() > 0) shape.min_admissible = std::max<std::int64_t>(shape.min_admissible, design.c() + 1);
    }
    shape.plateau = likelihood.only_censored();
    return shape;
}

DiscretePosterior free_posterior(const RepetitionCounts& rep, const DilutionDesign& design, const Priors& priors,
                                 DilutionScope scope, const SupportOptions& options) {
    priors.validate();
    const RepLikelihood lik(rep, design, scope);
    const auto cap = priors.abundance_cap();
    const LogLikelihood f = [&](double n) { return lik(n); };
    const auto bracket = find_bracket(f, shape_of(lik, design), cap, options);
    auto post = posterior_on_bracket(f, bracket, cap, options);
    if (post.log_evidence == -kInf) throw DataError("repetition " + rep.rep_id + ": data impossible under the prior");
    return post;
}

double log_marginal(const RepetitionCounts& rep, const DilutionDesign& design, const Priors& priors,
                    ObservationModel model, const SupportOptions& options) {
    priors.validate();
    const RepLikelihood lik(rep, design, DilutionScope::Selected, model);
    const auto cap = priors.abundance_cap();
    const LogLikelihood f = [&](double n) { return lik(n); };
    const auto bracket = find_bracket(f, shape_of(lik, design), cap, options);
    return posterior_on_bracket(f, bracket, cap, options).log_evidence;
}

// ---------------------------------------------------------------------------

double BayesFactor::bf() const { return std::exp(log_bf()); }

double neutral_lambda(const DilutionDesign& design, int dilution) {
    return 1.0 / success_prob(design, dilution).s_star + 1.0;
}

BayesFactor bayes_factor(const RepetitionCounts& rep, const DilutionDesign& design, const Priors& priors,
                         std::optional<double> lambda, const SupportOptions& options) {
    priors.validate();
    BayesFactor out;
    out.dilution = rep.selected_dilution;
    out.lambda = lambda.value_or(neutral_lambda(design, rep.selected_dilution));
    const RepLikelihood bin(rep, design, DilutionScope::Selected, BinomialModel{});
    const RepLikelihood bb(rep, design, DilutionScope::Selected, BetaBinomialModel{out.lambda});
    const auto cap = priors.abundance_cap();
    const LogLikelihood fb = [&](double n) { return bin(n); };
    const LogLikelihood fbb = [&](double n) { return bb(n); };
    const auto shape = shape_of(bin, design);
    const auto b1 = find_bracket(fb, shape, cap, options);
    const auto b2 = find_bracket(fbb, shape, cap, options);

    Bracket joint;
    if (b1.hi < b1.lo && !b1.plateau_from) {
        joint = b2;
    } else if (b2.hi < b2.lo && !b2.plateau_from) {
        joint = b1;
    } else {
        joint.floor = std::min(b1.floor, b2.floor);
        joint.lo = std::min(b1.lo, b2.lo);
        joint.hi = std::max(b1.hi, b2.hi);
        if (b1.plateau_from && b2.plateau_from) {
            joint.plateau_from = std::max(*b1.plateau_from, *b2.plateau_from);
            joint.hi = *joint.plateau_from - 1;
        } else if (b1.plateau_from || b2.plateau_from) {
            joint.hi = cap;
        }
    }
    out.log_marginal_binomial = posterior_on_bracket(fb, joint, cap, options).log_evidence;
    out.log_marginal_betabinomial = posterior_on_bracket(fbb, joint, cap, options).log_evidence;
    return out;
}

std::vector<BayesFactor> per_tube_bayes_factors(const RepetitionCounts& rep, const DilutionDesign& design,
                                                const Priors& priors, std::optional<double> lambda) {
    std::vector<BayesFactor> out;
    out.push_back(bayes_factor(rep, design, priors, lambda));
    for (const auto& tube : rep.other_tubes) {
        const RepetitionCounts single{rep.rep_id, tube.dilution, tube.drops, {}};
        out.push_back(bayes_factor(single, design, priors, lambda));
    }
    return out;
}

}  // namespace dilution
