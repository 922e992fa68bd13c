#pragma once

// Exact posteriors of a single repetition's abundance N0 under the discrete
// uniform prior on {0, ..., floor(10^M)}, marginal likelihoods and Bayes
// factors between the binomial and beta-binomial observation models.
//
// The sum over N0 is restricted to an adaptive support. Bracketing starts at
// the crude estimate and doubles outward until the log-likelihood is 40 nats
// below its running maximum; the mass left outside is bounded with a
// geometric (log-concave) tail estimate and the bracket widens until that
// bound is below 1e-9. Brackets wider than 1e6 integers are summed over at
// most 1e6 equal bins by the midpoint rule.

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "dilution/design.hpp"
#include "dilution/kernels.hpp"

namespace dilution {

// Posterior mass of N0 over consecutive integer bins. With stride-1
// enumeration every bin has width 1 and support holds the atoms themselves.
struct DiscretePosterior {
    std::vector<std::int64_t> support;  // first integer of each bin, strictly increasing
    std::vector<std::int64_t> width;    // integers per bin
    std::vector<double> log_mass;       // normalized ln P(bin)
    double tail_bound = 0.0;            // bound on the probability outside the bins
    double log_evidence = 0.0;          // ln sum_n prior(n) L(n)

    std::size_t size() const noexcept { return support.size(); }
    double midpoint(std::size_t i) const {
        return static_cast<double>(support[i]) + 0.5 * static_cast<double>(width[i] - 1);
    }
    double mass(std::size_t i) const;
    double mean() const;
    // Smallest bin midpoint whose cumulative mass reaches p.
    double quantile(double p) const;
    // ln P(N0 = n); within a wide bin the mass is spread uniformly.
    double log_pmf(std::int64_t n) const;
    // Draw N0 from a uniform variate in [0, 1).
    double sample(double u) const;
};

struct SupportOptions {
    double drop_nats = 40.0;
    std::int64_t max_points = 1'000'000;
    double tail_tolerance = 1e-9;
    double plateau_tolerance = 1e-12;
};

// What the support search needs to know about a likelihood in N0.
struct LikelihoodShape {
    double start = 0.0;              // a point near the mode
    std::int64_t min_admissible = 0; // likelihood is zero below this
    bool plateau = false;            // likelihood rises to a constant (only TNTC data)
};

using LogLikelihood = std::function<double(double)>;

// Bracket [lo, hi] whose outside mass is below the tail tolerance.
struct Bracket {
    std::int64_t lo = 0;
    std::int64_t hi = 0;
    std::optional<std::int64_t> plateau_from;  // integrate [plateau_from, cap] analytically
    std::int64_t floor = 0;                    // smallest admissible N0
};

Bracket find_bracket(const LogLikelihood& loglik, const LikelihoodShape& shape, std::int64_t cap,
                     const SupportOptions& options = {});

// Posterior on a fixed bracket; the plateau bin, if any, is appended whole.
DiscretePosterior posterior_on_bracket(const LogLikelihood& loglik, const Bracket& bracket,
                                       std::int64_t cap, const SupportOptions& options = {});

LikelihoodShape shape_of(const RepLikelihood& likelihood, const DilutionDesign& design);

DiscretePosterior free_posterior(const RepetitionCounts& rep, const DilutionDesign& design,
                                 const Priors& priors = {},
                                 DilutionScope scope = DilutionScope::Selected,
                                 const SupportOptions& options = {});

// ln sum_n prior(n) L(n); -inf when the data are impossible under the prior.
double log_marginal(const RepetitionCounts& rep, const DilutionDesign& design, const Priors& priors,
                    ObservationModel model = BinomialModel{}, const SupportOptions& options = {});

struct BayesFactor {
    int dilution = 0;
    double lambda = 0.0;
    double log_marginal_binomial = 0.0;
    double log_marginal_betabinomial = 0.0;

    // beta-binomial over binomial
    double log_bf() const { return log_marginal_betabinomial - log_marginal_binomial; }
    double bf() const;
};

// 1/s* + 1 at the given dilution.
double neutral_lambda(const DilutionDesign& design, int dilution);

// Beta-binomial vs binomial for the repetition's selected dilution. Both
// marginals are summed over the union of the two models' brackets.
BayesFactor bayes_factor(const RepetitionCounts& rep, const DilutionDesign& design,
                         const Priors& priors = {}, std::optional<double> lambda = std::nullopt,
                         const SupportOptions& options = {});

// One Bayes factor per recorded tube of the repetition, each tube treated as
// its own dataset; the selected dilution comes first.
std::vector<BayesFactor> per_tube_bayes_factors(const RepetitionCounts& rep, const DilutionDesign& design,
                                                const Priors& priors = {},
                                                std::optional<double> lambda = std::nullopt);

}  // namespace dilution
