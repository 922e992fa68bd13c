#pragma once

// Probability kernels of the collapsed dilution model.
//
// After integrating out the intermediate tubes, a drop plated from dilution j
// counts Y ~ Bi(N0, s*) colonies with s* = alpha^-j alpha_p^-1 alpha0^-1 (1-q).
// TNTC drops contribute P[Y > c]. The hierarchy places a gamma law, shape a
// and scale e/a, on x = log10(N0 + 1).

#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <variant>
#include <vector>

#include "dilution/design.hpp"

namespace dilution {

struct SuccessProb {
    int dilution = 0;
    double s_star = 0.0;
};

SuccessProb success_prob(const DilutionDesign& design, int j,
                         std::optional<double> q_override = std::nullopt);

struct BinomialModel {};
// S ~ Beta(s* lambda, (1 - s*) lambda) mixed over the drop success probability.
struct BetaBinomialModel {
    double lambda = 0.0;
};
using ObservationModel = std::variant<BinomialModel, BetaBinomialModel>;

// Log-likelihood of N0 given the drops of one tube.
class TubeLikelihood {
public:
    TubeLikelihood(std::span<const Observation> drops, double s_star, std::int64_t c,
                   ObservationModel model = BinomialModel{});

    double operator()(double n0) const;

    double s_star() const noexcept { return s_star_; }
    std::int64_t max_count() const noexcept { return max_count_; }
    std::int64_t total_count() const noexcept { return total_count_; }
    int counted() const noexcept { return counted_; }
    int censored() const noexcept { return censored_; }

private:
    std::vector<std::pair<std::int64_t, int>> histogram_;  // distinct count, multiplicity
    std::vector<double> count_const_;                      // per histogram entry
    double zero_const_ = 0.0;
    int zeros_ = 0;
    int counted_ = 0;
    int censored_ = 0;
    std::int64_t max_count_ = 0;
    std::int64_t total_count_ = 0;
    double s_star_;
    double log1m_s_;
    std::int64_t c_;
    ObservationModel model_;
};

// Which recorded tubes of a repetition enter the likelihood.
enum class DilutionScope {
    Selected,            // the selected (lowest countable) dilution only
    CountableAndAbove,   // selected dilution plus every higher recorded dilution
    AllRecorded,         // every recorded dilution, TNTC tubes included
};

class RepLikelihood {
public:
    RepLikelihood(const RepetitionCounts& rep, const DilutionDesign& design,
                  DilutionScope scope = DilutionScope::Selected,
                  ObservationModel model = BinomialModel{});

    double operator()(double n0) const;

    // Rough location of the likelihood mode, used to seed support searches.
    double crude_estimate() const;
    bool only_censored() const;
    std::int64_t max_count() const;
    const std::vector<TubeLikelihood>& tubes() const noexcept { return tubes_; }

private:
    std::vector<TubeLikelihood> tubes_;
    std::int64_t c_;
};

double rep_log_likelihood(const RepetitionCounts& rep, double n0, const DilutionDesign& design);

// Gamma density of x with shape a and scale e/a (mean e, sd e/sqrt(a)).
double log_hier_density(double x, double e, double a);

// Density of N0 when log10(N0 + 1) follows the gamma law above.
double log_n0_density(double n0, double e, double a);

double log_betabinomial_pmf(std::int64_t y, double n, double s_star, double lambda);
double log_betabinomial_sf(std::int64_t cthr, double n, double s_star, double lambda);

}  // namespace dilution
