#pragma once

// Intra-lab hierarchy: x_k = log10(N0_k + 1) ~ Ga(shape A, scale E/A),
// E ~ U(0, M), A ~ Exp(scale b). Parameters are laid out as (e, a, x_1..x_K).

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dilution/design.hpp"
#include "dilution/kernels.hpp"
#include "dilution/mcmc.hpp"

namespace dilution {

// Prior on each abundance given (E, A).
enum class N0Prior {
    // gamma law on x_k; the density on N0 is its change of variables
    Hierarchical,
    // adds ln(10^x ln 10) to the gamma term, i.e. an extra factor uniform in N0
    UniformN0Surrogate,
};

struct HierParams {
    double e = 0.0;
    double a = 0.0;
    std::vector<double> x;
};

// Coordinates the sampler moves in; samples are always stored as (e, a, x).
enum class Coordinates {
    Natural,
    Log,           // ln e, ln a, ln x_k
    // ln a; ln e and the ln x_k of diffuse reps measured in units of
    // 1/sqrt(a), which removes the funnel between A and the rest
    Standardized,
};

struct HierOptions {
    N0Prior n0_prior = N0Prior::Hierarchical;
    DilutionScope scope = DilutionScope::Selected;
    double min_ess = 2000.0;              // on E
    Coordinates coordinates = Coordinates::Standardized;
    std::optional<std::size_t> burn_in;   // default rule when unset
};

class HierModel {
public:
    HierModel(const Experiment& experiment, const Priors& priors, HierOptions options = {});

    std::size_t K() const noexcept { return reps_.size(); }
    std::size_t dim() const noexcept { return reps_.size() + 2; }
    const Priors& priors() const noexcept { return priors_; }
    const HierOptions& options() const noexcept { return options_; }

    bool in_support(std::span<const double> params) const;
    // Joint log-posterior at (e, a, x_1..x_K); -inf outside the support.
    double log_posterior(std::span<const double> params) const;
    // Repetition likelihoods plus the abundance prior, without priors on (e, a).
    double log_block(double e, double a, std::span<const double> x) const;
    double rep_log_likelihood_at(std::size_t k, double x) const;

private:
    std::vector<RepLikelihood> reps_;
    Priors priors_;
    HierOptions options_;
};

double log_posterior(const HierParams& params, const Experiment& experiment, const Priors& priors,
                     N0Prior n0_prior = N0Prior::Hierarchical);

// ln prior of (e, a): uniform on (0, M) and exponential with scale b.
double log_prior_ea(double e, double a, const Priors& priors);

struct PosteriorChain {
    mcmc::Chain chain;
    Experiment experiment;
    Priors priors;
    HierOptions options;

    std::vector<double> e() const { return chain.kept(0); }
    std::vector<double> a() const { return chain.kept(1); }
    std::vector<double> x(std::size_t k) const { return chain.kept(k + 2); }
    std::vector<std::string> names() const;
    double ess_e() const { return chain.ess.empty() ? 0.0 : chain.ess[0]; }
};

class DiagnosticFailure : public std::runtime_error {
public:
    DiagnosticFailure(const std::string& what, std::shared_ptr<const PosteriorChain> chain)
        : std::runtime_error(what), chain_(std::move(chain)) {}
    const PosteriorChain& chain() const { return *chain_; }

private:
    std::shared_ptr<const PosteriorChain> chain_;
};

// Two overdispersed starting points: each x_k drawn from its free posterior,
// e the mean of the x_k, a drawn from its prior.
std::pair<std::vector<double>, std::vector<double>> initial_points(const HierModel& model,
                                                                   const Experiment& experiment,
                                                                   mcmc::Rng& rng);

// Runs the sampler without checking the ESS floor.
PosteriorChain fit_unchecked(const Experiment& experiment, const Priors& priors, std::size_t iterations,
                             std::uint64_t seed, const HierOptions& options = {});

// As fit_unchecked; throws DiagnosticFailure when ESS(E) < options.min_ess.
PosteriorChain fit(const Experiment& experiment, const Priors& priors, std::size_t iterations = 500000,
                   std::uint64_t seed = 1, const HierOptions& options = {});

// P(E < e_h | data) from the kept samples.
double activation_probability(const PosteriorChain& chain, double e_h);

struct LogReduction {
    std::vector<double> samples;  // E_control - E_treated, paired by iteration
    double threshold = 0.0;
    double prob_exceed = 0.0;
};

LogReduction log_reduction(std::span<const double> control_e, std::span<const double> treated_e, double threshold);
LogReduction log_reduction(const PosteriorChain& control, const PosteriorChain& treated, double threshold);

struct ClassicalSummary {
    double mean = 0.0;
    double sd = 0.0;
    double lower = 0.0;  // mean - 3 sd, may be negative
    double upper = 0.0;
};

// Mean and sample sd of log10(crude abundance + 1) across repetitions.
ClassicalSummary classical_summary(const Experiment& experiment);

}  // namespace dilution
