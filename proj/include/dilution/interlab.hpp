#pragma once

// Inter-laboratory hierarchy: each lab l carries its own intra-lab model
// (E_l, A_l, x_l) and E_l ~ Ga(shape A_g, scale E_g / A_g) across labs, with
// E_g ~ U(0, M) and A_g ~ Exp(scale b). Parameters are laid out as
// (e_g, a_g, e_1, a_1, x_1.., e_2, a_2, x_2.., ...).

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dilution/hier.hpp"

namespace dilution {

struct InterLabParams {
    double e_g = 0.0;
    double a_g = 0.0;
    std::vector<HierParams> labs;
};

struct InterlabOptions {
    HierOptions lab;        // per-lab scope, N0 prior and coordinates
    double min_ess = 1000;  // on E_g
    std::optional<std::size_t> burn_in;
};

class InterlabModel {
public:
    InterlabModel(const std::vector<Experiment>& labs, const Priors& priors, const InterlabOptions& options = {});

    std::size_t L() const noexcept { return labs_.size(); }
    std::size_t dim() const noexcept { return dim_; }
    // index of e_l; a_l follows, then lab l's x
    std::size_t offset(std::size_t l) const { return offsets_.at(l); }
    const HierModel& lab(std::size_t l) const { return labs_.at(l); }
    const Priors& priors() const noexcept { return priors_; }

    bool in_support(std::span<const double> params) const;
    double log_posterior(std::span<const double> params) const;

private:
    std::vector<HierModel> labs_;
    std::vector<std::size_t> offsets_;
    std::size_t dim_ = 2;
    Priors priors_;
};

double interlab_log_posterior(const InterLabParams& params, const std::vector<Experiment>& labs, const Priors& priors);

struct InterlabChain {
    mcmc::Chain chain;
    std::vector<Experiment> labs;
    Priors priors;
    InterlabOptions options;
    std::vector<std::size_t> offsets;

    std::vector<double> e_g() const { return chain.kept(0); }
    std::vector<double> a_g() const { return chain.kept(1); }
    std::vector<double> e_lab(std::size_t l) const { return chain.kept(offsets.at(l)); }
    std::vector<double> a_lab(std::size_t l) const { return chain.kept(offsets.at(l) + 1); }
    std::vector<std::string> names() const;
    double ess_e_g() const { return chain.ess.empty() ? 0.0 : chain.ess[0]; }
};

class InterlabDiagnosticFailure : public std::runtime_error {
public:
    InterlabDiagnosticFailure(const std::string& what, std::shared_ptr<const InterlabChain> chain)
        : std::runtime_error(what), chain_(std::move(chain)) {}
    const InterlabChain& chain() const { return *chain_; }

private:
    std::shared_ptr<const InterlabChain> chain_;
};

InterlabChain fit_interlab_unchecked(const std::vector<Experiment>& labs, const Priors& priors, std::size_t iterations,
                                     std::uint64_t seed, const InterlabOptions& options = {});

// Throws InterlabDiagnosticFailure when ESS(E_g) < options.min_ess.
InterlabChain fit_interlab(const std::vector<Experiment>& labs, const Priors& priors, std::size_t iterations = 500000,
                           std::uint64_t seed = 1, const InterlabOptions& options = {});

// Log reductions between a control and a treated inter-lab fit, paired by
// iteration after truncation to the shorter kept chain.
struct InterlabReductions {
    std::vector<double> global;             // E_g control - E_g treated
    std::vector<std::vector<double>> labs;  // E_l control - E_l treated
    std::vector<std::string> lab_names;
};

InterlabReductions interlab_log_reductions(const InterlabChain& control, const InterlabChain& treated);

struct ReproducibilityTable {
    std::vector<std::string> lab_names;
    std::vector<double> mean_abs_diff;  // E|LR_g - LR_l|
    std::vector<double> prob_exceed;    // P(LR_l > threshold)
    double global_prob_exceed = 0.0;    // P(LR_g > threshold)
    double threshold = 3.0;
};

// All series must have the same length.
ReproducibilityTable reproducibility_metrics(std::span<const double> global_lr,
                                             const std::vector<std::vector<double>>& lab_lr, double threshold = 3.0,
                                             std::vector<std::string> lab_names = {});

ReproducibilityTable reproducibility_metrics(const InterlabReductions& reductions, double threshold = 3.0);

}  // namespace dilution
