#pragma once

// Forward simulation of the dilution cascade and the comparison of
// all-dilution against first-dilution posteriors over simulated data sets.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dilution/design.hpp"
#include "dilution/exactpost.hpp"
#include "dilution/mcmc.hpp"

namespace dilution {

// Bi(n, p): inversion when n p < 30, BTRS (transformed rejection with
// squeeze) otherwise.
std::int64_t sample_binomial(std::int64_t n, double p, mcmc::Rng& rng);

struct CascadeRealization {
    std::vector<std::int64_t> n;               // N_0 .. N_{J-1}
    std::vector<std::vector<std::int64_t>> y;  // J x D drop counts
};

// Tube 1 keeps each CFU of N_0 with probability 1/(alpha alpha0), later
// tubes with 1/alpha. A drop from tube j keeps each CFU with probability
// (1 - q)/alpha_p, times 1/alpha0 at j = 0.
CascadeRealization simulate_cascade(std::int64_t n0, const DilutionDesign& design, mcmc::Rng& rng);
CascadeRealization simulate_cascade(std::int64_t n0, const DilutionDesign& design, std::uint64_t seed);

// Smallest j whose D drops are all <= c; nullopt when every dilution has a
// drop above c.
std::optional<int> first_countable_dilution(const CascadeRealization& r, int c);

// The realization as recorded data: counts above c become TNTC marks, the
// first countable dilution is selected (the last one if none is) and every
// other dilution is kept as an extra tube.
RepetitionCounts to_repetition(const CascadeRealization& r, const DilutionDesign& design, std::string rep_id);

// K simulated repetitions of one experiment, seeds derived from `seed`.
Experiment simulate_experiment(std::int64_t n0, int K, const DilutionDesign& design, std::uint64_t seed,
                               std::string treatment = "sim", std::string lab = "");

struct StudyReport {
    std::int64_t n0_true = 0;
    int n_sims = 0;
    std::vector<std::int64_t> support;  // common integer grid
    std::vector<double> pmf_first;      // selected dilution only
    std::vector<double> pmf_countable;  // selected and all higher dilutions
    std::vector<double> pmf_recorded;   // every dilution, TNTC tubes as censored terms
    double mean_first = 0.0, mean_countable = 0.0, mean_recorded = 0.0;
    double tv_countable = 0.0, tv_recorded = 0.0;  // against pmf_first
    // |mean_all - mean_first| / mean_first; 0 when both means are 0
    double rel_diff_countable = 0.0, rel_diff_recorded = 0.0;
};

// Averages the free posteriors of N0 over n_sims simulated repetitions.
// Requires n0_true alpha0^-1 alpha_p^-1 (1 - q) <= c. Results do not depend
// on `threads`.
StudyReport all_vs_first_study(const DilutionDesign& design, std::int64_t n0_true, int n_sims = 120,
                               std::uint64_t seed = 1, const Priors& priors = {}, unsigned threads = 1);

}  // namespace dilution
