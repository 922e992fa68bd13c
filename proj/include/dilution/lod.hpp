#pragma once

// Limit of detection: the upper credible bound L_K on 10^E - 1 after K
// all-zero repetitions at the first dilution.

#include <cstdint>
#include <vector>

#include "dilution/hier.hpp"

namespace dilution {

struct LodResult {
    int K = 0;
    double credibility = 0.95;
    double limit = 0.0;     // L_K, a multiple of the bin width
    double quantile = 0.0;  // raw empirical quantile of 10^E - 1
    double ess_e = 0.0;
    PosteriorChain chain;
};

struct LodOptions {
    double credibility = 0.95;
    double bin_width = 10.0;  // CFU
    std::size_t iterations = 1'000'000;
    std::uint64_t seed = 1;
    HierOptions hier;
};

// Throws DiagnosticFailure when the chain misses the ESS floor.
LodResult lod(const DilutionDesign& design, int K, const Priors& priors = {}, const LodOptions& options = {});

// Smallest multiple of `width` with P(V < L) >= credibility over the samples.
double binned_upper_bound(std::vector<double> values, double credibility, double width);

// Posterior of 10^E - 1 as mass per bin [i w, (i+1) w), up to `max_value`.
std::vector<double> binned_abundance(const PosteriorChain& chain, double width, double max_value);

}  // namespace dilution
