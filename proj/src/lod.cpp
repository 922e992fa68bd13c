#include "dilution/lod.hpp"

#include <algorithm>
#include <cmath>

#include "dilution/report.hpp"
#include "dilution/specfun.hpp"

namespace dilution {

double binned_upper_bound(std::vector<double> values, double credibility, double width) {
    if (values.empty()) throw DataError("no samples");
    if (!(credibility > 0.0 && credibility < 1.0)) throw specfun::DomainError("credibility must lie in (0, 1)");
    if (!(width > 0.0)) throw specfun::DomainError("bin width must be positive");
    // need #(v < L) >= m, i.e. L above the m-th smallest value
    const auto m = static_cast<std::size_t>(std::ceil(credibility * static_cast<double>(values.size())));
    std::nth_element(values.begin(), values.begin() + (m - 1), values.end());
    return width * (std::floor(values[m - 1] / width) + 1.0);
}

std::vector<double> binned_abundance(const PosteriorChain& chain, double width, double max_value) {
    const auto nbins = static_cast<std::size_t>(std::ceil(max_value / width));
    std::vector<double> mass(nbins, 0.0);
    const auto e = chain.e();
    for (double v : e) {
        const double n = std::expm1(v * std::log(10.0));
        const auto i = static_cast<std::size_t>(n / width);
        if (i < nbins) mass[i] += 1.0;
    }
    for (double& m : mass) m /= static_cast<double>(e.size());
    return mass;
}

LodResult lod(const DilutionDesign& design, int K, const Priors& priors, const LodOptions& options) {
    if (K < 1) throw DataError("LOD needs K >= 1");
    Experiment ex{design, "lod", "", {}};
    for (int k = 0; k < K; ++k) ex.reps.push_back(zero_repetition(design, "Z" + std::to_string(k + 1)));
    auto chain = fit(ex, priors, options.iterations, options.seed, options.hier);
    std::vector<double> v = chain.e();
    for (double& x : v) x = std::expm1(x * std::log(10.0));

    const double limit = binned_upper_bound(v, options.credibility, options.bin_width);
    std::sort(v.begin(), v.end());
    const double q = report::sorted_quantile(v, options.credibility);
    const double ess = chain.ess_e();
    return {K, options.credibility, limit, q, ess, std::move(chain)};
}

}  // namespace dilution
