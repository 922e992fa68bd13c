#pragma once

// t-walk sampler (two coupled points; walk, traverse, blow and hop moves)
// and chain diagnostics.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace dilution::mcmc {

// Seeded generator. Uniforms and normals are derived from the raw 64-bit
// stream here, so chains do not depend on the standard library's
// distribution implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }  // [0, 1)
    double uniform_open() {  // (0, 1)
        double u;
        do u = uniform(); while (u == 0.0);
        return u;
    }
    double normal();

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

// Independent seed for sub-task `index` of a run seeded with `master`.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

struct Chain {
    std::size_t dim = 0;
    std::vector<double> samples;   // row-major, length() x dim
    std::vector<double> log_post;  // per row
    std::uint64_t seed = 0;
    double acceptance_rate = 0.0;
    std::size_t burn_in = 0;       // rows excluded from diagnostics and summaries
    std::vector<double> iat;       // per dimension, after burn-in
    std::vector<double> ess;       // per dimension, after burn-in

    std::size_t length() const noexcept { return log_post.size(); }
    double at(std::size_t t, std::size_t k) const { return samples[t * dim + k]; }
    std::span<const double> row(std::size_t t) const { return {samples.data() + t * dim, dim}; }
    // Column k from row `from` on.
    std::vector<double> column(std::size_t k, std::size_t from = 0) const;
    // Column k after burn-in.
    std::vector<double> kept(std::size_t k) const { return column(k, burn_in); }
};

using LogDensity = std::function<double(std::span<const double>)>;
using SupportCheck = std::function<bool(std::span<const double>)>;

struct TwalkOptions {
    double aw = 1.5;     // walk scale
    double at = 6.0;     // traverse scale
    double n1phi = 4.0;  // expected number of coordinates moved
    // cumulative move probabilities: traverse, walk, blow, hop
    double p_traverse = 0.4918;
    double p_walk = 0.4918;
    double p_blow = 0.0082;
    std::optional<std::size_t> burn_in;  // default max(1000, 2 max IAT)
    bool diagnostics = true;
};

class InvalidStart : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

Chain sample(const LogDensity& log_density, const SupportCheck& support, std::span<const double> init_a,
             std::span<const double> init_b, std::size_t iterations, std::uint64_t seed,
             const TwalkOptions& options = {});

// Integrated autocorrelation time 1 + 2 sum rho_k, truncated by Geyer's
// initial positive sequence. +inf for a constant series.
double iat(std::span<const double> series);

// T / IAT per dimension after burn-in, never above T.
std::vector<double> ess(const Chain& chain);

// max(1000, 2 max IAT), capped at half the chain.
std::size_t default_burn_in(const Chain& chain);

// Fills burn_in (unless fixed), iat and ess.
void compute_diagnostics(Chain& chain, std::optional<std::size_t> burn_in = std::nullopt);

// One row per iteration: the parameters, then the log-posterior.
void write_chain_csv(std::ostream& out, const Chain& chain, std::span<const std::string> names);

}  // namespace dilution::mcmc
