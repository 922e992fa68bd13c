#include "dilution/mcmc.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <numbers>
#include <ostream>

#include "dilution/report.hpp"

namespace dilution::mcmc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

double log_normal_density(std::span<const double> at, std::span<const double> centre, std::span<const char> moved,
                          double sd) {
    double ss = 0.0;
    int n = 0;
    for (std::size_t i = 0; i < at.size(); ++i) {
        if (!moved[i]) continue;
        const double d = at[i] - centre[i];
        ss += d * d;
        ++n;
    }
    return -0.5 * ss / (sd * sd) - n * std::log(sd) - 0.5 * n * std::log(2.0 * std::numbers::pi);
}

double spread(std::span<const double> h, std::span<const double> o, std::span<const char> moved) {
    double s = 0.0;
    for (std::size_t i = 0; i < h.size(); ++i) {
        if (moved[i]) s = std::max(s, std::abs(h[i] - o[i]));
    }
    return s;
}

// FFTW planning is not thread-safe.
std::mutex fftw_planner_mutex;

}  // namespace

double Rng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u, v, s;
    do {
        u = 2.0 * uniform() - 1.0;
        v = 2.0 * uniform() - 1.0;
        s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    has_spare_ = true;
    return u * f;
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
    std::uint64_t state = master ^ (0xd1b54a32d192ed03ULL * (index + 1));
    splitmix64(state);
    return splitmix64(state);
}

std::vector<double> Chain::column(std::size_t k, std::size_t from) const {
    std::vector<double> out;
    if (from >= length()) return out;
    out.reserve(length() - from);
    for (std::size_t t = from; t < length(); ++t) out.push_back(at(t, k));
    return out;
}

// ---------------------------------------------------------------------------

Chain sample(const LogDensity& log_density, const SupportCheck& support, std::span<const double> init_a,
             std::span<const double> init_b, std::size_t iterations, std::uint64_t seed,
             const TwalkOptions& options) {
    const std::size_t n = init_a.size();
    if (n == 0 || init_b.size() != n) throw InvalidStart("initial points must have the same nonzero dimension");
    for (std::size_t i = 0; i < n; ++i) {
        if (init_a[i] == init_b[i]) throw InvalidStart("initial points must differ in every coordinate");
    }
    if (!support(init_a) || !support(init_b)) throw InvalidStart("initial point outside the support");

    std::vector<double> x(init_a.begin(), init_a.end()), xp(init_b.begin(), init_b.end());
    double lx = log_density(x), lxp = log_density(xp);
    if (!std::isfinite(lx) || !std::isfinite(lxp)) throw InvalidStart("log density not finite at an initial point");

    Chain chain;
    chain.dim = n;
    chain.seed = seed;
    chain.samples.reserve(iterations * n);
    chain.log_post.reserve(iterations);

    Rng rng(seed);
    const double pphi = std::min(static_cast<double>(n), options.n1phi) / static_cast<double>(n);
    const double c_walk = options.p_traverse + options.p_walk;
    const double c_blow = c_walk + options.p_blow;
    const double aw = options.aw, at = options.at;
    const double p_beta_small = (at - 1.0) / (2.0 * at);

    std::vector<double> y(n);
    std::vector<char> moved(n);
    std::size_t accepted = 0;

    for (std::size_t it = 0; it < iterations; ++it) {
        // which point moves; the other one is the pivot
        const bool move_second = rng.uniform() < 0.5;
        std::vector<double>& h = move_second ? xp : x;
        const std::vector<double>& o = move_second ? x : xp;
        double& lh = move_second ? lxp : lx;

        const double kernel = rng.uniform();
        int nphi = 0;
        do {
            nphi = 0;
            for (std::size_t i = 0; i < n; ++i) {
                moved[i] = rng.uniform() < pphi;
                nphi += moved[i];
            }
        } while (nphi == 0);

        double log_ratio_extra = 0.0;  // proposal terms of the acceptance ratio
        bool blow_or_hop = false;
        double forward_sd = 0.0;
        bool hop = false;
        if (kernel < options.p_traverse) {
            double beta;
            const double u = rng.uniform_open();
            if (rng.uniform() < p_beta_small) {
                beta = std::exp(std::log(u) / (at + 1.0));
            } else {
                beta = std::exp(std::log(u) / (1.0 - at));
            }
            for (std::size_t i = 0; i < n; ++i) y[i] = moved[i] ? o[i] + beta * (o[i] - h[i]) : h[i];
            log_ratio_extra = (nphi - 2) * std::log(beta);
        } else if (kernel < c_walk) {
            for (std::size_t i = 0; i < n; ++i) {
                if (moved[i]) {
                    const double u = rng.uniform();
                    const double z = (aw / (1.0 + aw)) * (aw * u * u + 2.0 * u - 1.0);
                    y[i] = h[i] + (h[i] - o[i]) * z;
                } else {
                    y[i] = h[i];
                }
            }
        } else {
            blow_or_hop = true;
            hop = kernel >= c_blow;
            const double sigma = spread(h, o, moved);
            forward_sd = hop ? sigma / 3.0 : sigma;
            const std::vector<double>& centre = hop ? h : o;
            for (std::size_t i = 0; i < n; ++i) y[i] = moved[i] ? centre[i] + forward_sd * rng.normal() : h[i];
        }

        bool ok = true;
        for (std::size_t i = 0; i < n && ok; ++i) ok = y[i] != o[i];
        if (ok && std::all_of(y.begin(), y.end(), [](double v) { return std::isfinite(v); }) && support(y)) {
            const double ly = log_density(y);
            if (std::isfinite(ly) || ly == -kInf) {
                double log_a = ly - lh + log_ratio_extra;
                if (blow_or_hop && ly != -kInf) {
                    const double back_sigma = spread(y, o, moved);
                    if (back_sigma > 0.0 && forward_sd > 0.0) {
                        const double back_sd = hop ? back_sigma / 3.0 : back_sigma;
                        const double fwd = log_normal_density(y, hop ? h : o, moved, forward_sd);
                        const double back = log_normal_density(h, hop ? std::span<const double>(y) : o, moved, back_sd);
                        log_a += back - fwd;
                    } else {
                        log_a = -kInf;
                    }
                }
                if (ly != -kInf && (log_a >= 0.0 || std::log(rng.uniform_open()) < log_a)) {
                    std::copy(y.begin(), y.end(), h.begin());
                    lh = ly;
                    ++accepted;
                }
            }
        }
        chain.samples.insert(chain.samples.end(), x.begin(), x.end());
        chain.log_post.push_back(lx);
    }
    chain.acceptance_rate = iterations ? static_cast<double>(accepted) / static_cast<double>(iterations) : 0.0;
    if (options.diagnostics && iterations >= 100) compute_diagnostics(chain, options.burn_in);
    return chain;
}

// ---------------------------------------------------------------------------

double iat(std::span<const double> series) {
    const std::size_t T = series.size();
    if (T < 2) return kInf;
    double mean = 0.0;
    for (double v : series) mean += v;
    mean /= static_cast<double>(T);
    double var = 0.0;
    for (double v : series) var += (v - mean) * (v - mean);
    if (!(var > 0.0)) return kInf;

    std::size_t N = 1;
    while (N < 2 * T) N <<= 1;
    std::vector<double> buf(N, 0.0);
    for (std::size_t t = 0; t < T; ++t) buf[t] = series[t] - mean;
    auto* spec = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * (N / 2 + 1)));
    fftw_plan fwd, inv;
    {
        std::lock_guard lock(fftw_planner_mutex);
        fwd = fftw_plan_dft_r2c_1d(static_cast<int>(N), buf.data(), spec, FFTW_ESTIMATE);
        inv = fftw_plan_dft_c2r_1d(static_cast<int>(N), spec, buf.data(), FFTW_ESTIMATE);
    }
    fftw_execute(fwd);
    for (std::size_t k = 0; k <= N / 2; ++k) {
        spec[k][0] = spec[k][0] * spec[k][0] + spec[k][1] * spec[k][1];
        spec[k][1] = 0.0;
    }
    fftw_execute(inv);
    {
        std::lock_guard lock(fftw_planner_mutex);
        fftw_destroy_plan(fwd);
        fftw_destroy_plan(inv);
    }
    fftw_free(spec);

    const double c0 = buf[0];
    auto rho = [&](std::size_t k) { return buf[k] / c0; };
    // Geyer: sum pairs rho_{2m} + rho_{2m+1} while they stay positive.
    double tau = -1.0;
    for (std::size_t m = 0; 2 * m + 1 < T; ++m) {
        const double pair = rho(2 * m) + rho(2 * m + 1);
        if (!(pair > 0.0)) break;
        tau += 2.0 * pair;
    }
    return std::max(tau, 1.0 / static_cast<double>(T));
}

std::size_t default_burn_in(const Chain& chain) {
    double worst = 0.0;
    for (std::size_t k = 0; k < chain.dim; ++k) {
        const double t = iat(chain.column(k));
        worst = std::max(worst, std::isfinite(t) ? t : 0.0);
    }
    const auto b = std::max<std::size_t>(1000, static_cast<std::size_t>(std::ceil(2.0 * worst)));
    return std::min(b, chain.length() / 2);
}

std::vector<double> ess(const Chain& chain) {
    std::vector<double> out;
    const double T = static_cast<double>(chain.length() - std::min(chain.burn_in, chain.length()));
    for (std::size_t k = 0; k < chain.dim; ++k) {
        const double t = chain.iat.size() == chain.dim ? chain.iat[k] : iat(chain.kept(k));
        out.push_back(std::isfinite(t) ? std::min(T, T / t) : 0.0);
    }
    return out;
}

void compute_diagnostics(Chain& chain, std::optional<std::size_t> burn_in) {
    chain.burn_in = burn_in ? std::min(*burn_in, chain.length()) : default_burn_in(chain);
    chain.iat.clear();
    for (std::size_t k = 0; k < chain.dim; ++k) chain.iat.push_back(iat(chain.kept(k)));
    chain.ess = ess(chain);
}

void write_chain_csv(std::ostream& out, const Chain& chain, std::span<const std::string> names) {
    for (std::size_t k = 0; k < chain.dim; ++k) out << (k < names.size() ? names[k] : "p" + std::to_string(k)) << ',';
    out << "log_post\n";
    for (std::size_t t = 0; t < chain.length(); ++t) {
        for (std::size_t k = 0; k < chain.dim; ++k) out << report::csv_number(chain.at(t, k)) << ',';
        out << report::csv_number(chain.log_post[t]) << '\n';
    }
}

}  // namespace dilution::mcmc
