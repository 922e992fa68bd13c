#include "dilution/hier.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>

#include "dilution/exactpost.hpp"
#include "dilution/specfun.hpp"
#include "hier_detail.hpp"

namespace dilution {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
const double kLogLn10 = std::log(std::numbers::ln10);

double abundance_of(double x) { return std::expm1(x * std::numbers::ln10); }
}  // namespace

HierModel::HierModel(const Experiment& experiment, const Priors& priors, HierOptions options)
    : priors_(priors), options_(options) {
    validate_experiment(experiment);
    priors_.validate();
    reps_.reserve(experiment.reps.size());
    for (const auto& rep : experiment.reps) reps_.emplace_back(rep, experiment.design, options_.scope);
}

bool HierModel::in_support(std::span<const double> p) const {
    if (p.size() != dim()) return false;
    const double M = priors_.M;
    if (!(p[0] > 0.0 && p[0] < M) || !(p[1] > 0.0 && std::isfinite(p[1]))) return false;
    for (std::size_t k = 2; k < p.size(); ++k) {
        if (!(p[k] > 0.0 && p[k] < M)) return false;
    }
    return true;
}

double HierModel::rep_log_likelihood_at(std::size_t k, double x) const { return reps_.at(k)(abundance_of(x)); }

double HierModel::log_block(double e, double a, std::span<const double> x) const {
    // gamma density of each x_k, shape a and scale e/a
    const double norm = a * std::log(a / e) - specfun::log_gamma(a);
    double total = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        const double xk = x[k];
        double term = reps_[k](abundance_of(xk));
        if (term == -kInf) return -kInf;
        term += norm + (a - 1.0) * std::log(xk) - a * xk / e;
        if (options_.n0_prior == N0Prior::UniformN0Surrogate) term += xk * std::numbers::ln10 + kLogLn10;
        total += term;
    }
    return total;
}

double HierModel::log_posterior(std::span<const double> p) const {
    if (!in_support(p)) return -kInf;
    return log_prior_ea(p[0], p[1], priors_) + log_block(p[0], p[1], p.subspan(2));
}

double log_prior_ea(double e, double a, const Priors& priors) {
    if (!(e > 0.0 && e < priors.M) || !(a > 0.0)) return -kInf;
    return -std::log(priors.M) - std::log(priors.b) - a / priors.b;
}

double log_posterior(const HierParams& params, const Experiment& experiment, const Priors& priors, N0Prior n0_prior) {
    HierOptions options;
    options.n0_prior = n0_prior;
    const HierModel model(experiment, priors, options);
    if (params.x.size() != model.K()) throw DataError("one x per repetition is required");
    std::vector<double> p{params.e, params.a};
    p.insert(p.end(), params.x.begin(), params.x.end());
    return model.log_posterior(p);
}

std::vector<std::string> PosteriorChain::names() const {
    std::vector<std::string> out{"e", "a"};
    for (const auto& rep : experiment.reps) out.push_back("x_" + rep.rep_id);
    return out;
}

// ---------------------------------------------------------------------------

namespace detail {

std::vector<DiscretePosterior> free_posteriors(const HierModel& model, const Experiment& experiment) {
    std::vector<DiscretePosterior> out;
    for (const auto& rep : experiment.reps) {
        out.push_back(free_posterior(rep, experiment.design, model.priors(), model.options().scope));
    }
    return out;
}

std::pair<std::vector<double>, std::vector<double>> starting_points(const HierModel& model,
                                                                    const std::vector<DiscretePosterior>& free,
                                                                    mcmc::Rng& rng) {
    const double M = model.priors().M;
    std::vector<double> p0(model.dim()), p1(model.dim());
    auto to_x = [&](double n) {
        // zero abundance is relaxed to a point of [0, 1)
        double x = std::log10((n > 0.0 ? n : rng.uniform_open()) + 1.0);
        if (x >= M) x = M * (1.0 - 1e-9 * (1.0 + rng.uniform()));
        return x;
    };
    for (std::size_t k = 0; k < model.K(); ++k) {
        const auto& post = free[k];
        p0[k + 2] = to_x(post.sample(rng.uniform()));
        p1[k + 2] = to_x(post.sample(rng.uniform()));
        if (p0[k + 2] == p1[k + 2]) p1[k + 2] = std::min(p1[k + 2] * (1.0 + 1e-6 * rng.uniform_open()), M * (1 - 1e-12));
    }
    for (auto* p : {&p0, &p1}) {
        const double mean_x = std::accumulate(p->begin() + 2, p->end(), 0.0) / static_cast<double>(model.K());
        (*p)[0] = mean_x;
    }
    if (p0[0] == p1[0]) p1[0] *= 1.0 + 1e-6;
    for (auto* p : {&p0, &p1}) {
        // a from its prior, redrawn until the starting density is finite
        for (int tries = 0; tries < 1000; ++tries) {
            (*p)[1] = -model.priors().b * std::log(rng.uniform_open());
            if (std::isfinite(model.log_posterior(*p))) break;
        }
    }
    if (p0[1] == p1[1]) p1[1] *= 1.0 + 1e-6;
    return {p0, p1};
}

double log_scale_sd(const DiscretePosterior& post) {
    double m = 0.0, m2 = 0.0;
    for (std::size_t i = 0; i < post.size(); ++i) {
        const double x = std::log10(post.midpoint(i) + 1.0), w = post.mass(i);
        m += w * x;
        m2 += w * x * x;
    }
    return std::sqrt(std::max(0.0, m2 - m * m));
}


std::vector<bool> noncentred_flags(const std::vector<DiscretePosterior>& free) {
    std::vector<bool> out;
    for (const auto& post : free) out.push_back(log_scale_sd(post) > kDiffuseSd);
    return out;
}

mcmc::Chain sample_mapped(const mcmc::LogDensity& log_post, const mcmc::SupportCheck& in_support,
                          const MapFn& from_internal, std::vector<double> th0, std::vector<double> th1,
                          std::size_t iterations, std::uint64_t seed) {
    const std::size_t d = th0.size();
    std::vector<double> scratch(d);
    const mcmc::LogDensity target = [&](std::span<const double> th) {
        const double jac = from_internal(th, scratch);
        return log_post(scratch) + jac;
    };
    const mcmc::SupportCheck support = [&](std::span<const double> th) {
        for (double v : th) {
            if (!std::isfinite(v)) return false;
        }
        from_internal(th, scratch);
        return in_support(scratch);
    };
    // with K = 1 the starting e equals x, so the standardized e is 0 at both points
    for (std::size_t i = 0; i < d; ++i) {
        if (th0[i] == th1[i]) th1[i] += 1e-6 * (1.0 + std::abs(th1[i]));
    }
    mcmc::TwalkOptions tw;
    tw.diagnostics = false;
    auto chain = mcmc::sample(target, support, th0, th1, iterations, seed, tw);
    std::vector<double> th(d);
    for (std::size_t t = 0; t < chain.length(); ++t) {
        const std::span<double> row(chain.samples.data() + t * d, d);
        std::copy(row.begin(), row.end(), th.begin());
        chain.log_post[t] -= from_internal(th, row);
    }
    return chain;
}

}  // namespace detail

std::pair<std::vector<double>, std::vector<double>> initial_points(const HierModel& model,
                                                                   const Experiment& experiment,
                                                                   mcmc::Rng& rng) {
    return detail::starting_points(model, detail::free_posteriors(model, experiment), rng);
}

PosteriorChain fit_unchecked(const Experiment& experiment, const Priors& priors, std::size_t iterations,
                             std::uint64_t seed, const HierOptions& options) {
    const HierModel model(experiment, priors, options);
    mcmc::Rng init_rng(mcmc::derive_seed(seed, 0));
    const auto free = detail::free_posteriors(model, experiment);
    auto [p0, p1] = detail::starting_points(model, free, init_rng);

    PosteriorChain out{{}, experiment, priors, options};
    const detail::Reparam reparam(options.coordinates, detail::noncentred_flags(free));
    out.chain = detail::sample_mapped(
        [&](std::span<const double> p) { return model.log_posterior(p); },
        [&](std::span<const double> p) { return model.in_support(p); },
        [&](std::span<const double> th, std::span<double> p) { return reparam.from_internal(th, p); },
        reparam.to_internal(p0), reparam.to_internal(p1), iterations, mcmc::derive_seed(seed, 1));
    out.chain.seed = seed;
    if (iterations >= 100) mcmc::compute_diagnostics(out.chain, options.burn_in);
    return out;
}

PosteriorChain fit(const Experiment& experiment, const Priors& priors, std::size_t iterations, std::uint64_t seed,
                   const HierOptions& options) {
    auto chain = fit_unchecked(experiment, priors, iterations, seed, options);
    if (chain.ess_e() < options.min_ess) {
        std::ostringstream msg;
        msg << "ESS of E is " << chain.ess_e() << ", below " << options.min_ess << "; per-dimension ESS:";
        const auto names = chain.names();
        for (std::size_t k = 0; k < chain.chain.ess.size(); ++k) msg << ' ' << names[k] << '=' << chain.chain.ess[k];
        throw DiagnosticFailure(msg.str(), std::make_shared<const PosteriorChain>(std::move(chain)));
    }
    return chain;
}

// ---------------------------------------------------------------------------

double activation_probability(const PosteriorChain& chain, double e_h) {
    const auto e = chain.e();
    if (e.empty()) return 0.0;
    const auto below = std::count_if(e.begin(), e.end(), [&](double v) { return v < e_h; });
    return static_cast<double>(below) / static_cast<double>(e.size());
}

LogReduction log_reduction(std::span<const double> control_e, std::span<const double> treated_e, double threshold) {
    LogReduction out;
    out.threshold = threshold;
    const std::size_t n = std::min(control_e.size(), treated_e.size());
    out.samples.reserve(n);
    std::size_t above = 0;
    for (std::size_t i = 0; i < n; ++i) {
        out.samples.push_back(control_e[i] - treated_e[i]);
        above += out.samples.back() > threshold;
    }
    out.prob_exceed = n ? static_cast<double>(above) / static_cast<double>(n) : 0.0;
    return out;
}

LogReduction log_reduction(const PosteriorChain& control, const PosteriorChain& treated, double threshold) {
    return log_reduction(control.e(), treated.e(), threshold);
}

ClassicalSummary classical_summary(const Experiment& experiment) {
    if (experiment.reps.empty()) throw DataError("experiment has no repetitions");
    std::vector<double> v;
    for (const auto& rep : experiment.reps) v.push_back(std::log10(crude_abundance(rep, experiment.design) + 1.0));
    ClassicalSummary s;
    s.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    if (v.size() > 1) {
        double ss = 0.0;
        for (double x : v) ss += (x - s.mean) * (x - s.mean);
        s.sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
    }
    s.lower = s.mean - 3.0 * s.sd;
    s.upper = s.mean + 3.0 * s.sd;
    return s;
}

}  // namespace dilution
