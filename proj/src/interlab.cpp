#include "dilution/interlab.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "hier_detail.hpp"

namespace dilution {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

std::string lab_name(const Experiment& ex, std::size_t l) {
    return ex.lab.empty() ? "lab" + std::to_string(l + 1) : ex.lab;
}

// Per-lab blocks as in the intra-lab fit; (e_g, a_g) on top, with ln e_g
// standardized around the mean ln e_l in the Standardized coordinates.
class InterlabReparam {
public:
    InterlabReparam(Coordinates coords, std::vector<detail::Reparam> labs, std::vector<std::size_t> offsets,
                    std::vector<std::size_t> sizes)
        : coords_(coords), labs_(std::move(labs)), offsets_(std::move(offsets)), sizes_(std::move(sizes)) {}

    double from_internal(std::span<const double> th, std::span<double> p) const {
        double jac = 0.0;
        for (std::size_t l = 0; l < labs_.size(); ++l) {
            jac += labs_[l].from_internal(th.subspan(offsets_[l], sizes_[l]), p.subspan(offsets_[l], sizes_[l]));
        }
        switch (coords_) {
            case Coordinates::Natural:
                p[0] = th[0];
                p[1] = th[1];
                return jac;
            case Coordinates::Log:
                p[0] = std::exp(th[0]);
                p[1] = std::exp(th[1]);
                return jac + th[0] + th[1];
            case Coordinates::Standardized:
                break;
        }
        double mean_le = 0.0;
        for (std::size_t o : offsets_) mean_le += std::log(p[o]);
        mean_le /= static_cast<double>(offsets_.size());
        const double log_e = mean_le + th[0] * std::exp(-0.5 * th[1]);
        p[0] = std::exp(log_e);
        p[1] = std::exp(th[1]);
        return jac + log_e + 0.5 * th[1];
    }

    std::vector<double> to_internal(const std::vector<double>& p) const {
        std::vector<double> th(p.size());
        for (std::size_t l = 0; l < labs_.size(); ++l) {
            const auto block = labs_[l].to_internal({p.begin() + offsets_[l], p.begin() + offsets_[l] + sizes_[l]});
            std::copy(block.begin(), block.end(), th.begin() + offsets_[l]);
        }
        th[0] = p[0];
        th[1] = p[1];
        if (coords_ == Coordinates::Natural) return th;
        th[0] = std::log(p[0]);
        th[1] = std::log(p[1]);
        if (coords_ == Coordinates::Log) return th;
        double mean_le = 0.0;
        for (std::size_t o : offsets_) mean_le += std::log(p[o]);
        mean_le /= static_cast<double>(offsets_.size());
        th[0] = (th[0] - mean_le) * std::exp(0.5 * th[1]);
        return th;
    }

private:
    Coordinates coords_;
    std::vector<detail::Reparam> labs_;
    std::vector<std::size_t> offsets_, sizes_;
};
}  // namespace

InterlabModel::InterlabModel(const std::vector<Experiment>& labs, const Priors& priors, const InterlabOptions& options)
    : priors_(priors) {
    if (labs.size() < 2) throw DataError("the inter-lab model needs at least two labs");
    priors_.validate();
    for (const auto& ex : labs) {
        labs_.emplace_back(ex, priors, options.lab);
        offsets_.push_back(dim_);
        dim_ += labs_.back().dim();
    }
}

bool InterlabModel::in_support(std::span<const double> p) const {
    if (p.size() != dim_) return false;
    if (!(p[0] > 0.0 && p[0] < priors_.M) || !(p[1] > 0.0 && std::isfinite(p[1]))) return false;
    for (std::size_t l = 0; l < labs_.size(); ++l) {
        if (!labs_[l].in_support(p.subspan(offsets_[l], labs_[l].dim()))) return false;
    }
    return true;
}

double InterlabModel::log_posterior(std::span<const double> p) const {
    if (!in_support(p)) return -kInf;
    const double log_b = std::log(priors_.b);
    double lp = -std::log(priors_.M) - log_b - p[1] / priors_.b;
    for (std::size_t l = 0; l < labs_.size(); ++l) {
        const std::size_t o = offsets_[l];
        const double e = p[o], a = p[o + 1];
        lp += -log_b - a / priors_.b + log_hier_density(e, p[0], p[1]);
        lp += labs_[l].log_block(e, a, p.subspan(o + 2, labs_[l].K()));
        if (lp == -kInf) return lp;
    }
    return lp;
}

double interlab_log_posterior(const InterLabParams& params, const std::vector<Experiment>& labs, const Priors& priors) {
    const InterlabModel model(labs, priors);
    if (params.labs.size() != labs.size()) throw DataError("one parameter block per lab is required");
    std::vector<double> p{params.e_g, params.a_g};
    for (std::size_t l = 0; l < labs.size(); ++l) {
        if (params.labs[l].x.size() != labs[l].K()) throw DataError("one x per repetition is required");
        p.push_back(params.labs[l].e);
        p.push_back(params.labs[l].a);
        p.insert(p.end(), params.labs[l].x.begin(), params.labs[l].x.end());
    }
    return model.log_posterior(p);
}

std::vector<std::string> InterlabChain::names() const {
    std::vector<std::string> out{"e_g", "a_g"};
    for (std::size_t l = 0; l < labs.size(); ++l) {
        const auto name = lab_name(labs[l], l);
        out.push_back("e_" + name);
        out.push_back("a_" + name);
        for (const auto& rep : labs[l].reps) out.push_back("x_" + name + "_" + rep.rep_id);
    }
    return out;
}

InterlabChain fit_interlab_unchecked(const std::vector<Experiment>& labs, const Priors& priors, std::size_t iterations,
                                     std::uint64_t seed, const InterlabOptions& options) {
    const InterlabModel model(labs, priors, options);
    mcmc::Rng rng(mcmc::derive_seed(seed, 0));
    const std::size_t d = model.dim();
    std::vector<double> p0(d), p1(d);
    std::vector<detail::Reparam> blocks;
    std::vector<std::size_t> offsets, sizes;
    for (std::size_t l = 0; l < model.L(); ++l) {
        const auto& lab = model.lab(l);
        const auto free = detail::free_posteriors(lab, labs[l]);
        const auto [q0, q1] = detail::starting_points(lab, free, rng);
        std::copy(q0.begin(), q0.end(), p0.begin() + model.offset(l));
        std::copy(q1.begin(), q1.end(), p1.begin() + model.offset(l));
        blocks.emplace_back(options.lab.coordinates, detail::noncentred_flags(free));
        offsets.push_back(model.offset(l));
        sizes.push_back(lab.dim());
    }
    for (auto* p : {&p0, &p1}) {
        double mean_e = 0.0;
        for (std::size_t o : offsets) mean_e += (*p)[o];
        (*p)[0] = mean_e / static_cast<double>(offsets.size());
        for (int tries = 0; tries < 1000; ++tries) {
            (*p)[1] = -priors.b * std::log(rng.uniform_open());
            if (std::isfinite(model.log_posterior(*p))) break;
        }
    }
    const InterlabReparam reparam(options.lab.coordinates, std::move(blocks), offsets, sizes);

    InterlabChain out{{}, labs, priors, options, offsets};
    out.chain = detail::sample_mapped(
        [&](std::span<const double> p) { return model.log_posterior(p); },
        [&](std::span<const double> p) { return model.in_support(p); },
        [&](std::span<const double> th, std::span<double> p) { return reparam.from_internal(th, p); },
        reparam.to_internal(p0), reparam.to_internal(p1), iterations, mcmc::derive_seed(seed, 1));
    out.chain.seed = seed;
    if (iterations >= 100) mcmc::compute_diagnostics(out.chain, options.burn_in);
    return out;
}

InterlabChain fit_interlab(const std::vector<Experiment>& labs, const Priors& priors, std::size_t iterations,
                           std::uint64_t seed, const InterlabOptions& options) {
    auto chain = fit_interlab_unchecked(labs, priors, iterations, seed, options);
    if (chain.ess_e_g() < options.min_ess) {
        std::ostringstream msg;
        msg << "ESS of E_g is " << chain.ess_e_g() << ", below " << options.min_ess << "; per-dimension ESS:";
        const auto names = chain.names();
        for (std::size_t k = 0; k < chain.chain.ess.size(); ++k) msg << ' ' << names[k] << '=' << chain.chain.ess[k];
        throw InterlabDiagnosticFailure(msg.str(), std::make_shared<const InterlabChain>(std::move(chain)));
    }
    return chain;
}

// ---------------------------------------------------------------------------

InterlabReductions interlab_log_reductions(const InterlabChain& control, const InterlabChain& treated) {
    if (control.labs.size() != treated.labs.size()) throw DataError("control and treated have different labs");
    InterlabReductions out;
    auto diff = [](const std::vector<double>& c, const std::vector<double>& t) {
        const std::size_t n = std::min(c.size(), t.size());
        std::vector<double> d(n);
        for (std::size_t i = 0; i < n; ++i) d[i] = c[i] - t[i];
        return d;
    };
    out.global = diff(control.e_g(), treated.e_g());
    for (std::size_t l = 0; l < control.labs.size(); ++l) {
        const auto name = lab_name(control.labs[l], l);
        if (name != lab_name(treated.labs[l], l)) throw DataError("lab " + name + " has no treated counterpart");
        out.labs.push_back(diff(control.e_lab(l), treated.e_lab(l)));
        out.lab_names.push_back(name);
    }
    return out;
}

ReproducibilityTable reproducibility_metrics(std::span<const double> global_lr,
                                             const std::vector<std::vector<double>>& lab_lr, double threshold,
                                             std::vector<std::string> lab_names) {
    const std::size_t n = global_lr.size();
    if (n == 0) throw DataError("empty log-reduction series");
    ReproducibilityTable out;
    out.threshold = threshold;
    out.global_prob_exceed =
        static_cast<double>(std::count_if(global_lr.begin(), global_lr.end(), [&](double v) { return v > threshold; })) /
        static_cast<double>(n);
    for (std::size_t l = 0; l < lab_lr.size(); ++l) {
        const auto& lr = lab_lr[l];
        if (lr.size() != n) throw DataError("log-reduction series differ in length");
        double abs_diff = 0.0;
        std::size_t above = 0;
        for (std::size_t i = 0; i < n; ++i) {
            abs_diff += std::abs(global_lr[i] - lr[i]);
            above += lr[i] > threshold;
        }
        out.mean_abs_diff.push_back(abs_diff / static_cast<double>(n));
        out.prob_exceed.push_back(static_cast<double>(above) / static_cast<double>(n));
        out.lab_names.push_back(l < lab_names.size() ? lab_names[l] : "lab" + std::to_string(l + 1));
    }
    return out;
}

ReproducibilityTable reproducibility_metrics(const InterlabReductions& reductions, double threshold) {
    return reproducibility_metrics(reductions.global, reductions.labs, threshold, reductions.lab_names);
}

}  // namespace dilution
