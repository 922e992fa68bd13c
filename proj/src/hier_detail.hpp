#pragma once

// Pieces of the hierarchical fit shared with the inter-lab model.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "dilution/exactpost.hpp"
#include "dilution/hier.hpp"

namespace dilution::detail {

// free-posterior sd of log10(N0 + 1) above which a rep is non-centred
inline constexpr double kDiffuseSd = 0.2;

std::vector<DiscretePosterior> free_posteriors(const HierModel& model, const Experiment& experiment);

// x_k from the free posteriors, e their mean, a from its prior
std::pair<std::vector<double>, std::vector<double>> starting_points(const HierModel& model,
                                                                    const std::vector<DiscretePosterior>& free,
                                                                    mcmc::Rng& rng);

// sd of log10(N0 + 1) under a free posterior
double log_scale_sd(const DiscretePosterior& post);
std::vector<bool> noncentred_flags(const std::vector<DiscretePosterior>& free);

// theta -> parameters; returns ln |d params / d theta|
using MapFn = std::function<double(std::span<const double>, std::span<double>)>;

// t-walk on theta for the density log_post(params) + ln |Jacobian|; the
// returned chain holds params and their log_post. No diagnostics.
mcmc::Chain sample_mapped(const mcmc::LogDensity& log_post, const mcmc::SupportCheck& in_support,
                          const MapFn& from_internal, std::vector<double> th0, std::vector<double> th1,
                          std::size_t iterations, std::uint64_t seed);

// Map between the sampler's coordinates theta and (e, a, x).
//
// Standardized: theta = (v, ln a, t_1..t_K). Reps whose free posterior is
// diffuse are non-centred, ln x_k = ln e + t_k / sqrt(a); the others keep
// t_k = ln x_k. With at least one centred rep, ln e = mean of their ln x_k
// + v / sqrt(a); otherwise ln e = v.
class Reparam {
public:
    Reparam(Coordinates coords, std::vector<bool> noncentred)
        : coords_(coords), noncentred_(std::move(noncentred)), d_(noncentred_.size() + 2) {
        centred_ = static_cast<std::size_t>(std::count(noncentred_.begin(), noncentred_.end(), false));
    }

    // Returns ln |d(e, a, x) / d theta|.
    double from_internal(std::span<const double> th, std::span<double> p) const {
        if (coords_ == Coordinates::Natural) {
            std::copy(th.begin(), th.end(), p.begin());
            return 0.0;
        }
        if (coords_ == Coordinates::Log) {
            double jac = 0.0;
            for (std::size_t i = 0; i < d_; ++i) {
                p[i] = std::exp(th[i]);
                jac += th[i];
            }
            return jac;
        }
        const double log_a = th[1], inv_root_a = std::exp(-0.5 * log_a);
        double log_e = th[0], jac = log_a;
        if (centred_ > 0) {
            double sum = 0.0;
            for (std::size_t k = 0; k + 2 < d_; ++k) {
                if (!noncentred_[k]) sum += th[k + 2];
            }
            log_e = sum / static_cast<double>(centred_) + th[0] * inv_root_a;
            jac -= 0.5 * log_a;
        }
        p[0] = std::exp(log_e);
        p[1] = std::exp(log_a);
        jac += log_e;
        for (std::size_t k = 0; k + 2 < d_; ++k) {
            double log_x = th[k + 2];
            if (noncentred_[k]) {
                log_x = log_e + th[k + 2] * inv_root_a;
                jac -= 0.5 * log_a;
            }
            p[k + 2] = std::exp(log_x);
            jac += log_x;
        }
        return jac;
    }

    std::vector<double> to_internal(std::vector<double> p) const {
        if (coords_ == Coordinates::Natural) return p;
        for (double& v : p) v = std::log(v);
        if (coords_ == Coordinates::Log) return p;
        const double root_a = std::exp(0.5 * p[1]);
        const double log_e = p[0];
        if (centred_ > 0) {
            double sum = 0.0;
            for (std::size_t k = 0; k + 2 < d_; ++k) {
                if (!noncentred_[k]) sum += p[k + 2];
            }
            p[0] = (log_e - sum / static_cast<double>(centred_)) * root_a;
        }
        for (std::size_t k = 0; k + 2 < d_; ++k) {
            if (noncentred_[k]) p[k + 2] = (p[k + 2] - log_e) * root_a;
        }
        return p;
    }

private:
    Coordinates coords_;
    std::vector<bool> noncentred_;
    std::size_t d_;
    std::size_t centred_ = 0;
};

}  // namespace dilution::detail
