#include "dilution/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>

#include "dilution/specfun.hpp"

namespace dilution {

namespace sf = specfun;

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

// ln[n (n-1) ... (n-y+1)] = ln Gamma(n+1) - ln Gamma(n-y+1) for real n >= y.
double log_falling_factorial(double n, std::int64_t y) {
    if (y > 32) return sf::log_gamma_ratio(n - static_cast<double>(y) + 1.0, static_cast<double>(y));
    // direct product; 16 factors at a time stays far from overflow below 1e18
    double total = 0.0, prod = 1.0;
    for (std::int64_t i = 0; i < y; ++i) {
        prod *= n - static_cast<double>(i);
        if ((i & 15) == 15) {
            total += std::log(prod);
            prod = 1.0;
        }
    }
    return total + std::log(prod);
}
}  // namespace

SuccessProb success_prob(const DilutionDesign& design, int j, std::optional<double> q_override) {
    if (j < 0 || j >= design.J()) throw DataError("dilution index outside [0, J-1]");
    const double q = q_override.value_or(design.q());
    if (!(q >= 0.0 && q < 1.0)) throw DataError("q must lie in [0, 1)");
    const double s = std::pow(design.alpha(), -j) / (design.alpha_p() * design.alpha0()) * (1.0 - q);
    return {j, s};
}

// ---------------------------------------------------------------------------

TubeLikelihood::TubeLikelihood(std::span<const Observation> drops, double s_star, std::int64_t c,
                               ObservationModel model)
    : s_star_(s_star), log1m_s_(std::log1p(-s_star)), c_(c), model_(model) {
    if (!(s_star > 0.0 && s_star < 1.0)) throw sf::DomainError("s* must lie in (0, 1)");
    if (const auto* bb = std::get_if<BetaBinomialModel>(&model_); bb && !(bb->lambda > 0.0)) {
        throw sf::DomainError("beta-binomial lambda must be positive");
    }
    std::map<std::int64_t, int> hist;
    for (const auto& o : drops) {
        if (o.is_censored()) {
            ++censored_;
            continue;
        }
        ++counted_;
        total_count_ += o.value();
        max_count_ = std::max(max_count_, o.value());
        if (o.value() == 0) {
            ++zeros_;
        } else {
            ++hist[o.value()];
        }
    }
    histogram_.assign(hist.begin(), hist.end());

    // n-independent parts of each distinct count's log-probability
    const double log_s = std::log(s_star_);
    if (const auto* bb = std::get_if<BetaBinomialModel>(&model_)) {
        const double A = s_star_ * bb->lambda, B = bb->lambda - A;
        const double shared = sf::log_gamma_ratio(B, A);
        zero_const_ = shared;
        for (const auto& [y, m] : histogram_) {
            const double yd = static_cast<double>(y);
            count_const_.push_back(shared - sf::log_gamma(yd + 1.0) + sf::log_gamma_ratio(A, yd));
        }
    } else {
        for (const auto& [y, m] : histogram_) {
            const double yd = static_cast<double>(y);
            count_const_.push_back(yd * (log_s - log1m_s_) - sf::log_gamma(yd + 1.0));
        }
    }
}

double TubeLikelihood::operator()(double n0) const {
    if (n0 < static_cast<double>(max_count_)) return -kInf;
    if (censored_ > 0 && n0 <= static_cast<double>(c_)) return -kInf;
    double ll = 0.0;
    if (std::holds_alternative<BinomialModel>(model_)) {
        // sum over counted drops of ln C(n, y) + y ln s + (n - y) ln(1 - s)
        ll += counted_ * n0 * log1m_s_;
        for (std::size_t i = 0; i < histogram_.size(); ++i) {
            const auto [y, m] = histogram_[i];
            ll += m * (count_const_[i] + log_falling_factorial(n0, y));
        }
        if (censored_ > 0) ll += censored_ * sf::log_binomial_sf(c_, n0, s_star_);
    } else {
        if (n0 == 0.0) return censored_ > 0 ? -kInf : 0.0;
        const double lambda = std::get<BetaBinomialModel>(model_).lambda;
        const double A = s_star_ * lambda, B = lambda - A;
        if (zeros_ > 0) ll += zeros_ * (zero_const_ - sf::log_gamma_ratio(n0 + B, A));
        for (std::size_t i = 0; i < histogram_.size(); ++i) {
            const auto [y, m] = histogram_[i];
            const double yd = static_cast<double>(y);
            ll += m * (count_const_[i] + log_falling_factorial(n0, y) -
                       sf::log_gamma_ratio(n0 - yd + B, yd + A));
        }
        if (censored_ > 0) ll += censored_ * log_betabinomial_sf(c_, n0, s_star_, lambda);
    }
    return ll;
}

// ---------------------------------------------------------------------------

RepLikelihood::RepLikelihood(const RepetitionCounts& rep, const DilutionDesign& design,
                             DilutionScope scope, ObservationModel model)
    : c_(design.c()) {
    auto add = [&](int dilution, const std::vector<Observation>& drops) {
        tubes_.emplace_back(drops, success_prob(design, dilution).s_star, design.c(), model);
    };
    add(rep.selected_dilution, rep.drops);
    for (const auto& tube : rep.other_tubes) {
        switch (scope) {
            case DilutionScope::Selected:
                break;
            case DilutionScope::CountableAndAbove:
                if (tube.dilution > rep.selected_dilution) add(tube.dilution, tube.drops);
                break;
            case DilutionScope::AllRecorded:
                add(tube.dilution, tube.drops);
                break;
        }
    }
}

double RepLikelihood::operator()(double n0) const {
    double ll = 0.0;
    for (const auto& t : tubes_) {
        ll += t(n0);
        if (ll == -kInf) return ll;
    }
    return ll;
}

double RepLikelihood::crude_estimate() const {
    double sum = 0.0;
    int n = 0;
    for (const auto& t : tubes_) {
        sum += static_cast<double>(t.total_count()) / t.s_star();
        sum += t.censored() * static_cast<double>(c_ + 1) / t.s_star();
        n += t.counted() + t.censored();
    }
    return n > 0 ? sum / n : 0.0;
}

bool RepLikelihood::only_censored() const {
    return std::all_of(tubes_.begin(), tubes_.end(),
                       [](const TubeLikelihood& t) { return t.counted() == 0; });
}

std::int64_t RepLikelihood::max_count() const {
    std::int64_t m = 0;
    for (const auto& t : tubes_) m = std::max(m, t.max_count());
    return m;
}

double rep_log_likelihood(const RepetitionCounts& rep, double n0, const DilutionDesign& design) {
    return RepLikelihood(rep, design)(n0);
}

// ---------------------------------------------------------------------------

double log_hier_density(double x, double e, double a) {
    if (!(e > 0.0) || !(a > 0.0) || !(x >= 0.0)) {
        throw sf::DomainError("log_hier_density needs x >= 0, e > 0, a > 0");
    }
    if (x == 0.0) {
        if (a > 1.0) return -kInf;
        if (a < 1.0) return kInf;
    }
    const double log_x = x == 0.0 ? 0.0 : std::log(x);
    return a * std::log(a / e) - sf::log_gamma(a) + (a - 1.0) * log_x - a * x / e;
}

double log_n0_density(double n0, double e, double a) {
    if (!(n0 >= 0.0)) throw sf::DomainError("log_n0_density needs n0 >= 0");
    const double x = std::log1p(n0) / std::numbers::ln10;
    return log_hier_density(x, e, a) - std::log1p(n0) - std::log(std::numbers::ln10);
}

double log_betabinomial_pmf(std::int64_t y, double n, double s_star, double lambda) {
    if (!(lambda > 0.0)) throw sf::DomainError("lambda must be positive");
    if (!(s_star > 0.0 && s_star < 1.0)) throw sf::DomainError("s* must lie in (0, 1)");
    if (!(n >= 0.0)) throw sf::DomainError("trials must be non-negative");
    const double yd = static_cast<double>(y);
    if (y < 0 || yd > n) return -kInf;
    if (n == 0.0) return 0.0;
    // C(n, y) B(y + A, n - y + B) / B(A, B) as gamma ratios that stay small
    // when n and lambda are large.
    const double A = s_star * lambda;
    const double B = (1.0 - s_star) * lambda;
    return -sf::log_gamma(yd + 1.0) + sf::log_gamma_ratio(n - yd + 1.0, yd) + sf::log_gamma_ratio(A, yd) +
           sf::log_gamma_ratio(B, A) - sf::log_gamma_ratio(n - yd + B, yd + A);
}

double log_betabinomial_sf(std::int64_t cthr, double n, double s_star, double lambda) {
    if (cthr < 0) return 0.0;
    if (static_cast<double>(cthr) >= n) return -kInf;
    const double A = s_star * lambda, B = (1.0 - s_star) * lambda;
    std::vector<double> terms;
    terms.reserve(static_cast<std::size_t>(cthr) + 1);
    // pmf(y + 1) / pmf(y) = (n - y)(y + A) / ((y + 1)(n - y - 1 + B)); n > cthr keeps every factor positive
    double t = log_betabinomial_pmf(0, n, s_star, lambda);
    for (std::int64_t y = 0; y <= cthr; ++y) {
        terms.push_back(t);
        const double yd = static_cast<double>(y);
        t += std::log((n - yd) * (yd + A) / ((yd + 1.0) * (n - yd - 1.0 + B)));
    }
    const double log_cdf = std::min(0.0, sf::log_sum_exp(terms));
    return sf::log1m_exp(log_cdf);
}

}  // namespace dilution
