#include "dilution/cli.hpp"

#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "dilution/design.hpp"
#include "dilution/exactpost.hpp"
#include "dilution/hier.hpp"
#include "dilution/interlab.hpp"
#include "dilution/kernels.hpp"
#include "dilution/lod.hpp"
#include "dilution/mcmc.hpp"
#include "dilution/report.hpp"
#include "dilution/sim.hpp"

namespace dilution::cli {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

namespace {

constexpr std::size_t kDefaultIterations = 500'000;
constexpr std::size_t kLodIterations = 1'000'000;
constexpr std::size_t kGridPoints = 200;

// Raised after partial outputs are on disk.
class BelowEssFloor : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

double num(double v) { return report::json_number(v); }

std::ofstream open_out(const RunConfig& config, const std::string& name) {
    const fs::path path = fs::path(config.out) / name;
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    return f;
}

void write_json(const RunConfig& config, const std::string& name, const Json& j) {
    auto f = open_out(config, name);
    f << j.dump(2) << '\n';
}

void write_chain(const RunConfig& config, const std::string& name, const mcmc::Chain& chain,
                 const std::vector<std::string>& names) {
    auto f = open_out(config, name);
    mcmc::write_chain_csv(f, chain, names);
}

void write_series_csv(const RunConfig& config, const std::string& name, const std::string& x_name,
                      const std::vector<report::Series>& series) {
    auto f = open_out(config, name);
    f << "label," << x_name << ",density\n";
    for (const auto& s : series) {
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            f << s.label << ',' << report::csv_number(s.x[i]) << ',' << report::csv_number(s.y[i]) << '\n';
        }
    }
}

void write_svg(const RunConfig& config, const std::string& name, const std::string& title, const std::string& xl,
               const std::string& yl, const std::vector<report::Series>& series) {
    auto f = open_out(config, name);
    report::write_svg_plot(f, title, xl, yl, series);
}

Json summary_json(std::span<const double> v, double credibility) {
    if (v.empty()) return Json();
    const auto s = report::summarize(v, credibility);
    return Json{{"mean", num(s.mean)}, {"sd", num(s.sd)}, {"median", num(s.median)},
                {"lower", num(s.lower)}, {"upper", num(s.upper)}};
}

Json param_json(const mcmc::Chain& chain, std::size_t k, double credibility) {
    auto j = summary_json(chain.kept(k), credibility);
    j["ess"] = num(k < chain.ess.size() ? chain.ess[k] : 0.0);
    j["iat"] = num(k < chain.iat.size() ? chain.iat[k] : 0.0);
    return j;
}

Json chain_meta(const mcmc::Chain& chain) {
    return Json{{"seed", chain.seed},
                {"iterations", chain.length()},
                {"burn_in", chain.burn_in},
                {"acceptance_rate", num(chain.acceptance_rate)}};
}

std::vector<double> abundance(std::vector<double> log_values) {
    for (double& v : log_values) v = std::expm1(v * std::numbers::ln10);
    return log_values;
}

DesignFile load_design(const RunConfig& config) {
    if (config.design.empty()) throw DataError("--design is required");
    auto df = read_design_file(config.design);
    if (config.q) df.design = df.design.with_q(*config.q);
    if (config.M) df.priors.M = *config.M;
    if (config.b) df.priors.b = *config.b;
    df.priors.validate();
    return df;
}

Experiment load_single(const std::string& path, const DilutionDesign& design, const std::string& flag,
                       const std::string& treatment) {
    if (path.empty()) throw DataError(flag + " is required");
    auto labs = load_labs(path, design, treatment);
    if (labs.size() != 1) throw DataError(path + ": expected one lab, found " + std::to_string(labs.size()));
    return std::move(labs.front());
}

std::size_t iterations_or(const RunConfig& config, std::size_t fallback) {
    return config.iterations.value_or(fallback);
}

// Runs the tasks one after another, or on separate threads when allowed.
void run_tasks(std::vector<std::function<void()>> tasks, unsigned parallel) {
    if (parallel <= 1 || tasks.size() <= 1) {
        for (auto& t : tasks) t();
        return;
    }
    std::vector<std::exception_ptr> errors(tasks.size());
    for (std::size_t start = 0; start < tasks.size(); start += parallel) {
        std::vector<std::jthread> pool;
        for (std::size_t i = start; i < std::min(tasks.size(), start + parallel); ++i) {
            pool.emplace_back([&, i] {
                try {
                    tasks[i]();
                } catch (...) {
                    errors[i] = std::current_exception();
                }
            });
        }
    }
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

std::string ess_report(const mcmc::Chain& chain, const std::vector<std::string>& names) {
    std::ostringstream msg;
    for (std::size_t k = 0; k < chain.ess.size(); ++k) {
        msg << (k ? " " : "") << names[k] << '=' << num(chain.ess[k]);
    }
    return msg.str();
}

void write_error(const RunConfig& config, int code, const std::string& kind, const std::string& message) {
    std::cerr << "error: " << message << '\n';
    try {
        fs::create_directories(config.out);
        write_json(config, "error.json",
                   Json{{"status", "error"}, {"exit_code", code}, {"kind", kind}, {"message", message}});
    } catch (const std::exception& e) {
        std::cerr << "error: could not write error.json: " << e.what() << '\n';
    }
}

int guarded(const RunConfig& config, const std::function<void()>& body) {
    try {
        config.validate();
        fs::create_directories(config.out);
        fs::remove(fs::path(config.out) / "error.json");
        body();
        return kExitOk;
    } catch (const BelowEssFloor& e) {
        write_error(config, kExitDiagnostics, "diagnostics", e.what());
        return kExitDiagnostics;
    } catch (const DiagnosticFailure& e) {
        write_error(config, kExitDiagnostics, "diagnostics", e.what());
        return kExitDiagnostics;
    } catch (const InterlabDiagnosticFailure& e) {
        write_error(config, kExitDiagnostics, "diagnostics", e.what());
        return kExitDiagnostics;
    } catch (const DataError& e) {
        write_error(config, kExitInput, "input", e.what());
        return kExitInput;
    } catch (const std::invalid_argument& e) {
        write_error(config, kExitInput, "input", e.what());
        return kExitInput;
    } catch (const std::exception& e) {
        write_error(config, kExitInternal, "internal", e.what());
        return kExitInternal;
    }
}

// Everything analyze reports about one fitted experiment.
Json posterior_json(const PosteriorChain& pc, double credibility) {
    const auto& chain = pc.chain;
    Json j = chain_meta(chain);
    j["K"] = pc.experiment.K();
    j["credibility"] = num(credibility);
    j["E"] = param_json(chain, 0, credibility);
    j["A"] = param_json(chain, 1, credibility);
    j["abundance"] = summary_json(abundance(pc.e()), credibility);
    Json x = Json::object();
    for (std::size_t k = 0; k < pc.experiment.K(); ++k) {
        x[pc.experiment.reps[k].rep_id] = param_json(chain, k + 2, credibility);
    }
    j["x"] = std::move(x);
    return j;
}

}  // namespace

// ---------------------------------------------------------------------------

void RunConfig::validate() const {
    auto fail = [](const std::string& m) { throw std::invalid_argument(m); };
    if (iterations && *iterations < 10'000) fail("--iters must be at least 10000");
    if (!(credibility > 0.0 && credibility < 1.0)) fail("--credibility must lie in (0, 1)");
    if (threshold && !std::isfinite(*threshold)) fail("--threshold must be finite");
    if (M && !(*M > 0.0 && std::isfinite(*M))) fail("--M must be positive");
    if (b && !(*b > 0.0 && std::isfinite(*b))) fail("--b must be positive");
    if (q && !(*q >= 0.0 && *q < 1.0)) fail("--q must lie in [0, 1)");
    if (lambda && !(*lambda > 0.0 && std::isfinite(*lambda))) fail("--lambda must be positive");
    if (parallel_chains < 1) fail("--parallel-chains must be at least 1");
    if (K.empty()) fail("--K needs at least one value");
    for (int k : K) {
        if (k < 1) fail("--K values must be at least 1");
    }
    if (n0 < 0) fail("--n0 must be non-negative");
    if (reps < 1) fail("--reps must be at least 1");
    if (n_sims < 1) fail("--n-sims must be at least 1");
    if (out.empty()) fail("--out must not be empty");
}

int cmd_analyze(const RunConfig& config) {
    return guarded(config, [&] {
        const auto df = load_design(config);
        const auto ex = load_single(config.counts, df.design, "--counts", "");
        const HierOptions options;
        const auto pc = fit_unchecked(ex, df.priors, iterations_or(config, kDefaultIterations), config.seed, options);
        const auto names = pc.names();
        write_chain(config, "chain.csv", pc.chain, names);

        Json j{{"command", "analyze"}};
        j.update(posterior_json(pc, config.credibility));
        const auto cl = classical_summary(ex);
        j["classical"] = {{"mean", num(cl.mean)}, {"sd", num(cl.sd)}, {"lower", num(cl.lower)}, {"upper", num(cl.upper)}};
        Json crude = Json::object();
        for (const auto& rep : ex.reps) crude[rep.rep_id] = num(crude_abundance(rep, ex.design));
        j["crude_abundance"] = std::move(crude);
        if (config.threshold) {
            j["activation"] = {{"e_h", num(*config.threshold)},
                               {"probability", num(activation_probability(pc, *config.threshold))}};
        }
        if (const auto Sc = ex.design.Sc()) {
            auto d = pc.e();
            for (double& v : d) v = log_density_shift(v, *Sc);
            j["log_density"] = summary_json(d, config.credibility);
        }
        const bool passed = pc.ess_e() >= options.min_ess;
        j["diagnostics"] = {{"min_ess_e", num(options.min_ess)}, {"ess_e", num(pc.ess_e())}, {"passed", passed}};
        write_json(config, "summary.json", j);

        std::vector<report::Series> e_density{report::density_on_grid(pc.e(), kGridPoints, "E")};
        std::vector<report::Series> x_density;
        for (std::size_t k = 0; k < ex.K(); ++k) {
            x_density.push_back(report::density_on_grid(pc.x(k), kGridPoints, "x_" + ex.reps[k].rep_id));
        }
        write_series_csv(config, "density_E.csv", "log10_abundance", e_density);
        write_series_csv(config, "density_x.csv", "log10_abundance", x_density);
        {
            auto f = open_out(config, "classical.csv");
            f << "mean,sd,lower,upper\n"
              << report::csv_number(cl.mean) << ',' << report::csv_number(cl.sd) << ','
              << report::csv_number(cl.lower) << ',' << report::csv_number(cl.upper) << '\n';
        }
        auto plotted = e_density;
        plotted.insert(plotted.end(), x_density.begin(), x_density.end());
        write_svg(config, "density.svg", "Posterior densities", "log10(N0 + 1)", "density", plotted);

        const auto& E = j["E"];
        std::cout << "E mean " << E["mean"].get<double>() << "  " << config.credibility * 100 << "% CI ["
                  << E["lower"].get<double>() << ", " << E["upper"].get<double>() << "]  ESS "
                  << E["ess"].get<double>() << '\n';
        if (!passed) {
            throw BelowEssFloor("ESS of E below " + std::to_string(static_cast<int>(options.min_ess)) + "; " +
                                ess_report(pc.chain, names));
        }
    });
}

int cmd_lod(const RunConfig& config) {
    return guarded(config, [&] {
        const auto df = load_design(config);
        const std::size_t n = config.K.size();
        std::vector<std::optional<PosteriorChain>> chains(n);
        std::vector<std::function<void()>> tasks;
        for (std::size_t i = 0; i < n; ++i) {
            tasks.push_back([&, i] {
                const int K = config.K[i];
                Experiment ex{df.design, "lod", "", {}};
                for (int k = 0; k < K; ++k) ex.reps.push_back(zero_repetition(df.design, "Z" + std::to_string(k + 1)));
                // same seed as lod(), so both paths give the same chain
                chains[i] = fit_unchecked(ex, df.priors, iterations_or(config, kLodIterations), config.seed);
            });
        }
        run_tasks(std::move(tasks), config.parallel_chains);

        const HierOptions defaults;
        const double width = 10.0, max_value = 500.0;
        Json rows = Json::array();
        std::ostringstream failures;
        auto csv = open_out(config, "lod.csv");
        csv << "K,credibility,limit,quantile,ess_e,passed\n";
        std::vector<report::Series> curves;
        std::cout << "K\tL_K\n";
        for (std::size_t i = 0; i < n; ++i) {
            const auto& pc = *chains[i];
            const int K = config.K[i];
            auto v = abundance(pc.e());
            const double limit = binned_upper_bound(v, config.credibility, width);
            std::sort(v.begin(), v.end());
            const double quantile = report::sorted_quantile(v, config.credibility);
            const bool passed = pc.ess_e() >= defaults.min_ess;
            if (!passed) failures << " K=" << K << ": ESS(E)=" << num(pc.ess_e());
            csv << K << ',' << report::csv_number(config.credibility) << ',' << report::csv_number(limit) << ','
                << report::csv_number(quantile) << ',' << report::csv_number(pc.ess_e()) << ','
                << (passed ? "true" : "false") << '\n';
            Json row{{"K", K}, {"limit", num(limit)}, {"quantile", num(quantile)}, {"ess_e", num(pc.ess_e())},
                     {"passed", passed}};
            row.update(chain_meta(pc.chain));
            rows.push_back(std::move(row));
            std::cout << K << '\t' << limit << '\n';

            report::Series s{"K=" + std::to_string(K), {}, {}};
            const auto mass = binned_abundance(pc, width, max_value);
            for (std::size_t b = 0; b < mass.size(); ++b) {
                s.x.push_back(width * (static_cast<double>(b) + 0.5));
                s.y.push_back(mass[b]);
            }
            curves.push_back(std::move(s));
        }
        csv.close();
        write_json(config, "lod.json",
                   Json{{"command", "lod"}, {"credibility", num(config.credibility)}, {"bin_width", num(width)},
                        {"seed", config.seed}, {"results", rows}});
        {
            auto f = open_out(config, "lod_bins.csv");
            f << "bin_lower,bin_upper";
            for (const auto& s : curves) f << ',' << s.label;
            f << '\n';
            for (std::size_t b = 0; !curves.empty() && b < curves.front().x.size(); ++b) {
                f << report::csv_number(width * static_cast<double>(b)) << ','
                  << report::csv_number(width * static_cast<double>(b + 1));
                for (const auto& s : curves) f << ',' << report::csv_number(s.y[b]);
                f << '\n';
            }
        }
        write_svg(config, "lod.svg", "Posterior of 10^E - 1 after K zero repetitions", "CFU", "mass per bin",
                  curves);
        if (!failures.str().empty()) throw BelowEssFloor("ESS of E below the floor for" + failures.str());
    });
}

int cmd_bf(const RunConfig& config) {
    return guarded(config, [&] {
        const auto df = load_design(config);
        const auto ex = load_single(config.counts, df.design, "--counts", "");
        auto csv = open_out(config, "bf.csv");
        csv << "rep,dilution,s_star,lambda,log_marginal_binomial,log_marginal_betabinomial,log_bf,bf\n";
        Json rows = Json::array();
        std::cout << "rep\tdilution\tlambda\tBF\n";
        for (const auto& rep : ex.reps) {
            for (const auto& bf : per_tube_bayes_factors(rep, ex.design, df.priors, config.lambda)) {
                const double s = success_prob(ex.design, bf.dilution).s_star;
                csv << rep.rep_id << ',' << bf.dilution << ',' << report::csv_number(s) << ','
                    << report::csv_number(bf.lambda) << ',' << report::csv_number(bf.log_marginal_binomial) << ','
                    << report::csv_number(bf.log_marginal_betabinomial) << ',' << report::csv_number(bf.log_bf())
                    << ',' << report::csv_number(bf.bf()) << '\n';
                rows.push_back(Json{{"rep", rep.rep_id},
                                    {"dilution", bf.dilution},
                                    {"s_star", num(s)},
                                    {"lambda", num(bf.lambda)},
                                    {"log_marginal_binomial", num(bf.log_marginal_binomial)},
                                    {"log_marginal_betabinomial", num(bf.log_marginal_betabinomial)},
                                    {"log_bf", num(bf.log_bf())},
                                    {"bf", num(bf.bf())}});
                std::cout << rep.rep_id << '\t' << bf.dilution << '\t' << num(bf.lambda) << '\t' << num(bf.bf())
                          << '\n';
            }
        }
        write_json(config, "bf.json",
                   Json{{"command", "bf"}, {"lambda_override", config.lambda ? Json(*config.lambda) : Json()},
                        {"tubes", rows}});
    });
}

int cmd_lr(const RunConfig& config) {
    return guarded(config, [&] {
        const auto df = load_design(config);
        const auto control = load_single(config.control, df.design, "--control", "control");
        const auto treated = load_single(config.treated, df.design, "--treated", "treated");
        const std::size_t iters = iterations_or(config, kDefaultIterations);
        std::optional<PosteriorChain> pc, pt;
        run_tasks({[&] { pc = fit_unchecked(control, df.priors, iters, mcmc::derive_seed(config.seed, 0)); },
                   [&] { pt = fit_unchecked(treated, df.priors, iters, mcmc::derive_seed(config.seed, 1)); }},
                  config.parallel_chains);
        write_chain(config, "control_chain.csv", pc->chain, pc->names());
        write_chain(config, "treated_chain.csv", pt->chain, pt->names());

        const double threshold = config.threshold.value_or(3.0);
        const auto lr = log_reduction(*pc, *pt, threshold);
        const auto positive = std::count_if(lr.samples.begin(), lr.samples.end(), [](double v) { return v > 0.0; });
        const double p_positive = static_cast<double>(positive) / static_cast<double>(lr.samples.size());
        const HierOptions defaults;
        const bool passed = pc->ess_e() >= defaults.min_ess && pt->ess_e() >= defaults.min_ess;
        Json j{{"command", "lr"},
               {"threshold", num(threshold)},
               {"prob_exceed", num(lr.prob_exceed)},
               {"prob_positive", num(p_positive)},
               {"lr", summary_json(lr.samples, config.credibility)},
               {"control", posterior_json(*pc, config.credibility)},
               {"treated", posterior_json(*pt, config.credibility)},
               {"diagnostics", {{"min_ess_e", num(defaults.min_ess)}, {"passed", passed}}}};
        write_json(config, "lr.json", j);
        {
            auto f = open_out(config, "lr_samples.csv");
            f << "lr\n";
            for (double v : lr.samples) f << report::csv_number(v) << '\n';
        }
        const std::vector<report::Series> d{report::density_on_grid(lr.samples, kGridPoints, "LR")};
        write_series_csv(config, "lr_density.csv", "lr", d);
        write_svg(config, "lr.svg", "Log reduction", "E_control - E_treated", "density", d);
        std::cout << "P(LR > " << threshold << ") = " << num(lr.prob_exceed) << '\n';
        if (!passed) {
            throw BelowEssFloor("ESS of E below the floor; control " + ess_report(pc->chain, pc->names()) +
                                "; treated " + ess_report(pt->chain, pt->names()));
        }
    });
}

int cmd_interlab(const RunConfig& config) {
    return guarded(config, [&] {
        const auto df = load_design(config);
        if (config.labs.empty()) throw DataError("--labs is required");
        const auto control = load_labs(config.labs, df.design, "control");
        std::vector<Experiment> treated;
        if (!config.treated.empty()) treated = load_labs(config.treated, df.design, "treated");
        const std::size_t iters = iterations_or(config, kDefaultIterations);
        const InterlabOptions options;

        std::optional<InterlabChain> cc, tc;
        std::vector<std::function<void()>> tasks{
            [&] { cc = fit_interlab_unchecked(control, df.priors, iters, mcmc::derive_seed(config.seed, 0), options); }};
        if (!treated.empty()) {
            tasks.push_back(
                [&] { tc = fit_interlab_unchecked(treated, df.priors, iters, mcmc::derive_seed(config.seed, 1), options); });
        }
        run_tasks(std::move(tasks), config.parallel_chains);

        auto fit_json = [&](const InterlabChain& ic) {
            Json j = chain_meta(ic.chain);
            j["E_g"] = param_json(ic.chain, 0, config.credibility);
            j["A_g"] = param_json(ic.chain, 1, config.credibility);
            const auto names = ic.names();
            Json labs = Json::object();
            for (std::size_t l = 0; l < ic.labs.size(); ++l) {
                const auto key = names[ic.offsets[l]].substr(2);
                labs[key] = {{"E", param_json(ic.chain, ic.offsets[l], config.credibility)},
                             {"A", param_json(ic.chain, ic.offsets[l] + 1, config.credibility)}};
            }
            j["labs"] = std::move(labs);
            return j;
        };

        std::string failure;
        auto check = [&](const InterlabChain& ic, const std::string& which) {
            if (ic.ess_e_g() < options.min_ess) failure += which + ": " + ess_report(ic.chain, ic.names()) + "; ";
        };
        Json j{{"command", "interlab"}, {"min_ess_e_g", num(options.min_ess)}, {"control", fit_json(*cc)}};
        write_chain(config, "interlab_chain.csv", cc->chain, cc->names());
        check(*cc, "control");
        if (tc) {
            write_chain(config, "interlab_treated_chain.csv", tc->chain, tc->names());
            check(*tc, "treated");
            j["treated"] = fit_json(*tc);
            const double threshold = config.threshold.value_or(3.0);
            const auto red = interlab_log_reductions(*cc, *tc);
            const auto table = reproducibility_metrics(red, threshold);
            Json rows = Json::array();
            auto csv = open_out(config, "reproducibility.csv");
            csv << "lab,mean_abs_diff,prob_exceed\n";
            for (std::size_t l = 0; l < table.lab_names.size(); ++l) {
                csv << table.lab_names[l] << ',' << report::csv_number(table.mean_abs_diff[l]) << ','
                    << report::csv_number(table.prob_exceed[l]) << '\n';
                rows.push_back(Json{{"lab", table.lab_names[l]},
                                    {"mean_abs_diff", num(table.mean_abs_diff[l])},
                                    {"prob_exceed", num(table.prob_exceed[l])},
                                    {"lr", summary_json(red.labs[l], config.credibility)}});
            }
            csv << "global,," << report::csv_number(table.global_prob_exceed) << '\n';
            j["reproducibility"] = {{"threshold", num(threshold)},
                                    {"global_prob_exceed", num(table.global_prob_exceed)},
                                    {"global_lr", summary_json(red.global, config.credibility)},
                                    {"labs", rows}};
            std::cout << "P(LR_g > " << threshold << ") = " << num(table.global_prob_exceed) << '\n';
        }
        j["diagnostics_passed"] = failure.empty();
        write_json(config, "interlab.json", j);
        const auto& eg = j["control"]["E_g"];
        std::cout << "E_g mean " << eg["mean"].get<double>() << "  ESS " << eg["ess"].get<double>() << '\n';
        if (!failure.empty()) throw BelowEssFloor("ESS of E_g below the floor; " + failure);
    });
}

int cmd_simulate(const RunConfig& config) {
    return guarded(config, [&] {
        const auto df = load_design(config);
        const auto ex = simulate_experiment(config.n0, config.reps, df.design, config.seed);
        {
            auto f = open_out(config, "counts.csv");
            write_counts(f, {ex});
        }
        {
            auto f = open_out(config, "design.txt");
            write_design(f, df.design, df.priors);
        }
        write_json(config, "simulate.json",
                   Json{{"command", "simulate"}, {"n0", config.n0}, {"reps", config.reps}, {"seed", config.seed}});
    });
}

int cmd_study(const RunConfig& config) {
    return guarded(config, [&] {
        const auto df = load_design(config);
        const auto r = all_vs_first_study(df.design, config.n0, config.n_sims, config.seed, df.priors,
                                          config.parallel_chains);
        {
            auto f = open_out(config, "study.csv");
            f << "n0,pmf_first,pmf_countable,pmf_recorded\n";
            for (std::size_t i = 0; i < r.support.size(); ++i) {
                f << r.support[i] << ',' << report::csv_number(r.pmf_first[i]) << ','
                  << report::csv_number(r.pmf_countable[i]) << ',' << report::csv_number(r.pmf_recorded[i]) << '\n';
            }
        }
        write_json(config, "study.json",
                   Json{{"command", "study"},
                        {"n0_true", r.n0_true},
                        {"n_sims", r.n_sims},
                        {"seed", config.seed},
                        {"mean_first", num(r.mean_first)},
                        {"mean_countable", num(r.mean_countable)},
                        {"mean_recorded", num(r.mean_recorded)},
                        {"rel_diff_countable", num(r.rel_diff_countable)},
                        {"rel_diff_recorded", num(r.rel_diff_recorded)},
                        {"tv_countable", num(r.tv_countable)},
                        {"tv_recorded", num(r.tv_recorded)}});
        std::vector<report::Series> curves{{"first dilution", {}, {}}, {"countable dilutions", {}, {}},
                                           {"all recorded dilutions", {}, {}}};
        for (std::size_t i = 0; i < r.support.size(); ++i) {
            const double n = static_cast<double>(r.support[i]);
            const double ys[] = {r.pmf_first[i], r.pmf_countable[i], r.pmf_recorded[i]};
            for (int c = 0; c < 3; ++c) {
                curves[c].x.push_back(n);
                curves[c].y.push_back(ys[c]);
            }
        }
        write_svg(config, "study.svg", "Averaged posterior of N0", "N0", "probability", curves);
        std::cout << "relative mean difference: countable " << num(r.rel_diff_countable) << ", recorded "
                  << num(r.rel_diff_recorded) << '\n';
    });
}

int run(const RunConfig& config) {
    switch (config.command) {
        case Command::Analyze: return cmd_analyze(config);
        case Command::Lod: return cmd_lod(config);
        case Command::Bf: return cmd_bf(config);
        case Command::Lr: return cmd_lr(config);
        case Command::Interlab: return cmd_interlab(config);
        case Command::Simulate: return cmd_simulate(config);
        case Command::Study: return cmd_study(config);
    }
    return kExitInternal;
}

}  // namespace dilution::cli
