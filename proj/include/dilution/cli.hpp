#pragma once

// Subcommands of the dilution tool. Each writes its files under
// RunConfig::out and returns the process exit code:
//   0 success, 1 bad input, 2 diagnostics below the ESS floor, 3 internal error.
// Failures leave an error.json next to whatever partial outputs exist.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace dilution::cli {

enum class Command { Analyze, Lod, Bf, Lr, Interlab, Simulate, Study };

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 1;
inline constexpr int kExitDiagnostics = 2;
inline constexpr int kExitInternal = 3;

struct RunConfig {
    Command command = Command::Analyze;
    std::string counts;   // analyze, bf
    std::string design;   // every command
    std::string control;  // lr
    std::string treated;  // lr, interlab (treated labs table)
    std::string labs;     // interlab (control labs table)
    std::string out = "out";

    std::optional<double> M, b, q;
    std::optional<double> lambda;       // bf override
    std::optional<std::size_t> iterations;  // per-command default when unset
    std::uint64_t seed = 1;
    double credibility = 0.95;
    // analyze: e_h for P(E < e_h); lr and interlab: the LR threshold
    std::optional<double> threshold;
    unsigned parallel_chains = 1;

    std::vector<int> K{1, 3, 12};  // lod
    std::int64_t n0 = 500;         // simulate, study
    int reps = 3;                  // simulate
    int n_sims = 120;              // study

    // Throws std::invalid_argument.
    void validate() const;
};

int cmd_analyze(const RunConfig& config);
int cmd_lod(const RunConfig& config);
int cmd_bf(const RunConfig& config);
int cmd_lr(const RunConfig& config);
int cmd_interlab(const RunConfig& config);
int cmd_simulate(const RunConfig& config);
int cmd_study(const RunConfig& config);

// Validates, dispatches on config.command and turns exceptions into exit codes.
int run(const RunConfig& config);

}  // namespace dilution::cli
