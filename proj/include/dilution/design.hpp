#pragma once

// Domain model for dilution-series experiments: the dilution geometry, the
// per-repetition drop counts, priors, and ingestion from the counts/design
// text files.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace dilution {

// Raised for any invalid design, dataset or input file.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DilutionDesign {
public:
    // Volumes in ml. alpha0 = V0/V and alpha_p = V/u are derived.
    static DilutionDesign from_volumes(double V0, double V, double u, double alpha,
                                       int J, int D, int c, double q = 0.05);
    static DilutionDesign from_ratios(double alpha0, double alpha_p, double alpha,
                                      int J, int D, int c, double q = 0.05);

    // Ten 10 ul drops from 10 ml tubes, c = 30.
    static DilutionDesign drop_plate();
    // Two 0.1 ml drops, V0 = 40 ml, V = 10 ml, c = 300.
    static DilutionDesign spread_plate();

    double alpha() const noexcept { return alpha_; }
    double alpha0() const noexcept { return alpha0_; }
    double alpha_p() const noexcept { return alpha_p_; }
    int J() const noexcept { return J_; }
    int D() const noexcept { return D_; }
    int c() const noexcept { return c_; }
    double q() const noexcept { return q_; }
    std::optional<double> V0() const noexcept { return V0_; }
    std::optional<double> V() const noexcept { return V_; }
    std::optional<double> u() const noexcept { return u_; }
    std::optional<double> Sc() const noexcept { return Sc_; }

    DilutionDesign with_q(double q) const;
    DilutionDesign with_J(int J) const;
    DilutionDesign with_D(int D) const;
    DilutionDesign with_c(int c) const;
    DilutionDesign with_Sc(std::optional<double> Sc) const;

    bool operator==(const DilutionDesign&) const = default;

private:
    DilutionDesign() = default;
    void validate() const;

    double alpha_ = 10.0;
    double alpha0_ = 1.0;
    double alpha_p_ = 1000.0;
    int J_ = 7;
    int D_ = 10;
    int c_ = 30;
    double q_ = 0.05;
    std::optional<double> V0_, V_, u_, Sc_;
};

// One drop: either a colony count or a right-censored TNTC mark (> c).
class Observation {
public:
    static constexpr Observation count(std::int64_t y) { return Observation(y, false); }
    static constexpr Observation censored() { return Observation(0, true); }

    constexpr bool is_censored() const noexcept { return censored_; }
    constexpr std::int64_t value() const noexcept { return y_; }

    bool operator==(const Observation&) const = default;

private:
    constexpr Observation(std::int64_t y, bool censored) : y_(y), censored_(censored) {}
    std::int64_t y_;
    bool censored_;
};

struct TubeCounts {
    int dilution = 0;
    std::vector<Observation> drops;

    bool operator==(const TubeCounts&) const = default;
};

struct RepetitionCounts {
    std::string rep_id;
    int selected_dilution = 0;
    std::vector<Observation> drops;
    // Dilutions recorded besides the selected one. Routine analyses ignore
    // them; the multi-dilution study uses them.
    std::vector<TubeCounts> other_tubes;

    bool all_censored() const;
    bool operator==(const RepetitionCounts&) const = default;
};

// Zero-count repetition at dilution 0.
RepetitionCounts zero_repetition(const DilutionDesign& design, std::string rep_id);

struct Experiment {
    DilutionDesign design;
    std::string treatment;
    std::string lab;
    std::vector<RepetitionCounts> reps;

    std::size_t K() const noexcept { return reps.size(); }
};

struct Priors {
    double M = 10.0;   // log10 abundance cap
    double b = 500.0;  // exponential-prior scale for A

    // Largest admissible N0, floor(10^M).
    std::int64_t abundance_cap() const;
    void validate() const;
};

// Checks one repetition against the design; throws DataError.
void validate_repetition(const RepetitionCounts& rep, const DilutionDesign& design);
void validate_experiment(const Experiment& experiment);

// Contents of a "key = value" design file.
struct DesignFile {
    DilutionDesign design;
    Priors priors;
};

DesignFile parse_design(std::istream& in);
DesignFile read_design_file(const std::string& path);
void write_design(std::ostream& out, const DilutionDesign& design, const Priors& priors);

// Parses a "rep,dilution,drop,count[,lab]" table. Returns one Experiment per
// lab, in order of first appearance; without a lab column there is one.
std::vector<Experiment> parse_counts(std::istream& in, const DilutionDesign& design,
                                     const std::string& treatment = "");
void write_counts(std::ostream& out, const std::vector<Experiment>& labs);

// Single-lab convenience wrapper over read_design_file + parse_counts.
Experiment load_experiment(const std::string& counts_path, const std::string& design_path);
std::vector<Experiment> load_labs(const std::string& counts_path, const DilutionDesign& design,
                                  const std::string& treatment = "");

// (mean of counted drops) x alpha0 x alpha^j x alpha_p.
double crude_abundance(const RepetitionCounts& rep, const DilutionDesign& design);

double log_density_shift(double log_abundance, double Sc);

}  // namespace dilution
