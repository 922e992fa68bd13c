#include "dilution/design.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>
#include <tuple>

namespace dilution {

namespace {

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

double parse_double(const std::string& text, const std::string& what) {
    try {
        std::size_t used = 0;
        const double v = std::stod(text, &used);
        if (used != text.size() || !std::isfinite(v)) throw std::invalid_argument(text);
        return v;
    } catch (const std::exception&) {
        throw DataError("invalid number for " + what + ": '" + text + "'");
    }
}

std::int64_t parse_int(const std::string& text, const std::string& what) {
    std::int64_t v = 0;
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc{} || ptr != end) {
        throw DataError("invalid integer for " + what + ": '" + text + "'");
    }
    return v;
}

bool close_rel(double a, double b, double rel) {
    return std::abs(a - b) <= rel * std::max(std::abs(a), std::abs(b));
}

}  // namespace

// ---------------------------------------------------------------------------
// DilutionDesign

DilutionDesign DilutionDesign::from_volumes(double V0, double V, double u, double alpha,
                                            int J, int D, int c, double q) {
    if (!(V0 > 0) || !(V > 0) || !(u > 0)) throw DataError("volumes must be positive");
    DilutionDesign d;
    d.V0_ = V0;
    d.V_ = V;
    d.u_ = u;
    d.alpha_ = alpha;
    d.alpha0_ = V0 / V;
    d.alpha_p_ = V / u;
    d.J_ = J;
    d.D_ = D;
    d.c_ = c;
    d.q_ = q;
    d.validate();
    return d;
}

DilutionDesign DilutionDesign::from_ratios(double alpha0, double alpha_p, double alpha,
                                           int J, int D, int c, double q) {
    DilutionDesign d;
    d.alpha_ = alpha;
    d.alpha0_ = alpha0;
    d.alpha_p_ = alpha_p;
    d.J_ = J;
    d.D_ = D;
    d.c_ = c;
    d.q_ = q;
    d.validate();
    return d;
}

DilutionDesign DilutionDesign::drop_plate() {
    return from_volumes(10.0, 10.0, 0.01, 10.0, 7, 10, 30, 0.05);
}

DilutionDesign DilutionDesign::spread_plate() {
    return from_volumes(40.0, 10.0, 0.1, 10.0, 7, 2, 300, 0.05);
}

void DilutionDesign::validate() const {
    if (!(alpha_ > 1.0)) throw DataError("alpha must exceed 1");
    if (!(alpha0_ >= 1.0)) throw DataError("alpha0 = V0/V must be at least 1");
    if (!(alpha_p_ >= 1.0)) throw DataError("alpha_p = V/u must be at least 1");
    if (J_ < 1) throw DataError("J must be at least 1");
    if (D_ < 1) throw DataError("D must be at least 1");
    if (c_ < 1) throw DataError("c must be at least 1");
    if (!(q_ >= 0.0 && q_ < 1.0)) throw DataError("q must lie in [0, 1)");
    if (Sc_ && !(*Sc_ > 0.0)) throw DataError("Sc must be positive");
    if (V0_ && V_ && u_) {
        if (!close_rel(alpha0_, *V0_ / *V_, 1e-9) || !close_rel(alpha_p_, *V_ / *u_, 1e-9)) {
            throw DataError("dilution ratios inconsistent with volumes");
        }
    }
}

DilutionDesign DilutionDesign::with_q(double q) const {
    DilutionDesign d = *this;
    d.q_ = q;
    d.validate();
    return d;
}

DilutionDesign DilutionDesign::with_J(int J) const {
    DilutionDesign d = *this;
    d.J_ = J;
    d.validate();
    return d;
}

DilutionDesign DilutionDesign::with_D(int D) const {
    DilutionDesign d = *this;
    d.D_ = D;
    d.validate();
    return d;
}

DilutionDesign DilutionDesign::with_c(int c) const {
    DilutionDesign d = *this;
    d.c_ = c;
    d.validate();
    return d;
}

DilutionDesign DilutionDesign::with_Sc(std::optional<double> Sc) const {
    DilutionDesign d = *this;
    d.Sc_ = Sc;
    d.validate();
    return d;
}

// ---------------------------------------------------------------------------
// Repetitions, experiments, priors

bool RepetitionCounts::all_censored() const {
    return std::all_of(drops.begin(), drops.end(),
                       [](const Observation& o) { return o.is_censored(); });
}

RepetitionCounts zero_repetition(const DilutionDesign& design, std::string rep_id) {
    RepetitionCounts rep;
    rep.rep_id = std::move(rep_id);
    rep.selected_dilution = 0;
    rep.drops.assign(static_cast<std::size_t>(design.D()), Observation::count(0));
    return rep;
}

std::int64_t Priors::abundance_cap() const {
    return static_cast<std::int64_t>(std::floor(std::pow(10.0, M) + 1e-6));
}

void Priors::validate() const {
    if (!(M > 0.0) || M > 18.0) throw DataError("M must lie in (0, 18]");
    if (!(b > 0.0)) throw DataError("b must be positive");
}

namespace {

void validate_tube(const std::vector<Observation>& drops, int dilution,
                   const DilutionDesign& design, const std::string& rep_id) {
    if (dilution < 0 || dilution >= design.J()) {
        throw DataError("repetition " + rep_id + ": dilution " + std::to_string(dilution) +
                        " outside [0, J-1]");
    }
    if (drops.size() != static_cast<std::size_t>(design.D())) {
        throw DataError("repetition " + rep_id + ": expected " + std::to_string(design.D()) +
                        " drops at dilution " + std::to_string(dilution));
    }
    for (const auto& o : drops) {
        if (o.is_censored()) continue;
        if (o.value() < 0) throw DataError("repetition " + rep_id + ": negative count");
        if (o.value() > design.c()) {
            throw DataError("repetition " + rep_id + ": count " + std::to_string(o.value()) +
                            " exceeds c without a TNTC mark");
        }
    }
}

}  // namespace

void validate_repetition(const RepetitionCounts& rep, const DilutionDesign& design) {
    validate_tube(rep.drops, rep.selected_dilution, design, rep.rep_id);
    for (const auto& tube : rep.other_tubes) {
        if (tube.dilution == rep.selected_dilution) {
            throw DataError("repetition " + rep.rep_id + ": selected dilution repeated");
        }
        validate_tube(tube.drops, tube.dilution, design, rep.rep_id);
    }
}

void validate_experiment(const Experiment& experiment) {
    if (experiment.reps.empty()) throw DataError("experiment has no repetitions");
    for (const auto& rep : experiment.reps) validate_repetition(rep, experiment.design);
}

// ---------------------------------------------------------------------------
// Design file

DesignFile parse_design(std::istream& in) {
    std::map<std::string, std::string> kv;
    static const std::set<std::string> known{"V0", "V", "u", "alpha", "J", "D",
                                             "c", "q", "M", "b", "Sc"};
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        const std::string body = trim(line);
        if (body.empty()) continue;
        const auto eq = body.find('=');
        if (eq == std::string::npos) {
            throw DataError("design line " + std::to_string(lineno) + ": expected key = value");
        }
        const std::string key = trim(body.substr(0, eq));
        const std::string value = trim(body.substr(eq + 1));
        if (!known.count(key)) {
            throw DataError("design line " + std::to_string(lineno) + ": unknown key '" + key + "'");
        }
        if (!kv.emplace(key, value).second) throw DataError("duplicate design key '" + key + "'");
    }
    for (const char* required : {"V0", "V", "u", "alpha", "J", "D", "c"}) {
        if (!kv.count(required)) throw DataError(std::string("design file missing key ") + required);
    }
    auto num = [&](const char* k) { return parse_double(kv.at(k), k); };
    auto integer = [&](const char* k) { return static_cast<int>(parse_int(kv.at(k), k)); };

    const double q = kv.count("q") ? num("q") : 0.05;
    DesignFile out{DilutionDesign::from_volumes(num("V0"), num("V"), num("u"), num("alpha"),
                                                integer("J"), integer("D"), integer("c"), q),
                   Priors{}};
    if (kv.count("Sc")) out.design = out.design.with_Sc(num("Sc"));
    if (kv.count("M")) out.priors.M = num("M");
    if (kv.count("b")) out.priors.b = num("b");
    out.priors.validate();
    return out;
}

DesignFile read_design_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open design file " + path);
    return parse_design(in);
}

void write_design(std::ostream& out, const DilutionDesign& design, const Priors& priors) {
    if (!design.V0() || !design.V() || !design.u()) {
        throw DataError("design files need volumes; this design was built from ratios");
    }
    out << std::setprecision(17);
    out << "V0 = " << *design.V0() << "\n"
        << "V = " << *design.V() << "\n"
        << "u = " << *design.u() << "\n"
        << "alpha = " << design.alpha() << "\n"
        << "J = " << design.J() << "\n"
        << "D = " << design.D() << "\n"
        << "c = " << design.c() << "\n"
        << "q = " << design.q() << "\n"
        << "M = " << priors.M << "\n"
        << "b = " << priors.b << "\n";
    if (design.Sc()) out << "Sc = " << *design.Sc() << "\n";
}

// ---------------------------------------------------------------------------
// Counts file

std::vector<Experiment> parse_counts(std::istream& in, const DilutionDesign& design,
                                     const std::string& treatment) {
    std::string line;
    std::vector<std::string> header;
    int lineno = 0;
    while (header.empty() && std::getline(in, line)) {
        ++lineno;
        if (!trim(line).empty()) header = split_csv(trim(line));
    }
    if (header.empty()) throw DataError("counts file is empty");

    auto column = [&](const std::string& name) -> int {
        const auto it = std::find(header.begin(), header.end(), name);
        return it == header.end() ? -1 : static_cast<int>(it - header.begin());
    };
    const int c_rep = column("rep"), c_dil = column("dilution"), c_drop = column("drop"),
              c_count = column("count"), c_lab = column("lab");
    if (c_rep < 0 || c_dil < 0 || c_drop < 0 || c_count < 0) {
        throw DataError("counts header must contain rep,dilution,drop,count");
    }
    if (header.size() != (c_lab < 0 ? 4u : 5u)) {
        throw DataError("counts header has unexpected columns");
    }

    // lab -> rep -> dilution -> drop index -> observation
    using DropMap = std::map<int, Observation>;
    using TubeMap = std::map<int, DropMap>;
    std::vector<std::string> lab_order;
    std::map<std::string, std::vector<std::string>> rep_order;
    std::map<std::string, std::map<std::string, TubeMap>> cells;

    while (std::getline(in, line)) {
        ++lineno;
        const std::string body = trim(line);
        if (body.empty()) continue;
        const auto row = split_csv(body);
        const std::string where = "counts line " + std::to_string(lineno);
        if (row.size() != header.size()) throw DataError(where + ": malformed row");

        const std::string lab = c_lab < 0 ? std::string() : row[c_lab];
        const std::string& rep = row[c_rep];
        if (rep.empty()) throw DataError(where + ": empty rep label");
        const auto dil = parse_int(row[c_dil], "dilution (" + where + ")");
        const auto drop = parse_int(row[c_drop], "drop (" + where + ")");
        if (dil < 0 || dil >= design.J()) {
            throw DataError(where + ": dilution " + row[c_dil] + " outside [0, J-1]");
        }
        if (drop < 1 || drop > design.D()) {
            throw DataError(where + ": drop " + row[c_drop] + " outside [1, D]");
        }
        Observation obs = Observation::censored();
        if (row[c_count] != "TNTC") {
            const auto y = parse_int(row[c_count], "count (" + where + ")");
            if (y < 0) throw DataError(where + ": negative count");
            if (y > design.c()) {
                throw DataError(where + ": count " + row[c_count] + " exceeds c without TNTC mark");
            }
            obs = Observation::count(y);
        }

        if (!cells.count(lab)) lab_order.push_back(lab);
        auto& reps = cells[lab];
        if (!reps.count(rep)) rep_order[lab].push_back(rep);
        auto& drops = reps[rep][static_cast<int>(dil)];
        if (!drops.emplace(static_cast<int>(drop), obs).second) {
            throw DataError(where + ": duplicate (rep, dilution, drop) key");
        }
    }
    if (cells.empty()) throw DataError("counts file has no data rows");

    std::vector<Experiment> out;
    for (const auto& lab : lab_order) {
        Experiment e{design, treatment, lab, {}};
        for (const auto& rep_id : rep_order[lab]) {
            const TubeMap& tubes = cells[lab][rep_id];
            std::vector<TubeCounts> all;
            for (const auto& [dil, drops] : tubes) {
                if (drops.size() != static_cast<std::size_t>(design.D())) {
                    throw DataError("repetition " + rep_id + ": dilution " + std::to_string(dil) +
                                    " is missing drops");
                }
                TubeCounts t{dil, {}};
                for (const auto& [idx, obs] : drops) t.drops.push_back(obs);
                all.push_back(std::move(t));
            }
            // Lowest countable dilution; if every tube has a TNTC drop the
            // highest recorded dilution carries the censored data.
            auto countable = std::find_if(all.begin(), all.end(), [](const TubeCounts& t) {
                return std::none_of(t.drops.begin(), t.drops.end(),
                                    [](const Observation& o) { return o.is_censored(); });
            });
            const auto selected = countable != all.end() ? countable : std::prev(all.end());
            RepetitionCounts rc;
            rc.rep_id = rep_id;
            rc.selected_dilution = selected->dilution;
            rc.drops = selected->drops;
            for (auto it = all.begin(); it != all.end(); ++it) {
                if (it != selected) rc.other_tubes.push_back(*it);
            }
            e.reps.push_back(std::move(rc));
        }
        validate_experiment(e);
        out.push_back(std::move(e));
    }
    return out;
}

void write_counts(std::ostream& out, const std::vector<Experiment>& labs) {
    const bool with_lab = labs.size() > 1 || (!labs.empty() && !labs.front().lab.empty());
    out << "rep,dilution,drop,count" << (with_lab ? ",lab" : "") << "\n";
    for (const auto& e : labs) {
        for (const auto& rep : e.reps) {
            std::vector<TubeCounts> tubes = rep.other_tubes;
            tubes.push_back({rep.selected_dilution, rep.drops});
            std::sort(tubes.begin(), tubes.end(),
                      [](const TubeCounts& a, const TubeCounts& b) { return a.dilution < b.dilution; });
            for (const auto& t : tubes) {
                for (std::size_t i = 0; i < t.drops.size(); ++i) {
                    out << rep.rep_id << ',' << t.dilution << ',' << (i + 1) << ',';
                    if (t.drops[i].is_censored()) {
                        out << "TNTC";
                    } else {
                        out << t.drops[i].value();
                    }
                    if (with_lab) out << ',' << e.lab;
                    out << "\n";
                }
            }
        }
    }
}

Experiment load_experiment(const std::string& counts_path, const std::string& design_path) {
    const DesignFile df = read_design_file(design_path);
    auto labs = load_labs(counts_path, df.design);
    if (labs.size() != 1) throw DataError("expected a single-lab counts file: " + counts_path);
    return std::move(labs.front());
}

std::vector<Experiment> load_labs(const std::string& counts_path, const DilutionDesign& design,
                                  const std::string& treatment) {
    std::ifstream in(counts_path);
    if (!in) throw DataError("cannot open counts file " + counts_path);
    return parse_counts(in, design, treatment);
}

// ---------------------------------------------------------------------------

double crude_abundance(const RepetitionCounts& rep, const DilutionDesign& design) {
    double sum = 0.0;
    int counted = 0;
    for (const auto& o : rep.drops) {
        if (o.is_censored()) continue;
        sum += static_cast<double>(o.value());
        ++counted;
    }
    if (counted == 0) throw DataError("repetition " + rep.rep_id + ": all drops censored");
    // Divide last so integral products stay exact.
    return sum * design.alpha0() * std::pow(design.alpha(), rep.selected_dilution) *
           design.alpha_p() / counted;
}

double log_density_shift(double log_abundance, double Sc) {
    if (!(Sc > 0.0)) throw DataError("Sc must be positive");
    return log_abundance - std::log10(Sc);
}

}  // namespace dilution
