#pragma once

// Output formatting shared by the command-line tools: CSV numbers at 17
// significant digits, JSON numbers at 6, posterior summaries and a minimal
// SVG line plot.

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace dilution::report {

std::string csv_number(double v);

// v rounded to 6 significant digits (non-finite values pass through).
double json_number(double v);

// Type-7 (linear interpolation) sample quantile; `sorted` must be ascending.
double sorted_quantile(std::span<const double> sorted, double p);

struct Summary {
    double mean = 0.0;
    double sd = 0.0;
    double median = 0.0;
    double lower = 0.0;  // equal-tailed credible interval
    double upper = 0.0;
};

Summary summarize(std::span<const double> values, double credibility = 0.95);

struct Series {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

void write_svg_plot(std::ostream& out, const std::string& title, const std::string& x_label,
                    const std::string& y_label, std::span<const Series> series);

// Gaussian kernel density estimate on an even grid (Silverman bandwidth).
Series density_on_grid(std::span<const double> values, std::size_t points, const std::string& label);

}  // namespace dilution::report
