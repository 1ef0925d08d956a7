#include "segdms/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "segdms/errors.hpp"

namespace segdms {

IntHistogram int_histogram(const std::vector<int>& values) {
    if (values.empty()) throw DataError("cannot build a histogram from no values");
    auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
    IntHistogram hist;
    hist.min_value = *lo_it;
    hist.freq.assign(static_cast<std::size_t>(*hi_it - *lo_it + 1), 0.0);
    const double unit = 1.0 / static_cast<double>(values.size());
    for (int v : values) hist.freq[static_cast<std::size_t>(v - hist.min_value)] += unit;
    return hist;
}

double total_variation(const IntHistogram& a, const IntHistogram& b) {
    const int lo = std::min(a.min_value, b.min_value);
    const int hi = std::max(a.max_value(), b.max_value());
    auto mass_at = [](const IntHistogram& h, int v) {
        if (v < h.min_value || v > h.max_value()) return 0.0;
        return h.freq[static_cast<std::size_t>(v - h.min_value)];
    };
    double sum = 0.0;
    for (int v = lo; v <= hi; ++v) sum += std::abs(mass_at(a, v) - mass_at(b, v));
    return 0.5 * sum;
}

BinnedHistogram binned_histogram(const std::vector<double>& values, int bins) {
    if (values.empty()) throw DataError("cannot build a histogram from no values");
    if (bins < 1) throw ConfigError("histogram needs at least one bin");
    auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
    BinnedHistogram hist;
    hist.lo = *lo_it;
    // a flat sample still needs a positive width to define bins
    const double span = (*hi_it > *lo_it) ? (*hi_it - *lo_it) : 1.0;
    hist.width = span / bins;
    hist.freq.assign(static_cast<std::size_t>(bins), 0.0);
    const double unit = 1.0 / static_cast<double>(values.size());
    for (double v : values) {
        int bin = static_cast<int>((v - hist.lo) / hist.width);
        bin = std::clamp(bin, 0, bins - 1);
        hist.freq[static_cast<std::size_t>(bin)] += unit;
    }
    return hist;
}

double mean_of(const std::vector<double>& values) {
    if (values.empty()) throw DataError("cannot average no values");
    double sum = 0.0;
    for (double v : values) sum += v;
    return sum / static_cast<double>(values.size());
}

double mean_of_int(const std::vector<int>& values) {
    if (values.empty()) throw DataError("cannot average no values");
    double sum = 0.0;
    for (int v : values) sum += v;
    return sum / static_cast<double>(values.size());
}

std::string format_report_number(double value) {
    std::ostringstream out;
    out.setf(std::ios::fixed);
    out.precision(9);
    out << value;
    return out.str();
}

namespace {

std::ofstream open_report(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open '" + path + "' for writing");
    return out;
}

}  // namespace

void write_int_histogram_csv(const std::string& path, const std::string& value_label,
                             const IntHistogram& hist) {
    std::ofstream out = open_report(path);
    out << value_label << ",frequency\n";
    for (std::size_t k = 0; k < hist.freq.size(); ++k) {
        out << hist.min_value + static_cast<int>(k) << ',' << format_report_number(hist.freq[k])
            << '\n';
    }
    if (!out) throw DataError("failed while writing '" + path + "'");
}

void write_binned_histogram_csv(const std::string& path, const BinnedHistogram& hist) {
    std::ofstream out = open_report(path);
    out << "bin_lo,bin_hi,frequency\n";
    for (std::size_t k = 0; k < hist.freq.size(); ++k) {
        const double lo = hist.lo + hist.width * static_cast<double>(k);
        out << format_report_number(lo) << ',' << format_report_number(lo + hist.width) << ','
            << format_report_number(hist.freq[k]) << '\n';
    }
    if (!out) throw DataError("failed while writing '" + path + "'");
}

}  // namespace segdms
