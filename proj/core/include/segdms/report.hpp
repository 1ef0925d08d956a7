#pragma once

#include <string>
#include <vector>

namespace segdms {

/// Normalized frequency over a contiguous integer support [min_value,
/// min_value + freq.size() - 1]; covers exactly the observed range.
struct IntHistogram {
    int min_value = 0;
    std::vector<double> freq;

    int max_value() const { return min_value + static_cast<int>(freq.size()) - 1; }
};

IntHistogram int_histogram(const std::vector<int>& values);

/// Total-variation distance between two integer histograms, aligned by value
/// over the union of their supports. Lies in [0, 1].
double total_variation(const IntHistogram& a, const IntHistogram& b);

/// Normalized frequency over `freq.size()` equal-width bins spanning [lo, hi).
/// The top edge is inclusive so the maximum lands in the last bin.
struct BinnedHistogram {
    double lo = 0.0;
    double width = 1.0;
    std::vector<double> freq;
};

BinnedHistogram binned_histogram(const std::vector<double>& values, int bins);

double mean_of(const std::vector<double>& values);
double mean_of_int(const std::vector<int>& values);

/// CSV with header `<value_label>,frequency`, one row per support value.
void write_int_histogram_csv(const std::string& path, const std::string& value_label,
                             const IntHistogram& hist);

/// CSV with header `bin_lo,bin_hi,frequency`, one row per bin.
void write_binned_histogram_csv(const std::string& path, const BinnedHistogram& hist);

/// Fixed-precision formatter used for every report number so reruns emit
/// byte-identical files.
std::string format_report_number(double value);

}  // namespace segdms
