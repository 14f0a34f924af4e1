#pragma once

// One quartile/percentile definition for the whole project: linear
// interpolation between closest ranks. Used by breakpoint thresholds,
// sweep aggregation, and the box-plot renderer.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace ragbench {

// p in [0,100]; linear interpolation on the sorted sample.
inline double percentile(std::vector<double> xs, double p) {
    if (xs.empty()) throw std::invalid_argument("percentile: empty sample");
    std::sort(xs.begin(), xs.end());
    if (xs.size() == 1) return xs[0];
    double pos = p / 100.0 * static_cast<double>(xs.size() - 1);
    double lo = std::floor(pos), hi = std::ceil(pos);
    if (lo == hi) return xs[static_cast<std::size_t>(pos)];
    double frac = pos - lo;
    return xs[static_cast<std::size_t>(lo)] * (1.0 - frac) + xs[static_cast<std::size_t>(hi)] * frac;
}

inline double mean(const std::vector<double>& xs) {
    if (xs.empty()) throw std::invalid_argument("mean: empty sample");
    double s = 0.0;
    for (double x : xs) s += x;
    return s / static_cast<double>(xs.size());
}

// Population standard deviation.
inline double stddev_pop(const std::vector<double>& xs) {
    double m = mean(xs);
    double s = 0.0;
    for (double x : xs) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(xs.size()));
}

struct BoxStats {
    double min, q1, median, q3, max;
    std::vector<double> outliers;  // beyond 1.5*IQR fences
    double whisker_lo, whisker_hi;
};

inline BoxStats box_stats(const std::vector<double>& xs) {
    if (xs.empty()) throw std::invalid_argument("box_stats: empty sample");
    BoxStats b{};
    b.q1 = percentile(xs, 25.0);
    b.median = percentile(xs, 50.0);
    b.q3 = percentile(xs, 75.0);
    b.min = *std::min_element(xs.begin(), xs.end());
    b.max = *std::max_element(xs.begin(), xs.end());
    double iqr = b.q3 - b.q1;
    double lo_fence = b.q1 - 1.5 * iqr;
    double hi_fence = b.q3 + 1.5 * iqr;
    b.whisker_lo = b.max;
    b.whisker_hi = b.min;
    for (double x : xs) {
        if (x < lo_fence || x > hi_fence) {
            b.outliers.push_back(x);
        } else {
            b.whisker_lo = std::min(b.whisker_lo, x);
            b.whisker_hi = std::max(b.whisker_hi, x);
        }
    }
    std::sort(b.outliers.begin(), b.outliers.end());
    return b;
}

}  // namespace ragbench
