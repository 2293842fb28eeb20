#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace msq {

/// Neumaier-compensated sum.
double compensated_sum(std::span<const double> xs);

/// Pairwise (tree) summation; result independent of thread count.
double pairwise_sum(std::span<const double> xs);

/// Least-squares slope of y against x.
double ls_slope(std::span<const double> x, std::span<const double> y);

/// Pooled within-group least-squares slope: every group gets its own
/// intercept, all groups share one slope. `group` holds a group id per point.
double pooled_slope(std::span<const double> x, std::span<const double> y,
                    std::span<const int> group);

/// Min, the nine deciles and max of a sample (11 values), by linear interpolation.
std::vector<double> decile_table(std::vector<double> values);

/// Portable deterministic generator (splitmix64 seeding a xoshiro256** state).
/// Unlike the std distributions its output does not depend on the standard
/// library implementation.
class Rng {
public:
    explicit Rng(std::uint64_t seed);
    std::uint64_t next_u64();
    /// Uniform on [0, 1).
    double uniform();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    /// Log-uniform on [lo, hi], lo > 0.
    double log_uniform(double lo, double hi);
    /// Uniform integer in [0, n).
    std::size_t index(std::size_t n);
    double normal();
    /// Uniformly random unit vector in R^n.
    std::vector<double> unit_vector(int n);

private:
    std::uint64_t s_[4];
};

/// Runs body(i) for i in [0, count), on several threads when OpenMP is
/// enabled. The first exception thrown by any iteration is rethrown.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

/// Geometric sequence of `count` points from lo to hi inclusive.
std::vector<double> geomspace(double lo, double hi, std::size_t count);

}  // namespace msq
