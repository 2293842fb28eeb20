#include "msq/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <map>
#include <numbers>

#include "msq/error.hpp"

namespace msq {

double compensated_sum(std::span<const double> xs) {
    double sum = 0.0, c = 0.0;
    for (double x : xs) {
        const double t = sum + x;
        if (std::abs(sum) >= std::abs(x))
            c += (sum - t) + x;
        else
            c += (x - t) + sum;
        sum = t;
    }
    return sum + c;
}

double pairwise_sum(std::span<const double> xs) {
    if (xs.size() <= 8) {
        double acc = 0.0;
        for (double x : xs) acc += x;
        return acc;
    }
    const std::size_t half = xs.size() / 2;
    return pairwise_sum(xs.first(half)) + pairwise_sum(xs.subspan(half));
}

double ls_slope(std::span<const double> x, std::span<const double> y) {
    std::vector<int> g(x.size(), 0);
    return pooled_slope(x, y, g);
}

double pooled_slope(std::span<const double> x, std::span<const double> y, std::span<const int> group) {
    if (x.size() != y.size() || x.size() != group.size() || x.size() < 2)
        throw UsageError("slope fit needs matching samples (at least two)");
    std::map<int, std::pair<double, double>> sums;  // group -> (sum x, sum y)
    std::map<int, std::size_t> counts;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sums[group[i]].first += x[i];
        sums[group[i]].second += y[i];
        ++counts[group[i]];
    }
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const auto n = static_cast<double>(counts[group[i]]);
        const double dx = x[i] - sums[group[i]].first / n;
        const double dy = y[i] - sums[group[i]].second / n;
        sxy += dx * dy;
        sxx += dx * dx;
    }
    if (!(sxx > 0.0)) throw UsageError("slope fit needs spread in x");
    return sxy / sxx;
}

std::vector<double> decile_table(std::vector<double> values) {
    std::vector<double> out;
    if (values.empty()) return out;
    std::sort(values.begin(), values.end());
    for (int d = 0; d <= 10; ++d) {
        const double pos = d / 10.0 * static_cast<double>(values.size() - 1);
        const auto i = static_cast<std::size_t>(std::floor(pos));
        const std::size_t j = std::min(i + 1, values.size() - 1);
        const double frac = pos - static_cast<double>(i);
        out.push_back(values[i] + frac * (values[j] - values[i]));
    }
    return out;
}

namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
    std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace

Rng::Rng(std::uint64_t seed) {
    for (auto& s : s_) s = splitmix64(seed);
}

std::uint64_t Rng::next_u64() {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
}

double Rng::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double Rng::log_uniform(double lo, double hi) { return lo * std::pow(hi / lo, uniform()); }

std::size_t Rng::index(std::size_t n) { return static_cast<std::size_t>(uniform() * static_cast<double>(n)); }

double Rng::normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::vector<double> Rng::unit_vector(int n) {
    std::vector<double> v(static_cast<std::size_t>(n));
    double norm = 0.0;
    do {
        norm = 0.0;
        for (auto& x : v) {
            x = normal();
            norm += x * x;
        }
    } while (norm < 1e-24);
    norm = std::sqrt(norm);
    for (auto& x : v) x /= norm;
    return v;
}

void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body) {
    std::exception_ptr first;
    const auto n = static_cast<std::ptrdiff_t>(count);
#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        try {
            body(static_cast<std::size_t>(i));
        } catch (...) {
#pragma omp critical(msq_parallel_for)
            {
                if (!first) first = std::current_exception();
            }
        }
    }
    if (first) std::rethrow_exception(first);
}

std::vector<double> geomspace(double lo, double hi, std::size_t count) {
    if (count == 0) return {};
    if (count == 1) return {lo};
    std::vector<double> out(count);
    const double r = std::log(hi / lo) / static_cast<double>(count - 1);
    for (std::size_t i = 0; i < count; ++i) out[i] = lo * std::exp(r * static_cast<double>(i));
    out.back() = hi;
    return out;
}

}  // namespace msq
