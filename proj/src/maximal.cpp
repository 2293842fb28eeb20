#include "msq/maximal.hpp"

#include <algorithm>
#include <cmath>

#include "msq/error.hpp"
#include "msq/numeric.hpp"

namespace msq {

namespace {

std::size_t ipow(std::size_t b, int e) {
    std::size_t r = 1;
    for (int i = 0; i < e; ++i) r *= b;
    return r;
}

// Row-major flat index for per-axis indices with per-axis extents.
std::size_t flat(std::span<const std::size_t> idx, std::span<const std::size_t> dims) {
    std::size_t f = 0;
    for (std::size_t d = 0; d < dims.size(); ++d) f = f * dims[d] + idx[d];
    return f;
}

bool advance(std::vector<std::size_t>& idx, std::span<const std::size_t> lo, std::span<const std::size_t> hi) {
    for (std::size_t d = idx.size(); d-- > 0;) {
        if (++idx[d] <= hi[d]) return true;
        idx[d] = lo[d];
    }
    return false;
}

// Summed-area table with one leading zero slab per axis.
struct Prefix {
    int n;
    std::size_t N;
    std::vector<double> P;
    std::vector<std::size_t> dims;

    Prefix(const std::vector<double>& g, int n_, std::size_t N_)
        : n(n_), N(N_), P(ipow(N_ + 1, n_), 0.0), dims(static_cast<std::size_t>(n_), N_ + 1) {
        std::vector<std::size_t> src(n);
        // copy g into the shifted table, then cumulate along each axis
        for (std::size_t i = 0; i < g.size(); ++i) {
            std::size_t rest = i;
            for (int d = n - 1; d >= 0; --d) {
                src[d] = rest % N + 1;
                rest /= N;
            }
            P[flat(src, dims)] = g[i];
        }
        std::size_t stride = 1;
        for (int d = n - 1; d >= 0; --d) {
            for (std::size_t i = 0; i < P.size(); ++i) {
                const std::size_t coord = (i / stride) % (N + 1);
                if (coord > 0) P[i] += P[i - stride];
            }
            stride *= N + 1;
        }
    }

    // Sum over the cube of side k cells whose lowest cell is `s`.
    double window(std::span<const std::size_t> s, std::size_t k) const {
        if (n == 1) return P[s[0] + k] - P[s[0]];
        std::vector<std::size_t> c(n);
        double acc = 0.0;
        for (unsigned mask = 0; mask < (1u << n); ++mask) {
            int ones = 0;
            for (int d = 0; d < n; ++d) {
                const bool up = (mask >> d) & 1u;
                c[d] = s[d] + (up ? k : 0);
                ones += up;
            }
            const double v = P[flat(c, dims)];
            acc += ((n - ones) % 2 == 0) ? v : -v;
        }
        return acc;
    }
};

std::vector<double> powered(const Field& f, double power) {
    std::vector<double> g(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) g[i] = power == 1.0 ? std::abs(f[i]) : std::pow(std::abs(f[i]), power);
    return g;
}

// Mean absolute deviation of g over the cube of side k at s.
double window_mad(const std::vector<double>& g, int n, std::size_t N, std::span<const std::size_t> s, std::size_t k) {
    const std::vector<std::size_t> dims(n, N);
    std::vector<std::size_t> lo(s.begin(), s.end()), hi(n), idx(s.begin(), s.end());
    for (int d = 0; d < n; ++d) hi[d] = s[d] + k - 1;
    double sum = 0.0;
    std::size_t cnt = 0;
    do {
        sum += g[flat(idx, dims)];
        ++cnt;
    } while (advance(idx, lo, hi));
    const double avg = sum / static_cast<double>(cnt);
    idx.assign(s.begin(), s.end());
    double dev = 0.0;
    do {
        dev += std::abs(g[flat(idx, dims)] - avg);
    } while (advance(idx, lo, hi));
    return dev / static_cast<double>(cnt);
}

// Value of every cube of side k, then for every cell the max over cubes containing it.
template <class WindowValue>
void max_over_containing(int n, std::size_t N, std::size_t k, WindowValue&& value, std::vector<double>& best) {
    const std::size_t L = N - k + 1;
    std::vector<std::size_t> dims(n, L);
    std::vector<double> cur(ipow(L, n));
    parallel_for(cur.size(), [&](std::size_t i) {
        std::vector<std::size_t> s(n);
        std::size_t rest = i;
        for (int d = n - 1; d >= 0; --d) {
            s[d] = rest % L;
            rest /= L;
        }
        cur[i] = value(s);
    });
    // expand axis by axis from L positions to N cells
    for (int axis = 0; axis < n; ++axis) {
        std::vector<std::size_t> nd = dims;
        nd[axis] = N;
        std::size_t inner = 1;
        for (int d = axis + 1; d < n; ++d) inner *= dims[d];
        std::size_t outer = 1;
        for (int d = 0; d < axis; ++d) outer *= dims[d];
        std::vector<double> next(outer * N * inner);
        for (std::size_t o = 0; o < outer; ++o)
            for (std::size_t c = 0; c < N; ++c) {
                const std::size_t plo = c + 1 >= k ? c + 1 - k : 0;
                const std::size_t phi = std::min(c, L - 1);
                for (std::size_t in = 0; in < inner; ++in) {
                    double mx = 0.0;
                    for (std::size_t p = plo; p <= phi; ++p) mx = std::max(mx, cur[(o * L + p) * inner + in]);
                    next[(o * N + c) * inner + in] = mx;
                }
            }
        cur = std::move(next);
        dims = nd;
    }
    for (std::size_t i = 0; i < best.size(); ++i) best[i] = std::max(best[i], cur[i]);
}

template <class WindowValue>
double max_at_cell(int n, std::size_t N, std::span<const std::size_t> c, WindowValue&& value) {
    double best = 0.0;
    std::vector<std::size_t> lo(n), hi(n), s(n);
    for (std::size_t k = 1; k <= N; ++k) {
        for (int d = 0; d < n; ++d) {
            lo[d] = c[d] + 1 >= k ? c[d] + 1 - k : 0;
            hi[d] = std::min(c[d], N - k);
        }
        s = lo;
        do {
            best = std::max(best, value(s, k));
        } while (advance(s, lo, hi));
    }
    return best;
}

double root(double v, double power) { return power == 1.0 ? v : std::pow(v, 1.0 / power); }

}  // namespace

double hl_maximal(const Field& f, Coords x, double power) {
    if (!(power > 0.0)) throw DomainError("maximal function power must be positive");
    const int n = f.dim();
    const std::size_t N = f.resolution();
    std::vector<std::size_t> c(n);
    f.multi_index(f.locate(x), c);
    const Prefix P(powered(f, power), n, N);
    const double best = max_at_cell(n, N, c, [&](std::span<const std::size_t> s, std::size_t k) {
        return P.window(s, k) / static_cast<double>(ipow(k, n));
    });
    return root(std::max(best, 0.0), power);
}

Field hl_maximal_field(const Field& f, double power) {
    if (!(power > 0.0)) throw DomainError("maximal function power must be positive");
    const int n = f.dim();
    const std::size_t N = f.resolution();
    const Prefix P(powered(f, power), n, N);
    std::vector<double> best(f.size(), 0.0);
    for (std::size_t k = 1; k <= N; ++k) {
        const double vol = static_cast<double>(ipow(k, n));
        max_over_containing(n, N, k, [&](std::span<const std::size_t> s) { return P.window(s, k) / vol; }, best);
    }
    for (auto& b : best) b = root(std::max(b, 0.0), power);
    return f.with_samples(std::move(best));
}

double sharp_maximal(const Field& f, Coords x, double delta) {
    if (!(delta > 0.0 && delta < 1.0)) throw DomainError("sharp maximal function needs 0 < delta < 1");
    const int n = f.dim();
    const std::size_t N = f.resolution();
    std::vector<std::size_t> c(n);
    f.multi_index(f.locate(x), c);
    const auto g = powered(f, delta);
    const double best = max_at_cell(n, N, c, [&](std::span<const std::size_t> s, std::size_t k) {
        return window_mad(g, n, N, s, k);
    });
    return root(best, delta);
}

Field sharp_maximal_field(const Field& f, double delta) {
    if (!(delta > 0.0 && delta < 1.0)) throw DomainError("sharp maximal function needs 0 < delta < 1");
    const int n = f.dim();
    const std::size_t N = f.resolution();
    const auto g = powered(f, delta);
    std::vector<double> best(f.size(), 0.0);
    for (std::size_t k = 1; k <= N; ++k)
        max_over_containing(n, N, k, [&](std::span<const std::size_t> s) { return window_mad(g, n, N, s, k); }, best);
    for (auto& b : best) b = root(b, delta);
    return f.with_samples(std::move(best));
}

double CubeFamilySummary::total_measure() const {
    double s = 0.0;
    for (const auto& q : cubes) s += q.volume();
    return s;
}

namespace {

double dist(Coords a, Coords b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
    return std::sqrt(s);
}

}  // namespace

double marcinkiewicz_sum(const CubeFamilySummary& fam, Coords x, int m, double epsilon) {
    if (m < 1 || !(epsilon > 0.0)) throw DomainError("marcinkiewicz sum needs m >= 1 and epsilon > 0");
    std::vector<double> terms;
    terms.reserve(fam.cubes.size());
    for (const Box& q : fam.cubes) {
        const double r = dist(x, q.center());
        if (r == 0.0) throw SingularityError("evaluation point coincides with a cube center");
        const double n = q.dim();
        terms.push_back(std::pow(q.side() / (0.8 * r), epsilon / m) * q.volume() / std::pow(r, n));
    }
    return compensated_sum(terms);
}

double j_function(const CubeFamilySummary& fam, Coords x, double epsilon) {
    if (!(epsilon > 0.0)) throw DomainError("J needs epsilon > 0");
    std::vector<double> terms;
    terms.reserve(fam.cubes.size());
    for (const Box& q : fam.cubes) {
        const double l = q.side();
        const double e = q.dim() + epsilon;
        terms.push_back(std::pow(l / (l + dist(x, q.center())), e));
    }
    return compensated_sum(terms);
}

}  // namespace msq
