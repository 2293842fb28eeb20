#include "msq/weights.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "msq/error.hpp"
#include "msq/numeric.hpp"

namespace msq {

Weight::Weight(Field f, std::string label_, std::optional<double> p, double clip_)
    : field(std::move(f)), label(std::move(label_)), declared_p(p), clip(clip_) {
    for (double v : field.samples())
        if (!(v > 0.0) || !std::isfinite(v)) throw DomainError("weight '" + label + "' has a non-positive sample");
}

std::vector<Box> dyadic_family(const Box& root, int max_depth) {
    std::vector<Box> out;
    DyadicTree t{root, max_depth};
    for (int d = 0; d <= max_depth; ++d) {
        auto g = enumerate_dyadic_cubes(t, d);
        out.insert(out.end(), g.begin(), g.end());
    }
    return out;
}

namespace {

// Flat indices of the nodes whose centers lie in q (half-open).
std::vector<std::size_t> nodes_in(const Field& f, const Box& q) {
    const int n = f.dim();
    const double h = f.spacing();
    std::vector<std::size_t> lo(n), hi(n);
    for (int d = 0; d < n; ++d) {
        const double a = (q.lo(d) - f.box().lo(d)) / h - 0.5;
        const double b = (q.hi(d) - f.box().lo(d)) / h - 0.5;
        const double first = std::max(0.0, std::ceil(a - 1e-9));
        const double last = std::min(static_cast<double>(f.resolution()) - 1.0, std::ceil(b - 1e-9) - 1.0);
        if (last < first) return {};
        lo[d] = static_cast<std::size_t>(first);
        hi[d] = static_cast<std::size_t>(last);
    }
    std::vector<std::size_t> out;
    std::vector<std::size_t> idx = lo;
    while (true) {
        out.push_back(f.flat_index(idx));
        int d = n - 1;
        while (d >= 0) {
            if (++idx[d] <= hi[d]) break;
            idx[d] = lo[d];
            --d;
        }
        if (d < 0) break;
    }
    return out;
}

int log2_of(std::size_t v) {
    int e = 0;
    while ((std::size_t{1} << e) < v) ++e;
    return e;
}

}  // namespace

double ap_constant(const Weight& w, double p, const std::vector<Box>& family) {
    if (!(p >= 1.0)) throw DomainError("A_p needs p >= 1");
    if (family.empty()) throw DomainError("A_p needs a nonempty cube family");
    const Field& f = w.field;
    double sup = 0.0;
    for (const Box& q : family) {
        if (!f.box().contains(q, 1e-9)) throw DomainError("cube outside the weight's grid");
        const auto idx = nodes_in(f, q);
        if (idx.empty()) continue;
        std::vector<double> a, b;
        double inv_max = 0.0;
        for (std::size_t i : idx) {
            a.push_back(f[i]);
            if (p > 1.0)
                b.push_back(std::pow(f[i], -1.0 / (p - 1.0)));
            else
                inv_max = std::max(inv_max, 1.0 / f[i]);
        }
        const double cnt = static_cast<double>(idx.size());
        const double avg_w = compensated_sum(a) / cnt;
        const double val = p > 1.0 ? avg_w * std::pow(compensated_sum(b) / cnt, p - 1.0) : avg_w * inv_max;
        sup = std::max(sup, val);
    }
    return sup;
}

double Weight::ap(double p) {
    for (const auto& [q, c] : ap_cache)
        if (q == p) return c;
    const double c = ap_constant(*this, p, dyadic_family(field.box(), log2_of(field.resolution())));
    ap_cache.emplace_back(p, c);
    return c;
}

ApMembership ap_membership(const std::function<Weight(std::size_t)>& make, double p, std::size_t resolution,
                           double drift_limit) {
    ApMembership out;
    Weight a = make(resolution);
    Weight b = make(2 * resolution);
    out.constant = a.ap(p);
    out.refined_constant = b.ap(p);
    out.drift = out.refined_constant / out.constant;
    out.member = std::isfinite(out.constant) && std::isfinite(out.refined_constant) && out.drift < drift_limit;
    return out;
}

double weighted_norm(const Field& f, const Weight& w, double p, NormKind kind) {
    if (!(p > 0.0)) throw DomainError("norm exponent must be positive");
    if (!w.field.same_grid(f)) throw DomainError("weight and function live on different grids");
    const double hn = f.cell_volume();
    if (kind == NormKind::Strong) {
        std::vector<double> t(f.size());
        for (std::size_t i = 0; i < f.size(); ++i) t[i] = std::pow(std::abs(f[i]), p) * w.field[i] * hn;
        return std::pow(compensated_sum(t), 1.0 / p);
    }
    std::vector<std::size_t> order;
    for (std::size_t i = 0; i < f.size(); ++i)
        if (f[i] != 0.0) order.push_back(i);
    if (order.empty()) return 0.0;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const double x = std::abs(f[a]), y = std::abs(f[b]);
        return x != y ? x > y : a < b;
    });
    double best = 0.0, measure = 0.0, comp = 0.0;
    for (std::size_t q = 0; q < order.size(); ++q) {
        // Kahan-accumulated w-measure of {|f| >= current value}
        const double y = w.field[order[q]] * hn - comp;
        const double t = measure + y;
        comp = (t - measure) - y;
        measure = t;
        const double lam = std::abs(f[order[q]]);
        const bool last_of_value = q + 1 == order.size() || std::abs(f[order[q + 1]]) != lam;
        if (last_of_value) best = std::max(best, lam * std::pow(measure, 1.0 / p));
    }
    return best;
}

double lebesgue_norm(const Field& f, double p, NormKind kind) {
    return weighted_norm(f, constant_weight(f.box(), f.resolution()), p, kind);
}

Weight constant_weight(const Box& box, std::size_t resolution, double c) {
    return Weight(Field::from_function(box, resolution, [c](Coords) { return c; }), "constant", 1.0);
}

Weight power_weight(const Box& box, std::size_t resolution, double a) {
    const double h = box.side() / static_cast<double>(resolution);
    Field f = Field::from_function(box, resolution, [a, h](Coords x) {
        double r = 0.0;
        for (double xi : x) r += xi * xi;
        return std::pow(std::max(std::sqrt(r), h), a);
    });
    const int n = box.dim();
    // |x|^a is in A_p iff -n < a < n (p - 1); in A_1 iff -n < a <= 0
    std::optional<double> p;
    if (a > -n && a <= 0.0) p = 1.0;
    else if (a > -n) p = 1.0 + a / n + 1e-9;
    char buf[64];
    std::snprintf(buf, sizeof buf, "power(%g)", a);
    return Weight(std::move(f), buf, p, h);
}

Weight random_smooth_weight(const Box& box, std::size_t resolution, std::uint64_t seed, double amplitude) {
    Rng rng(seed);
    const int n = box.dim();
    struct Bump {
        Point c;
        double width, height;
    };
    std::vector<Bump> bumps;
    const int count = 4;
    for (int i = 0; i < count; ++i) {
        Bump b;
        b.c.resize(n);
        for (int d = 0; d < n; ++d) b.c[d] = box.center()[d] + rng.uniform(-0.5, 0.5) * box.side();
        b.width = rng.uniform(0.05, 0.3) * box.side();
        b.height = rng.uniform(-1.0, 1.0) * amplitude / count;
        bumps.push_back(std::move(b));
    }
    Field f = Field::from_function(box, resolution, [&](Coords x) {
        double s = 0.0;
        for (const auto& b : bumps) {
            double r2 = 0.0;
            for (int d = 0; d < n; ++d) r2 += (x[d] - b.c[d]) * (x[d] - b.c[d]);
            s += b.height * std::exp(-r2 / (b.width * b.width));
        }
        return std::exp(s);
    });
    // exp of a function bounded by `amplitude` is in A_1 with constant at most e^(2 amplitude)
    return Weight(std::move(f), "random-smooth", 1.0);
}

}  // namespace msq
