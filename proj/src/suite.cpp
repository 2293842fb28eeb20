#include <algorithm>
#include <cmath>
#include <limits>

#include "msq/error.hpp"
#include "msq/numeric.hpp"
#include "msq/verify.hpp"

namespace msq {

namespace {

const std::vector<std::pair<CheckId, std::string>>& id_names() {
    static const std::vector<std::pair<CheckId, std::string>> names{
        {CheckId::EndpointWeakType, "endpoint_weak_type"},
        {CheckId::WeightedStrong, "weighted_strong"},
        {CheckId::WeightedWeak, "weighted_weak"},
        {CheckId::SharpMaximalPointwise, "sharp_maximal_pointwise"},
        {CheckId::FarField, "far_field"},
        {CheckId::Cotlar, "cotlar"},
        {CheckId::TStarStrong, "tstar_strong"},
        {CheckId::TStarWeak, "tstar_weak"},
        {CheckId::MarcinkiewiczIntegral, "marcinkiewicz_integral"},
        {CheckId::JNorm, "j_norm"},
        {CheckId::FeffermanStein, "fefferman_stein"},
        {CheckId::HLWeightedStrong, "hl_weighted_strong"},
        {CheckId::HLWeightedWeak, "hl_weighted_weak"},
    };
    return names;
}

double base_scale(std::size_t i, std::size_t count) {
    if (count == 1) return 1.0;
    return std::pow(2.0, -static_cast<double>(i) / static_cast<double>(count - 1));
}

double distance(Coords a, Coords b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
    return std::sqrt(s);
}

// One input in units of the support radius, before scaling.
struct ShapeDraw {
    std::string shape;
    Point center;
    double width = 0.0;
    Point direction;  // wavelet
    struct Piece {
        Point offset;
        double half, height;
    };
    std::vector<Piece> pieces;  // indicator
};

ShapeDraw draw(const std::string& shape, int n, Rng& rng) {
    ShapeDraw d;
    d.shape = shape;
    d.center.assign(static_cast<std::size_t>(n), 0.0);
    const auto dir = rng.unit_vector(n);
    const double r = rng.uniform(0.0, 0.25);
    for (int k = 0; k < n; ++k) d.center[k] = r * dir[k];
    d.width = shape == "spike" ? 0.75 : rng.uniform(0.4, 0.75);
    if (shape == "wavelet") d.direction = rng.unit_vector(n);
    if (shape == "indicator") {
        const std::size_t count = 1 + rng.index(3);
        const double root_n = std::sqrt(static_cast<double>(n));
        for (std::size_t k = 0; k < count; ++k) {
            ShapeDraw::Piece p;
            p.half = rng.uniform(0.3, 0.6) / root_n;
            const auto e = rng.unit_vector(n);
            const double off = rng.uniform(0.0, 0.4);
            for (int q = 0; q < n; ++q) p.offset.push_back(off * e[q]);
            p.height = rng.uniform(0.5, 2.0);
            d.pieces.push_back(std::move(p));
        }
    }
    return d;
}

// Samples the draw with lengths multiplied by `unit`; widths never drop below 3 cells.
Field materialize(const ShapeDraw& d, double unit, bool centered, const Box& box, std::size_t N) {
    const int n = box.dim();
    const double h = box.side() / static_cast<double>(N);
    Point c(static_cast<std::size_t>(n), 0.0);
    if (!centered)
        for (int k = 0; k < n; ++k) c[k] = unit * d.center[k];
    const double w = std::max(unit * d.width, 3.0 * h);
    const double sigma = w / 3.0;
    if (d.shape == "gaussian")
        return Field::from_function(box, N, [&](Coords x) {
            const double r = distance(x, c);
            return r <= w ? std::exp(-r * r / (2.0 * sigma * sigma)) : 0.0;
        });
    if (d.shape == "spike")
        return Field::from_function(box, N, [&](Coords x) { return std::max(0.0, 1.0 - distance(x, c) / w); });
    if (d.shape == "wavelet")
        return Field::from_function(box, N, [&](Coords x) {
            const double r = distance(x, c);
            if (r > w) return 0.0;
            double proj = 0.0;
            for (int k = 0; k < n; ++k) proj += (x[k] - c[k]) * d.direction[k];
            return proj / sigma * std::exp(-r * r / (2.0 * sigma * sigma));
        });
    if (d.shape == "indicator")
        return Field::from_function(box, N, [&](Coords x) {
            double s = 0.0;
            for (const auto& p : d.pieces) {
                bool in = true;
                for (int k = 0; k < n && in; ++k) in = std::abs(x[k] - c[k] - w * p.offset[k]) < w * p.half;
                if (in) s += p.height;
            }
            return s;
        });
    throw SpecError("unknown test shape '" + d.shape + "'");
}

}  // namespace

std::string to_string(CheckId id) {
    for (const auto& [k, v] : id_names())
        if (k == id) return v;
    return "unknown";
}

CheckId check_id_from_string(const std::string& s) {
    for (const auto& [k, v] : id_names())
        if (v == s) return k;
    throw UsageError("unknown check id '" + s + "'");
}

const std::vector<CheckId>& all_check_ids() {
    static const std::vector<CheckId> ids = [] {
        std::vector<CheckId> out;
        for (const auto& kv : id_names()) out.push_back(kv.first);
        return out;
    }();
    return ids;
}

std::vector<TestCase> generate_test_suite(const CheckSpec& spec, int arity) {
    const SuiteSpec& su = spec.suite;
    if (su.count == 0) throw SpecError("test suite needs count >= 1");
    if (su.shapes.empty()) throw SpecError("test suite needs at least one shape");
    if (arity < 1) throw SpecError("test arity must be positive");
    const int n = spec.n;
    const Box box(Point(static_cast<std::size_t>(n), 0.0), spec.half_width);
    const std::size_t N = spec.resolution;
    const double h = box.side() / static_cast<double>(N);
    double Rs = su.support_radius;
    if (Rs == 0.0) {
        const CheckId id = check_id_from_string(spec.id);
        const bool pointwise = id == CheckId::FarField || id == CheckId::SharpMaximalPointwise || id == CheckId::Cotlar;
        Rs = pointwise ? spec.half_width / 4.0 : spec.half_width / 2.0;
    }
    if (!(Rs > 0.0) || Rs > spec.half_width / 2.0 + 1e-12)
        throw DomainError("test support radius must lie in (0, half the box half-width]");

    Rng rng(su.seed);
    // base draws; test count + i repeats test i concentrated 8 times further
    std::vector<std::vector<ShapeDraw>> draws(su.count);
    for (std::size_t i = 0; i < su.count; ++i) {
        const std::string& shape = su.shapes[i % su.shapes.size()];
        for (int j = 0; j < arity; ++j) {
            if (shape == "spike" && j > 0)
                draws[i].push_back(draws[i].front());
            else
                draws[i].push_back(draw(shape, n, rng));
        }
    }
    std::vector<TestCase> out;
    for (std::size_t i = 0; i < 2 * su.count; ++i) {
        TestCase tc;
        const std::size_t b = i % su.count;
        tc.scale = base_scale(b, su.count) / (i < su.count ? 1.0 : 8.0);
        tc.shape = draws[b].front().shape;
        for (int j = 0; j < arity; ++j) {
            Field f = materialize(draws[b][static_cast<std::size_t>(j)], Rs * tc.scale, su.centered, box, N);
            const double l1 = f.lp_norm(1.0);
            if (!(l1 > 0.0)) throw DomainError("test " + std::to_string(i) + " is not resolved by the grid");
            f = f.map([l1](double v) { return v / l1; });
            Point x(static_cast<std::size_t>(n));
            for (std::size_t k = 0; k < f.size(); ++k) {
                if (f[k] == 0.0) continue;
                f.node(k, x);
                for (int d = 0; d < n; ++d)
                    if (std::abs(x[d]) > spec.half_width / 2.0)
                        throw DomainError("test " + std::to_string(i) + " leaves the central half-box");
                double r = 0.0;
                for (double c : x) r += c * c;
                tc.support_radius = std::max(tc.support_radius, std::sqrt(r) + 0.5 * h * std::sqrt(double(n)));
            }
            if (su.offset != 0.0) {
                const double o = su.offset * (i < su.count ? 1.0 : 8.0);
                f = f.map([o](double v) { return v + o; });
            }
            tc.inputs.push_back(std::move(f));
        }
        out.push_back(std::move(tc));
    }
    return out;
}

std::vector<CubeFamilySummary> generate_cube_families(const CheckSpec& spec) {
    const SuiteSpec& su = spec.suite;
    if (su.count == 0) throw SpecError("cube families need count >= 1");
    const int n = spec.n;
    Rng rng(su.seed);
    std::vector<CubeFamilySummary> out;
    for (std::size_t i = 0; i < 2 * su.count; ++i) {
        const bool hard = i >= su.count;
        CubeFamilySummary fam;
        fam.m = spec.m;
        fam.epsilon = spec.epsilon;
        const std::size_t want = (hard ? 3 : 1) + rng.index(hard ? 8 : 4);
        for (std::size_t tries = 0; fam.cubes.size() < want && tries < 200; ++tries) {
            const int g = hard ? 6 + static_cast<int>(rng.index(3)) : 4 + static_cast<int>(rng.index(3));
            const std::size_t per = std::size_t{1} << g;
            const double side = 2.0 * spec.half_width / static_cast<double>(per);
            Point c(static_cast<std::size_t>(n));
            for (int d = 0; d < n; ++d) {
                const std::size_t j = per / 4 + rng.index(per / 2);
                c[d] = -spec.half_width + (static_cast<double>(j) + 0.5) * side;
            }
            Box q(c, side / 2.0);
            bool clash = false;
            for (const Box& o : fam.cubes) clash = clash || o.overlaps(q);
            if (!clash) fam.cubes.push_back(std::move(q));
        }
        out.push_back(std::move(fam));
    }
    return out;
}

ConstantFit fit_constant(const std::vector<double>& ratios) {
    if (ratios.empty()) throw UsageError("fit_constant needs at least one ratio");
    ConstantFit fit;
    for (double r : ratios)
        if (!std::isfinite(r)) fit.finite = false;
    if (!fit.finite) {
        fit.constant = std::numeric_limits<double>::infinity();
        fit.stability = std::numeric_limits<double>::infinity();
        return fit;
    }
    const std::size_t half = std::max<std::size_t>(1, ratios.size() / 2);
    fit.constant = *std::max_element(ratios.begin(), ratios.begin() + static_cast<std::ptrdiff_t>(half));
    const double all = *std::max_element(ratios.begin(), ratios.end());
    if (fit.constant > 0.0)
        fit.stability = all / fit.constant;
    else
        fit.stability = all > 0.0 ? std::numeric_limits<double>::infinity() : 1.0;
    return fit;
}

}  // namespace msq
