#include "msq/grid.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <string>

#include "msq/error.hpp"

namespace msq {

namespace {

bool is_power_of_two(std::size_t x) { return x != 0 && (x & (x - 1)) == 0; }

std::size_t ipow(std::size_t base, int e) {
    std::size_t r = 1;
    for (int i = 0; i < e; ++i) r *= base;
    return r;
}

}  // namespace

Box::Box(Point center, double half_width) : center_(std::move(center)), half_width_(half_width) {
    if (center_.empty()) throw DomainError("box dimension must be at least 1");
    if (!(half_width_ > 0.0) || !std::isfinite(half_width_))
        throw DomainError("box half width must be positive and finite");
}

double Box::volume() const noexcept { return std::pow(side(), dim()); }

double Box::diameter() const noexcept { return side() * std::sqrt(static_cast<double>(dim())); }

bool Box::contains(Coords p) const noexcept {
    if (static_cast<int>(p.size()) != dim()) return false;
    for (int k = 0; k < dim(); ++k) {
        if (p[k] < lo(k) || p[k] >= hi(k)) return false;
    }
    return true;
}

bool Box::contains(const Box& other, double tol) const noexcept {
    if (other.dim() != dim()) return false;
    for (int k = 0; k < dim(); ++k) {
        if (other.lo(k) < lo(k) - tol || other.hi(k) > hi(k) + tol) return false;
    }
    return true;
}

bool Box::overlaps(const Box& other) const noexcept {
    if (other.dim() != dim()) return false;
    for (int k = 0; k < dim(); ++k) {
        if (other.hi(k) <= lo(k) || other.lo(k) >= hi(k)) return false;
    }
    return true;
}

Box Box::dilate(double factor) const { return Box(center_, half_width_ * factor); }

Field::Field(Box box, std::size_t resolution) : Field(std::move(box), resolution, {}) {}

Field::Field(Box box, std::size_t resolution, std::vector<double> samples)
    : box_(std::move(box)), resolution_(resolution), samples_(std::move(samples)) {
    if (!is_power_of_two(resolution_)) throw DomainError("field resolution must be a power of two");
    const std::size_t count = ipow(resolution_, box_.dim());
    if (samples_.empty()) {
        samples_.assign(count, 0.0);
    } else if (samples_.size() != count) {
        throw DomainError("field sample count must equal resolution^n");
    }
}

double Field::cell_volume() const noexcept { return std::pow(spacing(), dim()); }

void Field::multi_index(std::size_t index, std::span<std::size_t> out) const {
    for (int k = dim() - 1; k >= 0; --k) {
        out[k] = index % resolution_;
        index /= resolution_;
    }
}

std::size_t Field::flat_index(std::span<const std::size_t> multi) const {
    std::size_t idx = 0;
    for (int k = 0; k < dim(); ++k) idx = idx * resolution_ + multi[k];
    return idx;
}

void Field::node(std::size_t index, std::span<double> out) const {
    const double h = spacing();
    for (int k = dim() - 1; k >= 0; --k) {
        const std::size_t i = index % resolution_;
        index /= resolution_;
        out[k] = box_.lo(k) + (static_cast<double>(i) + 0.5) * h;
    }
}

Point Field::node(std::size_t index) const {
    Point p(static_cast<std::size_t>(dim()));
    node(index, p);
    return p;
}

std::size_t Field::locate(Coords p) const {
    if (!box_.contains(p)) throw DomainError("point lies outside the field box");
    const double h = spacing();
    std::size_t idx = 0;
    for (int k = 0; k < dim(); ++k) {
        auto i = static_cast<std::size_t>(std::floor((p[k] - box_.lo(k)) / h));
        i = std::min(i, resolution_ - 1);
        idx = idx * resolution_ + i;
    }
    return idx;
}

bool Field::same_grid(const Field& other) const noexcept {
    return resolution_ == other.resolution_ && box_ == other.box_;
}

Field Field::with_samples(std::vector<double> samples) const {
    return Field(box_, resolution_, std::move(samples));
}

Field Field::map(const std::function<double(double)>& f) const {
    std::vector<double> out(samples_.size());
    std::transform(samples_.begin(), samples_.end(), out.begin(), f);
    return with_samples(std::move(out));
}

double Field::max_abs() const noexcept {
    double m = 0.0;
    for (double s : samples_) m = std::max(m, std::abs(s));
    return m;
}

double Field::lp_norm(double p) const {
    if (!(p > 0.0)) throw DomainError("lp_norm needs p > 0");
    double acc = 0.0;
    for (double s : samples_) acc += std::pow(std::abs(s), p);
    return std::pow(acc * cell_volume(), 1.0 / p);
}

double integrate_field(const Field& f, const Box& region) {
    if (region.dim() != f.dim() || !f.box().contains(region))
        throw DomainError("integration region must lie inside the field box");
    const int n = f.dim();
    const double h = f.spacing();
    // Per-axis index range of nodes whose centers fall inside [lo, hi).
    std::vector<std::size_t> first(n), last(n);
    for (int k = 0; k < n; ++k) {
        const double a = (region.lo(k) - f.box().lo(k)) / h - 0.5;
        const double b = (region.hi(k) - f.box().lo(k)) / h - 0.5;
        auto lo = static_cast<long>(std::ceil(a));
        auto hi = static_cast<long>(std::ceil(b)) - 1;  // node < hi strictly
        lo = std::max(lo, 0L);
        hi = std::min(hi, static_cast<long>(f.resolution()) - 1);
        if (hi < lo) return 0.0;
        first[k] = static_cast<std::size_t>(lo);
        last[k] = static_cast<std::size_t>(hi);
    }
    std::vector<std::size_t> idx(first);
    double acc = 0.0;
    const auto samples = f.samples();
    while (true) {
        acc += samples[f.flat_index(idx)];
        int k = n - 1;
        while (k >= 0) {
            if (idx[k] < last[k]) {
                ++idx[k];
                break;
            }
            idx[k] = first[k];
            --k;
        }
        if (k < 0) break;
    }
    return acc * f.cell_volume();
}

LogScaleRule::LogScaleRule(double v_min, double v_max, int points_per_decade)
    : v_min_(v_min), v_max_(v_max), points_per_decade_(points_per_decade) {
    if (!(v_min > 0.0) || !(v_max > v_min) || !std::isfinite(v_max))
        throw DomainError("log-scale rule needs 0 < v_min < v_max");
    if (points_per_decade < 4) throw DomainError("log-scale rule needs at least 4 points per decade");
    const double decades = std::log10(v_max / v_min);
    const auto intervals =
        std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(decades * points_per_decade - 1e-9)));
    const double u0 = std::log(v_min), u1 = std::log(v_max);
    const double du = (u1 - u0) / static_cast<double>(intervals);
    nodes_.resize(intervals + 1);
    weights_.assign(intervals + 1, du);
    for (std::size_t i = 0; i <= intervals; ++i) nodes_[i] = std::exp(u0 + du * static_cast<double>(i));
    nodes_.front() = v_min;
    nodes_.back() = v_max;
    weights_.front() *= 0.5;
    weights_.back() *= 0.5;
}

double LogScaleRule::apply(std::span<const double> values) const {
    double acc = 0.0;
    for (std::size_t i = 0; i < nodes_.size(); ++i) acc += weights_[i] * values[i];
    return acc;
}

double LogScaleRule::integrate(const std::function<double(double)>& F) const {
    double acc = 0.0;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        const double value = F(nodes_[i]);
        if (!std::isfinite(value)) throw EvaluationError("non-finite integrand in log-scale integral", nodes_[i]);
        acc += weights_[i] * value;
    }
    return acc;
}

LogScaleRule LogScaleRule::doubled() const {
    const double span = std::sqrt(v_max_ / v_min_);
    return LogScaleRule(v_min_ / span, v_max_ * span, points_per_decade_);
}

double LogScaleRule::truncation_estimate(const std::function<double(double)>& F, int coarse_ppd) const {
    const double span = std::sqrt(v_max_ / v_min_);
    const double lower = log_scale_integral(F, v_min_ / span, v_min_, coarse_ppd);
    const double upper = log_scale_integral(F, v_max_, v_max_ * span, coarse_ppd);
    return std::abs(lower + upper);
}

double log_scale_integral(const std::function<double(double)>& F, double v_min, double v_max,
                          int points_per_decade) {
    return LogScaleRule(v_min, v_max, points_per_decade).integrate(F);
}

std::vector<Box> enumerate_dyadic_cubes(const DyadicTree& tree, int depth) {
    if (depth < 0 || depth > tree.max_depth) throw DomainError("dyadic depth outside [0, max_depth]");
    const int n = tree.root.dim();
    const std::size_t per_axis = std::size_t{1} << depth;
    const double half = tree.root.half_width() / static_cast<double>(per_axis);
    const std::size_t count = ipow(per_axis, n);
    std::vector<Box> cubes;
    cubes.reserve(count);
    Point c(static_cast<std::size_t>(n));
    for (std::size_t i = 0; i < count; ++i) {
        std::size_t rest = i;
        for (int k = n - 1; k >= 0; --k) {
            const std::size_t j = rest % per_axis;
            rest /= per_axis;
            c[k] = tree.root.lo(k) + (2.0 * static_cast<double>(j) + 1.0) * half;
        }
        cubes.emplace_back(c, half);
    }
    return cubes;
}

void write_field_csv(std::ostream& os, const Field& f) {
    const int n = f.dim();
    for (int k = 0; k < n; ++k) os << 'x' << (k + 1) << ',';
    os << "value\n";
    Point p(static_cast<std::size_t>(n));
    char buf[64];
    for (std::size_t i = 0; i < f.size(); ++i) {
        f.node(i, p);
        for (int k = 0; k < n; ++k) {
            std::snprintf(buf, sizeof buf, "%.17g,", p[k]);
            os << buf;
        }
        std::snprintf(buf, sizeof buf, "%.17g\n", f[i]);
        os << buf;
    }
}

Field read_field_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw DomainError("empty field CSV");
    int n = 0;
    {
        std::stringstream header(line);
        std::string col;
        std::vector<std::string> cols;
        while (std::getline(header, col, ',')) cols.push_back(col);
        if (cols.size() < 2 || cols.back() != "value") throw DomainError("field CSV header must end in 'value'");
        n = static_cast<int>(cols.size()) - 1;
        for (int k = 0; k < n; ++k) {
            if (cols[k] != "x" + std::to_string(k + 1)) throw DomainError("unexpected field CSV column " + cols[k]);
        }
    }
    std::vector<double> values;
    std::vector<std::set<double>> axes(static_cast<std::size_t>(n));
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::stringstream row(line);
        std::string cell;
        for (int k = 0; k < n; ++k) {
            if (!std::getline(row, cell, ',')) throw DomainError("short row in field CSV");
            axes[k].insert(std::stod(cell));
        }
        if (!std::getline(row, cell, ',')) throw DomainError("short row in field CSV");
        values.push_back(std::strtod(cell.c_str(), nullptr));
    }
    const std::size_t res = axes[0].size();
    if (res < 2) throw DomainError("field CSV needs at least two nodes per axis");
    const double first = *axes[0].begin();
    const double h = (*axes[0].rbegin() - first) / static_cast<double>(res - 1);
    const double half_width = 0.5 * h * static_cast<double>(res);
    Point center(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
        if (axes[k].size() != res) throw DomainError("field CSV is not a cubic grid");
        center[k] = *axes[k].begin() - 0.5 * h + half_width;
    }
    return Field(Box(center, half_width), res, std::move(values));
}

}  // namespace msq
