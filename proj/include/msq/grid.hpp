#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

namespace msq {

using Point = std::vector<double>;
using Coords = std::span<const double>;

/// Axis-aligned cube in R^n given by its center and half side length.
class Box {
public:
    Box() = default;
    Box(Point center, double half_width);

    int dim() const noexcept { return static_cast<int>(center_.size()); }
    const Point& center() const noexcept { return center_; }
    double half_width() const noexcept { return half_width_; }
    double side() const noexcept { return 2.0 * half_width_; }
    double volume() const noexcept;
    double diameter() const noexcept;
    double lo(int axis) const { return center_[axis] - half_width_; }
    double hi(int axis) const { return center_[axis] + half_width_; }

    /// Half-open membership: lo <= p < hi on every axis.
    bool contains(Coords p) const noexcept;
    /// Closed containment of another cube, with an absolute slack `tol`.
    bool contains(const Box& other, double tol = 1e-12) const noexcept;
    /// Interiors intersect.
    bool overlaps(const Box& other) const noexcept;

    Box dilate(double factor) const;

    bool operator==(const Box&) const = default;

private:
    Point center_;
    double half_width_ = 1.0;
};

/// Scalar samples on the cell centers of a uniform grid over a cube.
///
/// The grid has `resolution` cells per axis (a power of two), so every dyadic
/// sub-cube of the box is a union of whole cells. Node k along an axis sits at
/// lo + (k + 1/2) h with h = side / resolution, and every node carries the
/// quadrature weight h^n. Storage is row-major with x1 varying slowest.
class Field {
public:
    Field() = default;
    Field(Box box, std::size_t resolution);
    Field(Box box, std::size_t resolution, std::vector<double> samples);

    template <class F>
    static Field from_function(const Box& box, std::size_t resolution, F&& f) {
        Field out(box, resolution);
        Point p(static_cast<std::size_t>(box.dim()));
        for (std::size_t i = 0; i < out.size(); ++i) {
            out.node(i, p);
            out.samples_[i] = f(Coords(p));
        }
        return out;
    }

    const Box& box() const noexcept { return box_; }
    int dim() const noexcept { return box_.dim(); }
    std::size_t resolution() const noexcept { return resolution_; }
    std::size_t size() const noexcept { return samples_.size(); }
    double spacing() const noexcept { return box_.side() / static_cast<double>(resolution_); }
    double cell_volume() const noexcept;

    std::span<const double> samples() const noexcept { return samples_; }
    double operator[](std::size_t i) const { return samples_[i]; }

    /// Coordinates of node `index` written into `out` (size n).
    void node(std::size_t index, std::span<double> out) const;
    Point node(std::size_t index) const;
    /// Per-axis integer indices of a flat node index.
    void multi_index(std::size_t index, std::span<std::size_t> out) const;
    std::size_t flat_index(std::span<const std::size_t> multi) const;
    /// Flat index of the cell that contains `p` (half-open cells). Throws DomainError outside the box.
    std::size_t locate(Coords p) const;

    bool same_grid(const Field& other) const noexcept;

    Field with_samples(std::vector<double> samples) const;
    Field map(const std::function<double(double)>& f) const;

    double max_abs() const noexcept;
    /// (sum |f|^p h^n)^(1/p).
    double lp_norm(double p) const;

private:
    Box box_;
    std::size_t resolution_ = 0;
    std::vector<double> samples_;
};

/// Root cube plus maximum subdivision depth.
struct DyadicTree {
    Box root;
    int max_depth = 0;
};

/// Sum of samples times node weights over the nodes lying in `region`.
double integrate_field(const Field& f, const Box& region);

/// Trapezoid rule for integrals of the form \int F(v) dv / v on [v_min, v_max],
/// applied in the variable u = log v.
class LogScaleRule {
public:
    LogScaleRule(double v_min = 1e-4, double v_max = 1e4, int points_per_decade = 32);

    double v_min() const noexcept { return v_min_; }
    double v_max() const noexcept { return v_max_; }
    int points_per_decade() const noexcept { return points_per_decade_; }
    std::span<const double> nodes() const noexcept { return nodes_; }
    std::span<const double> weights() const noexcept { return weights_; }
    std::size_t size() const noexcept { return nodes_.size(); }

    /// Weighted sum of precomputed integrand values (one per node).
    double apply(std::span<const double> values) const;
    double integrate(const std::function<double(double)>& F) const;

    /// Rule over the range whose logarithmic length is doubled, centered on this one.
    LogScaleRule doubled() const;
    /// |integral over doubled range - integral over this range|, sampled at
    /// `coarse_ppd` points per decade on the two added end pieces.
    double truncation_estimate(const std::function<double(double)>& F, int coarse_ppd = 8) const;

private:
    double v_min_, v_max_;
    int points_per_decade_;
    std::vector<double> nodes_;
    std::vector<double> weights_;
};

/// \int_{v_min}^{v_max} F(v) dv / v by the trapezoid rule in log v.
/// Throws EvaluationError carrying v if F returns a non-finite value.
double log_scale_integral(const std::function<double(double)>& F, double v_min, double v_max,
                          int points_per_decade);

/// The 2^(n depth) cubes of generation `depth`, in row-major order of their position.
std::vector<Box> enumerate_dyadic_cubes(const DyadicTree& tree, int depth);

/// CSV with header `x1,...,xn,value`, one row per node in storage order, 17 significant digits.
void write_field_csv(std::ostream& os, const Field& f);
Field read_field_csv(std::istream& is);

}  // namespace msq
