#pragma once

#include <span>
#include <string>
#include <vector>

#include "msq/kernels.hpp"

namespace msq {

/// v-quadrature plus the truncation radii used by the maximal variants.
/// The spatial quadrature is the grid of the input fields.
struct SquareFunctionConfig {
    LogScaleRule rule{1e-4, 1e4, 32};
    std::vector<double> deltas;  ///< strictly increasing, positive
};

/// `count` radii in geometric progression from the grid spacing to the box diameter.
std::vector<double> default_delta_grid(const Field& f, std::size_t count = 16);
/// Inserts the geometric midpoint between neighbours, so the result contains `deltas`.
std::vector<double> refine_delta_grid(const std::vector<double>& deltas);

/// Throws DomainError unless the radii are positive and strictly increasing.
void validate_config(const SquareFunctionConfig& cfg);

enum class TruncationKind {
    InnerComplement,  ///< sum_i |x - y_i|^2 >= delta^2 (complement of U_delta)
    FarField,         ///< min_j |y_j - x| >= delta (V_delta)
    Annulus,          ///< neither U_delta nor V_delta
};

struct TruncationGeometry {
    TruncationKind kind = TruncationKind::InnerComplement;
    double delta = 0.0;
    Point center;

    bool in_inner_ball(Coords ys) const;  ///< y in U_delta(center)
    bool in_far_field(Coords ys) const;   ///< y in V_delta(center)
    bool contains(Coords ys) const;       ///< y in the region named by `kind`
};

struct ApproxIdentityResult {
    Field field;
    std::vector<std::string> warnings;
    /// \int f - \int A_t f on the grid: mass carried outside the box.
    double boundary_loss = 0.0;
};

/// A_t f(x) = \int a_t(x, y) f(y) dy at every node of f's grid.
ApproxIdentityResult apply_approx_identity(const ApproxIdentity& id, double t, const Field& f);

/// T(f)(x). All inputs must share one grid; x must lie in its box.
double square_function(const KernelFamily& k, std::span<const Field> fs, Coords x, const SquareFunctionConfig& cfg);

/// T with the spatial integral restricted to `geom` (centered at x).
double truncated_square_function(const KernelFamily& k, std::span<const Field> fs, Coords x,
                                 const TruncationGeometry& geom, const SquareFunctionConfig& cfg);

enum class MaximalVariant { Star, StarStar };

/// T* (sup over the delta grid inside the v-integral) or T** (sup outside),
/// both for the inner-ball-complement truncation.
double maximal_square_function(const KernelFamily& k, std::span<const Field> fs, Coords x, MaximalVariant variant,
                               const SquareFunctionConfig& cfg);

struct MaximalPair {
    double star = 0.0;
    double starstar = 0.0;
};

/// Both variants from one sweep; starstar <= star holds exactly.
MaximalPair maximal_square_functions(const KernelFamily& k, std::span<const Field> fs, Coords x,
                                     const SquareFunctionConfig& cfg);

/// Truncated values for every radius of cfg.deltas at once.
std::vector<double> truncated_square_functions(const KernelFamily& k, std::span<const Field> fs, Coords x,
                                               TruncationKind kind, const SquareFunctionConfig& cfg);

/// T(f) at every node of the common grid.
Field square_function_field(const KernelFamily& k, std::span<const Field> fs, const SquareFunctionConfig& cfg);

struct MaximalFields {
    Field star;
    Field starstar;
};

/// T* and T** at every node of the common grid.
MaximalFields maximal_square_function_fields(const KernelFamily& k, std::span<const Field> fs,
                                             const SquareFunctionConfig& cfg);

}  // namespace msq
