#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "msq/grid.hpp"

namespace msq {

/// Positive weight sampled on a grid.
struct Weight {
    Field field;
    std::string label;
    std::optional<double> declared_p;  ///< class exponent the weight is claimed to belong to
    double clip = 0.0;                 ///< radius below which a power weight was frozen, 0 if none
    std::vector<std::pair<double, double>> ap_cache;  ///< (p, A_p over the dyadic family)

    Weight(Field f, std::string label, std::optional<double> declared_p = std::nullopt, double clip = 0.0);

    /// A_p over all dyadic cubes of the grid, computed once per p.
    double ap(double p);
};

/// All dyadic cubes of generations 0 .. max_depth.
std::vector<Box> dyadic_family(const Box& root, int max_depth);

/// sup over `family` of avg_Q w (avg_Q w^(1-p'))^(p-1), or avg_Q w * max_Q 1/w for p = 1.
/// Averages are taken over the grid nodes inside each cube.
double ap_constant(const Weight& w, double p, const std::vector<Box>& family);

/// A_p membership measured by refinement: the characteristic over the full
/// dyadic family at resolution N and at 2N.
struct ApMembership {
    double constant = 0.0;
    double refined_constant = 0.0;
    double drift = 0.0;
    bool member = false;  ///< finite and drift below `drift_limit`
};

ApMembership ap_membership(const std::function<Weight(std::size_t)>& make, double p, std::size_t resolution,
                           double drift_limit = 1.5);

enum class NormKind { Strong, Weak };

/// strong: (sum |f|^p w h^n)^(1/p).
/// weak: sup over lambda of lambda w({|f| > lambda})^(1/p), taken exactly over
/// the distinct sample values (the supremum is approached just below each one).
double weighted_norm(const Field& f, const Weight& w, double p, NormKind kind);

/// Same with w = 1.
double lebesgue_norm(const Field& f, double p, NormKind kind);

Weight constant_weight(const Box& box, std::size_t resolution, double c = 1.0);

/// max(|x|, h)^a with h the grid spacing.
Weight power_weight(const Box& box, std::size_t resolution, double a);

/// exp(b) with b a sum of a few random Gaussian bumps, |b| <= amplitude.
Weight random_smooth_weight(const Box& box, std::size_t resolution, std::uint64_t seed, double amplitude = 1.0);

}  // namespace msq
