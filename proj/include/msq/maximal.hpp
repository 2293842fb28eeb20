#pragma once

#include <vector>

#include "msq/grid.hpp"

namespace msq {

/// sup over grid-aligned cubes Q containing x of (avg_Q |f|^power)^(1/power).
///
/// Cubes are unions of whole cells of every side length from one cell to the
/// full box, at every cell-aligned position; the maximal function is uncentered.
double hl_maximal(const Field& f, Coords x, double power = 1.0);

/// hl_maximal at every node.
Field hl_maximal_field(const Field& f, double power = 1.0);

/// sup over grid-aligned cubes Q containing x of
/// (avg_Q | |f|^delta - avg_Q |f|^delta |)^(1/delta), 0 < delta < 1.
double sharp_maximal(const Field& f, Coords x, double delta);
Field sharp_maximal_field(const Field& f, double delta);

/// Finite family of cubes with the exponents of the auxiliary sums.
struct CubeFamilySummary {
    std::vector<Box> cubes;
    int m = 1;
    double epsilon = 1.0;

    double total_measure() const;
};

/// sum_k [l(Q_k) / ((4/5)|x - c_k|)]^(eps/m) |Q_k| / |x - c_k|^n.
/// Throws SingularityError if x is a cube center.
double marcinkiewicz_sum(const CubeFamilySummary& fam, Coords x, int m, double epsilon);

/// sum_k l(Q_k)^(n+eps) / (l(Q_k) + |x - c_k|)^(n+eps).
double j_function(const CubeFamilySummary& fam, Coords x, double epsilon);

}  // namespace msq
