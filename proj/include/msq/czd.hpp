#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "msq/grid.hpp"

namespace msq {

/// b_k = (f - avg_Q f) on the cells of Q, sampled on Q's own sub-grid.
struct BadAtom {
    Box cube;
    Field atom;
};

struct CZDecomposition {
    Field input;
    double level = 0.0;
    int max_depth = 0;
    std::vector<Box> cubes;
    std::vector<int> depths;  ///< generation of each selected cube
    Field good;
    std::vector<BadAtom> bad;
    double c_good = 0.0;   ///< ||g||_inf / level
    double c_atoms = 0.0;  ///< max_k ||b_k||_1 / (level |Q_k|)
    double c_cover = 0.0;  ///< level * sum |Q_k| / ||f||_1
    /// Every dilate Q* (5 sqrt(n) times the side) stays inside the root.
    bool margin_ok = true;
};

/// Dyadic stopping time at `level`: the children of a cube are examined while
/// its average of |f| is at most `level`; a cube is selected the first time
/// its average strictly exceeds it. The tree root must be the field's box.
CZDecomposition cz_decompose(const Field& f, double level, const DyadicTree& tree);

/// Decomposition over the field's own box, descending to single cells.
CZDecomposition cz_decompose(const Field& f, double level);

struct PropertyCheck {
    std::string property;
    bool pass = true;
    double value = 0.0;  ///< worst measured quantity
    double bound = 0.0;
    int cube = -1;       ///< offending cube, -1 when not cube specific
};

struct CZValidation {
    bool pass = true;
    std::vector<PropertyCheck> checks;
    /// "property (cube k)" of the first failure, empty on success.
    std::string first_failure;
};

/// Recomputes reconstruction, the bounds on g, the atoms and the cover, zero
/// means, disjointness, atom supports and maximality of the stopping time.
CZValidation czd_validate(const CZDecomposition& d);

/// Throws ValidationError naming the first failed property and cube.
void czd_require_valid(const CZDecomposition& d);

/// Sum of all atoms on the input grid.
Field bad_sum(const CZDecomposition& d);

/// level, cubes (center, side), constants and the names of the CSV files.
nlohmann::json to_json(const CZDecomposition& d, const std::string& good_csv = "good.csv",
                       const std::string& bad_csv = "bad.csv");

/// Writes `stem`.json, `stem`_good.csv and `stem`_bad.csv into dir.
void write_decomposition(const std::filesystem::path& dir, const std::string& stem, const CZDecomposition& d);

}  // namespace msq
