#include "msq/czd.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "msq/error.hpp"
#include "msq/numeric.hpp"

namespace msq {

namespace {

// Cells of a grid-aligned cube: lowest per-axis cell index and side in cells.
struct CellRange {
    std::vector<std::size_t> lo;
    std::size_t k = 0;
};

CellRange cells_of(const Field& f, const Box& q) {
    const double h = f.spacing();
    const int n = f.dim();
    CellRange r;
    const double kk = q.side() / h;
    r.k = static_cast<std::size_t>(std::llround(kk));
    if (r.k == 0 || std::abs(kk - static_cast<double>(r.k)) > 1e-9 * kk)
        throw DomainError("cube is not a union of grid cells");
    for (int d = 0; d < n; ++d) {
        const double off = (q.lo(d) - f.box().lo(d)) / h;
        const auto i = std::llround(off);
        if (std::abs(off - static_cast<double>(i)) > 1e-9 * std::max(1.0, std::abs(off)) || i < 0 ||
            static_cast<std::size_t>(i) + r.k > f.resolution())
            throw DomainError("cube is not aligned with the grid");
        r.lo.push_back(static_cast<std::size_t>(i));
    }
    return r;
}

template <class Fn>
void for_cells(const Field& f, const CellRange& r, Fn&& fn) {
    const int n = f.dim();
    std::vector<std::size_t> idx = r.lo;
    while (true) {
        fn(f.flat_index(idx));
        int d = n - 1;
        while (d >= 0) {
            if (++idx[d] < r.lo[d] + r.k) break;
            idx[d] = r.lo[d];
            --d;
        }
        if (d < 0) break;
    }
}

double abs_average(const Field& f, const CellRange& r) {
    std::vector<double> v;
    for_cells(f, r, [&](std::size_t i) { v.push_back(std::abs(f[i])); });
    return compensated_sum(v) / static_cast<double>(v.size());
}

double signed_average(const Field& f, const CellRange& r) {
    std::vector<double> v;
    for_cells(f, r, [&](std::size_t i) { v.push_back(f[i]); });
    return compensated_sum(v) / static_cast<double>(v.size());
}

Box cube_box(const Field& f, const CellRange& r) {
    const double h = f.spacing();
    Point c(f.dim());
    for (int d = 0; d < f.dim(); ++d) c[d] = f.box().lo(d) + (static_cast<double>(r.lo[d]) + 0.5 * r.k) * h;
    return Box(c, 0.5 * static_cast<double>(r.k) * h);
}

int log2_exact(std::size_t v) {
    int e = 0;
    while ((std::size_t{1} << e) < v) ++e;
    return e;
}

}  // namespace

CZDecomposition cz_decompose(const Field& f, double level, const DyadicTree& tree) {
    if (!(level > 0.0) || !std::isfinite(level)) throw DomainError("decomposition level must be positive");
    if (!(tree.root == f.box())) throw DomainError("f is not supported in the tree root (root must be the field's box)");
    const int n = f.dim();
    const std::size_t N = f.resolution();
    const int finest = log2_exact(N);
    if (tree.max_depth < 0 || tree.max_depth > finest)
        throw DomainError("tree depth exceeds the grid resolution");
    CellRange root{std::vector<std::size_t>(n, 0), N};
    const double root_avg = abs_average(f, root);
    if (!(level > root_avg))
        throw PreconditionError("level " + std::to_string(level) + " does not exceed the root average " +
                                std::to_string(root_avg));

    CZDecomposition d;
    d.input = f;
    d.level = level;
    d.max_depth = tree.max_depth;
    std::vector<double> g(f.samples().begin(), f.samples().end());

    // depth-first stopping time
    struct Item {
        CellRange r;
        int depth;
    };
    std::vector<Item> stack{{root, 0}};
    while (!stack.empty()) {
        Item it = std::move(stack.back());
        stack.pop_back();
        if (it.depth > 0 && abs_average(f, it.r) > level) {
            const Box q = cube_box(f, it.r);
            const double avg = signed_average(f, it.r);
            std::vector<double> atom;
            for_cells(f, it.r, [&](std::size_t i) {
                atom.push_back(f[i] - avg);
                g[i] = avg;
            });
            d.cubes.push_back(q);
            d.depths.push_back(it.depth);
            d.bad.push_back({q, Field(q, it.r.k, std::move(atom))});
            continue;
        }
        if (it.depth == tree.max_depth) continue;
        const std::size_t half = it.r.k / 2;
        // push children in reverse so they are visited in row-major order
        const std::size_t nchild = std::size_t{1} << n;
        for (std::size_t c = nchild; c-- > 0;) {
            CellRange ch{it.r.lo, half};
            for (int ax = 0; ax < n; ++ax)
                if ((c >> (n - 1 - ax)) & 1u) ch.lo[ax] += half;
            stack.push_back({ch, it.depth + 1});
        }
    }
    d.good = f.with_samples(std::move(g));

    const double f1 = f.lp_norm(1.0);
    d.c_good = d.good.max_abs() / level;
    double cover = 0.0;
    for (const auto& b : d.bad) {
        d.c_atoms = std::max(d.c_atoms, b.atom.lp_norm(1.0) / (level * b.cube.volume()));
        cover += b.cube.volume();
        if (!f.box().contains(b.cube.dilate(5.0 * std::sqrt(static_cast<double>(n))), 1e-12)) d.margin_ok = false;
    }
    d.c_cover = f1 > 0.0 ? level * cover / f1 : 0.0;
    return d;
}

CZDecomposition cz_decompose(const Field& f, double level) {
    return cz_decompose(f, level, DyadicTree{f.box(), log2_exact(f.resolution())});
}

Field bad_sum(const CZDecomposition& d) {
    std::vector<double> s(d.input.size(), 0.0);
    for (const auto& b : d.bad) {
        const CellRange r = cells_of(d.input, b.cube);
        std::size_t q = 0;
        for_cells(d.input, r, [&](std::size_t i) { s[i] += b.atom[q++]; });
    }
    return d.input.with_samples(std::move(s));
}

CZValidation czd_validate(const CZDecomposition& d) {
    CZValidation out;
    const Field& f = d.input;
    const int n = f.dim();
    const double two_n = std::ldexp(1.0, n);
    const double slack = 1.0 + 1e-12;
    auto add = [&](PropertyCheck c) {
        if (!c.pass && out.pass) {
            out.pass = false;
            out.first_failure = c.property + (c.cube >= 0 ? " (cube " + std::to_string(c.cube) + ")" : "");
        }
        out.checks.push_back(std::move(c));
    };

    // supports
    {
        PropertyCheck c{"atom-support", true, 0.0, 0.0, -1};
        if (d.bad.size() != d.cubes.size()) {
            c.pass = false;
        } else {
            for (std::size_t k = 0; k < d.bad.size() && c.pass; ++k) {
                const auto& b = d.bad[k];
                bool ok = b.atom.box() == b.cube && b.cube == d.cubes[k] && f.box().contains(b.cube);
                if (ok) {
                    try {
                        ok = cells_of(f, b.cube).k == b.atom.resolution();
                    } catch (const DomainError&) {
                        ok = false;
                    }
                }
                if (!ok) {
                    c.pass = false;
                    c.cube = static_cast<int>(k);
                }
            }
        }
        add(c);
        if (!c.pass) return out;
    }
    // disjointness
    {
        PropertyCheck c{"disjoint", true, 0.0, 0.0, -1};
        for (std::size_t a = 0; a < d.cubes.size() && c.pass; ++a)
            for (std::size_t b = a + 1; b < d.cubes.size(); ++b)
                if (d.cubes[a].overlaps(d.cubes[b])) {
                    c.pass = false;
                    c.cube = static_cast<int>(b);
                    break;
                }
        add(c);
    }
    // zero means
    {
        PropertyCheck c{"zero-mean", true, 0.0, 1e-12, -1};
        for (std::size_t k = 0; k < d.bad.size(); ++k) {
            const Field& a = d.bad[k].atom;
            std::vector<double> v(a.samples().begin(), a.samples().end());
            const double l1 = a.lp_norm(1.0);
            const double mean = std::abs(compensated_sum(v)) * a.cell_volume();
            const double rel = l1 > 0.0 ? mean / l1 : (mean > 0.0 ? INFINITY : 0.0);
            if (rel > c.value) {
                c.value = rel;
                if (rel > 1e-12) {
                    c.pass = false;
                    if (c.cube < 0) c.cube = static_cast<int>(k);
                }
            }
        }
        add(c);
    }
    // reconstruction
    const Field bsum = bad_sum(d);
    {
        PropertyCheck c{"reconstruction", true, 0.0, 1e-12, -1};
        if (!d.good.same_grid(f)) {
            c.pass = false;
        } else {
            const double scale = std::max(1.0, f.max_abs());
            for (std::size_t i = 0; i < f.size(); ++i)
                c.value = std::max(c.value, std::abs(d.good[i] + bsum[i] - f[i]) / scale);
            c.pass = c.value <= 1e-12;
        }
        add(c);
    }
    // (i)
    {
        PropertyCheck c{"good-bound", true, d.good.max_abs(), two_n * d.level, -1};
        c.pass = c.value <= c.bound * slack;
        add(c);
    }
    // (ii)
    {
        PropertyCheck c{"atom-l1", true, 0.0, 2.0 * two_n, -1};
        for (std::size_t k = 0; k < d.bad.size(); ++k) {
            const double r = d.bad[k].atom.lp_norm(1.0) / (d.level * d.bad[k].cube.volume());
            if (r > c.value) c.value = r;
            if (r > c.bound * slack && c.pass) {
                c.pass = false;
                c.cube = static_cast<int>(k);
            }
        }
        add(c);
    }
    // (iii)
    {
        double cover = 0.0;
        for (const auto& q : d.cubes) cover += q.volume();
        PropertyCheck c{"cover", true, cover, f.lp_norm(1.0) / d.level, -1};
        c.pass = c.value <= c.bound * slack;
        add(c);
    }
    // stopping time: selected cubes exceed the level, their parents do not
    {
        PropertyCheck c{"maximality", true, 0.0, d.level, -1};
        for (std::size_t k = 0; k < d.cubes.size() && c.pass; ++k) {
            const CellRange r = cells_of(f, d.cubes[k]);
            const double own = abs_average(f, r);
            CellRange parent = r;
            parent.k = r.k * 2;
            bool has_parent = parent.k <= f.resolution();
            if (has_parent)
                for (auto& l : parent.lo) l = (l / parent.k) * parent.k;
            const double up = has_parent ? abs_average(f, parent) : 0.0;
            c.value = std::max(c.value, up);
            if (!(own > d.level) || up > d.level) {
                c.pass = false;
                c.cube = static_cast<int>(k);
            }
        }
        add(c);
    }
    // norms of g
    {
        double bl1 = 0.0;
        for (const auto& b : d.bad) bl1 += b.atom.lp_norm(1.0);
        const double g1 = d.good.lp_norm(1.0);
        PropertyCheck c{"good-l1", true, g1, f.lp_norm(1.0) + bl1, -1};
        c.pass = c.value <= c.bound * slack;
        add(c);
        const double g2 = d.good.lp_norm(2.0);
        const double interp = std::sqrt(g1 * d.good.max_abs());
        PropertyCheck c2{"good-interpolation", true, g2, interp, -1};
        c2.pass = c2.value <= c2.bound * slack + 1e-300;
        add(c2);
    }
    return out;
}

void czd_require_valid(const CZDecomposition& d) {
    const CZValidation v = czd_validate(d);
    if (v.pass) return;
    for (const auto& c : v.checks) {
        if (!c.pass)
            throw ValidationError(c.property, c.cube >= 0 ? "violated on cube " + std::to_string(c.cube)
                                                          : "violated (" + std::to_string(c.value) + " vs " +
                                                                std::to_string(c.bound) + ")");
    }
}

nlohmann::json to_json(const CZDecomposition& d, const std::string& good_csv, const std::string& bad_csv) {
    nlohmann::json j;
    j["level"] = d.level;
    j["max_depth"] = d.max_depth;
    auto& cubes = j["cubes"] = nlohmann::json::array();
    for (std::size_t k = 0; k < d.cubes.size(); ++k)
        cubes.push_back({{"center", d.cubes[k].center()}, {"side", d.cubes[k].side()}, {"depth", d.depths[k]}});
    j["constants"] = {{"good", d.c_good}, {"atoms", d.c_atoms}, {"cover", d.c_cover}};
    j["margin_ok"] = d.margin_ok;
    j["good"] = good_csv;
    j["bad"] = bad_csv;
    return j;
}

void write_decomposition(const std::filesystem::path& dir, const std::string& stem, const CZDecomposition& d) {
    std::filesystem::create_directories(dir);
    const std::string good = stem + "_good.csv", bad = stem + "_bad.csv";
    {
        std::ofstream os(dir / good);
        write_field_csv(os, d.good);
        if (!os) throw Error("cannot write " + (dir / good).string());
    }
    {
        std::ofstream os(dir / bad);
        write_field_csv(os, bad_sum(d));
        if (!os) throw Error("cannot write " + (dir / bad).string());
    }
    std::ofstream os(dir / (stem + ".json"));
    os << to_json(d, good, bad).dump(2) << '\n';
    if (!os) throw Error("cannot write " + (dir / (stem + ".json")).string());
}

}  // namespace msq
