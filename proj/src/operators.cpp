#include "msq/operators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "msq/error.hpp"
#include "msq/numeric.hpp"

namespace msq {

std::vector<double> default_delta_grid(const Field& f, std::size_t count) {
    if (count == 0) throw DomainError("delta grid needs at least one radius");
    return geomspace(f.spacing(), f.box().diameter(), count);
}

std::vector<double> refine_delta_grid(const std::vector<double>& deltas) {
    std::vector<double> out;
    for (std::size_t i = 0; i < deltas.size(); ++i) {
        if (i > 0) out.push_back(std::sqrt(deltas[i - 1] * deltas[i]));
        out.push_back(deltas[i]);
    }
    return out;
}

void validate_config(const SquareFunctionConfig& cfg) {
    for (std::size_t i = 0; i < cfg.deltas.size(); ++i) {
        if (!(cfg.deltas[i] > 0.0)) throw DomainError("truncation radii must be positive");
        if (i > 0 && !(cfg.deltas[i] > cfg.deltas[i - 1]))
            throw DomainError("truncation radii must be strictly increasing");
    }
}

namespace {

double sqdist(Coords a, Coords b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
    return s;
}

}  // namespace

bool TruncationGeometry::in_inner_ball(Coords ys) const {
    const std::size_t n = center.size();
    double s = 0.0;
    for (std::size_t j = 0; j * n < ys.size(); ++j) s += sqdist(center, ys.subspan(j * n, n));
    return s < delta * delta;
}

bool TruncationGeometry::in_far_field(Coords ys) const {
    const std::size_t n = center.size();
    for (std::size_t j = 0; j * n < ys.size(); ++j)
        if (sqdist(center, ys.subspan(j * n, n)) < delta * delta) return false;
    return true;
}

bool TruncationGeometry::contains(Coords ys) const {
    switch (kind) {
        case TruncationKind::InnerComplement: return !in_inner_ball(ys);
        case TruncationKind::FarField: return in_far_field(ys);
        case TruncationKind::Annulus: return !in_inner_ball(ys) && !in_far_field(ys);
    }
    return false;
}

// ---------------------------------------------------------------------------
// A_t

ApproxIdentityResult apply_approx_identity(const ApproxIdentity& id, double t, const Field& f) {
    if (!(t > 0.0)) throw DomainError("A_t needs t > 0");
    if (id.n() != f.dim()) throw DomainError("identity and field dimensions differ");
    const int n = f.dim();
    const auto N = f.resolution();
    const double h = f.spacing();
    const double w = f.cell_volume();
    ApproxIdentityResult out;
    if (id.scale(t) < 0.5 * h) {
        out.warnings.push_back("t^(1/s) = " + std::to_string(id.scale(t)) +
                               " is below half the grid spacing; A_t is not resolved");
    }
    // a_t depends on the node offset only.
    const std::size_t span = 2 * N - 1;
    std::size_t table_size = 1;
    for (int d = 0; d < n; ++d) table_size *= span;
    std::vector<double> table(table_size);
    {
        Point zero(n, 0.0), off(n);
        for (std::size_t i = 0; i < table_size; ++i) {
            std::size_t rest = i;
            for (int d = n - 1; d >= 0; --d) {
                off[d] = (static_cast<double>(rest % span) - static_cast<double>(N - 1)) * h;
                rest /= span;
            }
            table[i] = id(t, zero, off) * w;
        }
    }
    std::vector<std::size_t> support;
    for (std::size_t i = 0; i < f.size(); ++i)
        if (f[i] != 0.0) support.push_back(i);
    std::vector<std::size_t> sup_idx(support.size() * n);
    {
        std::vector<std::size_t> mi(n);
        for (std::size_t k = 0; k < support.size(); ++k) {
            f.multi_index(support[k], mi);
            std::copy(mi.begin(), mi.end(), sup_idx.begin() + k * n);
        }
    }
    std::vector<double> res(f.size(), 0.0);
    parallel_for(f.size(), [&](std::size_t i) {
        std::vector<std::size_t> xi(n);
        f.multi_index(i, xi);
        double acc = 0.0;
        for (std::size_t k = 0; k < support.size(); ++k) {
            std::size_t off = 0;
            for (int d = 0; d < n; ++d) off = off * span + (xi[d] + N - 1 - sup_idx[k * n + d]);
            acc += table[off] * f[support[k]];
        }
        res[i] = acc;
    });
    double before = 0.0, after = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
        before += f[i] * w;
        after += res[i] * w;
    }
    out.boundary_loss = before - after;
    out.field = f.with_samples(std::move(res));
    return out;
}

// ---------------------------------------------------------------------------
// Square functions

namespace {

enum Want : unsigned { WantFull = 1, WantInner = 2, WantFar = 4 };

// Nonzero nodes of one input, scaled by the node weight.
struct Slot {
    std::vector<std::size_t> node;
    std::vector<std::size_t> midx;  // per-axis indices, n per node
    std::vector<double> coord;      // n per node
    std::vector<double> fh;
};

std::vector<Slot> make_slots(std::span<const Field> fs) {
    std::vector<Slot> slots;
    for (const Field& f : fs) {
        const int n = f.dim();
        Slot s;
        std::vector<std::size_t> mi(n);
        Point p(n);
        for (std::size_t i = 0; i < f.size(); ++i) {
            if (f[i] == 0.0) continue;
            s.node.push_back(i);
            f.multi_index(i, mi);
            f.node(i, p);
            s.midx.insert(s.midx.end(), mi.begin(), mi.end());
            s.coord.insert(s.coord.end(), p.begin(), p.end());
            s.fh.push_back(f[i] * f.cell_volume());
        }
        slots.push_back(std::move(s));
    }
    return slots;
}

void check_inputs(const KernelFamily& k, std::span<const Field> fs) {
    if (static_cast<int>(fs.size()) != k.m()) throw DomainError("number of inputs differs from the kernel's m");
    for (const Field& f : fs) {
        if (f.dim() != k.n()) throw DomainError("input dimension differs from the kernel's n");
        if (!f.same_grid(fs[0])) throw DomainError("inputs must share one grid");
    }
}

// Factor values k_v(offset * h) for every node offset and every v node.
struct OffsetTables {
    std::size_t span = 0;
    std::vector<std::vector<double>> per_v;
};

OffsetTables make_tables(const KernelFamily& k, const Field& f, const LogScaleRule& rule) {
    const int n = f.dim();
    const auto N = f.resolution();
    const double h = f.spacing();
    OffsetTables t;
    t.span = 2 * N - 1;
    std::size_t size = 1;
    for (int d = 0; d < n; ++d) size *= t.span;
    t.per_v.resize(rule.size());
    parallel_for(rule.size(), [&](std::size_t vi) {
        const double v = rule.nodes()[vi];
        std::vector<double> tab(size);
        Point off(n);
        for (std::size_t i = 0; i < size; ++i) {
            std::size_t rest = i;
            for (int d = n - 1; d >= 0; --d) {
                off[d] = (static_cast<double>(rest % t.span) - static_cast<double>(N - 1)) * h;
                rest /= t.span;
            }
            tab[i] = k.factor(v, off);
        }
        t.per_v[vi] = std::move(tab);
    });
    return t;
}

// Per-v spatial integrals at one evaluation point. inner[d][v] and far[d][v]
// hold the integrals restricted to sum |x - y_i|^2 >= delta_d^2 and to
// min |x - y_j| >= delta_d respectively.
struct PointSweep {
    std::vector<double> full;
    std::vector<std::vector<double>> inner, far;
};

class Sweeper {
public:
    Sweeper(const KernelFamily& k, const std::vector<Slot>& slots, const Field& grid, const LogScaleRule& rule,
            const std::vector<double>& deltas, const OffsetTables* tables)
        : k_(k), slots_(slots), grid_(grid), rule_(rule), deltas_(deltas), tables_(tables) {
        for (double d : deltas_) d2_.push_back(d * d);
    }

    // x_node is used with offset tables; pass SIZE_MAX for off-grid points.
    PointSweep run(Coords x, std::size_t x_node, unsigned want) const {
        const int m = k_.m(), n = k_.n();
        const std::size_t nd = deltas_.size();
        const std::size_t nv = rule_.size();
        PointSweep out;
        out.full.assign(nv, 0.0);
        if (want & WantInner) out.inner.assign(nd, std::vector<double>(nv, 0.0));
        if (want & WantFar) out.far.assign(nd, std::vector<double>(nv, 0.0));
        for (const Slot& s : slots_)
            if (s.fh.empty()) return out;

        // Geometry: every slot sorted by distance to x.
        std::vector<std::vector<std::size_t>> perm(m);
        std::vector<std::vector<double>> r2(m);
        for (int j = 0; j < m; ++j) {
            const Slot& s = slots_[j];
            const std::size_t cnt = s.fh.size();
            std::vector<double> d(cnt);
            for (std::size_t q = 0; q < cnt; ++q) d[q] = sqdist(x, Coords(s.coord).subspan(q * n, n));
            perm[j].resize(cnt);
            std::iota(perm[j].begin(), perm[j].end(), std::size_t{0});
            std::stable_sort(perm[j].begin(), perm[j].end(), [&](std::size_t a, std::size_t b) { return d[a] < d[b]; });
            r2[j].resize(cnt);
            for (std::size_t q = 0; q < cnt; ++q) r2[j][q] = d[perm[j][q]];
        }
        const bool fast = k_.is_product() && m <= 2;
        const bool need_trunc = (want & (WantInner | WantFar)) != 0;

        // first index with r2 >= delta^2, per slot and radius
        std::vector<std::vector<std::size_t>> first_far(m, std::vector<std::size_t>(nd));
        for (int j = 0; j < m; ++j)
            for (std::size_t d = 0; d < nd; ++d)
                first_far[j][d] = static_cast<std::size_t>(
                    std::lower_bound(r2[j].begin(), r2[j].end(), d2_[d]) - r2[j].begin());
        std::vector<std::vector<std::uint32_t>> pair_idx;
        if (fast && m == 2 && (want & WantInner)) {
            pair_idx.assign(nd, std::vector<std::uint32_t>(r2[0].size()));
            for (std::size_t d = 0; d < nd; ++d)
                for (std::size_t p = 0; p < r2[0].size(); ++p) {
                    const double rest = d2_[d] - r2[0][p];
                    pair_idx[d][p] = rest <= 0.0 ? 0u
                                                 : static_cast<std::uint32_t>(
                                                       std::lower_bound(r2[1].begin(), r2[1].end(), rest) -
                                                       r2[1].begin());
                }
        }

        std::vector<std::size_t> xi(n);
        if (tables_) grid_.multi_index(x_node, xi);
        std::vector<std::vector<double>> a(m);
        std::vector<double> diff(n);
        std::vector<double> suffix;
        for (std::size_t vi = 0; vi < nv; ++vi) {
            const double v = rule_.nodes()[vi];
            if (fast) {
                for (int j = 0; j < m; ++j) {
                    const Slot& s = slots_[j];
                    a[j].resize(s.fh.size());
                    for (std::size_t q = 0; q < s.fh.size(); ++q) {
                        const std::size_t e = perm[j][q];
                        double kv;
                        if (tables_) {
                            std::size_t off = 0;
                            for (int d = 0; d < n; ++d)
                                off = off * tables_->span + (xi[d] + grid_.resolution() - 1 - s.midx[e * n + d]);
                            kv = tables_->per_v[vi][off];
                        } else {
                            for (int d = 0; d < n; ++d) diff[d] = x[d] - s.coord[e * n + d];
                            kv = k_.factor(v, diff);
                        }
                        a[j][q] = kv * s.fh[e];
                    }
                }
                double full = 1.0;
                for (int j = 0; j < m; ++j) {
                    double acc = 0.0;
                    for (double val : a[j]) acc += val;
                    full *= acc;
                }
                out.full[vi] = full;
                if (!need_trunc) continue;
                // suffix sums per slot
                std::vector<std::vector<double>> suf(m);
                for (int j = 0; j < m; ++j) {
                    suf[j].assign(a[j].size() + 1, 0.0);
                    for (std::size_t q = a[j].size(); q-- > 0;) suf[j][q] = suf[j][q + 1] + a[j][q];
                }
                for (std::size_t d = 0; d < nd; ++d) {
                    if (want & WantFar) {
                        double prod = 1.0;
                        for (int j = 0; j < m; ++j) prod *= suf[j][first_far[j][d]];
                        out.far[d][vi] = prod;
                    }
                    if (want & WantInner) {
                        if (m == 1) {
                            out.inner[d][vi] = suf[0][first_far[0][d]];
                        } else {
                            double acc = 0.0;
                            const auto& idx = pair_idx[d];
                            for (std::size_t p = 0; p < a[0].size(); ++p) acc += a[0][p] * suf[1][idx[p]];
                            out.inner[d][vi] = acc;
                        }
                    }
                }
            } else {
                generic(x, v, vi, perm, r2, want, out);
            }
        }
        return out;
    }

private:
    // Tuple loop over all nonzero node combinations, binned by radius.
    void generic(Coords x, double v, std::size_t vi, const std::vector<std::vector<std::size_t>>& perm,
                 const std::vector<std::vector<double>>& r2, unsigned want, PointSweep& out) const {
        const int m = k_.m(), n = k_.n();
        const std::size_t nd = deltas_.size();
        std::vector<double> bin_inner(nd + 1, 0.0), bin_far(nd + 1, 0.0);
        std::vector<std::size_t> pos(m, 0);
        std::vector<double> ys(static_cast<std::size_t>(m * n));
        double full = 0.0;
        while (true) {
            double fprod = 1.0, rho = 0.0, mu = std::numeric_limits<double>::infinity();
            for (int j = 0; j < m; ++j) {
                const std::size_t e = perm[j][pos[j]];
                fprod *= slots_[j].fh[e];
                std::copy_n(slots_[j].coord.begin() + e * n, n, ys.begin() + j * n);
                rho += r2[j][pos[j]];
                mu = std::min(mu, r2[j][pos[j]]);
            }
            const double val = k_(v, x, ys) * fprod;
            full += val;
            if (want & WantInner)
                bin_inner[std::upper_bound(d2_.begin(), d2_.end(), rho) - d2_.begin()] += val;
            if (want & WantFar) bin_far[std::upper_bound(d2_.begin(), d2_.end(), mu) - d2_.begin()] += val;
            int j = m - 1;
            while (j >= 0) {
                if (++pos[j] < perm[j].size()) break;
                pos[j] = 0;
                --j;
            }
            if (j < 0) break;
        }
        out.full[vi] = full;
        // radius d keeps tuples whose bin index exceeds d
        double acc_i = 0.0, acc_f = 0.0;
        for (std::size_t d = nd; d-- > 0;) {
            acc_i += bin_inner[d + 1];
            acc_f += bin_far[d + 1];
            if (want & WantInner) out.inner[d][vi] = acc_i;
            if (want & WantFar) out.far[d][vi] = acc_f;
        }
    }

    const KernelFamily& k_;
    const std::vector<Slot>& slots_;
    const Field& grid_;
    const LogScaleRule& rule_;
    const std::vector<double>& deltas_;
    const OffsetTables* tables_;
    std::vector<double> d2_;
};

double l2v_of(const LogScaleRule& rule, std::span<const double> vals) {
    std::vector<double> sq(vals.size());
    for (std::size_t i = 0; i < vals.size(); ++i) sq[i] = vals[i] * vals[i];
    const double s = rule.apply(sq);
    if (!std::isfinite(s)) throw AccuracyError("square function v-integral is not finite");
    return std::sqrt(s);
}

MaximalPair pair_from_sweep(const LogScaleRule& rule, const PointSweep& sw) {
    const std::size_t nv = rule.size();
    std::vector<double> sup(nv, 0.0);
    MaximalPair out;
    for (const auto& row : sw.inner) {
        std::vector<double> sq(nv);
        for (std::size_t i = 0; i < nv; ++i) {
            sq[i] = row[i] * row[i];
            sup[i] = std::max(sup[i], sq[i]);
        }
        const double s = rule.apply(sq);
        if (!std::isfinite(s)) throw AccuracyError("square function v-integral is not finite");
        out.starstar = std::max(out.starstar, std::sqrt(s));
    }
    const double s = rule.apply(sup);
    if (!std::isfinite(s)) throw AccuracyError("square function v-integral is not finite");
    out.star = std::sqrt(s);
    return out;
}

void check_point(std::span<const Field> fs, Coords x) {
    if (static_cast<int>(x.size()) != fs[0].dim()) throw DomainError("evaluation point has the wrong dimension");
    if (!fs[0].box().contains(x)) throw DomainError("evaluation point outside the grid box");
}

}  // namespace

double square_function(const KernelFamily& k, std::span<const Field> fs, Coords x, const SquareFunctionConfig& cfg) {
    check_inputs(k, fs);
    check_point(fs, x);
    const auto slots = make_slots(fs);
    const std::vector<double> none;
    Sweeper sw(k, slots, fs[0], cfg.rule, none, nullptr);
    return l2v_of(cfg.rule, sw.run(x, 0, WantFull).full);
}

std::vector<double> truncated_square_functions(const KernelFamily& k, std::span<const Field> fs, Coords x,
                                               TruncationKind kind, const SquareFunctionConfig& cfg) {
    check_inputs(k, fs);
    check_point(fs, x);
    validate_config(cfg);
    const auto slots = make_slots(fs);
    Sweeper sw(k, slots, fs[0], cfg.rule, cfg.deltas, nullptr);
    const unsigned want = kind == TruncationKind::InnerComplement ? WantInner
                          : kind == TruncationKind::FarField      ? WantFar
                                                                  : (WantInner | WantFar);
    const PointSweep res = sw.run(x, 0, want);
    std::vector<double> out;
    for (std::size_t d = 0; d < cfg.deltas.size(); ++d) {
        if (kind == TruncationKind::InnerComplement) {
            out.push_back(l2v_of(cfg.rule, res.inner[d]));
        } else if (kind == TruncationKind::FarField) {
            out.push_back(l2v_of(cfg.rule, res.far[d]));
        } else {
            std::vector<double> diff(cfg.rule.size());
            for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = res.inner[d][i] - res.far[d][i];
            out.push_back(l2v_of(cfg.rule, diff));
        }
    }
    return out;
}

double truncated_square_function(const KernelFamily& k, std::span<const Field> fs, Coords x,
                                 const TruncationGeometry& geom, const SquareFunctionConfig& cfg) {
    if (!(geom.delta >= 0.0)) throw DomainError("truncation radius must be nonnegative");
    if (!geom.center.empty() && sqdist(geom.center, x) != 0.0)
        throw DomainError("truncation must be centered at the evaluation point");
    SquareFunctionConfig one = cfg;
    if (geom.delta == 0.0) {
        // Every tuple lies in the inner-ball complement; V_0 is everything as well.
        if (geom.kind == TruncationKind::Annulus) return 0.0;
        return square_function(k, fs, x, cfg);
    }
    one.deltas = {geom.delta};
    return truncated_square_functions(k, fs, x, geom.kind, one).front();
}

MaximalPair maximal_square_functions(const KernelFamily& k, std::span<const Field> fs, Coords x,
                                     const SquareFunctionConfig& cfg) {
    check_inputs(k, fs);
    check_point(fs, x);
    validate_config(cfg);
    if (cfg.deltas.empty()) throw DomainError("maximal square function needs a nonempty delta grid");
    const auto slots = make_slots(fs);
    Sweeper sw(k, slots, fs[0], cfg.rule, cfg.deltas, nullptr);
    return pair_from_sweep(cfg.rule, sw.run(x, 0, WantInner));
}

double maximal_square_function(const KernelFamily& k, std::span<const Field> fs, Coords x, MaximalVariant variant,
                               const SquareFunctionConfig& cfg) {
    const MaximalPair p = maximal_square_functions(k, fs, x, cfg);
    return variant == MaximalVariant::Star ? p.star : p.starstar;
}

Field square_function_field(const KernelFamily& k, std::span<const Field> fs, const SquareFunctionConfig& cfg) {
    check_inputs(k, fs);
    const Field& g = fs[0];
    const auto slots = make_slots(fs);
    OffsetTables tables;
    if (k.is_product()) tables = make_tables(k, g, cfg.rule);
    const std::vector<double> none;
    Sweeper sw(k, slots, g, cfg.rule, none, k.is_product() ? &tables : nullptr);
    std::vector<double> out(g.size());
    parallel_for(g.size(), [&](std::size_t i) {
        const Point x = g.node(i);
        out[i] = l2v_of(cfg.rule, sw.run(x, i, WantFull).full);
    });
    return g.with_samples(std::move(out));
}

MaximalFields maximal_square_function_fields(const KernelFamily& k, std::span<const Field> fs,
                                             const SquareFunctionConfig& cfg) {
    check_inputs(k, fs);
    validate_config(cfg);
    if (cfg.deltas.empty()) throw DomainError("maximal square function needs a nonempty delta grid");
    const Field& g = fs[0];
    const auto slots = make_slots(fs);
    OffsetTables tables;
    if (k.is_product()) tables = make_tables(k, g, cfg.rule);
    Sweeper sw(k, slots, g, cfg.rule, cfg.deltas, k.is_product() ? &tables : nullptr);
    std::vector<double> star(g.size()), starstar(g.size());
    parallel_for(g.size(), [&](std::size_t i) {
        const Point x = g.node(i);
        const MaximalPair p = pair_from_sweep(cfg.rule, sw.run(x, i, WantInner));
        star[i] = p.star;
        starstar[i] = p.starstar;
    });
    return {g.with_samples(std::move(star)), g.with_samples(std::move(starstar))};
}

}  // namespace msq
