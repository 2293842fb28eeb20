#include "msq/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "msq/error.hpp"

namespace msq {

namespace {

double distance(Coords a, Coords b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
    return std::sqrt(s);
}

// Surface measure of the unit sphere in R^n.
double sphere_area(int n) {
    return 2.0 * std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(0.5 * n);
}

// Regularized upper incomplete gamma Q(n/2, x) for integer n >= 1.
double gamma_q_half_integer(int n, double x) {
    if (n % 2 == 0) {
        double term = 1.0, sum = 1.0;
        for (int i = 1; i < n / 2; ++i) {
            term *= x / i;
            sum += term;
        }
        return std::exp(-x) * sum;
    }
    double sum = std::erfc(std::sqrt(x));
    double a = 0.5;
    double term = std::exp(-x) * std::sqrt(x) / std::tgamma(1.5);
    for (int i = 0; i < (n - 1) / 2; ++i) {
        sum += term;
        a += 1.0;
        term *= x / (a + 0.5);
    }
    return sum;
}

}  // namespace

KernelFamily::KernelFamily(std::string label, int m, int n, KernelConstants constants, Eval eval,
                           bool translation_invariant)
    : label_(std::move(label)), m_(m), n_(n), constants_(constants), eval_(std::move(eval)),
      translation_invariant_(translation_invariant) {
    if (m_ < 1 || n_ < 1) throw DomainError("kernel needs m >= 1 and n >= 1");
    if (!(constants_.gamma > 0.0 && constants_.gamma <= 1.0)) throw DomainError("kernel gamma must lie in (0, 1]");
    if (!(constants_.B > 1.0)) throw DomainError("kernel B must exceed 1");
    if (!eval_) throw DomainError("kernel needs an evaluator");
}

KernelFamily KernelFamily::product(std::string label, int m, int n, KernelConstants constants, Factor factor,
                                   double decay_radius) {
    auto eval = [factor, m, n](double v, Coords x, Coords ys) {
        double diff[8];
        double prod = 1.0;
        for (int j = 0; j < m; ++j) {
            for (int k = 0; k < n; ++k) diff[k] = x[k] - ys[j * n + k];
            prod *= factor(v, Coords(diff, static_cast<std::size_t>(n)));
        }
        return prod;
    };
    if (n > 8) throw DomainError("product kernels support n <= 8");
    KernelFamily out(std::move(label), m, n, constants, std::move(eval), true);
    out.factor_ = std::move(factor);
    out.decay_radius_ = decay_radius;
    return out;
}

KernelFamily KernelFamily::relabeled(std::string label) const {
    KernelFamily out = *this;
    out.label_ = std::move(label);
    return out;
}

double smooth_profile(Coords u) {
    double sum = 0.0, sq = 0.0;
    for (double x : u) {
        sum += x;
        sq += x * x;
    }
    return sum * std::exp(-sq);
}

KernelFamily smooth_kernel(int m, int n) {
    auto factor = [n](double v, Coords d) {
        double sum = 0.0, sq = 0.0;
        for (double x : d) {
            sum += x;
            sq += x * x;
        }
        const double inv = 1.0 / v;
        return std::pow(inv, n) * sum * inv * std::exp(-sq * inv * inv);
    };
    KernelConstants c;
    c.gamma = 1.0;
    c.B = 2.0;
    c.epsilon = 1.0;
    return KernelFamily::product("smooth", m, n, c, factor, 7.0);
}

KernelFamily broken_kernel(int m, int n) {
    const double extra = -0.5 / m;
    auto factor = [n, extra](double v, Coords d) {
        double sum = 0.0, sq = 0.0;
        for (double x : d) {
            sum += x;
            sq += x * x;
        }
        const double inv = 1.0 / v;
        return std::pow(v, extra) * std::pow(inv, n) * sum * inv * std::exp(-sq * inv * inv);
    };
    return KernelFamily::product("broken", m, n, KernelConstants{}, factor, 7.0);
}

KernelFamily zero_kernel(int m, int n) {
    return KernelFamily::product("zero", m, n, KernelConstants{}, [](double, Coords) { return 0.0; }, 1.0);
}

ApproxIdentity::ApproxIdentity(int n, double s, double eta, Profile profile, std::string label)
    : n_(n), s_(s), eta_(eta), profile_(std::move(profile)), label_(std::move(label)) {
    if (n_ < 1) throw DomainError("approximation to the identity needs n >= 1");
    if (!(s_ > 0.0) || !(eta_ > 0.0)) throw DomainError("approximation to the identity needs s, eta > 0");
    if (!profile_) throw DomainError("approximation to the identity needs a profile");
}

double ApproxIdentity::scale(double t) const { return std::pow(t, 1.0 / s_); }

double ApproxIdentity::operator()(double t, Coords x, Coords y) const {
    const double sc = scale(t);
    return std::pow(sc, -n_) * profile_(distance(x, y) / sc);
}

double ApproxIdentity::tail_mass(double radius) const {
    if (label_ == "heat") return gamma_q_half_integer(n_, radius * radius / 4.0);
    // Radial quadrature on successively doubled shells until they stop contributing.
    double total = 0.0;
    double a = radius;
    double width = std::max(1.0, radius);
    for (int shell = 0; shell < 60; ++shell) {
        const int steps = 4000;
        const double dr = width / steps;
        double piece = 0.0;
        for (int i = 0; i <= steps; ++i) {
            const double r = a + i * dr;
            const double w = (i == 0 || i == steps) ? 0.5 : 1.0;
            piece += w * profile_(r) * std::pow(r, n_ - 1);
        }
        piece *= dr * sphere_area(n_);
        total += piece;
        if (piece <= 1e-18 * std::max(total, 1e-300)) break;
        a += width;
        width *= 2.0;
    }
    return total;
}

ApproxIdentity heat_identity(int n) {
    const double c = std::pow(4.0 * std::numbers::pi, -0.5 * n);
    return ApproxIdentity(n, 2.0, 1.0, [c](double r) { return c * std::exp(-0.25 * r * r); }, "heat");
}

double measure_decay_constant(const ApproxIdentity& id, double eta_prime, Coords radii) {
    double c = 0.0;
    for (double r : radii) c = std::max(c, id.profile(r) * std::pow(1.0 + r, id.n() + eta_prime));
    return c;
}

std::vector<double> decay_limit_values(const ApproxIdentity& id, double eta, Coords radii) {
    std::vector<double> out;
    out.reserve(radii.size());
    for (double r : radii) out.push_back(std::pow(r, id.n() + eta) * id.profile(r));
    return out;
}

double standard_bump(double u) { return std::max(0.0, 1.0 - std::abs(u)); }

ComposedKernel nonsmooth_kernel(int m, int n) {
    return ComposedKernel{smooth_kernel(m, n).relabeled("nonsmooth"), heat_identity(n), 0, standard_bump,
                          std::nullopt};
}

ComposedValue eval_composed_kernel(const ComposedKernel& ck, double t, double v, Coords x, Coords ys,
                                   const ComposedQuadrature& quad) {
    const KernelFamily& K = ck.base;
    const int n = K.n(), m = K.m();
    if (!(t > 0.0) || !(v > 0.0)) throw DomainError("composed kernel needs t > 0 and v > 0");
    if (ck.slot < 0 || ck.slot > m) throw DomainError("composed kernel slot out of range");
    if (static_cast<int>(x.size()) != n || static_cast<int>(ys.size()) != m * n)
        throw DomainError("composed kernel arguments have the wrong dimension");
    if (ck.evaluation_box) {
        if (!ck.evaluation_box->contains(x)) throw DomainError("x outside the declared evaluation box");
        for (int j = 0; j < m; ++j) {
            if (!ck.evaluation_box->contains(ys.subspan(j * n, n)))
                throw DomainError("y outside the declared evaluation box");
        }
    }

    const double sc = ck.identity.scale(t);
    Coords anchor = ck.slot == 0 ? x : ys.subspan((ck.slot - 1) * n, n);

    // The integrand is a product; its essential support lies in every candidate ball.
    struct Ball {
        Coords c;
        double r;
    };
    std::vector<Ball> balls{{anchor, quad.r_cut * sc}};
    if (K.is_product() && K.decay_radius() > 0.0) {
        const double rk = K.decay_radius() * v;
        if (ck.slot == 0) {
            for (int j = 0; j < m; ++j) balls.push_back({ys.subspan(j * n, n), rk});
        } else {
            balls.push_back({x, rk});
        }
    }
    for (std::size_t i = 0; i < balls.size(); ++i) {
        for (std::size_t j = i + 1; j < balls.size(); ++j) {
            if (distance(balls[i].c, balls[j].c) > balls[i].r + balls[j].r) return {};
        }
    }
    const Ball dom = *std::min_element(balls.begin(), balls.end(),
                                       [](const Ball& a, const Ball& b) { return a.r < b.r; });

    std::vector<double> z(static_cast<std::size_t>(n));
    std::vector<double> args(ys.begin(), ys.end());
    std::vector<std::size_t> idx(static_cast<std::size_t>(n));

    auto integrate = [&](int per_axis, double& l1, double& kmax, std::size_t& count) {
        const double h = 2.0 * dom.r / per_axis;
        const double w = std::pow(h, n);
        double acc = 0.0;
        l1 = 0.0;
        count = 0;
        std::fill(idx.begin(), idx.end(), 0);
        while (true) {
            double r2 = 0.0;
            for (int k = 0; k < n; ++k) {
                z[k] = dom.c[k] - dom.r + (static_cast<double>(idx[k]) + 0.5) * h;
                r2 += (z[k] - dom.c[k]) * (z[k] - dom.c[k]);
            }
            if (r2 <= dom.r * dom.r) {
                double kv, at;
                if (ck.slot == 0) {
                    kv = K(v, z, ys);
                    at = ck.identity(t, x, z);
                } else {
                    std::copy(z.begin(), z.end(), args.begin() + (ck.slot - 1) * n);
                    kv = K(v, x, args);
                    at = ck.identity(t, z, anchor);
                }
                kmax = std::max(kmax, std::abs(kv));
                acc += kv * at * w;
                l1 += std::abs(kv * at) * w;
                ++count;
            }
            int k = n - 1;
            while (k >= 0) {
                if (++idx[k] < static_cast<std::size_t>(per_axis)) break;
                idx[k] = 0;
                --k;
            }
            if (k < 0) break;
        }
        return acc;
    };

    double kmax = 0.0, l1 = 0.0;
    std::size_t count = 0;
    int per_axis = quad.initial_nodes;
    double prev = integrate(per_axis, l1, kmax, count);
    for (int level = 0; level < quad.max_refinements; ++level) {
        per_axis *= 2;
        const double cur = integrate(per_axis, l1, kmax, count);
        if (!std::isfinite(cur)) throw AccuracyError("composed kernel quadrature produced a non-finite value");
        if (std::abs(cur - prev) <= quad.rel_tol * std::abs(cur) + 1e-12 * l1) {
            ComposedValue out;
            out.value = cur;
            out.tail_bound = ck.identity.tail_mass(quad.r_cut) * kmax;
            out.nodes = count;
            return out;
        }
        prev = cur;
    }
    throw AccuracyError("composed kernel quadrature did not converge (relative change above tolerance)");
}

KernelFamily composed_as_family(const ComposedKernel& ck, double t, const ComposedQuadrature& quad) {
    auto eval = [ck, t, quad](double v, Coords x, Coords ys) {
        return eval_composed_kernel(ck, t, v, x, ys, quad).value;
    };
    return KernelFamily(ck.base.label(), ck.base.m(), ck.base.n(), ck.base.constants(), eval,
                        ck.base.translation_invariant());
}

}  // namespace msq
