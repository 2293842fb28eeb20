#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "msq/grid.hpp"

namespace msq {

/// Constants of the size/smoothness conditions a kernel family claims.
struct KernelConstants {
    double A = 1.0;
    double gamma = 1.0;    ///< Hoelder exponent in the smoothness conditions, in (0, 1]
    double B = 2.0;        ///< admissible perturbation is |z - x| <= max_j |x - y_j| / B
    double epsilon = 1.0;  ///< exponent of the t-terms in the H assumptions
};

/// A family K_v(x, y_1, ..., y_m) of kernels on (R^n)^(m+1) indexed by v > 0.
///
/// `ys` is always the flat concatenation y_1 ... y_m (m n numbers). Product
/// families, K_v(x, y) = prod_j k_v(x - y_j), additionally expose the factor
/// k_v so operators can factorize the spatial integral.
class KernelFamily {
public:
    using Eval = std::function<double(double v, Coords x, Coords ys)>;
    using Factor = std::function<double(double v, Coords diff)>;

    KernelFamily(std::string label, int m, int n, KernelConstants constants, Eval eval,
                 bool translation_invariant = false);

    /// K_v(x, y) = prod_j factor(v, x - y_j). `decay_radius` > 0 declares that
    /// factor(v, d) is negligible (below 1e-20 of its peak) once |d| > decay_radius * v.
    static KernelFamily product(std::string label, int m, int n, KernelConstants constants,
                                Factor factor, double decay_radius);

    double operator()(double v, Coords x, Coords ys) const { return eval_(v, x, ys); }

    const std::string& label() const noexcept { return label_; }
    int m() const noexcept { return m_; }
    int n() const noexcept { return n_; }
    const KernelConstants& constants() const noexcept { return constants_; }
    bool is_product() const noexcept { return static_cast<bool>(factor_); }
    double factor(double v, Coords diff) const { return factor_(v, diff); }
    double decay_radius() const noexcept { return decay_radius_; }
    bool translation_invariant() const noexcept { return translation_invariant_; }

    KernelFamily relabeled(std::string label) const;

private:
    std::string label_;
    int m_, n_;
    KernelConstants constants_;
    Eval eval_;
    Factor factor_;
    double decay_radius_ = 0.0;
    bool translation_invariant_ = false;
};

/// psi(u) = (sum_k u_k) exp(-|u|^2), the odd profile used by the built-in families.
double smooth_profile(Coords u);

/// K_v = prod_j v^-n psi((x - y_j)/v). Size exponent -mn, Hoelder exponent 1.
KernelFamily smooth_kernel(int m, int n);

/// v^(-1/2) times the smooth family: the v-integral picks up an extra
/// |x - y|^(-1/2), so the size condition fails (exponent -mn - 1/2).
KernelFamily broken_kernel(int m, int n);

KernelFamily zero_kernel(int m, int n);

/// a_t(x, y) = t^(-n/s) h(|x - y| / t^(1/s)) with a positive, bounded, decreasing profile h.
class ApproxIdentity {
public:
    using Profile = std::function<double(double)>;

    ApproxIdentity(int n, double s, double eta, Profile profile, std::string label);

    double operator()(double t, Coords x, Coords y) const;
    /// h_t(x, y); equal to a_t for identities built from their own profile.
    double dominating(double t, Coords x, Coords y) const { return (*this)(t, x, y); }
    double profile(double r) const { return profile_(r); }
    double scale(double t) const;  ///< t^(1/s)

    int n() const noexcept { return n_; }
    double s() const noexcept { return s_; }
    double eta() const noexcept { return eta_; }
    const std::string& label() const noexcept { return label_; }

    /// \int_{|u| > radius} h(|u|) du, i.e. the mass of a_t outside the ball of radius radius t^(1/s).
    double tail_mass(double radius) const;
    double mass() const { return tail_mass(0.0); }

private:
    int n_;
    double s_, eta_;
    Profile profile_;
    std::string label_;
};

/// Heat semigroup: h(r) = (4 pi)^(-n/2) exp(-r^2 / 4), s = 2.
ApproxIdentity heat_identity(int n);

/// max over `radii` of h(r) (1 + r)^(n + eta_prime): the constant C in
/// |a_t(x,y)| <= C t^(-n/s) (1 + t^(-1/s)|x - y|)^(-n - eta_prime).
double measure_decay_constant(const ApproxIdentity& id, double eta_prime, Coords radii);

/// r^(n + eta) h(r) at each radius; tends to 0 as r grows for admissible profiles.
std::vector<double> decay_limit_values(const ApproxIdentity& id, double eta, Coords radii);

/// phi(u) = max(0, 1 - |u|).
double standard_bump(double u);

/// Kernel of T with A_t inserted in one slot.
///
/// slot 0:  K^(0)_{t,v}(x, y) = \int K_v(z, y) a_t(x, z) dz
/// slot i:  K^(i)_{t,v}(x, y) = \int K_v(x, y_1, .., z, .., y_m) a_t(z, y_i) dz
struct ComposedKernel {
    KernelFamily base;
    ApproxIdentity identity;
    int slot = 0;
    std::function<double(double)> bump = standard_bump;
    std::optional<Box> evaluation_box;
};

/// The smooth family composed with the heat identity in slot 0, epsilon = 1.
ComposedKernel nonsmooth_kernel(int m, int n);

struct ComposedQuadrature {
    double r_cut = 12.0;      ///< integrate a_t over the ball of radius r_cut t^(1/s)
    int initial_nodes = 32;   ///< per axis
    int max_refinements = 7;  ///< node doublings before giving up
    double rel_tol = 1e-3;
};

struct ComposedValue {
    double value = 0.0;
    double tail_bound = 0.0;  ///< (mass of a_t outside the ball) * max |K_v| seen
    std::size_t nodes = 0;
};

ComposedValue eval_composed_kernel(const ComposedKernel& ck, double t, double v, Coords x, Coords ys,
                                   const ComposedQuadrature& quad = {});

/// K^(slot)_{t, .} at a fixed t as an ordinary kernel family (for the operators).
KernelFamily composed_as_family(const ComposedKernel& ck, double t, const ComposedQuadrature& quad = {});

}  // namespace msq
