#ifndef PAINLEVE_TRANSFORMS_HPP
#define PAINLEVE_TRANSFORMS_HPP

#include <cmath>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "airy.hpp"
#include "core.hpp"
#include "integrator.hpp"
#include "laurent.hpp"

namespace painleve
{

// alpha plus either initial data or a named recipe.
struct SolutionSpec
{
    cplx alpha{0.5};
    std::optional<OdeState> initial;
    std::string recipe; // w1 | w2 | w3 | riccati+ | riccati- | rational
};

struct BacklundStep
{
    enum class kind { up, down, reflect, rotate, special_forward, special_inverse };
    kind type = kind::up;
    cplx source_alpha{}, target_alpha{};
    cplx mu{1.0};
};

inline std::string to_string(BacklundStep::kind k)
{
    switch (k) {
    case BacklundStep::kind::up: return "up";
    case BacklundStep::kind::down: return "down";
    case BacklundStep::kind::reflect: return "reflect";
    case BacklundStep::kind::rotate: return "rotate";
    case BacklundStep::kind::special_forward: return "special_forward";
    case BacklundStep::kind::special_inverse: return "special_inverse";
    }
    return "?";
}

enum class engine { p2, riccati, rational };

// A solution in the form the field layer can continue.
struct ResolvedSolution
{
    cplx alpha{};
    engine kind = engine::p2;
    int sign = 1;          // Riccati branch
    OdeState seed;         // data at seed.z
    int distinguished = 0; // k of w_k when the solution is one of the three distinguished ones
    std::vector<BacklundStep> chain;
    std::string label;
    // Riccati solution this one is an algebraic image of, if any.
    std::shared_ptr<const ResolvedSolution> base;
};

inline const cplx omega = std::polar(1.0, 2.0 * pi / 3.0);

// Multiplier mu_k with w_k(z) = mu_k w_1(mu_k z).
inline cplx distinguished_mu(int k)
{
    if (k == 2) {
        return omega;
    }
    if (k == 3) {
        return std::conj(omega);
    }
    return 1.0;
}

// Seed of the linear equation u'' = -(z/2) u with u(z) = Ai(-2^{-1/3} z).
inline std::pair<cplx, cplx> airy_linear_seed()
{
    const long double c = std::cbrt(2.0L);
    return {cplx(static_cast<double>(airy_ai0()), 0.0), cplx(static_cast<double>(-airy_aip0() / c), 0.0)};
}

// w1 and w1' at 0.
inline OdeState w1_seed()
{
    const auto [u0, up0] = airy_linear_seed();
    const cplx w = -up0 / u0;
    return OdeState{0.0, w, w * w};
}

// Large-|z| value of w_1 where its linear seed is recessive, from the asymptotic series of Ai'/Ai.
inline OdeState w1_asymptotic(cplx z)
{
    const long double c = std::cbrt(2.0L);
    const std::complex<long double> zeta = -widen(z) / c;
    const std::complex<long double> w = airy_log_derivative_asymptotic(zeta) / c;
    const std::complex<long double> wp = 0.5L * widen(z) + w * w;
    return OdeState{z, narrow(w), narrow(wp)};
}

inline OdeState distinguished_asymptotic(int k, cplx z)
{
    const cplx mu = distinguished_mu(k);
    const OdeState base = w1_asymptotic(mu * z);
    return OdeState{z, mu * base.w, mu * mu * base.wp};
}

// Branch of sqrt(-z/2) followed by w_1: imaginary part positive off the positive axis,
// and -sqrt(|z|/2) on the negative axis.
inline cplx psi(cplx z)
{
    cplx r = std::sqrt(-z / 2.0);
    if (r.imag() < 0) {
        r = -r;
    }
    if (r.imag() == 0 && r.real() > 0) {
        r = -r;
    }
    return r;
}

inline cplx p2_second_derivative(const OdeState& s, cplx alpha)
{
    return alpha + s.z * s.w + 2.0 * s.w * s.w * s.w;
}

inline std::pair<OdeState, cplx> bt_up(const OdeState& s, cplx alpha)
{
    const cplx c = alpha + 0.5;
    if (c == cplx(0.0)) {
        return {OdeState{s.z, -s.w, -s.wp}, alpha + 1.0};
    }
    const cplx V = s.wp + s.w * s.w + s.z / 2.0;
    if (std::abs(V) < 1e-13 * (1.0 + std::abs(s.wp) + std::norm(s.w) + std::abs(s.z))) {
        throw error(errc::v_zero, "V vanishes at the evaluation point");
    }
    const cplx Vp = p2_second_derivative(s, alpha) + 2.0 * s.w * s.wp + 0.5;
    return {OdeState{s.z, -s.w - c / V, -s.wp + c * Vp / (V * V)}, alpha + 1.0};
}

inline std::pair<OdeState, cplx> bt_down(const OdeState& s, cplx alpha)
{
    const cplx c = alpha - 0.5;
    if (c == cplx(0.0)) {
        return {OdeState{s.z, -s.w, -s.wp}, alpha - 1.0};
    }
    const cplx V = s.wp - s.w * s.w - s.z / 2.0;
    if (std::abs(V) < 1e-13 * (1.0 + std::abs(s.wp) + std::norm(s.w) + std::abs(s.z))) {
        throw error(errc::v_zero, "V vanishes at the evaluation point");
    }
    const cplx Vp = p2_second_derivative(s, alpha) - 2.0 * s.w * s.wp - 0.5;
    return {OdeState{s.z, -s.w + c / V, -s.wp - c * Vp / (V * V)}, alpha - 1.0};
}

inline std::pair<OdeState, cplx> bt_reflect(const OdeState& s, cplx alpha)
{
    return {OdeState{s.z, -s.w, -s.wp}, -alpha};
}

// Data of mu w(mu z) given data of w at z0: re-seeded at z0 / mu.
inline OdeState rotate_state(const OdeState& s, cplx mu)
{
    return OdeState{s.z / mu, mu * s.w, mu * mu * s.wp};
}

inline void check_cube_root(cplx mu)
{
    if (std::abs(mu * mu * mu - 1.0) > 1e-12) {
        throw error(errc::invalid_argument, "rotation multiplier must satisfy mu^3 = 1");
    }
}

inline SolutionSpec bt_rotate(const SolutionSpec& spec, cplx mu)
{
    check_cube_root(mu);
    if (!spec.initial) {
        throw error(errc::precondition, "bt_rotate needs initial data; resolve the recipe first");
    }
    SolutionSpec out = spec;
    out.initial = rotate_state(*spec.initial, mu);
    return out;
}

inline ResolvedSolution bt_rotate(const ResolvedSolution& sol, cplx mu)
{
    check_cube_root(mu);
    ResolvedSolution out = sol;
    out.seed = rotate_state(sol.seed, mu);
    out.base = nullptr;
    out.chain.push_back({BacklundStep::kind::rotate, sol.alpha, sol.alpha, mu});
    if (sol.distinguished != 0) {
        // mu w_k(mu z) is again distinguished: find which.
        const cplx m = distinguished_mu(sol.distinguished) * mu;
        out.distinguished = 0;
        for (int k = 1; k <= 3; ++k) {
            if (std::abs(distinguished_mu(k) - m) < 1e-9) {
                out.distinguished = k;
            }
        }
    }
    out.label = sol.label + "|rotate";
    return out;
}

inline const double cbrt2 = std::cbrt(2.0);

// w(z) = 2^{-1/3} y'(zeta)/y(zeta), zeta = -2^{-1/3} z, from II_0 data (zeta0, y0, y0').
inline SolutionSpec special_forward(const SolutionSpec& y_spec)
{
    if (!y_spec.initial) {
        throw error(errc::precondition, "special_forward needs initial data for y");
    }
    if (std::abs(y_spec.alpha) > 1e-14) {
        throw error(errc::precondition, "special_forward maps II_0 solutions");
    }
    const OdeState& y = *y_spec.initial;
    if (y.w == cplx(0.0) && y.wp == cplx(0.0)) {
        throw error(errc::precondition, "y is identically zero");
    }
    if (std::abs(y.w) < 1e-300) {
        throw error(errc::seed_at_zero_of_y, "seed point is a zero of y");
    }
    const double c = 1.0 / cbrt2;
    const cplx v = y.wp / y.w;
    SolutionSpec out;
    out.alpha = 0.5;
    out.initial = OdeState{-cbrt2 * y.z, c * v, -c * c * (y.z + 2.0 * y.w * y.w - v * v)};
    return out;
}

// y^2 at zeta = -2^{-1/3} z from a state of the II_{1/2} solution at z.
inline cplx special_inverse_value(const OdeState& s)
{
    return -(s.wp - s.z / 2.0 - s.w * s.w) / cbrt2;
}

struct SpecialInverse
{
    ResolvedSolution w;
    double max_defect = 0.0; // max of |w' - z/2 - w^2| / (1 + |w|^2) on the test segment

    cplx zeta(cplx z) const { return -z / cbrt2; }
    cplx y_squared(const OdeState& s) const { return special_inverse_value(s); }
};

inline ResolvedSolution resolve(const SolutionSpec& spec);

// Checks the Airy condition on a unit test segment and returns the y^2 evaluator.
inline SpecialInverse special_inverse(const SolutionSpec& w_spec, const IntegratorConfig& cfg = {})
{
    if (std::abs(w_spec.alpha - 0.5) > 1e-14) {
        throw error(errc::precondition, "special_inverse maps II_{1/2} solutions");
    }
    SpecialInverse out;
    out.w = resolve(w_spec);
    const OdeState s0 = out.w.seed;
    Trajectory t;
    const PathSpec path = PathSpec::line(s0.z, s0.z + 1.0);
    if (out.w.kind == engine::riccati) {
        t = integrate_riccati(out.w.sign, s0.z, s0.w, path, cfg);
    } else {
        t = integrate_p2(out.w.alpha, s0, path, cfg);
    }
    double defect = 0.0;
    for (const auto& s : t.states) {
        defect = std::max(defect, std::abs(s.wp - s.z / 2.0 - s.w * s.w) / (1.0 + std::norm(s.w)));
    }
    out.max_defect = defect;
    if (defect < 1e-8) {
        throw error(errc::identically_zero, "w solves w' = z/2 + w^2: the preimage is y = 0");
    }
    return out;
}

inline ResolvedSolution apply_step(const ResolvedSolution& sol, BacklundStep::kind k)
{
    ResolvedSolution out;
    out.kind = engine::p2;
    out.chain = sol.chain;
    out.base = sol.kind == engine::riccati ? std::make_shared<const ResolvedSolution>(sol) : sol.base;
    std::pair<OdeState, cplx> r;
    if (k == BacklundStep::kind::up) {
        r = bt_up(sol.seed, sol.alpha);
    } else if (k == BacklundStep::kind::down) {
        r = bt_down(sol.seed, sol.alpha);
    } else if (k == BacklundStep::kind::reflect) {
        r = bt_reflect(sol.seed, sol.alpha);
    } else {
        throw error(errc::invalid_argument, "apply_step handles up, down and reflect");
    }
    out.seed = r.first;
    out.alpha = r.second;
    out.chain.push_back({k, sol.alpha, out.alpha, 1.0});
    out.label = sol.label + "|" + to_string(k);
    return out;
}

// State of sol at z given the state of its Riccati base there.
inline OdeState map_from_base(const ResolvedSolution& sol, OdeState s)
{
    if (!sol.base) {
        throw error(errc::precondition, "solution has no Riccati base");
    }
    for (std::size_t i = sol.base->chain.size(); i < sol.chain.size(); ++i) {
        const BacklundStep& st = sol.chain[i];
        switch (st.type) {
        case BacklundStep::kind::up: s = bt_up(s, st.source_alpha).first; break;
        case BacklundStep::kind::down: s = bt_down(s, st.source_alpha).first; break;
        case BacklundStep::kind::reflect: s = bt_reflect(s, st.source_alpha).first; break;
        default: throw error(errc::precondition, "chain step cannot be applied pointwise");
        }
    }
    return s;
}

// Chain of up/down steps from a seed to target alpha; returns every intermediate.
inline std::vector<ResolvedSolution> airy_family(cplx alpha, const ResolvedSolution& seed)
{
    const cplx diff = alpha - seed.alpha;
    const double n = std::round(diff.real());
    if (std::abs(diff - n) > 1e-12) {
        throw error(errc::precondition, "target alpha differs from the seed by a non-integer");
    }
    std::vector<ResolvedSolution> out{seed};
    const auto k = n > 0 ? BacklundStep::kind::up : BacklundStep::kind::down;
    for (int i = 0; i < static_cast<int>(std::abs(n)); ++i) {
        out.push_back(apply_step(out.back(), k));
    }
    return out;
}

// Seed of the named recipe in its own alpha (before any chain).
inline ResolvedSolution resolve_recipe(const std::string& name, const std::optional<OdeState>& data)
{
    ResolvedSolution r;
    r.label = name;
    if (name == "w1" || name == "w2" || name == "w3") {
        const int k = name[1] - '0';
        r.kind = engine::riccati;
        r.sign = 1;
        r.alpha = 0.5;
        r.distinguished = k;
        r.seed = rotate_state(w1_seed(), distinguished_mu(k));
        return r;
    }
    if (name == "riccati+" || name == "riccati-") {
        r.kind = engine::riccati;
        r.sign = name.back() == '+' ? 1 : -1;
        r.alpha = 0.5 * r.sign;
        const cplx z0 = data ? data->z : cplx{};
        const cplx w0 = data ? data->w : cplx{};
        r.seed = OdeState{z0, w0, static_cast<double>(r.sign) * (z0 / 2.0 + w0 * w0)};
        // The generic seed may coincide with a distinguished one.
        for (int k = 1; k <= 3 && r.sign == 1; ++k) {
            const OdeState d = rotate_state(w1_seed(), distinguished_mu(k));
            if (std::abs(z0) == 0.0 && std::abs(w0 - d.w) < 1e-14) {
                r.distinguished = k;
            }
        }
        return r;
    }
    if (name == "rational") {
        r.kind = engine::rational;
        r.alpha = 1.0;
        r.seed = OdeState{1.0, -1.0, 1.0};
        return r;
    }
    throw error(errc::invalid_argument, "unknown recipe '" + name + "'");
}

inline ResolvedSolution resolve(const SolutionSpec& spec)
{
    if (spec.recipe.empty()) {
        if (!spec.initial) {
            throw error(errc::invalid_argument, "solution needs initial data or a recipe");
        }
        if (!is_finite(*spec.initial)) {
            throw error(errc::invalid_argument, "initial data must be finite");
        }
        ResolvedSolution r;
        r.kind = engine::p2;
        r.alpha = spec.alpha;
        r.seed = *spec.initial;
        r.label = "data";
        return r;
    }
    ResolvedSolution base = resolve_recipe(spec.recipe, spec.initial);
    if (base.kind == engine::rational) {
        const cplx a = spec.alpha;
        if (std::abs(a - 1.0) < 1e-14) {
            return base;
        }
        if (std::abs(a + 1.0) < 1e-14) {
            base.alpha = -1.0;
            base.seed = OdeState{1.0, 1.0, -1.0};
            return base;
        }
        throw error(errc::invalid_argument, "rational recipe is available for alpha = 1 and alpha = -1");
    }
    if (std::abs(spec.alpha - base.alpha) < 1e-14) {
        return base;
    }
    return airy_family(spec.alpha, base).back();
}

struct ResidueMapReport
{
    std::size_t checked_i = 0, checked_ii = 0, checked_iii = 0;
    std::vector<std::string> violations;
    bool ok() const { return violations.empty(); }
};

namespace detail
{

inline const PoleRecord* find_pole(const std::vector<PoleRecord>& poles, cplx z, double tol)
{
    const PoleRecord* best = nullptr;
    double bd = 1e300;
    for (const auto& p : poles) {
        const double d = std::abs(p.p - z) * std::sqrt(std::max(1.0, std::abs(z)));
        if (d < tol && d < bd) {
            bd = d;
            best = &p;
        }
    }
    return best;
}

} // namespace detail

// Pole correspondence of w -> w1 = bt_up(w):
//  (i) eta = -1 poles of w are eta = +1 poles of w1;
//  (ii) eta = +1 poles of w are zeros of V and regular points of w1;
//  (iii) zeros of V off the pole set of w are eta = -1 poles of w1.
inline ResidueMapReport residue_map_check(const std::vector<PoleRecord>& w_poles,
                                          const std::vector<PoleRecord>& w1_poles,
                                          const std::vector<cplx>& v_zeros, double tol = 0.1)
{
    ResidueMapReport rep;
    auto fmt = [](cplx z) { return "(" + std::to_string(z.real()) + "," + std::to_string(z.imag()) + ")"; };
    for (const auto& p : w_poles) {
        const PoleRecord* q = detail::find_pole(w1_poles, p.p, tol);
        if (p.eta == -1) {
            ++rep.checked_i;
            if (!q || q->eta != 1) {
                rep.violations.push_back("(i) pole " + fmt(p.p) + " has no residue +1 image");
            }
        } else {
            ++rep.checked_ii;
            bool is_zero = false;
            for (const cplx v : v_zeros) {
                is_zero = is_zero || std::abs(v - p.p) * std::sqrt(std::max(1.0, std::abs(v))) < tol;
            }
            if (!is_zero || q) {
                rep.violations.push_back("(ii) pole " + fmt(p.p) + " is not a regular zero of V");
            }
        }
    }
    for (const cplx v : v_zeros) {
        if (detail::find_pole(w_poles, v, tol)) {
            continue;
        }
        ++rep.checked_iii;
        const PoleRecord* q = detail::find_pole(w1_poles, v, tol);
        if (!q || q->eta != -1) {
            rep.violations.push_back("(iii) zero of V " + fmt(v) + " has no residue -1 image");
        }
    }
    // Every pole of the image must come from one of the two sources.
    for (const auto& q : w1_poles) {
        const PoleRecord* p = detail::find_pole(w_poles, q.p, tol);
        bool is_zero = false;
        for (const cplx v : v_zeros) {
            is_zero = is_zero || std::abs(v - q.p) * std::sqrt(std::max(1.0, std::abs(v))) < tol;
        }
        if (!(p && p->eta == -1) && !is_zero) {
            rep.violations.push_back("image pole " + fmt(q.p) + " has no source");
        }
    }
    return rep;
}

} // namespace painleve

#endif
