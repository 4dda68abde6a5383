#ifndef PAINLEVE_FIELD_HPP
#define PAINLEVE_FIELD_HPP

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "core.hpp"
#include "integrator.hpp"
#include "laurent.hpp"
#include "transforms.hpp"

namespace painleve
{

struct FieldConfig
{
    IntegratorConfig integ;
    FitConfig fit;
    JumpConfig jump;
    std::size_t max_vaults = 100000;
};

// A solution continued along a path, with the poles it was carried across.
struct TraceResult
{
    std::vector<double> s;
    std::vector<OdeState> states;
    std::vector<cplx> integral; // running integral of w, when requested
    std::vector<PoleRecord> poles;
    bool ends_at_pole = false;

    const OdeState& back() const { return states.back(); }
};

inline cplx fit_alpha(const ResolvedSolution& sol)
{
    if (sol.kind == engine::riccati) {
        return 0.5 * static_cast<double>(sol.sign);
    }
    return sol.alpha;
}

// Path from parameter s0 to the end.
inline PathSpec slice(const PathSpec& path, double s0)
{
    PathSpec out;
    for (const auto& seg : path.segments) {
        const double len = seg.length();
        if (s0 >= len) {
            s0 -= len;
            continue;
        }
        if (s0 <= 0) {
            out.segments.push_back(seg);
            continue;
        }
        if (seg.type == Segment::kind::line) {
            out.segments.push_back(Segment::line(narrow(seg.point(s0)), seg.b));
        } else {
            const double th = seg.theta0 + (seg.theta1 - seg.theta0) * (s0 / len);
            out.segments.push_back(Segment::arc(seg.center, seg.radius, th, seg.theta1));
        }
        s0 = 0;
    }
    return out;
}

namespace detail
{

// Samples the closed-form rational solution -alpha/z as if it were integrated.
inline Trajectory closed_form_leg(const ResolvedSolution& sol, const PathSpec& path, const IntegratorConfig& cfg,
                                  bool with_integral, cplx I0)
{
    Trajectory t;
    t.path = path;
    const cplx a = sol.alpha;
    const double len = path.length();
    const double B = cfg.blowup_threshold;
    double s = 0;
    cplx I = I0;
    cplx zprev = path.start();
    auto push = [&](double at) {
        const cplx z = path.point(at);
        const OdeState st{z, -a / z, a / (z * z)};
        if (with_integral) {
            I += -a * std::log(z / zprev);
            t.aux.push_back({I});
        }
        zprev = z;
        t.s.push_back(at);
        t.states.push_back(st);
        return st;
    };
    push(0);
    while (s < len) {
        const double w = std::abs(t.states.back().w);
        s = std::min(len, s + std::min(0.05, cfg.step_cap / std::max(1.0, w)));
        const OdeState st = push(s);
        if (!is_finite(st) || std::abs(st.w) > B) {
            BlowupEvent ev;
            ev.z_near = st.z;
            ev.last_state = st;
            ev.s = s;
            for (const auto& x : t.states) {
                if (std::abs(x.w) >= B / 100 && is_finite(x)) {
                    ev.tail.push_back(x);
                }
            }
            t.events.push_back(ev);
            t.halted = true;
            return t;
        }
    }
    return t;
}

} // namespace detail

// One leg of the solution's own engine; halts at the first blow-up.
inline Trajectory engine_leg(const ResolvedSolution& sol, const OdeState& start, const PathSpec& path,
                             const IntegratorConfig& cfg, bool with_integral = false, cplx I0 = {})
{
    switch (sol.kind) {
    case engine::rational: return detail::closed_form_leg(sol, path, cfg, with_integral, I0);
    case engine::riccati:
        if (with_integral) {
            return integrate_riccati_with_integral(sol.sign, start.w, I0, path, cfg);
        }
        return integrate_riccati(sol.sign, start.z, start.w, path, cfg);
    case engine::p2:
        if (with_integral) {
            return integrate_p2_with_integral(sol.alpha, start, I0, path, cfg);
        }
        return integrate_p2(sol.alpha, start, path, cfg);
    }
    throw error(errc::invalid_argument, "unknown engine");
}

// First parameter after s_from where the path leaves the disc |z - p| < d.
inline double exit_parameter(const PathSpec& path, double s_from, cplx p, double d)
{
    const double len = path.length();
    const double inc = d / 8.0;
    double lo = s_from, hi = s_from;
    while (true) {
        hi = std::min(len, hi + inc);
        if (std::abs(path.point(hi) - p) >= d) {
            break;
        }
        if (hi >= len) {
            return len;
        }
        lo = hi;
    }
    for (int i = 0; i < 60; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (std::abs(path.point(mid) - p) >= d) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    return hi;
}

// Continues the solution along the path, vaulting over poles with the Laurent series.
inline TraceResult trace(const ResolvedSolution& sol, const OdeState& start, const PathSpec& path,
                         const FieldConfig& cfg, bool with_integral = false, cplx I0 = {})
{
    TraceResult out;
    PathSpec rest = path;
    OdeState cur = start;
    double offset = 0;
    cplx I = I0;
    for (std::size_t vault = 0;; ++vault) {
        if (vault > cfg.max_vaults) {
            throw error(errc::max_steps_exceeded, "too many poles on one path");
        }
        Trajectory t = engine_leg(sol, cur, rest, cfg.integ, with_integral, I);
        for (std::size_t i = 0; i < t.states.size(); ++i) {
            out.s.push_back(offset + t.s[i]);
            out.states.push_back(t.states[i]);
            if (with_integral) {
                out.integral.push_back(t.aux[i][0]);
            }
        }
        if (!t.halted) {
            return out;
        }
        if (with_integral) {
            throw error(errc::pole_on_contour, "blow-up on an integration contour");
        }
        const BlowupEvent& ev = t.events.back();
        PoleRecord rec = fit_pole(ev.tail, fit_alpha(sol), cfg.fit);
        out.poles.push_back(rec);
        const double d = jump_distance(rec.p, cfg.jump);
        const double s_exit = exit_parameter(rest, ev.s, rec.p, d);
        const double len = rest.length();
        if (s_exit >= len) {
            const cplx zend = rest.end();
            const double dist = std::abs(zend - rec.p);
            if (dist < 1e-3 * d) {
                out.ends_at_pole = true;
                return out;
            }
            const OdeState st = jump_pole(rec, zend - rec.p, cfg.jump, dist);
            out.s.push_back(offset + len);
            out.states.push_back(st);
            return out;
        }
        const cplx zx = rest.point(s_exit);
        cur = jump_pole(rec, zx - rec.p, cfg.jump, std::abs(zx - rec.p));
        cur.z = zx;
        rest = slice(rest, s_exit);
        offset += s_exit;
    }
}

struct Route
{
    OdeState start;
    PathSpec path;
};

// A path to z along which the continuation stays well conditioned.
inline Route plan_route(const ResolvedSolution& sol, cplx z)
{
    if (sol.kind == engine::riccati && sol.distinguished != 0) {
        const cplx mu = distinguished_mu(sol.distinguished);
        const cplx x = mu * z;
        double ax = std::arg(x);
        if (ax < 0) {
            ax += 2 * pi;
        }
        if (std::abs(ax - pi) < pi / 3 && std::abs(x) > 1.0) {
            // Recessive sector: start from the asymptotic series and integrate inward.
            const double R = std::max(std::abs(x), 30.0) + 20.0;
            const cplx za = cplx(-R, 0.0) / mu;
            const cplx zr = cplx(-std::abs(x), 0.0) / mu;
            Route r;
            r.start = distinguished_asymptotic(sol.distinguished, za);
            r.path = PathSpec::line(za, zr);
            const double th0 = std::arg(zr);
            r.path.segments.push_back(Segment::arc(0.0, std::abs(zr), th0, th0 + (ax - pi)));
            return r;
        }
    }
    Route r;
    r.start = sol.seed;
    r.path = PathSpec::line(sol.seed.z, z);
    return r;
}

inline OdeState state_at(const ResolvedSolution& sol, cplx z, const FieldConfig& cfg = {})
{
    if (sol.kind == engine::rational) {
        if (z == cplx(0.0)) {
            throw error(errc::eval_at_pole, "rational solution has its pole at 0");
        }
        return OdeState{z, -sol.alpha / z, sol.alpha / (z * z)};
    }
    if (sol.base) {
        try {
            return map_from_base(sol, state_at(*sol.base, z, cfg));
        } catch (const error& e) {
            if (e.code() == errc::v_zero) {
                throw error(errc::eval_at_pole, "requested point is a pole");
            }
            throw;
        }
    }
    const Route r = plan_route(sol, z);
    const TraceResult t = trace(sol, r.start, r.path, cfg);
    if (t.ends_at_pole) {
        throw error(errc::eval_at_pole, "requested point is a pole");
    }
    OdeState s = t.back();
    s.z = z;
    return s;
}

// Chase a pole suggested by a large |w|: integrate toward z + w/w' until blow-up.
inline std::optional<PoleRecord> excursion(const ResolvedSolution& sol, const OdeState& from,
                                           const FieldConfig& cfg, double reach = 1.5)
{
    OdeState cur = from;
    if (cur.wp == cplx(0.0)) {
        return std::nullopt;
    }
    cplx target = cur.z + cur.w / cur.wp;
    for (int it = 0; it < 8; ++it) {
        const cplx dz = target - cur.z;
        if (std::abs(dz) * std::sqrt(std::max(1.0, std::abs(cur.z))) > reach) {
            return std::nullopt;
        }
        const PathSpec path = PathSpec::line(cur.z, cur.z + 1.25 * dz);
        Trajectory t;
        try {
            t = engine_leg(sol, cur, path, cfg.integ);
        } catch (const error&) {
            return std::nullopt;
        }
        if (t.halted) {
            try {
                return fit_pole(t.events.back().tail, fit_alpha(sol), cfg.fit);
            } catch (const error&) {
                return std::nullopt;
            }
        }
        const auto best = std::max_element(t.states.begin(), t.states.end(), [](const OdeState& a, const OdeState& b) {
            return std::abs(a.w) < std::abs(b.w);
        });
        if (best->wp == cplx(0.0)) {
            return std::nullopt;
        }
        cur = *best;
        target = cur.z + cur.w / cur.wp;
    }
    return std::nullopt;
}

} // namespace painleve

#endif
