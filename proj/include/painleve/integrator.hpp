#ifndef PAINLEVE_INTEGRATOR_HPP
#define PAINLEVE_INTEGRATOR_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <vector>

#include "core.hpp"

namespace painleve
{

using real_l = long double;
using cplx_l = std::complex<long double>;

inline cplx_l widen(cplx v) { return {v.real(), v.imag()}; }
inline cplx narrow(cplx_l v) { return {static_cast<double>(v.real()), static_cast<double>(v.imag())}; }

// Straight segment or circular arc, parametrised by arc length.
struct Segment
{
    enum class kind { line, arc };

    kind type = kind::line;
    cplx a{}, b{};
    cplx center{};
    double radius = 0.0;
    double theta0 = 0.0, theta1 = 0.0;

    static Segment line(cplx from, cplx to)
    {
        Segment s;
        s.type = kind::line;
        s.a = from;
        s.b = to;
        return s;
    }

    // Counterclockwise when theta1 > theta0.
    static Segment arc(cplx c, double r, double t0, double t1)
    {
        Segment s;
        s.type = kind::arc;
        s.center = c;
        s.radius = r;
        s.theta0 = t0;
        s.theta1 = t1;
        return s;
    }

    double length() const
    {
        if (type == kind::line) {
            return std::abs(b - a);
        }
        return radius * std::abs(theta1 - theta0);
    }

    cplx_l point(real_l s) const
    {
        const real_l len = length();
        if (type == kind::line) {
            if (len == 0) {
                return widen(a);
            }
            const real_l u = s / len;
            return widen(a) + (widen(b) - widen(a)) * u;
        }
        const real_l th = theta0 + (theta1 - theta0) * (len == 0 ? 0 : s / len);
        return widen(center) + real_l(radius) * cplx_l(std::cos(th), std::sin(th));
    }

    // dz/ds, unit modulus.
    cplx_l tangent(real_l s) const
    {
        const real_l len = length();
        if (type == kind::line) {
            if (len == 0) {
                return 1;
            }
            return (widen(b) - widen(a)) / len;
        }
        const real_l th = theta0 + (theta1 - theta0) * (len == 0 ? 0 : s / len);
        const real_l dir = theta1 >= theta0 ? 1 : -1;
        return dir * cplx_l(-std::sin(th), std::cos(th));
    }

    cplx start() const { return narrow(point(0)); }
    cplx end() const { return narrow(point(length())); }
};

struct PathSpec
{
    std::vector<Segment> segments;

    static PathSpec line(cplx from, cplx to)
    {
        PathSpec p;
        p.segments.push_back(Segment::line(from, to));
        return p;
    }

    PathSpec& then_line(cplx to)
    {
        segments.push_back(Segment::line(end(), to));
        return *this;
    }

    PathSpec& then_arc(cplx c, double t1)
    {
        const cplx e = end();
        segments.push_back(Segment::arc(c, std::abs(e - c), std::arg(e - c), t1));
        return *this;
    }

    cplx start() const { return segments.empty() ? cplx{} : segments.front().start(); }
    cplx end() const { return segments.empty() ? cplx{} : segments.back().end(); }

    double length() const
    {
        double l = 0.0;
        for (const auto& s : segments) {
            l += s.length();
        }
        return l;
    }

    cplx point(double s) const
    {
        for (const auto& seg : segments) {
            if (s <= seg.length()) {
                return narrow(seg.point(s));
            }
            s -= seg.length();
        }
        return end();
    }
};

struct IntegratorConfig
{
    double rel_tol = 1e-12;
    double abs_tol = 1e-14;
    double blowup_threshold = 1e3;
    double min_step = 1e-14;
    std::size_t max_steps = 20'000'000;
    // h <= step_cap / max(1, |w|)
    double step_cap = 0.2;
    bool dense = false;

    void validate() const
    {
        if (!(rel_tol > 0 && abs_tol > 0 && min_step > 0 && blowup_threshold > 1e2 && step_cap > 0)) {
            throw error(errc::invalid_argument, "integrator config out of range");
        }
    }
};

struct BlowupEvent
{
    cplx z_near{};
    OdeState last_state;
    double s = 0.0;
    // States of the final approach with |w| >= B/100, oldest first.
    std::vector<OdeState> tail;
};

// One step of Hermite-type dense output for every component.
struct DenseStep
{
    double s0 = 0.0, h = 0.0;
    std::size_t segment = 0;
    double seg_s0 = 0.0;
    std::vector<std::array<cplx, 5>> r;
};

struct Trajectory
{
    std::vector<double> s;
    std::vector<OdeState> states;
    // Extra integrated components (e.g. a running integral), one row per state.
    std::vector<std::vector<cplx>> aux;
    std::vector<BlowupEvent> events;
    std::vector<DenseStep> dense;
    PathSpec path;
    bool halted = false;

    const OdeState& back() const { return states.back(); }

    // Component k at path parameter s0; requires dense recording.
    cplx dense_component(double at, std::size_t k) const
    {
        if (dense.empty()) {
            throw error(errc::precondition, "trajectory recorded without dense output");
        }
        auto it = std::upper_bound(dense.begin(), dense.end(), at,
                                   [](double v, const DenseStep& d) { return v < d.s0; });
        if (it != dense.begin()) {
            --it;
        }
        const double th = it->h == 0 ? 0.0 : (at - it->s0) / it->h;
        const auto& c = it->r[k];
        const double t1 = 1.0 - th;
        return c[0] + th * (c[1] + t1 * (c[2] + th * (c[3] + t1 * c[4])));
    }

    OdeState dense_state(double at) const
    {
        return OdeState{path.point(at), dense_component(at, 0), dense_component(at, 1)};
    }
};

namespace detail
{

template <std::size_t N>
using vec = std::array<cplx_l, N>;

// Dormand-Prince 5(4) tableau and Hairer's dense output weights.
struct dp5
{
    static constexpr real_l c2 = 0.2L, c3 = 0.3L, c4 = 0.8L, c5 = 8.0L / 9.0L;
    static constexpr real_l a21 = 0.2L;
    static constexpr real_l a31 = 3.0L / 40.0L, a32 = 9.0L / 40.0L;
    static constexpr real_l a41 = 44.0L / 45.0L, a42 = -56.0L / 15.0L, a43 = 32.0L / 9.0L;
    static constexpr real_l a51 = 19372.0L / 6561.0L, a52 = -25360.0L / 2187.0L, a53 = 64448.0L / 6561.0L,
                            a54 = -212.0L / 729.0L;
    static constexpr real_l a61 = 9017.0L / 3168.0L, a62 = -355.0L / 33.0L, a63 = 46732.0L / 5247.0L,
                            a64 = 49.0L / 176.0L, a65 = -5103.0L / 18656.0L;
    static constexpr real_l a71 = 35.0L / 384.0L, a73 = 500.0L / 1113.0L, a74 = 125.0L / 192.0L,
                            a75 = -2187.0L / 6784.0L, a76 = 11.0L / 84.0L;
    static constexpr real_l e1 = 71.0L / 57600.0L, e3 = -71.0L / 16695.0L, e4 = 71.0L / 1920.0L,
                            e5 = -17253.0L / 339200.0L, e6 = 22.0L / 525.0L, e7 = -1.0L / 40.0L;
    static constexpr real_l d1 = -12715105075.0L / 11282082432.0L, d3 = 87487479700.0L / 32700410799.0L,
                            d4 = -10690763975.0L / 1880347072.0L, d5 = 701980252875.0L / 199316789632.0L,
                            d6 = -1453857185.0L / 822651844.0L, d7 = 69997945.0L / 29380423.0L;
};

// Integrates y' = f(z, y) along the path. project(z, y) gives the (w, w') pair
// recorded as the OdeState; component 0 is monitored for blow-up when monitor is set.
template <std::size_t N, std::size_t Aux0, class Rhs, class Project>
Trajectory run(const PathSpec& path, vec<N> y, const IntegratorConfig& cfg, Rhs&& f, Project&& project,
               bool monitor)
{
    cfg.validate();
    using T = dp5;
    Trajectory out;
    out.path = path;

    const real_l rtol = cfg.rel_tol, atol = cfg.abs_tol;
    const real_l B = cfg.blowup_threshold;

    auto record = [&](real_l s, cplx_l z, const vec<N>& v) {
        out.s.push_back(static_cast<double>(s));
        auto [w, wp] = project(z, v);
        out.states.push_back(OdeState{narrow(z), narrow(w), narrow(wp)});
        if constexpr (N > Aux0) {
            std::vector<cplx> extra;
            for (std::size_t i = Aux0; i < N; ++i) {
                extra.push_back(narrow(v[i]));
            }
            out.aux.push_back(std::move(extra));
        }
    };

    auto check = [](const vec<N>& v) {
        for (const auto& c : v) {
            if (!std::isfinite(c.real()) || !std::isfinite(c.imag())) {
                return false;
            }
        }
        return true;
    };

    if (!check(y)) {
        throw error(errc::invalid_argument, "non-finite initial data");
    }

    real_l s_global = 0;
    std::size_t steps = 0;
    real_l h = 1e-3L;
    real_l err_old = 1e-4L;
    record(0, path.segments.empty() ? cplx_l{} : path.segments.front().point(0), y);

    for (std::size_t si = 0; si < path.segments.size(); ++si) {
        const Segment& seg = path.segments[si];
        const real_l len = seg.length();
        real_l s = 0;
        auto deriv = [&](real_l sl, const vec<N>& v) {
            const cplx_l z = seg.point(sl);
            const cplx_l dz = seg.tangent(sl);
            vec<N> d = f(z, v);
            for (auto& c : d) {
                c *= dz;
            }
            return d;
        };
        vec<N> k1 = deriv(0, y);
        while (s < len) {
            if (++steps > cfg.max_steps) {
                throw error(errc::max_steps_exceeded, "step budget exhausted");
            }
            const real_l cap = cfg.step_cap / std::max<real_l>(1, std::abs(y[0]));
            h = std::min({h, cap, len - s});
            const bool last = (h >= len - s);
            if (last) {
                h = len - s;
            }

            auto comb = [&](std::initializer_list<std::pair<real_l, const vec<N>*>> terms) {
                vec<N> r = y;
                for (const auto& [c, k] : terms) {
                    for (std::size_t i = 0; i < N; ++i) {
                        r[i] += (h * c) * (*k)[i];
                    }
                }
                return r;
            };
            const vec<N> k2 = deriv(s + T::c2 * h, comb({{T::a21, &k1}}));
            const vec<N> k3 = deriv(s + T::c3 * h, comb({{T::a31, &k1}, {T::a32, &k2}}));
            const vec<N> k4 = deriv(s + T::c4 * h, comb({{T::a41, &k1}, {T::a42, &k2}, {T::a43, &k3}}));
            const vec<N> k5 =
                deriv(s + T::c5 * h, comb({{T::a51, &k1}, {T::a52, &k2}, {T::a53, &k3}, {T::a54, &k4}}));
            const vec<N> k6 = deriv(
                s + h, comb({{T::a61, &k1}, {T::a62, &k2}, {T::a63, &k3}, {T::a64, &k4}, {T::a65, &k5}}));
            const vec<N> y1 =
                comb({{T::a71, &k1}, {T::a73, &k3}, {T::a74, &k4}, {T::a75, &k5}, {T::a76, &k6}});
            const real_l s1 = last ? len : s + h;
            const vec<N> k7 = deriv(s1, y1);

            real_l err = 0;
            bool finite = check(y1);
            if (finite) {
                for (std::size_t i = 0; i < N; ++i) {
                    const cplx_l e = h * (T::e1 * k1[i] + T::e3 * k3[i] + T::e4 * k4[i] + T::e5 * k5[i] +
                                          T::e6 * k6[i] + T::e7 * k7[i]);
                    const real_l sc = atol + rtol * std::max(std::abs(y[i]), std::abs(y1[i]));
                    err += std::norm(e) / (sc * sc);
                }
                err = std::sqrt(err / N);
                finite = std::isfinite(err);
            }

            if (!finite || err > 1) {
                const real_l fac = finite ? std::max<real_l>(0.2L, 0.9L * std::pow(err, -0.2L)) : 0.2L;
                h *= fac;
                if (h < cfg.min_step) {
                    throw error(errc::step_underflow, "step size fell below min_step");
                }
                continue;
            }

            if (cfg.dense) {
                DenseStep d;
                d.s0 = static_cast<double>(s_global + s);
                d.h = static_cast<double>(s1 - s);
                d.segment = si;
                d.seg_s0 = static_cast<double>(s);
                d.r.resize(N);
                for (std::size_t i = 0; i < N; ++i) {
                    const cplx_l r1 = y[i];
                    const cplx_l r2 = y1[i] - y[i];
                    const cplx_l r3 = h * k1[i] - r2;
                    const cplx_l r4 = r2 - h * k7[i] - r3;
                    const cplx_l r5 = h * (T::d1 * k1[i] + T::d3 * k3[i] + T::d4 * k4[i] + T::d5 * k5[i] +
                                           T::d6 * k6[i] + T::d7 * k7[i]);
                    d.r[i] = {narrow(r1), narrow(r2), narrow(r3), narrow(r4), narrow(r5)};
                }
                out.dense.push_back(std::move(d));
            }

            y = y1;
            k1 = k7;
            s = s1;
            record(s_global + s, seg.point(s), y);

            const real_l e = std::max(err, 1e-10L);
            real_l fac = 0.9L * std::pow(e, -0.14L) * std::pow(err_old, 0.08L);
            fac = std::clamp<real_l>(fac, 0.2L, 10.0L);
            err_old = std::max(err, 1e-4L);
            h *= fac;

            if (monitor && std::abs(y[0]) > B) {
                BlowupEvent ev;
                ev.z_near = out.states.back().z;
                ev.last_state = out.states.back();
                ev.s = out.s.back();
                const double floor = static_cast<double>(B) / 100.0;
                std::size_t first = out.states.size();
                while (first > 0 && std::abs(out.states[first - 1].w) >= floor) {
                    --first;
                }
                ev.tail.assign(out.states.begin() + static_cast<std::ptrdiff_t>(first), out.states.end());
                out.events.push_back(std::move(ev));
                out.halted = true;
                return out;
            }
        }
        s_global += len;
    }
    return out;
}

inline void check_start(const PathSpec& path, cplx z0)
{
    if (!path.segments.empty() && std::abs(path.start() - z0) > 1e-12 * (1 + std::abs(z0))) {
        throw error(errc::precondition, "path does not start at z0");
    }
}

} // namespace detail

// w'' = alpha + z w + 2 w^3
inline Trajectory integrate_p2(cplx alpha, const OdeState& start, const PathSpec& path,
                               const IntegratorConfig& cfg)
{
    detail::check_start(path, start.z);
    const cplx_l a = widen(alpha);
    auto f = [a](cplx_l z, const detail::vec<2>& y) {
        return detail::vec<2>{y[1], a + z * y[0] + 2.0L * y[0] * y[0] * y[0]};
    };
    auto proj = [](cplx_l, const detail::vec<2>& y) { return std::pair{y[0], y[1]}; };
    return detail::run<2, 2>(path, {widen(start.w), widen(start.wp)}, cfg, f, proj, true);
}

// Same equation with the running integral of w appended as aux[0].
inline Trajectory integrate_p2_with_integral(cplx alpha, const OdeState& start, cplx integral0,
                                             const PathSpec& path, const IntegratorConfig& cfg)
{
    const cplx_l a = widen(alpha);
    auto f = [a](cplx_l z, const detail::vec<3>& y) {
        return detail::vec<3>{y[1], a + z * y[0] + 2.0L * y[0] * y[0] * y[0], y[0]};
    };
    auto proj = [](cplx_l, const detail::vec<3>& y) { return std::pair{y[0], y[1]}; };
    return detail::run<3, 2>(path, {widen(start.w), widen(start.wp), widen(integral0)}, cfg, f, proj, true);
}

// w' = sign (z/2 + w^2)
inline Trajectory integrate_riccati(int sign, cplx z0, cplx w0, const PathSpec& path, const IntegratorConfig& cfg)
{
    if (sign != 1 && sign != -1) {
        throw error(errc::invalid_argument, "riccati sign must be +1 or -1");
    }
    detail::check_start(path, z0);
    const real_l sg = sign;
    auto f = [sg](cplx_l z, const detail::vec<1>& y) { return detail::vec<1>{sg * (0.5L * z + y[0] * y[0])}; };
    auto proj = [sg](cplx_l z, const detail::vec<1>& y) { return std::pair{y[0], sg * (0.5L * z + y[0] * y[0])}; };
    return detail::run<1, 1>(path, {widen(w0)}, cfg, f, proj, true);
}

// Riccati equation with the running integral of w as aux[0].
// Riccati solution together with the running integral of g(z, w); aux[0] holds the integral.
template <class G>
Trajectory integrate_riccati_with_aux(int sign, cplx w0, cplx integral0, const PathSpec& path,
                                      const IntegratorConfig& cfg, G g)
{
    const real_l sg = sign;
    auto f = [sg, &g](cplx_l z, const detail::vec<2>& y) {
        return detail::vec<2>{sg * (0.5L * z + y[0] * y[0]), g(z, y[0])};
    };
    auto proj = [sg](cplx_l z, const detail::vec<2>& y) { return std::pair{y[0], sg * (0.5L * z + y[0] * y[0])}; };
    return detail::run<2, 1>(path, {widen(w0), widen(integral0)}, cfg, f, proj, true);
}

inline Trajectory integrate_riccati_with_integral(int sign, cplx w0, cplx integral0, const PathSpec& path,
                                                  const IntegratorConfig& cfg)
{
    return integrate_riccati_with_aux(sign, w0, integral0, path, cfg, [](cplx_l, cplx_l w) { return w; });
}

// u'' = -(z/2) u; w = -u'/u solves the + Riccati equation.
inline Trajectory integrate_linear_seed(cplx u0, cplx up0, const PathSpec& path, const IntegratorConfig& cfg)
{
    auto f = [](cplx_l z, const detail::vec<2>& y) { return detail::vec<2>{y[1], -0.5L * z * y[0]}; };
    auto proj = [](cplx_l, const detail::vec<2>& y) { return std::pair{y[0], y[1]}; };
    IntegratorConfig c = cfg;
    c.step_cap = 1e300;
    return detail::run<2, 2>(path, {widen(u0), widen(up0)}, c, f, proj, false);
}

} // namespace painleve

#endif
