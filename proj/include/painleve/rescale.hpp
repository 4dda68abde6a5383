#ifndef PAINLEVE_RESCALE_HPP
#define PAINLEVE_RESCALE_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "core.hpp"
#include "field.hpp"
#include "first_integral.hpp"
#include "transforms.hpp"

namespace painleve
{

// w_h(Z) = h^{-1/2} w(h + h^{-1/2} Z) sampled on a square lattice inside |Z| <= R.
struct RescaleWindow
{
    cplx h{};
    double radius = 5.0;
    std::vector<cplx> grid;
    std::vector<cplx> w, wp; // rescaled values and derivatives
    std::vector<bool> valid; // false where the grid point sits on a pole
    std::vector<cplx> poles; // rescaled pole positions met while sampling
    cplx c_estimate{};
    double c_spread = 0.0;
};

inline cplx rescale_point(cplx h, cplx Z) { return h + Z / std::sqrt(h); }

// Grid of spacing 1/density on |Z| <= R, ordered row by row.
inline std::vector<cplx> window_grid(double R, double density)
{
    std::vector<cplx> g;
    const int n = static_cast<int>(std::floor(R * density + 1e-9));
    for (int j = -n; j <= n; ++j) {
        for (int i = -n; i <= n; ++i) {
            const cplx Z(i / density, j / density);
            if (std::abs(Z) <= R + 1e-12) {
                g.push_back(Z);
            }
        }
    }
    return g;
}

inline RescaleWindow rescale_window(const ResolvedSolution& sol, cplx h, double R = 5.0, double density = 4.0,
                                    const FieldConfig& cfg = {})
{
    if (std::abs(h) < 1.0) {
        throw error(errc::precondition, "window base point needs |h| >= 1");
    }
    if (!(R > 0 && density > 0)) {
        throw error(errc::invalid_argument, "window radius and density must be positive");
    }
    RescaleWindow win;
    win.h = h;
    win.radius = R;
    win.grid = window_grid(R, density);
    const cplx sh = std::sqrt(h);
    auto record_pole = [&](cplx p) {
        const cplx Z = (p - h) * sh;
        for (const cplx q : win.poles) {
            if (std::abs(q - Z) < 0.05) {
                return;
            }
        }
        win.poles.push_back(Z);
    };

    if (sol.kind == engine::rational || sol.base) {
        // Closed form or pointwise image of a Riccati base: evaluate each point directly.
        for (const cplx Z : win.grid) {
            const cplx z = rescale_point(h, Z);
            try {
                const OdeState s = state_at(sol, z, cfg);
                win.w.push_back(s.w / sh);
                win.wp.push_back(s.wp / h);
                win.valid.push_back(is_finite(s));
            } catch (const error& e) {
                if (e.code() != errc::eval_at_pole) {
                    throw;
                }
                win.w.push_back(0.0);
                win.wp.push_back(0.0);
                win.valid.push_back(false);
                record_pole(z);
            }
        }
    } else {
        // Hub near h, then straight spokes to each grid point.
        cplx hub = h;
        OdeState hs;
        for (int tries = 0;; ++tries) {
            try {
                hs = state_at(sol, hub, cfg);
                break;
            } catch (const error& e) {
                if (e.code() != errc::eval_at_pole || tries > 4) {
                    throw;
                }
                hub += cplx(0.0, 0.137) / sh;
            }
        }
        for (const cplx Z : win.grid) {
            const cplx z = rescale_point(h, Z);
            if (z == hub) {
                win.w.push_back(hs.w / sh);
                win.wp.push_back(hs.wp / h);
                win.valid.push_back(true);
                continue;
            }
            const TraceResult tr = trace(sol, hs, PathSpec::line(hub, z), cfg);
            for (const auto& p : tr.poles) {
                record_pole(p.p);
            }
            if (tr.ends_at_pole) {
                win.w.push_back(0.0);
                win.wp.push_back(0.0);
                win.valid.push_back(false);
                continue;
            }
            win.w.push_back(tr.back().w / sh);
            win.wp.push_back(tr.back().wp / h);
            win.valid.push_back(true);
        }
    }
    // Poles of the window also show up as very large samples; locate them from the Laurent tip.
    for (std::size_t i = 0; i < win.grid.size(); ++i) {
        if (win.valid[i] && std::abs(win.w[i]) > 4.0 && win.wp[i] != cplx(0.0)) {
            const cplx Zp = win.grid[i] + win.w[i] / win.wp[i];
            bool known = false;
            for (const cplx q : win.poles) {
                known = known || std::abs(q - Zp) < 0.1;
            }
            if (!known) {
                win.poles.push_back(Zp);
            }
        }
    }
    std::sort(win.poles.begin(), win.poles.end(), [](cplx a, cplx b) {
        return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
    });
    return win;
}

// Window built from a closed-form rescaled function and its derivative.
inline RescaleWindow synthetic_window(const std::function<cplx(cplx)>& f, const std::function<cplx(cplx)>& fp,
                                      const std::vector<cplx>& poles, double R = 5.0, double density = 4.0)
{
    RescaleWindow win;
    win.h = 1.0;
    win.radius = R;
    win.grid = window_grid(R, density);
    win.poles = poles;
    for (const cplx Z : win.grid) {
        const cplx v = f(Z), d = fp(Z);
        const bool ok = std::isfinite(v.real()) && std::isfinite(v.imag()) && std::isfinite(d.real()) &&
                        std::isfinite(d.imag());
        win.w.push_back(ok ? v : 0.0);
        win.wp.push_back(ok ? d : 0.0);
        win.valid.push_back(ok);
    }
    return win;
}

inline double distance_to(cplx Z, const std::vector<cplx>& pts)
{
    double d = 1e300;
    for (const cplx p : pts) {
        d = std::min(d, std::abs(Z - p));
    }
    return d;
}

// c = W'^2 - W^4 - W^2 on samples at distance >= exclusion from the window's poles.
inline std::pair<cplx, double> limit_invariant(RescaleWindow& win, double exclusion = 0.2, std::size_t min_samples = 5)
{
    std::vector<double> re, im, mag;
    for (std::size_t i = 0; i < win.grid.size(); ++i) {
        if (!win.valid[i] || distance_to(win.grid[i], win.poles) < exclusion) {
            continue;
        }
        const cplx w2 = win.w[i] * win.w[i];
        const cplx c = win.wp[i] * win.wp[i] - w2 * w2 - w2;
        re.push_back(c.real());
        im.push_back(c.imag());
        mag.push_back(std::abs(c));
    }
    if (re.size() < min_samples) {
        throw error(errc::too_few_samples, "too few admissible window samples");
    }
    auto median = [](std::vector<double> v) {
        std::sort(v.begin(), v.end());
        const std::size_t n = v.size();
        return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
    };
    win.c_estimate = cplx(median(re), median(im));
    win.c_spread = *std::max_element(mag.begin(), mag.end()) - *std::min_element(mag.begin(), mag.end());
    return {win.c_estimate, win.c_spread};
}

enum class TrigFamily { first, second };

// +-tan(Z/sqrt2 + tau)/sqrt2 (c = 1/4) and +-i/sin(iZ + tau) (c = 0).
inline cplx trig_limit(TrigFamily f, int sign, cplx tau, cplx Z)
{
    if (f == TrigFamily::first) {
        return static_cast<double>(sign) * std::tan(Z / sqrt2 + tau) / sqrt2;
    }
    return static_cast<double>(sign) * cplx(0.0, 1.0) / std::sin(cplx(0.0, 1.0) * Z + tau);
}

struct TrigFit
{
    cplx tau{};
    int sign = 1;
    double sup_deviation = 0.0;
    std::size_t nodes = 0;
};

inline TrigFit match_trig_limit(const RescaleWindow& win, TrigFamily family, double exclusion = 0.5)
{
    std::vector<std::size_t> nodes;
    for (std::size_t i = 0; i < win.grid.size(); ++i) {
        if (win.valid[i] && distance_to(win.grid[i], win.poles) >= exclusion) {
            nodes.push_back(i);
        }
    }
    if (nodes.size() < 5) {
        throw error(errc::fit_diverged, "too few nodes away from poles to fit a limit");
    }
    auto sup = [&](int sign, cplx tau) {
        double m = 0.0;
        for (const std::size_t i : nodes) {
            const double d = std::abs(trig_limit(family, sign, tau, win.grid[i]) - win.w[i]);
            if (!std::isfinite(d)) {
                return 1e300;
            }
            m = std::max(m, d);
        }
        return m;
    };
    // tau is defined modulo pi in both families once the sign is free.
    const int nre = 48, nim = 25;
    const double im_span = 3.0;
    TrigFit best;
    best.sup_deviation = 1e300;
    for (const int sign : {1, -1}) {
        for (int i = 0; i < nre; ++i) {
            for (int j = 0; j < nim; ++j) {
                const cplx tau(pi * i / nre, -im_span + 2.0 * im_span * j / (nim - 1));
                const double v = sup(sign, tau);
                if (v < best.sup_deviation) {
                    best = TrigFit{tau, sign, v, nodes.size()};
                }
            }
        }
    }
    if (!(best.sup_deviation < 1e299)) {
        throw error(errc::fit_diverged, "no finite trigonometric match");
    }
    // Golden-section refinement, alternating real and imaginary parts of tau.
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    double hre = pi / nre, him = 2.0 * im_span / (nim - 1);
    for (int round = 0; round < 8; ++round) {
        for (int axis = 0; axis < 2; ++axis) {
            const cplx dir = axis == 0 ? cplx(1.0, 0.0) : cplx(0.0, 1.0);
            const double span = axis == 0 ? hre : him;
            double a = -span, b = span;
            auto f = [&](double t) { return sup(best.sign, best.tau + t * dir); };
            double x1 = b - g * (b - a), x2 = a + g * (b - a);
            double f1 = f(x1), f2 = f(x2);
            for (int it = 0; it < 60 && b - a > 1e-15; ++it) {
                if (f1 < f2) {
                    b = x2;
                    x2 = x1;
                    f2 = f1;
                    x1 = b - g * (b - a);
                    f1 = f(x1);
                } else {
                    a = x1;
                    x1 = x2;
                    f1 = f2;
                    x2 = a + g * (b - a);
                    f2 = f(x2);
                }
            }
            const double t = 0.5 * (a + b);
            const double v = f(t);
            if (v < best.sup_deviation) {
                best.tau += t * dir;
                best.sup_deviation = v;
            }
        }
        hre *= 0.5;
        him *= 0.5;
    }
    return best;
}

} // namespace painleve

#endif
