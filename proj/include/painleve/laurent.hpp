#ifndef PAINLEVE_LAURENT_HPP
#define PAINLEVE_LAURENT_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "core.hpp"
#include "series.hpp"

namespace painleve
{

struct PoleRecord
{
    cplx p{};
    int eta = 1;
    cplx h{};
    double fit_residual = 0.0;
    cplx alpha{};
    bool accepted = true;
};

// w = sum_{k=-1}^{N} a_k (z-p)^k about a pole.
struct LaurentExpansion
{
    PoleRecord pole;
    int order = 0;
    std::vector<cplx> a; // a[k + 1] holds a_k

    cplx coeff(int k) const
    {
        const int i = k + 1;
        return (i < 0 || i >= static_cast<int>(a.size())) ? cplx{} : a[static_cast<std::size_t>(i)];
    }

    Series as_series() const { return Series(-1, a); }

    cplx w(cplx z) const
    {
        const cplx e = z - pole.p;
        cplx acc = 0.0;
        for (int k = order; k >= -1; --k) {
            acc = acc * e + coeff(k);
        }
        return acc / e;
    }

    cplx wp(cplx z) const
    {
        const cplx e = z - pole.p;
        cplx acc = 0.0;
        for (int k = order; k >= 1; --k) {
            acc = acc * e + static_cast<double>(k) * coeff(k);
        }
        return acc - coeff(-1) / (e * e);
    }
};

struct WLaurentExpansion
{
    PoleRecord pole;
    int order = 0;
    Series series; // coefficients of W in powers of (z - p), starting at -1

    cplx coeff(int k) const { return series[k]; }
    cplx eval(cplx z) const { return series.eval(z - pole.p); }
};

// Coefficient recursion: with w = sum c_j e^{j-1}, e = z - p, matching e^{n-3} in
// w'' = alpha + z w + 2 w^3 gives
//   (n-4)(n+1) c_n = alpha [n=3] + p c_{n-2} + c_{n-3} + 2 (cubic sum without c_n).
inline LaurentExpansion laurent_coefficients(cplx p, int eta, cplx alpha, cplx h, int N)
{
    if (eta != 1 && eta != -1) {
        throw error(errc::invalid_argument, "eta must be +1 or -1");
    }
    if (N < 3) {
        throw error(errc::invalid_argument, "laurent order must be at least 3");
    }
    const double et = eta;
    const auto n_terms = static_cast<std::size_t>(N + 2);
    std::vector<cplx> c(n_terms, 0.0);
    c[0] = et;
    c[1] = 0.0;
    c[2] = -et * p / 6.0;
    c[3] = -(alpha + et) / 4.0;
    c[4] = h;
    std::vector<cplx> sq(n_terms, 0.0);
    auto square = [&](std::size_t m) {
        cplx acc = 0.0;
        for (std::size_t i = 0; i <= m; ++i) {
            acc += c[i] * c[m - i];
        }
        return acc;
    };
    for (std::size_t m = 0; m <= 4 && m < n_terms; ++m) {
        sq[m] = square(m);
    }
    for (std::size_t n = 5; n < n_terms; ++n) {
        c[n] = 0.0;
        sq[n] = square(n);
        cplx cube = 0.0;
        for (std::size_t m = 0; m <= n; ++m) {
            cube += sq[m] * c[n - m];
        }
        const double nn = static_cast<double>(n);
        const cplx rhs = p * c[n - 2] + c[n - 3] + 2.0 * cube;
        c[n] = rhs / ((nn - 4.0) * (nn + 1.0));
        sq[n] = square(n);
    }
    LaurentExpansion out;
    out.pole = PoleRecord{p, eta, h, 0.0, alpha, true};
    out.order = N;
    out.a = std::move(c);
    return out;
}

inline LaurentExpansion laurent_coefficients(const PoleRecord& r, int N)
{
    return laurent_coefficients(r.p, r.eta, r.alpha, r.h, N);
}

// W = w^4 + z w^2 + 2 alpha w - w'^2 expanded by series arithmetic.
inline WLaurentExpansion w_laurent(const PoleRecord& pole, int N)
{
    if (N < 2) {
        throw error(errc::invalid_argument, "W expansion order must be at least 2");
    }
    const LaurentExpansion ex = laurent_coefficients(pole, N + 3);
    const Series w = ex.as_series();
    const Series wp = w.derivative();
    const Series z = Series::affine(pole.p, N + 4);
    const Series w2 = w * w;
    const Series W = w2 * w2 + z * w2 + (2.0 * pole.alpha) * w - wp * wp;
    WLaurentExpansion out;
    out.pole = pole;
    out.order = N;
    out.series = W.truncated(N);
    return out;
}

// Largest coefficient of w'' - alpha - z w - 2 w^3 through order N-2, each measured
// against the largest term contributing to that order.
inline double series_residual(const LaurentExpansion& ex)
{
    const Series w = ex.as_series();
    const Series wpp = w.derivative().derivative();
    const Series z = Series::affine(ex.pole.p, ex.order + 2);
    const Series zw = z * w;
    const Series w3 = w * w * w;
    const int top = ex.order - 2;
    double worst = 0.0;
    for (int k = -3; k <= top; ++k) {
        const cplx a = k == 0 ? ex.pole.alpha : cplx{};
        const cplx r = wpp[k] - a - zw[k] - 2.0 * w3[k];
        const double scale =
            std::max({1.0, std::abs(wpp[k]), std::abs(a), std::abs(zw[k]), std::abs(2.0 * w3[k])});
        worst = std::max(worst, std::abs(r) / scale);
    }
    return worst;
}

struct FitConfig
{
    int order = 16;
    double accept = 1e-6;
    double eta_band = 0.1;
    int max_iter = 40;
    std::size_t min_states = 6;
};

namespace detail
{

inline double fit_misfit(const std::vector<OdeState>& pts, const LaurentExpansion& ex,
                         std::vector<cplx>* residuals = nullptr)
{
    double worst = 0.0;
    if (residuals) {
        residuals->clear();
    }
    for (const auto& s : pts) {
        const cplx rw = (ex.w(s.z) - s.w) / std::abs(s.w);
        const cplx rp = (ex.wp(s.z) - s.wp) / std::abs(s.wp);
        worst = std::max({worst, std::abs(rw), std::abs(rp)});
        if (residuals) {
            residuals->push_back(rw);
            residuals->push_back(rp);
        }
    }
    return worst;
}

} // namespace detail

// Recovers (p, eta, h) from states approaching a pole.
inline PoleRecord fit_pole(const std::vector<OdeState>& tail, cplx alpha, const FitConfig& cfg = {})
{
    if (tail.size() < cfg.min_states) {
        throw error(errc::precondition, "fit_pole needs at least six states");
    }
    for (const auto& s : tail) {
        if (!is_finite(s) || s.wp == cplx(0.0)) {
            throw error(errc::fit_diverged, "degenerate state in pole tail");
        }
    }
    const OdeState& last = *std::max_element(tail.begin(), tail.end(), [](const OdeState& a, const OdeState& b) {
        return std::abs(a.w) < std::abs(b.w);
    });
    cplx p = last.z + last.w / last.wp;
    const cplx eta_raw = -last.w * last.w / last.wp;
    const int eta = eta_raw.real() >= 0 ? 1 : -1;
    if (std::abs(eta_raw - static_cast<double>(eta)) > cfg.eta_band) {
        throw error(errc::fit_diverged, "residue estimate is not close to +1 or -1");
    }

    // Keep states well inside the local scale; the series converges fastest there.
    std::vector<OdeState> pts;
    const double reach = 0.5 * local_scale(p);
    for (const auto& s : tail) {
        if (std::abs(s.z - p) <= reach) {
            pts.push_back(s);
        }
    }
    if (pts.size() < cfg.min_states) {
        std::vector<OdeState> sorted = tail;
        std::sort(sorted.begin(), sorted.end(),
                  [&](const OdeState& a, const OdeState& b) { return std::abs(a.z - p) < std::abs(b.z - p); });
        sorted.resize(cfg.min_states);
        pts = std::move(sorted);
    }

    cplx h = -static_cast<double>(eta) * p * p / 180.0;
    auto model = [&](cplx pp, cplx hh) { return laurent_coefficients(pp, eta, alpha, hh, cfg.order); };

    std::vector<cplx> r0, rp, rh;
    double misfit = detail::fit_misfit(pts, model(p, h), &r0);
    for (int it = 0; it < cfg.max_iter; ++it) {
        const double dp = 1e-6 * std::max(1e-3, std::abs(last.z - p));
        const double dh = 1e-6 * std::max(1.0, std::abs(h));
        std::vector<cplx> rpm, rhm;
        detail::fit_misfit(pts, model(p + dp, h), &rp);
        detail::fit_misfit(pts, model(p - dp, h), &rpm);
        detail::fit_misfit(pts, model(p, h + dh), &rh);
        detail::fit_misfit(pts, model(p, h - dh), &rhm);
        cplx a11 = 0.0, a12 = 0.0, a22 = 0.0, b1 = 0.0, b2 = 0.0;
        for (std::size_t i = 0; i < r0.size(); ++i) {
            const cplx jp = (rp[i] - rpm[i]) / (2.0 * dp);
            const cplx jh = (rh[i] - rhm[i]) / (2.0 * dh);
            a11 += std::conj(jp) * jp;
            a12 += std::conj(jp) * jh;
            a22 += std::conj(jh) * jh;
            b1 += std::conj(jp) * r0[i];
            b2 += std::conj(jh) * r0[i];
        }
        const cplx det = a11 * a22 - a12 * std::conj(a12);
        if (std::abs(det) == 0.0 || !is_finite(det)) {
            break;
        }
        const cplx step_p = -(a22 * b1 - a12 * b2) / det;
        const cplx step_h = -(a11 * b2 - std::conj(a12) * b1) / det;
        double lambda = 1.0;
        bool improved = false;
        for (int k = 0; k < 8; ++k) {
            std::vector<cplx> rt;
            const double m = detail::fit_misfit(pts, model(p + lambda * step_p, h + lambda * step_h), &rt);
            if (m < misfit) {
                p += lambda * step_p;
                h += lambda * step_h;
                const double gain = misfit - m;
                misfit = m;
                r0 = std::move(rt);
                improved = gain > 1e-3 * m;
                break;
            }
            lambda *= 0.5;
        }
        if (!improved) {
            break;
        }
    }
    PoleRecord rec{p, eta, h, misfit, alpha, misfit < cfg.accept};
    if (!rec.accepted) {
        throw error(errc::fit_diverged, "pole fit residual " + std::to_string(misfit));
    }
    return rec;
}

struct JumpConfig
{
    int order = 8;
    double scaled_distance = 0.1;
    double tail_tol = 1e-8;
};

inline double jump_distance(cplx p, const JumpConfig& cfg = {})
{
    return cfg.scaled_distance * local_scale(p);
}

// State at p + d * direction from the truncated Laurent series.
inline OdeState jump_pole(const PoleRecord& rec, cplx direction, const JumpConfig& cfg = {},
                          double distance = -1.0)
{
    if (!rec.accepted) {
        throw error(errc::precondition, "jump_pole needs an accepted pole record");
    }
    const double d = distance > 0 ? distance : jump_distance(rec.p, cfg);
    const cplx u = direction / std::abs(direction);
    const LaurentExpansion ex = laurent_coefficients(rec, cfg.order);
    const cplx z = rec.p + d * u;
    const cplx w = ex.w(z);
    const double tail = (std::abs(ex.coeff(cfg.order)) * std::pow(d, cfg.order) +
                         std::abs(ex.coeff(cfg.order - 1)) * std::pow(d, cfg.order - 1)) /
                        std::abs(w);
    if (!(tail < cfg.tail_tol)) {
        throw error(errc::series_unreliable, "series tail too large at the jump distance");
    }
    return OdeState{z, w, ex.wp(z)};
}

struct W1ExpansionReport
{
    cplx b{}, alpha{}, p{};
    cplx coefficient{};      // linear coefficient with the cubic Taylor truncation
    cplx closed_form{};      // displayed expression
    double mismatch = 0.0;
    cplx full_coefficient{}; // with the Taylor series carried to full order
    cplx residue{};
    std::array<cplx, 2> roots{};
    bool roots_solve_comparison = false;
};

inline cplx w1_linear_closed_form(cplx b, cplx alpha, cplx p)
{
    const cplx b2 = b * b, b3 = b2 * b, b5 = b3 * b2;
    return -(8.0 * b * p * p + (40.0 * b3 - 3.0) * p + (48.0 * b5 - 4.0 * b2 + 12.0 * alpha * b2)) /
           (6.0 * (2.0 * alpha + 1.0));
}

// Both solutions of closed form = p/6, as a quadratic in p.
inline std::array<cplx, 2> w1_root_formula(cplx b, cplx alpha)
{
    const cplx b3 = b * b * b;
    const cplx disc = std::sqrt((1.0 - alpha) * (1.0 - alpha) - 8.0 * (1.0 + 7.0 * alpha) * b3 + 16.0 * b3 * b3);
    const cplx base = 1.0 - alpha - 20.0 * b3;
    return {(base + disc) / (8.0 * b), (base - disc) / (8.0 * b)};
}

// Inserts the Taylor data w(p) = b, w'(p) = -b^2 - p/2 into w1 = -w - (alpha + 1/2)/V.
inline W1ExpansionReport verify_w1_expansion(cplx b, cplx alpha, cplx p)
{
    if (std::abs(2.0 * alpha + 1.0) < 1e-14) {
        throw error(errc::degenerate_alpha, "2 alpha + 1 vanishes");
    }
    auto linear_coeff = [&](int taylor_order) {
        const int n = taylor_order + 3;
        std::vector<cplx> t(static_cast<std::size_t>(n + 1), 0.0);
        t[0] = b;
        t[1] = -b * b - p / 2.0;
        // (k+2)(k+1) t_{k+2} = alpha [k=0] + p t_k + t_{k-1} + 2 (t^3)_k
        for (int k = 0; k + 2 <= n; ++k) {
            cplx cube = 0.0;
            for (int i = 0; i <= k; ++i) {
                for (int j = 0; i + j <= k; ++j) {
                    cube += t[static_cast<std::size_t>(i)] * t[static_cast<std::size_t>(j)] *
                            t[static_cast<std::size_t>(k - i - j)];
                }
            }
            const cplx rhs = (k == 0 ? alpha : cplx{}) + p * t[static_cast<std::size_t>(k)] +
                             (k >= 1 ? t[static_cast<std::size_t>(k - 1)] : cplx{}) + 2.0 * cube;
            t[static_cast<std::size_t>(k + 2)] = rhs / static_cast<double>((k + 2) * (k + 1));
        }
        for (int k = taylor_order + 1; k <= n; ++k) {
            t[static_cast<std::size_t>(k)] = 0.0;
        }
        const Series w(0, t);
        const Series z = Series::affine(p, n);
        Series V = w.derivative() + w * w + 0.5 * z;
        V.at(0) = 0.0; // vanishes identically by the choice of w'(p)
        const Series w1 = (-1.0) * w - (alpha + 0.5) * V.reciprocal();
        return std::pair{w1[1], w1[-1]};
    };
    W1ExpansionReport rep;
    rep.b = b;
    rep.alpha = alpha;
    rep.p = p;
    rep.coefficient = linear_coeff(3).first;
    rep.closed_form = w1_linear_closed_form(b, alpha, p);
    rep.mismatch = std::abs(rep.coefficient - rep.closed_form) / std::max(1.0, std::abs(rep.closed_form));
    const auto full = linear_coeff(12);
    rep.full_coefficient = full.first;
    rep.residue = full.second;
    rep.roots = w1_root_formula(b, alpha);
    bool ok = true;
    for (const cplx r : rep.roots) {
        const cplx lhs = w1_linear_closed_form(b, alpha, r);
        ok = ok && std::abs(lhs - r / 6.0) <= 1e-8 * std::max(1.0, std::abs(r));
    }
    rep.roots_solve_comparison = ok;
    return rep;
}

} // namespace painleve

#endif
