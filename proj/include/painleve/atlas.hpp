#ifndef PAINLEVE_ATLAS_HPP
#define PAINLEVE_ATLAS_HPP

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "core.hpp"
#include "field.hpp"
#include "laurent.hpp"
#include "transforms.hpp"

namespace painleve
{

// Annulus/sector to scan. Lanes run parallel to each of `rays` at scaled offsets
// -lanes..lanes; a disc of radius `core` around the seed is covered by a fan.
struct Region
{
    double r_min = 1.0;
    double r_max = 50.0;
    double theta_min = -pi;
    double theta_max = pi;
    int lanes = 7;
    double core = 6.0;
    int core_rays = 64;
    std::vector<double> rays{0.0, 2.0 * pi / 3.0, -2.0 * pi / 3.0};

    void validate() const
    {
        if (!(r_min >= 1.0 && r_max > r_min && theta_max > theta_min && lanes >= 0 && core > 0 && core_rays > 0)) {
            throw error(errc::invalid_argument, "region out of range");
        }
    }

    bool contains(cplx p) const
    {
        const double r = std::abs(p);
        const double a = std::arg(p);
        return r >= r_min && r <= r_max && a >= theta_min - 1e-12 && a <= theta_max + 1e-12;
    }
};

struct LaneReport
{
    double ray = 0.0;
    int offset = 0;
    bool complete = true;
    std::string message;
    std::size_t poles = 0;
};

struct ScanResult
{
    std::vector<PoleRecord> poles;
    std::vector<LaneReport> lanes;
    bool partial = false;
};

inline double scaled_distance(cplx a, cplx b)
{
    return std::abs(a - b) * std::sqrt(std::max(1.0, std::abs(a)));
}

// Sort by (|p|, arg p) and merge records closer than `merge` in scaled units.
inline std::vector<PoleRecord> dedup_poles(std::vector<PoleRecord> poles, double merge = 0.1)
{
    std::sort(poles.begin(), poles.end(), [](const PoleRecord& a, const PoleRecord& b) {
        const double ra = std::abs(a.p), rb = std::abs(b.p);
        if (ra != rb) {
            return ra < rb;
        }
        return std::arg(a.p) < std::arg(b.p);
    });
    std::vector<PoleRecord> out;
    for (const auto& p : poles) {
        bool merged = false;
        for (auto it = out.rbegin(); it != out.rend(); ++it) {
            if (std::abs(p.p) - std::abs(it->p) > merge) {
                break;
            }
            if (scaled_distance(p.p, it->p) < merge) {
                if (p.fit_residual < it->fit_residual) {
                    *it = p;
                }
                merged = true;
                break;
            }
        }
        if (!merged) {
            out.push_back(p);
        }
    }
    std::sort(out.begin(), out.end(), [](const PoleRecord& a, const PoleRecord& b) {
        const double ra = std::abs(a.p), rb = std::abs(b.p);
        if (ra != rb) {
            return ra < rb;
        }
        return std::arg(a.p) < std::arg(b.p);
    });
    return out;
}

namespace detail
{

// Poles carried across by the trace plus near misses found by excursions.
inline void harvest(const ResolvedSolution& sol, const TraceResult& tr, const FieldConfig& cfg, double reach,
                    std::vector<PoleRecord>& found)
{
    found.insert(found.end(), tr.poles.begin(), tr.poles.end());
    const auto& st = tr.states;
    for (std::size_t i = 1; i + 1 < st.size(); ++i) {
        const double a = std::abs(st[i - 1].w), b = std::abs(st[i].w), c = std::abs(st[i + 1].w);
        if (!(b >= a && b >= c) || st[i].wp == cplx(0.0)) {
            continue;
        }
        const cplx pe = st[i].z + st[i].w / st[i].wp;
        if (scaled_distance(st[i].z, pe) >= reach) {
            continue;
        }
        bool known = false;
        for (const auto& p : tr.poles) {
            known = known || scaled_distance(p.p, pe) < 0.1;
        }
        if (known) {
            continue;
        }
        if (auto rec = excursion(sol, st[i], cfg, 2.0 * reach)) {
            found.push_back(*rec);
        }
    }
}

inline PathSpec lane_path(cplx from, double theta, double offset, double t0, double t1, double dt = 0.5)
{
    const cplx e = std::polar(1.0, theta);
    auto at = [&](double t) { return e * cplx(t, offset / std::sqrt(t)); };
    PathSpec p = PathSpec::line(from, at(t0));
    for (double t = t0 + dt; t < t1 + dt; t += dt) {
        p.then_line(at(std::min(t, t1)));
    }
    return p;
}

} // namespace detail

namespace detail
{

// Runs the lane and core-fan traces of a scan, handing each completed trace to `visit`.
template <class Visit>
void for_each_lane(const ResolvedSolution& sol, const Region& region, const FieldConfig& cfg, ScanResult& out,
                   Visit visit)
{
    const cplx z0 = sol.seed.z;
    auto run = [&](const PathSpec& path, LaneReport rep) {
        try {
            rep.poles = visit(trace(sol, sol.seed, path, cfg));
        } catch (const error& e) {
            rep.complete = false;
            rep.message = e.what();
            out.partial = true;
        }
        out.lanes.push_back(rep);
    };
    const double core = std::min(region.core, region.r_max);
    for (int k = 0; k < region.core_rays; ++k) {
        const double th = 2.0 * pi * k / region.core_rays;
        run(PathSpec::line(z0, z0 + std::polar(core + 1.0, th)), LaneReport{th, 0, true, "", 0});
    }
    if (region.r_max > core) {
        for (const double th : region.rays) {
            for (int s = -region.lanes; s <= region.lanes; ++s) {
                run(lane_path(z0, th, s, core, region.r_max * 1.02 + 1.0), LaneReport{th, s, true, "", 0});
            }
        }
    }
}

} // namespace detail

inline ScanResult scan_poles(const ResolvedSolution& sol, const Region& region, const FieldConfig& cfg = {})
{
    region.validate();
    ScanResult out;
    std::vector<PoleRecord> found;
    if (sol.kind == engine::rational) {
        // The only pole is the origin, outside every admissible region.
        return out;
    }
    detail::for_each_lane(sol, region, cfg, out, [&](const TraceResult& tr) {
        const std::size_t before = found.size();
        detail::harvest(sol, tr, cfg, 0.75, found);
        return found.size() - before;
    });
    for (const auto& p : dedup_poles(found)) {
        if (region.contains(p.p)) {
            out.poles.push_back(p);
        }
    }
    return out;
}

// V = w' + w^2 + z/2 (up) or w' - w^2 - z/2 (down) and its derivative.
inline std::pair<cplx, cplx> backlund_v(const OdeState& s, cplx alpha, int direction)
{
    const cplx wpp = p2_second_derivative(s, alpha);
    if (direction > 0) {
        return {s.wp + s.w * s.w + s.z / 2.0, wpp + 2.0 * s.w * s.wp + 0.5};
    }
    return {s.wp - s.w * s.w - s.z / 2.0, wpp - 2.0 * s.w * s.wp - 0.5};
}

// Zeros of V located from local minima of |V| along the scan lanes and polished by Newton.
inline std::vector<cplx> v_zeros(const ResolvedSolution& sol, const Region& region, int direction = 1,
                                 const FieldConfig& cfg = {})
{
    region.validate();
    const cplx a = fit_alpha(sol);
    std::vector<cplx> found;
    ScanResult dummy;
    auto polish = [&](OdeState cur) -> std::optional<cplx> {
        for (int it = 0; it < 40; ++it) {
            const auto [v, vp] = backlund_v(cur, a, direction);
            const double scale = 1.0 + std::abs(cur.wp) + std::norm(cur.w) + std::abs(cur.z);
            if (std::abs(v) < 1e-11 * scale) {
                return cur.z;
            }
            const cplx next = cur.z - v / vp;
            if (scaled_distance(cur.z, next) > 1.0) {
                return std::nullopt;
            }
            const TraceResult step = trace(sol, cur, PathSpec::line(cur.z, next), cfg);
            if (!step.poles.empty() || step.ends_at_pole) {
                return std::nullopt;
            }
            cur = step.back();
            cur.z = next;
        }
        return std::nullopt;
    };
    detail::for_each_lane(sol, region, cfg, dummy, [&](const TraceResult& tr) {
        std::size_t count = 0;
        std::vector<double> mag(tr.states.size());
        for (std::size_t i = 0; i < tr.states.size(); ++i) {
            mag[i] = std::abs(backlund_v(tr.states[i], a, direction).first);
        }
        for (std::size_t i = 1; i + 1 < tr.states.size(); ++i) {
            if (!(mag[i] <= mag[i - 1] && mag[i] <= mag[i + 1])) {
                continue;
            }
            const auto [v, vp] = backlund_v(tr.states[i], a, direction);
            if (vp == cplx(0.0) || scaled_distance(tr.states[i].z, tr.states[i].z - v / vp) > 0.75) {
                continue;
            }
            bool known = false;
            for (const cplx z : found) {
                known = known || scaled_distance(z, tr.states[i].z - v / vp) < 0.05;
            }
            if (known) {
                continue;
            }
            try {
                if (auto z = polish(tr.states[i])) {
                    found.push_back(*z);
                    ++count;
                }
            } catch (const error&) {
            }
        }
        return count;
    });
    std::vector<PoleRecord> as_poles;
    for (const cplx z : found) {
        as_poles.push_back(PoleRecord{z, 1, 0.0, 0.0, a, true});
    }
    std::vector<cplx> out;
    for (const auto& p : dedup_poles(as_poles)) {
        if (region.contains(p.p)) {
            out.push_back(p.p);
        }
    }
    return out;
}

enum class StringKind { first, second };
enum class ResiduePattern { constant, alternating };

inline std::string to_string(StringKind k) { return k == StringKind::first ? "FirstKind" : "SecondKind"; }
inline std::string to_string(ResiduePattern k) { return k == ResiduePattern::constant ? "Constant" : "Alternating"; }

struct StringRecord
{
    std::vector<std::size_t> members; // indices into the pole list
    std::vector<PoleRecord> poles;
    StringKind kind = StringKind::first;
    ResiduePattern pattern = ResiduePattern::constant;
    int eta = 0; // common residue for constant patterns
    double asymptotic_ray = 0.0;
    bool maximal = true;
};

struct LinkResult
{
    std::vector<StringRecord> strings;
    std::vector<std::size_t> unassigned;
    std::vector<std::string> ambiguities;
};

// Successor predicted by the continuous lattice (2/3) p^{3/2} + s k, with the branch
// of p^{1/2} that makes the step point outward.
inline cplx predicted_successor(cplx p, cplx s)
{
    cplx q = std::sqrt(p);
    if (((s / q) * std::conj(p)).real() < 0) {
        q = -q;
    }
    const cplx t = 1.0 + 1.5 * s / (q * q * q);
    return p * std::pow(t, 2.0 / 3.0);
}

struct LinkConfig
{
    double epsilon = 0.1;
    std::size_t min_length = 3;
};

inline LinkResult link_strings(const std::vector<PoleRecord>& poles, const LinkConfig& cfg = {})
{
    LinkResult out;
    const std::size_t n = poles.size();
    std::vector<std::optional<std::size_t>> next(n), prev(n);
    std::vector<StringKind> link_kind(n, StringKind::first);
    const cplx spacing[2] = {cplx(sqrt2 * pi, 0.0), cplx(0.0, pi)};
    for (int kind = 0; kind < 2; ++kind) {
        for (std::size_t i = 0; i < n; ++i) {
            if (next[i]) {
                continue;
            }
            const cplx target = predicted_successor(poles[i].p, spacing[kind]);
            const double tol = cfg.epsilon * local_scale(target);
            std::vector<std::size_t> cands;
            for (std::size_t j = 0; j < n; ++j) {
                if (j == i || prev[j] || std::abs(poles[j].p - target) >= tol) {
                    continue;
                }
                const bool same = poles[j].eta == poles[i].eta;
                if ((kind == 0) == same) {
                    cands.push_back(j);
                }
            }
            if (cands.size() > 1) {
                out.ambiguities.push_back("pole " + std::to_string(i) + " has " + std::to_string(cands.size()) +
                                          " candidate successors");
                continue;
            }
            if (cands.size() == 1) {
                next[i] = cands[0];
                prev[cands[0]] = i;
                link_kind[i] = kind == 0 ? StringKind::first : StringKind::second;
            }
        }
    }
    // Near the seed strings bend away from the continuum prediction; extend chains
    // backwards using their own observed spacing, scaled as p^{-1/2}.
    for (bool changed = true; changed;) {
        changed = false;
        for (std::size_t h = 0; h < n; ++h) {
            if (prev[h] || !next[h]) {
                continue;
            }
            const std::size_t h1 = *next[h];
            const cplx p0 = poles[h].p, p1 = poles[h1].p;
            const cplx target = p0 - (p1 - p0) * std::sqrt(p1 / p0);
            const double tol = cfg.epsilon * local_scale(target);
            const bool first = link_kind[h] == StringKind::first;
            std::vector<std::size_t> cands;
            for (std::size_t j = 0; j < n; ++j) {
                if (j == h || next[j] || std::abs(poles[j].p - target) >= tol) {
                    continue;
                }
                if (first == (poles[j].eta == poles[h].eta) && std::abs(poles[j].p) < std::abs(p0)) {
                    cands.push_back(j);
                }
            }
            if (cands.size() == 1) {
                next[cands[0]] = h;
                prev[h] = cands[0];
                link_kind[cands[0]] = link_kind[h];
                changed = true;
            }
        }
    }
    std::vector<bool> used(n, false);
    for (std::size_t i = 0; i < n; ++i) {
        if (prev[i] || used[i]) {
            continue;
        }
        std::vector<std::size_t> chain{i};
        used[i] = true;
        while (next[chain.back()]) {
            chain.push_back(*next[chain.back()]);
            used[chain.back()] = true;
        }
        if (chain.size() < cfg.min_length) {
            out.unassigned.insert(out.unassigned.end(), chain.begin(), chain.end());
            continue;
        }
        StringRecord s;
        s.members = chain;
        for (const auto m : chain) {
            s.poles.push_back(poles[m]);
        }
        s.kind = link_kind[chain.front()];
        s.pattern = s.kind == StringKind::first ? ResiduePattern::constant : ResiduePattern::alternating;
        s.eta = s.pattern == ResiduePattern::constant ? poles[chain.front()].eta : 0;
        s.asymptotic_ray = std::arg(poles[chain.back()].p);
        s.maximal = true;
        out.strings.push_back(std::move(s));
    }
    std::sort(out.unassigned.begin(), out.unassigned.end());
    return out;
}

struct CountingRow
{
    double r = 0.0;
    std::size_t n = 0, n_plus = 0, n_minus = 0;
};

struct CountingData
{
    std::vector<CountingRow> rows;
    double exponent = 0.0;
    double coefficient = 0.0; // n(r_max) / r_max^{3/2}
    int ell_plus = 0, ell_minus = 0;
    int delta() const { return ell_plus - ell_minus; }
};

inline CountingData counting(const std::vector<PoleRecord>& poles, const std::vector<StringRecord>& strings,
                             const std::vector<double>& r_grid, double fit_from = 0.0)
{
    CountingData out;
    for (const double r : r_grid) {
        CountingRow row{r, 0, 0, 0};
        for (const auto& p : poles) {
            if (std::abs(p.p) <= r) {
                ++row.n;
                (p.eta > 0 ? row.n_plus : row.n_minus)++;
            }
        }
        out.rows.push_back(row);
    }
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int m = 0;
    for (const auto& row : out.rows) {
        if (row.n == 0 || row.r < fit_from) {
            continue;
        }
        const double x = std::log(row.r), y = std::log(static_cast<double>(row.n));
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++m;
    }
    if (m >= 2) {
        out.exponent = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    }
    if (!out.rows.empty()) {
        const auto& last = out.rows.back();
        out.coefficient = static_cast<double>(last.n) / std::pow(last.r, 1.5);
    }
    for (const auto& s : strings) {
        if (!s.maximal || s.pattern != ResiduePattern::constant) {
            continue;
        }
        (s.eta > 0 ? out.ell_plus : out.ell_minus)++;
    }
    return out;
}

struct SeparationReport
{
    bool applicable = false;
    double statistic = 0.0;
    // Per string: slope of the scaled separation against |p|.
    std::vector<double> trend;
    std::vector<std::vector<std::pair<double, double>>> samples;
};

inline SeparationReport separation_check(const std::vector<StringRecord>& strings)
{
    SeparationReport rep;
    if (strings.size() < 2) {
        return rep;
    }
    rep.applicable = true;
    rep.statistic = 1e300;
    for (std::size_t i = 0; i < strings.size(); ++i) {
        std::vector<std::pair<double, double>> pts;
        for (const auto& p : strings[i].poles) {
            double best = 1e300;
            for (std::size_t j = 0; j < strings.size(); ++j) {
                if (j == i) {
                    continue;
                }
                for (const auto& q : strings[j].poles) {
                    best = std::min(best, std::abs(p.p - q.p));
                }
            }
            const double stat = std::sqrt(std::abs(p.p)) * best;
            pts.emplace_back(std::abs(p.p), stat);
            rep.statistic = std::min(rep.statistic, stat);
        }
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        const double m = static_cast<double>(pts.size());
        for (const auto& [x, y] : pts) {
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
        }
        rep.trend.push_back(m >= 2 ? (m * sxy - sx * sy) / (m * sxx - sx * sx) : 0.0);
        rep.samples.push_back(std::move(pts));
    }
    return rep;
}

struct ZeroRecord
{
    cplx q{};
    cplx predicted_offset{}; // (sqrt2/2) pi p^{-1/2}, outward branch
    double relative_error = 0.0;
};

// Zeros of w between consecutive poles of a first-kind string.
inline std::vector<ZeroRecord> zero_string(const ResolvedSolution& sol, const StringRecord& str,
                                           const FieldConfig& cfg = {})
{
    if (str.kind != StringKind::first) {
        throw error(errc::precondition, "zero_string needs a first-kind string");
    }
    std::vector<ZeroRecord> out;
    for (std::size_t k = 0; k + 1 < str.poles.size(); ++k) {
        const PoleRecord& a = str.poles[k];
        const PoleRecord& b = str.poles[k + 1];
        const cplx dir = (b.p - a.p) / std::abs(b.p - a.p);
        const double da = jump_distance(a.p, cfg.jump), db = jump_distance(b.p, cfg.jump);
        const OdeState start = jump_pole(a, dir, cfg.jump, da);
        const PathSpec path = PathSpec::line(start.z, b.p - db * dir);
        const TraceResult tr = trace(sol, start, path, cfg);
        auto best = std::min_element(tr.states.begin(), tr.states.end(), [](const OdeState& x, const OdeState& y) {
            return std::abs(x.w) < std::abs(y.w);
        });
        OdeState cur = *best;
        bool ok = false;
        for (int it = 0; it < 30; ++it) {
            if (std::abs(cur.w) < 1e-12 * std::max(1.0, std::abs(cur.wp))) {
                ok = true;
                break;
            }
            const cplx next = cur.z - cur.w / cur.wp;
            const TraceResult step = trace(sol, cur, PathSpec::line(cur.z, next), cfg);
            if (!step.poles.empty()) {
                break;
            }
            cur = step.back();
            cur.z = next;
        }
        if (!ok) {
            throw error(errc::zero_not_found, "Newton iteration for a zero did not converge");
        }
        ZeroRecord z;
        z.q = cur.z;
        cplx q = std::sqrt(a.p);
        if (((1.0 / q) * std::conj(a.p)).real() < 0) {
            q = -q;
        }
        z.predicted_offset = sqrt2 / 2.0 * pi / q;
        z.relative_error = std::abs((z.q - a.p) - z.predicted_offset) / std::abs(z.predicted_offset);
        out.push_back(z);
    }
    return out;
}

struct ContourResult
{
    cplx raw{};         // (1/2 pi i) times the integral
    long long count = 0; // rounded real part
    double imag_residual = 0.0;
    std::size_t detours = 0;
};

namespace detail
{

// Arcs of |z| = r from angle a to angle b with detours around the listed poles.
inline PathSpec contour_arc(double r, double a, double b, const std::vector<PoleRecord>& poles, double delta,
                            std::size_t& detours)
{
    struct Cut
    {
        double t_in, t_out;
        cplx p;
        double rho;
    };
    const double dir = b >= a ? 1.0 : -1.0;
    std::vector<Cut> cuts;
    for (const auto& p : poles) {
        const double rho = delta * local_scale(p.p);
        const double rp = std::abs(p.p);
        if (std::abs(rp - r) >= rho) {
            continue;
        }
        // Angular half-width of the chord cut by the small circle.
        const double c = (r * r + rp * rp - rho * rho) / (2.0 * r * rp);
        const double half = std::acos(std::clamp(c, -1.0, 1.0));
        double ap = std::arg(p.p);
        const double lo = std::min(a, b), hi = std::max(a, b);
        while (ap < lo - pi) {
            ap += 2 * pi;
        }
        while (ap > hi + pi) {
            ap -= 2 * pi;
        }
        if (ap + half < lo || ap - half > hi) {
            continue;
        }
        if (ap - half <= lo || ap + half >= hi) {
            throw error(errc::pole_on_contour, "pole detour overlaps an arc endpoint");
        }
        cuts.push_back(Cut{ap - dir * half, ap + dir * half, p.p, rho});
    }
    std::sort(cuts.begin(), cuts.end(), [&](const Cut& x, const Cut& y) { return dir * x.t_in < dir * y.t_in; });
    PathSpec path;
    double t = a;
    for (const auto& c : cuts) {
        path.segments.push_back(Segment::arc(0.0, r, t, c.t_in));
        const cplx zin = std::polar(r, c.t_in), zout = std::polar(r, c.t_out);
        double th_in = std::arg(zin - c.p), th_out = std::arg(zout - c.p);
        // Go around the side away from the pole's own side of the circle.
        const bool outer = std::abs(c.p) < r;
        const double mid = std::arg(c.p) + (outer ? 0.0 : pi);
        auto unwrap = [](double x, double ref) {
            while (x < ref - pi) {
                x += 2 * pi;
            }
            while (x > ref + pi) {
                x -= 2 * pi;
            }
            return x;
        };
        th_in = unwrap(th_in, mid);
        th_out = unwrap(th_out, mid);
        path.segments.push_back(Segment::arc(c.p, c.rho, th_in, th_out));
        t = c.t_out;
        ++detours;
    }
    path.segments.push_back(Segment::arc(0.0, r, t, b));
    return path;
}

} // namespace detail

// Angles on |z| = r where the continuation is started (valleys) and where arcs end (peaks).
struct ContourPlan
{
    std::vector<double> valleys;
    std::vector<double> peaks;
};

inline ContourPlan contour_plan(const ResolvedSolution& sol)
{
    if (sol.base) {
        return contour_plan(*sol.base);
    }
    if (sol.kind == engine::riccati && sol.distinguished != 0) {
        const double rot = -std::arg(distinguished_mu(sol.distinguished));
        return {{rot, rot + pi}, {rot - pi / 3, rot + pi / 3, rot + pi - 2 * pi / 3, rot + pi + 2 * pi / 3}};
    }
    return {{0.0, 2 * pi / 3, -2 * pi / 3}, {pi / 3, pi, -pi / 3}};
}

namespace detail
{

// Integral of w along an arc starting at zs. Chain images ride along their Riccati base,
// whose continuation is the well-conditioned one.
inline cplx arc_integral(const ResolvedSolution& sol, cplx zs, const PathSpec& arc, const FieldConfig& cfg)
{
    if (!sol.base) {
        const TraceResult tr = trace(sol, state_at(sol, zs, cfg), arc, cfg, true, 0.0);
        return tr.integral.back();
    }
    const ResolvedSolution& b = *sol.base;
    const OdeState s0 = state_at(b, zs, cfg);
    const auto sg = static_cast<real_l>(b.sign);
    auto g = [&](cplx_l z, cplx_l w) {
        const OdeState st{narrow(z), narrow(w), narrow(sg * (0.5L * z + w * w))};
        return widen(map_from_base(sol, st).w);
    };
    const Trajectory t = integrate_riccati_with_aux(b.sign, s0.w, 0.0, arc, cfg.integ, g);
    if (t.halted) {
        throw error(errc::pole_on_contour, "blow-up on an integration contour");
    }
    return narrow(t.aux.back()[0]);
}

} // namespace detail

// (1/2 pi i) times the integral of w over |z| = r, counterclockwise.
inline ContourResult contour_residue_count(const ResolvedSolution& sol, double r, double delta,
                                           const std::vector<PoleRecord>& poles, const FieldConfig& cfg = {})
{
    ContourResult out;
    const cplx two_pi_i(0.0, 2.0 * pi);
    if (sol.kind == engine::rational) {
        // Closed form; numerical quadrature keeps it honest.
        const int n = 4096;
        cplx acc = 0.0;
        for (int k = 0; k < n; ++k) {
            const double th = 2 * pi * (k + 0.5) / n;
            const cplx z = std::polar(r, th);
            acc += (-sol.alpha / z) * cplx(0.0, 1.0) * z * (2 * pi / n);
        }
        out.raw = acc / two_pi_i;
    } else {
        const ContourPlan plan = contour_plan(sol);
        cplx total = 0.0;
        for (const double v : plan.valleys) {
            // Pick the two peaks adjacent to this valley.
            double lo = -1e9, hi = 1e9;
            for (double p : plan.peaks) {
                while (p <= v - pi) {
                    p += 2 * pi;
                }
                while (p > v + pi) {
                    p -= 2 * pi;
                }
                if (p < v) {
                    lo = std::max(lo, p);
                } else {
                    hi = std::min(hi, p);
                }
            }
            // Nudge the start off any detour disc.
            double start = v;
            for (int tries = 0; tries < 50; ++tries) {
                bool clear = true;
                for (const auto& p : poles) {
                    if (std::abs(std::polar(r, start) - p.p) < 2.0 * delta * local_scale(p.p)) {
                        clear = false;
                    }
                }
                if (clear) {
                    break;
                }
                start += 0.37 * delta / std::sqrt(r) / r;
            }
            const cplx zs = std::polar(r, start);
            for (const double end : {hi, lo}) {
                const PathSpec arc = detail::contour_arc(r, start, end, poles, delta, out.detours);
                const double sign = end > start ? 1.0 : -1.0;
                total += sign * detail::arc_integral(sol, zs, arc, cfg);
            }
        }
        out.raw = total / two_pi_i;
    }
    out.count = std::llround(out.raw.real());
    out.imag_residual = std::abs(out.raw - static_cast<double>(out.count));
    return out;
}

struct LedgerReport
{
    int before_plus = 0, before_minus = 0, after_plus = 0, after_minus = 0;
    bool plus_matches = false;  // l+(after) = l-(before)
    bool minus_matches = false; // l-(after) = l-(before) - Delta(before)
    bool delta_matches = false; // Delta(after) = Delta(before)
    bool delta_admissible = false; // |Delta| in {1, 3}
    bool ok() const { return plus_matches && minus_matches && delta_matches && delta_admissible; }
};

inline LedgerReport ledger(const CountingData& before, const CountingData& after)
{
    LedgerReport r;
    r.before_plus = before.ell_plus;
    r.before_minus = before.ell_minus;
    r.after_plus = after.ell_plus;
    r.after_minus = after.ell_minus;
    r.plus_matches = after.ell_plus == before.ell_minus;
    r.minus_matches = after.ell_minus == before.ell_minus - before.delta();
    r.delta_matches = after.delta() == before.delta();
    const int d = std::abs(before.delta());
    r.delta_admissible = (d == 1 || d == 3) && std::abs(after.delta()) == d;
    return r;
}

} // namespace painleve

#endif
