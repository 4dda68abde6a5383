#ifndef PAINLEVE_FIRST_INTEGRAL_HPP
#define PAINLEVE_FIRST_INTEGRAL_HPP

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "core.hpp"
#include "field.hpp"
#include "laurent.hpp"
#include "transforms.hpp"

namespace painleve
{

inline cplx w_algebraic(const OdeState& s, cplx alpha)
{
    const cplx w2 = s.w * s.w;
    return w2 * w2 + s.z * w2 + 2.0 * alpha * s.w - s.wp * s.wp;
}

struct ClusterSample
{
    cplx h{};
    cplx value{}; // W(h) h^{-2}
    double scaled_dist = 0.0;
};

struct AnchoredLimit
{
    cplx p{};
    cplx value{}; // 180 p^{-2} h(p) eta
};

struct ClusterEstimate
{
    std::vector<ClusterSample> samples;
    std::vector<AnchoredLimit> anchored;
    double epsilon = 0.0;
};

inline double distance_to_poles(cplx z, const std::vector<PoleRecord>& poles)
{
    double d = 1e300;
    for (const auto& p : poles) {
        d = std::min(d, std::abs(z - p.p));
    }
    return d;
}

inline cplx anchored_limit(const PoleRecord& p) { return 180.0 * p.h / (p.p * p.p) * static_cast<double>(p.eta); }

// W(h) h^{-2} on the grid radii x directions, keeping points at scaled distance >= epsilon
// from the supplied poles; also the pole-anchored limits of poles with |p| in [r_lo, r_hi].
inline ClusterEstimate cluster_estimate(const ResolvedSolution& sol, const std::vector<PoleRecord>& poles,
                                        const std::vector<double>& radii, const std::vector<double>& directions,
                                        double epsilon, const FieldConfig& cfg = {})
{
    ClusterEstimate out;
    out.epsilon = epsilon;
    const cplx alpha = fit_alpha(sol);
    for (const double th : directions) {
        for (const double r : radii) {
            const cplx h = std::polar(r, th);
            const double sd = std::sqrt(std::max(1.0, r)) * distance_to_poles(h, poles);
            if (sd < epsilon) {
                continue;
            }
            const OdeState s = state_at(sol, h, cfg);
            out.samples.push_back({h, w_algebraic(s, alpha) / (h * h), std::min(sd, 1e300)});
        }
    }
    if (out.samples.empty()) {
        throw error(errc::no_admissible_points, "no grid point is admissible");
    }
    std::sort(out.samples.begin(), out.samples.end(), [](const ClusterSample& a, const ClusterSample& b) {
        if (std::abs(a.h) != std::abs(b.h)) {
            return std::abs(a.h) < std::abs(b.h);
        }
        return std::arg(a.h) < std::arg(b.h);
    });
    const double r_lo = radii.empty() ? 0.0 : *std::min_element(radii.begin(), radii.end());
    const double r_hi = radii.empty() ? 0.0 : *std::max_element(radii.begin(), radii.end());
    for (const auto& p : poles) {
        if (std::abs(p.p) >= r_lo && std::abs(p.p) <= r_hi) {
            out.anchored.push_back({p.p, anchored_limit(p)});
        }
    }
    return out;
}

// Q(z) = a0 + a1 z + a2 z^2.
struct QModel
{
    cplx a0{}, a1{}, a2{};
    double condition = 0.0;
    cplx operator()(cplx z) const { return a0 + z * (a1 + z * a2); }
};

struct MittagLefflerValue
{
    cplx value{};
    double tail_bound = 0.0; // from n(r) ~ c r^{3/2} beyond the last supplied pole
};

// Poles beyond radius R lying on strings along `rays`, each string counting like c r^{3/2}.
struct PoleTail
{
    double radius = 0.0;
    std::vector<double> rays;
    double per_string = std::sqrt(2.0) / (3.0 * pi);

    // Leading part of the missing sum, -z * sum_{|p|>R} p^{-2}.
    cplx linear(cplx z) const
    {
        cplx acc = 0.0;
        for (const double th : rays) {
            acc += 3.0 * per_string / std::sqrt(radius) * std::polar(1.0, -2.0 * th);
        }
        return -z * acc;
    }
};

inline cplx pole_sum(const std::vector<PoleRecord>& poles, cplx z, const PoleTail* tail = nullptr)
{
    cplx acc = 0.0;
    for (const auto& p : poles) {
        acc += z / ((z - p.p) * p.p);
    }
    if (tail && tail->radius > 0) {
        acc += tail->linear(z);
    }
    return acc;
}

// Q(z) - |eta(0)|/z - sum z/((z-p)p).
inline MittagLefflerValue mittag_leffler_w(const std::vector<PoleRecord>& poles, const QModel& q, int eta0_abs, cplx z,
                                           double counting_coefficient = 0.0, const PoleTail* tail = nullptr)
{
    for (const auto& p : poles) {
        if (std::abs(z - p.p) < 1e-12 * std::max(1.0, std::abs(p.p))) {
            throw error(errc::eval_at_pole, "evaluation point is a pole");
        }
    }
    if (eta0_abs != 0 && z == cplx(0.0)) {
        throw error(errc::eval_at_pole, "evaluation point is a pole");
    }
    MittagLefflerValue out;
    out.value = q(z) - pole_sum(poles, z, tail) - (eta0_abs != 0 ? static_cast<double>(eta0_abs) / z : cplx(0.0));
    double R = 0.0;
    for (const auto& p : poles) {
        R = std::max(R, std::abs(p.p));
    }
    const double az = std::abs(z);
    if (R > az && counting_coefficient > 0) {
        // |z| * integral_R^inf (3c/2) r^{1/2} dr / (r (r - |z|))
        out.tail_bound = az * 3.0 * counting_coefficient / std::sqrt(R) * R / (R - az);
    } else if (counting_coefficient > 0) {
        out.tail_bound = 1e300;
    }
    return out;
}

// Least squares for Q on W + |eta(0)|/z + pole sum at the sample points.
inline QModel fit_q_values(const std::vector<std::pair<cplx, cplx>>& samples, const std::vector<PoleRecord>& poles,
                           int eta0_abs = 0, const PoleTail* tail = nullptr, double max_condition = 1e12)
{
    if (samples.size() < 3) {
        throw error(errc::ill_conditioned, "need at least three samples");
    }
    const std::size_t m = samples.size();
    double scale = 0.0;
    for (const auto& s : samples) {
        scale = std::max(scale, std::abs(s.first));
    }
    scale = std::max(scale, 1.0);
    // Columns in the scaled variable z/scale keep the system well balanced.
    Eigen::MatrixXcd A(m, 3);
    Eigen::VectorXcd b(m);
    for (std::size_t i = 0; i < m; ++i) {
        const cplx z = samples[i].first;
        const cplx t = z / scale;
        A(i, 0) = 1.0;
        A(i, 1) = t;
        A(i, 2) = t * t;
        b(i) = samples[i].second + pole_sum(poles, z, tail) + (eta0_abs != 0 ? static_cast<double>(eta0_abs) / z : cplx(0.0));
    }
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    const double cond = sv(2) > 0 ? sv(0) / sv(2) : 1e300;
    if (!(cond < max_condition)) {
        throw error(errc::ill_conditioned, "sample points too clustered for a quadratic fit");
    }
    const Eigen::VectorXcd x = svd.solve(b);
    QModel q;
    q.a0 = x(0);
    q.a1 = x(1) / scale;
    q.a2 = x(2) / (scale * scale);
    q.condition = cond;
    return q;
}

inline QModel fit_q(const ResolvedSolution& sol, const std::vector<PoleRecord>& poles, const std::vector<cplx>& points,
                    int eta0_abs = 0, const PoleTail* tail = nullptr, const FieldConfig& cfg = {})
{
    const cplx alpha = fit_alpha(sol);
    std::vector<std::pair<cplx, cplx>> samples;
    for (const cplx z : points) {
        samples.emplace_back(z, w_algebraic(state_at(sol, z, cfg), alpha));
    }
    return fit_q_values(samples, poles, eta0_abs, tail);
}

enum class Kind { first, second, order_three };

inline std::string to_string(Kind k)
{
    switch (k) {
    case Kind::first: return "FirstKind";
    case Kind::second: return "SecondKind";
    case Kind::order_three: return "OrderThree";
    }
    return "?";
}

struct ClassifyConfig
{
    double band = 0.05;
    double min_span = 4.0;
    std::size_t min_samples = 20;
    double spread_limit = 0.5; // larger spread of the outer samples means no single limit
};

struct KindLabel
{
    Kind kind = Kind::order_three;
    std::string evidence;
    cplx center{};     // median of the outer samples
    double spread = 0; // max minus min of |value| on the outer samples
    std::size_t outer = 0;
};

inline KindLabel classify_kind(const ClusterEstimate& c, const ClassifyConfig& cfg = {})
{
    if (c.samples.size() < cfg.min_samples) {
        throw error(errc::precondition, "classification needs at least " + std::to_string(cfg.min_samples) +
                                            " admissible samples");
    }
    double rmin = 1e300, rmax = 0;
    for (const auto& s : c.samples) {
        rmin = std::min(rmin, std::abs(s.h));
        rmax = std::max(rmax, std::abs(s.h));
    }
    if (rmax < cfg.min_span * rmin) {
        throw error(errc::precondition, "sample radii must span a factor of " + std::to_string(cfg.min_span));
    }
    std::vector<cplx> outer;
    for (const auto& s : c.samples) {
        if (std::abs(s.h) >= 0.5 * rmax) {
            outer.push_back(s.value);
        }
    }
    KindLabel out;
    out.outer = outer.size();
    std::vector<double> re, im, mag;
    double dev_first = 0, dev_second = 0;
    for (const cplx v : outer) {
        re.push_back(v.real());
        im.push_back(v.imag());
        mag.push_back(std::abs(v));
        dev_first = std::max(dev_first, std::abs(v + 0.25));
        dev_second = std::max(dev_second, std::abs(v));
    }
    auto median = [](std::vector<double> v) {
        std::sort(v.begin(), v.end());
        const std::size_t n = v.size();
        return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
    };
    out.center = cplx(median(re), median(im));
    out.spread = *std::max_element(mag.begin(), mag.end()) - *std::min_element(mag.begin(), mag.end());
    char buf[160];
    std::snprintf(buf, sizeof buf, "outer=%zu center=(%.6g,%.6g) spread=%.3g dev(-1/4)=%.3g dev(0)=%.3g", out.outer,
                  out.center.real(), out.center.imag(), out.spread, dev_first, dev_second);
    out.evidence = buf;
    if (dev_first < cfg.band) {
        out.kind = Kind::first;
        return out;
    }
    if (dev_second < cfg.band) {
        out.kind = Kind::second;
        return out;
    }
    const bool spread_out = out.spread > cfg.spread_limit;
    const bool settled_elsewhere = out.spread < 2 * cfg.band && std::abs(out.center + 0.25) > 2 * cfg.band &&
                                   std::abs(out.center) > 2 * cfg.band;
    if (spread_out || settled_elsewhere) {
        out.kind = Kind::order_three;
        return out;
    }
    throw error(errc::inconclusive, "cluster samples neither settled nor spread; widen the radii (" + out.evidence + ")");
}

} // namespace painleve

#endif
