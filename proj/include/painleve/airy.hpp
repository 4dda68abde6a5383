#ifndef PAINLEVE_AIRY_HPP
#define PAINLEVE_AIRY_HPP

#include <cmath>
#include <complex>
#include <utility>
#include <vector>

#include "core.hpp"

namespace painleve
{

// Ai(0) and Ai'(0).
inline long double airy_ai0() { return 1.0L / (std::pow(3.0L, 2.0L / 3.0L) * std::tgamma(2.0L / 3.0L)); }
inline long double airy_aip0() { return -1.0L / (std::pow(3.0L, 1.0L / 3.0L) * std::tgamma(1.0L / 3.0L)); }

// Ai and Ai' from the Maclaurin series of u'' = x u. Reliable for |x| up to about 10.
inline std::pair<std::complex<long double>, std::complex<long double>> airy_series(std::complex<long double> x)
{
    // u = sum t_k x^k with t_k = t_{k-3} / (k (k-1)).
    std::vector<long double> t{airy_ai0(), airy_aip0(), 0.0L};
    for (std::size_t k = 3; k < 400; ++k) {
        t.push_back(t[k - 3] / static_cast<long double>(k * (k - 1)));
    }
    std::complex<long double> u = 0, up = 0;
    std::complex<long double> xp = 1, xp_m1 = 0;
    for (std::size_t k = 0; k < t.size(); ++k) {
        u += t[k] * xp;
        if (k >= 1) {
            up += static_cast<long double>(k) * t[k] * xp_m1;
        }
        xp_m1 = xp;
        xp *= x;
    }
    return {u, up};
}

inline long double airy_ai(long double x) { return airy_series(x).first.real(); }

// First n zeros of Ai on the negative axis, by a sign scan and bisection of the series.
inline std::vector<double> airy_zeros(std::size_t n)
{
    std::vector<double> out;
    const long double step = 0.01L;
    long double a = 0, fa = airy_ai(a);
    while (out.size() < n) {
        const long double b = a - step;
        if (b < -12.0L) {
            throw error(errc::precondition, "airy series oracle limited to |x| <= 12");
        }
        const long double fb = airy_ai(b);
        if ((fa > 0) != (fb > 0)) {
            long double lo = b, hi = a, flo = fb;
            for (int i = 0; i < 200 && hi - lo > 1e-18L; ++i) {
                const long double mid = 0.5L * (lo + hi);
                const long double fm = airy_ai(mid);
                if ((fm > 0) == (flo > 0)) {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
            }
            out.push_back(static_cast<double>(0.5L * (lo + hi)));
        }
        a = b;
        fa = fb;
    }
    return out;
}

// Coefficients d_k of Ai'/Ai ~ sum d_k x^{(1-3k)/2} for large |x| in |arg x| < pi.
inline std::vector<long double> airy_log_derivative_coefficients(std::size_t n)
{
    std::vector<long double> d{-1.0L};
    for (std::size_t k = 0; k + 1 < n; ++k) {
        long double acc = -(1.0L - 3.0L * static_cast<long double>(k)) / 2.0L * d[k];
        for (std::size_t i = 1; i <= k; ++i) {
            acc -= d[i] * d[k + 1 - i];
        }
        d.push_back(acc / (2.0L * d[0]));
    }
    return d;
}

inline std::complex<long double> airy_log_derivative_asymptotic(std::complex<long double> x)
{
    static const std::vector<long double> d = airy_log_derivative_coefficients(24);
    const std::complex<long double> sx = std::sqrt(x);
    const std::complex<long double> q = 1.0L / (x * sx);
    std::complex<long double> acc = 0, qk = 1;
    long double last = 1e300L;
    for (const long double c : d) {
        const std::complex<long double> term = c * qk;
        if (std::abs(term) > last) {
            break;
        }
        last = std::abs(term);
        acc += term;
        qk *= q;
    }
    return acc * sx;
}

} // namespace painleve

#endif
