#ifndef PAINLEVE_SERIES_HPP
#define PAINLEVE_SERIES_HPP

#include <algorithm>
#include <cstddef>
#include <vector>

#include "core.hpp"

namespace painleve
{

// Truncated Laurent series sum_{k=lo}^{lo+n-1} c[k-lo] e^k in a local variable e.
// Arithmetic truncates to the shorter valid range, so products are exact through
// the last order both operands determine.
class Series
{
public:
    Series() = default;
    Series(int lowest, std::vector<cplx> coeffs) : lo_(lowest), c_(std::move(coeffs)) {}

    static Series constant(cplx v, int highest)
    {
        std::vector<cplx> c(static_cast<std::size_t>(highest + 1));
        c[0] = v;
        return Series(0, std::move(c));
    }

    // e itself, shifted: a + e through order `highest`.
    static Series affine(cplx a, int highest)
    {
        std::vector<cplx> c(static_cast<std::size_t>(highest + 1));
        c[0] = a;
        if (highest >= 1) {
            c[1] = 1.0;
        }
        return Series(0, std::move(c));
    }

    int lowest() const { return lo_; }
    // Highest order whose coefficient is known.
    int highest() const { return lo_ + static_cast<int>(c_.size()) - 1; }
    std::size_t size() const { return c_.size(); }

    cplx operator[](int k) const
    {
        if (k < lo_ || k > highest()) {
            return 0.0;
        }
        return c_[static_cast<std::size_t>(k - lo_)];
    }

    cplx& at(int k) { return c_.at(static_cast<std::size_t>(k - lo_)); }

    const std::vector<cplx>& coefficients() const { return c_; }

    Series truncated(int highest_order) const
    {
        if (highest_order >= highest()) {
            return *this;
        }
        std::vector<cplx> c(c_.begin(), c_.begin() + (highest_order - lo_ + 1));
        return Series(lo_, std::move(c));
    }

    cplx eval(cplx e) const
    {
        cplx acc = 0.0;
        for (int k = highest(); k >= lo_; --k) {
            acc = acc * e + (*this)[k];
        }
        return acc * std::pow(e, lo_);
    }

    Series derivative() const
    {
        std::vector<cplx> c;
        int new_lo = lo_ - 1;
        for (int k = lo_; k <= highest(); ++k) {
            c.push_back(static_cast<double>(k) * (*this)[k]);
        }
        if (lo_ == 0 && !c.empty()) {
            c.erase(c.begin());
            new_lo = 0;
        }
        return Series(new_lo, std::move(c));
    }

    friend Series operator+(const Series& a, const Series& b)
    {
        const int lo = std::min(a.lo_, b.lo_);
        const int hi = std::min(a.highest(), b.highest());
        std::vector<cplx> c;
        for (int k = lo; k <= hi; ++k) {
            c.push_back(a[k] + b[k]);
        }
        return Series(lo, std::move(c));
    }

    friend Series operator-(const Series& a, const Series& b) { return a + (-1.0) * b; }

    friend Series operator*(cplx s, const Series& a)
    {
        Series r = a;
        for (auto& v : r.c_) {
            v *= s;
        }
        return r;
    }

    friend Series operator*(const Series& a, const Series& b)
    {
        const int lo = a.lo_ + b.lo_;
        // a known through a.hi, b through b.hi; product known through
        // min(a.hi + b.lo, b.hi + a.lo).
        const int hi = std::min(a.highest() + b.lo_, b.highest() + a.lo_);
        std::vector<cplx> c;
        for (int k = lo; k <= hi; ++k) {
            cplx acc = 0.0;
            for (int i = a.lo_; i <= a.highest(); ++i) {
                const int j = k - i;
                if (j < b.lo_ || j > b.highest()) {
                    continue;
                }
                acc += a[i] * b[j];
            }
            c.push_back(acc);
        }
        return Series(lo, std::move(c));
    }

    // 1/a for a series with a nonzero leading coefficient.
    Series reciprocal() const
    {
        int first = lo_;
        while (first <= highest() && (*this)[first] == cplx(0.0)) {
            ++first;
        }
        if (first > highest()) {
            throw error(errc::invalid_argument, "reciprocal of a zero series");
        }
        const int n = highest() - first + 1;
        const cplx lead = (*this)[first];
        std::vector<cplx> r(static_cast<std::size_t>(n));
        r[0] = 1.0 / lead;
        for (int k = 1; k < n; ++k) {
            cplx acc = 0.0;
            for (int i = 1; i <= k; ++i) {
                acc += (*this)[first + i] * r[static_cast<std::size_t>(k - i)];
            }
            r[static_cast<std::size_t>(k)] = -acc / lead;
        }
        return Series(-first, std::move(r));
    }

private:
    int lo_ = 0;
    std::vector<cplx> c_;
};

} // namespace painleve

#endif
