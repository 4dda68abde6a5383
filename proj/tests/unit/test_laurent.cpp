#include <gtest/gtest.h>

#include <random>

#include <painleve/field.hpp>
#include <painleve/laurent.hpp>

#include "../oracles/oracles.hpp"

using namespace painleve;

namespace
{

struct Draw
{
    cplx p, alpha, h;
    int eta;
};

std::vector<Draw> draws(int n, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<Draw> out;
    for (int i = 0; i < n; ++i) {
        Draw d;
        d.p = cplx(10 * u(rng), 10 * u(rng));
        d.eta = u(rng) < 0 ? -1 : 1;
        d.alpha = cplx(2 * u(rng), 2 * u(rng));
        d.h = cplx(5 * u(rng), 5 * u(rng));
        out.push_back(d);
    }
    return out;
}

} // namespace

TEST(Laurent, ClosedFormLowOrderCoefficients)
{
    for (const auto& d : draws(100, 1)) {
        const LaurentExpansion ex = laurent_coefficients(d.p, d.eta, d.alpha, d.h, 8);
        const double e = d.eta;
        EXPECT_EQ(ex.coeff(-1), cplx(e));
        EXPECT_EQ(ex.coeff(0), cplx(0.0));
        EXPECT_LT(std::abs(ex.coeff(1) + e * d.p / 6.0), 1e-14 * std::abs(d.p));
        EXPECT_LT(std::abs(ex.coeff(2) + (d.alpha + e) / 4.0), 1e-14 * (1 + std::abs(d.alpha)));
        EXPECT_EQ(ex.coeff(3), d.h);
    }
}

TEST(Laurent, RecursionMatchesBruteForceSubstitution)
{
    for (const auto& d : draws(100, 2)) {
        const LaurentExpansion ex = laurent_coefficients(d.p, d.eta, d.alpha, d.h, 8);
        const auto brute = oracle::laurent_by_substitution(d.p, d.eta, d.alpha, d.h, 8);
        for (int k = -1; k <= 8; ++k) {
            const cplx b = brute[static_cast<std::size_t>(k + 1)];
            EXPECT_LT(std::abs(ex.coeff(k) - b), 1e-11 * std::max(1.0, std::abs(b))) << "order " << k;
        }
    }
}

TEST(Laurent, ResidualThroughOrderSix)
{
    for (const auto& d : draws(100, 3)) {
        EXPECT_LT(series_residual(laurent_coefficients(d.p, d.eta, d.alpha, d.h, 8)), 1e-9);
    }
}

TEST(Laurent, PerturbedCoefficientIsDetected)
{
    LaurentExpansion ex = laurent_coefficients(cplx(1.0, 2.0), 1, 0.3, cplx(0.5, -0.2), 8);
    ex.a[3] += 1e-3; // a_2
    EXPECT_GE(series_residual(ex), 1e-4);
}

TEST(Laurent, RationalSolutionIsExact)
{
    // -1/z solves II_1 with a pole at 0 and h = 0; every other coefficient vanishes.
    const LaurentExpansion ex = laurent_coefficients(0.0, -1, 1.0, 0.0, 8);
    for (int k = 0; k <= 8; ++k) {
        EXPECT_EQ(ex.coeff(k), cplx(0.0));
    }
    EXPECT_EQ(series_residual(ex), 0.0);
    EXPECT_LT(std::abs(ex.w(cplx(0.3, 0.4)) + 1.0 / cplx(0.3, 0.4)), 1e-15);
}

TEST(Laurent, WSeriesConstantTerm)
{
    for (const auto& d : draws(100, 4)) {
        const WLaurentExpansion W = w_laurent(PoleRecord{d.p, d.eta, d.h, 0.0, d.alpha, true}, 8);
        const cplx c0 = 10.0 * static_cast<double>(d.eta) * d.h - 7.0 / 36.0 * d.p * d.p;
        EXPECT_LT(std::abs(W.coeff(0) - c0), 1e-12 * std::max(1.0, std::abs(c0)));
        EXPECT_LT(std::abs(W.coeff(-1) + 1.0), 1e-14);
        EXPECT_LT(std::abs(W.coeff(1) + d.p / 3.0), 1e-12 * std::max(1.0, std::abs(d.p)));
        const cplx c2 = -0.25 * (1.0 + static_cast<double>(d.eta) * d.alpha);
        EXPECT_LT(std::abs(W.coeff(2) - c2), 1e-12);
    }
}

TEST(Laurent, WSeriesAgreesWithPointwiseW)
{
    const PoleRecord r{cplx(2.0, -1.0), 1, cplx(0.3, 0.1), 0.0, cplx(0.5, 0.0), true};
    const LaurentExpansion ex = laurent_coefficients(r, 16);
    const WLaurentExpansion W = w_laurent(r, 12);
    const cplx z = r.p + cplx(0.04, 0.03);
    const cplx w = ex.w(z), wp = ex.wp(z);
    const cplx direct = w * w * w * w + z * w * w + 2.0 * r.alpha * w - wp * wp;
    EXPECT_LT(std::abs(W.eval(z) - direct), 1e-9 * std::abs(direct));
}

TEST(Laurent, RiccatiPoleParameter)
{
    // w' = z/2 + w^2 forces h = p^2/180 at its residue -1 poles.
    const cplx p(3.0, 1.0);
    const LaurentExpansion ex = laurent_coefficients(p, -1, 0.5, p * p / 180.0, 10);
    oracle::Poly w;
    for (int k = -1; k <= 10; ++k) {
        w[k] = ex.coeff(k);
    }
    oracle::Poly d = oracle::deriv(w);
    for (const auto& [k, c] : oracle::mul(w, w)) {
        d[k] -= c;
    }
    d[0] -= p / 2.0;
    d[1] -= 0.5;
    for (int k = -2; k <= 8; ++k) {
        EXPECT_LT(std::abs(oracle::at(d, k)), 1e-12) << "order " << k;
    }
}

TEST(Laurent, FitRecoversSyntheticPole)
{
    const PoleRecord truth{cplx(4.0, 2.0), -1, cplx(0.7, -0.4), 0.0, cplx(0.5, 0.0), true};
    const LaurentExpansion ex = laurent_coefficients(truth, 16);
    std::vector<OdeState> tail;
    for (int i = 12; i >= 1; --i) {
        const cplx z = truth.p - cplx(0.6, 0.3) * (0.002 * i);
        tail.push_back({z, ex.w(z), ex.wp(z)});
    }
    const PoleRecord r = fit_pole(tail, truth.alpha);
    EXPECT_TRUE(r.accepted);
    EXPECT_EQ(r.eta, -1);
    EXPECT_LT(std::abs(r.p - truth.p), 1e-10);
    EXPECT_LT(std::abs(r.h - truth.h), 1e-5);
}

TEST(Laurent, FitOnExactRationalTail)
{
    std::vector<OdeState> tail;
    for (int i = 8; i >= 1; --i) {
        const cplx z = cplx(0.6, 0.8) * (0.01 * i);
        tail.push_back({z, -1.0 / z, 1.0 / (z * z)});
    }
    const PoleRecord r = fit_pole(tail, 1.0);
    EXPECT_TRUE(r.accepted);
    EXPECT_EQ(r.eta, -1);
    EXPECT_LT(std::abs(r.p), 1e-10);
    EXPECT_LT(std::abs(r.h), 1e-8);
}

TEST(Laurent, FitRejectsGarbage)
{
    std::vector<OdeState> tail;
    for (int i = 0; i < 10; ++i) {
        tail.push_back({cplx(i, 0.0), cplx(1e3 + 7 * i, 3.0 * i), cplx(5.0, 1.0)});
    }
    EXPECT_THROW(fit_pole(tail, 0.5), error);
}

TEST(Laurent, JumpLandsOnTheSeries)
{
    const PoleRecord r{cplx(1.0, 1.0), 1, cplx(0.2, 0.0), 0.0, cplx(0.5, 0.0), true};
    const OdeState s = jump_pole(r, cplx(0.0, 1.0));
    EXPECT_NEAR(std::abs(s.z - r.p), jump_distance(r.p), 1e-15);
    const LaurentExpansion ex = laurent_coefficients(r, 16);
    EXPECT_LT(std::abs(s.w - ex.w(s.z)), 1e-9 * std::abs(s.w));
}

TEST(Laurent, JumpRefusesUnacceptedRecord)
{
    PoleRecord r{cplx(1.0, 1.0), 1, 0.0, 1.0, 0.5, false};
    try {
        jump_pole(r, 1.0);
        FAIL();
    } catch (const error& e) {
        EXPECT_EQ(e.code(), errc::precondition);
    }
}

TEST(Laurent, JumpTooFarIsUnreliable)
{
    const PoleRecord r{cplx(1.0, 1.0), 1, cplx(50.0, 0.0), 0.0, cplx(0.5, 0.0), true};
    try {
        jump_pole(r, 1.0, JumpConfig{}, 2.0);
        FAIL();
    } catch (const error& e) {
        EXPECT_EQ(e.code(), errc::series_unreliable);
    }
}

TEST(Laurent, RefitAfterJumpIsStable)
{
    SolutionSpec s;
    s.recipe = "w1";
    const ResolvedSolution w = resolve(s);
    const TraceResult a = trace(w, w.seed, PathSpec::line(0.0, 4.0), FieldConfig{});
    ASSERT_FALSE(a.poles.empty());
    const PoleRecord first = a.poles.front();
    // Approach the same pole from above, starting on the far side of the jump.
    const OdeState top = state_at(w, first.p + cplx(0.0, 0.5));
    const TraceResult b = trace(w, top, PathSpec::line(top.z, first.p - cplx(0.0, 0.5)), FieldConfig{});
    ASSERT_EQ(b.poles.size(), 1u);
    EXPECT_LT(std::abs(b.poles[0].p - first.p), 1e-6);
    EXPECT_LT(std::abs(b.poles[0].h - first.h), 1e-6);
}

TEST(Laurent, W1ExpansionMatchesDisplay)
{
    const W1ExpansionReport r = verify_w1_expansion(1.0, 0.25, cplx(0.3, -0.2));
    EXPECT_LT(r.mismatch, 1e-8);
    EXPECT_TRUE(r.roots_solve_comparison);
    EXPECT_LT(std::abs(r.residue + 1.0), 1e-12);
}

TEST(Laurent, W1ExpansionAgainstContourIntegral)
{
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int i = 0; i < 20; ++i) {
        const cplx b(2 * u(rng), 2 * u(rng)), alpha(2 * u(rng), 2 * u(rng)), p(5 * u(rng), 5 * u(rng));
        const W1ExpansionReport r = verify_w1_expansion(b, alpha, p);
        const cplx cubic = oracle::w1_linear_by_cauchy(b, alpha, p, 0.01, 3);
        EXPECT_LT(std::abs(cubic - r.closed_form), 1e-8 * std::max(1.0, std::abs(cubic)));
        const cplx full = oracle::w1_linear_by_cauchy(b, alpha, p, 0.01);
        EXPECT_LT(std::abs(full - r.full_coefficient), 1e-8 * std::max(1.0, std::abs(full)));
    }
}

TEST(Laurent, W1ExpansionVanishingNumerator)
{
    // 48 b^5 - 4 b^2 + 12 alpha b^2 = 0 at b = 1 needs alpha = -11/3.
    const W1ExpansionReport r = verify_w1_expansion(1.0, -11.0 / 3.0, 0.0);
    EXPECT_LT(std::abs(r.closed_form), 1e-14);
    EXPECT_LT(std::abs(r.coefficient), 1e-12);
}

TEST(Laurent, W1RootsGrowLikeBSquared)
{
    const auto roots = w1_root_formula(10.0, 0.25);
    for (const cplx p : roots) {
        const double ratio = std::abs(p) / 100.0;
        EXPECT_GE(ratio, 0.1);
        EXPECT_LE(ratio, 10.0);
    }
}

TEST(Laurent, W1ExpansionDegenerateAlpha)
{
    try {
        verify_w1_expansion(1.0, -0.5, 0.0);
        FAIL();
    } catch (const error& e) {
        EXPECT_EQ(e.code(), errc::degenerate_alpha);
    }
}
