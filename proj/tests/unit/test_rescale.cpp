#include <gtest/gtest.h>

#include <painleve/rescale.hpp>

#include "../oracles/oracles.hpp"

using namespace painleve;

namespace
{

ResolvedSolution recipe(const std::string& name, cplx alpha = 0.5)
{
    SolutionSpec s;
    s.recipe = name;
    s.alpha = alpha;
    return resolve(s);
}

template <class F>
errc code_of(F f)
{
    try {
        f();
    } catch (const error& e) {
        return e.code();
    }
    ADD_FAILURE() << "no error raised";
    return errc::invalid_argument;
}

} // namespace

TEST(Rescale, RationalWindowFlattens)
{
    RescaleWindow win = rescale_window(recipe("rational", 1.0), 40.0, 2.0, 2.0);
    ASSERT_EQ(win.grid.size(), win.w.size());
    for (std::size_t i = 0; i < win.grid.size(); ++i) {
        const cplx z = rescale_point(40.0, win.grid[i]);
        EXPECT_LT(std::abs(win.w[i] + 1.0 / (z * std::sqrt(40.0))), 1e-12);
    }
    EXPECT_TRUE(win.poles.empty());
    // c = -h^{-1} z^{-2} + O(h^{-4}) here, so about -h^{-3}.
    EXPECT_NEAR(limit_invariant(win).first.real(), -std::pow(40.0, -3.0), 2e-6);
}

TEST(Rescale, W1PolesAreEvenlySpaced)
{
    const double p = oracle::w1_pole(9);
    RescaleWindow win = rescale_window(recipe("w1"), p, 6.0, 2.0);
    ASSERT_GE(win.poles.size(), 3u);
    std::vector<double> xs;
    for (const cplx q : win.poles) {
        EXPECT_LT(std::abs(q.imag()), 1e-6);
        xs.push_back(q.real());
    }
    std::sort(xs.begin(), xs.end());
    for (std::size_t i = 1; i < xs.size(); ++i) {
        EXPECT_NEAR(xs[i] - xs[i - 1], sqrt2 * pi, 0.1);
    }
    const auto [c, spread] = limit_invariant(win);
    EXPECT_NEAR(c.real(), 0.25, 0.02);
}

TEST(Rescale, ConjugateWindowsMirror)
{
    const ResolvedSolution w = recipe("w1");
    const cplx h(12.0, 6.0);
    const RescaleWindow a = rescale_window(w, h, 1.5, 2.0);
    const RescaleWindow b = rescale_window(w, std::conj(h), 1.5, 2.0);
    ASSERT_EQ(a.grid.size(), b.grid.size());
    std::size_t compared = 0;
    for (std::size_t i = 0; i < a.grid.size(); ++i) {
        for (std::size_t j = 0; j < b.grid.size(); ++j) {
            if (std::abs(b.grid[j] - std::conj(a.grid[i])) < 1e-12 && a.valid[i] && b.valid[j]) {
                EXPECT_LT(std::abs(b.w[j] - std::conj(a.w[i])), 1e-8 * (1 + std::abs(a.w[i])));
                ++compared;
            }
        }
    }
    EXPECT_GT(compared, 10u);
}

TEST(Rescale, SyntheticTangentWindow)
{
    const cplx tau(0.3, 0.2);
    auto f = [&](cplx Z) { return trig_limit(TrigFamily::first, 1, tau, Z); };
    auto fp = [&](cplx Z) {
        const cplx t = std::tan(Z / sqrt2 + tau);
        return (1.0 + t * t) / 2.0;
    };
    std::vector<cplx> poles;
    for (int k = -3; k <= 3; ++k) {
        poles.push_back(sqrt2 * (pi / 2 + k * pi - tau));
    }
    RescaleWindow win = synthetic_window(f, fp, poles, 3.0, 4.0);
    EXPECT_NEAR(limit_invariant(win).first.real(), 0.25, 1e-9);
    const TrigFit t = match_trig_limit(win, TrigFamily::first);
    EXPECT_LT(t.sup_deviation, 1e-8);
    EXPECT_GT(match_trig_limit(win, TrigFamily::second).sup_deviation, 0.1);
}

TEST(Rescale, SyntheticSineWindow)
{
    const cplx tau(0.4, 0.0);
    const cplx i(0.0, 1.0);
    auto f = [&](cplx Z) { return trig_limit(TrigFamily::second, 1, tau, Z); };
    auto fp = [&](cplx Z) {
        const cplx s = std::sin(i * Z + tau);
        return std::cos(i * Z + tau) / (s * s);
    };
    std::vector<cplx> poles;
    for (int k = -2; k <= 2; ++k) {
        poles.push_back(-i * (k * pi - tau));
    }
    RescaleWindow win = synthetic_window(f, fp, poles, 3.0, 4.0);
    EXPECT_LT(std::abs(limit_invariant(win).first), 1e-9);
    EXPECT_LT(match_trig_limit(win, TrigFamily::second).sup_deviation, 1e-8);
}

TEST(Rescale, SmallBaseIsRejected)
{
    EXPECT_EQ(code_of([] { rescale_window(recipe("w1"), cplx(0.5, 0.5)); }), errc::precondition);
    EXPECT_EQ(code_of([] { rescale_window(recipe("w1"), 10.0, -1.0); }), errc::invalid_argument);
}

TEST(Rescale, TooFewSamples)
{
    auto f = [](cplx) { return cplx(0.0); };
    RescaleWindow win = synthetic_window(f, f, {0.0}, 0.5, 2.0);
    EXPECT_EQ(code_of([&] { limit_invariant(win, 10.0); }), errc::too_few_samples);
    EXPECT_EQ(code_of([&] { match_trig_limit(win, TrigFamily::first, 10.0); }), errc::fit_diverged);
}

TEST(Rescale, GridIsSymmetric)
{
    const auto g = window_grid(2.0, 3.0);
    for (const cplx Z : g) {
        EXPECT_LE(std::abs(Z), 2.0 + 1e-12);
        EXPECT_NE(std::find_if(g.begin(), g.end(), [&](cplx Y) { return std::abs(Y + Z) < 1e-12; }), g.end());
    }
}
