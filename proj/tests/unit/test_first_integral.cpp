#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include <painleve/first_integral.hpp>

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

ClusterEstimate synthetic(const std::function<cplx(double, int)>& value)
{
    ClusterEstimate c;
    for (int i = 0; i < 6; ++i) {
        const double r = 10.0 * std::pow(1.5, i);
        for (int k = 0; k < 5; ++k) {
            c.samples.push_back({std::polar(r, -2.0 + k), value(r, k), 1.0});
        }
    }
    return c;
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

TEST(FirstIntegral, DerivativeIsWSquared)
{
    const ResolvedSolution w = recipe("w1");
    for (const cplx z : {cplx(0.7, 0.4), cplx(-3.0, 1.5), cplx(2.0, -2.0)}) {
        auto W = [&](cplx x) { return w_algebraic(state_at(w, x), 0.5); };
        const cplx wz = state_at(w, z).w;
        EXPECT_LT(std::abs(oracle::central_diff(W, z, 1e-3) - wz * wz), 1e-8 * (1 + std::abs(wz * wz)));
    }
}

TEST(FirstIntegral, GenericSolutionDerivative)
{
    SolutionSpec s;
    s.alpha = cplx(0.3, -0.2);
    s.initial = OdeState{0.0, cplx(0.1, 0.2), cplx(-0.3, 0.05)};
    const ResolvedSolution w = resolve(s);
    const cplx z(0.5, 0.5);
    auto W = [&](cplx x) { return w_algebraic(state_at(w, x), s.alpha); };
    const cplx wz = state_at(w, z).w;
    EXPECT_LT(std::abs(oracle::central_diff(W, z, 1e-3) - wz * wz), 1e-8);
}

TEST(FirstIntegral, RationalIsMinusOneOverZ)
{
    const ResolvedSolution w = recipe("rational", 1.0);
    const ClusterEstimate c = cluster_estimate(w, {}, {10.0, 40.0}, {0.3, 2.0}, 0.5);
    ASSERT_EQ(c.samples.size(), 4u);
    for (const auto& s : c.samples) {
        EXPECT_LT(std::abs(s.value + 1.0 / (s.h * s.h * s.h)), 1e-12);
    }
}

TEST(FirstIntegral, ClusterNeedsAdmissiblePoints)
{
    const std::vector<PoleRecord> poles{{cplx(10.0, 0.0), -1, 0.0, 0.0, 0.5, true}};
    EXPECT_EQ(code_of([&] { cluster_estimate(recipe("w1"), poles, {10.0}, {0.0}, 0.5); }),
              errc::no_admissible_points);
}

TEST(FirstIntegral, AnchoredLimitOfRiccatiPoles)
{
    // h = p^2/180 with residue -1 gives exactly -1.
    const PoleRecord p{cplx(30.0, 4.0), -1, cplx(30.0, 4.0) * cplx(30.0, 4.0) / 180.0, 0.0, 0.5, true};
    EXPECT_LT(std::abs(anchored_limit(p) + 1.0), 1e-15);
}

TEST(FirstIntegral, MittagLefflerOfRational)
{
    const MittagLefflerValue v = mittag_leffler_w({}, QModel{}, 1, cplx(2.0, 1.0));
    EXPECT_LT(std::abs(v.value + 1.0 / cplx(2.0, 1.0)), 1e-15);
    EXPECT_EQ(code_of([&] { mittag_leffler_w({}, QModel{}, 1, 0.0); }), errc::eval_at_pole);
}

TEST(FirstIntegral, QFitRecoversSyntheticQuadratic)
{
    const std::vector<PoleRecord> poles{{cplx(3.0, 1.0), -1, 0.0, 0.0, 0.5, true},
                                        {cplx(-2.0, 4.0), 1, 0.0, 0.0, 0.5, true}};
    const cplx a0(0.3, -0.1), a1(0.02, 0.01), a2(-0.25, 0.0);
    auto W = [&](cplx z) {
        cplx v = a0 + a1 * z + a2 * z * z;
        for (const auto& p : poles) {
            v -= 1.0 / (z - p.p) + 1.0 / p.p;
        }
        return v;
    };
    std::vector<std::pair<cplx, cplx>> samples;
    for (int i = 0; i < 12; ++i) {
        const cplx z = std::polar(5.0 + i, 0.7 * i);
        samples.emplace_back(z, W(z));
    }
    const QModel q = fit_q_values(samples, poles);
    EXPECT_LT(std::abs(q.a0 - a0), 1e-10);
    EXPECT_LT(std::abs(q.a1 - a1), 1e-11);
    EXPECT_LT(std::abs(q.a2 - a2), 1e-12);

    const MittagLefflerValue v = mittag_leffler_w(poles, q, 0, cplx(1.0, 1.0));
    EXPECT_LT(std::abs(v.value - W(cplx(1.0, 1.0))), 1e-10);

    std::mt19937 rng(3);
    std::shuffle(samples.begin(), samples.end(), rng);
    const QModel r = fit_q_values(samples, poles);
    EXPECT_LT(std::abs(r.a2 - q.a2), 1e-13);
    EXPECT_LT(std::abs(r.a1 - q.a1), 1e-12);
}

TEST(FirstIntegral, QFitRejectsClusteredSamples)
{
    std::vector<std::pair<cplx, cplx>> same(5, {cplx(4.0, 1.0), cplx(1.0)});
    EXPECT_EQ(code_of([&] { fit_q_values(same, {}); }), errc::ill_conditioned);
    std::vector<std::pair<cplx, cplx>> two{{1.0, 1.0}, {2.0, 1.0}};
    EXPECT_EQ(code_of([&] { fit_q_values(two, {}); }), errc::ill_conditioned);
}

TEST(FirstIntegral, ClassifySynthetic)
{
    EXPECT_EQ(classify_kind(synthetic([](double r, int) { return cplx(-0.25 + 0.3 / r, 0.0); })).kind, Kind::first);
    EXPECT_EQ(classify_kind(synthetic([](double r, int k) { return std::polar(0.2 / r, 1.0 * k); })).kind,
              Kind::second);
    EXPECT_EQ(classify_kind(synthetic([](double, int k) { return cplx(0.4 * k - 0.8, 0.1); })).kind,
              Kind::order_three);
    EXPECT_EQ(classify_kind(synthetic([](double, int) { return cplx(0.5, 0.0); })).kind, Kind::order_three);
}

TEST(FirstIntegral, ClassifyInconclusive)
{
    // Between the two bands with a moderate spread.
    const ClusterEstimate c = synthetic([](double, int k) { return cplx(-0.12 + 0.02 * k, 0.0); });
    EXPECT_EQ(code_of([&] { classify_kind(c); }), errc::inconclusive);
}

TEST(FirstIntegral, ClassifyPreconditions)
{
    ClusterEstimate few = synthetic([](double, int) { return cplx(0.0); });
    few.samples.resize(10);
    EXPECT_EQ(code_of([&] { classify_kind(few); }), errc::precondition);
    ClusterEstimate narrow;
    for (int i = 0; i < 25; ++i) {
        narrow.samples.push_back({std::polar(10.0 + 0.1 * i, 0.1 * i), 0.0, 1.0});
    }
    EXPECT_EQ(code_of([&] { classify_kind(narrow); }), errc::precondition);
}

TEST(FirstIntegral, W1AlongNegativeAxis)
{
    // W/z^2 -> -1/4 on the pole-free side.
    const ResolvedSolution w = recipe("w1");
    const cplx z = -100.0;
    EXPECT_NEAR((w_algebraic(state_at(w, z), 0.5) / (z * z)).real(), -0.25, 0.01);
}
