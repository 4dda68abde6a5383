#include <gtest/gtest.h>

#include <painleve/field.hpp>
#include <painleve/transforms.hpp>

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

cplx p2_defect(const std::function<OdeState(cplx)>& f, cplx z, cplx alpha)
{
    const OdeState s = f(z);
    const cplx wpp = oracle::central_diff([&](cplx x) { return f(x).wp; }, z, 1e-3);
    return wpp - (alpha + z * s.w + 2.0 * s.w * s.w * s.w);
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

TEST(Transforms, UpImageSolvesShiftedEquation)
{
    const ResolvedSolution w = recipe("w1");
    for (const cplx z : {cplx(0.5, 0.5), cplx(-2.0, 1.0), cplx(3.0, -3.0)}) {
        auto f = [&](cplx x) { return bt_up(state_at(w, x), 0.5).first; };
        EXPECT_LT(std::abs(p2_defect(f, z, 1.5)), 1e-7);
    }
}

TEST(Transforms, DownImageSolvesShiftedEquation)
{
    SolutionSpec s;
    s.alpha = cplx(0.3, 0.1);
    s.initial = OdeState{0.0, 0.2, -0.1};
    const ResolvedSolution w = resolve(s);
    for (const cplx z : {cplx(0.4, 0.2), cplx(-0.6, 0.3)}) {
        auto f = [&](cplx x) { return bt_down(state_at(w, x), s.alpha).first; };
        EXPECT_LT(std::abs(p2_defect(f, z, s.alpha - 1.0)), 1e-7);
    }
}

TEST(Transforms, RoundTrip)
{
    const OdeState s{cplx(0.3, 0.7), cplx(1.2, -0.4), cplx(-0.5, 0.9)};
    const cplx a(0.2, 0.1);
    const auto up = bt_up(s, a);
    EXPECT_LT(std::abs(up.second - (a + 1.0)), 1e-15);
    const auto back = bt_down(up.first, up.second);
    EXPECT_LT(std::abs(back.first.w - s.w), 1e-12);
    EXPECT_LT(std::abs(back.first.wp - s.wp), 1e-12);
    EXPECT_LT(std::abs(back.second - a), 1e-15);
}

TEST(Transforms, RationalLadder)
{
    // -1/z (alpha = 1) goes to 1/z - 3 z^2/(z^3 + 4) (alpha = 2).
    for (const cplx z : {cplx(1.0, 0.5), cplx(-2.0, 0.3), cplx(0.4, -1.1)}) {
        const auto r = bt_up(OdeState{z, -1.0 / z, 1.0 / (z * z)}, 1.0);
        const cplx d = z * z * z + 4.0;
        EXPECT_LT(std::abs(r.first.w - (1.0 / z - 3.0 * z * z / d)), 1e-13);
        const cplx wp = -1.0 / (z * z) - (6.0 * z * d - 9.0 * z * z * z * z) / (d * d);
        EXPECT_LT(std::abs(r.first.wp - wp), 1e-12);
        EXPECT_EQ(r.second, cplx(2.0));
    }
}

TEST(Transforms, VanishingVIsReported)
{
    const cplx z(1.0, 1.0), w(0.5, 0.0);
    const OdeState s{z, w, -w * w - z / 2.0};
    EXPECT_EQ(code_of([&] { bt_up(s, 0.25); }), errc::v_zero);
    const OdeState t{z, w, w * w + z / 2.0};
    EXPECT_EQ(code_of([&] { bt_down(t, 0.25); }), errc::v_zero);
}

TEST(Transforms, DegenerateShiftIsReflection)
{
    const OdeState s{cplx(1.0, 0.0), cplx(0.3, 0.2), cplx(-0.1, 0.4)};
    const auto r = bt_up(s, -0.5);
    EXPECT_EQ(r.first.w, -s.w);
    EXPECT_EQ(r.second, cplx(0.5));
}

TEST(Transforms, Reflection)
{
    const OdeState s{cplx(1.0, 2.0), cplx(0.3, 0.2), cplx(-0.1, 0.4)};
    const auto r = bt_reflect(s, cplx(0.7, 0.1));
    EXPECT_EQ(r.first.w, -s.w);
    EXPECT_EQ(r.first.wp, -s.wp);
    EXPECT_EQ(r.second, cplx(-0.7, -0.1));
}

TEST(Transforms, RotationOfW1GivesW2)
{
    const ResolvedSolution w1 = recipe("w1");
    const ResolvedSolution w2 = recipe("w2");
    const ResolvedSolution r = bt_rotate(w1, omega);
    EXPECT_EQ(r.distinguished, 2);
    EXPECT_LT(std::abs(r.seed.w - w2.seed.w), 1e-15);
    const cplx z(1.0, 2.0);
    EXPECT_LT(std::abs(state_at(w2, z).w - omega * state_at(w1, omega * z).w), 1e-10);
}

TEST(Transforms, RotationNeedsCubeRoot)
{
    const ResolvedSolution w1 = recipe("w1");
    EXPECT_EQ(code_of([&] { bt_rotate(w1, cplx(0.0, 1.0)); }), errc::invalid_argument);
    SolutionSpec bare;
    bare.recipe = "w1";
    EXPECT_EQ(code_of([&] { bt_rotate(bare, omega); }), errc::precondition);
}

TEST(Transforms, SpecialForwardPreconditions)
{
    SolutionSpec y;
    y.alpha = 0.3;
    y.initial = OdeState{0.0, 1.0, 0.0};
    EXPECT_EQ(code_of([&] { special_forward(y); }), errc::precondition);
    y.alpha = 0.0;
    y.initial = OdeState{0.0, 0.0, 0.0};
    EXPECT_EQ(code_of([&] { special_forward(y); }), errc::precondition);
    y.initial = OdeState{0.0, 0.0, 1.0};
    EXPECT_EQ(code_of([&] { special_forward(y); }), errc::seed_at_zero_of_y);
    y.initial.reset();
    EXPECT_EQ(code_of([&] { special_forward(y); }), errc::precondition);
}

TEST(Transforms, SpecialForwardSeed)
{
    SolutionSpec y;
    y.alpha = 0.0;
    y.initial = OdeState{cplx(0.2, 0.1), 0.5, 0.25};
    const SolutionSpec w = special_forward(y);
    EXPECT_EQ(w.alpha, cplx(0.5));
    const double c = std::pow(2.0, -1.0 / 3.0);
    EXPECT_LT(std::abs(w.initial->z + y.initial->z / c), 1e-15);
    EXPECT_LT(std::abs(w.initial->w - c * 0.5), 1e-15);
}

TEST(Transforms, SpecialInverseOfAiryIsZero)
{
    SolutionSpec s;
    s.alpha = 0.5;
    s.recipe = "w1";
    EXPECT_EQ(code_of([&] { special_inverse(s); }), errc::identically_zero);
    s.recipe.clear();
    s.initial = w1_seed();
    EXPECT_EQ(code_of([&] { special_inverse(s); }), errc::identically_zero);
    s.alpha = 0.25;
    EXPECT_EQ(code_of([&] { special_inverse(s); }), errc::precondition);
}

TEST(Transforms, SpecialRoundTripAtSeed)
{
    SolutionSpec y;
    y.alpha = 0.0;
    y.initial = OdeState{0.0, 0.5, 0.25};
    const SpecialInverse inv = special_inverse(special_forward(y));
    EXPECT_GT(inv.max_defect, 1e-8);
    EXPECT_LT(std::abs(inv.y_squared(inv.w.seed) - 0.25), 1e-14);
}

TEST(Transforms, Recipes)
{
    const ResolvedSolution w1 = recipe("w1");
    EXPECT_EQ(w1.kind, engine::riccati);
    EXPECT_EQ(w1.distinguished, 1);
    // w1(0) = 2^{-1/3} Ai'(0)/Ai(0) = -2^{-1/3} 3^{1/3} Gamma(2/3)/Gamma(1/3)
    const double expect = -std::cbrt(3.0 / 2.0) * std::tgamma(2.0 / 3.0) / std::tgamma(1.0 / 3.0);
    EXPECT_NEAR(w1.seed.w.real(), expect, 1e-15);
    EXPECT_EQ(recipe("w3").distinguished, 3);
    EXPECT_EQ(recipe("riccati-", -0.5).sign, -1);
    const ResolvedSolution r = recipe("rational", 1.0);
    EXPECT_EQ(r.kind, engine::rational);
    const ResolvedSolution rm = recipe("rational", -1.0);
    EXPECT_EQ(rm.seed.w, cplx(1.0));
    EXPECT_EQ(code_of([&] { recipe("rational", 2.0); }), errc::invalid_argument);
    EXPECT_EQ(code_of([&] { recipe("w7"); }), errc::invalid_argument);
    SolutionSpec none;
    EXPECT_EQ(code_of([&] { resolve(none); }), errc::invalid_argument);
}

TEST(Transforms, AiryFamilyChain)
{
    const ResolvedSolution w1 = recipe("w1");
    const auto fam = airy_family(3.5, w1);
    ASSERT_EQ(fam.size(), 4u);
    EXPECT_EQ(fam.back().alpha, cplx(3.5));
    EXPECT_EQ(fam.back().chain.size(), 3u);
    ASSERT_TRUE(fam.back().base);
    EXPECT_EQ(fam.back().base->kind, engine::riccati);
    EXPECT_EQ(code_of([&] { airy_family(0.7, w1); }), errc::precondition);
    const auto down = airy_family(-1.5, w1);
    EXPECT_EQ(down.size(), 3u);
}

TEST(Transforms, ChainImageMatchesDirectIntegration)
{
    const ResolvedSolution img = recipe("w1", 1.5);
    SolutionSpec direct;
    direct.alpha = 1.5;
    direct.initial = img.seed;
    const ResolvedSolution d = resolve(direct);
    const cplx z(0.8, 0.6);
    EXPECT_LT(std::abs(state_at(img, z).w - state_at(d, z).w), 1e-9);
}

TEST(Transforms, ResidueMapViolations)
{
    const std::vector<PoleRecord> w{{cplx(10.0, 0.0), -1, 0.0, 0.0, 0.5, true},
                                    {cplx(12.0, 0.0), 1, 0.0, 0.0, 0.5, true}};
    const std::vector<cplx> vz{cplx(12.0, 0.0), cplx(14.0, 0.0)};
    const std::vector<PoleRecord> good{{cplx(10.0, 0.0), 1, 0.0, 0.0, 1.5, true},
                                       {cplx(14.0, 0.0), -1, 0.0, 0.0, 1.5, true}};
    const ResidueMapReport ok = residue_map_check(w, good, vz);
    EXPECT_TRUE(ok.ok());
    EXPECT_EQ(ok.checked_i, 1u);
    EXPECT_EQ(ok.checked_ii, 1u);
    EXPECT_EQ(ok.checked_iii, 1u);

    auto wrong = good;
    wrong[0].eta = -1;
    EXPECT_FALSE(residue_map_check(w, wrong, vz).ok());
    auto extra = good;
    extra.push_back({cplx(20.0, 0.0), 1, 0.0, 0.0, 1.5, true});
    EXPECT_EQ(residue_map_check(w, extra, vz).violations.size(), 1u);
    EXPECT_FALSE(residue_map_check(w, good, {cplx(14.0, 0.0)}).ok());
}
