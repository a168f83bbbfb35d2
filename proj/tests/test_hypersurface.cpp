#include <cmath>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "capillary_lab/hypersurface.hpp"
#include "capillary_lab/surfaces.hpp"

using namespace capillary_lab;
using std::numbers::pi;

namespace {

ParametricPatch<2> without_jet(ParametricPatch<2> p)
{
    p.analytic_jet = nullptr;
    return p;
}

std::vector<ParametricPatch<2>> builder_patches()
{
    return {surfaces::sphere<2>(1.0), surfaces::hemisphere<2>(1.0), surfaces::torus(2.0, 1.0),
            surfaces::cylinder(2.0, 1.5), surfaces::ellipsoid(1.5, 1.2, 1.0)};
}

}  // namespace

TEST(Curvature, UnitSphereOutwardHasMinusOne)
{
    const auto s = surfaces::sphere<2>(1.0);
    for (auto u : {num::Param<2>(0.4, 1.0), num::Param<2>(2.0, 5.0), num::Param<2>(pi / 2, 0.1)}) {
        const auto cd = curvature_at(s, u);
        EXPECT_NEAR(cd.principal_curvatures[0], -1.0, 1e-12);
        EXPECT_NEAR(cd.principal_curvatures[1], -1.0, 1e-12);
        EXPECT_NEAR(cd.mean_curvature, -1.0, 1e-12);
        EXPECT_NEAR(cd.gauss.norm(), 1.0, 1e-12);
        EXPECT_GT(cd.gauss.dot(cd.position), 0.0);
    }
}

TEST(Curvature, CylinderHasFlatRuling)
{
    const auto c = surfaces::cylinder(2.0, 1.0);
    const auto cd = curvature_at(c, num::Param<2>(0.7, 0.5));
    EXPECT_NEAR(cd.principal_curvatures[0], -0.5, 1e-12);
    EXPECT_NEAR(cd.principal_curvatures[1], 0.0, 1e-12);
}

TEST(Curvature, TorusOuterEquator)
{
    // k = −1/r along the tube and −cos v/(R + r cos v) around the axis.
    const auto t = surfaces::torus(2.0, 1.0);
    const auto cd = curvature_at(t, num::Param<2>(0.3, 0.0));
    EXPECT_NEAR(cd.principal_curvatures[0], -1.0, 1e-8);
    EXPECT_NEAR(cd.principal_curvatures[1], -1.0 / 3.0, 1e-8);
}

TEST(Curvature, FiniteDifferenceFallbackAgreesWithAnalyticJet)
{
    const auto s = without_jet(surfaces::sphere<2>(2.0));
    const auto cd = curvature_at(s, num::Param<2>(1.1, 2.2));
    EXPECT_NEAR(cd.principal_curvatures[0], -0.5, 1e-6);
    EXPECT_NEAR(cd.principal_curvatures[1], -0.5, 1e-6);
}

TEST(Curvature, DegenerateImmersionIsReported)
{
    ParametricPatch<2> p;
    p.box = {num::Interval{0, 1}, num::Interval{0, 1}};
    p.position = [](const num::Param<2>& u) { return Vec<2>(u[0], u[0], 0.0); };
    EXPECT_THROW(curvature_at(p, num::Param<2>(0.5, 0.5)), DegenerateImmersion);
}

TEST(Curvature, PlanarCurvesUseOutwardConvention)
{
    const auto c = surfaces::circle(2.0);
    const auto cd = curvature_at(c, num::Param<1>(0.4));
    EXPECT_NEAR(cd.principal_curvatures[0], -0.5, 1e-12);
    EXPECT_GT(cd.gauss.dot(cd.position), 0.0);
    EXPECT_NEAR(curvature_integral(c, 1), 2 * pi, 1e-12);  // a₁ = −∫k ds
}

TEST(Area, ClosedForms)
{
    EXPECT_NEAR(area(surfaces::sphere<2>(1.0)), 4 * pi, 1e-8);
    EXPECT_NEAR(area(surfaces::hemisphere<2>(1.0)), 2 * pi, 1e-8);
    EXPECT_NEAR(area(surfaces::torus(2.0, 1.0)), 8 * pi * pi, 1e-8);
}

TEST(Area, ThreeSphere)
{
    // |S³| = 2π² r³.
    EXPECT_NEAR(area(surfaces::sphere<3>(1.0), 24), 2 * pi * pi, 1e-8);
}

TEST(OrientedVolume, Sphere)
{
    const auto s = surfaces::sphere<2>(1.0);
    EXPECT_NEAR(oriented_volume(s), 4 * pi / 3, 1e-8);
    EXPECT_NEAR(oriented_volume(s.flipped()), -4 * pi / 3, 1e-8);
}

TEST(OrientedVolume, HemisphereClosedByDiskThroughOrigin)
{
    const std::vector<ParametricPatch<2>> closed{surfaces::hemisphere<2>(1.0),
                                                 surfaces::flat_disk(1.0, 0.0, false)};
    EXPECT_NEAR(oriented_volume(closed[1]), 0.0, 1e-15);
    EXPECT_NEAR(oriented_volume<2>(closed), 2 * pi / 3, 1e-8);
}

TEST(OrientedVolume, BallInR4)
{
    // |B⁴| = π²/2.
    EXPECT_NEAR(oriented_volume(surfaces::sphere<3>(1.0), 24), pi * pi / 2, 1e-8);
}

TEST(GaussMapIntegral, VanishesOnClosedSurfaces)
{
    const std::vector<ParametricPatch<2>> sphere{surfaces::sphere<2>(1.0)};
    EXPECT_LT(gauss_map_integral<2>(sphere).cwiseAbs().maxCoeff(), 1e-10);

    const std::vector<ParametricPatch<2>> torus{surfaces::torus(2.0, 1.0)};
    EXPECT_LT(gauss_map_integral<2>(torus).cwiseAbs().maxCoeff(), 1e-8);

    const std::vector<ParametricPatch<2>> capped{surfaces::hemisphere<2>(1.0),
                                                 surfaces::flat_disk(1.0, 0.0, false)};
    EXPECT_LT(gauss_map_integral<2>(capped).cwiseAbs().maxCoeff(), 1e-8);

    // The open hemisphere alone has ∫ν = (0, 0, π).
    const std::vector<ParametricPatch<2>> open{surfaces::hemisphere<2>(1.0)};
    EXPECT_NEAR(gauss_map_integral<2>(open)[2], pi, 1e-8);
}

TEST(CurvatureIntegral, UnitSphere)
{
    const auto s = surfaces::sphere<2>(1.0);
    EXPECT_NEAR(curvature_integral(s, 0), 4 * pi, 1e-8);
    EXPECT_NEAR(curvature_integral(s, 1), 8 * pi, 1e-8);
    EXPECT_NEAR(curvature_integral(s, 2), 4 * pi, 1e-8);
    EXPECT_THROW(curvature_integral(s, 3), ParameterError);
}

TEST(CurvatureIntegral, FlatDiskAndTorus)
{
    EXPECT_NEAR(curvature_integral(surfaces::flat_disk(1.0), 1), 0.0, 1e-14);
    EXPECT_NEAR(curvature_integral(surfaces::torus(2.0, 1.0), 2), 0.0, 1e-8);
}

TEST(CurvatureIntegral, JordanCurvesTurnByMinusTwoPi)
{
    // a₁ = −∫k ds, so ∫k ds = −a₁.
    EXPECT_NEAR(-curvature_integral(surfaces::circle(0.7), 1), -2 * pi, 1e-8);
    EXPECT_NEAR(-curvature_integral(surfaces::ellipse(2.0, 1.0), 1, 64), -2 * pi, 1e-8);
}

TEST(TubePolynomial, UnitSphere)
{
    const auto tp = tube_polynomial(surfaces::sphere<2>(1.0));
    ASSERT_EQ(tp.a.size(), 3u);
    EXPECT_NEAR(tp.a[0], 4 * pi, 1e-8);
    EXPECT_NEAR(tp.a[1], 8 * pi, 1e-8);
    EXPECT_NEAR(tp.a[2], 4 * pi, 1e-8);

    const auto vp = volume_polynomial(tp, 4 * pi / 3);
    const std::vector<double> expected{4 * pi / 3, 4 * pi, 4 * pi, 4 * pi / 3};
    ASSERT_EQ(vp.v.size(), 4u);
    for (int i = 0; i < 4; ++i) EXPECT_NEAR(vp.v[i], expected[i], 1e-8);
    EXPECT_NEAR(vp.v[1], tp.a[0], 1e-12);
    EXPECT_NEAR(2 * vp.v[2], tp.a[1], 1e-12);
}

TEST(TubePolynomial, TorusMatchesDirectParallelTorus)
{
    // The parallel torus at distance t is the torus with tube radius r + t.
    const auto tor = surfaces::torus(2.0, 1.0);
    const auto tp = tube_polynomial(tor);
    EXPECT_NEAR(tp.a[0], 8 * pi * pi, 1e-8);
    EXPECT_NEAR(tp.a[1], 8 * pi * pi, 1e-8);
    EXPECT_NEAR(tp.a[2], 0.0, 1e-8);
    const double direct = area(surfaces::torus(2.0, 1.1));
    EXPECT_NEAR(tp(0.1), direct, 1e-6);
    EXPECT_NEAR(area(parallel_patch(tor, 0.1)), direct, 1e-6);

    const auto vp = volume_polynomial(tp, 2 * pi * pi * 2.0);
    EXPECT_NEAR(vp.v[1], tp.a[0], 1e-12);
    EXPECT_NEAR(2 * vp.v[2], tp.a[1], 1e-12);
    EXPECT_NEAR(vp.derivative(0.3), tp(0.3), 1e-10);
}

TEST(TubePolynomial, ParallelAreasFollowThePolynomial)
{
    for (const auto& p : builder_patches()) {
        const auto tp = tube_polynomial(p);
        const double window = 1.0 / max_abs_curvature(p);
        for (double t : {-0.2, -0.1, 0.1, 0.2}) {
            if (std::abs(t) >= 0.9 * window) continue;
            EXPECT_NEAR(area(parallel_patch(p, t)), tp(t), 1e-6) << p.name << " t=" << t;
        }
    }
}

TEST(ParallelPatch, SphereGrowsQuadratically)
{
    EXPECT_NEAR(area(parallel_patch(surfaces::sphere<2>(1.0), 0.5)), 4 * pi * 2.25, 1e-8);
}

TEST(ParallelPatch, ZeroOffsetIsIdentity)
{
    const auto tor = surfaces::torus(2.0, 1.0);
    const auto same = parallel_patch(tor, 0.0);
    EXPECT_EQ(area(same), area(tor));
    const num::Param<2> u(0.4, 2.1);
    const auto a = curvature_at(tor, u), b = curvature_at(same, u);
    EXPECT_EQ(a.principal_curvatures, b.principal_curvatures);
}

TEST(ParallelPatch, NormalFieldIsUnchanged)
{
    for (const auto& p : builder_patches()) {
        const auto q = parallel_patch(p, 0.1);
        for (const auto& node : num::tensor_nodes<2>(p.box, 5)) {
            const auto a = curvature_at(p, node.u);
            const auto b = curvature_at(q, node.u);
            EXPECT_LT((a.gauss - b.gauss).norm(), 1e-8) << p.name;
        }
    }
}

TEST(ParallelPatch, FocalCrossingIsDetected)
{
    // Outward torus has k = −1/r on the tube, focal at t = −r.
    EXPECT_THROW(parallel_patch(surfaces::torus(2.0, 1.0), -1.2), FocalCrossing);
    EXPECT_NO_THROW(parallel_patch(surfaces::torus(2.0, 1.0), -0.5));
}

TEST(Orientation, FlipNegatesOddQuantities)
{
    for (const auto& p : builder_patches()) {
        const auto q = p.flipped();
        const num::Param<2> u(0.9 * p.box[0].hi, 0.4 * p.box[1].hi);
        const auto a = curvature_at(p, u), b = curvature_at(q, u);
        EXPECT_LT((a.gauss + b.gauss).norm(), 1e-12);
        EXPECT_NEAR(a.mean_curvature, -b.mean_curvature, 1e-12);
        EXPECT_NEAR(oriented_volume(p), -oriented_volume(q), 1e-10);
        for (int ell = 0; ell <= 2; ++ell) {
            const double s = (ell % 2 == 1) ? -1.0 : 1.0;
            EXPECT_NEAR(curvature_integral(p, ell), s * curvature_integral(q, ell), 1e-9)
                << p.name << " ell=" << ell;
        }
    }
}

TEST(Survey, SphereIsUmbilicAndCmc)
{
    const auto s = survey(surfaces::sphere<2>(1.5));
    EXPECT_NEAR(s.area, 4 * pi * 2.25, 1e-8);
    EXPECT_NEAR(s.mean_curvature_mean, -1.0 / 1.5, 1e-12);
    EXPECT_LT(s.mean_curvature_deviation, 1e-12);
    EXPECT_LT(s.umbilic_deficit, 1e-12);
    EXPECT_LT(s.umbilic_integral, 1e-20);
}

TEST(ValidatePatch, AcceptsBuilders)
{
    for (const auto& p : builder_patches()) EXPECT_NO_THROW(validate_patch(p));
}
