// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <sys/wait.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "capillary_lab/capillary.hpp"
#include "capillary_lab/cli.hpp"
#include "capillary_lab/convexbody.hpp"
#include "capillary_lab/hypersurface.hpp"
#include "capillary_lab/surfaces.hpp"

using namespace capillary_lab;
namespace cx = capillary_lab::convex;

namespace {

/// Accumulates named checks; the first failure is kept for the report line.
struct Ledger {
    int checks = 0;
    double worst = 0.0;  // largest |error| / tolerance seen
    std::string failure;

    void near(const std::string& what, double value, double expected, double tol)
    {
        ++checks;
        const double err = std::abs(value - expected);
        worst = std::max(worst, err / tol);
        if (!(err <= tol) && failure.empty()) {
            std::ostringstream os;
            os << what << ": got " << value << ", expected " << expected << " ± " << tol;
            failure = os.str();
        }
    }

    void truth(const std::string& what, bool ok)
    {
        ++checks;
        if (!ok && failure.empty()) failure = what;
    }
};

struct Criterion {
    int id;
    std::string title;
    std::function<void(Ledger&)> body;
};

/// Fourth-order central differences of f at 0.
std::pair<double, double> derivatives_at_zero(const std::function<double(double)>& f, double h)
{
    const double fm2 = f(-2 * h), fm1 = f(-h), f0 = f(0.0), f1 = f(h), f2 = f(2 * h);
    const double d1 = (8.0 * (f1 - fm1) - (f2 - fm2)) / (12.0 * h);
    const double d2 = (-f2 + 16.0 * f1 - 30.0 * f0 + 16.0 * fm1 - fm2) / (12.0 * h * h);
    return {d1, d2};
}

const std::vector<double> kCapAngles = {pi / 2, 2 * pi / 3, 3 * pi / 4, 5 * pi / 6};
const std::vector<double> kWedgeHalfAngles = {0.2, 0.3, 0.4, 0.5, 0.6};
const std::vector<double> kWedgeAngles = {2.4, 2.55, 2.7, 2.85, 3.0};

void closed_forms(Ledger& l)
{
    const auto s = surfaces::sphere<2>(1.0);
    l.near("sphere area", area(s, 32), 4 * pi, 1e-8);
    l.near("sphere oriented volume", oriented_volume(s, 32), 4 * pi / 3, 1e-8);
    const auto tp = tube_polynomial(s, 32);
    l.near("a0", tp.a[0], 4 * pi, 1e-8);
    l.near("a1", tp.a[1], 8 * pi, 1e-8);
    l.near("a2", tp.a[2], 4 * pi, 1e-8);
}

void gauss_map_closed(Ledger& l)
{
    auto check = [&](const std::string& name, const std::vector<ParametricPatch<2>>& patches) {
        const auto g = gauss_map_integral<2>(std::span<const ParametricPatch<2>>(patches), 32);
        for (int k = 0; k < 3; ++k) l.near(name + " component " + std::to_string(k), g[k], 0.0, 1e-8);
    };
    check("sphere", {surfaces::sphere<2>(1.0)});
    check("torus", {surfaces::torus(2.0, 0.5)});
    check("capped hemisphere", {surfaces::hemisphere<2>(1.0), surfaces::flat_disk(1.0, 0.0, false)});
}

void volume_area_link(Ledger& l)
{
    for (const auto& [name, patch] : std::vector<std::pair<std::string, ParametricPatch<2>>>{
             {"sphere", surfaces::sphere<2>(1.0)}, {"torus", surfaces::torus(2.0, 0.5)}}) {
        const auto tp = tube_polynomial(patch, 32);
        // Independent route: enclosed volume of the moved surfaces.
        const auto [v1, d2] = derivatives_at_zero(
            [&](double t) { return oriented_volume(parallel_patch(patch, t, 32), 32); }, 0.05);
        l.near(name + " v1 = a0", v1, tp.a[0], 1e-6);
        l.near(name + " 2 v2 = a1", d2, tp.a[1], 1e-6);
        for (double t : {-0.2, -0.1, 0.1, 0.2}) {
            l.near(name + " parallel area at t=" + cli::format_number(t), area(parallel_patch(patch, t, 32), 32), tp(t),
                   1e-6);
        }
    }
}

std::vector<CapillarySurface<2>> wedge_grid()
{
    std::vector<CapillarySurface<2>> out;
    for (double alpha : kWedgeHalfAngles)
        for (double theta : kWedgeAngles) out.push_back(bridge_in_wedge<2>(1.0, alpha, theta, theta));
    return out;
}

void balancing(Ledger& l)
{
    for (double theta : kCapAngles) {
        const auto s = cap_in_halfspace<2>(1.0, theta);
        l.near("cap θ=" + cli::format_number(theta), balancing_residual(s, 0), 0.0, 1e-8);
    }
    const auto grid = wedge_grid();
    l.truth("5x5 wedge grid fully feasible", grid.size() == 25);
    for (const auto& s : grid)
        for (int i = 0; i < 2; ++i) l.near("bridge wall " + std::to_string(i), balancing_residual(s, i), 0.0, 1e-8);
}

void criticality(Ledger& l)
{
    auto rel = [&](const std::string& name, const auto& s) {
        constexpr int N = std::remove_cvref_t<decltype(s)>::dim();
        const double v0 = critical_volume<N>(energy_coefficients(s));
        l.near(name, v0 / s.enclosed_volume, 1.0, 1e-6);
    };
    for (double theta : kCapAngles) rel("cap", cap_in_halfspace<2>(1.0, theta));
    for (const auto& s : wedge_grid()) rel("bridge", s);
    const auto e = energy_coefficients(cap_in_halfspace<2>(1.0, pi / 2));
    l.near("hemisphere critical volume", critical_volume<2>(e), 2 * pi / 3, 1e-8);
}

void variation(Ledger& l)
{
    int configs = 0;
    auto check = [&](const std::string& name, const auto& s) {
        constexpr int N = std::remove_cvref_t<decltype(s)>::dim();
        const auto d = variation_derivatives(s, 1e-3);
        l.near(name + " E'(0)", d.first, 0.0, 1e-6);
        l.near(name + " E''(0)", d.second, second_variation_closed_form<N>(energy_coefficients(s)), 1e-4);
        ++configs;
    };
    check("hemisphere", cap_in_halfspace<2>(1.0, pi / 2));
    check("obtuse cap", cap_in_halfspace<2>(1.3, 2.4));
    check("symmetric bridge", bridge_in_wedge<2>(1.0, pi / 6, 5 * pi / 6, 5 * pi / 6));
    check("asymmetric bridge", bridge_in_wedge<2>(1.0, pi / 5, 2.3, 2.8, 64));
    check("tilted bridge", bridge_in_wedge<2>(1.4, 0.4, 2.2, 2.9, 48, Tolerances{}, 0.3));
    check("cap in R4", cap_in_halfspace<3>(1.0, 2.0, 16));
    l.truth("at least five configurations", configs >= 5);
}

void sphere_stability(Ledger& l)
{
    auto check = [&](const std::string& name, const auto& s) {
        const auto rep = stability_indicator(s);
        l.near(name + " indicator", rep.indicator, 0.0, 1e-6);
        l.truth(name + " verdict sphere_stable", rep.verdict == Verdict::sphere_stable);
    };
    for (double theta : kCapAngles) check("cap", cap_in_halfspace<2>(1.0, theta));
    for (const auto& s : wedge_grid()) check("bridge", s);
    check("asymmetric bridge", bridge_in_wedge<2>(1.0, pi / 5, 2.3, 2.8, 64));
    check("cap in R4", cap_in_halfspace<3>(1.0, 2.0, 16));
    check("bridge in R4", bridge_in_wedge<3>(1.0, pi / 6, 5 * pi / 6, 5 * pi / 6, 16));
    const double sf = second_factor(spheroid_cap_in_halfspace(1.5, 1.0, 0.0));
    l.truth("spheroid second factor ≤ −1e−6 (got " + cli::format_number(sf) + ")", sf <= -1e-6);
}

void boundary_curves(Ledger& l)
{
    const auto round = wetted_from_boundary<2>(0, surfaces::circle(0.7), true);
    const auto oval = wetted_from_boundary<2>(0, surfaces::ellipse(2.0, 1.0), true, 96);
    l.near("round ∫k ds", round.geodesic_curvature_integral(), -2 * pi, 1e-8);
    l.near("elliptical ∫k ds", oval.geodesic_curvature_integral(), -2 * pi, 1e-8);
    for (const auto& w : {round, round_wetted_disk<2>(0, Vec<2>::Zero(), 1.3)}) {
        const double L = w.boundary_area, A = w.area;
        l.near("2∫k ds + L²/A", 2 * w.geodesic_curvature_integral() + L * L / A, 0.0, 1e-8);
    }
}

void convex_suite(Ledger& l)
{
    const auto sq = cx::quermass(cx::unit_square());
    const auto cu = cx::quermass(cx::unit_cube());
    const std::vector<double> sq_expected = {1, 2, pi}, cu_expected = {1, 2, pi, 4 * pi / 3};
    for (int j = 0; j <= 2; ++j) l.near("square W" + std::to_string(j), sq[j], sq_expected[j], 1e-12);
    for (int j = 0; j <= 3; ++j) l.near("cube W" + std::to_string(j), cu[j], cu_expected[j], 1e-12);

    std::mt19937_64 rng(20240601);
    std::vector<cx::Polygon> polys;
    for (int k = 0; k < 100; ++k) polys.push_back(cx::random_polygon(rng));
    std::vector<cx::Polyhedron> hedra;
    for (int k = 0; k < 20; ++k) hedra.push_back(cx::random_polyhedron(rng));

    for (double t : {0.0, 0.25, 0.5}) {
        l.truth("square Steiner within bound", cx::steiner_check(cx::unit_square(), t).within_bound());
        l.truth("cube Steiner within bound", cx::steiner_check(cx::unit_cube(), t).within_bound());
        l.truth("random polygon Steiner within bound", cx::steiner_check(polys[0], t).within_bound());
        l.truth("random polyhedron Steiner within bound", cx::steiner_check(hedra[0], t).within_bound());
    }
    for (const auto& p : polys) l.truth("polygon slacks ≥ −1e−9", cx::inequality_suite(p).min_slack() >= -1e-9);
    for (const auto& p : hedra) l.truth("polyhedron slacks ≥ −1e−9", cx::inequality_suite(p).min_slack() >= -1e-9);
    for (int k = 0; k < 100; ++k) {
        const auto a = cx::random_polygon(rng), b = cx::random_polygon(rng);
        const double v = cx::mixed_volume_2d(a, b);
        l.truth("AF pair slack ≥ −1e−9", v * v - a.volume() * b.volume() >= -1e-9);
    }
    l.truth("disk approximant equality within 1e−3",
            cx::inequality_suite(cx::ball_approximant_2d().first).max_relative_slack() <= 1e-3);
    l.truth("ball approximant equality within 1e−3",
            cx::inequality_suite(cx::ball_approximant_3d(4).first).max_relative_slack() <= 1e-3);
}

void monotonicity(Ledger& l)
{
    const std::vector<double> grid = {0.0, 0.1, 0.25, 0.5, 1.0, 2.0, 4.0};
    auto scan = [&](const std::string& name, const cx::QuermassVector& q) {
        l.truth(name + " nonincreasing", cx::parallel_quotient_scan(q, grid).nonincreasing);
    };
    scan("square", cx::quermass(cx::unit_square()));
    scan("cube", cx::quermass(cx::unit_cube()));
    scan("disk", cx::smooth_quermass<1>(surfaces::circle(1.0)));
    scan("ellipse", cx::smooth_quermass<1>(surfaces::ellipse(2.0, 1.0)));
    scan("ellipsoid", cx::smooth_quermass<2>(surfaces::ellipsoid(1.0, 1.5, 2.0)));
    std::mt19937_64 rng(77);
    for (int k = 0; k < 10; ++k) scan("random polygon", cx::quermass(cx::random_polygon(rng)));
    for (int k = 0; k < 5; ++k) scan("random polyhedron", cx::quermass(cx::random_polyhedron(rng)));

    // Derivative from the closed forms P = 4 + 2πt, A = 1 + 4t + πt², one-sided.
    auto Q = [](double t) {
        const double P = 4 + 2 * pi * t, A = 1 + 4 * t + pi * t * t;
        return P * P / A;
    };
    const double h = 1e-5;
    const double dq = (-3 * Q(0) + 4 * Q(h) - Q(2 * h)) / (2 * h);
    l.near("closed-form derivative", dq, 16 * pi - 64, 1e-6);
    const auto r = cli::run(cli::parse_config_text(R"({"command": "quotient-scan", "body": {"kind": "square"}})"), 32);
    l.near("reported square derivative", r.results.at("quotient_derivative_at_zero").value, 16 * pi - 64, 1e-6);
    l.near("square quotient at 0", r.table.rows.at(0).at(1).get<double>(), 16.0, 1e-12);
}

std::string slurp(const std::filesystem::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void cli_determinism(Ledger& l)
{
    const std::filesystem::path configs = CAPILLARY_LAB_CONFIGS;
    const auto dir = std::filesystem::temp_directory_path() / "capillary_lab_acceptance";
    std::filesystem::create_directories(dir);
    for (const char* cfg : {"sweep_bridge.json", "convex_random_polygons.json", "cap_hemisphere.json"}) {
        std::vector<std::string> reports, tables;
        for (int k = 0; k < 2; ++k) {
            const auto out = dir / ("r" + std::to_string(k) + ".json"), csv = dir / ("t" + std::to_string(k) + ".csv");
            const std::string cmd = std::string(CAPILLARY_LAB_BIN) + " run " + (configs / cfg).string() + " --seed 5" +
                                    " --out " + out.string() + " --csv " + csv.string();
            const int raw = std::system(cmd.c_str());
            l.truth(std::string(cfg) + " exits 0", WIFEXITED(raw) && WEXITSTATUS(raw) == 0);
            auto j = cli::json::parse(slurp(out));
            j.erase("wall_clock_seconds");
            reports.push_back(j.dump());
            tables.push_back(slurp(csv));
        }
        l.truth(std::string(cfg) + " report identical", reports[0] == reports[1]);
        l.truth(std::string(cfg) + " CSV identical", tables[0] == tables[1]);
    }
}

}  // namespace

int main()
{
    const std::vector<Criterion> criteria = {
        {1, "closed forms on the unit sphere", closed_forms},
        {2, "Gauss-map integral vanishes on closed surfaces", gauss_map_closed},
        {3, "volume/area polynomial link and sampled parallel areas", volume_area_link},
        {4, "balancing residuals for caps and a 5x5 wedge grid", balancing},
        {5, "criticality identity and hemisphere critical volume", criticality},
        {6, "finite-difference variation matches the closed form", variation},
        {7, "sphere stability and strict spheroid negativity", sphere_stability},
        {8, "planar boundary-curve facts", boundary_curves},
        {9, "convex-body suite", convex_suite},
        {10, "parallel-body isoperimetric monotonicity", monotonicity},
        {11, "CLI determinism", cli_determinism},
    };
    int failed = 0;
    for (const auto& c : criteria) {
        Ledger l;
        try {
            c.body(l);
        } catch (const std::exception& e) {
            if (l.failure.empty()) l.failure = std::string("exception: ") + e.what();
        }
        const bool ok = l.failure.empty();
        failed += ok ? 0 : 1;
        std::printf("%s %2d %s (%d checks)%s%s\n", ok ? "PASS" : "FAIL", c.id, c.title.c_str(), l.checks,
                    ok ? "" : ": ", l.failure.c_str());
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
