#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "capillary_lab/cli.hpp"

using namespace capillary_lab;
using namespace capillary_lab::cli;

namespace {

Report run_text(const std::string& text)
{
    const auto c = parse_config_text(text);
    return run(c, resolve_order(std::nullopt, c, nullptr));
}

std::string without_clock(Report r)
{
    r.wall_clock_seconds = 0.0;
    return report_text(r);
}

std::string slurp(const std::filesystem::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::filesystem::path scratch(const std::string& name)
{
    const auto dir = std::filesystem::temp_directory_path() / "capillary_lab_cli_test";
    std::filesystem::create_directories(dir);
    return dir / name;
}

int exit_status(const std::string& cmd)
{
    const int raw = std::system(cmd.c_str());
    return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
}

const std::string kHemisphere =
    R"({"command": "cap-stability", "surface": {"kind": "cap_halfspace", "R": 1, "theta": 1.5707963}})";
const std::string kCube = R"({"command": "convex-check", "body": {"kind": "cube", "side": 1}})";
const std::string kSweep = R"({"command": "sweep", "surface": {"kind": "bridge_wedge", "R": 1, "alpha": 0.5236,
                               "theta": [2.1, 3.0], "steps": 10}})";

}  // namespace

TEST(Config, ParsesExamples)
{
    const auto c = parse_config_text(kHemisphere);
    EXPECT_EQ(c.command, Command::cap_stability);
    ASSERT_TRUE(c.surface);
    EXPECT_EQ(c.surface->kind, "cap_halfspace");
    EXPECT_EQ(c.surface->n, 2);
    EXPECT_DOUBLE_EQ(c.surface->get("theta"), 1.5707963);
    EXPECT_FALSE(c.quadrature_order);
    EXPECT_DOUBLE_EQ(c.fd_step, 1e-3);

    const auto s = parse_config_text(kSweep);
    ASSERT_TRUE(s.surface->theta_range);
    EXPECT_EQ(s.surface->steps, 10);
    EXPECT_EQ(parse_config_text(kCube).body->n, 3);
}

TEST(Config, StrictParsing)
{
    auto message = [](const std::string& text) {
        try {
            parse_config_text(text);
        } catch (const ParseError& e) {
            return std::string(e.what());
        }
        return std::string("accepted");
    };
    EXPECT_NE(message(R"({"command": "steiner", "body": {"kind": "cube"}, "colour": 1})").find("config.colour"),
              std::string::npos);
    EXPECT_NE(message(R"({"command": "convex-check", "body": {"kind": "cube", "sid": 1}})").find("config.body.sid"),
              std::string::npos);
    EXPECT_NE(message(R"({"command": "cap-stability", "surface": {"kind": "cap_halfspace", "theta": "wide"}})")
                  .find("config.surface.theta"),
              std::string::npos);
    EXPECT_NE(message(R"({"command": "cap-stability", "surface": {"kind": "cap_halfspace", "theta": 1e999}})")
                  .find("overflow"),
              std::string::npos);
    EXPECT_NE(message(R"({"command": "fly", "body": {"kind": "cube"}})").find("config.command"), std::string::npos);
    EXPECT_NE(message(R"({"command": "cap-stability"})").find("config.surface"), std::string::npos);
    EXPECT_NE(message(R"({"command": "sweep", "surface": {"kind": "cap_halfspace", "theta": 2.0}})")
                  .find("config.surface"),
              std::string::npos);
    EXPECT_NE(message(R"({"command": "convex-check", "body": {"kind": "polygon", "vertices": [[0, 0, 0]]}})")
                  .find("config.body.vertices[0]"),
              std::string::npos);
    EXPECT_NE(message(R"({"command": "steiner", "body": {"kind": "cube"}, "quadrature_order": 1})")
                  .find("config.quadrature_order"),
              std::string::npos);
}

TEST(Config, MalformedJsonReportsLine)
{
    const std::string text = "{\n  \"command\": \"steiner\",\n  \"body\": {\"kind\": \"cube\",}\n}\n";
    try {
        parse_config_text(text);
        FAIL() << "accepted malformed JSON";
    } catch (const ParseError& e) {
        EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
    }
}

TEST(Config, OrderPrecedence)
{
    auto c = parse_config_text(kCube);
    EXPECT_EQ(resolve_order(std::nullopt, c, nullptr), 32);
    EXPECT_EQ(resolve_order(std::nullopt, c, "40"), 40);
    c.quadrature_order = 24;
    EXPECT_EQ(resolve_order(std::nullopt, c, "40"), 24);
    EXPECT_EQ(resolve_order(48, c, "40"), 48);
    c.quadrature_order.reset();
    EXPECT_THROW(resolve_order(std::nullopt, c, "many"), ParseError);
}

TEST(Run, HemisphereStability)
{
    const auto r = run_text(kHemisphere);
    EXPECT_EQ(r.exit_code, 0);
    EXPECT_EQ(r.status, "ok");
    ASSERT_TRUE(r.verdict);
    EXPECT_EQ(*r.verdict, "sphere_stable");
    EXPECT_LE(std::abs(r.results.at("indicator").value), 1e-6);
    EXPECT_NEAR(r.results.at("enclosed_volume").value, 2.0 * pi / 3.0, 1e-6);
    EXPECT_EQ(r.config.at("quadrature_order"), 32);
    EXPECT_EQ(r.tool, "capillary-lab");
    EXPECT_EQ(r.version, std::string(kVersion));
}

TEST(Run, CubeConvexCheck)
{
    const auto r = run_text(kCube);
    EXPECT_EQ(r.exit_code, 0);
    EXPECT_NEAR(r.results.at("W0").value, 1.0, 1e-12);
    EXPECT_NEAR(r.results.at("W1").value, 2.0, 1e-12);
    EXPECT_NEAR(r.results.at("W2").value, pi, 1e-12);
    EXPECT_NEAR(r.results.at("W3").value, 4.0 * pi / 3.0, 1e-12);
    for (const auto& [name, q] : r.results) {
        if (name.rfind("slack_", 0) == 0) {
            EXPECT_GE(q.value, 0.0) << name;
        }
    }
    EXPECT_NEAR(r.results.at("slack_af_first").value, 4.0 - pi, 1e-12);
}

TEST(Run, CheckedQuantitiesCarryTolerances)
{
    for (const auto& text : {kHemisphere, kCube, kSweep}) {
        const auto r = run_text(text);
        for (const auto& [name, q] : r.results) {
            if (q.pass) {
                EXPECT_TRUE(q.tolerance) << name;
                EXPECT_TRUE(*q.pass) << name;
            }
        }
        EXPECT_FALSE(r.tolerances.empty());
    }
}

TEST(Run, AcuteWedgeIsHypothesisFailure)
{
    const auto r = run_text(
        R"({"command": "cap-stability", "surface": {"kind": "bridge_wedge", "alpha": 0.6, "theta": 1.2}})");
    EXPECT_EQ(r.exit_code, 2);
    EXPECT_EQ(r.status, "hypothesis_failure");
    ASSERT_TRUE(r.error);
}

TEST(Run, NonconvexBodyIsHypothesisFailure)
{
    const auto r = run_text(R"({"command": "convex-check", "body": {"kind": "polygon",
                                "vertices": [[0, 0], [2, 0], [2, 2], [1, 0.5], [0, 2]]}})");
    EXPECT_EQ(r.exit_code, 2);
    EXPECT_EQ(r.status, "hypothesis_failure");
}

TEST(Run, BuilderErrorSurfacedVerbatim)
{
    std::string expected;
    try {
        bridge_in_wedge<2>(1.0, pi / 6, 2.0 * pi / 3, 2.0 * pi / 3);
    } catch (const Error& e) {
        expected = e.what();
    }
    ASSERT_FALSE(expected.empty());
    const auto r = run_text(R"({"command": "cap-stability", "surface": {"kind": "bridge_wedge", "alpha": )" +
                            format_number(pi / 6) + R"(, "theta": )" + format_number(2.0 * pi / 3) + "}}");
    EXPECT_EQ(r.exit_code, 1);
    EXPECT_EQ(r.status, "error");
    ASSERT_TRUE(r.error);
    EXPECT_EQ(*r.error, expected);
}

TEST(Run, NonCmcSurfaceHasNoVerdict)
{
    const auto r = run_text(R"({"command": "cap-stability", "surface": {"kind": "spheroid_cap", "a": 1.5, "c": 1}})");
    EXPECT_EQ(r.exit_code, 0);
    EXPECT_FALSE(r.verdict);
    EXPECT_LE(r.results.at("second_factor").value, -1e-6);
    EXPECT_FALSE(r.warnings.empty());
}

TEST(Run, VariationCheck)
{
    const auto r = run_text(
        R"({"command": "variation-check", "surface": {"kind": "bridge_wedge", "alpha": 0.6283185307179586,
            "theta1": 2.3, "theta2": 2.8}, "quadrature_order": 48})");
    EXPECT_EQ(r.exit_code, 0);
    for (const char* k : {"first_variation", "second_variation_gap", "volume_identity_gap"}) {
        ASSERT_TRUE(r.results.at(k).pass) << k;
        EXPECT_TRUE(*r.results.at(k).pass) << k;
    }
    EXPECT_EQ(r.table.rows.size(), 5u);
}

TEST(Run, TubePolySphere)
{
    const auto r = run_text(R"({"command": "tube-poly", "surface": {"kind": "sphere", "n": 2, "R": 1}})");
    EXPECT_NEAR(r.results.at("a0").value, 4.0 * pi, 1e-8);
    EXPECT_NEAR(r.results.at("a1").value, 8.0 * pi, 1e-8);
    EXPECT_NEAR(r.results.at("a2").value, 4.0 * pi, 1e-8);
    EXPECT_TRUE(*r.results.at("max_parallel_area_gap").pass);
    EXPECT_EQ(r.table.rows.size(), 4u);
}

TEST(Run, QuotientScanSquare)
{
    const auto r = run_text(R"({"command": "quotient-scan", "body": {"kind": "square", "side": 1}})");
    EXPECT_NEAR(r.table.rows.at(0).at(1).get<double>(), 16.0, 1e-12);
    EXPECT_NEAR(r.results.at("quotient_derivative_at_zero").value, 16.0 * pi - 64.0, 1e-6);
    EXPECT_EQ(r.results.at("nonincreasing").value, 1.0);
}

TEST(Run, SteinerCube)
{
    const auto r = run_text(R"({"command": "steiner", "body": {"kind": "cube", "side": 1}})");
    EXPECT_EQ(r.exit_code, 0);
    EXPECT_EQ(r.table.rows.size(), 3u);
    for (const auto& row : r.table.rows) EXPECT_TRUE(row.back().get<bool>());
}

TEST(Run, SweepRowsAndCsv)
{
    const auto r = run_text(kSweep);
    EXPECT_EQ(r.exit_code, 0);
    ASSERT_EQ(r.table.rows.size(), 10u);
    EXPECT_DOUBLE_EQ(r.table.rows.front()[0].get<double>(), 2.1);
    EXPECT_DOUBLE_EQ(r.table.rows.back()[0].get<double>(), 3.0);
    const std::string csv = csv_text(r.table);
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 11);
    EXPECT_EQ(csv.find('\r'), std::string::npos);
    EXPECT_EQ(csv.substr(0, csv.find('\n')),
              "theta,status,balancing_residual_1,balancing_residual_2,e0,e1,e2,indicator,verdict");
}

TEST(Csv, Formatting)
{
    EXPECT_EQ(format_number(0.1), "0.10000000000000001");
    EXPECT_EQ(csv_field(json("a,b")), "\"a,b\"");
    EXPECT_EQ(csv_field(json("say \"hi\"")), "\"say \"\"hi\"\"\"");
    EXPECT_EQ(csv_field(json(nullptr)), "");
    EXPECT_EQ(csv_field(json(7)), "7");
    Table empty{{"t", "value"}, {}};
    EXPECT_EQ(csv_text(empty), "t,value\n");
    EXPECT_THROW(emit_csv(Report{}, "/nonexistent-dir/x.csv"), Error);
}

TEST(Report, RoundTrip)
{
    for (const auto& text : {kHemisphere, kCube, kSweep}) {
        const auto r = run_text(text);
        const json j = r;
        const auto back = j.get<Report>();
        EXPECT_EQ(json(back), j);
        EXPECT_EQ(json::parse(j.dump()), j);
        EXPECT_EQ(back.results, r.results);
        EXPECT_EQ(back.table, r.table);
    }
}

TEST(Report, Deterministic)
{
    const std::string random =
        R"({"command": "convex-check", "body": {"kind": "random_polyhedra", "count": 5}, "seed": 11})";
    for (const auto& text : {kHemisphere, kSweep, random}) {
        const auto a = run_text(text), b = run_text(text);
        EXPECT_EQ(without_clock(a), without_clock(b));
        EXPECT_EQ(csv_text(a.table), csv_text(b.table));
    }
    auto c = parse_config_text(random);
    c.seed = 12;
    EXPECT_NE(csv_text(run(c, 32).table), csv_text(run_text(random).table));
}

TEST(Binary, ExitCodesAndFiles)
{
    const std::string bin = CAPILLARY_LAB_BIN;
    const std::filesystem::path configs = CAPILLARY_LAB_CONFIGS;
    const auto out = scratch("hemisphere.json"), csv = scratch("sweep.csv"), csv2 = scratch("sweep2.csv");

    EXPECT_EQ(exit_status(bin + " run " + (configs / "cap_hemisphere.json").string() + " --out " + out.string()), 0);
    const auto report = json::parse(slurp(out)).get<Report>();
    EXPECT_EQ(*report.verdict, "sphere_stable");

    EXPECT_EQ(exit_status(bin + " run " + (configs / "bridge_acute.json").string() + " --out " + out.string() +
                          " 2>/dev/null"),
              2);
    EXPECT_EQ(exit_status(bin + " run " + (configs / "missing.json").string() + " 2>/dev/null"), 1);

    const auto bad = scratch("bad.json");
    std::ofstream(bad) << "{\"command\": \"steiner\", \"body\": {\"kind\": \"cube\", \"side\": -}}";
    EXPECT_EQ(exit_status(bin + " run " + bad.string() + " 2>/dev/null"), 1);

    const std::string sweep = bin + " run " + (configs / "sweep_bridge.json").string() + " --out " + out.string();
    EXPECT_EQ(exit_status(sweep + " --csv " + csv.string()), 0);
    EXPECT_EQ(exit_status(sweep + " --csv " + csv2.string()), 0);
    const std::string text = slurp(csv);
    EXPECT_EQ(text, slurp(csv2));
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 11);

    EXPECT_EQ(exit_status(bin + " run " + (configs / "cap_hemisphere.json").string() + " --order 24 --out " +
                          out.string()),
              0);
    EXPECT_EQ(json::parse(slurp(out)).at("config").at("quadrature_order"), 24);
    EXPECT_EQ(exit_status("CAPILLARY_LAB_ORDER=40 " + bin + " run " + (configs / "cap_hemisphere.json").string() +
                          " --out " + out.string()),
              0);
    EXPECT_EQ(json::parse(slurp(out)).at("config").at("quadrature_order"), 32);  // config value wins
    EXPECT_EQ(exit_status("CAPILLARY_LAB_ORDER=40 " + bin + " run " + (configs / "cap_obtuse.json").string() +
                          " --out " + out.string()),
              0);
    EXPECT_EQ(json::parse(slurp(out)).at("config").at("quadrature_order"), 40);
}
