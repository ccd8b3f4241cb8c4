#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "caqubit/caqubit.hpp"

using namespace caqubit;
using namespace caqubit::harness;
namespace fs = std::filesystem;

namespace {

RunConfig parse(const std::string& text) { return load_config(IniDocument::parse(text, "t.ini")); }

int error_line(const std::string& text) {
    try {
        const auto cfg = parse(text);
        if (cfg.id) (void)make_context(*find_descriptor(*cfg.id), cfg);
    } catch (const ConfigError& e) {
        return e.line();
    }
    ADD_FAILURE() << "no ConfigError for:\n" << text;
    return -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

fs::path scratch(const std::string& name) {
    auto d = fs::temp_directory_path() / ("caqubit_test_" + name);
    fs::remove_all(d);
    return d;
}

}  // namespace

TEST(Config, DefaultsAreCalibrated) {
    const auto cfg = default_config();
    EXPECT_EQ(cfg.noise.slow_B_rms, 70e-6);
    EXPECT_EQ(cfg.noise.intensity_frac_rms, 2.1e-3);
    EXPECT_EQ(cfg.noise.microwave_amp_rms, 2e-4);
    EXPECT_EQ(cfg.readout.detection.duration, 5e-3);
    EXPECT_EQ(cfg.readout.detection.d52_lifetime, cfg.constants->d52_lifetime_s());
    EXPECT_FALSE(cfg.id);
    EXPECT_EQ(cfg.workers, 1u);
}

TEST(Config, ParsesAllSections) {
    const auto cfg = parse(R"(# comment
[noise]
slow_B_rms = 5e-5   ; trailing comment
shutter_closed = true
[detection]
duration = 2e-3
threshold = 9
shelving_pulses = 1
[experiment]
id = fig8_depump
shots = 20
seed = 42
workers = 3
points = 5
[targets]
mean_population = 0.05
)");
    EXPECT_EQ(cfg.noise.slow_B_rms, 5e-5);
    EXPECT_TRUE(cfg.noise.shutter_closed);
    EXPECT_EQ(cfg.readout.detection.duration, 2e-3);
    EXPECT_EQ(cfg.readout.detection.threshold, 9);
    EXPECT_EQ(cfg.readout.shelving.pulse_fidelities.size(), 1u);
    EXPECT_EQ(*cfg.id, "fig8_depump");
    EXPECT_EQ(*cfg.shots, 20);
    EXPECT_EQ(*cfg.seed, 42u);
    EXPECT_EQ(cfg.workers, 3u);
    EXPECT_EQ(cfg.tolerances.at("mean_population"), 0.05);
    const auto ctx = make_context(*find_descriptor("fig8_depump"), cfg);
    EXPECT_EQ(ctx.p("points"), 5.0);
    EXPECT_EQ(ctx.shots, 20);
}

TEST(Config, ErrorsCarryLineNumbers) {
    EXPECT_EQ(error_line("[noise]\nslow_B_rms = 1e-5\n[bogus]\n"), 3);
    EXPECT_EQ(error_line("[noise]\n\nslow_b_rms = 1e-5\n"), 3);
    EXPECT_EQ(error_line("[noise]\nslow_B_rms = abc\n"), 2);
    EXPECT_EQ(error_line("[noise]\nslow_B_rms = -1\n"), 2);
    EXPECT_EQ(error_line("[noise]\nline_amp = 1\nline_amp = 2\n"), 3);
    EXPECT_EQ(error_line("[noise\n"), 1);
    EXPECT_EQ(error_line("slow_B_rms = 1\n"), 1);
    EXPECT_EQ(error_line("[noise]\njust text\n"), 2);
    EXPECT_EQ(error_line("[noise]\ndepump_initial = 1.5\n"), 2);
    EXPECT_EQ(error_line("[noise]\nshutter_closed = maybe\n"), 2);
    EXPECT_EQ(error_line("[detection]\nsnr = 0.5\n"), 2);
    EXPECT_EQ(error_line("[detection]\nthreshold = 2.5\n"), 2);
    EXPECT_EQ(error_line("[detection]\nshelving_pulses = 3\n"), 2);
    EXPECT_EQ(error_line("[detection]\nprep_fidelity = 1.1\n"), 2);
    EXPECT_EQ(error_line("[experiment]\nshots = 0\n"), 2);
    EXPECT_EQ(error_line("[experiment]\nseed = -4\n"), 2);
    EXPECT_EQ(error_line("[experiment]\nworkers = 0\n"), 2);
    EXPECT_EQ(error_line("[experiment]\nid = fig3_pumping\n\nno_such_param = 1\n"), 4);
    EXPECT_EQ(error_line("[constants]\npath = x\n"), 2);
}

TEST(Config, MissingFileIsConfigError) {
    EXPECT_THROW(load_config_file("/nonexistent/caqubit.ini"), ConfigError);
    EXPECT_THROW(parse("[constants]\nfile = /nonexistent/constants.txt\n"), ConfigError);
}

TEST(Config, ExperimentIdMustMatch) {
    const auto cfg = parse("[experiment]\nid = fig8_depump\n");
    EXPECT_THROW(run_experiment("fig3_pumping", cfg), ConfigError);
    EXPECT_THROW(run_experiment("fig99", default_config()), ConfigError);
}

TEST(Registry, CoversEveryExperiment) {
    const std::set<std::string> want{"fig3_pumping",     "fig4_bsb_flops",    "fig5_rap",
                                     "fig6_mw_rabi",     "fig7_raman_rabi",   "fig8_depump",
                                     "fig9_ramsey_100ms", "fig10_ramsey_05G", "heating_rate",
                                     "transport",        "coherence_extrapolation"};
    std::set<std::string> got;
    for (const auto& d : registry()) {
        got.insert(d.id);
        EXPECT_FALSE(d.summary.empty());
        EXPECT_GE(d.default_shots, 1);
        for (const auto& p : d.params) EXPECT_FALSE(p.doc.empty()) << d.id << "." << p.name;
    }
    EXPECT_EQ(got, want);
}

TEST(Report, ChecksCarryProvenance) {
    const auto r = run_experiment("fig3_pumping", default_config());
    EXPECT_TRUE(r.passed());
    ASSERT_FALSE(r.checks.empty());
    const auto j = report_json(r);
    EXPECT_EQ(j["schema_version"], kReportSchemaVersion);
    EXPECT_EQ(j["id"], "fig3_pumping");
    for (const auto& c : j["checks"]) {
        const std::string prov = c["provenance"];
        EXPECT_TRUE(prov == "reported" || prov == "derived" || prov == "trivial") << prov;
        EXPECT_TRUE(c.contains("achieved"));
        EXPECT_TRUE(c.contains("expected"));
        EXPECT_TRUE(c.contains("target") || (c.contains("lo") && c.contains("hi")));
    }
    ASSERT_EQ(j["fits"].size(), 1u);
    EXPECT_TRUE(j["fits"][0]["params"].contains("tau"));
    EXPECT_EQ(j["series"][0]["file"], "fig3_pumping.csv");
}

TEST(Report, ToleranceOverrides) {
    auto cfg = parse("[targets]\nfit_time_constant = 1e-9\n");
    const auto r = run_experiment("fig3_pumping", cfg);
    EXPECT_EQ(r.check("fit_time_constant").tolerance, 1e-9);
    EXPECT_FALSE(r.check("fit_time_constant").pass);
    EXPECT_FALSE(r.passed());
    cfg = parse("[targets]\nnot_a_check = 1\n");
    EXPECT_THROW(run_experiment("fig3_pumping", cfg), ConfigError);
}

TEST(Report, NonFiniteNumbersSerialize) {
    TargetCheck c{"x", TargetCheck::Kind::at_least, 1.0, 0, 0, 0, std::nan(""), "derived"};
    c.evaluate();
    EXPECT_FALSE(c.pass);
    RunReport r;
    r.id = "x";
    r.add_value("v", std::numeric_limits<double>::infinity());
    EXPECT_NO_THROW((void)report_json(r).dump());
}

TEST(Report, WrittenAtomicallyAndDeterministic) {
    auto cfg = parse("[experiment]\nshots = 40\npoints = 7\nseed = 9\n");
    const auto a = scratch("det_a"), b = scratch("det_b");
    const auto fa = write_report(run_experiment("fig8_depump", cfg), a);
    cfg.workers = 3;
    const auto fb = write_report(run_experiment("fig8_depump", cfg), b);
    ASSERT_EQ(fa.size(), 2u);
    EXPECT_EQ(slurp(fa[0]), slurp(fb[0]));
    EXPECT_EQ(slurp(fa[0]).substr(0, 19), "x,y,sigma,n_shots\n0");
    for (const auto& e : fs::directory_iterator(a)) EXPECT_NE(e.path().extension(), ".tmp");
    // JSON differs only in wall time
    auto ja = nlohmann::json::parse(slurp(fa[1])), jb = nlohmann::json::parse(slurp(fb[1]));
    ja.erase("wall_time_s");
    jb.erase("wall_time_s");
    EXPECT_EQ(ja, jb);

    cfg.seed = 10;
    const auto c = scratch("det_c");
    const auto fc = write_report(run_experiment("fig8_depump", cfg), c);
    EXPECT_NE(slurp(fa[0]), slurp(fc[0]));
    for (const auto& d : {a, b, c}) fs::remove_all(d);
}

TEST(Experiments, ShutterClosedIsFlat) {
    auto cfg = parse("[noise]\nshutter_closed = true\n[experiment]\nshots = 2000\n");
    const auto r = run_experiment("fig8_depump", cfg);
    EXPECT_TRUE(r.passed());
    EXPECT_NEAR(r.value("mean_population"), 0.97, 0.01);
    for (const auto& p : r.series.front().points) EXPECT_NEAR(p.y, 0.97, 4 * p.sigma + 0.005);
}

TEST(Experiments, PhysicsErrorsPropagate) {
    auto cfg = parse("[experiment]\npoints = 0\n");
    EXPECT_THROW(run_experiment("fig3_pumping", cfg), PhysicsError);
    cfg = parse("[experiment]\nasymptote = 1.5\n");
    EXPECT_THROW(run_experiment("fig3_pumping", cfg), PhysicsError);
}

TEST(Experiments, SingleValueMatchesGridPoint) {
    const auto grid = run_experiment("fig5_rap", parse("[experiment]\nrabi_min = 2e4\nrabi_max = 8e4\npoints = 3\n"));
    ASSERT_EQ(grid.series.size(), 4u);
    for (std::size_t k = 0; k < 3; ++k) {
        const double x = grid.series.front().points[k].x;
        auto doc = IniDocument::parse("", "cli");
        doc.set("experiment", "rabi_peak", format_number(x));
        const auto one = run_experiment("fig5_rap", load_config(doc));
        for (std::size_t s = 0; s < 4; ++s) {
            ASSERT_EQ(one.series[s].points.size(), 1u);
            EXPECT_NEAR(one.series[s].points[0].y, grid.series[s].points[k].y, 1e-12);
        }
    }
}

TEST(Report, NumberFormatting) {
    EXPECT_EQ(format_number(10.0), "10");
    EXPECT_EQ(format_number(200.0), "200");
    EXPECT_EQ(format_number(-3000.0), "-3000");
    EXPECT_EQ(format_number(0.1), "0.1");
    EXPECT_EQ(format_number(520.83e-6), "0.00052083");
    EXPECT_EQ(format_number(0.0), "0");
    for (double v : {1e20, 1.0 / 3.0, 6.02214076e23, -1e-300, 123456789.123})
        EXPECT_EQ(std::strtod(format_number(v).c_str(), nullptr), v);
}
