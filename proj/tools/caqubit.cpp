// caqubit: run, scan and inspect the simulated experiments.
//
// exit codes: 0 ok, 1 a target was missed, 2 configuration error, 3 physics error

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "caqubit/caqubit.hpp"

namespace fs = std::filesystem;
using namespace caqubit;
using namespace caqubit::harness;

namespace {

constexpr int kOk = 0, kMiss = 1, kConfig = 2, kPhysics = 3;

struct Common {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<int> shots;
    std::optional<unsigned> workers;
    std::string out;
};

void add_common(CLI::App* app, Common& c) {
    app->add_option("--config,-c", c.config, "configuration file")->check(CLI::ExistingFile);
    app->add_option("--seed", c.seed, "random seed (overrides the config)");
    app->add_option("--shots", c.shots, "shots per point (overrides the config)")->check(CLI::PositiveNumber);
    app->add_option("--workers,-j", c.workers, "worker threads")->check(CLI::PositiveNumber);
    app->add_option("--out,-o", c.out, "output directory (default $CAQUBIT_OUT or ./out)");
}

fs::path out_dir(const Common& c) {
    if (!c.out.empty()) return c.out;
    if (const char* e = std::getenv("CAQUBIT_OUT"); e && *e) return e;
    return "out";
}

IniDocument load_doc(const Common& c) {
    auto doc = c.config.empty() ? IniDocument::parse("", "command line") : IniDocument::load(c.config);
    if (c.seed) doc.set("experiment", "seed", std::to_string(*c.seed));
    if (c.shots) doc.set("experiment", "shots", std::to_string(*c.shots));
    if (c.workers) doc.set("experiment", "workers", std::to_string(*c.workers));
    return doc;
}

fs::path base_of(const Common& c) { return c.config.empty() ? fs::path{} : fs::path(c.config).parent_path(); }

void print_report(const RunReport& r) {
    std::printf("%s  seed %llu  shots %d  %.2f s\n", r.id.c_str(), static_cast<unsigned long long>(r.seed), r.shots,
                r.wall_time);
    for (const auto& c : r.checks)
        std::printf("  %-4s %-30s %-14s expected %s  [%s]\n", c.pass ? "ok" : "MISS", c.name.c_str(),
                    format_number(c.achieved).c_str(), c.describe().c_str(), c.provenance.c_str());
}

std::vector<double> parse_grid(const std::string& g) {
    const auto a = g.find(':');
    const auto b = a == std::string::npos ? a : g.find(':', a + 1);
    if (b == std::string::npos) throw ConfigError("--grid", 0, "expected a:b:n, got '" + g + "'");
    double lo = 0, hi = 0;
    long n = 0;
    try {
        std::size_t used = 0;
        lo = std::stod(g.substr(0, a));
        hi = std::stod(g.substr(a + 1, b - a - 1));
        const auto ns = g.substr(b + 1);
        n = std::stol(ns, &used);
        if (used != ns.size()) throw std::invalid_argument(ns);
    } catch (const std::logic_error&) {
        throw ConfigError("--grid", 0, "expected a:b:n, got '" + g + "'");
    }
    if (n < 1) throw ConfigError("--grid", 0, "empty grid");
    std::vector<double> xs;
    for (long i = 0; i < n; ++i) xs.push_back(n == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / (n - 1));
    return xs;
}

// `noise.key` and `detection.key` address those sections, anything else is an
// experiment parameter
std::pair<std::string, std::string> split_param(const std::string& p) {
    const auto dot = p.find('.');
    if (dot == std::string::npos) return {"experiment", p};
    return {p.substr(0, dot), p.substr(dot + 1)};
}

int cmd_run(const std::string& id, const Common& c) {
    const auto cfg = load_config(load_doc(c), base_of(c));
    const auto r = run_experiment(id, cfg);
    const auto files = write_report(r, out_dir(c));
    print_report(r);
    for (const auto& f : files) std::printf("  wrote %s\n", f.string().c_str());
    return r.passed() ? kOk : kMiss;
}

int cmd_scan(const std::string& id, const std::string& param, const std::string& grid, const Common& c) {
    if (!find_descriptor(id)) throw ConfigError("command line", 0, "unknown experiment '" + id + "'");
    const auto xs = parse_grid(grid);
    const auto [section, key] = split_param(param);
    if (section != "experiment" && section != "noise" && section != "detection")
        throw ConfigError("--param", 0, "cannot scan section '" + section + "'");

    std::string table = param + ",series,x,y,sigma,n_shots\n";
    for (double v : xs) {
        auto doc = load_doc(c);
        doc.set(section, key, format_number(v));
        const auto r = run_experiment(id, load_config(doc, base_of(c)));
        for (const auto& s : r.series)
            for (const auto& p : s.points)
                table += format_number(v) + "," + s.name + "," + format_number(p.x) + "," + format_number(p.y) + "," +
                         format_number(p.sigma) + "," + std::to_string(p.n_shots) + "\n";
        int missed = 0;
        for (const auto& ch : r.checks) missed += ch.pass ? 0 : 1;
        std::printf("%s=%s  %zu checks, %d missed  %.2f s\n", param.c_str(), format_number(v).c_str(), r.checks.size(),
                    missed, r.wall_time);
    }
    const auto dir = out_dir(c);
    fs::create_directories(dir);
    const auto path = dir / (id + "_scan.csv");
    write_atomic(path, table);
    std::printf("wrote %s\n", path.string().c_str());
    return kOk;
}

int cmd_validate(const std::string& path) {
    const auto cfg = load_config_file(path);
    if (cfg.id) {
        const auto* d = find_descriptor(*cfg.id);
        if (!d) throw ConfigError(path, 0, "unknown experiment '" + *cfg.id + "'");
        (void)make_context(*d, cfg);
    } else if (!cfg.experiment.empty()) {
        throw ConfigError(path, cfg.experiment.begin()->second.line,
                          "experiment parameters need [experiment] id to be checked");
    }
    cfg.noise.validate();
    cfg.readout.validate();
    std::printf("%s: ok\n", path.c_str());
    return kOk;
}

int cmd_list() {
    for (const auto& d : registry()) {
        std::printf("%-24s %s (default %d shots)\n", d.id.c_str(), d.summary.c_str(), d.default_shots);
        for (const auto& p : d.params)
            std::printf("    %-22s %-12s %s\n", p.name.c_str(), format_number(p.value).c_str(), p.doc.c_str());
    }
    return kOk;
}

int cmd_version(const std::string& constants) {
    const auto c = constants.empty() ? AtomicConstants::defaults() : AtomicConstants::from_file(constants);
    std::printf("caqubit %d.%d.%d\nreport schema %d\nconstants %s %s\n", 0, 1, 0, kReportSchemaVersion,
                constants.empty() ? "builtin" : constants.c_str(), hex64(fnv1a(c.text())).c_str());
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Simulated 43Ca+ qubit experiments"};
    app.require_subcommand(1);

    Common common;
    std::string id, param, grid, path, constants;

    auto* run = app.add_subcommand("run", "run one experiment and write CSV + JSON");
    run->add_option("id", id, "experiment id (see list)")->required();
    add_common(run, common);

    auto* scan = app.add_subcommand("scan", "repeat an experiment over a parameter grid");
    scan->add_option("id", id, "experiment id")->required();
    scan->add_option("--param,-p", param, "experiment parameter, or noise.<key> / detection.<key>")->required();
    scan->add_option("--grid,-g", grid, "a:b:n, n evenly spaced values")->required();
    add_common(scan, common);

    auto* validate = app.add_subcommand("validate", "check a configuration file without running");
    validate->add_option("config", path)->required();

    app.add_subcommand("list", "list experiments and their parameters");

    auto* version = app.add_subcommand("version", "print version and constants hash");
    version->add_option("--constants", constants, "constants file to hash")->check(CLI::ExistingFile);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kConfig;
    }

    try {
        if (*run) return cmd_run(id, common);
        if (*scan) return cmd_scan(id, param, grid, common);
        if (*validate) return cmd_validate(path);
        if (app.got_subcommand("list")) return cmd_list();
        if (*version) return cmd_version(constants);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kConfig;
    } catch (const PhysicsError& e) {
        std::fprintf(stderr, "physics error: %s\n", e.what());
        return kPhysics;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kPhysics;
    }
    return kOk;
}
