#pragma once

// Run reports: data series, fit results, target comparisons and their
// CSV / JSON serialization. Files are written to a temporary name and renamed.

#include <nlohmann/json.hpp>

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "caqubit/dynamics.hpp"
#include "caqubit/errors.hpp"
#include "caqubit/fit.hpp"

namespace caqubit::harness {

inline constexpr int kReportSchemaVersion = 1;

/// FNV-1a, 64 bit.
inline std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

/// Shortest round-trip decimal representation.
inline std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    int prec = 1;
    for (; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v) break;
    }
    // spell out whole-number magnitudes: 200 rather than 2e+02
    const int e10 = v == 0.0 ? 0 : static_cast<int>(std::floor(std::log10(std::abs(v))));
    if (e10 >= prec && e10 < 16) std::snprintf(buf, sizeof buf, "%.*g", e10 + 1, v);
    return buf;
}

struct Series {
    std::string name;
    std::string x_label;
    std::vector<ScanPoint> points;
};

/// Where a target value comes from: "reported" for numbers quoted by the
/// experiment, "derived" for values computed independently, "trivial" for
/// limits that follow from the model definition.
struct TargetCheck {
    enum class Kind { absolute, relative, at_least, at_most, range };

    std::string name;
    Kind kind = Kind::absolute;
    double target = 0.0;
    double tolerance = 0.0;  // absolute or fractional, by kind
    double lo = 0.0, hi = 0.0;
    double achieved = 0.0;
    std::string provenance;
    bool pass = false;

    void evaluate() {
        switch (kind) {
            case Kind::absolute: pass = std::abs(achieved - target) <= tolerance; break;
            case Kind::relative: pass = std::abs(achieved - target) <= tolerance * std::abs(target); break;
            case Kind::at_least: pass = achieved >= target; break;
            case Kind::at_most: pass = achieved <= target; break;
            case Kind::range: pass = achieved >= lo && achieved <= hi; break;
        }
        if (std::isnan(achieved)) pass = false;
    }

    [[nodiscard]] std::string describe() const {
        std::ostringstream s;
        switch (kind) {
            case Kind::absolute: s << format_number(target) << " +/- " << format_number(tolerance); break;
            case Kind::relative: s << format_number(target) << " +/- " << format_number(100.0 * tolerance) << "%"; break;
            case Kind::at_least: s << ">= " << format_number(target); break;
            case Kind::at_most: s << "<= " << format_number(target); break;
            case Kind::range: s << "[" << format_number(lo) << ", " << format_number(hi) << "]"; break;
        }
        return s.str();
    }
};

inline std::string kind_name(TargetCheck::Kind k) {
    switch (k) {
        case TargetCheck::Kind::absolute: return "absolute";
        case TargetCheck::Kind::relative: return "relative";
        case TargetCheck::Kind::at_least: return "at_least";
        case TargetCheck::Kind::at_most: return "at_most";
        case TargetCheck::Kind::range: return "range";
    }
    return "?";
}

struct NamedFit {
    std::string label;
    std::string family;
    FitResult result;
};

struct RunReport {
    std::string id;
    std::uint64_t seed = 0;
    int shots = 0;
    std::string constants_hash;
    std::vector<std::pair<std::string, double>> params;  // effective experiment parameters
    std::vector<std::pair<std::string, std::string>> settings;  // noise / detection echo
    std::vector<Series> series;
    std::vector<NamedFit> fits;
    std::vector<std::pair<std::string, double>> values;  // derived scalars
    std::vector<TargetCheck> checks;
    std::map<std::string, double> tolerance_overrides;
    double wall_time = 0.0;

    [[nodiscard]] bool passed() const {
        for (const auto& c : checks)
            if (!c.pass) return false;
        return true;
    }

    [[nodiscard]] const NamedFit& fit(const std::string& label) const {
        for (const auto& f : fits)
            if (f.label == label) return f;
        throw DomainError("report has no fit '" + label + "'");
    }

    [[nodiscard]] const Series& get_series(const std::string& name) const {
        for (const auto& s : series)
            if (s.name == name) return s;
        throw DomainError("report has no series '" + name + "'");
    }

    [[nodiscard]] double value(const std::string& name) const {
        for (const auto& [k, v] : values)
            if (k == name) return v;
        for (const auto& c : checks)
            if (c.name == name) return c.achieved;
        throw DomainError("report has no value '" + name + "'");
    }

    [[nodiscard]] const TargetCheck& check(const std::string& name) const {
        for (const auto& c : checks)
            if (c.name == name) return c;
        throw DomainError("report has no check '" + name + "'");
    }

    void add_value(std::string name, double v) { values.emplace_back(std::move(name), v); }

    TargetCheck& add_check(TargetCheck c) {
        if (auto it = tolerance_overrides.find(c.name); it != tolerance_overrides.end()) {
            if (c.kind == TargetCheck::Kind::range) {
                const double mid = 0.5 * (c.lo + c.hi);
                c.lo = mid - it->second;
                c.hi = mid + it->second;
            } else {
                c.tolerance = it->second;
            }
        }
        c.evaluate();
        checks.push_back(std::move(c));
        return checks.back();
    }

    void expect_abs(std::string name, double achieved, double target, double tol, std::string prov) {
        add_check({std::move(name), TargetCheck::Kind::absolute, target, tol, 0, 0, achieved, std::move(prov)});
    }
    void expect_rel(std::string name, double achieved, double target, double frac, std::string prov) {
        add_check({std::move(name), TargetCheck::Kind::relative, target, frac, 0, 0, achieved, std::move(prov)});
    }
    void expect_at_least(std::string name, double achieved, double bound, std::string prov) {
        add_check({std::move(name), TargetCheck::Kind::at_least, bound, 0, 0, 0, achieved, std::move(prov)});
    }
    void expect_at_most(std::string name, double achieved, double bound, std::string prov) {
        add_check({std::move(name), TargetCheck::Kind::at_most, bound, 0, 0, 0, achieved, std::move(prov)});
    }
    void expect_range(std::string name, double achieved, double lo, double hi, std::string prov) {
        add_check({std::move(name), TargetCheck::Kind::range, 0, 0, lo, hi, achieved, std::move(prov)});
    }
};

// --- serialization -------------------------------------------------------------

inline std::string series_csv(const Series& s) {
    std::string out = "x,y,sigma,n_shots\n";
    for (const auto& p : s.points)
        out += format_number(p.x) + "," + format_number(p.y) + "," + format_number(p.sigma) + "," +
               std::to_string(p.n_shots) + "\n";
    return out;
}

inline nlohmann::json number_json(double v) {
    if (std::isfinite(v)) return v;
    return format_number(v);
}

inline nlohmann::json fit_json(const NamedFit& f) {
    nlohmann::json j;
    j["label"] = f.label;
    j["family"] = f.family;
    nlohmann::json params = nlohmann::json::object();
    for (std::size_t i = 0; i < f.result.names.size(); ++i) {
        const auto k = static_cast<Eigen::Index>(i);
        params[f.result.names[i]] = {{"value", number_json(f.result.params[k])},
                                     {"sigma", number_json(f.result.one_sigma[k])}};
    }
    j["params"] = params;
    j["chi2"] = number_json(f.result.chi2);
    j["dof"] = f.result.dof;
    j["converged"] = f.result.converged;
    j["iterations"] = f.result.iterations;
    return j;
}

inline std::string series_file(const RunReport& r, const Series& s) {
    return r.series.size() == 1 ? r.id + ".csv" : r.id + "-" + s.name + ".csv";
}

inline nlohmann::json report_json(const RunReport& r) {
    nlohmann::json j;
    j["schema_version"] = kReportSchemaVersion;
    j["id"] = r.id;
    j["seed"] = r.seed;
    j["shots"] = r.shots;
    j["constants_hash"] = r.constants_hash;
    nlohmann::json params = nlohmann::json::object();
    for (const auto& [k, v] : r.params) params[k] = number_json(v);
    j["params"] = params;
    nlohmann::json settings = nlohmann::json::object();
    for (const auto& [k, v] : r.settings) settings[k] = v;
    j["settings"] = settings;
    nlohmann::json series = nlohmann::json::array();
    for (const auto& s : r.series)
        series.push_back({{"name", s.name}, {"x", s.x_label}, {"points", s.points.size()}, {"file", series_file(r, s)}});
    j["series"] = series;
    nlohmann::json fits = nlohmann::json::array();
    for (const auto& f : r.fits) fits.push_back(fit_json(f));
    j["fits"] = fits;
    nlohmann::json values = nlohmann::json::object();
    for (const auto& [k, v] : r.values) values[k] = number_json(v);
    j["values"] = values;
    nlohmann::json checks = nlohmann::json::array();
    for (const auto& c : r.checks) {
        nlohmann::json cj{{"name", c.name},           {"kind", kind_name(c.kind)},
                          {"achieved", number_json(c.achieved)}, {"expected", c.describe()},
                          {"provenance", c.provenance}, {"pass", c.pass}};
        if (c.kind == TargetCheck::Kind::range) {
            cj["lo"] = c.lo;
            cj["hi"] = c.hi;
        } else {
            cj["target"] = c.target;
            if (c.kind == TargetCheck::Kind::absolute || c.kind == TargetCheck::Kind::relative)
                cj["tolerance"] = c.tolerance;
        }
        checks.push_back(cj);
    }
    j["checks"] = checks;
    j["passed"] = r.passed();
    j["wall_time_s"] = r.wall_time;
    return j;
}

/// Writes `content` to `path` via a temporary file in the same directory.
inline void write_atomic(const std::filesystem::path& path, const std::string& content) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out << content;
        out.flush();
        if (!out) throw std::runtime_error("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

/// Writes one CSV per series and `<id>.json`; returns the paths written.
inline std::vector<std::filesystem::path> write_report(const RunReport& r, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    std::vector<std::filesystem::path> written;
    for (const auto& s : r.series) {
        written.push_back(dir / series_file(r, s));
        write_atomic(written.back(), series_csv(s));
    }
    written.push_back(dir / (r.id + ".json"));
    write_atomic(written.back(), report_json(r).dump(2) + "\n");
    return written;
}

}  // namespace caqubit::harness
