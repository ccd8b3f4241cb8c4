#pragma once

// Harness configuration files.
//
//   [constants]   file = path to an atomic constants file (relative to the config)
//   [noise]       NoiseModel fields, see kNoiseKeys
//   [detection]   detection window, count rates, preparation and shelving fidelity
//   [experiment]  id, shots, seed, workers and per-experiment parameters
//   [targets]     <check name> = tolerance override
//
// Unknown sections and keys are errors and carry the offending line number.

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "caqubit/atomic.hpp"
#include "caqubit/detection.hpp"
#include "caqubit/dynamics.hpp"
#include "caqubit/ini.hpp"
#include "caqubit/noise.hpp"

namespace caqubit::harness {

struct KeyDoc {
    const char* key;
    const char* doc;
};

inline constexpr KeyDoc kNoiseKeys[] = {
    {"drift_rate", "slow field drift, G/h"},
    {"recalibration_interval", "s between resonance recalibrations (drift reset)"},
    {"line_amp", "50 Hz field amplitude, G"},
    {"line_freq", "line frequency, Hz"},
    {"slow_B_rms", "quasi-static shot-to-shot field rms, G"},
    {"white_B_psd", "white field noise, one-sided G^2/Hz"},
    {"laser_offset_rms", "729 nm servo residual rms, Hz"},
    {"laser_offset_bound", "truncation of the servo residual, Hz"},
    {"intensity_frac_rms", "fractional Raman intensity rms per shot"},
    {"microwave_amp_rms", "fractional microwave amplitude rms per shot"},
    {"path_phase_rms", "Raman path phase rms per shot, rad"},
    {"depump_time", "residual-light depumping time constant, s"},
    {"depump_initial", "true |down> population before the wait"},
    {"shutter_closed", "mechanical shutter blocks the cooling light (bool)"},
};

inline constexpr KeyDoc kDetectionKeys[] = {
    {"duration", "detection window, s"},
    {"bright_rate", "fluorescence count rate, 1/s"},
    {"snr", "bright rate / background rate"},
    {"threshold", "count threshold; negative selects the optimum"},
    {"d52_lifetime", "D5/2 lifetime, s (defaults to the constants file)"},
    {"prep_fidelity", "state preparation fidelity"},
    {"shelving_fidelity", "per-pulse shelving fidelity"},
    {"shelving_pulses", "1 or 2 shelving pulses"},
};

inline constexpr const char* kSections[] = {"constants", "noise", "detection", "experiment", "targets"};

struct RunConfig {
    std::shared_ptr<const AtomicConstants> constants;
    NoiseModel noise;
    ReadoutModel readout;
    std::optional<std::string> id;
    std::map<std::string, IniEntry> experiment;  // raw experiment parameters
    std::optional<int> shots;
    std::optional<std::uint64_t> seed;
    unsigned workers = 1;
    std::map<std::string, double> tolerances;
    std::string source;
};

namespace detail {

inline bool known(const KeyDoc* first, const KeyDoc* last, const std::string& k) {
    for (auto* p = first; p != last; ++p)
        if (k == p->key) return true;
    return false;
}

inline long long integer_entry(const IniDocument& doc, const std::string& section, const std::string& key) {
    const auto& e = doc.require(section, key);
    const double v = doc.to_double(e, section, key);
    if (v != std::floor(v) || std::abs(v) > 9.0e15)
        throw ConfigError(doc.source(), e.line, "[" + section + "] " + key + " must be an integer");
    return static_cast<long long>(v);
}

}  // namespace detail

inline NoiseModel default_noise() { return NoiseModel{}; }

inline ReadoutModel default_readout(const AtomicConstants& c) {
    ReadoutModel r;
    r.detection.d52_lifetime = c.d52_lifetime_s();
    return r;
}

/// Builds a run configuration from a parsed document. `base` resolves
/// relative constants-file paths.
inline RunConfig load_config(const IniDocument& doc, const std::filesystem::path& base = {}) {
    const auto& src = doc.source();
    for (const auto& [name, sec] : doc.sections()) {
        bool ok = false;
        for (const char* s : kSections) ok = ok || name == s;
        if (!ok) throw ConfigError(src, doc.section_line(name), "unknown section [" + name + "]");
    }

    RunConfig cfg;
    cfg.source = src;
    cfg.constants = std::make_shared<const AtomicConstants>(AtomicConstants::defaults());
    if (doc.has_section("constants")) {
        for (const auto& [k, e] : doc.sections().at("constants"))
            if (k != "file") throw ConfigError(src, e.line, "unknown key '" + k + "' in [constants]");
        if (const auto* e = doc.find("constants", "file")) {
            std::filesystem::path p = e->value;
            if (p.is_relative() && !base.empty()) p = base / p;
            cfg.constants = std::make_shared<const AtomicConstants>(AtomicConstants::from_file(p.string()));
        }
    }

    cfg.noise = default_noise();
    if (doc.has_section("noise")) {
        auto& n = cfg.noise;
        const std::map<std::string, double*> fields{
            {"drift_rate", &n.drift_rate},
            {"recalibration_interval", &n.recalibration_interval},
            {"line_amp", &n.line_amp},
            {"line_freq", &n.line_freq},
            {"slow_B_rms", &n.slow_B_rms},
            {"white_B_psd", &n.white_B_psd},
            {"laser_offset_rms", &n.laser_offset_rms},
            {"laser_offset_bound", &n.laser_offset_bound},
            {"intensity_frac_rms", &n.intensity_frac_rms},
            {"microwave_amp_rms", &n.microwave_amp_rms},
            {"path_phase_rms", &n.path_phase_rms},
            {"depump_time", &n.depump_time},
            {"depump_initial", &n.depump_initial},
        };
        for (const auto& [k, e] : doc.sections().at("noise")) {
            if (k == "shutter_closed") {
                n.shutter_closed = IniDocument::to_bool(e, src, k);
                continue;
            }
            auto it = fields.find(k);
            if (it == fields.end()) throw ConfigError(src, e.line, "unknown key '" + k + "' in [noise]");
            const bool zero_ok = k != "line_freq" && k != "recalibration_interval" && k != "depump_time";
            *it->second = doc.positive("noise", k, zero_ok);
        }
        if (n.depump_initial > 1.0)
            throw ConfigError(src, doc.require("noise", "depump_initial").line, "depump_initial must be <= 1");
    }

    cfg.readout = default_readout(*cfg.constants);
    if (doc.has_section("detection")) {
        auto& d = cfg.readout.detection;
        for (const auto& [k, e] : doc.sections().at("detection")) {
            if (!detail::known(std::begin(kDetectionKeys), std::end(kDetectionKeys), k))
                throw ConfigError(src, e.line, "unknown key '" + k + "' in [detection]");
            if (k == "duration") d.duration = doc.positive("detection", k);
            else if (k == "bright_rate") d.bright_rate = doc.positive("detection", k);
            else if (k == "snr") {
                d.snr = doc.positive("detection", k);
                if (d.snr <= 1.0) throw ConfigError(src, e.line, "[detection] snr must exceed 1");
            } else if (k == "threshold") d.threshold = static_cast<int>(detail::integer_entry(doc, "detection", k));
            else if (k == "d52_lifetime") d.d52_lifetime = doc.positive("detection", k);
            else if (k == "prep_fidelity" || k == "shelving_fidelity") {
                const double v = doc.positive("detection", k, true);
                if (v > 1.0) throw ConfigError(src, e.line, "[detection] " + k + " must be <= 1");
                if (k == "prep_fidelity") cfg.readout.prep_fidelity = v;
                else for (auto& f : cfg.readout.shelving.pulse_fidelities) f = v;
            }
        }
        if (const auto* e = doc.find("detection", "shelving_pulses")) {
            const auto np = detail::integer_entry(doc, "detection", "shelving_pulses");
            if (np != 1 && np != 2) throw ConfigError(src, e->line, "[detection] shelving_pulses must be 1 or 2");
            auto& s = cfg.readout.shelving;
            s.pulse_fidelities.resize(static_cast<std::size_t>(np), s.pulse_fidelities.front());
            s.targets.resize(static_cast<std::size_t>(np));
        }
    }

    if (doc.has_section("experiment")) {
        for (const auto& [k, e] : doc.sections().at("experiment")) {
            if (k == "id") cfg.id = e.value;
            else if (k == "shots") {
                const auto v = detail::integer_entry(doc, "experiment", k);
                if (v < 1) throw ConfigError(src, e.line, "[experiment] shots must be >= 1");
                cfg.shots = static_cast<int>(v);
            } else if (k == "seed") {
                const auto v = detail::integer_entry(doc, "experiment", k);
                if (v < 0) throw ConfigError(src, e.line, "[experiment] seed must be non-negative");
                cfg.seed = static_cast<std::uint64_t>(v);
            } else if (k == "workers") {
                const auto v = detail::integer_entry(doc, "experiment", k);
                if (v < 1) throw ConfigError(src, e.line, "[experiment] workers must be >= 1");
                cfg.workers = static_cast<unsigned>(v);
            } else {
                (void)doc.to_double(e, "experiment", k);
                cfg.experiment[k] = e;
            }
        }
    }

    if (doc.has_section("targets"))
        for (const auto& [k, e] : doc.sections().at("targets")) cfg.tolerances[k] = doc.positive("targets", k, true);
    return cfg;
}

inline RunConfig load_config_file(const std::string& path) {
    const auto doc = IniDocument::load(path);
    return load_config(doc, std::filesystem::path(path).parent_path());
}

inline RunConfig default_config() { return load_config(IniDocument::parse("", "defaults")); }

}  // namespace caqubit::harness
