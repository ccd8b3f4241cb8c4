#pragma once

// Experiment descriptors: each regenerates one data set with the simulator,
// fits it and compares the outcome with its targets.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "caqubit/atomic.hpp"
#include "caqubit/detection.hpp"
#include "caqubit/dynamics.hpp"
#include "caqubit/fit.hpp"
#include "caqubit/harness/config.hpp"
#include "caqubit/harness/report.hpp"
#include "caqubit/motion.hpp"
#include "caqubit/noise.hpp"
#include "caqubit/prep.hpp"

namespace caqubit::harness {

struct ParamSpec {
    std::string name;
    double value = 0.0;
    std::string doc;
};

struct Context {
    RunConfig cfg;
    std::vector<std::pair<std::string, double>> params;
    int shots = 1;
    std::uint64_t seed = 1;

    [[nodiscard]] double p(const std::string& name) const {
        for (const auto& [k, v] : params)
            if (k == name) return v;
        throw DomainError("experiment has no parameter '" + name + "'");
    }
    [[nodiscard]] int count(const std::string& name) const {
        const double v = p(name);
        if (!(v >= 1.0) || v != std::floor(v)) throw DomainError(name + " must be a positive integer");
        return static_cast<int>(v);
    }
    [[nodiscard]] const AtomicConstants& constants() const { return *cfg.constants; }
    [[nodiscard]] unsigned workers() const { return cfg.workers; }
};

struct Descriptor {
    std::string id;
    std::string summary;
    int default_shots = 1;
    std::vector<ParamSpec> params;
    std::function<void(const Context&, RunReport&)> body;
};

namespace detail {

inline const char* kReported = "reported";
inline const char* kDerived = "derived";
inline const char* kTrivial = "trivial";

inline std::vector<double> linspace(double a, double b, int n) {
    if (n < 1) throw DomainError("grid needs at least one point");
    std::vector<double> v;
    for (int i = 0; i < n; ++i) v.push_back(n == 1 ? a : a + (b - a) * i / (n - 1));
    return v;
}

inline std::vector<double> logspace(double a, double b, int n) {
    if (!(a > 0.0 && b > 0.0)) throw DomainError("log grid needs positive bounds");
    auto v = linspace(std::log(a), std::log(b), n);
    for (auto& x : v) x = std::exp(x);
    return v;
}

inline Dataset to_dataset(const std::vector<ScanPoint>& pts) {
    Dataset d;
    for (const auto& p : pts) d.push_back({p.x, p.y, p.sigma});
    return d;
}

inline Dataset select(const Dataset& d, double lo, double hi) {
    Dataset out;
    for (const auto& p : d)
        if (p.x >= lo && p.x <= hi) out.push_back(p);
    return out;
}

/// Fits binomial data twice: first with the measured error bars, then with
/// error bars from the fitted curve, sqrt(f (1 - f) / N) floored at 1/(2N).
/// Measured bars over-weight points that fluctuated towards 0 or 1.
inline NamedFit binomial_fit(const std::string& label, const Model& m, const Dataset& d, const Eigen::VectorXd& init,
                             int shots, const FitOptions& opt = {}) {
    const auto first = fit(m, d, init, opt);
    Dataset w = d;
    const double n = shots;
    for (auto& p : w) {
        const double f = std::clamp(m.value(p.x, first.params), 0.0, 1.0);
        p.sigma = std::max(std::sqrt(f * (1.0 - f) / n), 1.0 / (2.0 * n));
    }
    return {label, family_name(m.family()), fit(m, w, first.params, opt)};
}

inline ShotModel qubit_shot_model(const Context& ctx, double field) {
    ShotModel m;
    m.basis = Basis({kQubitDown, kQubitUp}, 0);
    m.noise = ctx.cfg.noise;
    m.noise.B0 = field;
    m.b_ref = field;
    m.readout = ctx.cfg.readout;
    m.constants = ctx.cfg.constants.get();
    return m;
}

inline ScanOptions scan_options(const Context& ctx, std::uint64_t stream) {
    ScanOptions o;
    o.shots = ctx.shots;
    o.seed = shot_seed(ctx.seed, stream, 0);
    o.workers = ctx.workers();
    return o;
}

/// Raman leak rate: the fraction of P1/2 scattering events that leave the
/// qubit, for beams giving `tau_pi` at `detuning_hz`.
inline RamanDrive raman_drive(const Context& ctx, const BeamGeometry& g, double tau_pi, const HarmonicMode& mode) {
    const auto beams = RamanBeams::for_pi_time(g, tau_pi, ctx.p("raman_detuning"));
    return raman_effective_drive(beams, ctx.p("raman_detuning"), mode, ctx.constants());
}

inline HarmonicMode calcium43_mode(const Context& ctx, double freq_hz) {
    return HarmonicMode::from_frequency(freq_hz, ctx.constants().mass_kg());
}

// --- descriptors ---------------------------------------------------------------

inline void run_fig3(const Context& ctx, RunReport& r) {
    PumpingConfig cfg;
    cfg.time_constant = ctx.p("time_constant");
    cfg.asymptote = ctx.p("asymptote");
    cfg.initial_population = ctx.p("initial_population");
    cfg.pulse_fidelity = ctx.p("pulse_fidelity");
    cfg.validate();

    const auto ts = linspace(0.0, ctx.p("t_max"), ctx.count("points"));
    Series s{"pumping", "t_s", {}};
    for (std::size_t i = 0; i < ts.size(); ++i) {
        Rng rng(shot_seed(ctx.seed, 3, i));
        std::binomial_distribution<int> draw(ctx.shots, optical_pumping_curve(ts[i], cfg));
        const auto est = estimate_population(draw(rng), ctx.shots);
        s.points.push_back({ts[i], est.p, est.sigma, ctx.shots});
    }
    r.series.push_back(s);

    const auto data = to_dataset(s.points);
    const auto guess = init_guess(Family::exp_decay, data);
    r.fits.push_back(binomial_fit("pumping", Model::exp_decay(), data, guess.params, ctx.shots));
    const auto& f = r.fits.back().result;

    r.add_value("population_10us", optical_pumping_curve(10e-6, cfg));
    r.expect_at_least("population_10us", optical_pumping_curve(10e-6, cfg), 0.979, kReported);
    r.expect_rel("fit_time_constant", f.param("tau"), 1.4e-6, 0.10, kReported);
    r.expect_abs("fit_asymptote", f.param("c"), 0.98, 0.01, kReported);
    r.expect_at_least("enhanced_pumping", enhanced_pumping(cfg), 0.992, kReported);
    PumpingConfig ideal = cfg;
    ideal.pulse_fidelity = 1.0;
    const double fail = 1.0 - cfg.asymptote;
    r.expect_abs("enhanced_pumping_ideal_pulses", enhanced_pumping(ideal), 1.0 - fail * fail, 1e-12, kDerived);
}

inline void run_fig4(const Context& ctx, RunReport& r) {
    CoolingConfig cc;
    cc.doppler_nbar = ctx.p("doppler_nbar");
    cc.eta = ctx.p("eta");
    cc.removal_efficiency = ctx.p("removal_efficiency");
    cc.recoil_per_cycle = ctx.p("recoil_per_cycle");
    cc.cycles = ctx.count("cycles");
    const auto cooled = sideband_cool(doppler_state(cc), cc, cc.cycles);
    r.add_value("cooled_nbar", cooled.mean());
    r.expect_abs("cooled_nbar", cooled.mean(), 0.06, 0.02, kReported);

    const QuantumLevel s44{Term::S1_2, 4, 4}, d66{Term::D5_2, 6, 6};
    ShotModel m = qubit_shot_model(ctx, ctx.p("field"));
    m.basis = Basis({s44, d66}, ctx.count("fock_cutoff"));
    m.initial = s44;
    m.dark_level = d66;
    m.shelve = false;
    m.motion = cooled;

    PulseEvent bsb;
    bsb.channel = Channel::quadrupole;
    bsb.lower = s44;
    bsb.upper = d66;
    bsb.sideband = 1;
    bsb.eta = cc.eta;
    bsb.rabi_peak = phys::two_pi * ctx.p("carrier_rabi");
    const auto ts = linspace(0.0, ctx.p("t_max"), ctx.count("points"));
    Series s{"bsb", "t_s", rabi_scan(m, bsb, ts, scan_options(ctx, 4))};
    r.series.push_back(s);

    const auto data = to_dataset(s.points);
    double ymax = 0.0;
    for (const auto& p : data) ymax = std::max(ymax, p.y);
    Eigen::VectorXd init(3);
    init << 0.1, bsb.rabi_peak, std::min(1.0, ymax);
    r.fits.push_back(binomial_fit("thermal", Model::thermal_flop(cc.eta, 1), data, init, ctx.shots));
    const auto& f = r.fits.back().result;
    r.expect_abs("fit_nbar", f.param("nbar"), 0.06, 0.02, kReported);
}

struct RapSet {
    double tau;
    double delta_c;
};

inline const std::vector<RapSet> kRapSets{{50e-6, 50e3}, {100e-6, 100e3}, {200e-6, 200e3}, {400e-6, 400e3}};

/// Widest contiguous stretch of the grid with transfer >= level, as max/min ratio.
inline double plateau_ratio(const std::vector<ScanPoint>& pts, double level) {
    double best = 0.0;
    std::size_t start = 0;
    bool in = false;
    for (std::size_t i = 0; i <= pts.size(); ++i) {
        const bool ok = i < pts.size() && pts[i].y >= level;
        if (ok && !in) {
            start = i;
            in = true;
        } else if (!ok && in) {
            best = std::max(best, pts[i - 1].x / pts[start].x);
            in = false;
        }
    }
    return best;
}

inline void run_fig5(const Context& ctx, RunReport& r) {
    const double single = ctx.p("rabi_peak");
    const auto grid = single > 0.0 ? std::vector<double>{single}
                                   : logspace(ctx.p("rabi_min"), ctx.p("rabi_max"), ctx.count("points"));
    for (const auto& set : kRapSets) {
        Series s{"tau" + format_number(set.tau * 1e6) + "us", "rabi_peak_hz", {}};
        s.points.resize(grid.size());
        parallel_for(grid.size(), ctx.workers(), [&](std::size_t i) {
            s.points[i] = {grid[i], rap_transfer(phys::two_pi * grid[i], set.tau, set.delta_c), 0.0, 0};
        });
        r.series.push_back(std::move(s));
    }
    if (single > 0.0) return;
    for (std::size_t k = 0; k < kRapSets.size(); ++k) {
        const double ratio = plateau_ratio(r.series[k].points, 0.99);
        r.add_value("plateau_ratio_" + r.series[k].name, ratio);
        if (kRapSets[k].tau >= 200e-6) r.expect_at_least("plateau_ratio_" + r.series[k].name, ratio, 4.0, kReported);
    }
    r.expect_at_most("transfer_at_min_rabi", r.series.back().points.front().y, 0.5, kTrivial);
}

inline void run_fig6(const Context& ctx, RunReport& r) {
    const double tau_pi = ctx.p("tau_pi");
    const ShotModel m = qubit_shot_model(ctx, ctx.p("field"));
    const auto pulse = PulseEvent::qubit(Channel::microwave, phys::pi / tau_pi, 0.0);

    const int windows = ctx.count("windows");
    const double width = ctx.p("window_width");
    if (windows < 2) throw DomainError("fig6 needs at least two windows");
    // quadratic spacing: each window's phase is predicted to well under a cycle
    // by the ones before it, so equally spaced aliases cannot win the fit
    std::vector<double> starts;
    for (int w = 0; w < windows; ++w) starts.push_back(ctx.p("last_window") * std::pow(double(w) / (windows - 1), 2));
    std::vector<double> ts;
    for (double t0 : starts)
        for (double t : linspace(0.0, width, ctx.count("points_per_window"))) ts.push_back(t0 + t);
    Series s{"rabi", "t_s", rabi_scan(m, pulse, ts, scan_options(ctx, 6))};
    r.series.push_back(s);

    // refine window by window so the period estimate never slips a fringe
    const auto data = to_dataset(s.points);
    Eigen::VectorXd p = init_guess(Family::sin_time, select(data, 0.0, width)).params;
    for (int w = 0; w < windows; ++w) {
        const auto part = select(data, 0.0, starts[w] + width);
        p = fit(Model::sin_time(), part, p).params;
    }
    r.fits.push_back(binomial_fit("rabi", Model::sin_time(), data, p, ctx.shots));
    const auto& f = r.fits.back().result;
    r.expect_rel("tau_pi", f.param("tau_pi"), 520.83e-6, 0.01, kReported);
    r.expect_at_least("amplitude", f.param("A"), 0.95, kReported);
    r.expect_abs("offset", f.param("y0"), 0.490, 0.03, kReported);
}

inline void run_fig7(const Context& ctx, RunReport& r) {
    const double tau_pi = ctx.p("tau_pi");
    const auto mode = calcium43_mode(ctx, ctx.p("trap_freq"));
    const auto geom = BeamGeometry::copropagating(397e-9, {1.0, 0.0, 0.0});
    const auto drive = raman_drive(ctx, geom, tau_pi, mode);
    ShotModel m = qubit_shot_model(ctx, ctx.p("field"));
    m.raman_leak_rate = ctx.p("leak_fraction") * drive.scattering_rate;
    r.add_value("scattering_rate", drive.scattering_rate);
    r.add_value("leak_rate", m.raman_leak_rate);
    r.expect_abs("eta_copropagating", drive.eta, 0.0, 0.0, kTrivial);

    const auto pulse = PulseEvent::qubit(Channel::raman_co, phys::pi / tau_pi, 0.0);
    const int n = ctx.count("points_per_window");
    auto ts = linspace(0.0, ctx.p("early_end"), n);
    for (double t : linspace(ctx.p("late_start"), ctx.p("t_max"), n)) ts.push_back(t);
    Series s{"rabi", "t_s", rabi_scan(m, pulse, ts, scan_options(ctx, 7))};
    r.series.push_back(s);

    const auto data = to_dataset(s.points);
    const auto early = select(data, 0.0, ctx.p("early_end"));
    r.fits.push_back(binomial_fit("early", Model::sin_time(), early, init_guess(Family::sin_time, early).params, ctx.shots));
    const auto fe = r.fits.back().result;
    const auto late = select(data, ctx.p("late_start"), ctx.p("t_max"));
    const auto lg = init_guess(Family::sin_time, late).params;
    Eigen::VectorXd init(4);
    init << lg[0], fe.param("tau_pi"), lg[2], 0.0;
    // the phase is only defined modulo the period: scan a few starting phases
    NamedFit best;
    double best_chi2 = INFINITY;
    for (int k = 0; k < 8; ++k) {
        init[3] = -phys::pi + k * phys::pi / 4.0;
        auto nf = binomial_fit("late", Model::sin_time_phase(), late, init, ctx.shots);
        if (nf.result.chi2 < best_chi2) {
            best_chi2 = nf.result.chi2;
            best = std::move(nf);
        }
    }
    r.fits.push_back(best);
    const auto& fl = r.fits.back().result;
    r.expect_abs("early_amplitude", fe.param("A"), 0.97, 0.03, kReported);
    r.expect_rel("early_tau_pi", fe.param("tau_pi"), 65.3e-6, 0.01, kReported);
    r.expect_abs("late_amplitude", std::abs(fl.param("A")), 0.80, 0.05, kReported);
    r.expect_abs("late_offset", fl.param("y0"), 0.43, 0.03, kReported);
}

inline void run_fig8(const Context& ctx, RunReport& r) {
    const auto& noise = ctx.cfg.noise;
    const auto& ro = ctx.cfg.readout;
    ro.validate();
    const int threshold = effective_threshold(ro.detection);
    const double shelve_fail = shelving_error(ro.shelving);
    const auto waits = linspace(0.0, ctx.p("wait_max"), ctx.count("points"));
    Series s{"survival", "wait_s", {}};
    s.points.resize(waits.size());
    parallel_for(waits.size(), ctx.workers(), [&](std::size_t i) {
        const double p = depump_survival(noise, waits[i]);
        int dark = 0;
        for (int j = 0; j < ctx.shots; ++j) {
            Rng rng(shot_seed(ctx.seed, 8 + (i << 8), static_cast<std::uint64_t>(j)));
            std::uniform_real_distribution<double> u(0.0, 1.0);
            bool shelved = u(rng) < p;
            if (shelved) shelved = u(rng) >= shelve_fail;
            dark += simulate_detection(shelved, ro.detection, threshold, rng).classified == Outcome::dark ? 1 : 0;
        }
        const auto est = estimate_population(dark, ctx.shots);
        s.points[i] = {waits[i], est.p, est.sigma, ctx.shots};
    });
    r.series.push_back(s);
    const auto data = to_dataset(s.points);

    double mean = 0.0;
    for (const auto& p : data) mean += p.y;
    mean /= static_cast<double>(data.size());
    r.add_value("mean_population", mean);
    if (noise.shutter_closed) {
        r.expect_abs("mean_population", mean, 0.97, 0.01, kTrivial);
        double spread = 0.0;
        for (const auto& p : data) spread = std::max(spread, std::abs(p.y - mean) - 3.0 * p.sigma);
        r.expect_at_most("excess_spread", spread, 0.0, kTrivial);
        return;
    }
    FitOptions opt;
    opt.fixed = {false, false, true};
    auto init = init_guess(Family::exp_decay, data).params;
    init[2] = 0.0;
    r.fits.push_back(binomial_fit("decay", Model::exp_decay(), data, init, ctx.shots, opt));
    const auto& f = r.fits.back().result;
    r.expect_rel("decay_time", f.param("tau"), 0.410, 0.05, kReported);
    r.expect_abs("initial_population", f.param("a"), 0.97, 0.02, kReported);
}

inline std::vector<ScanPoint> ramsey_points(const ShotModel& m, const PulseEvent& half_pi, double wait,
                                            const Context& ctx, std::uint64_t stream) {
    RamseyConfig rc;
    rc.half_pi = half_pi;
    rc.wait = wait;
    rc.echo = ctx.p("echo") != 0.0;
    const int n = ctx.count("phases");
    std::vector<double> phis;
    for (int i = 0; i < n; ++i) phis.push_back(phys::two_pi * i / n);
    return ramsey_scan(m, rc, phis, scan_options(ctx, stream));
}

inline NamedFit fringe_fit(const std::string& label, const std::vector<ScanPoint>& pts, int shots) {
    const auto data = to_dataset(pts);
    return binomial_fit(label, Model::sin_phase(), data, init_guess(Family::sin_phase, data).params, shots);
}

inline void run_fig9(const Context& ctx, RunReport& r) {
    const double field = ctx.p("field"), wait = ctx.p("wait");
    const auto mode = calcium43_mode(ctx, ctx.p("trap_freq"));
    struct Drive {
        const char* name;
        Channel channel;
        double tau_pi;
        BeamGeometry geom;
    };
    const std::vector<Drive> drives{
        {"microwave", Channel::microwave, ctx.p("tau_pi_microwave"), {}},
        {"raman_co", Channel::raman_co, ctx.p("tau_pi_raman_co"), BeamGeometry::copropagating(397e-9, {1.0, 0.0, 0.0})},
        {"raman_counter", Channel::raman_counter, ctx.p("tau_pi_raman_counter"),
         BeamGeometry::raman_pair(397e-9, phys::pi / 2.0)},
    };
    for (std::size_t k = 0; k < drives.size(); ++k) {
        const auto& d = drives[k];
        ShotModel m = qubit_shot_model(ctx, field);
        auto pulse = PulseEvent::qubit(d.channel, phys::pi / d.tau_pi, d.tau_pi / 2.0);
        if (d.channel != Channel::microwave) {
            const auto drive = raman_drive(ctx, d.geom, d.tau_pi, mode);
            m.raman_leak_rate = ctx.p("leak_fraction") * drive.scattering_rate;
            if (d.channel == Channel::raman_counter) {
                m.basis = Basis({kQubitDown, kQubitUp}, ctx.count("fock_cutoff"));
                m.motion = MotionalState::thermal(ctx.p("nbar"));
                pulse.eta = drive.eta;
                pulse.rabi_peak /= mean_sideband_rabi(m.motion, drive.eta, 1.0, 0);
                r.add_value("eta_counter", drive.eta);
            }
        }
        r.series.push_back({d.name, "phase_rad", ramsey_points(m, pulse, wait, ctx, 90 + k)});
        r.fits.push_back(fringe_fit(d.name, r.series.back().points, ctx.shots));
        r.expect_range(std::string("amplitude_") + d.name, r.fits.back().result.param("A"), 0.85, 0.95, kReported);
    }
}

inline void run_fig10(const Context& ctx, RunReport& r) {
    const double field = ctx.p("field");
    const ShotModel m = qubit_shot_model(ctx, field);
    const double tau_pi = ctx.p("tau_pi");
    const auto pulse = PulseEvent::qubit(Channel::microwave, phys::pi / tau_pi, tau_pi / 2.0);
    struct Case {
        const char* name;
        double wait;
        double target;
        double tol;
    };
    const std::vector<Case> cases{{"tau_50us", ctx.p("wait_short"), 0.976, 0.02},
                                  {"tau_200ms", ctx.p("wait_mid"), 0.962, 0.03},
                                  {"tau_1s", ctx.p("wait_long"), 0.847, 0.05}};
    for (std::size_t k = 0; k < cases.size(); ++k) {
        const auto& c = cases[k];
        r.series.push_back({c.name, "phase_rad", ramsey_points(m, pulse, c.wait, ctx, 100 + k)});
        r.fits.push_back(fringe_fit(c.name, r.series.back().points, ctx.shots));
        r.expect_abs(std::string("amplitude_") + c.name, r.fits.back().result.param("A"), c.target, c.tol, kReported);
    }
}

inline void run_heating(const Context& ctx, RunReport& r) {
    const double rate = 1.0 / ctx.p("quantum_time");
    const auto ts = linspace(0.0, ctx.p("t_max"), ctx.count("points"));
    Series n{"mean_n", "t_s", {}}, c{"motional_contrast", "t_s", {}};
    const auto ground = MotionalState::number(0);
    for (double t : ts) {
        n.points.push_back({t, apply_heating(ground, t, rate).mean(), 0.0, 0});
        c.points.push_back({t, motional_ramsey_coherence(t, rate), 0.0, 0});
    }
    r.series.push_back(n);
    r.series.push_back(c);
    const double n370 = apply_heating(ground, 0.370, rate).mean();
    const double n37 = apply_heating(ground, 0.037, rate).mean();
    const double c320 = motional_ramsey_coherence(0.320, rate);
    r.add_value("contrast_320ms", c320);
    r.expect_abs("mean_n_370ms", n370, 1.0, 0.02, kReported);
    r.expect_abs("mean_n_37ms", n37, 0.10, 0.005, kDerived);
    r.expect_at_least("motional_contrast_320ms", c320, std::exp(-1.0), kReported);
}

inline void run_transport(const Context& ctx, RunReport& r) {
    const auto mode = HarmonicMode::from_frequency(ctx.p("trap_freq"), ctx.p("mass_u") * phys::atomic_mass_unit);
    TransportRamp ramp;
    ramp.displacement = ctx.p("displacement");
    ramp.duration = ctx.p("duration");
    ramp.filter_cutoff = ctx.p("filter_cutoff");
    const auto durations = logspace(ctx.p("scan_min"), ctx.p("scan_max"), ctx.count("points"));
    for (auto prof : {TransportRamp::Profile::smoothstep, TransportRamp::Profile::linear}) {
        Series s{prof == TransportRamp::Profile::smoothstep ? "smoothstep" : "linear", "duration_s", {}};
        s.points.resize(durations.size());
        parallel_for(durations.size(), ctx.workers(), [&](std::size_t i) {
            TransportRamp rr = ramp;
            rr.profile = prof;
            rr.duration = durations[i];
            s.points[i] = {durations[i], transport_excitation(rr, mode), 0.0, 0};
        });
        r.series.push_back(std::move(s));
    }
    ramp.profile = TransportRamp::Profile::smoothstep;
    const double nominal = transport_excitation(ramp, mode);
    TransportRamp jump = ramp;
    jump.profile = TransportRamp::Profile::sudden;
    jump.duration = 0.0;
    const double sudden = transport_excitation(jump, mode);
    const double z0 = mode.zero_point_length();
    r.add_value("excitation_nominal", nominal);
    r.add_value("excitation_sudden", sudden);
    r.add_value("unfiltered_sudden", std::pow(ramp.displacement / (2.0 * z0), 2));
    r.expect_at_most("excitation_nominal", nominal, 0.05, kDerived);
    r.expect_at_least("excitation_sudden", sudden, 1.0, kDerived);
}

inline void run_extrapolation(const Context& ctx, RunReport& r) {
    NoiseModel m = ctx.cfg.noise;
    m.B0 = ctx.p("field");
    ExtrapolationOptions opt;
    opt.taus = {ctx.p("wait_mid"), ctx.p("wait_long")};
    opt.shots = ctx.shots;
    opt.seed = shot_seed(ctx.seed, 12, 0);
    opt.readout_contrast = ctx.p("readout_contrast");
    opt.anchor_sigma = ctx.p("anchor_sigma");
    opt.amplitude_sigma = {ctx.p("sigma_mid"), ctx.p("sigma_long")};
    opt.workers = ctx.workers();
    const auto ex = coherence_extrapolate(m, ctx.constants(), opt);
    Series s{"envelope", "wait_s", {}};
    for (const auto& p : ex.amplitudes) s.points.push_back({p.x, p.y, p.sigma, p.x == 0.0 ? 0 : ctx.shots});
    r.series.push_back(s);
    r.add_value("t2_exponential_sigma", ex.exponential.sigma);
    r.add_value("t2_gaussian_sigma", ex.gaussian.sigma);
    r.add_value("chi2_exponential", ex.exponential.chi2);
    r.add_value("chi2_gaussian", ex.gaussian.chi2);
    r.expect_rel("t2_exponential", ex.exponential.t2, 6.0, 0.30, kReported);
    r.expect_rel("t2_gaussian", ex.gaussian.t2, 2.5, 0.30, kReported);
}

}  // namespace detail

inline const std::vector<Descriptor>& registry() {
    static const std::vector<Descriptor> r{
        {"fig3_pumping", "optical pumping into S1/2(4,4) vs pumping time, exponential fit", 1000,
         {{"time_constant", 1.4e-6, "pumping time constant, s"},
          {"asymptote", 0.98, "long-time stretched-state population"},
          {"initial_population", 0.35, "stretched-state population after Doppler cooling"},
          {"pulse_fidelity", 0.99, "quadrupole pi-pulse fidelity of the enhanced scheme"},
          {"t_max", 20e-6, "longest pumping time, s"},
          {"points", 41, "number of pumping times"}},
         detail::run_fig3},
        {"fig4_bsb_flops", "blue-sideband flops after sideband cooling, thermal fit for nbar", 50,
         {{"doppler_nbar", 10.0, "occupation before sideband cooling"},
          {"eta", 0.0609, "Lamb-Dicke factor of the 729 nm beam"},
          {"removal_efficiency", 0.5, "removal probability per cycle at n = 1"},
          {"recoil_per_cycle", 0.030, "recoil probability per cooling cycle"},
          {"cycles", 300, "cooling cycles"},
          {"carrier_rabi", 150e3, "carrier Rabi frequency / 2pi, Hz"},
          {"field", 3.4, "magnetic field, G"},
          {"fock_cutoff", 12, "Fock basis cutoff"},
          {"t_max", 400e-6, "longest pulse, s"},
          {"points", 161, "number of pulse lengths"}},
         detail::run_fig4},
        {"fig5_rap", "adiabatic transfer vs peak Rabi frequency for four pulse lengths and chirps", 1,
         {{"rabi_min", 5e3, "lowest peak Rabi frequency / 2pi, Hz"},
          {"rabi_max", 2e6, "highest peak Rabi frequency / 2pi, Hz"},
          {"points", 41, "grid points (log spaced)"},
          {"rabi_peak", 0.0, "single peak Rabi frequency / 2pi in Hz; 0 runs the grid"}},
         detail::run_fig5},
        {"fig6_mw_rabi", "microwave Rabi flops in windows at 0, 50 and 100 ms", 50,
         {{"field", 3.4, "magnetic field, G"},
          {"tau_pi", 520.83e-6, "pi time, s"},
          {"windows", 5, "number of sampling windows"},
          {"last_window", 100e-3, "start of the last window, s"},
          {"window_width", 2e-3, "window length, s"},
          {"points_per_window", 21, "pulse lengths per window"}},
         detail::run_fig6},
        {"fig7_raman_rabi", "copropagating Raman Rabi flops, early and late window fits", 50,
         {{"field", 3.4, "magnetic field, G"},
          {"tau_pi", 65.3e-6, "pi time, s"},
          {"raman_detuning", -10e9, "Raman detuning from S1/2-P1/2, Hz"},
          {"leak_fraction", 0.33, "fraction of scattering events that leave the qubit"},
          {"trap_freq", 1.18e6, "axial trap frequency, Hz"},
          {"early_end", 600e-6, "end of the early window, s"},
          {"late_start", 3.4e-3, "start of the late window, s"},
          {"t_max", 4e-3, "end of the late window, s"},
          {"points_per_window", 81, "pulse lengths per window"}},
         detail::run_fig7},
        {"fig8_depump", "|down> survival vs wait with residual cooling light", 1000,
         {{"wait_max", 1.2, "longest wait, s"}, {"points", 13, "number of waits"}},
         detail::run_fig8},
        {"fig9_ramsey_100ms", "Ramsey fringes at 3.4 G, 100 ms, microwave and two Raman drives", 400,
         {{"field", 3.4, "magnetic field, G"},
          {"wait", 0.1, "Ramsey time, s"},
          {"tau_pi_microwave", 19e-6, "microwave pi time, s"},
          {"tau_pi_raman_co", 20e-6, "copropagating Raman pi time, s"},
          {"tau_pi_raman_counter", 23e-6, "non-copropagating Raman pi time, s"},
          {"raman_detuning", -10e9, "Raman detuning, Hz"},
          {"leak_fraction", 0.33, "fraction of scattering events that leave the qubit"},
          {"trap_freq", 1.18e6, "axial trap frequency, Hz"},
          {"nbar", 0.06, "axial occupation for the non-copropagating drive"},
          {"fock_cutoff", 8, "Fock basis cutoff for the non-copropagating drive"},
          {"phases", 21, "Ramsey phases"},
          {"echo", 0, "1 inserts a spin-echo pulse"}},
         detail::run_fig9},
        {"fig10_ramsey_05G", "microwave Ramsey fringes at 0.5 G for 50 us, 200 ms and 1 s", 1000,
         {{"field", 0.5, "magnetic field, G"},
          {"tau_pi", 19e-6, "microwave pi time, s"},
          {"wait_short", 50e-6, "s"},
          {"wait_mid", 0.2, "s"},
          {"wait_long", 1.0, "s"},
          {"phases", 21, "Ramsey phases"},
          {"echo", 0, "1 inserts a spin-echo pulse"}},
         detail::run_fig10},
        {"heating_rate", "axial heating from the ground state and motional Ramsey contrast", 1,
         {{"quantum_time", 0.370, "s per motional quantum"},
          {"t_max", 0.4, "longest delay, s"},
          {"points", 41, "number of delays"}},
         detail::run_heating},
        {"transport", "coherent excitation after shuttling vs ramp duration", 1,
         {{"displacement", 10e-6, "m"},
          {"duration", 40e-6, "nominal ramp duration, s"},
          {"filter_cutoff", 125e3, "single-pole filter cutoff, Hz"},
          {"trap_freq", 1.18e6, "axial trap frequency, Hz"},
          {"mass_u", 39.962591, "ion mass, u"},
          {"scan_min", 5e-6, "shortest ramp in the scan, s"},
          {"scan_max", 2e-3, "longest ramp in the scan, s"},
          {"points", 41, "ramp durations (log spaced)"}},
         detail::run_transport},
        {"coherence_extrapolation", "1/e coherence time from the simulated 0.5 G envelope", 4000,
         {{"field", 0.5, "magnetic field, G"},
          {"wait_mid", 0.2, "s"},
          {"wait_long", 1.0, "s"},
          {"readout_contrast", 0.976, "fringe amplitude at zero wait"},
          {"anchor_sigma", 0.004, "uncertainty of the zero-wait anchor"},
          {"sigma_mid", 0.011, "fit weight of the mid-wait amplitude (fringe-fit uncertainty)"},
          {"sigma_long", 0.021, "fit weight of the long-wait amplitude (fringe-fit uncertainty)"}},
         detail::run_extrapolation},
    };
    return r;
}

inline const Descriptor* find_descriptor(const std::string& id) {
    for (const auto& d : registry())
        if (d.id == id) return &d;
    return nullptr;
}

/// Resolves parameters and shots for `d` from the configuration; rejects
/// experiment keys the descriptor does not know.
inline Context make_context(const Descriptor& d, const RunConfig& cfg) {
    if (cfg.id && *cfg.id != d.id)
        throw ConfigError(cfg.source, 0, "config is for experiment '" + *cfg.id + "', not '" + d.id + "'");
    Context ctx;
    ctx.cfg = cfg;
    for (const auto& p : d.params) ctx.params.emplace_back(p.name, p.value);
    for (const auto& [k, e] : cfg.experiment) {
        auto it = std::find_if(ctx.params.begin(), ctx.params.end(), [&](const auto& kv) { return kv.first == k; });
        if (it == ctx.params.end())
            throw ConfigError(cfg.source, e.line, "unknown parameter '" + k + "' for experiment " + d.id);
        it->second = std::stod(e.value);
    }
    ctx.shots = cfg.shots.value_or(d.default_shots);
    ctx.seed = cfg.seed.value_or(1);
    return ctx;
}

inline RunReport run_experiment(const Descriptor& d, const RunConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    const Context ctx = make_context(d, cfg);
    RunReport r;
    r.id = d.id;
    r.seed = ctx.seed;
    r.shots = ctx.shots;
    r.params = ctx.params;
    r.tolerance_overrides = cfg.tolerances;
    r.constants_hash = hex64(fnv1a(cfg.constants->text()));
    const auto& n = cfg.noise;
    const auto& det = cfg.readout.detection;
    r.settings = {{"slow_B_rms", format_number(n.slow_B_rms)},
                  {"line_amp", format_number(n.line_amp)},
                  {"drift_rate", format_number(n.drift_rate)},
                  {"laser_offset_rms", format_number(n.laser_offset_rms)},
                  {"intensity_frac_rms", format_number(n.intensity_frac_rms)},
                  {"microwave_amp_rms", format_number(n.microwave_amp_rms)},
                  {"shutter_closed", n.shutter_closed ? "true" : "false"},
                  {"detection_duration", format_number(det.duration)},
                  {"bright_rate", format_number(det.bright_rate)},
                  {"snr", format_number(det.snr)},
                  {"threshold", std::to_string(effective_threshold(det))},
                  {"prep_fidelity", format_number(cfg.readout.prep_fidelity)}};
    d.body(ctx, r);
    for (const auto& [k, tol] : cfg.tolerances) {
        (void)tol;
        bool used = false;
        for (const auto& c : r.checks) used = used || c.name == k;
        if (!used) throw ConfigError(cfg.source, 0, "[targets] " + k + " is not a check of " + d.id);
    }
    r.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return r;
}

inline RunReport run_experiment(const std::string& id, const RunConfig& cfg) {
    const auto* d = find_descriptor(id);
    if (!d) throw ConfigError(cfg.source, 0, "unknown experiment '" + id + "'");
    return run_experiment(*d, cfg);
}

}  // namespace caqubit::harness
