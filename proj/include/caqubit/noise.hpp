#pragma once

// Stochastic environment: magnetic field (drift, quasi-static shot-to-shot
// offset, 50 Hz line component, white noise), laser servo residuals,
// intensity and path-phase fluctuations, residual-light depumping.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <vector>

#include "caqubit/atomic.hpp"
#include "caqubit/errors.hpp"
#include "caqubit/fit.hpp"
#include "caqubit/random.hpp"

namespace caqubit {

struct NoiseModel {
    double B0 = 3.4;                       // G
    double drift_rate = 2e-4;              // G per hour
    double recalibration_interval = 120.0; // s; drift is re-zeroed by resonance checks
    double line_amp = 1e-3;                // G
    double line_freq = 50.0;               // Hz
    double slow_B_rms = 70e-6;             // G, quasi-static per shot
    double white_B_psd = 0.0;              // G^2/Hz, one-sided
    double laser_offset_rms = 200.0;       // Hz
    double laser_offset_bound = 500.0;     // Hz, truncation of the servo residual
    double intensity_frac_rms = 2.1e-3;    // Raman intensity, per shot
    double microwave_amp_rms = 2e-4;       // microwave amplitude, per shot
    double path_phase_rms = 0.0;           // rad, per shot
    double depump_time = 0.41;             // s
    double depump_initial = 0.973;         // true |down> population before the wait; reads out as 0.97
    bool shutter_closed = false;

    void validate() const {
        auto nonneg = [](double v, const char* name) {
            if (!(v >= 0.0) || !std::isfinite(v)) throw DomainError(std::string(name) + " must be non-negative");
        };
        if (!(B0 >= 0.0 && B0 <= detail::kMaxField)) throw RangeError("B0 outside [0, 10] G");
        nonneg(drift_rate, "drift_rate");
        nonneg(line_amp, "line_amp");
        nonneg(slow_B_rms, "slow_B_rms");
        nonneg(white_B_psd, "white_B_psd");
        nonneg(laser_offset_rms, "laser_offset_rms");
        nonneg(laser_offset_bound, "laser_offset_bound");
        nonneg(intensity_frac_rms, "intensity_frac_rms");
        nonneg(microwave_amp_rms, "microwave_amp_rms");
        nonneg(path_phase_rms, "path_phase_rms");
        if (!(line_freq > 0.0)) throw DomainError("line_freq must be positive");
        if (!(recalibration_interval > 0.0)) throw DomainError("recalibration_interval must be positive");
        if (!(depump_time > 0.0)) throw DomainError("depump_time must be positive");
        if (!(depump_initial >= 0.0 && depump_initial <= 1.0)) throw DomainError("depump_initial must be in [0, 1]");
    }

    static NoiseModel quiet(double b0) {
        NoiseModel m;
        m.B0 = b0;
        m.drift_rate = m.line_amp = m.slow_B_rms = m.white_B_psd = 0.0;
        m.laser_offset_rms = m.intensity_frac_rms = m.microwave_amp_rms = m.path_phase_rms = 0.0;
        return m;
    }
};

/// One shot's environment on a uniform grid t_k = k dt, k = 0..n. Field
/// samples are interval averages for white noise and point values otherwise.
struct EnvTrace {
    double dt = 0.0;
    std::vector<double> field;  // G
    double laser_detuning = 0.0;   // Hz, per shot
    double intensity_factor = 1.0; // multiplies Raman Rabi frequencies
    double microwave_factor = 1.0; // multiplies microwave Rabi frequencies
    double phase_offset = 0.0;     // rad, Raman path phase

    [[nodiscard]] double duration() const { return dt * static_cast<double>(field.empty() ? 0 : field.size() - 1); }

    /// Field at time t, linear interpolation; clamps beyond the grid.
    [[nodiscard]] double field_at(double t) const {
        if (field.empty()) return 0.0;
        if (field.size() == 1 || dt <= 0.0) return field.front();
        const double u = std::clamp(t / dt, 0.0, static_cast<double>(field.size() - 1));
        const auto k = std::min(static_cast<std::size_t>(u), field.size() - 2);
        const double f = u - static_cast<double>(k);
        return field[k] * (1.0 - f) + field[k + 1] * f;
    }

    static EnvTrace constant(double b, double duration, double dt = 1e-3) {
        EnvTrace e;
        const auto n = static_cast<std::size_t>(std::max(1.0, std::ceil(duration / dt)));
        e.dt = duration > 0.0 ? duration / static_cast<double>(n) : dt;
        e.field.assign(n + 1, b);
        return e;
    }
};

struct TraceOptions {
    bool line_triggered = true;
    double session_time = 0.0;  // s since the session started (drift clock)
    double max_dt = 2e-4;       // s
    int min_samples = 16;
};

/// Samples one shot's environment. Quasi-static components are drawn once per
/// shot; the line phase is fixed at t = 0 when triggered and uniform otherwise.
inline EnvTrace sample_trace(const NoiseModel& m, double duration, std::uint64_t seed, const TraceOptions& opt = {}) {
    m.validate();
    if (!(duration >= 0.0)) throw DomainError("trace duration must be non-negative");
    Rng rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> uni(0.0, phys::two_pi);

    EnvTrace e;
    // a zero-length trace is a single sample
    const auto n = duration > 0.0 ? static_cast<std::size_t>(std::max<double>(
                                        opt.min_samples, std::ceil(duration / std::max(opt.max_dt, 1e-12))))
                                  : std::size_t{0};
    e.dt = duration > 0.0 ? duration / static_cast<double>(n) : opt.max_dt;

    // draw order is fixed so every component stays reproducible
    const double slow = m.slow_B_rms * gauss(rng);
    const double line_phase = uni(rng);
    double laser = 0.0;
    if (m.laser_offset_rms > 0.0) {
        do laser = m.laser_offset_rms * gauss(rng);
        while (std::abs(laser) > m.laser_offset_bound);
    }
    e.laser_detuning = laser;
    e.intensity_factor = 1.0 + m.intensity_frac_rms * gauss(rng);
    e.microwave_factor = 1.0 + m.microwave_amp_rms * gauss(rng);
    e.phase_offset = m.path_phase_rms * gauss(rng);

    const double drift = m.drift_rate / 3600.0 * std::fmod(opt.session_time, m.recalibration_interval);
    const double phi0 = opt.line_triggered ? 0.0 : line_phase;
    const double white_sd = m.white_B_psd > 0.0 ? std::sqrt(m.white_B_psd / (2.0 * e.dt)) : 0.0;
    e.field.resize(n + 1);
    for (std::size_t k = 0; k <= n; ++k) {
        const double t = e.dt * static_cast<double>(k);
        double b = m.B0 + drift + slow + m.line_amp * std::sin(phys::two_pi * m.line_freq * t + phi0);
        if (white_sd > 0.0) b += white_sd * gauss(rng);
        e.field[k] = b;
    }
    return e;
}

/// Clock-transition phase (rad) accumulated over [0, T] relative to the
/// reference field, trapezoidal rule on the trace grid.
inline double clock_phase(const EnvTrace& e, double b_ref, const AtomicConstants& c) {
    const double ref = clock_shift_unchecked(b_ref, c);
    double acc = 0.0;
    for (std::size_t k = 0; k + 1 < e.field.size(); ++k)
        acc += 0.5 * (clock_shift_unchecked(e.field[k], c) + clock_shift_unchecked(e.field[k + 1], c)) - ref;
    return phys::two_pi * acc * e.dt;
}

struct EnvelopePoint {
    double tau = 0.0;
    double amplitude = 0.0;
    double sigma = 0.0;
};

/// Monte Carlo Ramsey fringe amplitude |<exp(i phi)>| per wait time. Shot i
/// uses the same seed at every wait time (common random numbers).
inline std::vector<EnvelopePoint> dephasing_envelope(const NoiseModel& m, const std::vector<double>& taus, int shots,
                                                     std::uint64_t seed, const AtomicConstants& c,
                                                     bool line_triggered = true, unsigned workers = 1) {
    if (taus.empty()) throw DomainError("empty wait-time grid");
    if (shots < 1) throw DomainError("shots must be >= 1");
    std::vector<EnvelopePoint> out;
    std::vector<double> phases(static_cast<std::size_t>(shots));
    for (double tau : taus) {
        if (!(tau >= 0.0)) throw DomainError("wait times must be non-negative");
        parallel_for(phases.size(), workers, [&](std::size_t i) {
            TraceOptions opt;
            opt.line_triggered = line_triggered;
            opt.max_dt = std::max(1e-4, tau / 4000.0);
            opt.session_time = static_cast<double>(i);
            const auto tr = sample_trace(m, tau, shot_seed(seed, 0x5EEDULL, i), opt);
            phases[i] = clock_phase(tr, m.B0, c);
        });
        std::complex<double> mean = 0.0;
        for (double p : phases) mean += std::polar(1.0, p);
        mean /= static_cast<double>(shots);
        const double amp = std::abs(mean);
        const double ref = std::arg(mean);
        double var = 0.0;
        for (double p : phases) {
            const double d = std::cos(p - ref) - amp;
            var += d * d;
        }
        const double n = static_cast<double>(shots);
        const double se = shots > 1 ? std::sqrt(var / (n * (n - 1.0))) : 1.0;
        out.push_back({tau, amp, std::max(se, 1.0 / (2.0 * n))});
    }
    return out;
}

/// Probability of still being in |down> after waiting with the cooling light
/// leaking through a single-pass AOM; no decay behind the mechanical shutter.
inline double depump_survival(const NoiseModel& m, double wait) {
    m.validate();
    if (!(wait >= 0.0)) throw DomainError("wait must be non-negative");
    if (m.shutter_closed) return m.depump_initial;
    return m.depump_initial * std::exp(-wait / m.depump_time);
}

struct ExtrapolationOptions {
    std::vector<double> taus{0.2, 1.0};
    int shots = 4000;
    std::uint64_t seed = 1;
    double readout_contrast = 1.0;  // SPAM factor applied to every simulated amplitude
    double anchor_sigma = 0.004;    // uncertainty of the tau = 0 anchor at amplitude 1
    std::vector<double> amplitude_sigma;  // per-wait fit weights; empty uses the Monte Carlo error
    unsigned workers = 1;
};

struct CoherenceExtrapolation {
    Dataset amplitudes;
    CoherenceFit exponential;
    CoherenceFit gaussian;
};

/// Fits the simulated envelope (plus a unit anchor at tau = 0) with both decay
/// forms and reports their 1/e times.
inline CoherenceExtrapolation coherence_extrapolate(const NoiseModel& m, const AtomicConstants& c,
                                                    const ExtrapolationOptions& opt = {}) {
    if (!opt.amplitude_sigma.empty() && opt.amplitude_sigma.size() != opt.taus.size())
        throw DomainError("one amplitude sigma per wait time");
    const auto env = dephasing_envelope(m, opt.taus, opt.shots, opt.seed, c, true, opt.workers);
    CoherenceExtrapolation r;
    r.amplitudes.push_back({0.0, 1.0, opt.anchor_sigma});
    for (std::size_t i = 0; i < env.size(); ++i) {
        const double s = opt.amplitude_sigma.empty() ? opt.readout_contrast * env[i].sigma : opt.amplitude_sigma[i];
        r.amplitudes.push_back({env[i].tau, opt.readout_contrast * env[i].amplitude, s});
    }
    r.exponential = coherence_time(r.amplitudes, EnvelopeForm::exponential);
    r.gaussian = coherence_time(r.amplitudes, EnvelopeForm::gaussian);
    return r;
}

}  // namespace caqubit
