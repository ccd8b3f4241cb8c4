#pragma once

// Coherent evolution of a small basis (selected electronic levels x Fock
// states) under rotating-wave pulses, with level shifts taken from a sampled
// environment trace. Includes the shot model (preparation, Raman scattering,
// shelving readout) and Monte Carlo Rabi / Ramsey scans.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <variant>
#include <vector>

#include "caqubit/atomic.hpp"
#include "caqubit/detection.hpp"
#include "caqubit/errors.hpp"
#include "caqubit/motion.hpp"
#include "caqubit/noise.hpp"
#include "caqubit/random.hpp"

namespace caqubit {

inline const QuantumLevel kQubitDown{Term::S1_2, 4, 0};
inline const QuantumLevel kQubitUp{Term::S1_2, 3, 0};

enum class Channel { microwave, raman_co, raman_counter, quadrupole };
enum class Envelope { rect, cos2 };

inline std::string_view channel_name(Channel c) {
    switch (c) {
        case Channel::microwave: return "microwave";
        case Channel::raman_co: return "raman_co";
        case Channel::raman_counter: return "raman_counter";
        case Channel::quadrupole: return "quadrupole";
    }
    return "?";
}

inline bool is_raman(Channel c) { return c == Channel::raman_co || c == Channel::raman_counter; }

struct PulseEvent {
    Channel channel = Channel::microwave;
    QuantumLevel lower = kQubitDown;
    QuantumLevel upper = kQubitUp;
    int sideband = 0;        // motional order s: |lower, n> <-> |upper, n+s>
    double eta = 0.0;        // Lamb-Dicke factor used for the Fock-dependent coupling
    double rabi_peak = 0.0;  // rad/s
    Envelope envelope = Envelope::rect;
    double detuning_start = 0.0;  // Hz, drive minus reference resonance
    double detuning_end = 0.0;    // Hz; a linear chirp when different from start
    double phase = 0.0;           // rad
    double duration = 0.0;        // s

    /// Resonant rectangular pulse on the hyperfine qubit.
    static PulseEvent qubit(Channel ch, double rabi, double duration, double phase = 0.0) {
        PulseEvent p;
        p.channel = ch;
        p.rabi_peak = rabi;
        p.duration = duration;
        p.phase = phase;
        return p;
    }

    [[nodiscard]] double envelope_at(double t) const {
        if (envelope == Envelope::rect) return 1.0;
        const double s = std::sin(phys::pi * t / duration);
        return s * s;
    }

    [[nodiscard]] double detuning_at(double t) const {
        if (duration <= 0.0) return detuning_start;
        return detuning_start + (detuning_end - detuning_start) * t / duration;
    }

    [[nodiscard]] bool is_constant() const {
        return envelope == Envelope::rect && detuning_start == detuning_end;
    }

    void validate() const {
        if (!(duration >= 0.0) || !std::isfinite(duration)) throw DomainError("pulse duration must be non-negative");
        if (!(rabi_peak >= 0.0) || !std::isfinite(rabi_peak)) throw DomainError("Rabi frequency must be non-negative");
        if (!std::isfinite(detuning_start) || !std::isfinite(detuning_end) || !std::isfinite(phase))
            throw DomainError("pulse detuning and phase must be finite");
        if (lower == upper) throw StructuralError("pulse couples a level to itself");
        if (channel == Channel::quadrupole) {
            if (lower.term != Term::S1_2 || (upper.term != Term::D5_2 && upper.term != Term::D3_2))
                throw StructuralError("quadrupole pulses couple S1_2 to a D term");
            make_transition(lower, upper, Multipole::E2);
        } else {
            if (lower.term != Term::S1_2 || upper.term != Term::S1_2)
                throw StructuralError("microwave and Raman pulses couple S1_2 levels");
            make_transition(lower, upper, Multipole::M1);
        }
        if (sideband != 0 && channel != Channel::quadrupole && channel != Channel::raman_counter)
            throw StructuralError(std::string(channel_name(channel)) + " does not couple to motion");
    }
};

struct Wait {
    double duration = 0.0;
};

struct Sequence {
    std::vector<std::variant<PulseEvent, Wait>> items;
    bool line_triggered = true;

    Sequence& pulse(const PulseEvent& p) {
        items.emplace_back(p);
        return *this;
    }
    Sequence& wait(double t) {
        if (!(t >= 0.0)) throw DomainError("wait must be non-negative");
        items.emplace_back(Wait{t});
        return *this;
    }

    [[nodiscard]] double duration() const {
        double d = 0.0;
        for (const auto& it : items)
            d += std::visit([](const auto& x) { return x.duration; }, it);
        return d;
    }

    /// Total time with a Raman beam on.
    [[nodiscard]] double raman_time() const {
        double d = 0.0;
        for (const auto& it : items)
            if (const auto* p = std::get_if<PulseEvent>(&it); p && is_raman(p->channel)) d += p->duration;
        return d;
    }
};

class Basis {
public:
    explicit Basis(std::vector<QuantumLevel> levels = {kQubitDown, kQubitUp}, int n_max = 0)
        : levels_(std::move(levels)), n_max_(n_max) {
        if (levels_.empty()) throw StructuralError("basis needs at least one level");
        if (n_max_ < 0) throw DomainError("Fock cutoff must be non-negative");
        for (std::size_t i = 0; i < levels_.size(); ++i)
            for (std::size_t j = i + 1; j < levels_.size(); ++j)
                if (levels_[i] == levels_[j]) throw StructuralError("duplicate level in basis");
    }

    [[nodiscard]] const std::vector<QuantumLevel>& levels() const noexcept { return levels_; }
    [[nodiscard]] int n_max() const noexcept { return n_max_; }
    [[nodiscard]] Eigen::Index dim() const {
        return static_cast<Eigen::Index>(levels_.size()) * (n_max_ + 1);
    }
    [[nodiscard]] int find(const QuantumLevel& l) const {
        for (std::size_t i = 0; i < levels_.size(); ++i)
            if (levels_[i] == l) return static_cast<int>(i);
        return -1;
    }
    [[nodiscard]] int require(const QuantumLevel& l) const {
        const int i = find(l);
        if (i < 0) throw StructuralError("level " + to_string(l) + " is not in the basis");
        return i;
    }
    [[nodiscard]] Eigen::Index index(int level, int n) const {
        return static_cast<Eigen::Index>(level) * (n_max_ + 1) + n;
    }

private:
    std::vector<QuantumLevel> levels_;
    int n_max_;
};

struct SystemState {
    Basis basis;
    Eigen::VectorXcd amplitudes;
    double time = 0.0;

    static SystemState in(const Basis& b, const QuantumLevel& level, int n = 0) {
        if (n < 0 || n > b.n_max()) throw DomainError("Fock index outside the basis");
        SystemState s{b, Eigen::VectorXcd::Zero(b.dim()), 0.0};
        s.amplitudes[b.index(b.require(level), n)] = 1.0;
        return s;
    }

    [[nodiscard]] double population(const QuantumLevel& level) const {
        const int l = basis.require(level);
        double p = 0.0;
        for (int n = 0; n <= basis.n_max(); ++n) p += std::norm(amplitudes[basis.index(l, n)]);
        return p;
    }

    [[nodiscard]] double norm() const { return amplitudes.norm(); }
};

/// Where level shifts come from during evolution.
struct Environment {
    const EnvTrace* trace = nullptr;  // nullptr: static field b_ref, no noise
    double b_ref = 0.0;               // field at which drives are resonant, G
    const AtomicConstants* constants = &AtomicConstants::defaults();
};

namespace detail {

inline constexpr double kMaxPhaseStep = 0.05;  // rad per substep, ||H|| dt bound

// Level shifts (rad/s) at field b relative to the reference field.
inline void level_shifts(const Basis& basis, double b, const Environment& env, const std::vector<double>& ref,
                         std::vector<double>& out) {
    out.resize(basis.levels().size());
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = b == env.b_ref ? 0.0 : phys::two_pi * (zeeman_offset(basis.levels()[i], b, *env.constants) - ref[i]);
}

inline std::vector<double> reference_offsets(const Basis& basis, const Environment& env) {
    std::vector<double> ref;
    for (const auto& l : basis.levels()) ref.push_back(zeeman_offset(l, env.b_ref, *env.constants));
    return ref;
}

// Splits [t0, t0 + T] at trace grid points; returns interval boundaries.
inline std::vector<double> breakpoints(double t0, double T, const Environment& env) {
    std::vector<double> bp{t0};
    if (env.trace && env.trace->dt > 0.0 && T > 0.0) {
        const double dt = env.trace->dt;
        for (double k = std::floor(t0 / dt) + 1.0; k * dt < t0 + T; k += 1.0)
            if (k * dt > t0 + 1e-15) bp.push_back(k * dt);
    }
    bp.push_back(t0 + T);
    return bp;
}

inline double field_at(const Environment& env, double t) {
    return env.trace ? env.trace->field_at(t) : env.b_ref;
}

// exp(-i H dt) applied to (x, y) for H = [[a, b], [b, d]], b real.
inline void su2_step(std::complex<double>& x, std::complex<double>& y, double a, double b, double d, double dt) {
    using cd = std::complex<double>;
    const double m = 0.5 * (a + d), h = 0.5 * (a - d);
    const double w = std::hypot(h, b);
    const double c = std::cos(w * dt);
    const double s = w > 0.0 ? std::sin(w * dt) / w : dt;
    const cd g = std::polar(1.0, -m * dt);
    const cd nx = g * (cd(c, -s * h) * x + cd(0.0, -s * b) * y);
    const cd ny = g * (cd(0.0, -s * b) * x + cd(c, s * h) * y);
    x = nx;
    y = ny;
}

}  // namespace detail

/// Free evolution: every amplitude picks up the phase of its level shift.
inline SystemState free_evolve(SystemState state, double duration, const Environment& env) {
    if (!(duration >= 0.0)) throw DomainError("wait must be non-negative");
    const auto& basis = state.basis;
    const auto ref = detail::reference_offsets(basis, env);
    std::vector<double> phase(basis.levels().size(), 0.0), eps;
    if (env.trace) {
        const auto bp = detail::breakpoints(state.time, duration, env);
        for (std::size_t k = 0; k + 1 < bp.size(); ++k) {
            const double h = bp[k + 1] - bp[k];
            detail::level_shifts(basis, detail::field_at(env, 0.5 * (bp[k] + bp[k + 1])), env, ref, eps);
            for (std::size_t i = 0; i < phase.size(); ++i) phase[i] += eps[i] * h;
        }
    }
    for (int l = 0; l < static_cast<int>(phase.size()); ++l) {
        const auto f = std::polar(1.0, -phase[static_cast<std::size_t>(l)]);
        for (int n = 0; n <= basis.n_max(); ++n) state.amplitudes[basis.index(l, n)] *= f;
    }
    state.time += duration;
    return state;
}

/// One pulse in the rotating-wave approximation. Inside the pulse the upper
/// level is held in the frame of the drive phase theta(t) = phi - 2 pi int delta,
/// referenced to the pulse start; each coupled pair is advanced with the exact
/// SU(2) exponential on substeps with ||H|| dt <= 0.05.
inline SystemState evolve(SystemState state, const PulseEvent& ev, const Environment& env) {
    ev.validate();
    const auto& basis = state.basis;
    const int lo = basis.require(ev.lower);
    const int up = basis.require(ev.upper);
    const int nmax = basis.n_max();
    const double T = ev.duration;
    if (T == 0.0) return state;

    double drive_scale = 1.0, extra_detuning = 0.0, extra_phase = 0.0;
    if (env.trace) {
        if (ev.channel == Channel::microwave) drive_scale = env.trace->microwave_factor;
        if (is_raman(ev.channel)) {
            drive_scale = env.trace->intensity_factor;
            if (state.time > 0.0) extra_phase = env.trace->phase_offset;
        }
        if (ev.channel == Channel::quadrupole) extra_detuning = env.trace->laser_detuning;
    }

    // Fock-dependent coupling factors for |lo, n> <-> |up, n+s>
    std::vector<double> coupling(static_cast<std::size_t>(nmax) + 1, 0.0);
    for (int n = 0; n <= nmax; ++n) {
        const int m = n + ev.sideband;
        if (m < 0 || m > nmax) continue;
        coupling[static_cast<std::size_t>(n)] =
            ev.sideband == 0 && ev.eta == 0.0 ? 1.0 : sideband_rabi(n, ev.sideband, ev.eta, 1.0);
    }
    const double cmax = *std::max_element(coupling.begin(), coupling.end());

    // enter the drive frame
    const std::complex<double> enter = std::polar(1.0, -(ev.phase + extra_phase));
    for (int n = 0; n <= nmax; ++n) state.amplitudes[basis.index(up, n)] *= enter;

    const auto ref = detail::reference_offsets(basis, env);
    std::vector<double> eps;
    const auto bp = detail::breakpoints(state.time, T, env);
    const double t_start = state.time;
    const double dmax = std::max(std::abs(ev.detuning_start), std::abs(ev.detuning_end)) + std::abs(extra_detuning);
    for (std::size_t k = 0; k + 1 < bp.size(); ++k) {
        const double a = bp[k], b = bp[k + 1];
        detail::level_shifts(basis, detail::field_at(env, 0.5 * (a + b)), env, ref, eps);
        double emax = 0.0;
        for (double e : eps) emax = std::max(emax, std::abs(e));
        const double hnorm = 0.5 * ev.rabi_peak * drive_scale * cmax + phys::two_pi * dmax + emax;
        const int nsub = ev.is_constant() ? 1 : std::max(1, static_cast<int>(std::ceil(hnorm * (b - a) / detail::kMaxPhaseStep)));
        const double h = (b - a) / nsub;
        for (int j = 0; j < nsub; ++j) {
            const double tm = a + (j + 0.5) * h - t_start;
            const double omega = ev.rabi_peak * drive_scale * ev.envelope_at(tm);
            const double delta = phys::two_pi * (ev.detuning_at(tm) + extra_detuning);
            const double e_lo = eps[static_cast<std::size_t>(lo)];
            const double e_up = eps[static_cast<std::size_t>(up)] - delta;
            for (int n = 0; n <= nmax; ++n) {
                const int m = n + ev.sideband;
                const double cpl = coupling[static_cast<std::size_t>(n)];
                if (cpl == 0.0) continue;
                detail::su2_step(state.amplitudes[basis.index(lo, n)], state.amplitudes[basis.index(up, m)], e_lo,
                                 0.5 * omega * cpl, e_up, h);
            }
            // uncoupled lower / upper Fock states and spectator levels
            for (int n = 0; n <= nmax; ++n) {
                if (coupling[static_cast<std::size_t>(n)] == 0.0)
                    state.amplitudes[basis.index(lo, n)] *= std::polar(1.0, -e_lo * h);
                const int src = n - ev.sideband;
                if (src < 0 || src > nmax || coupling[static_cast<std::size_t>(src)] == 0.0)
                    state.amplitudes[basis.index(up, n)] *= std::polar(1.0, -e_up * h);
            }
            for (int l = 0; l < static_cast<int>(basis.levels().size()); ++l) {
                if (l == lo || l == up) continue;
                const auto f = std::polar(1.0, -eps[static_cast<std::size_t>(l)] * h);
                for (int n = 0; n <= nmax; ++n) state.amplitudes[basis.index(l, n)] *= f;
            }
        }
    }

    // leave the drive frame
    const double theta_end = ev.phase + extra_phase -
                             phys::two_pi * T * (0.5 * (ev.detuning_start + ev.detuning_end) + extra_detuning);
    const std::complex<double> leave = std::polar(1.0, theta_end);
    for (int n = 0; n <= nmax; ++n) state.amplitudes[basis.index(up, n)] *= leave;
    state.time += T;
    return state;
}

inline SystemState run_sequence(SystemState state, const Sequence& seq, const Environment& env) {
    for (const auto& it : seq.items) {
        if (const auto* p = std::get_if<PulseEvent>(&it)) state = evolve(std::move(state), *p, env);
        else state = free_evolve(std::move(state), std::get<Wait>(it).duration, env);
    }
    return state;
}

// --- adiabatic passage -------------------------------------------------------

/// Transfer probability of a cos^2-shaped pulse of length tau whose frequency
/// is swept linearly over delta_c (Hz) centred on resonance; rabi_peak in rad/s.
inline double rap_transfer(double rabi_peak, double tau, double delta_c) {
    if (!(tau > 0.0)) throw DomainError("pulse length must be positive");
    const Basis basis({QuantumLevel{Term::S1_2, 4, 4}, QuantumLevel{Term::D5_2, 6, 6}});
    PulseEvent p;
    p.channel = Channel::quadrupole;
    p.lower = basis.levels()[0];
    p.upper = basis.levels()[1];
    p.rabi_peak = rabi_peak;
    p.envelope = Envelope::cos2;
    p.detuning_start = -0.5 * delta_c;
    p.detuning_end = 0.5 * delta_c;
    p.duration = tau;
    const auto s = evolve(SystemState::in(basis, p.lower), p, Environment{});
    return s.population(p.upper);
}

/// Landau-Zener transition probability for a constant coupling and sweep rate
/// (rad/s^2): 1 - exp(-pi Omega^2 / (2 |dDelta/dt|)).
inline double landau_zener(double rabi, double sweep_rate) {
    return -std::expm1(-phys::pi * rabi * rabi / (2.0 * std::abs(sweep_rate)));
}

// --- Raman drive -------------------------------------------------------------

struct RamanBeams {
    BeamGeometry geometry;
    double rabi_plus = 0.0;   // single-beam resonant Rabi frequencies, rad/s
    double rabi_minus = 0.0;

    /// Equal single-beam couplings giving the requested pi-time at `detuning_hz`.
    static RamanBeams for_pi_time(const BeamGeometry& g, double tau_pi, double detuning_hz) {
        if (!(tau_pi > 0.0)) throw DomainError("pi-time must be positive");
        const double om = std::sqrt(2.0 * phys::two_pi * std::abs(detuning_hz) * phys::pi / tau_pi);
        return {g, om, om};
    }
};

struct RamanDrive {
    double omega_eff = 0.0;        // rad/s
    double scattering_rate = 0.0;  // photons/s
    double eta = 0.0;
};

/// Two-photon Rabi frequency Omega+ Omega- / 2 Delta and the off-resonant
/// P1/2 scattering rate Gamma (Omega+^2 + Omega-^2) / 4 Delta^2.
inline RamanDrive raman_effective_drive(const RamanBeams& beams, double detuning_hz, const HarmonicMode& mode,
                                        const AtomicConstants& c) {
    if (!(std::abs(detuning_hz) > 0.0)) throw DomainError("Raman detuning must be non-zero");
    const double delta = phys::two_pi * std::abs(detuning_hz);
    const double gamma = 1.0 / c.term(Term::P1_2).lifetime_s;
    RamanDrive d;
    d.omega_eff = beams.rabi_plus * beams.rabi_minus / (2.0 * delta);
    d.scattering_rate =
        gamma * (beams.rabi_plus * beams.rabi_plus + beams.rabi_minus * beams.rabi_minus) / (4.0 * delta * delta);
    d.eta = lamb_dicke(beams.geometry, mode);
    return d;
}

// --- shot model ----------------------------------------------------------------

struct ReadoutModel {
    double prep_fidelity = 0.98;  // population starting in the intended level
    ShelvingScheme shelving;
    DetectionConfig detection;

    void validate() const {
        if (!(prep_fidelity >= 0.0 && prep_fidelity <= 1.0)) throw DomainError("prep fidelity must be in [0, 1]");
        shelving.validate();
        detection.validate();
    }
};

/// A full experiment apart from the sequence itself.
struct ShotModel {
    Basis basis;
    QuantumLevel initial = kQubitDown;
    MotionalState motion = MotionalState::number(0);
    QuantumLevel dark_level = kQubitDown;  // population read out as "dark"
    bool shelve = true;                    // dark_level is in S1/2 and needs shelving pulses
    NoiseModel noise = NoiseModel::quiet(3.4);
    double b_ref = 3.4;
    ReadoutModel readout;
    double raman_leak_rate = 0.0;  // 1/s, scattering that removes the ion from the qubit
    double shot_period = 0.05;     // s between shots (drift clock)
    const AtomicConstants* constants = &AtomicConstants::defaults();
};

struct ShotResult {
    double p_dark = 0.0;  // ideal dark-level population at the end of the sequence
    bool dark = false;    // classified outcome
};

inline Eigen::Index sample_fock(const MotionalState& m, Rng& rng) {
    const auto& p = m.populations();
    if (p.size() == 1) return 0;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double x = u(rng), acc = 0.0;
    for (std::size_t n = 0; n < p.size(); ++n) {
        acc += p[n];
        if (x < acc) return static_cast<Eigen::Index>(n);
    }
    return static_cast<Eigen::Index>(p.size() - 1);
}

/// One experimental shot, fully determined by `seed`.
inline ShotResult run_shot(const ShotModel& m, const Sequence& seq, std::uint64_t seed, double session_time,
                           int threshold) {
    Rng rng(seed);
    const double T = seq.duration();
    TraceOptions topt;
    topt.line_triggered = seq.line_triggered;
    topt.session_time = session_time;
    topt.max_dt = 5e-4;
    const auto trace = sample_trace(m.noise, T, rng(), topt);
    const int n = static_cast<int>(std::min<Eigen::Index>(sample_fock(m.motion, rng), m.basis.n_max()));

    Environment env{&trace, m.b_ref, m.constants};
    const auto final = run_sequence(SystemState::in(m.basis, m.initial, n), seq, env);
    ShotResult r;
    r.p_dark = final.population(m.dark_level);

    std::uniform_real_distribution<double> u(0.0, 1.0);
    bool prepared = u(rng) < m.readout.prep_fidelity;
    if (m.raman_leak_rate > 0.0 && u(rng) < -std::expm1(-m.raman_leak_rate * seq.raman_time())) prepared = false;
    bool in_dark = prepared && u(rng) < r.p_dark;
    if (in_dark && m.shelve) in_dark = u(rng) >= shelving_error(m.readout.shelving);
    const auto det = simulate_detection(in_dark, m.readout.detection, threshold, rng);
    r.dark = det.classified == Outcome::dark;
    return r;
}

struct ScanPoint {
    double x = 0.0;
    double y = 0.0;
    double sigma = 0.0;
    int n_shots = 0;
};

struct ScanOptions {
    int shots = 50;
    std::uint64_t seed = 1;
    unsigned workers = 1;
    bool exact = false;  // report the mean ideal population instead of sampled outcomes
};

/// Monte Carlo scan: point i, shot j is seeded with shot_seed(seed, i, j), so
/// results do not depend on the worker count.
inline std::vector<ScanPoint> scan_sequences(const ShotModel& m, const std::vector<double>& xs,
                                             const std::function<Sequence(double)>& make, const ScanOptions& opt) {
    if (xs.empty()) throw DomainError("empty scan grid");
    if (opt.shots < 1) throw DomainError("shots must be >= 1");
    m.readout.validate();
    const int threshold = effective_threshold(m.readout.detection);
    const auto npts = xs.size();
    const auto nshots = static_cast<std::size_t>(opt.shots);
    std::vector<Sequence> seqs;
    for (double x : xs) seqs.push_back(make(x));
    std::vector<ShotResult> results(npts * nshots);
    parallel_for(results.size(), opt.workers, [&](std::size_t k) {
        const std::size_t i = k / nshots, j = k % nshots;
        const double session = static_cast<double>(k) * (m.shot_period + seqs[i].duration());
        results[k] = run_shot(m, seqs[i], shot_seed(opt.seed, i, j), session, threshold);
    });
    std::vector<ScanPoint> out;
    for (std::size_t i = 0; i < npts; ++i) {
        ScanPoint p{xs[i], 0.0, 0.0, opt.shots};
        if (opt.exact) {
            double acc = 0.0;
            for (std::size_t j = 0; j < nshots; ++j) acc += results[i * nshots + j].p_dark;
            p.y = acc / static_cast<double>(nshots);
        } else {
            int dark = 0;
            for (std::size_t j = 0; j < nshots; ++j) dark += results[i * nshots + j].dark ? 1 : 0;
            const auto est = estimate_population(dark, opt.shots);
            p.y = est.p;
            p.sigma = est.sigma;
        }
        out.push_back(p);
    }
    return out;
}

/// Dark-state probability vs pulse length for a single pulse.
inline std::vector<ScanPoint> rabi_scan(const ShotModel& m, const PulseEvent& pulse, const std::vector<double>& t_grid,
                                        const ScanOptions& opt, bool line_triggered = true) {
    return scan_sequences(m, t_grid,
                          [&](double t) {
                              PulseEvent p = pulse;
                              p.duration = t;
                              Sequence s;
                              s.line_triggered = line_triggered;
                              return s.pulse(p);
                          },
                          opt);
}

struct RamseyConfig {
    PulseEvent half_pi;  // duration = pi/2 time, phase ignored
    double wait = 0.0;   // tau_R, s
    bool echo = false;   // pi pulse at the midpoint
    bool line_triggered = true;
};

/// pi/2 - tau_R/2 - [pi] - tau_R/2 - (pi/2)_phi.
inline Sequence ramsey_sequence(const RamseyConfig& cfg, double phi) {
    if (!(cfg.wait >= 0.0)) throw DomainError("Ramsey time must be non-negative");
    Sequence s;
    s.line_triggered = cfg.line_triggered;
    PulseEvent first = cfg.half_pi;
    first.phase = 0.0;
    PulseEvent last = cfg.half_pi;
    last.phase = phi;
    s.pulse(first);
    if (cfg.echo) {
        PulseEvent pi = cfg.half_pi;
        pi.phase = 0.0;
        pi.duration *= 2.0;
        s.wait(cfg.wait / 2.0).pulse(pi).wait(cfg.wait / 2.0);
    } else {
        s.wait(cfg.wait);
    }
    return s.pulse(last);
}

inline std::vector<ScanPoint> ramsey_scan(const ShotModel& m, const RamseyConfig& cfg, const std::vector<double>& phi_grid,
                                          const ScanOptions& opt) {
    return scan_sequences(m, phi_grid, [&](double phi) { return ramsey_sequence(cfg, phi); }, opt);
}

}  // namespace caqubit
