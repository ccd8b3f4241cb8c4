#pragma once

// State initialization: Doppler endpoint, optical pumping kinetics, enhanced
// pumping, sideband cooling and the clock-state transfer strategies.

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <vector>

#include "caqubit/atomic.hpp"
#include "caqubit/errors.hpp"
#include "caqubit/motion.hpp"

namespace caqubit {

struct PumpingConfig {
    double time_constant = 1.4e-6;   // s
    double asymptote = 0.98;         // stretched-state population at long times
    double initial_population = 0.35;  // stretched-state population after Doppler cooling
    double pulse_fidelity = 1.0;     // quadrupole pi-pulse fidelity

    void validate() const {
        if (!(time_constant > 0.0)) throw DomainError("pumping time constant must be positive");
        if (!(asymptote > 0.0 && asymptote <= 1.0)) throw DomainError("pumping asymptote must be in (0, 1]");
        if (!(initial_population >= 0.0 && initial_population <= 1.0))
            throw DomainError("initial population must be in [0, 1]");
        if (!(pulse_fidelity >= 0.0 && pulse_fidelity <= 1.0))
            throw DomainError("pulse fidelity must be in [0, 1]");
    }
};

/// Population of S1/2(4,4) after pumping for time t.
inline double optical_pumping_curve(double t, const PumpingConfig& cfg) {
    cfg.validate();
    if (t < 0.0) throw DomainError("pumping time must be non-negative");
    const double e = std::exp(-t / cfg.time_constant);
    return cfg.asymptote * (1.0 - e) + cfg.initial_population * e;
}

/// Pump, shelve the pumped population in D5/2(6,6), pump the remainder again,
/// return it with a second pi-pulse and clear D5/2 with 854 nm light. The
/// scheme fails only if the first pump fails and the second round (pulse and
/// pump) fails too.
inline double enhanced_pumping(const PumpingConfig& cfg) {
    cfg.validate();
    const double first_fail = 1.0 - cfg.asymptote;
    const double second_fail = 1.0 - cfg.pulse_fidelity * cfg.asymptote;
    return 1.0 - first_fail * second_fail;
}

struct CoolingConfig {
    double doppler_nbar = 10.0;
    double doppler_spread = 5.0;
    double eta = 0.061;               // Lamb-Dicke factor of the cooling sideband
    double removal_efficiency = 0.5;  // removal probability per cycle on n = 1
    double recoil_per_cycle = 0.030;  // probability of one recoil quantum per cycle
    int cycles = 300;

    void validate() const {
        if (!(doppler_nbar >= 0.0) || !(doppler_spread >= 0.0)) throw DomainError("Doppler occupation must be non-negative");
        if (!(eta >= 0.0)) throw DomainError("eta must be non-negative");
        if (!(removal_efficiency >= 0.0 && removal_efficiency <= 1.0))
            throw DomainError("removal efficiency must be in [0, 1]");
        if (!(recoil_per_cycle >= 0.0 && recoil_per_cycle <= 1.0))
            throw DomainError("recoil probability must be in [0, 1]");
        if (cycles < 0) throw DomainError("cycle count must be non-negative");
    }
};

/// Thermal state at the configured Doppler endpoint.
inline MotionalState doppler_state(const CoolingConfig& cfg) {
    cfg.validate();
    return MotionalState::thermal(cfg.doppler_nbar);
}

/// Shot-to-shot Doppler endpoint, normal with the configured spread, >= 0.
template <class Urbg>
double sample_doppler_nbar(const CoolingConfig& cfg, Urbg& rng) {
    std::normal_distribution<double> d(cfg.doppler_nbar, cfg.doppler_spread);
    for (;;) {
        const double v = d(rng);
        if (v >= 0.0) return v;
    }
}

/// Pulsed sideband cooling. Each cycle removes one quantum from |n> with
/// probability min(1, kappa Omega_{n,n-1}^2 / Omega_{1,0}^2), then adds one
/// recoil quantum with probability recoil_per_cycle.
inline MotionalState sideband_cool(const MotionalState& initial, const CoolingConfig& cfg, int cycles) {
    cfg.validate();
    if (cycles < 0) throw DomainError("cycle count must be non-negative");
    if (cycles == 0) return initial;

    std::vector<double> p = initial.populations();
    const double ref = cfg.eta > 0.0 ? std::pow(sideband_rabi(1, -1, cfg.eta, 1.0), 2) : 0.0;
    std::vector<double> q;
    auto removal = [&](std::size_t n) {
        while (q.size() <= n) {
            const std::size_t k = q.size();
            q.push_back(k == 0 || ref == 0.0
                            ? 0.0
                            : std::min(1.0, cfg.removal_efficiency *
                                                std::pow(sideband_rabi(static_cast<int>(k), -1, cfg.eta, 1.0), 2) / ref));
        }
        return q[n];
    };
    std::vector<double> next;
    for (int c = 0; c < cycles; ++c) {
        if (p.back() > 1e-16) p.push_back(0.0);
        next.assign(p.size(), 0.0);
        for (std::size_t n = 0; n < p.size(); ++n) {
            const double moved = removal(n) * p[n];
            next[n] += p[n] - moved;
            if (n > 0) next[n - 1] += moved;
        }
        p.assign(next.size(), 0.0);
        for (std::size_t n = 0; n < next.size(); ++n) {
            const double up = cfg.recoil_per_cycle * next[n];
            p[n] += next[n] - up;
            if (n + 1 < p.size()) p[n + 1] += up;
            else p.push_back(up);
        }
    }
    return make_distribution(std::move(p));
}

/// Recoil probability per cycle for which `cycles` cycles starting from the
/// Doppler endpoint reach `target_nbar` (bisection).
inline double calibrate_recoil(double target_nbar, CoolingConfig cfg) {
    if (!(target_nbar > 0.0)) throw DomainError("target occupation must be positive");
    const auto start = doppler_state(cfg);
    double lo = 0.0, hi = 0.5;
    for (int i = 0; i < 60; ++i) {
        cfg.recoil_per_cycle = 0.5 * (lo + hi);
        const double nb = sideband_cool(start, cfg, cfg.cycles).mean();
        (nb < target_nbar ? lo : hi) = cfg.recoil_per_cycle;
    }
    return 0.5 * (lo + hi);
}

// --- clock-state transfer ----------------------------------------------------

/// Two quadrupole pi-pulses S1/2(4,4) -> D5/2(4,2) -> S1/2(4,0) by default.
struct TwoPulseRoute {
    QuantumLevel start{Term::S1_2, 4, 4};
    QuantumLevel intermediate{Term::D5_2, 4, 2};
    QuantumLevel target{Term::S1_2, 4, 0};
};

/// Success probability of the two-pulse route; both steps must appear in the
/// line table (E2-allowed with non-zero strength).
inline double transfer_two_pi(const std::vector<SpectralLine>& table, double pulse_fidelity,
                              const TwoPulseRoute& route = {}) {
    if (!(pulse_fidelity >= 0.0 && pulse_fidelity <= 1.0)) throw DomainError("pulse fidelity must be in [0, 1]");
    make_transition(route.start, route.intermediate, Multipole::E2);
    make_transition(route.target, route.intermediate, Multipole::E2);
    if (!find_line(table, route.start, route.intermediate))
        throw StructuralError("first step " + to_string(route.start) + " -> " + to_string(route.intermediate) +
                              " is not in the line table");
    if (!find_line(table, route.target, route.intermediate))
        throw StructuralError("second step " + to_string(route.intermediate) + " -> " + to_string(route.target) +
                              " is not in the line table");
    return pulse_fidelity * pulse_fidelity;
}

enum class GroundDrive { raman, microwave };

/// Two-level excitation of a neighbour detuned by delta during a pulse of
/// length t on a transition with Rabi frequency omega.
inline double off_resonant_excitation(double omega, double delta, double t) {
    const double w = std::sqrt(omega * omega + delta * delta);
    if (w == 0.0) return 0.0;
    const double s = std::sin(w * t / 2.0);
    return omega * omega / (w * w) * s * s;
}

struct FourStepResult {
    double duration = 0.0;           // s
    double off_resonant_error = 0.0; // probability
    std::vector<double> step_errors;
};

/// Four pi-pulses (4,4)->(3,3)->(4,2)->(3,1)->(4,0). couplings are the step
/// Rabi frequencies (rad/s); each step leaks into one neighbour line detuned
/// by the Zeeman spacing (Hz) with the same coupling.
inline FourStepResult transfer_four_step(GroundDrive drive, const std::vector<double>& couplings,
                                         double zeeman_spacing_hz) {
    (void)drive;  // both drives act through the same magnetic-dipole matrix elements
    if (couplings.size() != 4) throw DomainError("four-step transfer needs four couplings");
    if (!(zeeman_spacing_hz >= 0.0)) throw DomainError("Zeeman spacing must be non-negative");
    FourStepResult r;
    double survive = 1.0;
    for (double om : couplings) {
        if (!(om > 0.0)) throw DomainError("step couplings must be positive");
        const double t = phys::pi / om;
        r.duration += t;
        const double e = std::isinf(zeeman_spacing_hz) ? 0.0
                                                       : off_resonant_excitation(om, phys::two_pi * zeeman_spacing_hz, t);
        r.step_errors.push_back(e);
        survive *= 1.0 - e;
    }
    r.off_resonant_error = 1.0 - survive;
    return r;
}

/// Step couplings of the four-pulse route scaled so the strongest equals
/// omega_max; relative values come from the ground-state M1 matrix elements.
inline std::vector<double> four_step_couplings(double omega_max, const AtomicConstants& c) {
    const std::array<QuantumLevel, 5> route{QuantumLevel{Term::S1_2, 4, 4}, QuantumLevel{Term::S1_2, 3, 3},
                                            QuantumLevel{Term::S1_2, 4, 2}, QuantumLevel{Term::S1_2, 3, 1},
                                            QuantumLevel{Term::S1_2, 4, 0}};
    std::vector<double> k;
    for (std::size_t i = 0; i + 1 < route.size(); ++i) k.push_back(ground_m1_coupling(route[i], route[i + 1], c));
    const double mx = *std::max_element(k.begin(), k.end());
    for (auto& v : k) v *= omega_max / mx;
    return k;
}

}  // namespace caqubit
