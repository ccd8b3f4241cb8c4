#include <gtest/gtest.h>

#include "caqubit/dynamics.hpp"
#include "caqubit/fit.hpp"
#include "oracles.hpp"

using namespace caqubit;

namespace {

const Basis kQubit;
const Environment kQuiet{nullptr, 3.4};

SystemState down() { return SystemState::in(kQubit, kQubitDown); }

double fidelity(const SystemState& a, const SystemState& b) { return std::norm(a.amplitudes.dot(b.amplitudes)); }

// fringe phase of P_up(phi) = 1/2 + A/2 cos(phi - phi0), via its first Fourier component
double fringe_phase(const RamseyConfig& cfg, const Environment& env) {
    double c = 0, s = 0;
    const int n = 64;
    for (int k = 0; k < n; ++k) {
        const double phi = phys::two_pi * k / n;
        const double p = run_sequence(down(), ramsey_sequence(cfg, phi), env).population(kQubitUp);
        c += p * std::cos(phi);
        s += p * std::sin(phi);
    }
    return std::atan2(s, c);
}

double fringe_amplitude(const RamseyConfig& cfg, const Environment& env) {
    double lo = 1, hi = 0;
    for (int k = 0; k < 64; ++k) {
        const double p = run_sequence(down(), ramsey_sequence(cfg, phys::two_pi * k / 64), env).population(kQubitUp);
        lo = std::min(lo, p);
        hi = std::max(hi, p);
    }
    return hi - lo;
}

}  // namespace

TEST(Evolve, ResonantPiPulse) {
    const double om = phys::two_pi * 1e3;
    const auto s = evolve(down(), PulseEvent::qubit(Channel::microwave, om, phys::pi / om), kQuiet);
    EXPECT_GT(s.population(kQubitUp), 1 - 1e-8);
    EXPECT_NEAR(s.norm(), 1.0, 1e-12);
    EXPECT_NEAR(s.time, phys::pi / om, 1e-18);
}

TEST(Evolve, OffResonantMatchesClosedForm) {
    const double om = phys::two_pi * 10e3;
    for (double det : {-25e3, -3e3, 1e3, 7.5e3, 40e3})
        for (double t : {13e-6, 50e-6, 333e-6}) {
            auto p = PulseEvent::qubit(Channel::microwave, om, t);
            p.detuning_start = p.detuning_end = det;
            EXPECT_NEAR(evolve(down(), p, kQuiet).population(kQubitUp), oracle::rabi_two_level(om, phys::two_pi * det, t),
                        1e-6)
                << det << " " << t;
        }
}

TEST(Evolve, TwoHalfPulsesEqualOnePi) {
    const double om = phys::two_pi * 25e3;
    for (double phase : {0.0, 0.7, -2.1}) {
        const auto half = PulseEvent::qubit(Channel::microwave, om, phys::pi / (2 * om), phase);
        const auto full = PulseEvent::qubit(Channel::microwave, om, phys::pi / om, phase);
        const auto a = evolve(evolve(down(), half, kQuiet), half, kQuiet);
        const auto b = evolve(down(), full, kQuiet);
        EXPECT_GT(fidelity(a, b), 1 - 1e-8);
    }
}

TEST(Evolve, NormUnderShapedChirpAndNoise) {
    NoiseModel nm;
    nm.B0 = 3.4;
    const auto trace = sample_trace(nm, 2e-3, 11, {});
    const Environment env{&trace, 3.4};
    const Basis b({kQubitDown, kQubitUp, QuantumLevel{Term::S1_2, 4, 1}}, 0);
    auto p = PulseEvent::qubit(Channel::microwave, phys::two_pi * 40e3, 1.5e-3);
    p.envelope = Envelope::cos2;
    p.detuning_start = -30e3;
    p.detuning_end = 30e3;
    const auto s = evolve(SystemState::in(b, kQubitDown), p, env);
    EXPECT_NEAR(s.norm(), 1.0, 1e-8);
    EXPECT_EQ(s.population(QuantumLevel{Term::S1_2, 4, 1}), 0.0);
}

TEST(Evolve, StructuralErrors) {
    auto p = PulseEvent::qubit(Channel::microwave, 1e4, 1e-4);
    p.upper = {Term::S1_2, 3, 1};
    EXPECT_THROW(evolve(down(), p, kQuiet), StructuralError);
    p.upper = kQubitUp;
    p.sideband = 1;
    EXPECT_THROW(evolve(down(), p, kQuiet), StructuralError);
    p = PulseEvent::qubit(Channel::microwave, 1e4, -1e-4);
    EXPECT_THROW(evolve(down(), p, kQuiet), DomainError);
    EXPECT_THROW(Basis({kQubitDown, kQubitDown}), StructuralError);
}

TEST(Evolve, CarrierAndSidebandOnFockStates) {
    const double eta = 0.2, om = phys::two_pi * 50e3;
    const Basis b({kQubitDown, kQubitUp}, 6);
    for (int n : {0, 1, 3}) {
        auto car = PulseEvent::qubit(Channel::raman_counter, om, 0.0);
        car.eta = eta;
        car.duration = phys::pi / sideband_rabi(n, 0, eta, om);
        EXPECT_GT(evolve(SystemState::in(b, kQubitDown, n), car, kQuiet).population(kQubitUp), 1 - 1e-8);

        auto blue = car;
        blue.sideband = 1;
        blue.duration = phys::pi / sideband_rabi(n, 1, eta, om);
        const auto s = evolve(SystemState::in(b, kQubitDown, n), blue, kQuiet);
        EXPECT_GT(std::norm(s.amplitudes[b.index(1, n + 1)]), 1 - 1e-8);
    }
    // the red sideband leaves |down, 0> alone
    auto red = PulseEvent::qubit(Channel::raman_counter, om, 1e-4);
    red.eta = eta;
    red.sideband = -1;
    EXPECT_NEAR(evolve(SystemState::in(b, kQubitDown, 0), red, kQuiet).population(kQubitDown), 1.0, 1e-15);
}

TEST(Evolve, DebyeWallerSuppression) {
    const double eta = 0.216, om = 1.0;
    EXPECT_LT(mean_sideband_rabi(MotionalState::thermal(10), eta, om, 0), mean_sideband_rabi(MotionalState::thermal(0), eta, om, 0));
    for (int n = 0; n < 8; ++n) EXPECT_LT(sideband_rabi(n + 1, 0, eta, om), sideband_rabi(n, 0, eta, om));
}

TEST(Rap, ZeroRabiAndChirpSign) {
    EXPECT_LT(rap_transfer(0.0, 100e-6, 100e3), 1e-12);
    EXPECT_THROW(rap_transfer(1e5, 0.0, 100e3), DomainError);
    for (double f : {5e3, 12e3, 40e3})
        for (double dc : {50e3, 200e3})
            EXPECT_NEAR(rap_transfer(phys::two_pi * f, 200e-6, dc), rap_transfer(phys::two_pi * f, 200e-6, -dc), 1e-6);
}

TEST(Rap, Plateau) {
    for (double f = 30e3; f <= 120e3 * 1.0001; f *= std::pow(4.0, 1.0 / 8)) EXPECT_GT(rap_transfer(phys::two_pi * f, 400e-6, 400e3), 0.99) << f;
}

TEST(Rap, ConstantAmplitudeLandauZener) {
    // rect envelope, chirp from -D to +D with D = 400 Omega / 2pi, so the sweep starts far from resonance
    const double om = phys::two_pi * 10e3, D = 400 * 10e3;
    const Basis b({QuantumLevel{Term::S1_2, 4, 4}, QuantumLevel{Term::D5_2, 6, 6}});
    for (double lambda : {0.1, 0.5, 1.0, 3.0}) {
        const double rate = om * om / lambda;  // rad/s^2
        PulseEvent p;
        p.channel = Channel::quadrupole;
        p.lower = b.levels()[0];
        p.upper = b.levels()[1];
        p.rabi_peak = om;
        p.detuning_start = -D;
        p.detuning_end = D;
        p.duration = phys::two_pi * 2 * D / rate;
        const double got = evolve(SystemState::in(b, p.lower), p, Environment{}).population(p.upper);
        const double want = oracle::landau_zener(om, rate);
        EXPECT_NEAR(got, want, 0.02 * want) << lambda;
        EXPECT_NEAR(landau_zener(om, rate), want, 1e-14);
    }
}

TEST(Raman, Scalings) {
    const auto mode = HarmonicMode::from_frequency(1.18e6, 42.958218 * phys::atomic_mass_unit);
    const auto g = BeamGeometry::raman_pair(397e-9, phys::pi / 2);
    const auto a = raman_effective_drive(RamanBeams::for_pi_time(g, 65.3e-6, -10e9), -10e9, mode, AtomicConstants::defaults());
    const auto b = raman_effective_drive(RamanBeams::for_pi_time(g, 65.3e-6, -20e9), -20e9, mode, AtomicConstants::defaults());
    EXPECT_NEAR(a.omega_eff, phys::pi / 65.3e-6, 1e-9 * a.omega_eff);
    EXPECT_NEAR(b.omega_eff, a.omega_eff, 1e-9 * a.omega_eff);
    EXPECT_NEAR(b.scattering_rate / a.scattering_rate, 0.5, 1e-12);
    EXPECT_NEAR(a.eta, lamb_dicke(g, mode), 1e-15);
    const auto co = raman_effective_drive(RamanBeams::for_pi_time(BeamGeometry::copropagating(397e-9, {1, 0, 0}), 65.3e-6, -10e9),
                                          -10e9, mode, AtomicConstants::defaults());
    EXPECT_EQ(co.eta, 0.0);
    // single-beam products: Omega_eff ~ O+ O- / Delta, rate ~ O^2 / Delta^2
    RamanBeams r{g, 2e8, 3e8};
    const auto d1 = raman_effective_drive(r, 1e9, mode, AtomicConstants::defaults());
    r.rabi_plus *= 2;
    const auto d2 = raman_effective_drive(r, 1e9, mode, AtomicConstants::defaults());
    EXPECT_NEAR(d2.omega_eff / d1.omega_eff, 2.0, 1e-12);
    EXPECT_NEAR(d2.scattering_rate / d1.scattering_rate, (16 + 9) / 13.0, 1e-12);
    EXPECT_THROW(raman_effective_drive(r, 0.0, mode, AtomicConstants::defaults()), DomainError);
}

TEST(Ramsey, ZeroWaitFullContrast) {
    RamseyConfig cfg;
    cfg.half_pi = PulseEvent::qubit(Channel::microwave, phys::two_pi * 10e3, 25e-6);
    EXPECT_NEAR(fringe_amplitude(cfg, kQuiet), 1.0, 1e-8);
}

TEST(Ramsey, StaticDetuningPhase) {
    RamseyConfig cfg;
    cfg.half_pi = PulseEvent::qubit(Channel::microwave, phys::two_pi * 5e6, 0.05e-6);
    const double b_ref = 0.5;
    const Environment quiet{nullptr, b_ref};
    const auto& c = AtomicConstants::defaults();
    auto qubit_freq = [&](double b) { return zeeman_frequency(kQubitUp, b, c) - zeeman_frequency(kQubitDown, b, c); };

    double sign = 0;
    for (double tau : {0.5e-3, 2e-3})
        for (double db : {0.2, 0.5, -0.3}) {
            const double delta = qubit_freq(b_ref + db) - qubit_freq(b_ref);  // Hz
            const auto trace = EnvTrace::constant(b_ref + db, tau + 1e-6);
            const Environment env{&trace, b_ref};

            cfg.wait = tau;
            cfg.echo = false;
            const double shift = wrap_phase(fringe_phase(cfg, env) - fringe_phase(cfg, quiet));
            const double expect = phys::two_pi * delta * tau;
            ASSERT_GT(std::abs(expect), 0.05);
            if (sign == 0) sign = shift * expect > 0 ? 1 : -1;
            EXPECT_NEAR(wrap_phase(shift - sign * expect), 0.0, 2e-3) << tau << " " << db;

            cfg.echo = true;
            EXPECT_NEAR(wrap_phase(fringe_phase(cfg, env) - fringe_phase(cfg, quiet)), 0.0, 2e-3) << tau << " " << db;
        }
}

TEST(Scan, ExactScanIsAnalyticCosine) {
    ShotModel m;
    const double om = phys::two_pi * 1e3;
    ScanOptions opt;
    opt.shots = 3;
    opt.exact = true;
    std::vector<double> ts;
    for (int i = 0; i <= 20; ++i) ts.push_back(i * 0.1e-3);
    const auto pts = rabi_scan(m, PulseEvent::qubit(Channel::microwave, om, 0.0), ts, opt);
    ASSERT_EQ(pts.size(), ts.size());
    for (const auto& p : pts) EXPECT_NEAR(p.y, std::pow(std::cos(om * p.x / 2), 2), 1e-10);
}

TEST(Scan, BinomialErrorBars) {
    ShotModel m;
    m.readout.prep_fidelity = 1.0;
    const double om = phys::two_pi * 1e3;
    const double t = 0.25e-3 * 4 / 3;  // p_dark = cos^2(pi/3) = 0.25
    ScanOptions opt;
    opt.shots = 50;
    std::vector<double> ys;
    double mean_sigma = 0;
    for (std::uint64_t seed = 1; seed <= 300; ++seed) {
        opt.seed = seed;
        const auto p = rabi_scan(m, PulseEvent::qubit(Channel::microwave, om, 0.0), {t}, opt).front();
        ys.push_back(p.y);
        mean_sigma += p.sigma / 300;
    }
    double mu = 0, var = 0;
    for (double y : ys) mu += y / ys.size();
    for (double y : ys) var += (y - mu) * (y - mu) / (ys.size() - 1);
    EXPECT_NEAR(mu, 0.25, 0.02);  // small readout errors pull it slightly
    EXPECT_NEAR(std::sqrt(var), std::sqrt(0.25 * 0.75 / 50), 0.15 * std::sqrt(0.25 * 0.75 / 50));
    EXPECT_NEAR(mean_sigma, std::sqrt(0.25 * 0.75 / 50), 0.15 * std::sqrt(0.25 * 0.75 / 50));
}

TEST(Scan, IndependentOfWorkerCount) {
    ShotModel m;
    m.noise = NoiseModel{};
    m.noise.B0 = 3.4;
    std::vector<double> ts;
    for (int i = 0; i < 12; ++i) ts.push_back(i * 0.1e-3);
    ScanOptions a;
    a.shots = 20;
    a.seed = 99;
    ScanOptions b = a;
    b.workers = 3;
    const auto pulse = PulseEvent::qubit(Channel::microwave, phys::two_pi * 1e3, 0.0);
    const auto x = rabi_scan(m, pulse, ts, a), y = rabi_scan(m, pulse, ts, b);
    for (std::size_t i = 0; i < ts.size(); ++i) {
        EXPECT_EQ(x[i].y, y[i].y);
        EXPECT_EQ(x[i].sigma, y[i].sigma);
    }
    EXPECT_THROW(rabi_scan(m, pulse, {}, a), DomainError);
    a.shots = 0;
    EXPECT_THROW(rabi_scan(m, pulse, ts, a), DomainError);
}
