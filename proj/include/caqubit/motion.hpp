#pragma once

// Axial centre-of-mass mode: Fock distributions, Lamb-Dicke coupling,
// sideband Rabi frequencies, heating and transport excitation.

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <string>
#include <vector>

#include "caqubit/errors.hpp"
#include "caqubit/physics.hpp"

namespace caqubit {

struct HarmonicMode {
    double omega = phys::two_pi * 1.18e6;  // rad/s
    double mass_kg = 42.958218 * phys::atomic_mass_unit;
    Vec3 axis{0.0, 0.0, 1.0};

    static HarmonicMode from_frequency(double freq_hz, double mass_kg, Vec3 axis = {0.0, 0.0, 1.0}) {
        if (!(freq_hz > 0.0)) throw DomainError("trap frequency must be positive");
        if (!(mass_kg > 0.0)) throw DomainError("mass must be positive");
        const double n = norm(axis);
        if (!(n > 0.0)) throw DomainError("mode axis must be non-zero");
        return {phys::two_pi * freq_hz, mass_kg, (1.0 / n) * axis};
    }

    /// Ground-state spread sqrt(hbar / 2 M omega), m.
    [[nodiscard]] double zero_point_length() const {
        return std::sqrt(phys::hbar / (2.0 * mass_kg * omega));
    }
};

struct BeamGeometry {
    Vec3 k_plus{};   // rad/m
    Vec3 k_minus{};  // rad/m; zero vector for a single-beam drive
    std::string polarization_plus = "linear";
    std::string polarization_minus = "linear";

    /// Two beams of equal wavelength enclosing `angle`, oriented so that
    /// k_plus - k_minus lies along `axis`.
    static BeamGeometry raman_pair(double wavelength_m, double angle_rad, Vec3 axis = {0.0, 0.0, 1.0}) {
        const double k = phys::two_pi / wavelength_m;
        const double n = norm(axis);
        const Vec3 z = (1.0 / n) * axis;
        // any unit vector orthogonal to z
        Vec3 x = std::abs(z[0]) < 0.9 ? Vec3{1.0, 0.0, 0.0} : Vec3{0.0, 1.0, 0.0};
        const double proj = dot(x, z);
        x = x - proj * z;
        x = (1.0 / norm(x)) * x;
        const double c = std::cos(angle_rad / 2.0), s = std::sin(angle_rad / 2.0);
        BeamGeometry g;
        for (std::size_t i = 0; i < 3; ++i) {
            g.k_plus[i] = k * (c * x[i] + s * z[i]);
            g.k_minus[i] = k * (c * x[i] - s * z[i]);
        }
        return g;
    }

    static BeamGeometry copropagating(double wavelength_m, Vec3 direction) {
        const double k = phys::two_pi / wavelength_m;
        const Vec3 d = (1.0 / norm(direction)) * direction;
        return {k * d, k * d};
    }

    /// A single beam (e.g. the 729 nm quadrupole laser) at `angle` to the axis.
    static BeamGeometry single(double wavelength_m, double angle_rad, Vec3 axis = {0.0, 0.0, 1.0}) {
        auto g = raman_pair(wavelength_m, 0.0, axis);
        const double k = phys::two_pi / wavelength_m;
        const Vec3 z = (1.0 / norm(axis)) * axis;
        const Vec3 x = (1.0 / k) * g.k_plus;
        for (std::size_t i = 0; i < 3; ++i) g.k_plus[i] = k * (std::sin(angle_rad) * x[i] + std::cos(angle_rad) * z[i]);
        g.k_minus = {0.0, 0.0, 0.0};
        return g;
    }
};

/// eta = |(k+ - k-) . e_z| sqrt(hbar / 2 M omega).
inline double lamb_dicke(const BeamGeometry& g, const HarmonicMode& mode) {
    return std::abs(dot(g.k_plus - g.k_minus, mode.axis)) * mode.zero_point_length();
}

// --- Fock distributions ------------------------------------------------------

class MotionalState {
public:
    enum class Kind { thermal, number, general };

    static constexpr double kTailTolerance = 1e-6;
    static constexpr int kMinCutoff = 20;

    /// Smallest n_max with thermal tail mass below `tail` (at least 20).
    static int thermal_cutoff(double nbar, double tail = kTailTolerance) {
        if (nbar <= 0.0) return kMinCutoff;
        // tail mass beyond n_max is r^(n_max+1), r = nbar/(nbar+1)
        const double r = nbar / (nbar + 1.0);
        const int n = static_cast<int>(std::ceil(std::log(tail) / std::log(r)));
        return std::max(kMinCutoff, n);
    }

    static MotionalState thermal(double nbar, double tail = kTailTolerance) {
        if (!(nbar >= 0.0)) throw DomainError("thermal occupation must be non-negative");
        const int nmax = thermal_cutoff(nbar, tail);
        std::vector<double> p(static_cast<std::size_t>(nmax) + 1);
        const double r = nbar / (nbar + 1.0);
        double pn = 1.0 / (nbar + 1.0);
        for (auto& x : p) {
            x = pn;
            pn *= r;
        }
        MotionalState s(std::move(p), Kind::thermal);
        s.normalize();
        return s;
    }

    static MotionalState number(int n, int nmax = kMinCutoff) {
        if (n < 0) throw DomainError("Fock index must be non-negative");
        std::vector<double> p(static_cast<std::size_t>(std::max(n, nmax)) + 1, 0.0);
        p[static_cast<std::size_t>(n)] = 1.0;
        return MotionalState(std::move(p), Kind::number);
    }

    static MotionalState general(std::vector<double> p) {
        if (p.empty()) throw DomainError("empty Fock distribution");
        double sum = 0.0;
        for (double x : p) {
            if (!(x >= 0.0)) throw DomainError("Fock populations must be non-negative");
            sum += x;
        }
        if (std::abs(sum - 1.0) > 1e-9) throw DomainError("Fock populations must sum to 1");
        return MotionalState(std::move(p), Kind::general);
    }

    [[nodiscard]] const std::vector<double>& populations() const noexcept { return p_; }
    [[nodiscard]] Kind kind() const noexcept { return kind_; }
    [[nodiscard]] int n_max() const noexcept { return static_cast<int>(p_.size()) - 1; }
    [[nodiscard]] double population(int n) const {
        return n >= 0 && n <= n_max() ? p_[static_cast<std::size_t>(n)] : 0.0;
    }

    [[nodiscard]] double mean() const {
        double m = 0.0;
        for (std::size_t n = 0; n < p_.size(); ++n) m += static_cast<double>(n) * p_[n];
        return m;
    }

private:
    MotionalState(std::vector<double> p, Kind k) : p_(std::move(p)), kind_(k) {}

    void normalize() {
        const double s = std::accumulate(p_.begin(), p_.end(), 0.0);
        for (auto& x : p_) x /= s;
    }

    std::vector<double> p_;
    Kind kind_;

    friend MotionalState make_distribution(std::vector<double>);
};

/// Wraps a non-negative vector as a general state, renormalizing rounding drift.
inline MotionalState make_distribution(std::vector<double> p) {
    for (auto& x : p) x = std::max(0.0, x);
    while (p.size() > static_cast<std::size_t>(MotionalState::kMinCutoff) + 1 && p.back() < 1e-15) p.pop_back();
    MotionalState s(std::move(p), MotionalState::Kind::general);
    s.normalize();
    return s;
}

// --- sideband couplings ------------------------------------------------------

/// Rabi frequency of |n> -> |n+s>:
/// Omega0 e^{-eta^2/2} eta^|s| sqrt(n<!/n>!) |L_{n<}^{|s|}(eta^2)|.
inline double sideband_rabi(int n, int s, double eta, double omega0) {
    if (n < 0) throw DomainError("Fock index must be non-negative");
    if (n + s < 0) throw DomainError("sideband order takes n below zero");
    const int lo = std::min(n, n + s);
    const int hi = std::max(n, n + s);
    const unsigned as = static_cast<unsigned>(std::abs(s));
    const double e2 = eta * eta;
    if (as > 0 && eta == 0.0) return 0.0;
    const double log_ratio = 0.5 * (std::lgamma(lo + 1.0) - std::lgamma(hi + 1.0));
    const double lag = std::assoc_laguerre(static_cast<unsigned>(lo), as, e2);
    return omega0 * std::exp(-e2 / 2.0 + log_ratio) * std::pow(std::abs(eta), static_cast<double>(as)) *
           std::abs(lag);
}

/// Excitation probability after driving sideband `order` for time t on a
/// Fock distribution. Fock states below the sideband floor stay dark.
inline double flop_probability(double t, const MotionalState& state, double eta, double omega0, int order) {
    if (t < 0.0) throw DomainError("time must be non-negative");
    double p = 0.0;
    const auto& pops = state.populations();
    for (int n = 0; n < static_cast<int>(pops.size()); ++n) {
        if (n + order < 0 || pops[static_cast<std::size_t>(n)] == 0.0) continue;
        const double s = std::sin(sideband_rabi(n, order, eta, omega0) * t / 2.0);
        p += pops[static_cast<std::size_t>(n)] * s * s;
    }
    return p;
}

/// Thermal-state sideband flop, tail mass below 1e-6.
inline double thermal_flop(double t, double nbar, double eta, double omega0, int order) {
    return flop_probability(t, MotionalState::thermal(nbar), eta, omega0, order);
}

/// Population-weighted Rabi frequency of a sideband on a Fock distribution.
inline double mean_sideband_rabi(const MotionalState& state, double eta, double omega0, int order) {
    double acc = 0.0, w = 0.0;
    const auto& p = state.populations();
    for (int n = 0; n < static_cast<int>(p.size()); ++n) {
        if (n + order < 0) continue;
        acc += p[static_cast<std::size_t>(n)] * sideband_rabi(n, order, eta, omega0);
        w += p[static_cast<std::size_t>(n)];
    }
    return w > 0.0 ? acc / w : 0.0;
}

// --- heating -----------------------------------------------------------------

/// Evolves populations under coupling to an infinite-temperature reservoir,
/// dp_n/dt = G [n p_{n-1} - (2n+1) p_n + (n+1) p_{n+1}], so <n> grows by G t.
inline MotionalState apply_heating(const MotionalState& state, double duration, double rate) {
    if (!(rate >= 0.0)) throw DomainError("heating rate must be non-negative");
    if (!(duration >= 0.0)) throw DomainError("duration must be non-negative");
    if (duration == 0.0 || rate == 0.0) return state;

    const double gt = rate * duration;
    const double nbar_final = state.mean() + gt;
    const int nmax = std::max(state.n_max() + 10, MotionalState::thermal_cutoff(nbar_final, 1e-13) + 10);
    std::vector<double> p(static_cast<std::size_t>(nmax) + 1, 0.0);
    std::copy(state.populations().begin(), state.populations().end(), p.begin());

    auto deriv = [nmax](const std::vector<double>& x, std::vector<double>& dx) {
        for (int n = 0; n <= nmax; ++n) {
            const auto i = static_cast<std::size_t>(n);
            double d = -static_cast<double>(n) * x[i];
            if (n > 0) d += static_cast<double>(n) * x[i - 1];
            if (n < nmax) d += static_cast<double>(n + 1) * (x[i + 1] - x[i]);
            dx[i] = d;
        }
    };

    // RK4 in units of G t; stable for h (2 nmax + 1) < 2.7
    const int steps = std::max(1, static_cast<int>(std::ceil(gt * (2.0 * nmax + 1.0) / 0.5)));
    const double h = gt / steps;
    const std::size_t dim = p.size();
    std::vector<double> k1(dim), k2(dim), k3(dim), k4(dim), tmp(dim);
    for (int s = 0; s < steps; ++s) {
        deriv(p, k1);
        for (std::size_t i = 0; i < dim; ++i) tmp[i] = p[i] + 0.5 * h * k1[i];
        deriv(tmp, k2);
        for (std::size_t i = 0; i < dim; ++i) tmp[i] = p[i] + 0.5 * h * k2[i];
        deriv(tmp, k3);
        for (std::size_t i = 0; i < dim; ++i) tmp[i] = p[i] + h * k3[i];
        deriv(tmp, k4);
        for (std::size_t i = 0; i < dim; ++i) p[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    return make_distribution(std::move(p));
}

/// Ramsey contrast of (|0> + |1>)/sqrt2 after waiting tau under heating at
/// `rate`: 2|rho_01| / (rho_00 + rho_11), i.e. the fringe visibility of a
/// measurement restricted to the {0, 1} subspace.
inline double motional_ramsey_coherence(double tau, double rate) {
    if (!(tau >= 0.0)) throw DomainError("wait time must be non-negative");
    if (!(rate >= 0.0)) throw DomainError("heating rate must be non-negative");
    if (tau == 0.0 || rate == 0.0) return 1.0;

    const double gt = rate * tau;
    const int nmax = std::max(40, MotionalState::thermal_cutoff(gt + 1.0, 1e-13) + 10);
    const auto dim = static_cast<std::size_t>(nmax) + 1;
    // c[n] = rho_{n,n+1} (real for this initial state)
    std::vector<double> c(dim, 0.0);
    c[0] = 0.5;
    auto deriv = [nmax](const std::vector<double>& x, std::vector<double>& dx) {
        for (int n = 0; n <= nmax; ++n) {
            const auto i = static_cast<std::size_t>(n);
            double d = -2.0 * (n + 1.0) * x[i];
            if (n > 0) d += std::sqrt(static_cast<double>(n) * (n + 1.0)) * x[i - 1];
            if (n < nmax) d += std::sqrt((n + 1.0) * (n + 2.0)) * x[i + 1];
            dx[i] = d;
        }
    };
    const int steps = std::max(1, static_cast<int>(std::ceil(gt * (4.0 * nmax + 4.0) / 0.5)));
    const double h = gt / steps;
    std::vector<double> k1(dim), k2(dim), k3(dim), k4(dim), tmp(dim);
    for (int s = 0; s < steps; ++s) {
        deriv(c, k1);
        for (std::size_t i = 0; i < dim; ++i) tmp[i] = c[i] + 0.5 * h * k1[i];
        deriv(tmp, k2);
        for (std::size_t i = 0; i < dim; ++i) tmp[i] = c[i] + 0.5 * h * k2[i];
        deriv(tmp, k3);
        for (std::size_t i = 0; i < dim; ++i) tmp[i] = c[i] + h * k3[i];
        deriv(tmp, k4);
        for (std::size_t i = 0; i < dim; ++i) c[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }

    const auto pops = apply_heating(MotionalState::general({0.5, 0.5}), tau, rate);
    const double sub = pops.population(0) + pops.population(1);
    return std::clamp(2.0 * std::abs(c[0]) / sub, 0.0, 1.0);
}

// --- transport ---------------------------------------------------------------

struct TransportRamp {
    enum class Profile { smoothstep, linear, sudden };

    double displacement = 10e-6;  // m
    double duration = 40e-6;      // s
    double filter_cutoff = 125e3; // Hz, single-pole low pass; 0 disables
    Profile profile = Profile::smoothstep;
};

namespace detail {

// Integral of a linear function (v0 -> v1 over [t0, t0+h]) times e^{i w t}.
inline std::complex<double> filon_segment(double v0, double v1, double t0, double h, double w) {
    using cd = std::complex<double>;
    const double th = w * h;
    cd i0, i1;  // integral over u in [0,1] of e^{i th u} and u e^{i th u}
    if (std::abs(th) < 1e-3) {
        const cd j(0.0, th);
        i0 = 1.0 + j / 2.0 + j * j / 6.0 + j * j * j / 24.0;
        i1 = 0.5 + j / 3.0 + j * j / 8.0 + j * j * j / 30.0;
    } else {
        const cd e = std::exp(cd(0.0, th));
        const cd j(0.0, th);
        i0 = (e - 1.0) / j;
        i1 = e / j - (e - 1.0) / (j * j);
    }
    return h * std::exp(cd(0.0, w * t0)) * (v0 * i0 + (v1 - v0) * i1);
}

}  // namespace detail

/// Coherent excitation |alpha|^2 left in the mode after the trap centre follows
/// the ramp through a single-pole low-pass filter:
/// |alpha|^2 = (M w / 2 hbar) |H(w) int v(t) e^{i w t} dt|^2, H = 1/(1 - i w tau_RC).
inline double transport_excitation(const TransportRamp& ramp, const HarmonicMode& mode) {
    if (!(ramp.duration >= 0.0)) throw DomainError("transport duration must be non-negative");
    if (!std::isfinite(ramp.displacement)) throw DomainError("displacement must be finite");
    if (!(ramp.filter_cutoff >= 0.0)) throw DomainError("filter cutoff must be non-negative");
    if (ramp.displacement == 0.0) return 0.0;

    const double w = mode.omega;
    std::complex<double> v_hat;
    const double d = ramp.displacement, T = ramp.duration;
    if (ramp.profile == TransportRamp::Profile::sudden || T == 0.0) {
        v_hat = d;
    } else if (ramp.profile == TransportRamp::Profile::linear) {
        v_hat = detail::filon_segment(d / T, d / T, 0.0, T, w);
    } else {
        // smoothstep velocity 6 d/T u(1-u), piecewise-linear Filon quadrature
        const int n = std::max(2048, static_cast<int>(std::ceil(w * T / phys::two_pi)) * 32);
        const double h = T / n;
        auto v = [&](int k) {
            const double u = static_cast<double>(k) / n;
            return 6.0 * d / T * u * (1.0 - u);
        };
        for (int k = 0; k < n; ++k) v_hat += detail::filon_segment(v(k), v(k + 1), k * h, h, w);
    }
    double h2 = 1.0;
    if (ramp.filter_cutoff > 0.0) {
        const double wt = w / (phys::two_pi * ramp.filter_cutoff);
        h2 = 1.0 / (1.0 + wt * wt);
    }
    return mode.mass_kg * w / (2.0 * phys::hbar) * std::norm(v_hat) * h2;
}

}  // namespace caqubit
