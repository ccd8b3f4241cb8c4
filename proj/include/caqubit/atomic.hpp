#pragma once

// Static level structure of 43Ca+: the 144 hyperfine-Zeeman states of the
// S1/2, P1/2, P3/2, D3/2 and D5/2 terms, their g-factors and field-dependent
// frequencies, and the electric-quadrupole line table S1/2 <-> D.
//
// S1/2 uses the exact Breit-Rabi solution (J = 1/2); every other term uses the
// linear Zeeman effect, which is adequate for the B <= 5 G operating range.

#include <array>
#include <cmath>
#include <complex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "caqubit/angular.hpp"
#include "caqubit/constants_data.hpp"
#include "caqubit/errors.hpp"
#include "caqubit/ini.hpp"
#include "caqubit/physics.hpp"

namespace caqubit {

enum class Term { S1_2, P1_2, P3_2, D3_2, D5_2 };

inline constexpr std::array<Term, 5> kAllTerms{Term::S1_2, Term::P1_2, Term::P3_2, Term::D3_2,
                                                Term::D5_2};

/// Twice the electronic angular momentum J of a term.
inline int two_j(Term t) {
    switch (t) {
        case Term::S1_2: return 1;
        case Term::P1_2: return 1;
        case Term::P3_2: return 3;
        case Term::D3_2: return 3;
        case Term::D5_2: return 5;
    }
    throw StructuralError("unknown term");
}

inline std::string_view term_name(Term t) {
    switch (t) {
        case Term::S1_2: return "S1_2";
        case Term::P1_2: return "P1_2";
        case Term::P3_2: return "P3_2";
        case Term::D3_2: return "D3_2";
        case Term::D5_2: return "D5_2";
    }
    throw StructuralError("unknown term");
}

inline std::optional<Term> parse_term(std::string_view s) {
    for (Term t : kAllTerms)
        if (term_name(t) == s) return t;
    return std::nullopt;
}

/// One hyperfine-Zeeman state |term, F, mF>.
struct QuantumLevel {
    Term term = Term::S1_2;
    int F = 4;
    int mF = 0;

    auto operator<=>(const QuantumLevel&) const = default;
};

inline std::string to_string(const QuantumLevel& l) {
    return std::string(term_name(l.term)) + "(F=" + std::to_string(l.F) +
           ",m=" + std::to_string(l.mF) + ")";
}

struct TermConstants {
    double g_j = 0.0;
    double hyperfine_a_hz = 0.0;  // signed
    double hyperfine_b_hz = 0.0;  // signed
    double lifetime_s = 0.0;      // 0 for the stable ground term
};

/// Immutable set of atomic constants loaded from a constants file.
class AtomicConstants {
public:
    static AtomicConstants from_document(const IniDocument& doc, std::string text = {}) {
        AtomicConstants c;
        c.text_ = std::move(text);
        if (const auto* v = doc.find("meta", "version")) c.version_ = v->value;

        c.mass_kg_ = doc.positive("ion", "mass_u") * phys::atomic_mass_unit;
        const auto& spin = doc.require("ion", "nuclear_spin");
        if (doc.to_double(spin, "ion", "nuclear_spin") != 3.5)
            throw ConfigError(doc.source(), spin.line,
                              "nuclear_spin must be 3.5; only 43Ca+ level structure is supported");
        c.g_i_ = doc.positive("ion", "g_I", true);

        auto& s = c.terms_[index(Term::S1_2)];
        s.g_j = doc.positive("S1_2", "g_J");
        c.ground_hfs_hz_ = doc.positive("S1_2", "hfs_splitting");
        bool inverted = true;
        if (const auto* e = doc.find("S1_2", "hfs_inverted"))
            inverted = IniDocument::to_bool(*e, doc.source(), "hfs_inverted");
        s.hyperfine_a_hz = (inverted ? -1.0 : 1.0) * c.ground_hfs_hz_ / (c.two_i() / 2.0 + 0.5);

        for (Term t : {Term::P1_2, Term::P3_2, Term::D3_2, Term::D5_2}) {
            const std::string sec(term_name(t));
            auto& tc = c.terms_[index(t)];
            tc.g_j = doc.positive(sec, "g_J");
            tc.hyperfine_a_hz = doc.number(sec, "hyperfine_A");
            tc.hyperfine_b_hz = doc.optional_number(sec, "hyperfine_B").value_or(0.0);
            tc.lifetime_s = doc.positive(sec, "lifetime");
        }
        return c;
    }

    static AtomicConstants from_text(std::string_view text, std::string source = "constants") {
        return from_document(IniDocument::parse(text, std::move(source)), std::string(text));
    }

    static AtomicConstants from_file(const std::string& path) {
        auto doc = IniDocument::load(path);
        std::ifstream in(path);
        std::ostringstream ss;
        ss << in.rdbuf();
        return from_document(doc, ss.str());
    }

    static const AtomicConstants& defaults() {
        static const AtomicConstants c = from_text(kDefaultConstantsText, "builtin constants");
        return c;
    }

    [[nodiscard]] int two_i() const noexcept { return 7; }
    [[nodiscard]] double nuclear_spin() const noexcept { return 3.5; }
    [[nodiscard]] double mass_kg() const noexcept { return mass_kg_; }
    [[nodiscard]] double g_i() const noexcept { return g_i_; }
    [[nodiscard]] double ground_hfs_splitting_hz() const noexcept { return ground_hfs_hz_; }
    [[nodiscard]] const TermConstants& term(Term t) const { return terms_[index(t)]; }
    [[nodiscard]] double d52_lifetime_s() const { return term(Term::D5_2).lifetime_s; }
    [[nodiscard]] const std::string& version() const noexcept { return version_; }
    [[nodiscard]] const std::string& text() const noexcept { return text_; }

    /// Natural linewidth Gamma/2pi of a decaying term, Hz.
    [[nodiscard]] double linewidth_hz(Term t) const {
        const double tau = term(t).lifetime_s;
        if (tau <= 0.0) return 0.0;
        return 1.0 / (phys::two_pi * tau);
    }

private:
    static std::size_t index(Term t) { return static_cast<std::size_t>(t); }

    double mass_kg_ = 0.0;
    double g_i_ = 0.0;
    double ground_hfs_hz_ = 0.0;
    std::array<TermConstants, 5> terms_{};
    std::string version_ = "unversioned";
    std::string text_;
};

// --- level bookkeeping -------------------------------------------------------

inline bool is_valid_level(const QuantumLevel& l, const AtomicConstants& c) {
    const int tj = two_j(l.term);
    const int fmin = std::abs(c.two_i() - tj) / 2;
    const int fmax = (c.two_i() + tj) / 2;
    return l.F >= fmin && l.F <= fmax && std::abs(l.mF) <= l.F;
}

inline void require_valid(const QuantumLevel& l, const AtomicConstants& c) {
    if (!is_valid_level(l, c)) throw StructuralError("level " + to_string(l) + " does not exist");
}

/// Every hyperfine-Zeeman state of the five terms.
inline std::vector<QuantumLevel> enumerate_levels(const AtomicConstants& c) {
    std::vector<QuantumLevel> out;
    for (Term t : kAllTerms) {
        const int tj = two_j(t);
        for (int F = std::abs(c.two_i() - tj) / 2; F <= (c.two_i() + tj) / 2; ++F)
            for (int m = -F; m <= F; ++m) out.push_back({t, F, m});
    }
    return out;
}

/// Landé g_F including the nuclear term.
inline double g_factor(const QuantumLevel& l, const AtomicConstants& c) {
    require_valid(l, c);
    const double J = two_j(l.term) / 2.0;
    const double I = c.nuclear_spin();
    const double F = l.F;
    const double ff = F * (F + 1.0), jj = J * (J + 1.0), ii = I * (I + 1.0);
    const double gj = c.term(l.term).g_j;
    return gj * (ff - ii + jj) / (2.0 * ff) + c.g_i() * (ff + ii - jj) / (2.0 * ff);
}

/// Zero-field hyperfine energy of (term, F) relative to the term centroid, Hz.
inline double hyperfine_energy(Term t, int F, const AtomicConstants& c) {
    const double J = two_j(t) / 2.0;
    const double I = c.nuclear_spin();
    const double K = F * (F + 1.0) - I * (I + 1.0) - J * (J + 1.0);
    const auto& tc = c.term(t);
    double e = 0.5 * tc.hyperfine_a_hz * K;
    if (J >= 1.0)
        e += tc.hyperfine_b_hz * (1.5 * K * (K + 1.0) - 2.0 * I * (I + 1.0) * J * (J + 1.0)) /
             (4.0 * I * (2.0 * I - 1.0) * J * (2.0 * J - 1.0));
    return e;
}

namespace detail {

inline constexpr double kMaxField = 10.0;  // gauss

inline void check_field(double b) {
    if (!(b >= 0.0 && b <= kMaxField))
        throw RangeError("magnetic field " + std::to_string(b) + " G outside [0, 10] G");
}

// Breit-Rabi energy of an S1/2 level, Hz, relative to the term centroid.
// Accepts signed fields (a sign flip reverses the quantization axis).
inline double breit_rabi(int F, int m, double b, const AtomicConstants& c) {
    const double I = c.nuclear_spin();
    const double dE = c.term(Term::S1_2).hyperfine_a_hz * (I + 0.5);
    const double gj = c.term(Term::S1_2).g_j;
    const double gi = c.g_i();
    const double x = (gj - gi) * phys::bohr_magneton_hz_per_gauss * b / dE;
    const double base = -dE / (2.0 * (2.0 * I + 1.0)) + gi * phys::bohr_magneton_hz_per_gauss * m * b;
    const bool upper_branch = F > I;  // F = I + 1/2
    if (std::abs(m) == static_cast<int>(I + 0.5)) {
        // Stretched states: the square root is a perfect square, keep its sign.
        return base + 0.5 * dE * (1.0 + (m > 0 ? x : -x));
    }
    const double root = std::sqrt(1.0 + 4.0 * m * x / (2.0 * I + 1.0) + x * x);
    return base + (upper_branch ? 0.5 : -0.5) * dE * root;
}

// Zeeman offset without range checks, signed field allowed.
inline double zeeman_offset(const QuantumLevel& l, double b, const AtomicConstants& c) {
    if (l.term == Term::S1_2) return breit_rabi(l.F, l.mF, b, c) - breit_rabi(l.F, l.mF, 0.0, c);
    return g_factor(l, c) * l.mF * phys::bohr_magneton_hz_per_gauss * b;
}

}  // namespace detail

/// Zeeman offset (Hz) of a level from its field-free hyperfine level.
inline double zeeman_frequency(const QuantumLevel& l, double b_gauss, const AtomicConstants& c) {
    require_valid(l, c);
    detail::check_field(b_gauss);
    return detail::zeeman_offset(l, b_gauss, c);
}

/// Energy of a level relative to its term centroid at field B, Hz.
inline double level_energy(const QuantumLevel& l, double b_gauss, const AtomicConstants& c) {
    return hyperfine_energy(l.term, l.F, c) + zeeman_frequency(l, b_gauss, c);
}

struct ClockSensitivity {
    double shift_hz = 0.0;            // change of the mF=0 <-> mF=0 frequency from B=0
    double slope_hz_per_gauss = 0.0;  // d(shift)/dB
};

/// Second-order Zeeman shift of the S1/2 (4,0) <-> (3,0) clock transition.
inline ClockSensitivity clock_sensitivity(double b_gauss, const AtomicConstants& c) {
    detail::check_field(b_gauss);
    const double I = c.nuclear_spin();
    const double dE = std::abs(c.term(Term::S1_2).hyperfine_a_hz * (I + 0.5));
    const double k = (c.term(Term::S1_2).g_j - c.g_i()) * phys::bohr_magneton_hz_per_gauss;
    const double x = k * b_gauss / dE;
    const double root = std::sqrt(1.0 + x * x);
    // root - 1 written to avoid cancellation at small x
    return {dE * x * x / (root + 1.0), k * x / root};
}

/// Clock-transition frequency change at signed field, without range checks.
/// Used by noise traces where B(t) may momentarily leave [0, 10] G.
inline double clock_shift_unchecked(double b_gauss, const AtomicConstants& c) {
    const double I = c.nuclear_spin();
    const double dE = std::abs(c.term(Term::S1_2).hyperfine_a_hz * (I + 0.5));
    const double x = (c.term(Term::S1_2).g_j - c.g_i()) * phys::bohr_magneton_hz_per_gauss * b_gauss / dE;
    return dE * x * x / (std::sqrt(1.0 + x * x) + 1.0);
}

// --- transitions -------------------------------------------------------------

enum class Multipole { E1, E2, M1 };

struct TransitionSpec {
    QuantumLevel lower;
    QuantumLevel upper;
    Multipole multipole = Multipole::E2;
    int delta_m = 0;

    auto operator<=>(const TransitionSpec&) const = default;
};

/// Builds a transition after checking the |delta m| selection rule of its
/// multipole order.
inline TransitionSpec make_transition(const QuantumLevel& lower, const QuantumLevel& upper,
                                      Multipole mp) {
    const int dm = upper.mF - lower.mF;
    const int rank = mp == Multipole::E2 ? 2 : 1;
    if (std::abs(dm) > rank)
        throw StructuralError("transition " + to_string(lower) + " -> " + to_string(upper) +
                              " violates |delta m| <= " + std::to_string(rank));
    if (std::abs(upper.F - lower.F) > rank)
        throw StructuralError("transition " + to_string(lower) + " -> " + to_string(upper) +
                              " violates |delta F| <= " + std::to_string(rank));
    return {lower, upper, mp, dm};
}

/// Laser beam direction and polarization relative to the quantization axis.
/// beam_angle: angle between k and B. polarization_angle: angle between the
/// polarization vector and the plane spanned by k and B.
struct QuadrupoleGeometry {
    double beam_angle = phys::pi / 4.0;
    double polarization_angle = phys::pi / 6.0;
};

/// |T_q|^2 for q = -2..2 of the symmetric tensor (eps k + k eps)/2 in the frame
/// whose z axis is B. Index q + 2.
inline std::array<double, 5> quadrupole_geometry_weights(const QuadrupoleGeometry& g) {
    using cd = std::complex<double>;
    const double phi = g.beam_angle, gam = g.polarization_angle;
    const Vec3 k{std::sin(phi), 0.0, std::cos(phi)};
    const Vec3 e1{std::cos(phi), 0.0, -std::sin(phi)};
    const Vec3 eps{std::cos(gam) * e1[0], std::sin(gam), std::cos(gam) * e1[2]};
    auto spherical = [](const Vec3& v) {
        const double s = 1.0 / std::sqrt(2.0);
        return std::array<cd, 3>{cd(v[0], -v[1]) * s, cd(v[2], 0.0), -cd(v[0], v[1]) * s};
    };
    const auto ks = spherical(k), es = spherical(eps);
    std::array<double, 5> out{};
    for (int q = -2; q <= 2; ++q) {
        cd t = 0.0;
        for (int q1 = -1; q1 <= 1; ++q1) {
            const int q2 = q - q1;
            if (std::abs(q2) > 1) continue;
            t += angular::clebsch_gordan(2, 2 * q1, 2, 2 * q2, 4, 2 * q) *
                 es[static_cast<std::size_t>(q1 + 1)] * ks[static_cast<std::size_t>(q2 + 1)];
        }
        out[static_cast<std::size_t>(q + 2)] = std::norm(t);
    }
    return out;
}

/// Squared E2 matrix element |<F' m'| T2_q |F m>|^2 up to the common reduced
/// element: (2F+1)(2F'+1) {J' F' I; F J 2}^2 (F' 2 F; -m' q m)^2.
inline double quadrupole_angular_factor(const QuantumLevel& lower, const QuantumLevel& upper,
                                        const AtomicConstants& c) {
    const int q = upper.mF - lower.mF;
    if (std::abs(q) > 2) return 0.0;
    const int tj = two_j(lower.term), tjp = two_j(upper.term), ti = c.two_i();
    const double six = angular::wigner_6j(tjp, 2 * upper.F, ti, 2 * lower.F, tj, 4);
    const double three =
        angular::wigner_3j(2 * upper.F, 4, 2 * lower.F, -2 * upper.mF, 2 * q, 2 * lower.mF);
    return (2.0 * lower.F + 1.0) * (2.0 * upper.F + 1.0) * six * six * three * three;
}

struct SpectralLine {
    TransitionSpec spec;
    double frequency_hz = 0.0;       // offset from the fine-structure line centre
    double angular_strength = 0.0;   // normalized to the stretched line
    double geometry_factor = 0.0;    // |T_q|^2 / max_q |T_q|^2
    double relative_strength = 0.0;  // angular_strength * geometry_factor
};

namespace detail {

inline void check_quadrupole_pair(Term lower, Term upper) {
    if (lower != Term::S1_2 || (upper != Term::D5_2 && upper != Term::D3_2))
        throw StructuralError("unsupported manifold pair " + std::string(term_name(lower)) + " <-> " +
                              std::string(term_name(upper)) +
                              " (supported: S1_2 <-> D5_2, S1_2 <-> D3_2)");
}

inline std::vector<SpectralLine> quadrupole_lines(Term lower, Term upper, double b_gauss,
                                                  const AtomicConstants& c,
                                                  const QuadrupoleGeometry& geom) {
    const int ti = c.two_i();
    const QuantumLevel stretched_lo{lower, (ti + two_j(lower)) / 2, (ti + two_j(lower)) / 2};
    const QuantumLevel stretched_up{upper, (ti + two_j(upper)) / 2, (ti + two_j(upper)) / 2};
    const double norm = quadrupole_angular_factor(stretched_lo, stretched_up, c);

    const auto weights = quadrupole_geometry_weights(geom);
    double wmax = 0.0;
    for (double w : weights) wmax = std::max(wmax, w);

    std::vector<SpectralLine> out;
    const int tj = two_j(lower), tjp = two_j(upper);
    for (int F = std::abs(ti - tj) / 2; F <= (ti + tj) / 2; ++F)
        for (int m = -F; m <= F; ++m)
            for (int Fp = std::abs(ti - tjp) / 2; Fp <= (ti + tjp) / 2; ++Fp)
                for (int mp = -Fp; mp <= Fp; ++mp) {
                    const QuantumLevel lo{lower, F, m}, up{upper, Fp, mp};
                    if (std::abs(mp - m) > 2 || std::abs(Fp - F) > 2) continue;
                    const double a = quadrupole_angular_factor(lo, up, c);
                    if (a <= 1e-14 * norm) continue;
                    SpectralLine line;
                    line.spec = make_transition(lo, up, Multipole::E2);
                    line.frequency_hz = hyperfine_energy(upper, Fp, c) + detail::zeeman_offset(up, b_gauss, c) -
                                        hyperfine_energy(lower, F, c) - detail::zeeman_offset(lo, b_gauss, c);
                    line.angular_strength = a / norm;
                    line.geometry_factor =
                        wmax > 0.0 ? weights[static_cast<std::size_t>(mp - m + 2)] / wmax : 0.0;
                    line.relative_strength = line.angular_strength * line.geometry_factor;
                    out.push_back(line);
                }
    return out;
}

}  // namespace detail

/// All E2-allowed Zeeman components between two manifolds at field B.
///
/// Frequencies are offsets from the fine-structure line centre and inherit the
/// accuracy of the configured D-level hyperfine constants; Zeeman spacings and
/// strengths are exact.
inline std::vector<SpectralLine> transition_table(Term lower, Term upper, double b_gauss,
                                                  const AtomicConstants& c,
                                                  const QuadrupoleGeometry& geom = {}) {
    detail::check_quadrupole_pair(lower, upper);
    detail::check_field(b_gauss);
    return detail::quadrupole_lines(lower, upper, b_gauss, c, geom);
}

/// Line lookup; nullptr when the pair is absent (forbidden or zero strength).
inline const SpectralLine* find_line(const std::vector<SpectralLine>& table,
                                     const QuantumLevel& lower, const QuantumLevel& upper) {
    for (const auto& l : table)
        if (l.spec.lower == lower && l.spec.upper == upper) return &l;
    return nullptr;
}

struct NeighborSpacing {
    double ground_hz = 0.0;  // |g_F| mu_B B for S1/2 F=4
    double dstate_hz = 0.0;  // |g_F| mu_B B for D5/2 F=4
    double ratio = 0.0;      // dstate / ground (g-factor ratio, defined at B = 0 too)
};

/// Adjacent-mF spacing in D5/2(F=4) compared with S1/2(F=4).
inline NeighborSpacing dstate_neighbor_spacing(double b_gauss, const AtomicConstants& c) {
    detail::check_field(b_gauss);
    const double gs = std::abs(g_factor({Term::S1_2, 4, 0}, c));
    const double gd = std::abs(g_factor({Term::D5_2, 4, 0}, c));
    return {gs * phys::bohr_magneton_hz_per_gauss * b_gauss,
            gd * phys::bohr_magneton_hz_per_gauss * b_gauss, gd / gs};
}

/// Relative magnetic-dipole coupling between two S1/2 levels (microwave or
/// Raman drive between hyperfine manifolds), |<F' m'| J_q |F m>| up to the
/// common reduced element.
inline double ground_m1_coupling(const QuantumLevel& from, const QuantumLevel& to,
                                 const AtomicConstants& c) {
    if (from.term != Term::S1_2 || to.term != Term::S1_2)
        throw StructuralError("ground_m1_coupling is defined on S1_2 only");
    require_valid(from, c);
    require_valid(to, c);
    const int q = to.mF - from.mF;
    if (std::abs(q) > 1) return 0.0;
    const double six = angular::wigner_6j(1, 2 * to.F, c.two_i(), 2 * from.F, 1, 2);
    const double three = angular::wigner_3j(2 * to.F, 2, 2 * from.F, -2 * to.mF, 2 * q, 2 * from.mF);
    return std::sqrt((2.0 * from.F + 1.0) * (2.0 * to.F + 1.0)) * std::abs(six * three);
}

}  // namespace caqubit
