#pragma once

#include <array>
#include <cmath>
#include <numbers>

namespace caqubit {

// CODATA 2018 exact / recommended values, SI units.
namespace phys {
inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;
inline constexpr double planck = 6.62607015e-34;               // J s
inline constexpr double hbar = planck / two_pi;                // J s
inline constexpr double bohr_magneton_hz_per_gauss = 1.39962449361e6;
inline constexpr double atomic_mass_unit = 1.66053906660e-27;  // kg
}  // namespace phys

using Vec3 = std::array<double, 3>;

inline double dot(const Vec3& a, const Vec3& b) {
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }

inline Vec3 operator-(const Vec3& a, const Vec3& b) {
    return {a[0] - b[0], a[1] - b[1], a[2] - b[2]};
}

inline Vec3 operator*(double s, const Vec3& a) { return {s * a[0], s * a[1], s * a[2]}; }

}  // namespace caqubit
