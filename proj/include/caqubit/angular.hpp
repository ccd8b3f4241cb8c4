#pragma once

// Wigner 3j and 6j symbols. All angular momenta are passed as twice their
// value so half-integers stay exact (tj = 2j, tm = 2m).

#include <algorithm>
#include <cmath>
#include <cstdlib>

namespace caqubit::angular {

namespace detail {

inline double log_factorial(int n) { return std::lgamma(static_cast<double>(n) + 1.0); }

inline bool is_triad(int ta, int tb, int tc) {
    return tc >= std::abs(ta - tb) && tc <= ta + tb && ((ta + tb + tc) % 2 == 0);
}

// log of the triangle coefficient Delta(abc).
inline double log_delta(int ta, int tb, int tc) {
    return 0.5 * (log_factorial((ta + tb - tc) / 2) + log_factorial((ta - tb + tc) / 2) +
                  log_factorial((-ta + tb + tc) / 2) - log_factorial((ta + tb + tc) / 2 + 1));
}

}  // namespace detail

/// (j1 j2 j3; m1 m2 m3), Racah closed form.
inline double wigner_3j(int tj1, int tj2, int tj3, int tm1, int tm2, int tm3) {
    using detail::log_factorial;
    if (tm1 + tm2 + tm3 != 0) return 0.0;
    if (!detail::is_triad(tj1, tj2, tj3)) return 0.0;
    if (std::abs(tm1) > tj1 || std::abs(tm2) > tj2 || std::abs(tm3) > tj3) return 0.0;
    if ((tj1 + tm1) % 2 || (tj2 + tm2) % 2 || (tj3 + tm3) % 2) return 0.0;

    const int kmin = std::max({0, (tj2 - tj3 - tm1) / 2, (tj1 - tj3 + tm2) / 2});
    const int kmax = std::min({(tj1 + tj2 - tj3) / 2, (tj1 - tm1) / 2, (tj2 + tm2) / 2});
    if (kmin > kmax) return 0.0;

    const double prefactor =
        detail::log_delta(tj1, tj2, tj3) +
        0.5 * (log_factorial((tj1 + tm1) / 2) + log_factorial((tj1 - tm1) / 2) +
               log_factorial((tj2 + tm2) / 2) + log_factorial((tj2 - tm2) / 2) +
               log_factorial((tj3 + tm3) / 2) + log_factorial((tj3 - tm3) / 2));

    double sum = 0.0;
    for (int k = kmin; k <= kmax; ++k) {
        const double term = -(log_factorial(k) + log_factorial((tj1 + tj2 - tj3) / 2 - k) +
                              log_factorial((tj1 - tm1) / 2 - k) + log_factorial((tj2 + tm2) / 2 - k) +
                              log_factorial((tj3 - tj2 + tm1) / 2 + k) +
                              log_factorial((tj3 - tj1 - tm2) / 2 + k));
        sum += ((k % 2) ? -1.0 : 1.0) * std::exp(term + prefactor);
    }
    const int phase = (tj1 - tj2 - tm3) / 2;
    return (std::abs(phase) % 2 ? -1.0 : 1.0) * sum;
}

/// {j1 j2 j3; j4 j5 j6}, Racah formula.
inline double wigner_6j(int tj1, int tj2, int tj3, int tj4, int tj5, int tj6) {
    using detail::is_triad;
    using detail::log_factorial;
    if (!is_triad(tj1, tj2, tj3) || !is_triad(tj1, tj5, tj6) || !is_triad(tj4, tj2, tj6) ||
        !is_triad(tj4, tj5, tj3))
        return 0.0;

    const int a1 = (tj1 + tj2 + tj3) / 2;
    const int a2 = (tj1 + tj5 + tj6) / 2;
    const int a3 = (tj4 + tj2 + tj6) / 2;
    const int a4 = (tj4 + tj5 + tj3) / 2;
    const int b1 = (tj1 + tj2 + tj4 + tj5) / 2;
    const int b2 = (tj2 + tj3 + tj5 + tj6) / 2;
    const int b3 = (tj3 + tj1 + tj6 + tj4) / 2;

    const double prefactor = detail::log_delta(tj1, tj2, tj3) + detail::log_delta(tj1, tj5, tj6) +
                             detail::log_delta(tj4, tj2, tj6) + detail::log_delta(tj4, tj5, tj3);

    const int tmin = std::max({a1, a2, a3, a4});
    const int tmax = std::min({b1, b2, b3});
    double sum = 0.0;
    for (int t = tmin; t <= tmax; ++t) {
        const double term = log_factorial(t + 1) -
                            (log_factorial(t - a1) + log_factorial(t - a2) + log_factorial(t - a3) +
                             log_factorial(t - a4) + log_factorial(b1 - t) + log_factorial(b2 - t) +
                             log_factorial(b3 - t));
        sum += ((t % 2) ? -1.0 : 1.0) * std::exp(term + prefactor);
    }
    return sum;
}

/// Clebsch-Gordan <j1 m1; j2 m2 | J M>.
inline double clebsch_gordan(int tj1, int tm1, int tj2, int tm2, int tJ, int tM) {
    const int phase = (tj1 - tj2 + tM) / 2;
    return (std::abs(phase) % 2 ? -1.0 : 1.0) * std::sqrt(tJ + 1.0) *
           wigner_3j(tj1, tj2, tJ, tm1, tm2, -tM);
}

}  // namespace caqubit::angular
