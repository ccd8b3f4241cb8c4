#pragma once

// Electron-shelving readout: shelving pulses, D5/2 decay during the detection
// window, Poisson photon counts, threshold classification and binomial
// population estimates.

#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <vector>

#include "caqubit/atomic.hpp"
#include "caqubit/errors.hpp"
#include "caqubit/random.hpp"

namespace caqubit {

struct DetectionConfig {
    double duration = 5e-3;       // s
    double bright_rate = 24000.0; // counts/s
    double snr = 50.0;            // bright_rate / dark_rate
    int threshold = -1;           // counts; < 0 selects the optimum automatically
    double d52_lifetime = 1.168;  // s

    void validate() const {
        if (!(duration > 0.0)) throw DomainError("detection duration must be positive");
        if (!(bright_rate > 0.0)) throw DomainError("bright rate must be positive");
        if (!(snr > 1.0)) throw DomainError("snr must exceed 1 (bright rate above dark rate)");
        if (!(d52_lifetime > 0.0)) throw DomainError("D5/2 lifetime must be positive");
    }

    [[nodiscard]] double dark_rate() const { return std::isinf(snr) ? 0.0 : bright_rate / snr; }
    [[nodiscard]] double mean_bright() const { return (bright_rate + dark_rate()) * duration; }
    [[nodiscard]] double mean_dark() const { return dark_rate() * duration; }
};

/// P(N >= t) and P(N < t) for N ~ Poisson(mean), both accurate in the tails.
inline double poisson_at_least(int t, double mean) {
    if (t <= 0) return 1.0;
    if (mean <= 0.0) return 0.0;
    return boost::math::gamma_p(static_cast<double>(t), mean);
}

inline double poisson_below(int t, double mean) {
    if (t <= 0) return 0.0;
    if (mean <= 0.0) return 1.0;
    return boost::math::gamma_q(static_cast<double>(t), mean);
}

struct ShelvingScheme {
    std::vector<double> pulse_fidelities{0.99, 0.99};
    std::vector<QuantumLevel> targets{{Term::D5_2, 6, 0}, {Term::D5_2, 4, 2}};

    void validate() const {
        if (pulse_fidelities.empty() || pulse_fidelities.size() > 2)
            throw DomainError("shelving uses one or two pulses");
        for (double f : pulse_fidelities)
            if (!(f >= 0.0 && f <= 1.0)) throw DomainError("pulse fidelity must be in [0, 1]");
        if (!targets.empty() && targets.size() != pulse_fidelities.size())
            throw DomainError("one shelving target per pulse");
        std::set<QuantumLevel> uniq(targets.begin(), targets.end());
        if (uniq.size() != targets.size()) throw StructuralError("shelving targets must be distinct");
        for (const auto& t : targets)
            if (t.term != Term::D5_2) throw StructuralError("shelving targets must lie in D5_2");
    }
};

/// Probability that the population to be shelved stays in S1/2.
inline double shelving_error(const ShelvingScheme& s) {
    s.validate();
    double e = 1.0;
    for (double f : s.pulse_fidelities) e *= 1.0 - f;
    return e;
}

struct ThresholdChoice {
    int threshold = 1;
    double error = 0.0;  // mean of the two Poisson misclassification probabilities
    bool degenerate = false;
};

/// Threshold t (classify bright when counts >= t) minimizing
/// [P(N >= t | dark) + P(N < t | bright)] / 2, exhaustive over 0..mean_bright.
inline ThresholdChoice set_threshold(double mean_dark, double mean_bright) {
    if (!(mean_dark >= 0.0) || !(mean_bright >= 0.0)) throw DomainError("count means must be non-negative");
    ThresholdChoice best;
    best.error = 2.0;
    const int tmax = static_cast<int>(std::ceil(mean_bright));
    for (int t = 0; t <= std::max(tmax, 1); ++t) {
        const double e = 0.5 * (poisson_at_least(t, mean_dark) + poisson_below(t, mean_bright));
        if (e < best.error) best = {t, e, false};
    }
    best.degenerate = !(mean_bright > mean_dark);
    return best;
}

inline ThresholdChoice set_threshold(const DetectionConfig& cfg) {
    cfg.validate();
    return set_threshold(cfg.mean_dark(), cfg.mean_bright());
}

inline int effective_threshold(const DetectionConfig& cfg) {
    return cfg.threshold >= 0 ? cfg.threshold : set_threshold(cfg).threshold;
}

enum class Outcome { bright, dark };

struct DetectionResult {
    int counts = 0;
    Outcome classified = Outcome::bright;
    bool decayed = false;
};

/// One detection window. A shelved ion decays to S1/2 at a random time and
/// fluoresces for the rest of the window.
template <class Urbg>
DetectionResult simulate_detection(bool shelved, const DetectionConfig& cfg, int threshold, Urbg& rng) {
    const double bright = cfg.bright_rate, dark = cfg.dark_rate(), T = cfg.duration;
    double mean = 0.0;
    bool decayed = false;
    if (!shelved) {
        mean = (bright + dark) * T;
    } else {
        std::exponential_distribution<double> life(1.0 / cfg.d52_lifetime);
        const double td = life(rng);
        decayed = td < T;
        mean = dark * T + (decayed ? bright * (T - td) : 0.0);
    }
    int counts = 0;
    if (mean > 0.0) {
        std::poisson_distribution<int> pd(mean);
        counts = pd(rng);
    }
    return {counts, counts >= threshold ? Outcome::bright : Outcome::dark, decayed};
}

template <class Urbg>
DetectionResult simulate_detection(bool shelved, const DetectionConfig& cfg, Urbg& rng) {
    cfg.validate();
    return simulate_detection(shelved, cfg, effective_threshold(cfg), rng);
}

/// Probability that the shelved ion decays inside the detection window.
inline double decay_probability(const DetectionConfig& cfg) {
    cfg.validate();
    return -std::expm1(-cfg.duration / cfg.d52_lifetime);
}

/// P(shelved ion classified bright), exact integral over the decay time.
inline double shelved_misclassification(const DetectionConfig& cfg, int threshold) {
    cfg.validate();
    const double T = cfg.duration, tau = cfg.d52_lifetime;
    const double bright = cfg.bright_rate, dark = cfg.dark_rate();
    // no decay
    double p = std::exp(-T / tau) * poisson_at_least(threshold, dark * T);
    // decay at td in [0, T], Gauss-Legendre on panels
    static constexpr double xg[5] = {-0.9061798459386640, -0.5384693101056831, 0.0, 0.5384693101056831,
                                     0.9061798459386640};
    static constexpr double wg[5] = {0.2369268850561891, 0.4786286704993665, 0.5688888888888889,
                                     0.4786286704993665, 0.2369268850561891};
    const int panels = 400;
    const double h = T / panels;
    for (int k = 0; k < panels; ++k) {
        const double c = (k + 0.5) * h;
        for (int j = 0; j < 5; ++j) {
            const double td = c + 0.5 * h * xg[j];
            const double mean = dark * T + bright * (T - td);
            p += 0.5 * h * wg[j] * std::exp(-td / tau) / tau * poisson_at_least(threshold, mean);
        }
    }
    return p;
}

/// P(bright ion classified dark).
inline double bright_misclassification(const DetectionConfig& cfg, int threshold) {
    cfg.validate();
    return poisson_below(threshold, cfg.mean_bright());
}

struct DetectionBudget {
    int threshold = 0;
    double shelving = 0.0;        // unshelved population
    double decay_term = 0.0;      // probability of D5/2 decay in the window
    double decay_misclassification = 0.0;  // decays that flip the classification
    double overlap = 0.0;         // Poisson overlap of the two count distributions
    double total = 0.0;           // shelving + decay misclassification + overlap
};

inline DetectionBudget error_budget(const DetectionConfig& cfg, const ShelvingScheme& s = {}) {
    DetectionBudget b;
    b.threshold = effective_threshold(cfg);
    b.shelving = shelving_error(s);
    b.decay_term = decay_probability(cfg);
    b.decay_misclassification = shelved_misclassification(cfg, b.threshold);
    b.overlap = 0.5 * (poisson_at_least(b.threshold, cfg.mean_dark()) + bright_misclassification(cfg, b.threshold));
    b.total = b.shelving + b.decay_misclassification + b.overlap;
    return b;
}

/// Misclassification of a shelved ion vs detection time, re-optimizing the
/// threshold at each duration.
inline std::vector<std::pair<double, double>> misclassification_curve(DetectionConfig cfg,
                                                                      const std::vector<double>& durations) {
    std::vector<std::pair<double, double>> out;
    for (double d : durations) {
        cfg.duration = d;
        const int t = set_threshold(cfg).threshold;
        const double e = 0.5 * (shelved_misclassification(cfg, t) + bright_misclassification(cfg, t));
        out.emplace_back(d, e);
    }
    return out;
}

struct PopulationEstimate {
    double p = 0.0;
    double sigma = 0.0;
};

/// Binomial estimate with sigma floored at 1/(2N) at the boundaries.
inline PopulationEstimate estimate_population(int successes, int n) {
    if (n < 1) throw DomainError("population estimate needs at least one shot");
    if (successes < 0 || successes > n) throw DomainError("successes must be in [0, n]");
    const double N = n;
    const double p = successes / N;
    const double s = std::sqrt(p * (1.0 - p) / N);
    return {p, std::max(s, 1.0 / (2.0 * N))};
}

inline PopulationEstimate estimate_population(const std::vector<Outcome>& outcomes, Outcome success = Outcome::bright) {
    const auto k = std::count(outcomes.begin(), outcomes.end(), success);
    return estimate_population(static_cast<int>(k), static_cast<int>(outcomes.size()));
}

struct ChiSquareResult {
    double chi2 = 0.0;
    int dof = 0;
    double p_value = 0.0;
};

/// Pearson chi-square of a count histogram against a two-component mixture
/// (fraction `shelved` of dark ions including the decay tail). Bins are merged
/// until each expects at least 5 counts.
inline ChiSquareResult chi_square_mixture(const std::vector<int>& counts, double shelved_fraction,
                                          const DetectionConfig& cfg) {
    cfg.validate();
    if (counts.empty()) throw DomainError("empty histogram");
    const int cmax = *std::max_element(counts.begin(), counts.end());
    const int top = std::max(cmax, static_cast<int>(cfg.mean_bright() + 10.0 * std::sqrt(cfg.mean_bright()))) + 1;
    std::vector<double> observed(static_cast<std::size_t>(top) + 1, 0.0);
    for (int c : counts) observed[static_cast<std::size_t>(c)] += 1.0;

    // expected pmf: P(N = k) = P(N >= k) - P(N >= k+1), decay integrated as in shelved_misclassification
    auto dark_tail = [&](int k) { return shelved_misclassification(cfg, k); };
    auto bright_tail = [&](int k) { return poisson_at_least(k, cfg.mean_bright()); };
    const double n = static_cast<double>(counts.size());
    std::vector<double> expected(observed.size());
    double prev_d = 1.0, prev_b = 1.0;
    for (int k = 0; k <= top; ++k) {
        const double nd = k == top ? 0.0 : dark_tail(k + 1);
        const double nb = k == top ? 0.0 : bright_tail(k + 1);
        expected[static_cast<std::size_t>(k)] = n * (shelved_fraction * (prev_d - nd) + (1.0 - shelved_fraction) * (prev_b - nb));
        prev_d = nd;
        prev_b = nb;
    }

    std::vector<std::pair<double, double>> bins;  // (observed, expected)
    double eo = 0.0, ee = 0.0;
    for (std::size_t k = 0; k < observed.size(); ++k) {
        eo += observed[k];
        ee += expected[k];
        if (ee >= 5.0) {
            bins.emplace_back(eo, ee);
            eo = ee = 0.0;
        }
    }
    if (bins.size() < 2) throw DomainError("histogram too small for a chi-square test");
    bins.back().first += eo;
    bins.back().second += ee;
    ChiSquareResult r;
    for (const auto& [o, e] : bins) r.chi2 += (o - e) * (o - e) / e;
    const int nbins = static_cast<int>(bins.size());
    r.dof = nbins - 1;
    r.p_value = r.dof > 0 ? boost::math::gamma_q(0.5 * r.dof, 0.5 * r.chi2) : 1.0;
    return r;
}

}  // namespace caqubit
