#include <gtest/gtest.h>

#include <boost/math/distributions/poisson.hpp>
#include <limits>
#include <random>

#include "caqubit/detection.hpp"
#include "oracles.hpp"

using namespace caqubit;

TEST(Shelving, ErrorProducts) {
    ShelvingScheme one;
    one.pulse_fidelities = {0.99};
    one.targets = {{Term::D5_2, 6, 0}};
    EXPECT_NEAR(shelving_error(one), 1e-2, 1e-15);
    const ShelvingScheme two;
    EXPECT_NEAR(shelving_error(two), 1e-4, 1e-15);
    ShelvingScheme perfect;
    perfect.pulse_fidelities = {1.0, 1.0};
    EXPECT_EQ(shelving_error(perfect), 0.0);
}

TEST(Shelving, Validation) {
    ShelvingScheme s;
    s.targets = {{Term::D5_2, 6, 0}, {Term::D5_2, 6, 0}};
    EXPECT_THROW(shelving_error(s), StructuralError);
    s.targets = {{Term::D5_2, 6, 0}, {Term::S1_2, 4, 2}};
    EXPECT_THROW(shelving_error(s), StructuralError);
    s = {};
    s.pulse_fidelities = {0.9, 0.9, 0.9};
    s.targets.clear();
    EXPECT_THROW(shelving_error(s), DomainError);
    s.pulse_fidelities = {1.2};
    EXPECT_THROW(shelving_error(s), DomainError);
}

TEST(Threshold, MatchesExhaustiveScan) {
    const double dark = 2.4, bright = 122.4;
    const auto t = set_threshold(dark, bright);
    int best = -1;
    double err = 2;
    for (int k = 0; k <= 123; ++k) {
        // lower bright tail straight from the cdf; 1 - P(N >= k) would cancel to zero
        const double lo = k == 0 ? 0.0 : boost::math::cdf(boost::math::poisson_distribution<>(bright), k - 1);
        const double e = 0.5 * (oracle::poisson_tail(k, dark) + lo);
        if (e < err) {
            err = e;
            best = k;
        }
    }
    EXPECT_EQ(t.threshold, best);
    EXPECT_NEAR(t.error / err, 1.0, 1e-6);
    EXPECT_FALSE(t.degenerate);
    EXPECT_LT(t.error, 1e-5);
    // equal-prior crossing of the two pmfs
    EXPECT_NEAR(t.threshold, (bright - dark) / std::log(bright / dark), 1.0);

    const DetectionConfig cfg;
    EXPECT_EQ(set_threshold(cfg).threshold, best);
    EXPECT_NEAR(cfg.mean_dark(), 2.4, 1e-12);
    EXPECT_NEAR(cfg.mean_bright(), 122.4, 1e-12);
}

TEST(Threshold, Limits) {
    const auto eq = set_threshold(5.0, 5.0);
    EXPECT_TRUE(eq.degenerate);
    EXPECT_NEAR(eq.error, 0.5, 1e-12);
    EXPECT_EQ(set_threshold(0.0, 120.0).threshold, 1);
    EXPECT_THROW(set_threshold(-1.0, 5.0), DomainError);
    DetectionConfig cfg;
    cfg.threshold = 7;
    EXPECT_EQ(effective_threshold(cfg), 7);
}

TEST(Threshold, PoissonTails) {
    for (int k : {0, 1, 5, 12, 31, 80})
        for (double mean : {0.5, 2.4, 120.0}) {
            EXPECT_NEAR(poisson_at_least(k, mean), oracle::poisson_tail(k, mean), 1e-12);
            EXPECT_NEAR(poisson_below(k, mean), 1 - oracle::poisson_tail(k, mean), 1e-12);
        }
    // a bright ion essentially never falls below a dozen counts
    EXPECT_LT(poisson_below(12, 120.0), 1e-6);
    EXPECT_LT(poisson_below(set_threshold(2.4, 122.4).threshold, 120.0), 1e-6);
}

TEST(Detection, IdealShelvedIonIsDark) {
    DetectionConfig cfg;
    cfg.d52_lifetime = std::numeric_limits<double>::infinity();
    cfg.snr = std::numeric_limits<double>::infinity();
    std::mt19937_64 rng(1);
    for (int i = 0; i < 200; ++i) {
        const auto r = simulate_detection(true, cfg, rng);
        EXPECT_EQ(r.counts, 0);
        EXPECT_EQ(r.classified, Outcome::dark);
        EXPECT_FALSE(r.decayed);
    }
}

TEST(Detection, ShelvedMisclassificationIntegral) {
    const DetectionConfig cfg;
    const int t = effective_threshold(cfg);
    const double p = shelved_misclassification(cfg, t);
    EXPECT_NEAR(p, oracle::shelved_flip(cfg.duration, cfg.d52_lifetime, cfg.bright_rate, cfg.dark_rate(), t), 1e-9);
    EXPECT_LT(p, decay_probability(cfg));
    EXPECT_GT(p, 0.5 * decay_probability(cfg));
    EXPECT_NEAR(decay_probability(cfg), -std::expm1(-5e-3 / 1.168), 1e-15);
    for (int k : {5, 12, 60, 100})
        EXPECT_NEAR(shelved_misclassification(cfg, k),
                    oracle::shelved_flip(cfg.duration, cfg.d52_lifetime, cfg.bright_rate, cfg.dark_rate(), k), 1e-9);
}

TEST(Detection, MonteCarloMatchesAnalytic) {
    const DetectionConfig cfg;
    const int t = effective_threshold(cfg);
    std::mt19937_64 rng(2024);
    const int n = 400000;
    int flips = 0, misses = 0;
    for (int i = 0; i < n; ++i) {
        flips += simulate_detection(true, cfg, t, rng).classified == Outcome::bright;
        misses += simulate_detection(false, cfg, t, rng).classified == Outcome::dark;
    }
    const double p = shelved_misclassification(cfg, t);
    EXPECT_NEAR(double(flips) / n, p, 4 * std::sqrt(p / n));
    EXPECT_LE(misses, 2);
}

TEST(Detection, BudgetAtDefaults) {
    const auto b = error_budget(DetectionConfig{});
    EXPECT_LE(b.total, 0.007);
    EXPECT_GE(b.decay_term, 0.004);
    EXPECT_LE(b.decay_term, 0.005);
    EXPECT_GT(b.decay_misclassification, b.shelving);
    EXPECT_GT(b.decay_misclassification, b.overlap);
    EXPECT_NEAR(b.total, b.shelving + b.decay_misclassification + b.overlap, 1e-15);
}

TEST(Detection, DurationCurveHasInteriorOptimum) {
    std::vector<double> d;
    for (double x = 0.2e-3; x <= 40e-3; x *= 1.15) d.push_back(x);
    const auto c = misclassification_curve(DetectionConfig{}, d);
    std::size_t best = 0;
    for (std::size_t i = 1; i < c.size(); ++i)
        if (c[i].second < c[best].second) best = i;
    ASSERT_GT(best, 0u);
    ASSERT_LT(best + 1, c.size());
    // past the optimum the decay term grows with the window; before it the Poisson overlap dominates
    for (std::size_t i = best + 1; i < c.size(); ++i) EXPECT_GT(c[i].second, c[i - 1].second) << c[i].first;
    for (std::size_t i = 0; i < best; ++i) EXPECT_GT(c[i].second, c[best].second);
    EXPECT_GT(c.front().second, 10 * c[best].second);
    EXPECT_LT(c[best].first, 5e-3);
}

TEST(Estimate, Binomial) {
    const auto h = estimate_population(25, 50);
    EXPECT_DOUBLE_EQ(h.p, 0.5);
    EXPECT_NEAR(h.sigma, 0.0707, 1e-4);
    const auto all = estimate_population(50, 50);
    EXPECT_EQ(all.p, 1.0);
    EXPECT_DOUBLE_EQ(all.sigma, 1.0 / 100);
    EXPECT_DOUBLE_EQ(estimate_population(0, 50).sigma, 1.0 / 100);
    EXPECT_NEAR(estimate_population(50, 100).sigma / h.sigma, 1 / std::sqrt(2.0), 1e-12);
    EXPECT_THROW(estimate_population(1, 0), DomainError);
    EXPECT_THROW(estimate_population(5, 4), DomainError);
    const std::vector<Outcome> o{Outcome::bright, Outcome::dark, Outcome::bright, Outcome::bright};
    EXPECT_DOUBLE_EQ(estimate_population(o).p, 0.75);
    EXPECT_DOUBLE_EQ(estimate_population(o, Outcome::dark).p, 0.25);
}

TEST(Histogram, ChiSquareAgainstMixture) {
    const DetectionConfig cfg;
    const int t = effective_threshold(cfg);
    std::mt19937_64 rng(77);
    std::bernoulli_distribution coin(0.5);
    std::vector<int> counts;
    for (int i = 0; i < 10000; ++i) counts.push_back(simulate_detection(coin(rng), cfg, t, rng).counts);
    const auto good = chi_square_mixture(counts, 0.5, cfg);
    EXPECT_GT(good.p_value, 0.01) << good.chi2 << " / " << good.dof;
    EXPECT_GT(good.dof, 10);
    // the test has power against a wrong mixture
    EXPECT_LT(chi_square_mixture(counts, 0.4, cfg).p_value, 0.01);
    EXPECT_THROW(chi_square_mixture({}, 0.5, cfg), DomainError);
}

TEST(Histogram, ChiSquareIsCalibrated) {
    // under the null, p < 0.01 should happen about 1% of the time
    const DetectionConfig cfg;
    const int t = effective_threshold(cfg);
    int rejected = 0;
    const int trials = 40;
    for (int k = 0; k < trials; ++k) {
        std::mt19937_64 rng(1000 + k);
        std::bernoulli_distribution coin(0.3);
        std::vector<int> counts;
        for (int i = 0; i < 2000; ++i) counts.push_back(simulate_detection(coin(rng), cfg, t, rng).counts);
        rejected += chi_square_mixture(counts, 0.3, cfg).p_value < 0.01;
    }
    EXPECT_LE(rejected, 3);  // binomial(40, 0.01): P(>= 4) < 1e-3
}
