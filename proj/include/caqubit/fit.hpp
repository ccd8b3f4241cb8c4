#pragma once

// Weighted nonlinear least squares (Levenberg damping) for the model families
// used to reduce every simulated trace, plus starting-value heuristics.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "caqubit/errors.hpp"
#include "caqubit/motion.hpp"
#include "caqubit/physics.hpp"

namespace caqubit {

struct DataPoint {
    double x = 0.0;
    double y = 0.0;
    double sigma = 1.0;
};

using Dataset = std::vector<DataPoint>;

enum class Family {
    sin_time,        // A/2 cos(pi t / tau_pi) + y0
    sin_time_phase,  // A/2 cos(pi t / tau_pi + phi) + y0
    sin_phase,       // A/2 sin(phi + phi0) + y0
    exp_decay,       // a exp(-t / tau) + c
    thermal_flop,    // contrast * sum_n p_n(nbar) sin^2(Omega_{n,n+s} t / 2)
    coherence_exp,   // exp(-t / T2)
    coherence_gauss, // exp(-(t / T2)^2)
    custom
};

inline std::string family_name(Family f) {
    switch (f) {
        case Family::sin_time: return "sin_time";
        case Family::sin_time_phase: return "sin_time_phase";
        case Family::sin_phase: return "sin_phase";
        case Family::exp_decay: return "exp_decay";
        case Family::thermal_flop: return "thermal_flop";
        case Family::coherence_exp: return "coherence_exp";
        case Family::coherence_gauss: return "coherence_gauss";
        case Family::custom: return "custom";
    }
    return "?";
}

inline double wrap_phase(double phi) {
    double w = std::remainder(phi, phys::two_pi);  // [-pi, pi]
    if (w <= -phys::pi) w += phys::two_pi;
    return w;
}

class Model {
public:
    using Fn = std::function<double(double, const Eigen::VectorXd&)>;

    static Model sin_time() { return Model(Family::sin_time, {"A", "tau_pi", "y0"}); }
    static Model sin_time_phase() { return Model(Family::sin_time_phase, {"A", "tau_pi", "y0", "phi"}); }
    static Model sin_phase() { return Model(Family::sin_phase, {"A", "phi0", "y0"}); }
    static Model exp_decay() { return Model(Family::exp_decay, {"a", "tau", "c"}); }
    static Model coherence(bool gaussian) {
        return Model(gaussian ? Family::coherence_gauss : Family::coherence_exp, {"T2"});
    }
    /// Sideband flop on a thermal state; eta and sideband order are fixed.
    static Model thermal_flop(double eta, int order = 1) {
        Model m(Family::thermal_flop, {"nbar", "omega0", "contrast"});
        m.eta_ = eta;
        m.order_ = order;
        return m;
    }
    static Model custom(std::vector<std::string> names, Fn f) {
        Model m(Family::custom, std::move(names));
        m.fn_ = std::move(f);
        return m;
    }

    [[nodiscard]] Family family() const noexcept { return family_; }
    [[nodiscard]] const std::vector<std::string>& names() const noexcept { return names_; }
    [[nodiscard]] Eigen::Index size() const noexcept { return static_cast<Eigen::Index>(names_.size()); }
    [[nodiscard]] double eta() const noexcept { return eta_; }
    [[nodiscard]] int order() const noexcept { return order_; }

    [[nodiscard]] double value(double x, const Eigen::VectorXd& p) const {
        switch (family_) {
            case Family::sin_time: return p[0] / 2.0 * std::cos(phys::pi * x / p[1]) + p[2];
            case Family::sin_time_phase: return p[0] / 2.0 * std::cos(phys::pi * x / p[1] + p[3]) + p[2];
            case Family::sin_phase: return p[0] / 2.0 * std::sin(x + p[1]) + p[2];
            case Family::exp_decay: return p[0] * std::exp(-x / p[1]) + p[2];
            case Family::coherence_exp: return std::exp(-x / p[0]);
            case Family::coherence_gauss: return std::exp(-(x / p[0]) * (x / p[0]));
            case Family::thermal_flop: return p[2] * flop(x, p[0], p[1]);
            case Family::custom: return fn_(x, p);
        }
        return 0.0;
    }

    /// d value / d p.
    void gradient(double x, const Eigen::VectorXd& p, Eigen::Ref<Eigen::VectorXd> g) const {
        switch (family_) {
            case Family::sin_time: {
                const double th = phys::pi * x / p[1];
                g[0] = 0.5 * std::cos(th);
                g[1] = p[0] / 2.0 * std::sin(th) * th / p[1];
                g[2] = 1.0;
                return;
            }
            case Family::sin_time_phase: {
                const double th = phys::pi * x / p[1] + p[3];
                g[0] = 0.5 * std::cos(th);
                g[1] = p[0] / 2.0 * std::sin(th) * (phys::pi * x / p[1]) / p[1];
                g[2] = 1.0;
                g[3] = -p[0] / 2.0 * std::sin(th);
                return;
            }
            case Family::sin_phase:
                g[0] = 0.5 * std::sin(x + p[1]);
                g[1] = p[0] / 2.0 * std::cos(x + p[1]);
                g[2] = 1.0;
                return;
            case Family::exp_decay: {
                const double e = std::exp(-x / p[1]);
                g[0] = e;
                g[1] = p[0] * e * x / (p[1] * p[1]);
                g[2] = 1.0;
                return;
            }
            case Family::coherence_exp:
                g[0] = std::exp(-x / p[0]) * x / (p[0] * p[0]);
                return;
            case Family::coherence_gauss: {
                const double u = x / p[0];
                g[0] = std::exp(-u * u) * 2.0 * u * u / p[0];
                return;
            }
            case Family::thermal_flop:
            case Family::custom: numeric_gradient(x, p, g); return;
        }
    }

private:
    Model(Family f, std::vector<std::string> names) : family_(f), names_(std::move(names)) {}

    [[nodiscard]] double flop(double t, double nbar, double omega0) const {
        const double nb = std::abs(nbar);
        // fixed cutoff per call keeps the sum smooth in nbar
        const int nmax = MotionalState::thermal_cutoff(nb + 0.5, 1e-12);
        const double r = nb / (nb + 1.0);
        double pn = 1.0 / (nb + 1.0), sum = 0.0;
        for (int n = 0; n <= nmax; ++n, pn *= r) {
            if (n + order_ < 0) continue;
            const double s = std::sin(sideband_rabi(n, order_, eta_, omega0) * t / 2.0);
            sum += pn * s * s;
        }
        return sum;
    }

    void numeric_gradient(double x, const Eigen::VectorXd& p, Eigen::Ref<Eigen::VectorXd> g) const {
        Eigen::VectorXd q = p;
        for (Eigen::Index i = 0; i < p.size(); ++i) {
            const double h = 1e-6 * std::max(std::abs(p[i]), 1e-6);
            q[i] = p[i] + h;
            const double fp = value(x, q);
            q[i] = p[i] - h;
            const double fm = value(x, q);
            q[i] = p[i];
            g[i] = (fp - fm) / (2.0 * h);
        }
    }

    Family family_;
    std::vector<std::string> names_;
    Fn fn_;
    double eta_ = 0.0;
    int order_ = 1;
};

struct FitResult {
    std::vector<std::string> names;
    Eigen::VectorXd params;
    Eigen::VectorXd one_sigma;   // 0 for fixed parameters
    Eigen::MatrixXd covariance;  // full size, zero rows/cols for fixed parameters
    double chi2 = 0.0;
    int dof = 0;
    bool converged = false;
    int iterations = 0;

    [[nodiscard]] double param(const std::string& name) const { return params[index(name)]; }
    [[nodiscard]] double sigma(const std::string& name) const { return one_sigma[index(name)]; }
    [[nodiscard]] Eigen::Index index(const std::string& name) const {
        for (std::size_t i = 0; i < names.size(); ++i)
            if (names[i] == name) return static_cast<Eigen::Index>(i);
        throw DomainError("no fit parameter named '" + name + "'");
    }
};

struct FitOptions {
    int max_iterations = 500;
    double rel_chi2_tol = 1e-10;
    double step_tol = 1e-12;
    std::vector<bool> fixed;  // empty = all free
};

namespace detail {

inline void canonicalize(const Model& m, Eigen::VectorXd& p) {
    switch (m.family()) {
        case Family::sin_phase:
            if (p[0] < 0.0) {
                p[0] = -p[0];
                p[1] += phys::pi;
            }
            p[1] = wrap_phase(p[1]);
            break;
        case Family::sin_time_phase: p[3] = wrap_phase(p[3]); break;
        case Family::coherence_exp:
        case Family::coherence_gauss: p[0] = std::abs(p[0]); break;
        case Family::thermal_flop: p[0] = std::abs(p[0]); break;
        default: break;
    }
}

}  // namespace detail

/// Minimizes sum ((y - f(x)) / sigma)^2 from `init`.
inline FitResult fit(const Model& model, const Dataset& data, const Eigen::VectorXd& init,
                     const FitOptions& opt = {}) {
    const Eigen::Index np = model.size();
    if (init.size() != np) throw DomainError("initial parameter count does not match the model");
    std::vector<Eigen::Index> free;
    for (Eigen::Index i = 0; i < np; ++i)
        if (opt.fixed.empty() || !opt.fixed[static_cast<std::size_t>(i)]) free.push_back(i);
    const auto nf = static_cast<Eigen::Index>(free.size());
    if (nf == 0) throw DegenerateFitError("no free parameters");
    if (static_cast<Eigen::Index>(data.size()) < nf)
        throw DegenerateFitError("underdetermined fit: " + std::to_string(data.size()) + " points for " +
                                 std::to_string(nf) + " parameters");
    for (const auto& d : data)
        if (!(d.sigma > 0.0) || !std::isfinite(d.y) || !std::isfinite(d.x))
            throw DomainError("data points need finite x, y and sigma > 0");

    const auto nd = static_cast<Eigen::Index>(data.size());
    Eigen::VectorXd p = init;
    Eigen::VectorXd r(nd);
    Eigen::MatrixXd J(nd, nf);
    Eigen::VectorXd g(np);

    auto chi2_of = [&](const Eigen::VectorXd& q, Eigen::VectorXd* res) {
        double c = 0.0;
        for (Eigen::Index i = 0; i < nd; ++i) {
            const auto& d = data[static_cast<std::size_t>(i)];
            const double ri = (d.y - model.value(d.x, q)) / d.sigma;
            if (res) (*res)[i] = ri;
            c += ri * ri;
        }
        return c;
    };
    auto jacobian = [&](const Eigen::VectorXd& q) {
        for (Eigen::Index i = 0; i < nd; ++i) {
            const auto& d = data[static_cast<std::size_t>(i)];
            model.gradient(d.x, q, g);
            for (Eigen::Index k = 0; k < nf; ++k) J(i, k) = g[free[static_cast<std::size_t>(k)]] / d.sigma;
        }
    };
    // rank test on the diagonally scaled matrix so parameter units do not matter
    auto check_rank = [&](const Eigen::MatrixXd& N) {
        const Eigen::VectorXd d = N.diagonal();
        if (!(d.minCoeff() > 0.0))
            throw DegenerateFitError("singular normal matrix (parameters not identifiable from data)");
        const Eigen::VectorXd s = d.cwiseSqrt().cwiseInverse();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s.asDiagonal() * N * s.asDiagonal(), Eigen::EigenvaluesOnly);
        const double hi = es.eigenvalues().maxCoeff();
        const double lo = es.eigenvalues().minCoeff();
        if (!(hi > 0.0) || !(lo > hi * 1e-14))
            throw DegenerateFitError("singular normal matrix (parameters not identifiable from data)");
    };

    double chi2 = chi2_of(p, &r);
    if (!std::isfinite(chi2)) throw DomainError("model is not finite at the initial parameters");
    jacobian(p);
    Eigen::MatrixXd N = J.transpose() * J;
    check_rank(N);
    double lambda = 1e-3 * N.diagonal().maxCoeff();

    FitResult out;
    out.names = model.names();
    int it = 0;
    bool converged = false;
    bool need_jacobian = false;
    while (it < opt.max_iterations) {
        ++it;
        if (need_jacobian) {
            jacobian(p);
            N = J.transpose() * J;
            need_jacobian = false;
        }
        const Eigen::VectorXd grad = J.transpose() * r;
        Eigen::MatrixXd A = N;
        A.diagonal().array() += lambda;
        const Eigen::VectorXd step = A.ldlt().solve(grad);
        Eigen::VectorXd trial = p;
        for (Eigen::Index k = 0; k < nf; ++k) trial[free[static_cast<std::size_t>(k)]] += step[k];
        Eigen::VectorXd r_trial(nd);
        const double chi2_trial = chi2_of(trial, &r_trial);
        if (std::isfinite(chi2_trial) && chi2_trial <= chi2) {
            const double rel = (chi2 - chi2_trial) / std::max(chi2, std::numeric_limits<double>::min());
            p = trial;
            r = r_trial;
            chi2 = chi2_trial;
            lambda /= 3.0;
            need_jacobian = true;
            if (rel < opt.rel_chi2_tol || step.norm() < opt.step_tol || chi2 == 0.0) {
                converged = true;
                break;
            }
        } else {
            lambda *= 10.0;
            if (step.norm() < opt.step_tol) {
                converged = true;
                break;
            }
        }
    }

    // the chi2 stop leaves the minimum resolved only to ~sqrt(tol); a few
    // undamped steps pin it down so equivalent problems land on the same point
    if (converged) {
        for (int k = 0; k < 5; ++k) {
            jacobian(p);
            N = J.transpose() * J;
            const Eigen::VectorXd step = N.ldlt().solve(J.transpose() * r);
            Eigen::VectorXd trial = p;
            for (Eigen::Index j = 0; j < nf; ++j) trial[free[static_cast<std::size_t>(j)]] += step[j];
            Eigen::VectorXd r_trial(nd);
            const double c = chi2_of(trial, &r_trial);
            if (!(std::isfinite(c) && c <= chi2 * (1.0 + 1e-12))) break;
            p = trial;
            r = r_trial;
            chi2 = c;
            if (step.norm() <= 1e-15 * std::max(1.0, p.norm())) break;
        }
    }

    jacobian(p);
    N = J.transpose() * J;
    check_rank(N);
    const Eigen::MatrixXd cov_free = N.ldlt().solve(Eigen::MatrixXd::Identity(nf, nf));

    detail::canonicalize(model, p);
    out.params = p;
    out.covariance = Eigen::MatrixXd::Zero(np, np);
    for (Eigen::Index a = 0; a < nf; ++a)
        for (Eigen::Index b = 0; b < nf; ++b)
            out.covariance(free[static_cast<std::size_t>(a)], free[static_cast<std::size_t>(b)]) = cov_free(a, b);
    out.one_sigma = out.covariance.diagonal().cwiseMax(0.0).cwiseSqrt();
    out.chi2 = chi2;
    out.dof = static_cast<int>(nd - nf);
    out.converged = converged;
    out.iterations = it;
    return out;
}

// --- starting values ---------------------------------------------------------

struct InitGuess {
    Eigen::VectorXd params;
    bool degenerate = false;  // data carry no signal for this family
};

namespace detail {

struct Span {
    double lo = 0.0, hi = 0.0, mean = 0.0;
};

inline Span y_span(const Dataset& d) {
    Span s{d.front().y, d.front().y, 0.0};
    for (const auto& p : d) {
        s.lo = std::min(s.lo, p.y);
        s.hi = std::max(s.hi, p.y);
        s.mean += p.y;
    }
    s.mean /= static_cast<double>(d.size());
    return s;
}

inline std::complex<double> dft(const Dataset& d, double mean, double f) {
    std::complex<double> s = 0.0;
    for (const auto& p : d) s += (p.y - mean) * std::exp(std::complex<double>(0.0, -phys::two_pi * f * p.x));
    return s;
}

// Peak of the periodogram between one cycle per span and the mean-spacing
// Nyquist limit; grid refined twice around the peak.
inline double peak_frequency(const Dataset& d, double mean) {
    double xmin = d.front().x, xmax = d.front().x;
    for (const auto& p : d) {
        xmin = std::min(xmin, p.x);
        xmax = std::max(xmax, p.x);
    }
    const double span = xmax - xmin;
    if (!(span > 0.0)) return 0.0;
    const double fmax = 0.5 * static_cast<double>(d.size() - 1) / span;
    double lo = 0.5 / span, hi = fmax, best = lo;
    for (int pass = 0; pass < 3; ++pass) {
        const int n = 400;
        double bp = -1.0;
        for (int i = 0; i <= n; ++i) {
            const double f = lo + (hi - lo) * i / n;
            const double pw = std::norm(dft(d, mean, f));
            if (pw > bp) {
                bp = pw;
                best = f;
            }
        }
        const double w = (hi - lo) / n;
        lo = std::max(0.25 / span, best - 2.0 * w);
        hi = best + 2.0 * w;
    }
    return best;
}

// Weighted log-linear fit of y - c = a exp(-x/tau) over points with y > c.
inline bool log_linear(const Dataset& d, double c, double& a, double& tau) {
    double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (const auto& p : d) {
        const double v = p.y - c;
        if (v <= 0.0) continue;
        const double w = v * v / (p.sigma * p.sigma);
        const double ly = std::log(v);
        sw += w;
        sx += w * p.x;
        sy += w * ly;
        sxx += w * p.x * p.x;
        sxy += w * p.x * ly;
        ++n;
    }
    if (n < 2) return false;
    const double det = sw * sxx - sx * sx;
    if (!(std::abs(det) > 0.0)) return false;
    const double slope = (sw * sxy - sx * sy) / det;
    const double icpt = (sy - slope * sx) / sw;
    if (!(slope < 0.0)) return false;
    a = std::exp(icpt);
    tau = -1.0 / slope;
    return true;
}

}  // namespace detail

/// Starting values from the data alone.
inline InitGuess init_guess(Family family, const Dataset& data) {
    if (data.empty()) throw DegenerateFitError("no data");
    const auto s = detail::y_span(data);
    const double range = s.hi - s.lo;
    const bool flat = !(range > 1e-12 * std::max(1.0, std::abs(s.mean)));
    InitGuess g;
    switch (family) {
        case Family::sin_time:
        case Family::sin_time_phase: {
            const double f = flat ? 0.0 : detail::peak_frequency(data, s.mean);
            const auto c = detail::dft(data, s.mean, f);
            const double tau = f > 0.0 ? 1.0 / (2.0 * f) : 1.0;
            if (family == Family::sin_time) {
                const double sign = std::cos(std::arg(c)) >= 0.0 ? 1.0 : -1.0;
                g.params = Eigen::Vector3d(flat ? 0.0 : sign * range, tau, s.mean);
            } else {
                g.params.resize(4);
                g.params << (flat ? 0.0 : range), tau, s.mean, flat ? 0.0 : wrap_phase(std::arg(c));
            }
            break;
        }
        case Family::sin_phase: {
            const auto c = detail::dft(data, s.mean, 1.0 / phys::two_pi);
            const double amp = 4.0 * std::abs(c) / static_cast<double>(data.size());
            const double phi0 = std::arg(std::complex<double>(0.0, 1.0) * c);
            g.params = Eigen::Vector3d(flat ? 0.0 : std::max(amp, 0.5 * range), flat ? 0.0 : phi0, s.mean);
            break;
        }
        case Family::exp_decay: {
            g.params = Eigen::Vector3d(range, 1.0, s.lo);
            if (flat) break;
            double xmin = data.front().x, xmax = data.front().x;
            for (const auto& p : data) {
                xmin = std::min(xmin, p.x);
                xmax = std::max(xmax, p.x);
            }
            double best = std::numeric_limits<double>::infinity();
            for (int k = 0; k <= 60; ++k) {
                // offset candidates from well below the data up to just under its minimum
                const double c = s.lo - range * (k == 60 ? 1e-3 : 2.0 * (1.0 - k / 60.0) + 1e-3);
                double a = 0, tau = 0;
                if (!detail::log_linear(data, c, a, tau)) continue;
                double chi2 = 0.0;
                for (const auto& p : data) {
                    const double r = (p.y - (a * std::exp(-p.x / tau) + c)) / p.sigma;
                    chi2 += r * r;
                }
                if (chi2 < best) {
                    best = chi2;
                    g.params = Eigen::Vector3d(a, tau, c);
                }
            }
            if (!std::isfinite(best)) g.params[1] = std::max(xmax - xmin, 1e-12) / 2.0;
            break;
        }
        case Family::coherence_exp:
        case Family::coherence_gauss: {
            const double pw = family == Family::coherence_exp ? 1.0 : 2.0;
            double sum = 0.0, xmax = 0.0;
            int n = 0;
            for (const auto& p : data) {
                xmax = std::max(xmax, p.x);
                if (p.x > 0.0 && p.y > 0.0 && p.y < 1.0) {
                    sum += p.x / std::pow(-std::log(p.y), 1.0 / pw);
                    ++n;
                }
            }
            g.params = Eigen::VectorXd::Constant(1, n > 0 ? sum / n : std::max(10.0 * xmax, 1.0));
            g.degenerate = n == 0;
            return g;
        }
        case Family::thermal_flop:
        case Family::custom:
            throw DomainError("no automatic starting values for family " + family_name(family));
    }
    g.degenerate = flat;
    return g;
}

// --- coherence time ----------------------------------------------------------

struct CoherenceFit {
    double t2 = 0.0;
    double sigma = 0.0;
    double chi2 = 0.0;
};

enum class EnvelopeForm { exponential, gaussian };

/// Fits A(t) = exp(-(t/T2)^p), p = 1 or 2; T2 is the 1/e time.
inline CoherenceFit coherence_time(const Dataset& amplitudes, EnvelopeForm form) {
    if (amplitudes.size() < 2)
        throw DegenerateFitError("coherence time needs at least two amplitudes (got " +
                                 std::to_string(amplitudes.size()) + ")");
    const bool gauss = form == EnvelopeForm::gaussian;
    const auto model = Model::coherence(gauss);
    const auto guess = init_guess(model.family(), amplitudes);
    const auto r = fit(model, amplitudes, guess.params);
    return {r.params[0], r.one_sigma[0], r.chi2};
}

}  // namespace caqubit
