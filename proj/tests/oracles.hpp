#pragma once

// Independent reference computations used by the tests. None of these call the
// library routine they are compared against.

#include <Eigen/Dense>
#include <boost/math/distributions/poisson.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <complex>
#include <map>
#include <stdexcept>
#include <tuple>
#include <vector>

namespace oracle {

inline constexpr double kPi = 3.14159265358979323846;

// Angular momentum operators for spin j (doubled, 2j+1 states, m = j..-j).
struct Spin {
    Eigen::MatrixXd jz, jp;
};

inline Spin spin_ops(int tj) {
    const int d = tj + 1;
    Spin s{Eigen::MatrixXd::Zero(d, d), Eigen::MatrixXd::Zero(d, d)};
    const double j = tj / 2.0;
    for (int i = 0; i < d; ++i) {
        const double m = j - i;
        s.jz(i, i) = m;
        if (i > 0) s.jp(i - 1, i) = std::sqrt(j * (j + 1) - m * (m + 1));
    }
    return s;
}

// Clebsch-Gordan table for j1 x j2 built by diagonalizing J^2 and lowering
// from the highest-weight state (Condon-Shortley phase). Arguments doubled.
class CouplingTable {
public:
    CouplingTable(int tj1, int tj2) : tj1_(tj1), tj2_(tj2) {
        const int d1 = tj1 + 1, d2 = tj2 + 1, d = d1 * d2;
        const auto a = spin_ops(tj1), b = spin_ops(tj2);
        const Eigen::MatrixXd i1 = Eigen::MatrixXd::Identity(d1, d1), i2 = Eigen::MatrixXd::Identity(d2, d2);
        auto kron = [](const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
            Eigen::MatrixXd k(x.rows() * y.rows(), x.cols() * y.cols());
            for (int r = 0; r < x.rows(); ++r)
                for (int c = 0; c < x.cols(); ++c) k.block(r * y.rows(), c * y.cols(), y.rows(), y.cols()) = x(r, c) * y;
            return k;
        };
        const Eigen::MatrixXd jz = kron(a.jz, i2) + kron(i1, b.jz);
        const Eigen::MatrixXd jp = kron(a.jp, i2) + kron(i1, b.jp);
        const Eigen::MatrixXd jm = jp.transpose();
        const Eigen::MatrixXd j2 = jm * jp + jz * jz + jz;

        for (int tJ = std::abs(tj1 - tj2); tJ <= tj1 + tj2; tJ += 2) {
            const double J = tJ / 2.0;
            // highest weight: eigenvector of J^2 with eigenvalue J(J+1) in the M = J subspace
            std::vector<int> idx;
            for (int k = 0; k < d; ++k)
                if (std::abs(jz(k, k) - J) < 1e-9) idx.push_back(k);
            Eigen::MatrixXd sub(idx.size(), idx.size());
            for (std::size_t r = 0; r < idx.size(); ++r)
                for (std::size_t c = 0; c < idx.size(); ++c) sub(r, c) = j2(idx[r], idx[c]);
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sub);
            int best = 0;
            for (int k = 1; k < es.eigenvalues().size(); ++k)
                if (std::abs(es.eigenvalues()[k] - J * (J + 1)) < std::abs(es.eigenvalues()[best] - J * (J + 1))) best = k;
            Eigen::VectorXd v = Eigen::VectorXd::Zero(d);
            for (std::size_t r = 0; r < idx.size(); ++r) v[idx[r]] = es.eigenvectors()(static_cast<int>(r), best);
            // Condon-Shortley: <j1 j1; j2 J-j1 | J J> > 0
            const int top = 0 * d2 + static_cast<int>(std::lround(tj2 / 2.0 - (J - tj1 / 2.0)));
            if (v[top] < 0) v = -v;
            for (int tM = tJ; tM >= -tJ; tM -= 2) {
                states_[{tJ, tM}] = v;
                if (tM > -tJ) {
                    v = jm * v;
                    v.normalize();
                }
            }
        }
    }

    // <j1 m1; j2 m2 | J M>
    [[nodiscard]] double operator()(int tm1, int tm2, int tJ, int tM) const {
        if (tm1 + tm2 != tM) return 0.0;
        auto it = states_.find({tJ, tM});
        if (it == states_.end()) return 0.0;
        const int i = (tj1_ - tm1) / 2, k = (tj2_ - tm2) / 2;
        return it->second[i * (tj2_ + 1) + k];
    }

private:
    int tj1_, tj2_;
    std::map<std::pair<int, int>, Eigen::VectorXd> states_;
};

// |<F' m'| T^(2)_q |F m>|^2 for an electron-only rank-2 operator between terms
// with angular momenta j and j', nucleus i, up to a common constant.
inline double e2_strength(int tj, int tjp, int ti, int F, int m, int Fp, int mp) {
    static std::map<std::tuple<int, int, int>, CouplingTable> cache;
    auto table = [&](int a, int b) -> const CouplingTable& {
        auto key = std::make_tuple(a, b, 0);
        auto it = cache.find(key);
        if (it == cache.end()) it = cache.emplace(key, CouplingTable(a, b)).first;
        return it->second;
    };
    const auto& lo = table(tj, ti);   // |j mj; i mi> -> |F m>
    const auto& up = table(tjp, ti);
    const auto& op = table(tj, 4);    // Wigner-Eckart: <j' mj'|T_q|j mj> ~ <j mj; 2 q | j' mj'>
    const int q = mp - m;
    double amp = 0.0;
    for (int tmi = -ti; tmi <= ti; tmi += 2)
        for (int tmj = -tj; tmj <= tj; tmj += 2) {
            const double c1 = lo(tmj, tmi, 2 * F, 2 * m);
            if (c1 == 0.0) continue;
            const int tmjp = tmj + 2 * q;
            if (std::abs(tmjp) > tjp) continue;
            const double c2 = up(tmjp, tmi, 2 * Fp, 2 * mp);
            amp += c1 * c2 * op(tmj, 2 * q, tjp, tmjp);
        }
    return amp * amp;
}

// Hyperfine + Zeeman Hamiltonian of a J = 1/2, I = 7/2 ground state in the
// product basis, H = A I.J + muB B (gJ Jz + gI Iz); returns E(F, m) in Hz with F
// assigned by energy ordering inside each m block (F = 4 lower for A < 0).
inline std::map<std::pair<int, int>, double> ground_levels(double a_hz, double gj, double gi, double b, double mub) {
    const auto s = spin_ops(1), n = spin_ops(7);
    const int d = 16;
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(d, d);
    auto id = [](int k) { return Eigen::MatrixXd::Identity(k, k); };
    auto kron = [](const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
        Eigen::MatrixXd k(x.rows() * y.rows(), x.cols() * y.cols());
        for (int r = 0; r < x.rows(); ++r)
            for (int c = 0; c < x.cols(); ++c) k.block(r * y.rows(), c * y.cols(), y.rows(), y.cols()) = x(r, c) * y;
        return k;
    };
    const Eigen::MatrixXd sz = kron(s.jz, id(8)), iz = kron(id(2), n.jz);
    const Eigen::MatrixXd sp = kron(s.jp, id(8)), ip = kron(id(2), n.jp);
    const Eigen::MatrixXd idotj = sz * iz + 0.5 * (sp * ip.transpose() + sp.transpose() * ip);
    h = a_hz * idotj + mub * b * (gj * sz + gi * iz);
    const Eigen::MatrixXd mz = sz + iz;

    std::map<std::pair<int, int>, double> out;
    for (int m = -4; m <= 4; ++m) {
        std::vector<int> idx;
        for (int k = 0; k < d; ++k)
            if (std::abs(mz(k, k) - m) < 1e-9) idx.push_back(k);
        Eigen::MatrixXd sub(idx.size(), idx.size());
        for (std::size_t r = 0; r < idx.size(); ++r)
            for (std::size_t c = 0; c < idx.size(); ++c) sub(r, c) = h(idx[r], idx[c]);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sub);
        const bool inverted = a_hz < 0;
        if (idx.size() == 1) {
            out[{4, m}] = es.eigenvalues()[0];
        } else {
            out[{inverted ? 4 : 3, m}] = es.eigenvalues()[0];
            out[{inverted ? 3 : 4, m}] = es.eigenvalues()[1];
        }
    }
    return out;
}

// <n+s| exp(i eta (a + a^dagger)) |n> on a truncated Fock space, by diagonalizing
// the position operator.
inline std::complex<double> displacement_element(int n, int s, double eta, int dim = 80) {
    Eigen::MatrixXd x = Eigen::MatrixXd::Zero(dim, dim);
    for (int k = 1; k < dim; ++k) x(k - 1, k) = x(k, k - 1) = std::sqrt(static_cast<double>(k));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(x);
    std::complex<double> acc = 0.0;
    for (int k = 0; k < dim; ++k)
        acc += es.eigenvectors()(n + s, k) * std::polar(1.0, eta * es.eigenvalues()[k]) * es.eigenvectors()(n, k);
    return acc;
}

// |<F' m'| J_q |F m>| for the ground manifold (J = 1/2, nuclear spin ti/2), from
// eigenvectors of I.J + eps F_z in the product basis.
inline double ground_m1_element(int ti, int F, int m, int Fp, int mp) {
    const Spin I = spin_ops(ti), J = spin_ops(1);
    const int di = ti + 1, d = 2 * di;
    auto kron = [&](const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
        Eigen::MatrixXd k(a.rows() * b.rows(), a.cols() * b.cols());
        for (int i = 0; i < a.rows(); ++i)
            for (int j = 0; j < a.cols(); ++j) k.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
        return k;
    };
    const Eigen::MatrixXd e1 = Eigen::MatrixXd::Identity(di, di), e2 = Eigen::MatrixXd::Identity(2, 2);
    const Eigen::MatrixXd iz = kron(I.jz, e2), ip = kron(I.jp, e2), jz = kron(e1, J.jz), jp = kron(e1, J.jp);
    const double eps = 1e-3;
    const Eigen::MatrixXd h = iz * jz + 0.5 * (ip * jp.transpose() + ip.transpose() * jp) + eps * (iz + jz);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
    const double ii = ti / 2.0;
    auto state = [&](int f, int mf) -> Eigen::VectorXd {
        const double target = (f * (f + 1.0) - ii * (ii + 1) - 0.75) / 2 + eps * mf;
        for (int k = 0; k < d; ++k)
            if (std::abs(es.eigenvalues()[k] - target) < eps / 4) return es.eigenvectors().col(k);
        throw std::logic_error("no such level");
    };
    const int q = mp - m;
    Eigen::MatrixXd op;
    if (q == 0) op = jz;
    else if (q == 1) op = -jp / std::sqrt(2.0);
    else if (q == -1) op = jp.transpose() / std::sqrt(2.0);
    else return 0.0;
    return std::abs(state(Fp, mp).dot(op * state(F, m)));
}

// Two-level excitation for Rabi frequency omega and detuning delta (rad/s).
inline double rabi_two_level(double omega, double delta, double t) {
    const double w = std::sqrt(omega * omega + delta * delta);
    const double s = std::sin(w * t / 2.0);
    return omega * omega / (w * w) * s * s;
}

inline double landau_zener(double omega, double rate) { return 1.0 - std::exp(-kPi * omega * omega / (2.0 * rate)); }

inline double poisson_tail(int k, double mean) {  // P(N >= k)
    if (k <= 0) return 1.0;
    if (mean == 0.0) return 0.0;
    return boost::math::cdf(boost::math::complement(boost::math::poisson_distribution<>(mean), k - 1));
}

// Probability that a shelved ion is classified bright: it decays at td with
// rate 1/tau and fluoresces for the rest of the window.
inline double shelved_flip(double T, double tau, double bright, double dark, int threshold) {
    auto integrand = [&](double td) {
        return std::exp(-td / tau) / tau * poisson_tail(threshold, dark * T + bright * (T - td));
    };
    const double decayed = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(integrand, 0.0, T, 15, 1e-12);
    return std::exp(-T / tau) * poisson_tail(threshold, dark * T) + decayed;
}

// Classical driven oscillator behind a single-pole filter, integrated with RK4:
// x'' = -w^2 (x - c), c' = (z(t) - c) / rc. Returns the final excitation in quanta.
template <class Trajectory>
inline double driven_oscillator(Trajectory z, double t_end, double w, double rc, double mass, double dt) {
    constexpr double hbar = 1.054571817e-34;
    struct S {
        double x, v, c;
    };
    auto f = [&](double t, const S& s) {
        const double cdot = rc > 0 ? (z(t) - s.c) / rc : 0.0;
        return S{s.v, -w * w * (s.x - (rc > 0 ? s.c : z(t))), cdot};
    };
    S s{0, 0, 0};
    const long n = static_cast<long>(std::ceil(t_end / dt));
    const double h = t_end / n;
    for (long k = 0; k < n; ++k) {
        const double t = k * h;
        const S k1 = f(t, s);
        const S k2 = f(t + h / 2, {s.x + h / 2 * k1.x, s.v + h / 2 * k1.v, s.c + h / 2 * k1.c});
        const S k3 = f(t + h / 2, {s.x + h / 2 * k2.x, s.v + h / 2 * k2.v, s.c + h / 2 * k2.c});
        const S k4 = f(t + h, {s.x + h * k3.x, s.v + h * k3.v, s.c + h * k3.c});
        s.x += h / 6 * (k1.x + 2 * k2.x + 2 * k3.x + k4.x);
        s.v += h / 6 * (k1.v + 2 * k2.v + 2 * k3.v + k4.v);
        s.c += h / 6 * (k1.c + 2 * k2.c + 2 * k3.c + k4.c);
    }
    const double centre = rc > 0 ? s.c : z(t_end);
    const double e = 0.5 * mass * (s.v * s.v + w * w * (s.x - centre) * (s.x - centre));
    return e / (hbar * w);
}

}  // namespace oracle
