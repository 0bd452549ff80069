#pragma once

// Independent reference computations for the tests. None of these call into
// the solvers they check.

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

namespace oracle {

// p with p = diag(gamma)(V p + z), by a dense solve.
inline Eigen::VectorXd affine_fixed_point(const Eigen::MatrixXd& v, const Eigen::VectorXd& z,
                                          const Eigen::VectorXd& gamma) {
    const auto k = z.size();
    const Eigen::MatrixXd a = Eigen::MatrixXd::Identity(k, k) - gamma.asDiagonal() * v;
    return a.fullPivLu().solve(gamma.cwiseProduct(z));
}

inline double spectral_radius(const Eigen::MatrixXd& m) {
    Eigen::EigenSolver<Eigen::MatrixXd> es(m, false);
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

// SIR of user k with receive direction u (not necessarily unit norm).
inline double sir_with_receiver(const std::vector<Eigen::VectorXcd>& g_row, std::size_t k, const Eigen::VectorXd& p,
                                double sigma2, const Eigen::VectorXcd& u) {
    const double sig = std::norm(u.dot(g_row[k])) * p[static_cast<Eigen::Index>(k)];
    double den = sigma2 * u.squaredNorm();
    for (std::size_t l = 0; l < g_row.size(); ++l)
        if (l != k) den += std::norm(u.dot(g_row[l])) * p[static_cast<Eigen::Index>(l)];
    return sig / den;
}

// Best SIR over unit vectors u = (cos a, e^{i b} sin a) in C^2 (global phase
// is irrelevant): coarse grid, then repeated zooming around the best point.
inline double grid_best_sir_2d(const std::vector<Eigen::VectorXcd>& g_row, std::size_t k, const Eigen::VectorXd& p,
                               double sigma2) {
    constexpr double pi = std::numbers::pi;
    auto eval = [&](double a, double b) {
        Eigen::VectorXcd u(2);
        u << std::cos(a), std::polar(std::sin(a), b);
        return sir_with_receiver(g_row, k, p, sigma2, u);
    };
    double best = -1.0, ba = 0.0, bb = 0.0;
    const int na = 180, nb = 360;
    for (int i = 0; i <= na; ++i)
        for (int j = 0; j < nb; ++j) {
            const double a = 0.5 * pi * i / na, b = 2.0 * pi * j / nb;
            const double s = eval(a, b);
            if (s > best) best = s, ba = a, bb = b;
        }
    double wa = 0.5 * pi / na, wb = 2.0 * pi / nb;
    for (int level = 0; level < 12; ++level) {
        const double ca = ba, cb = bb;
        for (int i = -10; i <= 10; ++i)
            for (int j = -10; j <= 10; ++j) {
                const double a = std::clamp(ca + wa * i / 10.0, 0.0, 0.5 * pi);
                const double b = cb + wb * j / 10.0;
                const double s = eval(a, b);
                if (s > best) best = s, ba = a, bb = b;
            }
        wa *= 0.25;
        wb *= 0.25;
    }
    return best;
}

// min over 0 < p <= caps of max_k gamma_k I_k(p) / p_k for K = 2, by a
// zooming grid.
inline double grid_constrained_index(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& weighted,
                                     const Eigen::Vector2d& caps) {
    auto f = [&](double x, double y) {
        const Eigen::Vector2d p(x, y);
        const Eigen::VectorXd w = weighted(p);
        return std::max(w[0] / x, w[1] / y);
    };
    // Nested 1D zooming grids. The objective is quasiconvex on the box, so the
    // inner minimum over y is unimodal in x and each zoom keeps the minimizer.
    auto zoom = [](const std::function<double(double)>& g, double hi) {
        double lo = 0.0, best = std::numeric_limits<double>::infinity(), arg = hi;
        for (int level = 0; level < 45; ++level) {
            const int n = 24;
            const double step = (hi - lo) / n;
            for (int i = 1; i <= n; ++i) {
                const double t = lo + step * i;
                const double v = g(t);
                if (v < best) best = v, arg = t;
            }
            const double top = hi;
            lo = std::max(arg - 2 * step, 0.0);
            hi = std::min(arg + 2 * step, top);
        }
        return best;
    };
    return zoom([&](double x) { return zoom([&](double y) { return f(x, y); }, caps[1]); }, caps[0]);
}

// Random affine network: off-diagonal gains uniform in [0, scale], noise in
// [0.1, 1].
struct AffineDraw {
    Eigen::MatrixXd v;
    Eigen::VectorXd z;
};

inline AffineDraw random_affine(std::mt19937_64& rng, Eigen::Index k, double scale) {
    std::uniform_real_distribution<double> g(0.0, scale), n(0.1, 1.0);
    AffineDraw d{Eigen::MatrixXd::Zero(k, k), Eigen::VectorXd(k)};
    for (Eigen::Index i = 0; i < k; ++i) {
        d.z[i] = n(rng);
        for (Eigen::Index j = 0; j < k; ++j)
            if (i != j) d.v(i, j) = g(rng);
    }
    return d;
}

inline Eigen::VectorXcd random_complex(std::mt19937_64& rng, Eigen::Index n) {
    std::normal_distribution<double> h(0.0, std::sqrt(0.5));
    Eigen::VectorXcd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = {h(rng), h(rng)};
    return v;
}

}  // namespace oracle
