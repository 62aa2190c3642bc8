// Test-only reference computations. Nothing here goes through the library's
// incremental code paths.
#ifndef ISGP_TESTS_ORACLES_HPP
#define ISGP_TESTS_ORACLES_HPP

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "isgp/kernels.hpp"

namespace isgp::testing {

// Phi(z) by composite Simpson quadrature of the standard normal pdf over [0, |z|].
inline double normal_cdf_quadrature(double z, int intervals = 20000) {
    const double a = std::abs(z);
    const double h = a / intervals;
    auto pdf = [](double t) { return std::exp(-0.5 * t * t) / std::sqrt(2.0 * std::numbers::pi); };
    double sum = pdf(0.0) + pdf(a);
    for (int i = 1; i < intervals; ++i) {
        sum += (i % 2 == 1 ? 4.0 : 2.0) * pdf(i * h);
    }
    const double half = sum * h / 3.0;
    return z >= 0 ? 0.5 + half : 0.5 - half;
}

// Gram matrix assembled entry by entry with plain loops.
inline Eigen::MatrixXd dense_gram(const KernelSpec &k, const std::vector<FeatureVector> &xs) {
    const auto n = static_cast<Eigen::Index>(xs.size());
    Eigen::MatrixXd K(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            K(i, j) = eval_kernel(k, xs[static_cast<std::size_t>(i)], xs[static_cast<std::size_t>(j)]);
        }
    }
    return K;
}

// (K + rho^2 I)^-1 by full-pivoting LU.
inline Eigen::MatrixXd dense_precision(const KernelSpec &k, const std::vector<FeatureVector> &xs, double rho) {
    Eigen::MatrixXd A = dense_gram(k, xs);
    A.diagonal().array() += rho * rho;
    return A.fullPivLu().inverse();
}

inline double relative_frobenius(const Eigen::MatrixXd &a, const Eigen::MatrixXd &b) {
    return (a - b).norm() / b.norm();
}

struct DirectPosterior {
    std::vector<double> means; // one per label vector
    double sigma;
};

// Posterior by solving (K + rho^2 I) v = y directly for each label vector.
inline DirectPosterior direct_posterior(const KernelSpec &k, const std::vector<FeatureVector> &xs,
                                        const std::vector<Eigen::VectorXd> &label_vectors, double rho,
                                        const FeatureVector &x) {
    Eigen::MatrixXd A = dense_gram(k, xs);
    A.diagonal().array() += rho * rho;
    const auto lu = A.fullPivLu();
    Eigen::VectorXd kx(static_cast<Eigen::Index>(xs.size()));
    for (std::size_t i = 0; i < xs.size(); ++i) {
        kx[static_cast<Eigen::Index>(i)] = eval_kernel(k, xs[i], x);
    }
    DirectPosterior out;
    for (const auto &y : label_vectors) {
        out.means.push_back(kx.dot(lu.solve(y)));
    }
    out.sigma = std::sqrt(eval_kernel(k, x, x) - kx.dot(lu.solve(kx)) + rho * rho);
    return out;
}

inline double min_eigenvalue(const Eigen::MatrixXd &m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m, Eigen::EigenvaluesOnly);
    return solver.eigenvalues().minCoeff();
}

inline std::vector<FeatureVector> random_points(std::mt19937_64 &rng, std::size_t n, Eigen::Index dim, double lo,
                                                double hi) {
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<FeatureVector> out;
    for (std::size_t i = 0; i < n; ++i) {
        FeatureVector x(dim);
        for (Eigen::Index d = 0; d < dim; ++d) {
            x[d] = u(rng);
        }
        out.push_back(std::move(x));
    }
    return out;
}

// Random composite kernel: depth-limited sums of the four base kernels.
inline KernelSpec random_kernel(std::mt19937_64 &rng, int depth = 0) {
    std::uniform_real_distribution<double> scale(0.3, 3.0);
    std::uniform_int_distribution<int> pick(0, depth < 2 ? 4 : 3);
    switch (pick(rng)) {
    case 0:
        return SquaredExponential{scale(rng)};
    case 1:
        return RationalQuadratic{scale(rng), scale(rng)};
    case 2:
        return Constant{scale(rng)};
    case 3:
        return WhiteNoise{scale(rng) * 0.1};
    default: {
        SumKernel sum;
        std::uniform_int_distribution<int> count(1, 3);
        for (int i = count(rng); i > 0; --i) {
            sum.children.push_back(random_kernel(rng, depth + 1));
        }
        return sum;
    }
    }
}

struct InverseCase {
    KernelSpec kernel;
    double rho = 0.0;
    std::vector<FeatureVector> xs;
};

// Random SE dataset whose Gram matrix stays invertible in double precision even
// for tiny rho: the box side grows with t^(1/d), which keeps the condition
// number below about 1e7.
inline InverseCase random_inverse_case(std::mt19937_64 &rng, double rho, std::size_t max_t = 200) {
    std::uniform_int_distribution<Eigen::Index> dims(3, 8);
    std::uniform_int_distribution<std::size_t> sizes(10, max_t);
    std::uniform_real_distribution<double> scales(0.5, 1.5);
    InverseCase out;
    const Eigen::Index d = dims(rng);
    const std::size_t t = sizes(rng);
    const double ell = scales(rng);
    const double half = 0.4 * ell * std::pow(static_cast<double>(t), 1.0 / static_cast<double>(d));
    out.kernel = SquaredExponential{ell};
    out.rho = rho;
    out.xs = random_points(rng, t, d, -half, half);
    return out;
}

inline double condition_number(const Eigen::MatrixXd &m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m, Eigen::EigenvaluesOnly);
    return solver.eigenvalues().maxCoeff() / solver.eigenvalues().minCoeff();
}

} // namespace isgp::testing

#endif // ISGP_TESTS_ORACLES_HPP
