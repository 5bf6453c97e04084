#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

// Levinson-Durbin solver for symmetric positive definite Toeplitz
// systems. Gram matrices of a stationary kernel on a contiguous time
// grid are Toeplitz, which turns the O(N^3) factorization in the GP
// likelihood into an O(N^2) recursion. The recursion also yields
// log det T from the prediction-error variances. Multiple right-hand
// sides are carried through one pass.

namespace uavsched::toeplitz {

struct solve_result {
    bool positive_definite = false;
    double log_det = 0.0;          // of the full (unnormalized) matrix
    Eigen::MatrixXd x;             // solutions, one column per rhs
};

// first_col holds T(:,0); T(i,j) = first_col[|i-j|].
inline solve_result solve(const Eigen::VectorXd& first_col, const Eigen::MatrixXd& rhs) {
    const Eigen::Index n = first_col.size();
    if (n == 0 || rhs.rows() != n)
        throw std::invalid_argument("toeplitz::solve: dimension mismatch");
    solve_result out;
    const double r0 = first_col[0];
    if (!(r0 > 0.0)) return out;

    // Work in the unit-diagonal normalization: T = r0 * That.
    const Eigen::VectorXd r = first_col.tail(n - 1) / r0;
    Eigen::MatrixXd x = rhs / r0;
    out.log_det = static_cast<double>(n) * std::log(r0);

    if (n == 1) {
        out.positive_definite = true;
        out.x = std::move(x);
        return out;
    }

    Eigen::VectorXd y(n - 1);
    y[0] = -r[0];
    double beta = 1.0;
    double alpha = -r[0];
    if (std::abs(alpha) >= 1.0) return out;

    for (Eigen::Index k = 1; k < n; ++k) {
        beta *= (1.0 - alpha * alpha);
        if (!(beta > 0.0)) return out;
        out.log_det += std::log(beta);
        if (k == n - 1 && rhs.cols() == 0) break;

        if (k < n) {
            // mu_j = (b_k - r(1:k)' * x(k-1:-1:0, j)) / beta
            Eigen::RowVectorXd mu =
                (x.row(k) - r.head(k).reverse().transpose() * x.topRows(k)) / beta;
            x.topRows(k).noalias() += y.head(k).reverse() * mu;
            x.row(k) = mu;
        }
        if (k < n - 1) {
            alpha = -(r[k] + r.head(k).reverse().dot(y.head(k))) / beta;
            y.head(k) += alpha * y.head(k).reverse().eval();
            y[k] = alpha;
        }
    }
    out.positive_definite = true;
    out.x = std::move(x);
    return out;
}

struct quad_result {
    bool positive_definite = false;
    double log_det = 0.0;
    Eigen::VectorXd quad;  // y_j' T^{-1} y_j per column
};

inline quad_result quad_forms(const Eigen::VectorXd& first_col, const Eigen::MatrixXd& ys) {
    quad_result out;
    solve_result s = solve(first_col, ys);
    if (!s.positive_definite) return out;
    out.positive_definite = true;
    out.log_det = s.log_det;
    out.quad = (ys.array() * s.x.array()).colwise().sum();
    return out;
}

}  // namespace uavsched::toeplitz
