#pragma once

#include <Eigen/Dense>
#include <Eigen/LU>
#include <cmath>
#include <complex>

namespace dpim::detail {

// Hager-style power iteration for ||M^-1||_1 given an LU factorisation of M.
inline double inverse_one_norm_estimate(const Eigen::PartialPivLU<Eigen::MatrixXcd>& lu, int n) {
    using cplx = std::complex<double>;
    Eigen::VectorXcd x = Eigen::VectorXcd::Constant(n, cplx(1.0 / n, 0.0));
    double est = 0.0;
    for (int iter = 0; iter < 5; ++iter) {
        Eigen::VectorXcd z = lu.solve(x);
        double norm1 = z.cwiseAbs().sum();
        if (norm1 <= est && iter > 0) break;
        est = norm1;
        Eigen::VectorXcd xi(n);
        for (int i = 0; i < n; ++i) {
            double a = std::abs(z(i));
            xi(i) = a > 0 ? z(i) / a : cplx(1.0, 0.0);
        }
        Eigen::VectorXcd w = lu.adjoint().solve(xi);
        int j = 0;
        w.cwiseAbs().maxCoeff(&j);
        if (std::abs(w(j)) <= std::abs((w.adjoint() * x)(0, 0))) break;
        x.setZero();
        x(j) = 1.0;
    }
    return est;
}

inline double one_norm_condest(const Eigen::MatrixXcd& M,
                               const Eigen::PartialPivLU<Eigen::MatrixXcd>& lu) {
    const int n = static_cast<int>(M.rows());
    return M.cwiseAbs().colwise().sum().maxCoeff() * inverse_one_norm_estimate(lu, n);
}

}  // namespace dpim::detail
