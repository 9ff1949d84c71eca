#include "dpim/spectral.hpp"

#include <complex>
#define LAPACK_COMPLEX_CUSTOM
#define lapack_complex_float std::complex<float>
#define lapack_complex_double std::complex<double>
#include <lapacke.h>

#include <Eigen/LU>
#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dpim {

namespace {

struct RawEigen {
    std::vector<cplx> alpha, beta;
    Mat VL, VR;
};

// QZ factorisation of the complex pencil (A, B) with left and right vectors.
RawEigen zggev(Mat A, Mat B) {
    const int n = static_cast<int>(A.rows());
    RawEigen out;
    out.alpha.resize(static_cast<std::size_t>(n));
    out.beta.resize(static_cast<std::size_t>(n));
    out.VL.resize(n, n);
    out.VR.resize(n, n);
    int info = LAPACKE_zggev(LAPACK_COL_MAJOR, 'V', 'V', n,
                             A.data(), n, B.data(), n,
                             out.alpha.data(), out.beta.data(),
                             out.VL.data(), n, out.VR.data(), n);
    if (info != 0) throw std::runtime_error("eigenpairs: zggev failed, info=" + std::to_string(info));
    return out;
}

}  // namespace

std::vector<EigenPair> eigenpairs(const QuadSystem& sys) {
    RawEigen raw = zggev(sys.A(), sys.B());
    const int n = sys.dim();

    // beta ~ 0 marks the spurious infinite modes produced by singular B rows.
    double scale = 0.0;
    for (int i = 0; i < n; ++i) scale = std::max(scale, std::abs(raw.alpha[static_cast<std::size_t>(i)]));
    double max_finite = 0.0;
    std::vector<cplx> lambdas(static_cast<std::size_t>(n));
    std::vector<bool> finite(static_cast<std::size_t>(n), false);
    for (int i = 0; i < n; ++i) {
        const cplx b = raw.beta[static_cast<std::size_t>(i)];
        if (std::abs(b) > 1e-12 * std::max(scale, 1.0)) {
            lambdas[static_cast<std::size_t>(i)] = raw.alpha[static_cast<std::size_t>(i)] / b;
            finite[static_cast<std::size_t>(i)] = true;
            max_finite = std::max(max_finite, std::abs(lambdas[static_cast<std::size_t>(i)]));
        }
    }

    std::vector<EigenPair> out;
    for (int i = 0; i < n; ++i) {
        if (!finite[static_cast<std::size_t>(i)]) continue;
        if (std::abs(lambdas[static_cast<std::size_t>(i)]) > 1e8 * std::max(max_finite, 1e-300) &&
            max_finite > 0.0)
            continue;
        EigenPair p;
        p.lambda = lambdas[static_cast<std::size_t>(i)];
        p.Y = raw.VR.col(i);
        p.X = raw.VL.col(i);
        out.push_back(std::move(p));
    }
    std::sort(out.begin(), out.end(), [](const EigenPair& a, const EigenPair& b) {
        const double ia = std::abs(a.lambda.imag()), ib = std::abs(b.lambda.imag());
        if (ia != ib) return ia < ib;
        return a.lambda.imag() > b.lambda.imag();
    });
    return out;
}

MasterMode select_master(const std::vector<EigenPair>& pairs, double target_freq,
                         int pivot_row) {
    if (pairs.empty()) throw std::invalid_argument("select_master: empty spectrum");
    const EigenPair* best = nullptr;
    double best_dist = std::numeric_limits<double>::infinity();
    for (const auto& p : pairs) {
        if (p.lambda.imag() <= 0.0) continue;   // keep the forward-rotating member
        const double dist = std::abs(p.lambda.imag() - target_freq);
        if (dist < best_dist) {
            best_dist = dist;
            best = &p;
        }
    }
    if (!best || best_dist > 0.5 * target_freq)
        throw std::runtime_error("select_master: no conjugate pair within 50% of target frequency");
    MasterMode mode;
    mode.lambda = best->lambda;
    mode.Y = best->Y;
    mode.X = best->X;
    mode.pivot_row = pivot_row;
    return mode;
}

MasterMode normalize(const MasterMode& mode, const QuadSystem& sys,
                     NormalisationScheme scheme, cplx gamma) {
    MasterMode out = mode;
    switch (scheme) {
        case NormalisationScheme::unit_displacement: {
            const cplx pivot = out.Y(out.pivot_row);
            if (std::abs(pivot) == 0.0)
                throw std::runtime_error("normalize: zero pivot entry in eigenvector");
            out.Y /= pivot;
            break;
        }
        case NormalisationScheme::unit_bprod:
            break;
        case NormalisationScheme::scale:
            out.Y *= gamma;
            out.X /= std::conj(gamma);
            return out;   // X^H B Y unchanged by construction
    }
    const cplx c = (out.X.adjoint() * sys.B() * out.Y)(0, 0);
    if (std::abs(c) < 1e-300) throw std::runtime_error("normalize: degenerate X^H B Y product");
    out.X /= std::conj(c);
    return out;
}

std::pair<EigenPair, EigenPair> forcing_eigenvectors(const QuadSystem& sys_augmented) {
    if (!sys_augmented.has_forcing())
        throw std::invalid_argument("forcing_eigenvectors: system has no forcing rows");
    const int Dm = sys_augmented.dim_mechanical();
    const double Omega = sys_augmented.forcing().omega;
    const Mat F = sys_augmented.forcing_columns();
    const Mat Bm = sys_augmented.B().topLeftCorner(Dm, Dm);
    const Mat Am = sys_augmented.A().topLeftCorner(Dm, Dm);

    Mat M = cplx(0.0, Omega) * Bm - Am;
    Eigen::PartialPivLU<Mat> lu(M);
    Vec probe = lu.solve(Vec::Ones(Dm));
    double growth = probe.cwiseAbs().maxCoeff() /
                    std::max(1.0 / (M.cwiseAbs().maxCoeff() + 1e-300), 1e-300);
    if (!probe.allFinite() || growth > 1e14)
        throw std::runtime_error(
            "forcing_eigenvectors: expansion point resonance; add damping or detune Omega");

    Vec up_plus = lu.solve(F.col(0));

    EigenPair plus;
    plus.lambda = cplx(0.0, Omega);
    plus.Y = Vec::Zero(Dm + 2);
    plus.Y.head(Dm) = up_plus;
    plus.Y(Dm) = 1.0;
    plus.X = Vec::Zero(Dm + 2);
    plus.X(Dm) = 1.0;

    Mat Mc = cplx(0.0, -Omega) * Bm - Am;
    Vec up_minus = Eigen::PartialPivLU<Mat>(Mc).solve(F.col(1));

    EigenPair minus;
    minus.lambda = cplx(0.0, -Omega);
    minus.Y = Vec::Zero(Dm + 2);
    minus.Y.head(Dm) = up_minus;
    minus.Y(Dm + 1) = 1.0;
    minus.X = Vec::Zero(Dm + 2);
    minus.X(Dm + 1) = 1.0;
    return {plus, minus};
}

}  // namespace dpim
