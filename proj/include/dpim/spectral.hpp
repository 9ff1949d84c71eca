#pragma once

#include "dpim/quad_system.hpp"

#include <vector>

namespace dpim {

/// One finite eigenpair of the pencil (A, B): A Y = lambda B Y, X^H A = lambda X^H B.
struct EigenPair {
    cplx lambda;
    Vec Y;   // right eigenvector
    Vec X;   // left eigenvector, stored as a column; X^H is the row used in products
};

/// The complex-conjugate pair the reduction is tangent to. lambda has
/// positive imaginary part; the partner is its conjugate throughout.
struct MasterMode {
    cplx lambda;
    Vec Y;
    Vec X;
    int pivot_row = 0;   // displacement entry used by unit-displacement normalisation

    cplx lambda_conj() const { return std::conj(lambda); }
    Vec Y_conj() const { return Y.conjugate(); }
    Vec X_conj() const { return X.conjugate(); }
};

enum class NormalisationScheme { unit_displacement, unit_bprod, scale };

/// All finite eigenpairs of (A, B), sorted by |Im lambda|; eigenvalues sent to
/// infinity by the singular rows of B are filtered out.
std::vector<EigenPair> eigenpairs(const QuadSystem& sys);

/// Pick the conjugate pair whose |Im lambda| is closest to target_freq.
MasterMode select_master(const std::vector<EigenPair>& pairs, double target_freq,
                         int pivot_row = 0);

/// Rescale the pair. unit_displacement pins Y[pivot] = 1; all schemes restore
/// X^H B Y = 1 except the pure rescaling Y -> gamma Y, X -> X / conj(gamma),
/// which preserves it.
MasterMode normalize(const MasterMode& mode, const QuadSystem& sys,
                     NormalisationScheme scheme, cplx gamma = cplx(1.0, 0.0));

/// Eigenvectors of the augmented pencil at +/- i Omega: upper block
/// (i Omega B - A)^-1 F, forcing entries (1, 0) and (0, 1).
std::pair<EigenPair, EigenPair> forcing_eigenvectors(const QuadSystem& sys_augmented);

}  // namespace dpim
