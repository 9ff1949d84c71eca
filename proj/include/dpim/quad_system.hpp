#pragma once

#include <Eigen/Dense>
#include <complex>
#include <optional>
#include <string>
#include <vector>

namespace dpim {

using cplx = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;

enum class RowKind { physical, algebraic, forcing };

/// One entry q_{ijk} of the quadratic tensor: coefficient of y_j * y_k in row i.
struct QuadEntry {
    int i, j, k;
    cplx value;
};

/// Single-harmonic load kappa * (Fc cos(Omega t) + Fs sin(Omega t)).
struct ForcingSpec {
    Vec Fc;
    Vec Fs;
    double omega = 0.0;   // excitation frequency, rad/s
    double kappa = 0.0;   // scalar amplitude factor
};

// Quadratic differential-algebraic system  B y' = A y + Q(y, y).
// Rows are ordered physical block first, then algebraic auxiliaries, then
// (after augmentation) the two rotating forcing coordinates. Algebraic rows
// carry zero rows of B; A is required to be numerically nonsingular.
class QuadSystem {
public:
    QuadSystem(Mat B, Mat A, std::vector<QuadEntry> Q, int n_physical, int n_algebraic);

    int dim() const { return static_cast<int>(A_.rows()); }
    int n_physical() const { return n_physical_; }
    int n_algebraic() const { return n_algebraic_; }
    bool has_forcing() const { return forcing_.has_value(); }

    const Mat& B() const { return B_; }
    const Mat& A() const { return A_; }
    const std::vector<QuadEntry>& Q() const { return Q_; }
    RowKind label(int row) const { return labels_[static_cast<std::size_t>(row)]; }

    /// Forcing data of an augmented system.
    const ForcingSpec& forcing() const;
    /// Complexified force columns (mechanical rows only): F[.,0] drives e^{+i Omega t}.
    Mat forcing_columns() const;
    /// Mechanical dimension: dim() minus the two forcing rows when present.
    int dim_mechanical() const { return has_forcing() ? dim() - 2 : dim(); }
    /// The system without its forcing rows (identity when autonomous).
    QuadSystem mechanical() const;

    /// Symmetric bilinear form Q(y1, y2); eval_Q(a,b) == eval_Q(b,a).
    Vec eval_Q(const Vec& y1, const Vec& y2) const;
    /// A y + Q(y, y).
    Vec eval_rhs(const Vec& y) const;

    /// One-norm condition estimate of A computed at construction.
    double cond_A() const { return cond_A_; }

private:
    friend QuadSystem augment_forcing(const QuadSystem&, const ForcingSpec&);

    QuadSystem(Mat B, Mat A, std::vector<QuadEntry> Q, int n_physical, int n_algebraic,
               int n_forcing);

    Mat B_, A_;
    std::vector<QuadEntry> Q_;
    int n_physical_ = 0;
    int n_algebraic_ = 0;
    std::vector<RowKind> labels_;
    std::optional<ForcingSpec> forcing_;
    double cond_A_ = 0.0;
};

// Builders for the example oscillators, recast to quadratic form with the
// auxiliary r = u^2 (or r = u1^2) appended as an algebraic row.

/// u'' + 2 xi w u' + w^2 u + h u^3 = 0, first-order recast (u, v[, r]).
QuadSystem build_duffing(double omega, double xi, double h);

/// Two coupled oscillators with cubic coupling h1*u1^3 and h2*(3 u1^2 u2 | u1^3).
QuadSystem build_two_dof(double omega1, double omega2, double xi1, double xi2,
                         double h1, double h2);

/// Append the two rotating coordinates carrying the harmonic forcing.
QuadSystem augment_forcing(const QuadSystem& sys, const ForcingSpec& forcing);

QuadSystem load_system(const std::string& path);
void save_system(const QuadSystem& sys, const std::string& path);

}  // namespace dpim
