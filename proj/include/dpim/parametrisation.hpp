#pragma once

#include "dpim/multi_index.hpp"
#include "dpim/quad_system.hpp"
#include "dpim/spectral.hpp"

#include <string>
#include <vector>

namespace dpim {

/// Which monomials survive in the reduced dynamics: cnf keeps the
/// near-resonant set only, graph keeps every monomial.
enum class Style { cnf, graph };

struct BuildOptions {
    Style style = Style::cnf;
    int order = 3;                // cap on the master-pair exponents alpha_1 + alpha_2
    int order_na = -1;            // cap on the forcing exponents alpha_3 + alpha_4; -1 tracks order
    double resonance_tol = 0.4;   // relative to the smallest imaginary spacing of the spectrum
    double cond_limit = 1e12;     // unbordered solves beyond this are rejected
    // Keep the direct forcing terms in the reduced dynamics even off
    // resonance, pairing each rotating coordinate with its co-rotating
    // master equation.
    bool forcing_in_reduced_dynamics = true;
    // Optional cap on the total monomial degree (triangular truncation);
    // negative leaves the rectangle order x order_na.
    int total_cap = -1;
    int res_m = 1;                // forcing lock Omega = (m/n) * response rate
    int res_n = 1;
};

/// Sparse record of one nonzero reduced-dynamics coefficient.
struct ReducedTerm {
    int k;        // monomial rank within its order
    int i;        // normal-variable equation index (0 or 1)
    cplx value;
};

// Coefficient tables of an invariant-manifold expansion about one master
// mode: the mapping W from normal coordinates to state space, the reduced
// dynamics f, and the spectral data needed to solve and evaluate them.
// Normal variables are ordered (z1, z2[, z3, z4]) with z2 = conj(z1) and the
// optional pair rotating at +/- i Omega. The retained monomials form the
// rectangle alpha_1 + alpha_2 <= order, alpha_3 + alpha_4 <= order_na.
class Parametrisation {
public:
    Style style() const { return style_; }
    int order() const { return order_; }
    int order_na() const { return order_na_; }
    /// Largest total monomial degree in the tables.
    int total_order() const {
        const int full = d_ == 4 ? order_ + order_na_ : order_;
        return total_cap_ >= 0 ? std::min(full, total_cap_) : full;
    }
    int n_normal() const { return d_; }
    int dim() const { return D_; }
    bool forced() const { return d_ == 4; }
    double omega_forcing() const { return omega_; }
    int res_m() const { return res_m_; }
    int res_n() const { return res_n_; }
    int pivot_row() const { return pivot_row_; }

    const std::vector<cplx>& lambdas() const { return lambdas_; }
    const MultiIndexTable& table() const { return table_; }
    const Vec& master_Y() const { return Y1_; }
    const Vec& master_X() const { return X1_; }

    bool active(int p, int k) const { return active_[static_cast<std::size_t>(p)][static_cast<std::size_t>(k)] != 0; }
    const Vec& W(int p, int k) const { return W_[static_cast<std::size_t>(p)][static_cast<std::size_t>(k)]; }
    const Vec& BW(int p, int k) const { return BW_[static_cast<std::size_t>(p)][static_cast<std::size_t>(k)]; }
    const Vec& f(int p, int k) const { return f_[static_cast<std::size_t>(p)][static_cast<std::size_t>(k)]; }
    cplx sigma(int p, int k) const { return sigma_[static_cast<std::size_t>(p)][static_cast<std::size_t>(k)]; }
    const std::vector<int>& resonant_set(int p, int k) const {
        return resonant_[static_cast<std::size_t>(p)][static_cast<std::size_t>(k)];
    }
    /// Nonzero autonomous reduced-dynamics coefficients at total order r.
    const std::vector<ReducedTerm>& reduced_terms(int r) const {
        return f_sparse_[static_cast<std::size_t>(r)];
    }
    /// Ranks of the active monomials at total order p.
    const std::vector<int>& active_ranks(int p) const {
        return active_list_[static_cast<std::size_t>(p)];
    }

    /// Normal-coordinate point for polar amplitude rho and angles (theta, phi).
    Vec polar_point(double rho, double theta, double phi = 0.0) const;

    /// W(z) summed over active monomials with alpha_1 + alpha_2 <= max_order
    /// (all active monomials when -1).
    Vec evaluate_W(const Vec& z, int max_order = -1) const;
    Vec evaluate_f(const Vec& z, int max_order = -1) const;
    /// Gradient dW/dz, a dim() x n_normal() matrix.
    Mat gradient_W(const Vec& z, int max_order = -1) const;
    /// Gradient of B W, assembled from cached B-weighted coefficients.
    Mat gradient_BW(const Vec& z, int max_order = -1) const;
    /// 2x2 block [rows x (dz1, dz2)] of the gradient of B W.
    Eigen::Matrix2cd gradient_BW_block(const Vec& z, int row0, int row1) const;
    /// Defect of the invariance property at z, given the generating system:
    /// B grad_W(z) f(z) - A W(z) - Q(W, W) - F ztilde over the mechanical rows.
    Vec invariance_defect(const QuadSystem& sys, const Vec& z) const;

private:
    friend Parametrisation build_parametrisation(const QuadSystem&, const MasterMode&,
                                                 const BuildOptions&);

    Mat monomial_gradient_sum(const std::vector<std::vector<Vec>>& coeff, const Vec& z,
                              int max_order) const;

    Style style_ = Style::cnf;
    int order_ = 0;
    int order_na_ = 0;
    int total_cap_ = -1;
    int d_ = 2;
    int D_ = 0;
    int res_m_ = 1, res_n_ = 1;
    double omega_ = 0.0;
    int pivot_row_ = 0;
    std::vector<cplx> lambdas_;
    MultiIndexTable table_;
    Vec Y1_, X1_;
    std::vector<std::vector<Vec>> W_, BW_, f_;
    std::vector<std::vector<cplx>> sigma_;
    std::vector<std::vector<std::uint8_t>> active_;
    std::vector<std::vector<int>> active_list_;
    std::vector<std::vector<std::vector<int>>> resonant_;
    std::vector<std::vector<ReducedTerm>> f_sparse_;
};

/// sigma = sum_i alpha_i lambda_i.
cplx sigma_of(const MultiIndex& alpha, const std::vector<cplx>& lambdas);

/// Master indices whose imaginary part sigma lands on, within
/// tol * (smallest spacing of the imaginary lattice). Graph style always
/// returns every master.
std::vector<int> classify(cplx sigma, const std::vector<cplx>& lambdas, Style style,
                          double tol_rel);

/// Order-by-order construction. The master mode must be normalised and belong
/// to the mechanical part of `sys`; pass the augmented system for forced runs.
Parametrisation build_parametrisation(const QuadSystem& sys, const MasterMode& master,
                                      const BuildOptions& opt);

/// Right-hand side of the homological equation for monomial (p, k), assembled
/// from the tables in `par`. Valid for p <= order()+1; coefficients that were
/// never solved count as zero, so at order()+1 this is the first neglected
/// residual block.
Vec assemble_residual(const Parametrisation& par, const QuadSystem& sys, int p, int k);

/// All residuals of one order stacked sequentially (m_p * dim entries).
Vec stacked_residual(const Parametrisation& par, const QuadSystem& sys, int p);

/// JSON dump of every active coefficient record.
void dump_coefficients(const Parametrisation& par, const std::string& path);

}  // namespace dpim
