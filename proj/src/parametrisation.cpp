#include "dpim/parametrisation.hpp"

#include "condest.hpp"

#include <json.hpp>

#include <Eigen/LU>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace dpim {

namespace {

int forcing_degree(const MultiIndex& a) {
    return static_cast<int>(a.size()) > 2 ? a[2] + a[3] : 0;
}

// z^alpha from precomputed powers pows[i][e].
cplx monomial_value(const std::vector<std::vector<cplx>>& pows, const MultiIndex& a) {
    cplx v(1.0, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i) v *= pows[i][static_cast<std::size_t>(a[i])];
    return v;
}

std::vector<std::vector<cplx>> powers_of(const Vec& z, int up_to) {
    std::vector<std::vector<cplx>> pows(static_cast<std::size_t>(z.size()));
    for (int i = 0; i < z.size(); ++i) {
        auto& pi = pows[static_cast<std::size_t>(i)];
        pi.resize(static_cast<std::size_t>(up_to) + 1);
        pi[0] = cplx(1.0, 0.0);
        for (int e = 1; e <= up_to; ++e) pi[static_cast<std::size_t>(e)] = pi[static_cast<std::size_t>(e - 1)] * z(i);
    }
    return pows;
}

struct HomologicalSolve {
    Vec W;
    Vec f;   // d entries, autonomous components filled
};

HomologicalSolve solve_homological(cplx sigma, const Vec& R, const std::vector<int>& resonant,
                                   const Mat& Bm, const Mat& Am, const std::vector<Vec>& BY,
                                   const std::vector<Vec>& XB, int d, double cond_limit) {
    const int Dm = static_cast<int>(Bm.rows());
    HomologicalSolve out;
    out.f = Vec::Zero(d);
    if (resonant.empty()) {
        Mat M = sigma * Bm - Am;
        Eigen::PartialPivLU<Mat> lu(M);
        const double cond = detail::one_norm_condest(M, lu);
        if (!std::isfinite(cond) || cond > cond_limit)
            throw std::runtime_error(
                "solve_homological: monomial near-resonant; enlarge resonant set tolerance");
        out.W = lu.solve(R);
        return out;
    }
    const int nb = static_cast<int>(resonant.size());
    Mat M = Mat::Zero(Dm + nb, Dm + nb);
    M.topLeftCorner(Dm, Dm) = sigma * Bm - Am;
    for (int j = 0; j < nb; ++j) {
        M.col(Dm + j).head(Dm) = BY[static_cast<std::size_t>(resonant[static_cast<std::size_t>(j)])];
        M.row(Dm + j).head(Dm) = XB[static_cast<std::size_t>(resonant[static_cast<std::size_t>(j)])].transpose();
    }
    Vec rhs = Vec::Zero(Dm + nb);
    rhs.head(Dm) = R;
    Vec sol = Eigen::PartialPivLU<Mat>(M).solve(rhs);
    out.W = sol.head(Dm);
    for (int j = 0; j < nb; ++j) out.f(resonant[static_cast<std::size_t>(j)]) = sol(Dm + j);
    return out;
}

}  // namespace

cplx sigma_of(const MultiIndex& alpha, const std::vector<cplx>& lambdas) {
    if (alpha.size() != lambdas.size()) throw std::invalid_argument("sigma_of: arity mismatch");
    cplx s(0.0, 0.0);
    for (std::size_t i = 0; i < alpha.size(); ++i) s += static_cast<double>(alpha[i]) * lambdas[i];
    return s;
}

std::vector<int> classify(cplx sigma, const std::vector<cplx>& lambdas, Style style,
                          double tol_rel) {
    // Distances are measured on imaginary parts: light damping drags the real
    // part of sigma linearly with the monomial order, which must not break
    // the resonance lattice.
    double spacing = std::abs(lambdas[0].imag());
    if (lambdas.size() > 2) spacing = std::min(spacing, std::abs(lambdas[2].imag()));
    if (spacing <= 0.0) throw std::invalid_argument("classify: degenerate imaginary spacing");

    std::vector<int> out;
    for (int s = 0; s < 2; ++s) {
        if (style == Style::graph ||
            std::abs(sigma.imag() - lambdas[static_cast<std::size_t>(s)].imag()) <= tol_rel * spacing)
            out.push_back(s);
    }
    return out;
}

Vec Parametrisation::polar_point(double rho, double theta, double phi) const {
    Vec z(d_);
    const cplx z1 = 0.5 * rho * std::exp(cplx(0.0, theta));
    z(0) = z1;
    z(1) = std::conj(z1);
    if (d_ == 4) {
        const double omega_t = static_cast<double>(res_m_) / static_cast<double>(res_n_) * theta - phi;
        z(2) = std::exp(cplx(0.0, omega_t));
        z(3) = std::conj(z(2));
    }
    return z;
}

namespace {

inline int rho_power(const MultiIndex& alpha) { return alpha[0] + alpha[1]; }

}  // namespace

Vec Parametrisation::evaluate_W(const Vec& z, int max_order) const {
    const int cap = max_order < 0 ? order_ : std::min(order_, max_order);
    auto pows = powers_of(z, total_order());
    Vec out = Vec::Zero(D_);
    for (int p = 1; p <= total_order(); ++p) {
        const auto& monos = table_.order(p);
        for (int k : active_ranks(p)) {
            const auto& alpha = monos[static_cast<std::size_t>(k)];
            if (rho_power(alpha) > cap) continue;
            out += W(p, k) * monomial_value(pows, alpha);
        }
    }
    return out;
}

Vec Parametrisation::evaluate_f(const Vec& z, int max_order) const {
    const int cap = max_order < 0 ? order_ : std::min(order_, max_order);
    auto pows = powers_of(z, total_order());
    Vec out = Vec::Zero(d_);
    for (int p = 1; p <= total_order(); ++p) {
        const auto& monos = table_.order(p);
        for (int k : active_ranks(p)) {
            const Vec& fv = f(p, k);
            if (fv.cwiseAbs().sum() == 0.0) continue;
            const auto& alpha = monos[static_cast<std::size_t>(k)];
            if (rho_power(alpha) > cap) continue;
            out += fv * monomial_value(pows, alpha);
        }
    }
    return out;
}

Mat Parametrisation::monomial_gradient_sum(const std::vector<std::vector<Vec>>& coeff,
                                           const Vec& z, int max_order) const {
    const int cap = max_order < 0 ? order_ : std::min(order_, max_order);
    auto pows = powers_of(z, total_order());
    Mat out = Mat::Zero(D_, d_);
    for (int p = 1; p <= total_order(); ++p) {
        const auto& monos = table_.order(p);
        for (int k : active_ranks(p)) {
            const auto& alpha = monos[static_cast<std::size_t>(k)];
            if (rho_power(alpha) > cap) continue;
            const Vec& c = coeff[static_cast<std::size_t>(p)][static_cast<std::size_t>(k)];
            for (int i = 0; i < d_; ++i) {
                const int ai = alpha[static_cast<std::size_t>(i)];
                if (ai == 0) continue;
                cplx v(1.0, 0.0);
                for (int j = 0; j < d_; ++j) {
                    const int e = j == i ? alpha[static_cast<std::size_t>(j)] - 1 : alpha[static_cast<std::size_t>(j)];
                    v *= pows[static_cast<std::size_t>(j)][static_cast<std::size_t>(e)];
                }
                out.col(i) += static_cast<double>(ai) * v * c;
            }
        }
    }
    return out;
}

Mat Parametrisation::gradient_W(const Vec& z, int max_order) const {
    return monomial_gradient_sum(W_, z, max_order);
}

Mat Parametrisation::gradient_BW(const Vec& z, int max_order) const {
    return monomial_gradient_sum(BW_, z, max_order);
}

Eigen::Matrix2cd Parametrisation::gradient_BW_block(const Vec& z, int row0, int row1) const {
    auto pows = powers_of(z, total_order());
    Eigen::Matrix2cd out = Eigen::Matrix2cd::Zero();
    for (int p = 1; p <= total_order(); ++p) {
        const auto& monos = table_.order(p);
        for (int k : active_ranks(p)) {
            const auto& alpha = monos[static_cast<std::size_t>(k)];
            const Vec& c = BW_[static_cast<std::size_t>(p)][static_cast<std::size_t>(k)];
            const cplx c0 = c(row0), c1 = c(row1);
            if (c0 == cplx(0.0, 0.0) && c1 == cplx(0.0, 0.0)) continue;
            for (int i = 0; i < 2; ++i) {
                const int ai = alpha[static_cast<std::size_t>(i)];
                if (ai == 0) continue;
                cplx v(static_cast<double>(ai), 0.0);
                for (int j = 0; j < d_; ++j) {
                    const int e = j == i ? alpha[static_cast<std::size_t>(j)] - 1 : alpha[static_cast<std::size_t>(j)];
                    v *= pows[static_cast<std::size_t>(j)][static_cast<std::size_t>(e)];
                }
                out(0, i) += v * c0;
                out(1, i) += v * c1;
            }
        }
    }
    return out;
}

Vec Parametrisation::invariance_defect(const QuadSystem& sys, const Vec& z) const {
    auto pows = powers_of(z, total_order());
    Vec Wv = Vec::Zero(D_);
    Vec fv = Vec::Zero(d_);
    for (int p = 1; p <= total_order(); ++p) {
        const auto& monos = table_.order(p);
        for (int k : active_ranks(p)) {
            const cplx m = monomial_value(pows, monos[static_cast<std::size_t>(k)]);
            Wv += W(p, k) * m;
            const Vec& fk = f(p, k);
            if (fk.cwiseAbs().sum() != 0.0) fv += fk * m;
        }
    }
    // Transport term accumulated coefficient-wise: sum_k BW^(p,k) *
    // sum_i alpha_i z^(alpha - e_i) f_i(z).
    Vec E = -(sys.A().topLeftCorner(D_, D_) * Wv);
    for (const auto& e : sys.Q()) E(e.i) -= e.value * Wv(e.j) * Wv(e.k);
    if (forced()) {
        const Mat F = sys.forcing_columns();
        E -= F.col(0) * z(2) + F.col(1) * z(3);
    }
    for (int p = 1; p <= total_order(); ++p) {
        const auto& monos = table_.order(p);
        for (int k : active_ranks(p)) {
            const auto& alpha = monos[static_cast<std::size_t>(k)];
            cplx c(0.0, 0.0);
            for (int i = 0; i < d_; ++i) {
                const int ai = alpha[static_cast<std::size_t>(i)];
                if (ai == 0 || fv(i) == cplx(0.0, 0.0)) continue;
                cplx v(static_cast<double>(ai), 0.0);
                for (int j = 0; j < d_; ++j) {
                    const int e = j == i ? alpha[static_cast<std::size_t>(j)] - 1 : alpha[static_cast<std::size_t>(j)];
                    v *= pows[static_cast<std::size_t>(j)][static_cast<std::size_t>(e)];
                }
                c += v * fv(i);
            }
            if (c != cplx(0.0, 0.0)) E += BW(p, k) * c;
        }
    }
    return E;
}

Vec assemble_residual(const Parametrisation& par, const QuadSystem& sys, int p, int k) {
    const auto& tab = par.table();
    if (p < 2 || p > par.total_order() + 1)
        throw std::invalid_argument("assemble_residual: order out of range");
    const int d = par.n_normal();
    const int Dm = par.dim();
    const auto& alpha = tab.alpha(p, k);
    Vec R = Vec::Zero(Dm);

    // Quadratic convolution over every ordered split alpha = a + b.
    const auto& q_entries = sys.Q();
    MultiIndex a(static_cast<std::size_t>(d), 0), b(static_cast<std::size_t>(d), 0);
    bool done = false;
    while (!done) {
        int qa = 0;
        for (int i = 0; i < d; ++i) qa += a[static_cast<std::size_t>(i)];
        if (qa >= 1 && qa <= p - 1) {
            for (int i = 0; i < d; ++i) b[static_cast<std::size_t>(i)] = alpha[static_cast<std::size_t>(i)] - a[static_cast<std::size_t>(i)];
            const int ka = tab.index_of(a);
            const int kb = tab.index_of(b);
            if (par.active(qa, ka) && par.active(p - qa, kb)) {
                const Vec& Wa = par.W(qa, ka);
                const Vec& Wb = par.W(p - qa, kb);
                for (const auto& e : q_entries) R(e.i) += e.value * Wa(e.j) * Wb(e.k);
            }
        }
        // advance the odometer a <= alpha
        done = true;
        for (int i = 0; i < d; ++i) {
            if (a[static_cast<std::size_t>(i)] < alpha[static_cast<std::size_t>(i)]) {
                ++a[static_cast<std::size_t>(i)];
                for (int j = 0; j < i; ++j) a[static_cast<std::size_t>(j)] = 0;
                done = false;
                break;
            }
        }
    }

    // Transport of lower-order mappings by intermediate-order reduced
    // dynamics: a_i * B W^(q,a) * f_i^(r,b) landing on alpha = a - e_i + b.
    MultiIndex shifted(static_cast<std::size_t>(d), 0);
    for (int r = 2; r <= p - 1; ++r) {
        const int q = p + 1 - r;
        if (q < 2) continue;
        for (const auto& term : par.reduced_terms(r)) {
            const auto& beta = tab.alpha(r, term.k);
            bool valid = true;
            for (int i = 0; i < d; ++i) {
                shifted[static_cast<std::size_t>(i)] = alpha[static_cast<std::size_t>(i)] - beta[static_cast<std::size_t>(i)];
                if (i == term.i) ++shifted[static_cast<std::size_t>(i)];
                if (shifted[static_cast<std::size_t>(i)] < 0) { valid = false; break; }
            }
            if (!valid || shifted[static_cast<std::size_t>(term.i)] < 1) continue;
            const int ka = tab.index_of(shifted);
            if (!par.active(q, ka)) continue;
            R -= static_cast<double>(shifted[static_cast<std::size_t>(term.i)]) * term.value * par.BW(q, ka);
        }
    }

    // Same-order feed-through of the linear forcing coupling: the reduced
    // dynamics matrix at order one is triangular, not diagonal, so solved
    // monomials with one fewer forcing exponent contribute at order p itself.
    if (d == 4 && p <= par.total_order()) {
        for (int j = 2; j < 4; ++j) {
            if (alpha[static_cast<std::size_t>(j)] < 1) continue;
            MultiIndex ej(static_cast<std::size_t>(d), 0);
            ej[static_cast<std::size_t>(j)] = 1;
            const Vec& f1j = par.f(1, tab.index_of(ej));
            for (int i = 0; i < 2; ++i) {
                const cplx c = f1j(i);
                if (c == cplx(0.0, 0.0)) continue;
                MultiIndex sh = alpha;
                --sh[static_cast<std::size_t>(j)];
                ++sh[static_cast<std::size_t>(i)];
                const int ka = tab.index_of(sh);
                if (!par.active(p, ka)) continue;
                R -= static_cast<double>(sh[static_cast<std::size_t>(i)]) * c * par.BW(p, ka);
            }
        }
    }
    return R;
}

Vec stacked_residual(const Parametrisation& par, const QuadSystem& sys, int p) {
    const int m = par.table().count(p);
    const int Dm = par.dim();
    Vec out(static_cast<Eigen::Index>(m) * Dm);
    for (int k = 0; k < m; ++k) out.segment(static_cast<Eigen::Index>(k) * Dm, Dm) = assemble_residual(par, sys, p, k);
    return out;
}

Parametrisation build_parametrisation(const QuadSystem& sys, const MasterMode& master,
                                      const BuildOptions& opt) {
    if (opt.order < 1) throw std::invalid_argument("build_parametrisation: order must be >= 1");
    const bool forced = sys.has_forcing();
    const int Dm = sys.dim_mechanical();
    if (master.Y.size() != Dm || master.X.size() != Dm)
        throw std::invalid_argument("build_parametrisation: master mode must match the mechanical system");
    if (master.lambda.imag() <= 0.0)
        throw std::invalid_argument("build_parametrisation: master eigenvalue must rotate forward");

    const Mat Bm = sys.B().topLeftCorner(Dm, Dm);
    const Mat Am = sys.A().topLeftCorner(Dm, Dm);
    if (Bm.imag().cwiseAbs().maxCoeff() > 1e-12 * (1.0 + Bm.cwiseAbs().maxCoeff()) ||
        Am.imag().cwiseAbs().maxCoeff() > 1e-12 * (1.0 + Am.cwiseAbs().maxCoeff()))
        throw std::invalid_argument(
            "build_parametrisation: mechanical matrices must be real for conjugate pairing");

    Parametrisation par;
    par.style_ = opt.style;
    par.order_ = opt.order;
    par.order_na_ = opt.order_na < 0 ? opt.order : opt.order_na;
    par.d_ = forced ? 4 : 2;
    par.D_ = Dm;
    par.res_m_ = opt.res_m;
    par.res_n_ = opt.res_n;
    par.omega_ = forced ? sys.forcing().omega : 0.0;
    par.pivot_row_ = master.pivot_row;
    par.Y1_ = master.Y;
    par.X1_ = master.X;
    par.lambdas_ = {master.lambda, std::conj(master.lambda)};
    if (forced) {
        par.lambdas_.push_back(cplx(0.0, par.omega_));
        par.lambdas_.push_back(cplx(0.0, -par.omega_));
    }
    if (forced && par.order_na_ < 1)
        throw std::invalid_argument("build_parametrisation: forced runs need order_na >= 1");
    const int total = opt.total_cap >= 0 ? std::min(par.total_order(), opt.total_cap)
                                         : par.total_order();
    par.total_cap_ = total;
    par.table_ = MultiIndexTable(par.d_, total + 1);

    const auto resize_tables = [&](auto& t) {
        t.resize(static_cast<std::size_t>(total) + 1);
        for (int p = 0; p <= total; ++p) t[static_cast<std::size_t>(p)].resize(static_cast<std::size_t>(par.table_.count(p)));
    };
    resize_tables(par.W_);
    resize_tables(par.BW_);
    resize_tables(par.f_);
    resize_tables(par.sigma_);
    resize_tables(par.resonant_);
    par.active_.resize(static_cast<std::size_t>(total) + 1);
    for (int p = 0; p <= total; ++p)
        par.active_[static_cast<std::size_t>(p)].assign(static_cast<std::size_t>(par.table_.count(p)), 0);
    par.active_list_.resize(static_cast<std::size_t>(total) + 1);
    par.f_sparse_.resize(static_cast<std::size_t>(total) + 1);

    // Border data for the master pair (conjugates of a real pencil).
    std::vector<Vec> BY = {Bm * master.Y, Bm * master.Y.conjugate()};
    std::vector<Vec> XB = {(master.X.adjoint() * Bm).transpose(),
                           (master.X.conjugate().adjoint() * Bm).transpose()};

    const auto store = [&](int p, int k, const Vec& Wv, const Vec& fv, cplx sigma,
                           std::vector<int> resonant) {
        par.W_[static_cast<std::size_t>(p)][static_cast<std::size_t>(k)] = Wv;
        par.BW_[static_cast<std::size_t>(p)][static_cast<std::size_t>(k)] = Bm * Wv;
        par.f_[static_cast<std::size_t>(p)][static_cast<std::size_t>(k)] = fv;
        par.sigma_[static_cast<std::size_t>(p)][static_cast<std::size_t>(k)] = sigma;
        par.resonant_[static_cast<std::size_t>(p)][static_cast<std::size_t>(k)] = std::move(resonant);
        par.active_[static_cast<std::size_t>(p)][static_cast<std::size_t>(k)] = 1;
        par.active_list_[static_cast<std::size_t>(p)].push_back(k);
        for (int i = 0; i < 2; ++i)
            if (fv(i) != cplx(0.0, 0.0)) par.f_sparse_[static_cast<std::size_t>(p)].push_back({k, i, fv(i)});
    };

    // Order one: eigenvectors for the master pair, bordered force response for
    // the rotating coordinates.
    {
        MultiIndex e(static_cast<std::size_t>(par.d_), 0);
        e[0] = 1;
        Vec f1 = Vec::Zero(par.d_);
        f1(0) = master.lambda;
        store(1, par.table_.index_of(e), master.Y, f1, master.lambda, {0});

        e.assign(static_cast<std::size_t>(par.d_), 0);
        e[1] = 1;
        Vec f2 = Vec::Zero(par.d_);
        f2(1) = std::conj(master.lambda);
        store(1, par.table_.index_of(e), master.Y.conjugate(), f2, std::conj(master.lambda), {1});

        if (forced) {
            const Mat F = sys.forcing_columns();
            for (int col = 0; col < 2; ++col) {
                MultiIndex ef(static_cast<std::size_t>(par.d_), 0);
                ef[static_cast<std::size_t>(2 + col)] = 1;
                const cplx sigma = par.lambdas_[static_cast<std::size_t>(2 + col)];
                auto resonant = classify(sigma, par.lambdas_, opt.style, opt.resonance_tol);
                if (opt.forcing_in_reduced_dynamics &&
                    std::find(resonant.begin(), resonant.end(), col) == resonant.end())
                    resonant.insert(resonant.begin(), col);
                auto sol = solve_homological(sigma, F.col(col), resonant, Bm, Am, BY, XB,
                                             par.d_, opt.cond_limit);
                sol.f(2 + col) = sigma;
                store(1, par.table_.index_of(ef), sol.W, sol.f, sigma, std::move(resonant));
            }
        }
    }

    for (int p = 2; p <= total; ++p) {
        // Forcing exponents first ascending: the linear feed-through couples a
        // monomial to same-order ones with one forcing exponent fewer.
        std::vector<int> ks(static_cast<std::size_t>(par.table_.count(p)));
        std::iota(ks.begin(), ks.end(), 0);
        std::stable_sort(ks.begin(), ks.end(), [&](int ka, int kb) {
            return forcing_degree(par.table_.alpha(p, ka)) < forcing_degree(par.table_.alpha(p, kb));
        });
        for (int k : ks) {
            const auto& alpha = par.table_.alpha(p, k);
            if (alpha[0] + alpha[1] > opt.order || forcing_degree(alpha) > par.order_na_) continue;
            if (opt.total_cap >= 0 && p > opt.total_cap) continue;
            const cplx sigma = sigma_of(alpha, par.lambdas_);
            Vec R = assemble_residual(par, sys, p, k);
            auto resonant = classify(sigma, par.lambdas_, opt.style, opt.resonance_tol);
            auto sol = solve_homological(sigma, R, resonant, Bm, Am, BY, XB, par.d_, opt.cond_limit);
            store(p, k, sol.W, sol.f, sigma, std::move(resonant));
        }
    }
    return par;
}

void dump_coefficients(const Parametrisation& par, const std::string& path) {
    using nlohmann::json;
    json records = json::array();
    for (int p = 1; p <= par.total_order(); ++p) {
        for (int k = 0; k < par.table().count(p); ++k) {
            if (!par.active(p, k)) continue;
            json rec;
            rec["order"] = p;
            rec["alpha"] = par.table().alpha(p, k);
            json w = json::array();
            for (int i = 0; i < par.dim(); ++i) {
                w.push_back(par.W(p, k)(i).real());
                w.push_back(par.W(p, k)(i).imag());
            }
            rec["W"] = std::move(w);
            json fr = json::array();
            for (int i = 0; i < par.n_normal(); ++i) {
                fr.push_back(par.f(p, k)(i).real());
                fr.push_back(par.f(p, k)(i).imag());
            }
            rec["f"] = std::move(fr);
            rec["sigma"] = {par.sigma(p, k).real(), par.sigma(p, k).imag()};
            rec["resonant"] = par.resonant_set(p, k);
            records.push_back(std::move(rec));
        }
    }
    std::ofstream out(path);
    if (!out) throw std::runtime_error("dump_coefficients: cannot write " + path);
    out << records.dump(2) << "\n";
}

}  // namespace dpim
