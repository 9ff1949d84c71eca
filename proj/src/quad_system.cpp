#include "dpim/quad_system.hpp"

#include "condest.hpp"

#include <json.hpp>

#include <Eigen/LU>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace dpim {

QuadSystem::QuadSystem(Mat B, Mat A, std::vector<QuadEntry> Q, int n_physical, int n_algebraic)
    : QuadSystem(std::move(B), std::move(A), std::move(Q), n_physical, n_algebraic, 0) {}

QuadSystem::QuadSystem(Mat B, Mat A, std::vector<QuadEntry> Q, int n_physical, int n_algebraic,
                       int n_forcing)
    : B_(std::move(B)), A_(std::move(A)), Q_(std::move(Q)),
      n_physical_(n_physical), n_algebraic_(n_algebraic) {
    const int D = static_cast<int>(A_.rows());
    if (A_.cols() != D || B_.rows() != D || B_.cols() != D)
        throw std::invalid_argument("QuadSystem: A and B must be square of equal size");
    if (n_physical_ < 1 || n_algebraic_ < 0 || n_physical_ + n_algebraic_ + n_forcing != D)
        throw std::invalid_argument("QuadSystem: inconsistent physical/algebraic partition");

    labels_.assign(static_cast<std::size_t>(D), RowKind::physical);
    for (int i = n_physical_; i < n_physical_ + n_algebraic_; ++i)
        labels_[static_cast<std::size_t>(i)] = RowKind::algebraic;
    for (int i = n_physical_ + n_algebraic_; i < D; ++i)
        labels_[static_cast<std::size_t>(i)] = RowKind::forcing;

    for (const auto& e : Q_) {
        if (e.i < 0 || e.i >= D || e.j < 0 || e.j >= D || e.k < 0 || e.k >= D)
            throw std::invalid_argument("QuadSystem: quadratic entry index out of range");
    }

    // Algebraic rows must have an exactly zero left-hand side.
    for (int i = n_physical_; i < n_physical_ + n_algebraic_; ++i) {
        if (B_.row(i).cwiseAbs().sum() != 0.0)
            throw std::invalid_argument("QuadSystem: algebraic row has nonzero B entries");
    }

    Eigen::PartialPivLU<Mat> luA(A_);
    cond_A_ = detail::one_norm_condest(A_, luA);
    if (!std::isfinite(cond_A_) || cond_A_ > 1e14)
        throw std::invalid_argument("QuadSystem: A is numerically singular");

    if (n_physical_ > 0) {
        Mat Bp = B_.topLeftCorner(n_physical_, n_physical_);
        Eigen::PartialPivLU<Mat> luB(Bp);
        double condB = detail::one_norm_condest(Bp, luB);
        if (!std::isfinite(condB) || condB > 1e14)
            throw std::invalid_argument("QuadSystem: physical block of B is singular");
    }
}

const ForcingSpec& QuadSystem::forcing() const {
    if (!forcing_) throw std::logic_error("QuadSystem: no forcing present");
    return *forcing_;
}

Mat QuadSystem::forcing_columns() const {
    const int Dm = dim_mechanical();
    if (!has_forcing()) return Mat::Zero(Dm, 2);
    return A_.topRightCorner(Dm, 2);
}

QuadSystem QuadSystem::mechanical() const {
    if (!has_forcing()) return *this;
    const int Dm = dim_mechanical();
    std::vector<QuadEntry> q;
    for (const auto& e : Q_)
        if (e.i < Dm && e.j < Dm && e.k < Dm) q.push_back(e);
    return QuadSystem(B_.topLeftCorner(Dm, Dm), A_.topLeftCorner(Dm, Dm), std::move(q),
                      n_physical_, n_algebraic_);
}

Vec QuadSystem::eval_Q(const Vec& y1, const Vec& y2) const {
    if (y1.size() != dim() || y2.size() != dim())
        throw std::invalid_argument("eval_Q: dimension mismatch");
    Vec out = Vec::Zero(dim());
    for (const auto& e : Q_) out(e.i) += e.value * y1(e.j) * y2(e.k);
    return out;
}

Vec QuadSystem::eval_rhs(const Vec& y) const {
    if (y.size() != dim()) throw std::invalid_argument("eval_rhs: dimension mismatch");
    return A_ * y + eval_Q(y, y);
}

QuadSystem build_duffing(double omega, double xi, double h) {
    if (omega <= 0.0) throw std::invalid_argument("build_duffing: omega must be positive");
    if (xi < 0.0) throw std::invalid_argument("build_duffing: negative damping ratio");

    if (h == 0.0) {
        Mat B = Mat::Identity(2, 2);
        Mat A(2, 2);
        A << 0.0, 1.0,
             -omega * omega, -2.0 * xi * omega;
        return QuadSystem(B, A, {}, 2, 0);
    }

    // State (u, v, r) with the auxiliary r = u^2; the cubic becomes -h u r.
    Mat B = Mat::Zero(3, 3);
    B(0, 0) = 1.0;
    B(1, 1) = 1.0;
    Mat A = Mat::Zero(3, 3);
    A(0, 1) = 1.0;
    A(1, 0) = -omega * omega;
    A(1, 1) = -2.0 * xi * omega;
    A(2, 2) = 1.0;
    std::vector<QuadEntry> Q = {
        {1, 0, 2, cplx(-h / 2.0, 0.0)},
        {1, 2, 0, cplx(-h / 2.0, 0.0)},
        {2, 0, 0, cplx(-1.0, 0.0)},
    };
    return QuadSystem(std::move(B), std::move(A), std::move(Q), 2, 1);
}

QuadSystem build_two_dof(double omega1, double omega2, double xi1, double xi2,
                         double h1, double h2) {
    if (omega1 <= 0.0 || omega2 <= 0.0)
        throw std::invalid_argument("build_two_dof: frequencies must be positive");
    if (xi1 < 0.0 || xi2 < 0.0) throw std::invalid_argument("build_two_dof: negative damping ratio");

    if (h1 == 0.0 && h2 == 0.0) {
        Mat B = Mat::Identity(4, 4);
        Mat A = Mat::Zero(4, 4);
        A(0, 1) = 1.0;
        A(1, 0) = -omega1 * omega1;
        A(1, 1) = -2.0 * xi1 * omega1;
        A(2, 3) = 1.0;
        A(3, 2) = -omega2 * omega2;
        A(3, 3) = -2.0 * xi2 * omega2;
        return QuadSystem(B, A, {}, 4, 0);
    }

    // State (u1, v1, u2, v2, r) with r = u1^2. The cubics become
    // -h1 r u1 - 3 h2 r u2 in the first equation and -h2 r u1 in the second.
    Mat B = Mat::Zero(5, 5);
    for (int i = 0; i < 4; ++i) B(i, i) = 1.0;
    Mat A = Mat::Zero(5, 5);
    A(0, 1) = 1.0;
    A(1, 0) = -omega1 * omega1;
    A(1, 1) = -2.0 * xi1 * omega1;
    A(2, 3) = 1.0;
    A(3, 2) = -omega2 * omega2;
    A(3, 3) = -2.0 * xi2 * omega2;
    A(4, 4) = 1.0;
    std::vector<QuadEntry> Q = {
        {1, 0, 4, cplx(-h1 / 2.0, 0.0)},
        {1, 4, 0, cplx(-h1 / 2.0, 0.0)},
        {1, 2, 4, cplx(-1.5 * h2, 0.0)},
        {1, 4, 2, cplx(-1.5 * h2, 0.0)},
        {3, 0, 4, cplx(-h2 / 2.0, 0.0)},
        {3, 4, 0, cplx(-h2 / 2.0, 0.0)},
        {4, 0, 0, cplx(-1.0, 0.0)},
    };
    return QuadSystem(std::move(B), std::move(A), std::move(Q), 4, 1);
}

QuadSystem augment_forcing(const QuadSystem& sys, const ForcingSpec& forcing) {
    if (sys.has_forcing()) throw std::invalid_argument("augment_forcing: system already augmented");
    if (forcing.omega <= 0.0) throw std::invalid_argument("augment_forcing: omega must be positive");
    const int D = sys.dim();
    if (forcing.Fc.size() != D && forcing.Fc.size() != 0)
        throw std::invalid_argument("augment_forcing: Fc dimension mismatch");
    if (forcing.Fs.size() != D && forcing.Fs.size() != 0)
        throw std::invalid_argument("augment_forcing: Fs dimension mismatch");
    Vec Fc = forcing.Fc.size() == D ? forcing.Fc : Vec::Zero(D);
    Vec Fs = forcing.Fs.size() == D ? forcing.Fs : Vec::Zero(D);
    if (Fc.cwiseAbs().sum() == 0.0 && Fs.cwiseAbs().sum() == 0.0)
        throw std::invalid_argument("augment_forcing: both force distributions are zero");

    const cplx iw(0.0, forcing.omega);
    Mat B = Mat::Zero(D + 2, D + 2);
    B.topLeftCorner(D, D) = sys.B();
    B(D, D) = 1.0;
    B(D + 1, D + 1) = 1.0;

    Mat A = Mat::Zero(D + 2, D + 2);
    A.topLeftCorner(D, D) = sys.A();
    // Fc cos + Fs sin = F[.,0] e^{+i O t} + F[.,1] e^{-i O t}
    A.col(D).head(D) = 0.5 * forcing.kappa * (Fc - cplx(0.0, 1.0) * Fs);
    A.col(D + 1).head(D) = 0.5 * forcing.kappa * (Fc + cplx(0.0, 1.0) * Fs);
    A(D, D) = iw;
    A(D + 1, D + 1) = -iw;

    QuadSystem out(std::move(B), std::move(A), sys.Q(), sys.n_physical(), sys.n_algebraic(), 2);
    ForcingSpec stored = forcing;
    stored.Fc = Fc;
    stored.Fs = Fs;
    out.forcing_ = std::move(stored);
    return out;
}

namespace {

using nlohmann::json;

json number_to_json(const cplx& v) {
    if (v.imag() == 0.0) return v.real();
    return json::array({v.real(), v.imag()});
}

cplx json_to_number(const json& j) {
    if (j.is_number()) return cplx(j.get<double>(), 0.0);
    if (j.is_array() && j.size() == 2) return cplx(j[0].get<double>(), j[1].get<double>());
    throw std::invalid_argument("system file: expected number or [re, im] pair");
}

json matrix_to_json(const Mat& m) {
    json rows = json::array();
    for (int i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (int j = 0; j < m.cols(); ++j) row.push_back(number_to_json(m(i, j)));
        rows.push_back(std::move(row));
    }
    return rows;
}

Mat json_to_matrix(const json& j, int D) {
    Mat m(D, D);
    if (!j.is_array()) throw std::invalid_argument("system file: matrix must be an array");
    if (static_cast<int>(j.size()) == D && j[0].is_array() && static_cast<int>(j[0].size()) == D) {
        for (int i = 0; i < D; ++i)
            for (int k = 0; k < D; ++k) m(i, k) = json_to_number(j[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)]);
        return m;
    }
    if (static_cast<int>(j.size()) == D * D) {
        for (int i = 0; i < D; ++i)
            for (int k = 0; k < D; ++k) m(i, k) = json_to_number(j[static_cast<std::size_t>(i * D + k)]);
        return m;
    }
    throw std::invalid_argument("system file: matrix has wrong shape");
}

json vector_to_json(const Vec& v) {
    json out = json::array();
    for (int i = 0; i < v.size(); ++i) out.push_back(number_to_json(v(i)));
    return out;
}

Vec json_to_vector(const json& j, int D) {
    if (!j.is_array() || static_cast<int>(j.size()) != D)
        throw std::invalid_argument("system file: vector has wrong length");
    Vec v(D);
    for (int i = 0; i < D; ++i) v(i) = json_to_number(j[static_cast<std::size_t>(i)]);
    return v;
}

}  // namespace

QuadSystem load_system(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_system: cannot open " + path);
    json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw std::runtime_error("load_system: malformed JSON in " + path + ": " + e.what());
    }
    const int Dp = j.at("D_p").get<int>();
    const int Da = j.at("D_a").get<int>();
    const int D = Dp + Da;
    Mat B = json_to_matrix(j.at("B"), D);
    Mat A = json_to_matrix(j.at("A"), D);
    std::vector<QuadEntry> Q;
    if (j.contains("Q")) {
        for (const auto& t : j.at("Q")) {
            if (!t.is_array() || t.size() != 4)
                throw std::invalid_argument("system file: Q entries must be [i, j, k, value]");
            Q.push_back({t[0].get<int>(), t[1].get<int>(), t[2].get<int>(), json_to_number(t[3])});
        }
    }
    QuadSystem sys(std::move(B), std::move(A), std::move(Q), Dp, Da);
    if (j.contains("forcing")) {
        const auto& f = j.at("forcing");
        ForcingSpec spec;
        spec.Fc = f.contains("Fc") ? json_to_vector(f.at("Fc"), D) : Vec::Zero(D);
        spec.Fs = f.contains("Fs") ? json_to_vector(f.at("Fs"), D) : Vec::Zero(D);
        spec.omega = f.at("omega").get<double>();
        spec.kappa = f.at("kappa").get<double>();
        return augment_forcing(sys, spec);
    }
    return sys;
}

void save_system(const QuadSystem& sys, const std::string& path) {
    const QuadSystem mech = sys.mechanical();
    json j;
    j["D_p"] = mech.n_physical();
    j["D_a"] = mech.n_algebraic();
    j["B"] = matrix_to_json(mech.B());
    j["A"] = matrix_to_json(mech.A());
    json q = json::array();
    for (const auto& e : mech.Q())
        q.push_back(json::array({e.i, e.j, e.k, number_to_json(e.value)}));
    j["Q"] = std::move(q);
    if (sys.has_forcing()) {
        const auto& f = sys.forcing();
        j["forcing"] = {{"Fc", vector_to_json(f.Fc)},
                        {"Fs", vector_to_json(f.Fs)},
                        {"omega", f.omega},
                        {"kappa", f.kappa}};
    }
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_system: cannot write " + path);
    out << j.dump(2) << "\n";
}

}  // namespace dpim
