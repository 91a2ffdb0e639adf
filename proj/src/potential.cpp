#include "hstori/potential.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

#include "hstori/errors.hpp"

namespace hstori {

namespace {

inline int idx(int a, int b, int c, int d) { return ((a * 5 + b) * 5 + c) * 5 + d; }

Polynomial quadratic_part() {
    // 1/2 ||z||^2 = 1/2 (z1 zb1 + z2 zb2)
    Polynomial q;
    q.add_term({1, 0, 1, 0}, 0.5);
    q.add_term({0, 1, 0, 1}, 0.5);
    return q;
}

void check_unitary(const Eigen::Matrix2cd& U) {
    Eigen::Matrix2cd e = U.adjoint() * U - Eigen::Matrix2cd::Identity();
    if (e.cwiseAbs().maxCoeff() > 1e-12)
        throw InvalidMotionError("motion matrix is not unitary to 1e-12");
}

} // namespace

PotentialPolynomial PotentialPolynomial::euclidean() {
    PotentialPolynomial p;
    p.rho = 0.0;
    return p;
}

PotentialPolynomial PotentialPolynomial::from_hat(Polynomial fhat, double rho) {
    PotentialPolynomial p;
    p.hat = std::move(fhat);
    p.rho = rho;
    p.normal_form = p.hat.min_total_degree() >= 4;
    return p;
}

Polynomial PotentialPolynomial::full() const {
    Polynomial f = quadratic_part();
    f += lower;
    f += (rho * rho) * hat;
    return f;
}

bool PotentialPolynomial::check_reality(double tol) const {
    return hat.is_real(tol) && lower.is_real(tol);
}

PotentialJet::PotentialJet(Complex z1, Complex z2, int order)
    : z1_(z1), z2_(z2), order_(order) {
    if (order > kMaxOrder)
        throw UnsupportedOrderError("jet order capped at 4");
    if (order < 2) throw ValidationError("jet order must be at least 2");
}

Complex PotentialJet::d(int a, int b, int c, int d_) const {
    if (a + b + c + d_ > order_)
        throw UnsupportedOrderError("requested derivative exceeds jet order");
    return table_[idx(a, b, c, d_)];
}

Complex& PotentialJet::at(int a, int b, int c, int d_) { return table_[idx(a, b, c, d_)]; }

Eigen::Matrix2cd PotentialJet::hermitian_block() const {
    Eigen::Matrix2cd h;
    h(0, 0) = d(1, 0, 1, 0);
    h(0, 1) = d(1, 0, 0, 1);
    h(1, 0) = d(0, 1, 1, 0);
    h(1, 1) = d(0, 1, 0, 1);
    return h;
}

double FrameParams::norm() const {
    double s = 0.0;
    for (double t : tau) s += t * t;
    return std::sqrt(s);
}

Eigen::Matrix2cd FrameParams::unitary() const {
    // A = tau5 K1 + tau6 K2 is Hermitian with A^2 = (tau5^2+tau6^2) Id, so
    // exp(iA) = cos(s) Id + i sinc(s) A.
    const Complex I(0.0, 1.0);
    double t5 = tau[4], t6 = tau[5];
    double s = std::sqrt(t5 * t5 + t6 * t6);
    Eigen::Matrix2cd A;
    A << 0.0, Complex(t5, t6), Complex(t5, -t6), 0.0;
    double sinc = (s < 1e-14) ? 1.0 : std::sin(s) / s;
    return std::cos(s) * Eigen::Matrix2cd::Identity() + I * sinc * A;
}

Eigen::Vector2cd FrameParams::translation() const {
    return Eigen::Vector2cd(Complex(tau[0], tau[1]), Complex(tau[2], tau[3]));
}

PotentialJet eval_jet(const PotentialPolynomial& potential, Complex z1, Complex z2,
                      int order) {
    if (!potential.check_reality())
        throw ValidationError("potential violates the reality invariant");
    PotentialJet jet(z1, z2, order);
    Polynomial f = potential.full();
    for (int a = 0; a <= order; ++a)
        for (int b = 0; a + b <= order; ++b)
            for (int c = 0; a + b + c <= order; ++c)
                for (int d = 0; a + b + c + d <= order; ++d)
                    jet.at(a, b, c, d) = f.derivative({a, b, c, d}).eval(z1, z2);
    return jet;
}

MetricData metric_at(const PotentialJet& jet) {
    MetricData m;
    m.h = jet.hermitian_block();
    // Real coordinate basis (x1, x2, y1, y2): holomorphic components of the
    // basis vectors are e_k and i e_k.
    const Complex I(0.0, 1.0);
    Eigen::Vector2cd basis[4] = {
        Eigen::Vector2cd(1, 0), Eigen::Vector2cd(0, 1),
        Eigen::Vector2cd(I, 0.0), Eigen::Vector2cd(0.0, I)};
    for (int p = 0; p < 4; ++p)
        for (int q = 0; q < 4; ++q) {
            Complex s = 0.0;
            for (int k = 0; k < 2; ++k)
                for (int l = 0; l < 2; ++l)
                    s += m.h(k, l) * basis[p](k) * std::conj(basis[q](l));
            m.g(p, q) = 2.0 * s.real();
            m.omega(p, q) = -2.0 * s.imag();
        }
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2cd> es(m.h);
    if (es.eigenvalues().minCoeff() <= 0.0)
        throw DegenerateMetricError("metric block F_{,k lbar} is not positive definite");
    return m;
}

PotentialPolynomial apply_motion(const PotentialPolynomial& potential,
                                 const Eigen::Matrix2cd& U, const Eigen::Vector2cd& tau) {
    check_unitary(U);
    PotentialPolynomial out;
    out.rho = potential.rho;
    out.hat = potential.hat.compose_affine(U, tau);
    out.lower = potential.lower.compose_affine(U, tau);
    // 1/2||Uz + tau||^2 - 1/2||z||^2 = Re(tau* U z) + 1/2||tau||^2
    Eigen::Vector2cd w = U.adjoint() * tau; // Re(tau* U z) = Re(sum conj(w_k) z_k)
    Polynomial lin;
    for (int k = 0; k < 2; ++k) {
        lin.add_term(k == 0 ? Deg{1, 0, 0, 0} : Deg{0, 1, 0, 0}, 0.5 * std::conj(w(k)));
        lin.add_term(k == 0 ? Deg{0, 0, 1, 0} : Deg{0, 0, 0, 1}, 0.5 * w(k));
    }
    lin.add_term({0, 0, 0, 0}, 0.5 * tau.squaredNorm());
    out.lower += lin;
    out.lower.prune(0.0);
    out.normal_form = out.lower.empty() && out.hat.min_total_degree() >= 4;
    return out;
}

PotentialPolynomial rescale_potential(const PotentialPolynomial& potential, double rho) {
    if (!(rho > 0.0)) throw ValidationError("rescale requires rho > 0");
    if (!potential.normal_form)
        throw ValidationError("rescale requires a normal-form potential");
    PotentialPolynomial out = potential;
    out.hat = potential.hat.scale_by_degree(rho, 4);
    out.rho = potential.rho * rho;
    return out;
}

CurvatureData complex_curvature(const PotentialPolynomial& potential, Complex z1,
                                Complex z2) {
    PotentialJet jet = eval_jet(potential, z1, z2, 4);
    Eigen::Matrix2cd h = jet.hermitian_block();
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2cd> es(h);
    if (es.eigenvalues().minCoeff() <= 0.0)
        throw DegenerateMetricError("degenerate metric at curvature base point");
    Eigen::Matrix2cd hinv = h.inverse();

    // Derivative accessors in holomorphic/antiholomorphic index notation.
    auto d4 = [&](int k, int l, int m, int n) {
        // F_{,k lbar m nbar}
        int a = (k == 0) + (m == 0), b = (k == 1) + (m == 1);
        int c = (l == 0) + (n == 0), d_ = (l == 1) + (n == 1);
        return jet.d(a, b, c, d_);
    };
    auto d3h = [&](int k, int m, int u) {
        // F_{,k m ubar}: two holomorphic, one antiholomorphic
        int a = (k == 0) + (m == 0), b = (k == 1) + (m == 1);
        int c = (u == 0), d_ = (u == 1);
        return jet.d(a, b, c, d_);
    };
    auto d3a = [&](int v, int l, int n) {
        // F_{,v lbar nbar}: one holomorphic, two antiholomorphic
        int a = (v == 0), b = (v == 1);
        int c = (l == 0) + (n == 0), d_ = (l == 1) + (n == 1);
        return jet.d(a, b, c, d_);
    };

    CurvatureData out;
    out.ricci.setZero();
    for (int k = 0; k < 2; ++k)
        for (int l = 0; l < 2; ++l)
            for (int m = 0; m < 2; ++m)
                for (int n = 0; n < 2; ++n) {
                    Complex corr = 0.0;
                    for (int u = 0; u < 2; ++u)
                        for (int v = 0; v < 2; ++v)
                            corr += hinv(u, v) * d3h(k, m, u) * d3a(v, l, n);
                    out.R[k][l][m][n] = d4(k, l, m, n) - corr;
                }
    for (int k = 0; k < 2; ++k)
        for (int l = 0; l < 2; ++l) {
            Complex s = 0.0;
            for (int m = 0; m < 2; ++m) s += out.R[k][l][m][m];
            out.ricci(k, l) = s;
        }
    return out;
}

double f_r(const PotentialPolynomial& potential, const FrameParams& frame, const Radii& r) {
    if (frame.norm() > 1.0)
        throw ValidationError("frame parameters outside chart validity radius");
    PotentialPolynomial moved =
        apply_motion(potential, frame.unitary(), frame.translation());
    moved.rho = 1.0; // the frame functional sees the unscaled perturbation
    // Leading-order complex Ricci combination: the pure fourth-derivative
    // terms of the moved perturbation at the origin.  The third-derivative
    // curvature corrections are quadratic in the perturbation and belong to
    // the higher-order remainder, so they are deliberately excluded.
    PotentialJet jet = eval_jet(moved, 0.0, 0.0, 4);
    const double f1111 = jet.d(2, 0, 2, 0).real();
    const double f1212 = jet.d(1, 1, 1, 1).real();
    const double f2222 = jet.d(0, 2, 0, 2).real();
    return r.r1 * r.r1 * (f1111 + f1212) + r.r2 * r.r2 * (f1212 + f2222);
}

std::array<double, 6> f_r_gradient(const PotentialPolynomial& potential,
                                   const FrameParams& frame, const Radii& r) {
    const double h = 1e-5;
    std::array<double, 6> g{};
    for (int i = 0; i < 6; ++i) {
        FrameParams fp = frame, fm = frame;
        fp.tau[i] += h;
        fm.tau[i] -= h;
        g[i] = (f_r(potential, fp, r) - f_r(potential, fm, r)) / (2.0 * h);
    }
    return g;
}

JetEvaluator::JetEvaluator(const PotentialPolynomial& potential, int order)
    : order_(order) {
    if (order > PotentialJet::kMaxOrder)
        throw UnsupportedOrderError("jet order capped at 4");
    Polynomial f = potential.full();
    for (int a = 0; a <= order; ++a)
        for (int b = 0; a + b <= order; ++b)
            for (int c = 0; a + b + c <= order; ++c)
                for (int d = 0; a + b + c + d <= order; ++d) {
                    Polynomial p = f.derivative({a, b, c, d});
                    derivs_[idx(a, b, c, d)] = p;
                    if (!p.empty()) active_[n_active_++] = {a, b, c, d};
                }
}

PotentialJet JetEvaluator::at(Complex z1, Complex z2) const {
    PotentialJet jet(z1, z2, order_);
    for (int i = 0; i < n_active_; ++i) {
        const auto& o = active_[i];
        jet.at(o[0], o[1], o[2], o[3]) =
            derivs_[idx(o[0], o[1], o[2], o[3])].eval(z1, z2);
    }
    return jet;
}

PotentialPolynomial load_potential(const std::string& path, double* asymmetry_out) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open potential file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw ValidationError("malformed potential file " + path + ": " + e.what());
    }
    Polynomial hat;
    for (const auto& t : j.value("terms", nlohmann::json::array())) {
        auto deg = t.at("deg");
        if (deg.size() != 4) throw ValidationError("term degree must have 4 entries");
        Deg d{deg[0].get<int>(), deg[1].get<int>(), deg[2].get<int>(), deg[3].get<int>()};
        for (int e : d)
            if (e < 0) throw ValidationError("negative exponent in potential term");
        hat.add_term(d, Complex(t.value("re", 0.0), t.value("im", 0.0)));
    }
    double asym = hat.symmetrize();
    if (asymmetry_out) *asymmetry_out = asym;
    PotentialPolynomial p = PotentialPolynomial::from_hat(std::move(hat));
    p.rho = j.value("rho", 1.0);
    if (p.rho < 0.0) throw ValidationError("rho must be nonnegative");
    return p;
}

void save_potential(const PotentialPolynomial& p, const std::string& path) {
    nlohmann::json j;
    j["rho"] = p.rho;
    auto terms = nlohmann::json::array();
    for (const auto& [d, c] : p.hat.terms()) {
        terms.push_back({{"deg", {d[0], d[1], d[2], d[3]}},
                         {"re", c.real()},
                         {"im", c.imag()}});
    }
    j["terms"] = terms;
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write potential file: " + path);
    out << j.dump(2) << "\n";
}

} // namespace hstori
