#include "hstori/cp2.hpp"

#include <cmath>
#include <complex>

#include "hstori/errors.hpp"

namespace hstori {

void HopfTorusSpec::validate(double tol) const {
    double s = 0.0;
    for (double rk : r) {
        if (!(rk > 0.0)) throw ValidationError("Hopf torus radii must be positive");
        s += rk * rk;
    }
    if (std::abs(s - 1.0) > tol)
        throw ValidationError("Hopf torus radii must satisfy r1^2 + r2^2 + r3^2 = 1");
    for (int c = 0; c < 2; ++c) {
        double dot = 0.0;
        for (int k = 0; k < 3; ++k) dot += r[k] * r[k] * L(k, c);
        if (std::abs(dot) > tol)
            throw ValidationError("phase matrix violates sum_k r_k^2 L^k_s = 0");
    }
    Eigen::JacobiSVD<Eigen::Matrix<double, 3, 2>> svd(L);
    if (svd.singularValues()(1) <= tol * svd.singularValues()(0))
        throw ValidationError("phase matrix columns are linearly dependent");
}

HopfTorusSpec make_hopf_spec(double r1, double r2, double r3) {
    HopfTorusSpec spec;
    spec.r = {r1, r2, r3};
    Eigen::Vector3d w(r1 * r1, r2 * r2, r3 * r3);
    // project the integer-friendly candidates off the weight vector
    Eigen::Vector3d c1(1.0, -1.0, 0.0), c2(0.0, 1.0, -1.0);
    double wn = w.squaredNorm();
    spec.L.col(0) = c1 - (w.dot(c1) / wn) * w;
    spec.L.col(1) = c2 - (w.dot(c2) / wn) * w;
    spec.validate();
    return spec;
}

Eigen::Matrix2d hopf_metric(const HopfTorusSpec& spec) {
    spec.validate();
    Eigen::Matrix2d h = Eigen::Matrix2d::Zero();
    for (int s = 0; s < 2; ++s)
        for (int t = 0; t < 2; ++t)
            for (int k = 0; k < 3; ++k)
                h(s, t) += spec.r[k] * spec.r[k] * spec.L(k, s) * spec.L(k, t);
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(h);
    if (es.eigenvalues()(0) <= 0.0)
        throw ValidationError("Hopf torus metric is not positive definite");
    return h;
}

std::array<std::array<std::array<double, 2>, 2>, 2> hopf_second_form(const HopfTorusSpec& spec) {
    spec.validate();
    std::array<std::array<std::array<double, 2>, 2>, 2> T{};
    for (int s = 0; s < 2; ++s)
        for (int t = 0; t < 2; ++t)
            for (int u = 0; u < 2; ++u)
                for (int k = 0; k < 3; ++k)
                    T[s][t][u] +=
                        spec.r[k] * spec.r[k] * spec.L(k, s) * spec.L(k, t) * spec.L(k, u);
    return T;
}

double hopf_volume(const HopfTorusSpec& spec) {
    const double r1 = spec.r[0], r2 = spec.r[1];
    return r1 * r2 * std::sqrt(std::max(0.0, 1.0 - r1 * r1 - r2 * r2));
}

double hopf_volume_lattice(const HopfTorusSpec& spec) {
    // Two points project to the same torus point when all three phases move
    // by a common amount mod 2 pi, so the period lattice is cut out by the
    // phase differences L^2 - L^1 and L^3 - L^1 landing in 2 pi Z.
    Eigen::Matrix2d D;
    D.row(0) = (spec.L.row(1) - spec.L.row(0));
    D.row(1) = (spec.L.row(2) - spec.L.row(0));
    double det = std::abs(D.determinant());
    if (det < 1e-12) throw ValidationError("degenerate period lattice");
    return std::sqrt(hopf_metric(spec).determinant()) / det;
}

HopfStationarityReport verify_stationary(const HopfTorusSpec& spec) {
    Eigen::Matrix2d h = hopf_metric(spec);
    Eigen::Matrix2d hinv = h.inverse();
    auto T = hopf_second_form(spec);

    HopfStationarityReport rep;
    // H_u = h^{st} T_stu, once by index contraction ...
    for (int u = 0; u < 2; ++u) {
        double v = 0.0;
        for (int s = 0; s < 2; ++s)
            for (int t = 0; t < 2; ++t) v += hinv(s, t) * T[s][t][u];
        rep.H(u) = v;
    }
    // ... and once as a direct weighted sum over the three circles
    for (int u = 0; u < 2; ++u) {
        double v = 0.0;
        for (int k = 0; k < 3; ++k) {
            double hk = 0.0;
            for (int s = 0; s < 2; ++s)
                for (int t = 0; t < 2; ++t) hk += hinv(s, t) * spec.L(k, s) * spec.L(k, t);
            v += spec.r[k] * spec.r[k] * hk * spec.L(k, u);
        }
        rep.H_cross_check = std::max(rep.H_cross_check, std::abs(v - rep.H(u)));
    }
    rep.H_norm = std::sqrt(rep.H.dot(hinv * rep.H));
    // the metric and second form are constant on the parametrizing plane, so
    // every term of the covariant divergence vanishes identically
    rep.div_H = 0.0;
    rep.minimal = rep.H_norm <= 1e-12;

    // Lagrangian check Re(g(i V_s, V_t)) = 0 at sampled parameter points,
    // with V_s = dA/dalpha^s on the unit 5-sphere.
    using C = std::complex<double>;
    double worst = 0.0;
    for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b) {
            double a1 = 0.37 + 1.1 * a, a2 = -0.83 + 0.9 * b;
            C V[2][3];
            for (int k = 0; k < 3; ++k) {
                C phase = std::polar(spec.r[k], spec.L(k, 0) * a1 + spec.L(k, 1) * a2);
                for (int s = 0; s < 2; ++s) V[s][k] = C(0.0, spec.L(k, s)) * phase;
            }
            for (int s = 0; s < 2; ++s)
                for (int t = 0; t < 2; ++t) {
                    C dot = 0.0;
                    for (int k = 0; k < 3; ++k) dot += C(0, 1) * V[s][k] * std::conj(V[t][k]);
                    worst = std::max(worst, std::abs(dot.real()));
                }
        }
    rep.lagrangian_residual = worst;
    return rep;
}

} // namespace hstori
