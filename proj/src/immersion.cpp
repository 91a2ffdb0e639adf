#include "hstori/immersion.hpp"

#include <cmath>
#include <fstream>

#include "hstori/errors.hpp"

namespace hstori {

namespace {

using CArr = Eigen::ArrayXXcd;
using RArr = Eigen::ArrayXXd;

inline double gdot(const Eigen::Matrix2cd& H, const Eigen::Vector2cd& a,
                   const Eigen::Vector2cd& b) {
    Complex s = 0.0;
    for (int k = 0; k < 2; ++k)
        for (int l = 0; l < 2; ++l) s += H(k, l) * a(k) * std::conj(b(l));
    return 2.0 * s.real();
}

inline double omdot(const Eigen::Matrix2cd& H, const Eigen::Vector2cd& a,
                    const Eigen::Vector2cd& b) {
    Complex s = 0.0;
    for (int k = 0; k < 2; ++k)
        for (int l = 0; l < 2; ++l) s += H(k, l) * a(k) * std::conj(b(l));
    return -2.0 * s.imag();
}

} // namespace

NormalField ansatz_X(const SpectralField& u, const SpectralField& v, const Radii& r) {
    SpectralField u1 = u.deriv(0), u2 = u.deriv(1);
    SpectralField v1 = v.deriv(0), v2 = v.deriv(1);
    NormalField X;
    X.x1 = (1.0 / (r.r1 * r.r1)) * (v1 + r.eps(0, 1) * u2);
    X.x2 = (1.0 / (r.r2 * r.r2)) * (v2 + r.eps(1, 0) * u1);
    return X;
}

PointGrid embed(const Radii& r, const NormalField& X) {
    const int n = X.x1.n();
    PointGrid g;
    g.r = r;
    g.z1.resize(n, n);
    g.z2.resize(n, n);
    const double h = 2.0 * M_PI / n;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            double a1 = 1.0 + X.x1(i, j), a2 = 1.0 + X.x2(i, j);
            if (std::abs(a1) < 0.1 || std::abs(a2) < 0.1)
                throw ImmersionDegeneracyError("embedding factor |1 + X^k| below 0.1");
            g.z1(i, j) = r.r1 * a1 * std::polar(1.0, i * h);
            g.z2(i, j) = r.r2 * a2 * std::polar(1.0, j * h);
        }
    return g;
}

ImmersionState induced_geometry(const PointGrid& points,
                                const PotentialPolynomial& potential) {
    const int n = points.n();
    ImmersionState st;
    st.r = points.r;
    st.points = points;

    for (int k = 0; k < 2; ++k) {
        st.E[k][0] = cgrid_deriv(points.z1, k);
        st.E[k][1] = cgrid_deriv(points.z2, k);
    }
    // flat second derivatives of the embedding
    std::array<std::array<std::array<CArr, 2>, 2>, 2> d2; // d2[j][k][m]
    for (int j = 0; j < 2; ++j)
        for (int k = j; k < 2; ++k) {
            d2[j][k][0] = cgrid_deriv(st.E[k][0], j);
            d2[j][k][1] = cgrid_deriv(st.E[k][1], j);
            if (k != j) d2[k][j] = d2[j][k];
        }

    for (auto& row : st.h)
        for (auto& a : row) a.resize(n, n);
    for (auto& row : st.hinv)
        for (auto& a : row) a.resize(n, n);
    for (auto& bj : st.B)
        for (auto& bk : bj)
            for (auto& a : bk) a.resize(n, n);
    for (auto& a : st.H) a.resize(n, n);
    st.vol_density.resize(n, n);
    RArr ompb(n, n);

    JetEvaluator jets(potential, 3);

    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            PotentialJet jet = jets.at(points.z1(i, j), points.z2(i, j));
            Eigen::Matrix2cd Hm = jet.hermitian_block();
            if (!(Hm(0, 0).real() > 0.0) ||
                !((Hm(0, 0) * Hm(1, 1) - Hm(0, 1) * Hm(1, 0)).real() > 0.0))
                throw DegenerateMetricError("ambient metric degenerate along the grid");
            Eigen::Matrix2cd Hinv = Hm.inverse();

            // ambient Christoffels Gamma^m_{pq} = sum_s conj(Hinv(m,s)) F_{,pq sbar}
            Complex gam[2][2][2];
            for (int p = 0; p < 2; ++p)
                for (int q = 0; q < 2; ++q) {
                    int a = (p == 0) + (q == 0), b = (p == 1) + (q == 1);
                    for (int m = 0; m < 2; ++m) {
                        Complex s = 0.0;
                        for (int u = 0; u < 2; ++u)
                            s += std::conj(Hinv(m, u)) *
                                 jet.d(a, b, (u == 0) ? 1 : 0, (u == 1) ? 1 : 0);
                        gam[m][p][q] = s;
                    }
                }

            Eigen::Vector2cd E[2] = {
                Eigen::Vector2cd(st.E[0][0](i, j), st.E[0][1](i, j)),
                Eigen::Vector2cd(st.E[1][0](i, j), st.E[1][1](i, j))};

            Eigen::Matrix2d hm;
            for (int k = 0; k < 2; ++k)
                for (int l = 0; l < 2; ++l) hm(k, l) = gdot(Hm, E[k], E[l]);
            double det = hm.determinant();
            if (!(hm(0, 0) > 0.0) || !(det > 0.0))
                throw DegenerateMetricError("induced metric degenerate at a grid node");
            Eigen::Matrix2d hminv = hm.inverse();
            for (int k = 0; k < 2; ++k)
                for (int l = 0; l < 2; ++l) {
                    st.h[k][l](i, j) = hm(k, l);
                    st.hinv[k][l](i, j) = hminv(k, l);
                }
            st.vol_density(i, j) = std::sqrt(det);
            ompb(i, j) = omdot(Hm, E[0], E[1]);

            // totally-real check: [E1 E2 JE1 JE2] as real 4x4
            Eigen::Matrix4d TR;
            for (int c = 0; c < 2; ++c) {
                Eigen::Vector2cd v = E[c], jv = Complex(0, 1) * E[c];
                TR.col(c) << v(0).real(), v(1).real(), v(0).imag(), v(1).imag();
                TR.col(c + 2) << jv(0).real(), jv(1).real(), jv(0).imag(), jv(1).imag();
            }
            Eigen::JacobiSVD<Eigen::Matrix4d> svd(TR);
            if (svd.singularValues().minCoeff() < 1e-6)
                throw TotallyRealViolationError("tangent plane not totally real");

            for (int jj = 0; jj < 2; ++jj)
                for (int kk = 0; kk < 2; ++kk) {
                    Eigen::Vector2cd W(d2[jj][kk][0](i, j), d2[jj][kk][1](i, j));
                    for (int m = 0; m < 2; ++m) {
                        Complex s = 0.0;
                        for (int p = 0; p < 2; ++p)
                            for (int q = 0; q < 2; ++q)
                                s += gam[m][p][q] * E[jj](p) * E[kk](q);
                        W(m) += s;
                    }
                    // normal projection against the tangent plane in g
                    Eigen::Vector2d rhs(gdot(Hm, W, E[0]), gdot(Hm, W, E[1]));
                    Eigen::Vector2d a = hminv * rhs;
                    Eigen::Vector2cd Wp = W - a(0) * E[0] - a(1) * E[1];
                    for (int ll = 0; ll < 2; ++ll)
                        st.B[jj][kk][ll](i, j) = omdot(Hm, E[ll], Wp);
                }

            for (int ll = 0; ll < 2; ++ll) {
                double s = 0.0;
                for (int jj = 0; jj < 2; ++jj)
                    for (int kk = 0; kk < 2; ++kk)
                        s += hminv(jj, kk) * st.B[jj][kk][ll](i, j);
                st.H[ll](i, j) = s;
            }
        }

    st.omega_pullback = SpectralField(std::move(ompb));

    // Christoffels of the induced metric via spectral derivatives of h
    std::array<std::array<std::array<RArr, 2>, 2>, 2> dh; // dh[k][l][m] = d_m h_kl
    for (int k = 0; k < 2; ++k)
        for (int l = 0; l < 2; ++l)
            for (int m = 0; m < 2; ++m)
                dh[k][l][m] = SpectralField(st.h[k][l]).deriv(m).values();
    for (int s = 0; s < 2; ++s)
        for (int k = 0; k < 2; ++k)
            for (int l = 0; l < 2; ++l) {
                RArr acc = RArr::Zero(n, n);
                for (int q = 0; q < 2; ++q)
                    acc += st.hinv[s][q] * (dh[q][k][l] + dh[q][l][k] - dh[k][l][q]);
                st.gamma[s][k][l] = 0.5 * acc;
            }
    return st;
}

SpectralField div_H(const ImmersionState& state) {
    const int n = state.n();
    std::array<RArr, 2> dH[2]; // dH[l][m] = d_m H_l
    for (int l = 0; l < 2; ++l)
        for (int m = 0; m < 2; ++m)
            dH[l][m] = SpectralField(state.H[l]).deriv(m).values();
    RArr acc = RArr::Zero(n, n);
    for (int l = 0; l < 2; ++l)
        for (int m = 0; m < 2; ++m) {
            RArr t = dH[l][m];
            for (int s = 0; s < 2; ++s) t -= state.gamma[s][l][m] * state.H[s];
            acc += state.hinv[l][m] * t;
        }
    // H is stored in the paper's normalization (flat value +1); the one-form
    // dual to J Hvec is its negative, hence the sign.
    return SpectralField(RArr(-acc));
}

SpectralField pullback_omega(const PointGrid& points, const PotentialPolynomial& potential) {
    const int n = points.n();
    CArr E1[2] = {cgrid_deriv(points.z1, 0), cgrid_deriv(points.z2, 0)};
    CArr E2[2] = {cgrid_deriv(points.z1, 1), cgrid_deriv(points.z2, 1)};
    JetEvaluator jets(potential, 2);
    RArr out(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            PotentialJet jet = jets.at(points.z1(i, j), points.z2(i, j));
            Eigen::Matrix2cd Hm = jet.hermitian_block();
            out(i, j) = omdot(Hm, Eigen::Vector2cd(E1[0](i, j), E1[1](i, j)),
                              Eigen::Vector2cd(E2[0](i, j), E2[1](i, j)));
        }
    return SpectralField(std::move(out));
}

ImmersionState phi_state(const SpectralField& u, const SpectralField& v,
                         const PotentialPolynomial& potential, const Radii& r) {
    PointGrid pts = embed(r, ansatz_X(u, v, r));
    return induced_geometry(pts, potential);
}

std::pair<SpectralField, SpectralField> phi(const SpectralField& u, const SpectralField& v,
                                            const PotentialPolynomial& potential,
                                            const Radii& r) {
    ImmersionState st = phi_state(u, v, potential, r);
    return {st.omega_pullback, div_H(st)};
}

double volume(const PointGrid& points, const PotentialPolynomial& potential) {
    ImmersionState st = induced_geometry(points, potential);
    return SpectralField(Eigen::ArrayXXd(st.vol_density)).integrate();
}

std::pair<SpectralField, SpectralField> linearize_phi_fd(
    const SpectralField& u0, const SpectralField& v0, const PotentialPolynomial& potential,
    const Radii& r, const SpectralField& du, const SpectralField& dv, double step) {
    if (step < 1e-6 || step > 1e-3)
        throw ValidationError("linearize_phi_fd step outside [1e-6, 1e-3]");
    auto plus = phi(u0 + step * du, v0 + step * dv, potential, r);
    auto minus = phi(u0 - step * du, v0 - step * dv, potential, r);
    double inv = 1.0 / (2.0 * step);
    return {inv * (plus.first - minus.first), inv * (plus.second - minus.second)};
}

void export_state_csv(const ImmersionState& state, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write " + path);
    out << "theta1,theta2,re_z1,im_z1,re_z2,im_z2,H1,H2,divH,omega_pullback\n";
    SpectralField dh = div_H(state);
    const int n = state.n();
    const double h = 2.0 * M_PI / n;
    out.precision(17);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            out << i * h << ',' << j * h << ',' << state.points.z1(i, j).real() << ','
                << state.points.z1(i, j).imag() << ',' << state.points.z2(i, j).real()
                << ',' << state.points.z2(i, j).imag() << ',' << state.H[0](i, j) << ','
                << state.H[1](i, j) << ',' << dh(i, j) << ','
                << state.omega_pullback(i, j) << '\n';
        }
}

} // namespace hstori
