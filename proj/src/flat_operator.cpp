#include "hstori/flat_operator.hpp"

#include <cmath>

#include "hstori/errors.hpp"

namespace hstori {

namespace {

bool is_kernel_mode(int m1, int m2) {
    return (std::abs(m1) == 1 && m2 == 0) || (m1 == 0 && std::abs(m2) == 1) ||
           (m1 == 1 && m2 == -1) || (m1 == -1 && m2 == 1);
}

FieldPair apply_symbol(const SpectralField& u, const SpectralField& v, const Radii& r,
                       bool adjoint) {
    const int n = u.n();
    if (v.n() != n) throw ValidationError("apply_L0: grid size mismatch");
    Eigen::ArrayXXcd uh = u.fourier(), vh = v.fourier();
    Eigen::ArrayXXcd ou(n, n), ov(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            int m1 = signed_freq(i, n), m2 = signed_freq(j, n);
            if (m1 == 0 && m2 == 0) {
                ou(i, j) = ov(i, j) = 0.0; // mean-zero in and out
                continue;
            }
            ModeSymbol s = symbol(m1, m2, r);
            Eigen::Matrix2d M = adjoint ? Eigen::Matrix2d(s.M.transpose()) : s.M;
            ou(i, j) = M(0, 0) * uh(i, j) + M(0, 1) * vh(i, j);
            ov(i, j) = M(1, 0) * uh(i, j) + M(1, 1) * vh(i, j);
        }
    return FieldPair(SpectralField::from_fourier(ou), SpectralField::from_fourier(ov));
}

} // namespace

ModeSymbol symbol(int n1, int n2, const Radii& r) {
    const double r1 = r.r1, r2 = r.r2;
    const double rr[2] = {r1 * r1, r2 * r2};
    const double nn[2] = {double(n1), double(n2)};
    ModeSymbol s;
    s.lap = nn[0] * nn[0] / rr[0] + nn[1] * nn[1] / rr[1];
    double Q = 0.0;
    for (int i = 0; i < 2; ++i)
        for (int k = 0; k < 2; ++k)
            Q += (nn[i] * nn[i] * nn[k] * nn[k] + nn[i] * nn[k]) / (rr[i] * rr[k]);
    for (int i = 0; i < 2; ++i) Q -= 2.0 * nn[i] * nn[i] / (rr[i] * rr[i]);
    s.Q = Q;
    const double c = (nn[0] * nn[0] + nn[0] * nn[1]) / (rr[0] * r1 * r2) -
                     (nn[1] * nn[1] + nn[0] * nn[1]) / (r1 * r2 * rr[1]);
    s.M << -s.lap, 0.0, c, Q;
    return s;
}

namespace {

// cos/sin(p theta1 + q theta2) with exact single-pair Fourier content, so the
// basis elements have no sampling leakage into other bins.
SpectralField trig_mode(int n, int p, int q, bool sine) {
    Eigen::ArrayXXcd coef = Eigen::ArrayXXcd::Zero(n, n);
    auto bin = [n](int m) { return (m % n + n) % n; };
    Complex c = sine ? Complex(0.0, -0.5) : Complex(0.5, 0.0);
    coef(bin(p), bin(q)) += c;
    coef(bin(-p), bin(-q)) += std::conj(c);
    return SpectralField::from_fourier(coef);
}

} // namespace

FieldPair apply_L0(const SpectralField& u, const SpectralField& v, const Radii& r) {
    return apply_symbol(u, v, r, false);
}

FieldPair apply_L0_adjoint(const SpectralField& u, const SpectralField& v, const Radii& r) {
    return apply_symbol(u, v, r, true);
}

std::vector<FieldPair> kernel_basis(int n, const Radii& r) {
    const double scale = 1.0 / std::sqrt(2.0 * M_PI * M_PI * r.r1 * r.r2);
    const int modes[6][3] = {{1, 0, 0}, {1, 0, 1}, {0, 1, 0},
                             {0, 1, 1}, {1, -1, 0}, {1, -1, 1}};
    std::vector<FieldPair> out;
    for (const auto& m : modes)
        out.emplace_back(SpectralField(n),
                         scale * trig_mode(n, m[0], m[1], m[2] != 0));
    return out;
}

CokernelBasis CokernelBasis::build(int n, const Radii& r) {
    CokernelBasis cb;
    const double v1mag = 1.0 / (r.r1 * r.r2);
    struct Gen {
        int p, q;
        bool sine;
        double v1;
    };
    std::vector<Gen> gens = {{1, 0, false, v1mag},  {1, 0, true, v1mag},
                             {0, 1, false, -v1mag}, {0, 1, true, -v1mag},
                             {1, -1, false, 0.0},   {1, -1, true, 0.0}};
    // element 0: the constant (0, 1)
    Eigen::ArrayXXcd cone = Eigen::ArrayXXcd::Zero(n, n);
    cone(0, 0) = 1.0;
    cb.elements.emplace_back(SpectralField(n), SpectralField::from_fourier(cone));
    for (const auto& g : gens) {
        SpectralField f = trig_mode(n, g.p, g.q, g.sine);
        cb.elements.emplace_back(g.v1 * f, f);
    }
    for (const auto& e : cb.elements) cb.norm2_flat.push_back(e.dot_flat(e, r));
    cb.gram.resize(6, 6);
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j)
            cb.gram(i, j) = cb.elements[i + 1].second.dot_flat(cb.elements[j + 1].second, r);
    return cb;
}

FieldPair project_off_cokernel(const FieldPair& x, const Radii& r) {
    CokernelBasis cb = CokernelBasis::build(x.first.n(), r);
    FieldPair out = x;
    // the seven elements are mutually flat-orthogonal, so plain subtraction works
    for (size_t i = 0; i < cb.elements.size(); ++i) {
        double c = out.dot_flat(cb.elements[i], r) / cb.norm2_flat[i];
        out -= c * cb.elements[i];
    }
    return out;
}

FieldPair solve_L0(const FieldPair& rhs, const Radii& r, double tol) {
    const int n = rhs.first.n();
    Eigen::ArrayXXcd wh = rhs.first.fourier(), xh = rhs.second.fourier();
    Eigen::ArrayXXcd uh(n, n), vh(n, n);
    const double scale = std::max(1.0, rhs.sup_norm());
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            int m1 = signed_freq(i, n), m2 = signed_freq(j, n);
            if (m1 == 0 && m2 == 0) {
                // includes Nyquist bins, which carry no representable content
                bool raw_zero_bin = (i == 0 && j == 0);
                if (raw_zero_bin &&
                    (std::abs(wh(i, j)) > tol * scale || std::abs(xh(i, j)) > tol * scale))
                    throw InconsistentRhsError("solve_L0: right-hand side has nonzero mean");
                uh(i, j) = vh(i, j) = 0.0;
                continue;
            }
            ModeSymbol s = symbol(m1, m2, r);
            Complex u = wh(i, j) / s.M(0, 0);
            if (is_kernel_mode(m1, m2)) {
                Complex res = xh(i, j) - s.M(1, 0) * u;
                if (std::abs(res) > tol * scale)
                    throw InconsistentRhsError(
                        "solve_L0: right-hand side has cokernel content at a kernel mode");
                uh(i, j) = u;
                vh(i, j) = 0.0; // minimum-norm representative in K^perp
            } else {
                uh(i, j) = u;
                vh(i, j) = (xh(i, j) - s.M(1, 0) * u) / s.Q;
            }
        }
    return FieldPair(SpectralField::from_fourier(uh), SpectralField::from_fourier(vh));
}

} // namespace hstori
