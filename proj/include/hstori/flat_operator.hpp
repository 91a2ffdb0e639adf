#ifndef HSTORI_FLAT_OPERATOR_HPP
#define HSTORI_FLAT_OPERATOR_HPP

#include <array>
#include <vector>

#include <Eigen/Dense>

#include "hstori/radii.hpp"
#include "hstori/spectral_field.hpp"

namespace hstori {

/** Fourier symbol of the flat linearization at mode n = (n1, n2):
 * M = [[-|n|_r^2, 0], [c(n), Q(n)]] acting on (u-hat, v-hat). */
struct ModeSymbol {
    Eigen::Matrix2d M;
    double Q;    // quartic scalar symbol (second diagonal entry)
    double lap;  // |n|_r^2 = n1^2/r1^2 + n2^2/r2^2
};

ModeSymbol symbol(int n1, int n2, const Radii& r);

// The flat linearization (both channels as scalars; the 2-form channel is the
// d(theta^1)^d(theta^2) coefficient divided by the flat density r1 r2).
FieldPair apply_L0(const SpectralField& u, const SpectralField& v, const Radii& r);

// Formal adjoint with respect to the flat L^2 pairing (modewise M(n)^T).
FieldPair apply_L0_adjoint(const SpectralField& u, const SpectralField& v, const Radii& r);

// Six flat-orthonormal kernel pairs (0, f).
std::vector<FieldPair> kernel_basis(int n, const Radii& r);

/** The seven-element cokernel: the constant (0,1) plus the six pairs
 * f^(i) * (v1^(i), 1) built from cos/sin(theta^s) and cos/sin(theta^1-theta^2). */
struct CokernelBasis {
    std::vector<FieldPair> elements;       // 7 entries, element 0 = (0,1)
    std::vector<double> norm2_flat;        // flat L^2 norms squared
    Eigen::MatrixXd gram;                  // 6x6 Gram of the f^(i) (flat measure)

    static CokernelBasis build(int n, const Radii& r);
};

// Flat-L^2 orthogonal projection off the 7-dimensional cokernel.
FieldPair project_off_cokernel(const FieldPair& x, const Radii& r);

// Modewise solve of M(n) (u,v) = rhs on the complement of the kernel; the six
// kernel v-modes are zeroed (minimum-norm solution in K^perp) and the (0,0)
// mode must vanish on the right-hand side.
FieldPair solve_L0(const FieldPair& rhs, const Radii& r, double tol = 1e-9);

} // namespace hstori

#endif
