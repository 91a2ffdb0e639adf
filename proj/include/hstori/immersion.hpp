#ifndef HSTORI_IMMERSION_HPP
#define HSTORI_IMMERSION_HPP

#include <array>
#include <string>

#include <Eigen/Dense>

#include "hstori/potential.hpp"
#include "hstori/radii.hpp"
#include "hstori/spectral_field.hpp"

namespace hstori {

/** The deformation direction: X^k are the relative radial perturbations
 * multiplying r_k e^{i theta^k}. */
struct NormalField {
    SpectralField x1, x2;
};

// X from the exact-pair ansatz: X^k = (v_{,k} + eps_k^j u_{,j}) / r_k^2.
NormalField ansatz_X(const SpectralField& u, const SpectralField& v, const Radii& r);

/** Grid of ambient points z(theta) in holomorphic components. */
struct PointGrid {
    Radii r;
    Eigen::ArrayXXcd z1, z2;
    int n() const { return static_cast<int>(z1.rows()); }
};

PointGrid embed(const Radii& r, const NormalField& X);

/** Everything the stationarity operator needs, assembled nodewise.
 *
 * Sign conventions: omega is the standard orientation (omega(dx,dy) = +1 on
 * the Euclidean background).  B is stored as
 *     B_jkl = omega(E_l, (nabla_{E_j} E_k)^perp),
 * which gives the flat values B = +r_m^2 delta and H_l = h^{jk} B_jkl = +1.
 * The one-form dual to J Hvec (whose divergence is the stationarity scalar)
 * is then -H, so div_H carries the compensating sign. */
struct ImmersionState {
    Radii r;
    PointGrid points;
    // tangent vectors E_k, holomorphic components, per node
    std::array<std::array<Eigen::ArrayXXcd, 2>, 2> E; // E[k][m]
    // induced metric and inverse (symmetric 2x2 per node)
    std::array<std::array<Eigen::ArrayXXd, 2>, 2> h, hinv;
    // Christoffels of the induced metric, G[s][k][l]
    std::array<std::array<std::array<Eigen::ArrayXXd, 2>, 2>, 2> gamma;
    // symplectic second fundamental form and mean curvature one-form
    std::array<std::array<std::array<Eigen::ArrayXXd, 2>, 2>, 2> B; // B[j][k][l]
    std::array<Eigen::ArrayXXd, 2> H;
    // coefficient of the pulled-back symplectic form against dtheta1^dtheta2
    SpectralField omega_pullback;
    // sqrt(det h)
    Eigen::ArrayXXd vol_density;

    int n() const { return points.n(); }
};

ImmersionState induced_geometry(const PointGrid& points,
                                const PotentialPolynomial& potential);

// Covariant divergence of the one-form dual to J Hvec (see ImmersionState).
SpectralField div_H(const ImmersionState& state);

SpectralField pullback_omega(const PointGrid& points, const PotentialPolynomial& potential);

// Phi(u, v) = (mu_X^* omega coefficient, div H) for X = ansatz(u, v).
std::pair<SpectralField, SpectralField> phi(const SpectralField& u, const SpectralField& v,
                                            const PotentialPolynomial& potential,
                                            const Radii& r);

// Same but returning the full state (for the cokernel integrals).
ImmersionState phi_state(const SpectralField& u, const SpectralField& v,
                         const PotentialPolynomial& potential, const Radii& r);

double volume(const PointGrid& points, const PotentialPolynomial& potential);

std::pair<SpectralField, SpectralField> linearize_phi_fd(
    const SpectralField& u0, const SpectralField& v0, const PotentialPolynomial& potential,
    const Radii& r, const SpectralField& du, const SpectralField& dv, double step);

// Plot-ready export: theta1, theta2, Re z1, Im z1, Re z2, Im z2, H1, H2, divH, omega.
void export_state_csv(const ImmersionState& state, const std::string& path);

} // namespace hstori

#endif
