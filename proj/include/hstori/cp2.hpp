#ifndef HSTORI_CP2_HPP
#define HSTORI_CP2_HPP

#include <array>

#include <Eigen/Dense>

namespace hstori {

/** Torus in complex projective 2-space obtained by projecting
 * (alpha1, alpha2) -> (r1 e^{iL^1(alpha)}, r2 e^{iL^2(alpha)}, r3 e^{iL^3(alpha)})
 * through the circle quotient of the unit 5-sphere.  The phase functions are
 * the rows of L; the weighted orthogonality sum_k r_k^2 L^k_s = 0 makes the
 * parametrization horizontal. */
struct HopfTorusSpec {
    std::array<double, 3> r;
    Eigen::Matrix<double, 3, 2> L;

    // throws ValidationError on violated invariants
    void validate(double tol = 1e-10) const;
};

// Build a spec for given radii: L columns span the null space of
// (r1^2, r2^2, r3^2), reducing to the integer basis (1,-1,0), (0,1,-1) when
// the radii are equal.
HopfTorusSpec make_hopf_spec(double r1, double r2, double r3);

// Constant induced metric h_st = sum_k r_k^2 L^k_s L^k_t.
Eigen::Matrix2d hopf_metric(const HopfTorusSpec& spec);

// Constant symplectic second fundamental form
// T_stu = sum_k r_k^2 L^k_s L^k_t L^k_u (fully symmetric).
std::array<std::array<std::array<double, 2>, 2>, 2> hopf_second_form(const HopfTorusSpec& spec);

// Volume of the projected torus per (2 pi)^2: r1 r2 sqrt(1 - r1^2 - r2^2).
double hopf_volume(const HopfTorusSpec& spec);

// Independent volume computation: sqrt(det h) times the covolume of the
// period lattice (phase differences in 2 pi Z), per (2 pi)^2.
double hopf_volume_lattice(const HopfTorusSpec& spec);

struct HopfStationarityReport {
    Eigen::Vector2d H;           // mean curvature one-form components
    double H_norm = 0.0;         // h^{uv} H_u H_v, square-rooted
    double div_H = 0.0;          // covariant divergence (exactly 0: constants)
    double H_cross_check = 0.0;  // |contraction - direct sum| discrepancy
    double lagrangian_residual = 0.0;
    bool minimal = false;
};

HopfStationarityReport verify_stationary(const HopfTorusSpec& spec);

} // namespace hstori

#endif
