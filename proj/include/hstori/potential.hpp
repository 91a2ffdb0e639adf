#ifndef HSTORI_POTENTIAL_HPP
#define HSTORI_POTENTIAL_HPP

#include <array>
#include <string>

#include <Eigen/Dense>

#include "hstori/polynomial.hpp"
#include "hstori/radii.hpp"

namespace hstori {

/** Kahler potential F = 1/2 ||z||^2 + lower + rho^2 * hat.
 *
 * `hat` is the normal-form perturbation (total degree >= 4 when the
 * normal_form flag is set); `lower` collects the affine remainders produced
 * by rigid motions of the quadratic part.  The rho scaling is kept symbolic
 * so the perturbation can be stripped (rho -> 1) when evaluating quantities
 * of the unscaled geometry such as the frame functional. */
struct PotentialPolynomial {
    Polynomial hat;
    Polynomial lower;
    double rho = 1.0;
    bool normal_form = true;

    static PotentialPolynomial euclidean();
    static PotentialPolynomial from_hat(Polynomial fhat, double rho = 1.0);

    // 1/2||z||^2 + lower + rho^2 * hat, as one exact polynomial.
    Polynomial full() const;

    bool check_reality(double tol = 1e-12) const;
};

/** All mixed partials of F at a base point up to a given total order. */
class PotentialJet {
public:
    static constexpr int kMaxOrder = 4;

    PotentialJet(Complex z1, Complex z2, int order);

    int order() const { return order_; }
    Complex z1() const { return z1_; }
    Complex z2() const { return z2_; }

    // d^(a+b+c+d) F / dz1^a dz2^b dzb1^c dzb2^d
    Complex d(int a, int b, int c, int d) const;
    Complex& at(int a, int b, int c, int d);

    // h(k,l) = F_{,k lbar}, k,l in {0,1}
    Eigen::Matrix2cd hermitian_block() const;

private:
    Complex z1_, z2_;
    int order_;
    std::array<Complex, 5 * 5 * 5 * 5> table_{};
};

struct MetricData {
    Eigen::Matrix2cd h;     // F_{,k lbar}
    Eigen::Matrix4d g;      // real coordinates ordered (x1, x2, y1, y2)
    Eigen::Matrix4d omega;  // same ordering
};

struct CurvatureData {
    // R(k,l,m,n) = R_{k lbar m nbar}
    std::array<std::array<std::array<std::array<Complex, 2>, 2>, 2>, 2> R{};
    Eigen::Matrix2cd ricci; // ricci(k,l) = sum_m R(k,l,m,m)
};

/** Six real frame parameters: translations (Re tau1, Im tau1, Re tau2,
 * Im tau2) then the K1, K2 rotation angles. */
struct FrameParams {
    std::array<double, 6> tau{0, 0, 0, 0, 0, 0};

    double norm() const;
    Eigen::Matrix2cd unitary() const;      // exp(i tau5 K1 + i tau6 K2)
    Eigen::Vector2cd translation() const;  // (tau1 + i tau2, tau3 + i tau4)
};

PotentialJet eval_jet(const PotentialPolynomial& potential, Complex z1, Complex z2,
                      int order);

MetricData metric_at(const PotentialJet& jet);

PotentialPolynomial apply_motion(const PotentialPolynomial& potential,
                                 const Eigen::Matrix2cd& U, const Eigen::Vector2cd& tau);

PotentialPolynomial rescale_potential(const PotentialPolynomial& potential, double rho);

CurvatureData complex_curvature(const PotentialPolynomial& potential, Complex z1,
                                Complex z2);

// Frame functional r1^2 R_{1 1bar} + r2^2 R_{2 2bar} of the unscaled
// perturbation (rho stripped to 1), evaluated at the motion image of 0.
double f_r(const PotentialPolynomial& potential, const FrameParams& frame, const Radii& r);

// Central finite differences of f_r in the six frame parameters, step 1e-5.
std::array<double, 6> f_r_gradient(const PotentialPolynomial& potential,
                                   const FrameParams& frame, const Radii& r);

/** Cached table of derivative polynomials of the full potential, for fast
 * nodewise jet evaluation on a grid. */
class JetEvaluator {
public:
    JetEvaluator(const PotentialPolynomial& potential, int order);
    PotentialJet at(Complex z1, Complex z2) const;
    int order() const { return order_; }

private:
    int order_;
    std::array<Polynomial, 5 * 5 * 5 * 5> derivs_;
    std::array<std::array<int, 4>, 5 * 5 * 5 * 5> active_{}; // list of live orders
    int n_active_ = 0;
};

// Potential file I/O (fields: rho, terms: [{deg:[a,b,c,d], re, im}]).
// The loader symmetrizes to enforce reality; `asymmetry_out`, when non-null,
// receives the largest correction applied.
PotentialPolynomial load_potential(const std::string& path, double* asymmetry_out = nullptr);
void save_potential(const PotentialPolynomial& p, const std::string& path);

} // namespace hstori

#endif
