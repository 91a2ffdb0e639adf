#ifndef HSTORI_LS_SOLVER_HPP
#define HSTORI_LS_SOLVER_HPP

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hstori/flat_operator.hpp"
#include "hstori/immersion.hpp"
#include "hstori/potential.hpp"

namespace hstori {

struct SolveOptions {
    int grid_n = 32;
    double tol = 1e-11;       // sup norm of the projected residual
    int max_iter = 50;
    bool allow_newton_fallback = true;
    bool force_newton = false; // exercise the fallback directly (tests)
};

struct SolveReport {
    int iterations = 0;
    bool used_newton = false;
    double residual_sup = 0.0; // recomputed on the returned fields
    double residual_l2 = 0.0;
    double field_norm_sup = 0.0;
    double wall_seconds = 0.0;
    // Sup-norm of the projected residual at the start and after each accepted
    // step (exposes the contraction ratio of the iteration).
    std::vector<double> residual_history;
};

struct CokernelComponents {
    double a = 0.0;                      // constant-element component
    Eigen::Matrix<double, 6, 1> b;       // expansion coefficients
    Eigen::Matrix<double, 6, 1> I;       // the cokernel integrals
    Eigen::Matrix<double, 6, 1> c;       // centering constants
    Eigen::Matrix<double, 6, 6> gram;    // induced-measure Gram of the f^(i)
};

struct Certificate {
    double sup_omega = 0.0;
    double sup_divH = 0.0;
    double a = 0.0;
    double a_bound = 0.0; // 1e-10 * (1 + sup|divH| * Vol)
    Eigen::Matrix<double, 6, 1> b;
    bool passed = false;
    std::string detail;
};

struct ProjectedSolution {
    SpectralField u, v;
    SolveReport report;
};

// The two channels of Phi in the scalar convention fed to the flat machinery:
// (pullback coefficient / (r1 r2), div H).
FieldPair phi_scalar(const SpectralField& u, const SpectralField& v,
                     const PotentialPolynomial& potential, const Radii& r);

// Step 1: solve pi o Phi_rho(u, v) = 0 on K^perp.  `potential` is the
// normal-form base; it is rescaled by rho and moved by `frame` internally.
ProjectedSolution solve_projected(const PotentialPolynomial& potential, double rho,
                                  const Radii& r, const FrameParams& frame,
                                  const SolveOptions& opts = {});

// The motion Hamiltonians f^(i) restricted to the torus (i = 0..5 for the
// four translations then K1, K2) and the first components v1^(i).
SpectralField motion_hamiltonian(int i, int n, const Radii& r);
double motion_v1(int i, const Radii& r);

CokernelComponents cokernel_integrals(const SpectralField& u, const SpectralField& v,
                                      const PotentialPolynomial& potential, double rho,
                                      const Radii& r, const FrameParams& frame,
                                      const SolveOptions& opts = {});

Eigen::Matrix<double, 6, 1> G(const PotentialPolynomial& potential, double rho,
                              const Radii& r, const FrameParams& frame,
                              const SolveOptions& opts = {});

Eigen::Matrix<double, 6, 1> predict_G_leading(const PotentialPolynomial& potential,
                                              double rho, const Radii& r,
                                              const FrameParams& frame);

struct FrameSearchResult {
    FrameParams frame;
    int newton_iterations = 0;
    double g_norm = 0.0;
    ProjectedSolution solution; // at the final frame
};

FrameSearchResult find_frame(const PotentialPolynomial& potential, double rho,
                             const Radii& r, const FrameParams& tau0,
                             const SolveOptions& opts = {});

Certificate certify(const SpectralField& u, const SpectralField& v,
                    const PotentialPolynomial& potential, double rho, const Radii& r,
                    const FrameParams& frame, const SolveOptions& opts = {});

struct SweepPoint {
    Radii r;
    FrameParams frame;
    Certificate cert;
    double field_norm = 0.0;
    double f_r_gradient_norm = 0.0;
};

struct SweepResult {
    std::vector<SweepPoint> points;
    bool truncated = false;
    std::string diagnostics;
};

// Continuation over normalized radii on an arc of half-width delta around the
// center (warm-started frames).
SweepResult sweep_radii(const PotentialPolynomial& potential, double rho, const Radii& center,
                        double delta, int count, const FrameParams& tau0,
                        const SolveOptions& opts = {});

// Test fixtures (criticality/nondegeneracy re-verified at test time).
PotentialPolynomial fixture_nondegenerate();
PotentialPolynomial fixture_degenerate();
Radii fixture_radii(); // (0.8, 0.6)

} // namespace hstori

#endif
