#ifndef HSTORI_POLYNOMIAL_HPP
#define HSTORI_POLYNOMIAL_HPP

#include <array>
#include <complex>
#include <map>

#include <Eigen/Dense>

namespace hstori {

using Complex = std::complex<double>;

// Exponents of (z1, z2, zbar1, zbar2), in that order.
using Deg = std::array<int, 4>;

/** Exact polynomial in the four variables z1, z2, conj(z1), conj(z2) with
 * complex coefficients.  This is the carrier for Kahler potentials and all
 * of their derivatives; everything here is exact (no truncation). */
class Polynomial {
public:
    Polynomial() = default;

    static Polynomial monomial(const Deg& d, Complex c);
    // i in 0..3 -> z1, z2, zbar1, zbar2
    static Polynomial variable(int i);
    static Polynomial constant(Complex c);

    Polynomial& operator+=(const Polynomial& o);
    Polynomial& operator-=(const Polynomial& o);
    Polynomial& operator*=(Complex c);
    friend Polynomial operator+(Polynomial a, const Polynomial& b) { return a += b; }
    friend Polynomial operator-(Polynomial a, const Polynomial& b) { return a -= b; }
    friend Polynomial operator*(Polynomial a, Complex c) { return a *= c; }
    friend Polynomial operator*(Complex c, Polynomial a) { return a *= c; }
    Polynomial operator*(const Polynomial& o) const;

    // d/d(variable i), exact.
    Polynomial derivative(int i) const;
    // Mixed partial of multi-order (a,b,c,d).
    Polynomial derivative(const Deg& order) const;

    Complex eval(Complex z1, Complex z2) const;

    // Swap holomorphic and antiholomorphic slots and conjugate coefficients;
    // fixed points of this map are the real-valued polynomials.
    Polynomial conjugated() const;
    bool is_real(double tol) const;
    // Average with the conjugate; returns the largest coefficient asymmetry seen.
    double symmetrize();

    // Substitute z -> U z + tau (and the conjugate relation for zbar).
    Polynomial compose_affine(const Eigen::Matrix2cd& U, const Eigen::Vector2cd& tau) const;

    // Multiply each term of total degree d by s^(d - base_degree).
    Polynomial scale_by_degree(double s, int base_degree) const;

    int min_total_degree() const; // 0 for the zero polynomial
    int max_total_degree() const;
    bool empty() const { return terms_.empty(); }
    void prune(double tol = 0.0);

    const std::map<Deg, Complex>& terms() const { return terms_; }
    void add_term(const Deg& d, Complex c);

private:
    std::map<Deg, Complex> terms_;
};

} // namespace hstori

#endif
