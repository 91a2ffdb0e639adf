#ifndef HSTORI_SPECTRAL_FIELD_HPP
#define HSTORI_SPECTRAL_FIELD_HPP

#include <complex>
#include <functional>
#include <memory>

#include <Eigen/Dense>

#include "hstori/radii.hpp"

namespace hstori {

using Complex = std::complex<double>;

namespace fft {
// Deterministic 2D complex DFTs on n-by-n grids (plans cached per size,
// thread-safe).  `forward` is the unnormalized e^{-i...} transform;
// `inverse` includes the 1/n^2 factor.
void forward(Eigen::ArrayXXcd& a);
void inverse(Eigen::ArrayXXcd& a);
} // namespace fft

// Signed frequency of DFT bin k on an n-point grid; the Nyquist bin maps to 0
// so odd-order spectral derivatives stay real.
int signed_freq(int k, int n);

// Spectral partial derivative of a complex-valued grid (dim 0 -> theta^1).
Eigen::ArrayXXcd cgrid_deriv(const Eigen::ArrayXXcd& a, int dim);

/** Real scalar field sampled on the uniform n-by-n grid over the torus,
 * entry (i,j) = f(2*pi*i/n, 2*pi*j/n).  Derivatives and integrals are
 * spectral (exact for band-limited fields). */
class SpectralField {
public:
    explicit SpectralField(int n = 0) : v_(Eigen::ArrayXXd::Zero(n, n)) {}
    explicit SpectralField(Eigen::ArrayXXd v) : v_(std::move(v)) {}

    static SpectralField from_function(int n, const std::function<double(double, double)>& f);
    static SpectralField from_fourier(const Eigen::ArrayXXcd& coef);

    int n() const { return static_cast<int>(v_.rows()); }
    const Eigen::ArrayXXd& values() const { return v_; }
    // Mutable access invalidates the cached Fourier coefficients.
    Eigen::ArrayXXd& values() { coef_.reset(); return v_; }
    double operator()(int i, int j) const { return v_(i, j); }

    // Normalized Fourier coefficients in raw DFT bin layout (lazily cached;
    // fields built by from_fourier carry their coefficients bin-exactly).
    Eigen::ArrayXXcd fourier() const;
    Complex mode(int n1, int n2) const; // signed frequencies

    SpectralField deriv(int dim) const;

    double mean() const { return v_.mean(); }
    SpectralField& zero_mean();
    double sup_norm() const { return v_.abs().maxCoeff(); }
    double integrate() const; // against dtheta^1 dtheta^2
    double l2_flat(const Radii& r) const;
    double dot_flat(const SpectralField& o, const Radii& r) const;

    SpectralField& operator+=(const SpectralField& o);
    SpectralField& operator-=(const SpectralField& o);
    SpectralField& operator*=(double s);
    friend SpectralField operator+(SpectralField a, const SpectralField& b) { return a += b; }
    friend SpectralField operator-(SpectralField a, const SpectralField& b) { return a -= b; }
    friend SpectralField operator*(double s, SpectralField a) { return a *= s; }
    friend SpectralField operator*(SpectralField a, double s) { return a *= s; }

private:
    Eigen::ArrayXXd v_;
    // Cached normalized Fourier coefficients of v_ (shared so copies stay cheap).
    mutable std::shared_ptr<const Eigen::ArrayXXcd> coef_;
};

// A (u, v) or two-channel residual pair.
struct FieldPair {
    SpectralField first, second;

    FieldPair() = default;
    FieldPair(SpectralField a, SpectralField b)
        : first(std::move(a)), second(std::move(b)) {}
    explicit FieldPair(int n) : first(n), second(n) {}

    double sup_norm() const { return std::max(first.sup_norm(), second.sup_norm()); }
    double l2_flat(const Radii& r) const;
    double dot_flat(const FieldPair& o, const Radii& r) const;
    FieldPair& operator+=(const FieldPair& o);
    FieldPair& operator-=(const FieldPair& o);
    FieldPair& operator*=(double s);
    friend FieldPair operator+(FieldPair a, const FieldPair& b) { return a += b; }
    friend FieldPair operator-(FieldPair a, const FieldPair& b) { return a -= b; }
    friend FieldPair operator*(double s, FieldPair a) { return a *= s; }
};

} // namespace hstori

#endif
