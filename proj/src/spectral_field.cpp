#include "hstori/spectral_field.hpp"

#include <cmath>
#include <map>
#include <mutex>

#include <memory>

#include <fftw3.h>

#include "hstori/errors.hpp"

namespace hstori {

namespace fft {
namespace {

struct Plans {
    int n;
    fftw_complex* buf;
    fftw_plan fwd, bck;

    explicit Plans(int n_) : n(n_) {
        buf = fftw_alloc_complex(static_cast<size_t>(n) * n);
        fwd = fftw_plan_dft_2d(n, n, buf, buf, FFTW_FORWARD, FFTW_ESTIMATE);
        bck = fftw_plan_dft_2d(n, n, buf, buf, FFTW_BACKWARD, FFTW_ESTIMATE);
    }
    ~Plans() {
        fftw_destroy_plan(fwd);
        fftw_destroy_plan(bck);
        fftw_free(buf);
    }
};

std::mutex g_mutex;
std::map<int, std::unique_ptr<Plans>>& registry() {
    static std::map<int, std::unique_ptr<Plans>> r;
    return r;
}

void run(Eigen::ArrayXXcd& a, bool forward_dir) {
    const int n = static_cast<int>(a.rows());
    if (n == 0 || a.cols() != n) throw ValidationError("fft: grid must be square");
    std::lock_guard<std::mutex> lock(g_mutex);
    auto& reg = registry();
    auto it = reg.find(n);
    if (it == reg.end()) it = reg.emplace(n, std::make_unique<Plans>(n)).first;
    Plans& p = *it->second;
    // Row-major buffer: slow index = theta^1 (Eigen row), fast = theta^2.
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            p.buf[i * n + j][0] = a(i, j).real();
            p.buf[i * n + j][1] = a(i, j).imag();
        }
    fftw_execute(forward_dir ? p.fwd : p.bck);
    const double scale = forward_dir ? 1.0 : 1.0 / (double(n) * n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            a(i, j) = Complex(p.buf[i * n + j][0], p.buf[i * n + j][1]) * scale;
}

} // namespace

void forward(Eigen::ArrayXXcd& a) { run(a, true); }
void inverse(Eigen::ArrayXXcd& a) { run(a, false); }

} // namespace fft

int signed_freq(int k, int n) {
    if (2 * k == n) return 0; // Nyquist dropped
    return (2 * k < n) ? k : k - n;
}

Eigen::ArrayXXcd cgrid_deriv(const Eigen::ArrayXXcd& a, int dim) {
    const int n = static_cast<int>(a.rows());
    Eigen::ArrayXXcd c = a;
    fft::forward(c);
    const Complex I(0.0, 1.0);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            int m = signed_freq(dim == 0 ? i : j, n);
            c(i, j) *= I * double(m);
        }
    fft::inverse(c);
    return c;
}

SpectralField SpectralField::from_function(int n,
                                           const std::function<double(double, double)>& f) {
    Eigen::ArrayXXd v(n, n);
    const double h = 2.0 * M_PI / n;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) v(i, j) = f(i * h, j * h);
    return SpectralField(std::move(v));
}

SpectralField SpectralField::from_fourier(const Eigen::ArrayXXcd& coef) {
    Eigen::ArrayXXcd c = coef;
    fft::inverse(c);
    c *= double(coef.rows()) * double(coef.cols()); // undo the inverse normalization;
    // coefficients passed here are already normalized
    SpectralField out{Eigen::ArrayXXd(c.real())};
    // Cache the Hermitian-symmetric part of the input, which is exactly the
    // transform of the real part kept above.
    const int n = static_cast<int>(coef.rows());
    auto sym = std::make_shared<Eigen::ArrayXXcd>(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            int im = (n - i) % n, jm = (n - j) % n;
            (*sym)(i, j) = 0.5 * (coef(i, j) + std::conj(coef(im, jm)));
        }
    out.coef_ = std::move(sym);
    return out;
}

Eigen::ArrayXXcd SpectralField::fourier() const {
    if (coef_) return *coef_;
    Eigen::ArrayXXcd c = v_.cast<Complex>();
    fft::forward(c);
    c /= double(n()) * double(n());
    coef_ = std::make_shared<const Eigen::ArrayXXcd>(std::move(c));
    return *coef_;
}

Complex SpectralField::mode(int n1, int n2) const {
    const int N = n();
    int k1 = ((n1 % N) + N) % N;
    int k2 = ((n2 % N) + N) % N;
    return fourier()(k1, k2);
}

SpectralField SpectralField::deriv(int dim) const {
    const int N = n();
    Eigen::ArrayXXcd c = fourier();
    const Complex I(0.0, 1.0);
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j)
            c(i, j) *= I * double(signed_freq(dim == 0 ? i : j, N));
    return from_fourier(c);
}

SpectralField& SpectralField::zero_mean() {
    std::shared_ptr<const Eigen::ArrayXXcd> keep = coef_;
    v_ -= v_.mean();
    if (keep) {
        auto c = std::make_shared<Eigen::ArrayXXcd>(*keep);
        (*c)(0, 0) = 0.0;
        coef_ = std::move(c);
    }
    return *this;
}

double SpectralField::integrate() const {
    const double h = 2.0 * M_PI / n();
    return v_.sum() * h * h;
}

double SpectralField::l2_flat(const Radii& r) const {
    return std::sqrt(std::max(0.0, dot_flat(*this, r)));
}

double SpectralField::dot_flat(const SpectralField& o, const Radii& r) const {
    const double h = 2.0 * M_PI / n();
    return (v_ * o.v_).sum() * h * h * r.r1 * r.r2;
}

SpectralField& SpectralField::operator+=(const SpectralField& o) {
    std::shared_ptr<const Eigen::ArrayXXcd> mine = coef_;
    v_ += o.v_;
    if (mine && o.coef_)
        coef_ = std::make_shared<const Eigen::ArrayXXcd>(*mine + *o.coef_);
    else
        coef_.reset();
    return *this;
}

SpectralField& SpectralField::operator-=(const SpectralField& o) {
    std::shared_ptr<const Eigen::ArrayXXcd> mine = coef_;
    v_ -= o.v_;
    if (mine && o.coef_)
        coef_ = std::make_shared<const Eigen::ArrayXXcd>(*mine - *o.coef_);
    else
        coef_.reset();
    return *this;
}

SpectralField& SpectralField::operator*=(double s) {
    std::shared_ptr<const Eigen::ArrayXXcd> mine = coef_;
    v_ *= s;
    if (mine)
        coef_ = std::make_shared<const Eigen::ArrayXXcd>(s * *mine);
    return *this;
}

double FieldPair::l2_flat(const Radii& r) const {
    return std::sqrt(std::max(0.0, dot_flat(*this, r)));
}

double FieldPair::dot_flat(const FieldPair& o, const Radii& r) const {
    return first.dot_flat(o.first, r) + second.dot_flat(o.second, r);
}

FieldPair& FieldPair::operator+=(const FieldPair& o) {
    first += o.first;
    second += o.second;
    return *this;
}
FieldPair& FieldPair::operator-=(const FieldPair& o) {
    first -= o.first;
    second -= o.second;
    return *this;
}
FieldPair& FieldPair::operator*=(double s) {
    first *= s;
    second *= s;
    return *this;
}

} // namespace hstori
