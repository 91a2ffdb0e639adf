#include "hstori/polynomial.hpp"

#include <cmath>
#include <vector>

namespace hstori {

namespace {
constexpr double kDropTol = 0.0; // exact arithmetic; drop only exact zeros
}

void Polynomial::add_term(const Deg& d, Complex c) {
    auto it = terms_.find(d);
    if (it == terms_.end()) {
        if (c != Complex(0.0, 0.0)) terms_.emplace(d, c);
        return;
    }
    it->second += c;
    if (it->second == Complex(0.0, 0.0)) terms_.erase(it);
}

Polynomial Polynomial::monomial(const Deg& d, Complex c) {
    Polynomial p;
    p.add_term(d, c);
    return p;
}

Polynomial Polynomial::variable(int i) {
    Deg d{0, 0, 0, 0};
    d[i] = 1;
    return monomial(d, 1.0);
}

Polynomial Polynomial::constant(Complex c) { return monomial({0, 0, 0, 0}, c); }

Polynomial& Polynomial::operator+=(const Polynomial& o) {
    for (const auto& [d, c] : o.terms_) add_term(d, c);
    return *this;
}

Polynomial& Polynomial::operator-=(const Polynomial& o) {
    for (const auto& [d, c] : o.terms_) add_term(d, -c);
    return *this;
}

Polynomial& Polynomial::operator*=(Complex c) {
    if (c == Complex(0.0, 0.0)) {
        terms_.clear();
        return *this;
    }
    for (auto& [d, v] : terms_) v *= c;
    return *this;
}

Polynomial Polynomial::operator*(const Polynomial& o) const {
    Polynomial out;
    for (const auto& [da, ca] : terms_)
        for (const auto& [db, cb] : o.terms_) {
            Deg d{da[0] + db[0], da[1] + db[1], da[2] + db[2], da[3] + db[3]};
            out.add_term(d, ca * cb);
        }
    return out;
}

Polynomial Polynomial::derivative(int i) const {
    Polynomial out;
    for (const auto& [d, c] : terms_) {
        if (d[i] == 0) continue;
        Deg dd = d;
        dd[i] -= 1;
        out.add_term(dd, c * double(d[i]));
    }
    return out;
}

Polynomial Polynomial::derivative(const Deg& order) const {
    Polynomial out = *this;
    for (int i = 0; i < 4; ++i)
        for (int k = 0; k < order[i]; ++k) out = out.derivative(i);
    return out;
}

Complex Polynomial::eval(Complex z1, Complex z2) const {
    const Complex v[4] = {z1, z2, std::conj(z1), std::conj(z2)};
    Complex sum = 0.0;
    for (const auto& [d, c] : terms_) {
        Complex t = c;
        for (int i = 0; i < 4; ++i)
            for (int k = 0; k < d[i]; ++k) t *= v[i];
        sum += t;
    }
    return sum;
}

Polynomial Polynomial::conjugated() const {
    Polynomial out;
    for (const auto& [d, c] : terms_)
        out.add_term({d[2], d[3], d[0], d[1]}, std::conj(c));
    return out;
}

bool Polynomial::is_real(double tol) const {
    Polynomial diff = *this - conjugated();
    for (const auto& [d, c] : diff.terms_)
        if (std::abs(c) > tol) return false;
    return true;
}

double Polynomial::symmetrize() {
    Polynomial sym = *this + conjugated();
    sym *= 0.5;
    Polynomial diff = *this - sym;
    double worst = 0.0;
    for (const auto& [d, c] : diff.terms()) worst = std::max(worst, std::abs(c));
    *this = std::move(sym);
    return worst;
}

Polynomial Polynomial::compose_affine(const Eigen::Matrix2cd& U,
                                      const Eigen::Vector2cd& tau) const {
    // Images of the four variables under the substitution.
    std::array<Polynomial, 4> sub;
    for (int k = 0; k < 2; ++k) {
        Polynomial p = Polynomial::constant(tau(k));
        p += U(k, 0) * Polynomial::variable(0);
        p += U(k, 1) * Polynomial::variable(1);
        sub[k] = p;
        sub[k + 2] = p.conjugated();
    }
    // Memoized powers of each substituted variable.
    int maxdeg = max_total_degree();
    std::array<std::vector<Polynomial>, 4> pows;
    for (int i = 0; i < 4; ++i) {
        pows[i].resize(maxdeg + 1);
        pows[i][0] = Polynomial::constant(1.0);
        for (int k = 1; k <= maxdeg; ++k) pows[i][k] = pows[i][k - 1] * sub[i];
    }
    Polynomial out;
    for (const auto& [d, c] : terms_) {
        Polynomial t = Polynomial::constant(c);
        for (int i = 0; i < 4; ++i)
            if (d[i] > 0) t = t * pows[i][d[i]];
        out += t;
    }
    return out;
}

Polynomial Polynomial::scale_by_degree(double s, int base_degree) const {
    Polynomial out;
    for (const auto& [d, c] : terms_) {
        int deg = d[0] + d[1] + d[2] + d[3];
        out.add_term(d, c * std::pow(s, deg - base_degree));
    }
    return out;
}

int Polynomial::min_total_degree() const {
    int m = 0;
    bool first = true;
    for (const auto& [d, c] : terms_) {
        int deg = d[0] + d[1] + d[2] + d[3];
        m = first ? deg : std::min(m, deg);
        first = false;
    }
    return m;
}

int Polynomial::max_total_degree() const {
    int m = 0;
    for (const auto& [d, c] : terms_)
        m = std::max(m, d[0] + d[1] + d[2] + d[3]);
    return m;
}

void Polynomial::prune(double tol) {
    for (auto it = terms_.begin(); it != terms_.end();) {
        if (std::abs(it->second) <= tol)
            it = terms_.erase(it);
        else
            ++it;
    }
    (void)kDropTol;
}

} // namespace hstori
