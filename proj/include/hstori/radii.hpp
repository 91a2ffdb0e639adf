#ifndef HSTORI_RADII_HPP
#define HSTORI_RADII_HPP

#include <cmath>

#include "hstori/errors.hpp"

namespace hstori {

/** Radii (r1, r2) of the standard torus, with the epsilon tensor of the
 * deformation ansatz: eps(0,1) = -r1/r2, eps(1,0) = r2/r1, diagonal zero. */
struct Radii {
    double r1 = 1.0 / std::sqrt(2.0);
    double r2 = 1.0 / std::sqrt(2.0);

    Radii() = default;
    Radii(double a, double b) : r1(a), r2(b) {
        if (!(r1 > 0.0) || !(r2 > 0.0))
            throw ValidationError("radii must be positive");
    }

    double r(int k) const { return k == 0 ? r1 : r2; }

    // eps_k^j with k,j in {0,1}
    double eps(int k, int j) const {
        if (k == 0 && j == 1) return -r1 / r2;
        if (k == 1 && j == 0) return r2 / r1;
        return 0.0;
    }

    bool normalized(double tol = 1e-12) const {
        return std::abs(r1 * r1 + r2 * r2 - 1.0) <= tol;
    }
};

} // namespace hstori

#endif
