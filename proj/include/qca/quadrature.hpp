#ifndef QCA_QUADRATURE_HPP
#define QCA_QUADRATURE_HPP

#include <complex>
#include <functional>
#include <vector>

#include "qca/scalar.hpp"

namespace qca {

// Trapezoidal contour quadrature on circles: spectrally accurate for
// integrands analytic on an annulus around the contour.

// (1/2pi i) oint f(w) dw over |w| = radius.
inline Cplx contour_integral(const std::function<Cplx(Cplx)> &f, double radius,
                             int points = 256) {
    Cplx acc(0, 0);
    for (int k = 0; k < points; ++k) {
        double t = 2.0 * M_PI * k / points;
        Cplx w = radius * Cplx(std::cos(t), std::sin(t));
        acc += f(w) * w;
    }
    return acc / Cplx(double(points), 0.0);
}

// Laurent coefficient [w^m] f around 0, contour at |w| = radius.
inline Cplx laurent_coeff(const std::function<Cplx(Cplx)> &f, int m, double radius,
                          int points = 256) {
    return contour_integral([&](Cplx w) { return f(w) * std::pow(w, -m - 1); }, radius,
                            points);
}

// Double Laurent coefficient [z^a w^b] f(z,w) on |z| = rz, |w| = rw. The
// radii select the expansion region (rz < rw reads off the z-small data).
inline Cplx laurent_coeff_2d(const std::function<Cplx(Cplx, Cplx)> &f, int a, int b,
                             double rz, double rw, int points = 128) {
    Cplx acc(0, 0);
    for (int j = 0; j < points; ++j) {
        double s = 2.0 * M_PI * j / points;
        Cplx z = rz * Cplx(std::cos(s), std::sin(s));
        Cplx inner(0, 0);
        for (int k = 0; k < points; ++k) {
            double t = 2.0 * M_PI * k / points;
            Cplx w = rw * Cplx(std::cos(t), std::sin(t));
            inner += f(z, w) * std::pow(w, -b);
        }
        acc += (inner / Cplx(double(points), 0.0)) * std::pow(z, -a);
    }
    return acc / Cplx(double(points), 0.0);
}

} // namespace qca

#endif
