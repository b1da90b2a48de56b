#ifndef QCA_THETA_HPP
#define QCA_THETA_HPP

#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

#include "qca/scalar.hpp"

namespace qca {

// Odd theta function on C/(Z + tau Z), normalized so that
//   theta(z+1) = -theta(z),  theta'(0) = 1.
// Implemented as the sine q-series with `terms` retained terms; the
// normalization divides by the series' own derivative at 0, so theta'(0)=1
// holds exactly regardless of the internal convention. The tau-direction
// multiplier is not assumed; callers can measure it via tau_multiplier().
class Theta {
  public:
    Theta(Cplx tau, int terms) : tau_(tau), terms_(terms) {
        if (tau.imag() <= 0) throw std::domain_error("Theta: Im(tau) must be positive");
        if (terms < 1) throw std::domain_error("Theta: need at least one series term");
        const Cplx ipi(0.0, M_PI);
        qpow_.resize(terms_);
        for (int n = 0; n < terms_; ++n) {
            double e = (n + 0.5) * (n + 0.5);
            qpow_[n] = std::exp(ipi * tau_ * Cplx(e, 0.0));
        }
        // D = sum (-1)^n (2n+1) pi q^{(n+1/2)^2}  ( = theta'(0) before scaling )
        deriv0_ = Cplx(0.0, 0.0);
        for (int n = 0; n < terms_; ++n) {
            double sgn = (n % 2 == 0) ? 1.0 : -1.0;
            deriv0_ += Cplx(sgn * (2 * n + 1) * M_PI, 0.0) * qpow_[n];
        }
        if (std::abs(deriv0_) == 0.0)
            throw std::domain_error("Theta: degenerate normalization");
    }

    Cplx tau() const { return tau_; }
    int terms() const { return terms_; }
    Cplx nome() const { return std::exp(Cplx(0.0, M_PI) * tau_); }

    // theta^{(k)}(z); k = 0 is the function itself.
    Cplx deriv(Cplx z, int k) const {
        Cplx acc(0.0, 0.0);
        for (int n = 0; n < terms_; ++n) {
            double sgn = (n % 2 == 0) ? 1.0 : -1.0;
            double f = (2 * n + 1) * M_PI;
            Cplx u = Cplx(f, 0.0) * z + Cplx(k * M_PI / 2.0, 0.0);
            acc += Cplx(sgn * std::pow(f, k), 0.0) * qpow_[n] * std::sin(u);
        }
        return acc / deriv0_;
    }
    Cplx operator()(Cplx z) const { return deriv(z, 0); }

    // zeta = theta'/theta (simple pole with residue 1 at lattice points).
    Cplx zeta(Cplx z) const {
        Cplx t = deriv(z, 0);
        if (std::abs(t) < 1e-300) throw std::domain_error("Theta::zeta: evaluation at a zero");
        return deriv(z, 1) / t;
    }
    Cplx zeta_deriv(Cplx z, int k) const {
        // k-th derivative of zeta via the quotient rule on small k by
        // finite recursion in terms of theta derivatives.
        // zeta' = theta''/theta - zeta^2, and higher ones recursively.
        if (k == 0) return zeta(z);
        // Use the logarithmic-derivative recursion: let g_m = theta^(m)/theta.
        std::vector<Cplx> g(k + 2);
        Cplx t = deriv(z, 0);
        for (int m = 0; m <= k + 1; ++m) g[m] = deriv(z, m) / t;
        // zeta^{(j)} in terms of g via  g_{m+1} = sum_j C(m,j) zeta^{(j)} g_{m-j}.
        // zeta^{(m)} = g_{m+1} - sum_{j=0}^{m-1} C(m,j) zeta^{(j)} g_{m-j}
        std::vector<Cplx> zd(k + 1);
        zd[0] = g[1];
        for (int m = 1; m <= k; ++m) {
            Cplx acc = g[m + 1];
            for (int j = 0; j < m; ++j) acc -= Cplx(binom_coeff(m, j), 0.0) * zd[j] * g[m - j];
            zd[m] = acc;
        }
        return zd[k];
    }

    // Taylor coefficients of the normalized theta: theta(z) = sum_m c_m z^m
    // (c_1 = 1, even coefficients vanish).
    std::vector<Cplx> taylor(int max_degree) const {
        std::vector<Cplx> c(max_degree + 1, Cplx(0.0, 0.0));
        double fact = 1.0;
        for (int m = 1; m <= max_degree; m += 2) {
            Cplx acc(0.0, 0.0);
            for (int n = 0; n < terms_; ++n) {
                double sgn = (n % 2 == 0) ? 1.0 : -1.0;
                acc += Cplx(sgn, 0.0) * qpow_[n] * std::pow(Cplx((2 * n + 1) * M_PI, 0.0), m);
            }
            double sinsgn = ((m - 1) / 2) % 2 == 0 ? 1.0 : -1.0;
            fact = 1.0;
            for (int j = 2; j <= m; ++j) fact *= j;
            c[m] = acc * Cplx(sinsgn / fact, 0.0) / deriv0_;
        }
        return c;
    }

    // Laurent coefficients of zeta at 0: zeta = 1/z + d_1 z + d_3 z^3 + ...
    // Returned vector holds the coefficient of z^m at index m (so index 0 is
    // the z^0 coefficient, which vanishes); the 1/z part is implicit.
    std::vector<Cplx> zeta_taylor_tail(int max_degree) const {
        // theta = z * u(z), zeta = 1/z + u'/u.
        std::vector<Cplx> th = taylor(max_degree + 2);
        int n = max_degree + 1;
        std::vector<Cplx> u(n, Cplx(0.0, 0.0));
        for (int m = 0; m < n; ++m) u[m] = th[m + 1];   // u_m = theta_{m+1}
        std::vector<Cplx> up(n, Cplx(0.0, 0.0));
        for (int m = 0; m + 1 < n; ++m) up[m] = Cplx(double(m + 1), 0.0) * u[m + 1];
        // divide up by u (u_0 = 1)
        std::vector<Cplx> q(n, Cplx(0.0, 0.0));
        for (int m = 0; m < n; ++m) {
            Cplx acc = up[m];
            for (int j = 1; j <= m; ++j) acc -= u[j] * q[m - j];
            q[m] = acc;
        }
        q.resize(max_degree + 1);
        return q;
    }

    // Measured multiplier theta(z+tau)/theta(z); recorded in reports rather
    // than asserted against any printed convention.
    Cplx tau_multiplier(Cplx z) const { return deriv(z + tau_, 0) / deriv(z, 0); }

  private:
    static double binom_coeff(int n, int k) {
        double r = 1.0;
        for (int j = 0; j < k; ++j) r = r * double(n - j) / double(j + 1);
        return r;
    }

    Cplx tau_;
    int terms_;
    Cplx deriv0_;
    std::vector<Cplx> qpow_;
};

} // namespace qca

#endif
