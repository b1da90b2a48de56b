#ifndef QCA_SCALAR_HPP
#define QCA_SCALAR_HPP

#include <cmath>
#include <complex>
#include <cstdint>
#include <sstream>
#include <string>

#include <gmpxx.h>

namespace qca {

// Exact rational scalar. Thin alias; all series/matrix code is templated on
// the scalar type and uses the helpers below instead of touching the
// representation directly.
using Rat = mpq_class;

using Cplx = std::complex<double>;

template <class S>
struct scalar_traits;

template <>
struct scalar_traits<Rat> {
    static constexpr bool exact = true;
    static Rat zero() { return Rat(0); }
    static Rat one() { return Rat(1); }
    static Rat from_int(long n) { return Rat(n); }
    static Rat from_fraction(long num, long den) {
        Rat r(num, den);
        r.canonicalize();
        return r;
    }
    static bool is_zero(const Rat &x) { return sgn(x) == 0; }
    // Magnitude for residual reporting; exact zero iff the value is zero.
    static double norm(const Rat &x) { return std::fabs(x.get_d()); }
    static std::string str(const Rat &x) { return x.get_str(); }
};

template <>
struct scalar_traits<Cplx> {
    static constexpr bool exact = false;
    static Cplx zero() { return Cplx(0.0, 0.0); }
    static Cplx one() { return Cplx(1.0, 0.0); }
    static Cplx from_int(long n) { return Cplx(double(n), 0.0); }
    static Cplx from_fraction(long num, long den) {
        return Cplx(double(num) / double(den), 0.0);
    }
    static bool is_zero(const Cplx &x) { return x == Cplx(0.0, 0.0); }
    static double norm(const Cplx &x) { return std::abs(x); }
    static std::string str(const Cplx &x) {
        std::ostringstream os;
        os.precision(17);
        os << x.real();
        if (x.imag() >= 0)
            os << "+" << x.imag() << "i";
        else
            os << x.imag() << "i";
        return os.str();
    }
};

template <class S>
double scalar_norm(const S &x) {
    return scalar_traits<S>::norm(x);
}

template <class S>
bool scalar_is_zero(const S &x) {
    return scalar_traits<S>::is_zero(x);
}

} // namespace qca

#endif
