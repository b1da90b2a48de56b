#ifndef QCA_HPOLY_HPP
#define QCA_HPOLY_HPP

#include <algorithm>
#include <cassert>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "qca/scalar.hpp"

namespace qca {

// Truncation order used for values that are exact polynomials in hbar
// (no dropped tail).
inline constexpr int kOrderInf = std::numeric_limits<int>::max() / 4;

// Polynomial in the formal deformation parameter hbar, truncated at a known
// order: coefficients of hbar^k for k <= order are correct, higher powers are
// unknown (dropped). order == kOrderInf means the value is exact.
template <class S>
class HPoly {
  public:
    HPoly() : order_(kOrderInf) {}
    explicit HPoly(S c0, int order = kOrderInf) : order_(order) {
        if (!scalar_is_zero(c0)) c_.push_back(std::move(c0));
    }
    static HPoly zero(int order = kOrderInf) { return HPoly(scalar_traits<S>::zero(), order); }
    static HPoly one(int order = kOrderInf) { return HPoly(scalar_traits<S>::one(), order); }
    // c * hbar^k
    static HPoly monomial(S c, int k, int order = kOrderInf) {
        HPoly r;
        r.order_ = order;
        if (k <= order && !scalar_is_zero(c)) {
            r.c_.assign(k + 1, scalar_traits<S>::zero());
            r.c_[k] = std::move(c);
        }
        return r;
    }

    int order() const { return order_; }
    bool exact_order() const { return order_ == kOrderInf; }
    // Degree of the stored (known) part; -1 for zero.
    int degree() const { return int(c_.size()) - 1; }

    const S &coeff(int k) const {
        static const S z = scalar_traits<S>::zero();
        if (k < 0 || k >= int(c_.size())) return z;
        return c_[k];
    }
    void set_coeff(int k, S v) {
        assert(k >= 0);
        if (k > order_) return;
        if (k >= int(c_.size())) {
            if (scalar_is_zero(v)) return;
            c_.resize(k + 1, scalar_traits<S>::zero());
        }
        c_[k] = std::move(v);
        trim();
    }

    bool is_zero() const { return c_.empty(); }
    bool has_unit_constant() const {
        if (c_.empty()) return false;
        S d = c_[0] - scalar_traits<S>::one();
        return scalar_is_zero(d);
    }

    HPoly truncated(int new_order) const {
        HPoly r = *this;
        r.order_ = std::min(order_, new_order);
        if (r.order_ < kOrderInf && int(r.c_.size()) > r.order_ + 1)
            r.c_.resize(std::max(0, r.order_ + 1));
        r.trim();
        return r;
    }

    friend HPoly operator+(const HPoly &a, const HPoly &b) {
        HPoly r;
        r.order_ = std::min(a.order_, b.order_);
        r.c_.assign(std::max(a.c_.size(), b.c_.size()), scalar_traits<S>::zero());
        for (size_t i = 0; i < a.c_.size(); ++i) r.c_[i] = a.c_[i];
        for (size_t i = 0; i < b.c_.size(); ++i) r.c_[i] += b.c_[i];
        r.clamp();
        return r;
    }
    friend HPoly operator-(const HPoly &a, const HPoly &b) {
        HPoly r;
        r.order_ = std::min(a.order_, b.order_);
        r.c_.assign(std::max(a.c_.size(), b.c_.size()), scalar_traits<S>::zero());
        for (size_t i = 0; i < a.c_.size(); ++i) r.c_[i] = a.c_[i];
        for (size_t i = 0; i < b.c_.size(); ++i) r.c_[i] -= b.c_[i];
        r.clamp();
        return r;
    }
    HPoly operator-() const {
        HPoly r = *this;
        for (auto &x : r.c_) x = -x;
        return r;
    }
    friend HPoly operator*(const HPoly &a, const HPoly &b) {
        HPoly r;
        r.order_ = std::min(a.order_, b.order_);
        if (a.c_.empty() || b.c_.empty()) return r;
        int deg = int(a.c_.size() + b.c_.size()) - 2;
        if (r.order_ < kOrderInf) deg = std::min(deg, r.order_);
        r.c_.assign(deg + 1, scalar_traits<S>::zero());
        for (size_t i = 0; i < a.c_.size(); ++i) {
            if (scalar_is_zero(a.c_[i])) continue;
            size_t jmax = std::min(b.c_.size(), size_t(deg + 1) - i);
            for (size_t j = 0; j < jmax; ++j) r.c_[i + j] += a.c_[i] * b.c_[j];
        }
        r.trim();
        return r;
    }
    HPoly &operator+=(const HPoly &b) { return *this = *this + b; }
    HPoly &operator-=(const HPoly &b) { return *this = *this - b; }
    HPoly &operator*=(const HPoly &b) { return *this = *this * b; }

    HPoly scaled(const S &s) const {
        HPoly r = *this;
        if (scalar_is_zero(s)) {
            r.c_.clear();
            return r;
        }
        for (auto &x : r.c_) x = x * s;
        return r;
    }

    // Multiply by hbar^k.
    HPoly mul_hbar(int k) const {
        HPoly r;
        r.order_ = (order_ == kOrderInf) ? kOrderInf : order_ + k;
        if (c_.empty()) return r;
        r.c_.assign(c_.size() + k, scalar_traits<S>::zero());
        for (size_t i = 0; i < c_.size(); ++i) r.c_[i + k] = c_[i];
        r.clamp();
        return r;
    }

    // Divide by hbar^k; the low coefficients must vanish.
    HPoly div_hbar(int k) const {
        for (int i = 0; i < k && i < int(c_.size()); ++i)
            if (!scalar_is_zero(c_[i]))
                throw std::domain_error("HPoly::div_hbar: value not divisible by hbar^k");
        HPoly r;
        r.order_ = (order_ == kOrderInf) ? kOrderInf : order_ - k;
        if (int(c_.size()) > k) r.c_.assign(c_.begin() + k, c_.end());
        r.clamp();
        return r;
    }

    // d/dhbar (used by the order-by-order ODE solver).
    HPoly d_hbar() const {
        HPoly r;
        r.order_ = (order_ == kOrderInf) ? kOrderInf : order_ - 1;
        if (c_.size() > 1) {
            r.c_.resize(c_.size() - 1);
            for (size_t i = 1; i < c_.size(); ++i)
                r.c_[i - 1] = c_[i] * scalar_traits<S>::from_int(long(i));
        }
        r.clamp();
        return r;
    }

    // Multiplicative inverse; requires an invertible constant term.
    HPoly inverse(int order) const {
        if (c_.empty() || scalar_is_zero(c_[0]))
            throw std::domain_error("HPoly::inverse: constant term vanishes");
        int D = std::min(order, order_);
        HPoly r;
        r.order_ = D;
        if (D == kOrderInf)
            throw std::domain_error("HPoly::inverse: need a finite truncation order");
        r.c_.assign(D + 1, scalar_traits<S>::zero());
        S inv0 = scalar_traits<S>::one() / c_[0];
        r.c_[0] = inv0;
        for (int k = 1; k <= D; ++k) {
            S acc = scalar_traits<S>::zero();
            for (int i = 1; i <= k; ++i) acc += coeff(i) * r.c_[k - i];
            r.c_[k] = -(acc * inv0);
        }
        r.trim();
        return r;
    }

    // exp(f) for f with vanishing constant term.
    HPoly exp(int order) const {
        if (!c_.empty() && !scalar_is_zero(c_[0]))
            throw std::domain_error("HPoly::exp: constant term must vanish");
        int D = std::min(order, order_ == kOrderInf ? order : order_);
        HPoly r = HPoly::one(D);
        HPoly term = HPoly::one(D);
        for (int k = 1; k <= D; ++k) {
            term = (term * *this).truncated(D);
            term = term.scaled_fraction(1, k);
            if (term.is_zero()) break;
            r += term;
        }
        return r;
    }

    // log(f) for f = 1 + O(hbar).
    HPoly log(int order) const {
        S lead = c_.empty() ? scalar_traits<S>::zero() : c_[0];
        S d = lead - scalar_traits<S>::one();
        if (!scalar_is_zero(d))
            throw std::domain_error("HPoly::log: constant term must be 1");
        int D = std::min(order, order_ == kOrderInf ? order : order_);
        HPoly u = *this - HPoly::one();
        u = u.truncated(D);
        HPoly r = HPoly::zero(D);
        HPoly term = HPoly::one(D);
        for (int k = 1; k <= D; ++k) {
            term = (term * u).truncated(D);
            if (term.is_zero()) break;
            r += term.scaled_fraction(k % 2 == 1 ? 1 : -1, k);
        }
        return r;
    }

    HPoly scaled_fraction(long num, long den) const {
        return scaled(scalar_traits<S>::from_fraction(num, den));
    }

    // The hbar^k coefficient as a constant polynomial.
    HPoly slice(int k) const {
        if (order_ < kOrderInf && k > order_)
            throw std::domain_error("HPoly::slice: order exceeded");
        return HPoly(coeff(k), kOrderInf);
    }

    double max_norm() const {
        double m = 0;
        for (const auto &x : c_) m = std::max(m, scalar_norm(x));
        return m;
    }

    bool operator==(const HPoly &b) const {
        size_t n = std::max(c_.size(), b.c_.size());
        for (size_t i = 0; i < n; ++i) {
            S d = coeff(int(i)) - b.coeff(int(i));
            if (!scalar_is_zero(d)) return false;
        }
        return true;
    }

    std::string str() const {
        if (c_.empty()) return "0";
        std::string s;
        bool first = true;
        for (size_t i = 0; i < c_.size(); ++i) {
            if (scalar_is_zero(c_[i])) continue;
            if (!first) s += " + ";
            s += scalar_traits<S>::str(c_[i]);
            if (i == 1) s += "*h";
            if (i > 1) s += "*h^" + std::to_string(i);
            first = false;
        }
        return s;
    }

  private:
    void trim() {
        while (!c_.empty() && scalar_is_zero(c_.back())) c_.pop_back();
    }
    void clamp() {
        if (order_ < kOrderInf && int(c_.size()) > order_ + 1)
            c_.resize(std::max(0, order_ + 1));
        trim();
    }

    std::vector<S> c_;
    int order_;
};

using HPolyQ = HPoly<Rat>;
using HPolyC = HPoly<Cplx>;

} // namespace qca

#endif
