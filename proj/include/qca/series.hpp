#ifndef QCA_SERIES_HPP
#define QCA_SERIES_HPP

#include <algorithm>
#include <cassert>
#include <functional>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>

#include "qca/hpoly.hpp"

namespace qca {

inline constexpr int kModeInf = std::numeric_limits<int>::max() / 4;

// Closed integer interval with +-infinity endpoints, used for support and
// validity windows of truncated Laurent data.
struct ModeInterval {
    int lo = kModeInf;   // empty by default
    int hi = -kModeInf;

    bool empty() const { return lo > hi; }
    bool contains(const ModeInterval &inner) const {
        return inner.empty() || (lo <= inner.lo && inner.hi <= hi);
    }
    static ModeInterval all() { return {-kModeInf, kModeInf}; }
    static ModeInterval of(int a, int b) { return {a, b}; }
    static ModeInterval none() { return {kModeInf, -kModeInf}; }
    ModeInterval canon() const { return empty() ? none() : *this; }
    friend ModeInterval intersect(const ModeInterval &a, const ModeInterval &b) {
        return ModeInterval{std::max(a.lo, b.lo), std::min(a.hi, b.hi)}.canon();
    }
    friend ModeInterval unite(const ModeInterval &a, const ModeInterval &b) {
        if (a.empty()) return b.canon();
        if (b.empty()) return a.canon();
        return {std::min(a.lo, b.lo), std::max(a.hi, b.hi)};
    }
    // Minkowski sum, saturating at infinity.
    friend ModeInterval msum(const ModeInterval &a, const ModeInterval &b) {
        if (a.empty() || b.empty()) return none();
        int lo = (a.lo <= -kModeInf || b.lo <= -kModeInf) ? -kModeInf
                                                          : std::max(-kModeInf, a.lo + b.lo);
        int hi = (a.hi >= kModeInf || b.hi >= kModeInf) ? kModeInf
                                                        : std::min(kModeInf, a.hi + b.hi);
        return {lo, hi};
    }
    friend ModeInterval reflect_about(int m, const ModeInterval &a) {
        if (a.empty()) return none();
        int lo = (a.hi >= kModeInf) ? -kModeInf : m - a.hi;
        int hi = (a.lo <= -kModeInf) ? kModeInf : m - a.lo;
        return {lo, hi};
    }
    // Marks one side as unbounded even when currently empty.
    void open_lo() { lo = -kModeInf; if (hi < lo) hi = lo; }
    void open_hi() { hi = kModeInf; if (lo > hi) lo = hi; }
};

// Truncated Laurent series in one formal variable with coefficients in a ring
// R (an HPoly, or a matrix of them), plus a distinguished log-z summand.
//
// Window semantics: coefficients are correct exactly on `valid`; the element
// is known to vanish outside `support` (support endpoints can be infinite,
// meaning an unbounded tail that the truncation dropped). Every arithmetic
// operation recomputes the guaranteed-valid window of its result, so data
// outside the joint validity is never reported.
template <class R>
class Series {
  public:
    using value_type = R;

    Series() = default;
    explicit Series(int window_lo, int window_hi) : wlo_(window_lo), whi_(window_hi) {}

    static Series zero(int wlo, int whi) {
        Series s(wlo, whi);
        s.valid_ = ModeInterval::all();
        s.support_ = ModeInterval{};
        return s;
    }
    static Series constant(R v, int wlo, int whi) {
        Series s = zero(wlo, whi);
        s.set(0, std::move(v));
        return s;
    }
    static Series monomial(R v, int mode, int wlo, int whi) {
        Series s = zero(wlo, whi);
        s.set(mode, std::move(v));
        return s;
    }

    int window_lo() const { return wlo_; }
    int window_hi() const { return whi_; }
    const ModeInterval &valid() const { return valid_; }
    const ModeInterval &support() const { return support_; }
    bool has_log() const { return has_log_; }
    const R &log_coeff() const { return logc_; }

    // Marks the element as having an unknown tail outside the valid window.
    void mark_tail_lo() { support_.open_lo(); }
    void mark_tail_hi() { support_.open_hi(); }
    void set_support(ModeInterval s) { support_ = s.canon(); }
    void set_valid(ModeInterval v) { valid_ = v; }
    void restrict_valid(ModeInterval v) { valid_ = intersect(valid_, v); }

    const R &coeff(int m) const {
        static const R z{};
        if (!valid_.contains(ModeInterval::of(m, m)))
            throw std::domain_error("Series::coeff: mode " + std::to_string(m) +
                                    " outside the valid window");
        auto it = c_.find(m);
        return it == c_.end() ? z : it->second;
    }
    bool known(int m) const { return valid_.lo <= m && m <= valid_.hi; }

    void set(int m, R v) {
        if (m < wlo_ || m > whi_)
            throw std::domain_error("Series::set: mode outside the storage window");
        support_ = unite(support_, ModeInterval::of(m, m));
        if (v.is_zero())
            c_.erase(m);
        else
            c_[m] = std::move(v);
    }
    void set_log(R v) {
        logc_ = std::move(v);
        has_log_ = !logc_.is_zero();
    }
    void clear_log() {
        logc_ = R{};
        has_log_ = false;
    }

    const std::map<int, R> &coeffs() const { return c_; }

    bool is_zero_on_valid() const {
        if (has_log_) return false;
        for (const auto &[m, v] : c_)
            if (valid_.contains(ModeInterval::of(m, m)) && !v.is_zero()) return false;
        return true;
    }

    friend Series operator+(const Series &a, const Series &b) {
        Series r(std::max(a.wlo_, b.wlo_), std::min(a.whi_, b.whi_));
        r.valid_ = intersect(a.valid_, b.valid_);
        r.support_ = unite(a.support_, b.support_);
        for (const auto &[m, v] : a.c_)
            if (m >= r.wlo_ && m <= r.whi_) r.c_[m] = v;
        for (const auto &[m, v] : b.c_) {
            if (m < r.wlo_ || m > r.whi_) continue;
            auto it = r.c_.find(m);
            if (it == r.c_.end())
                r.c_[m] = v;
            else {
                it->second = it->second + v;
                if (it->second.is_zero()) r.c_.erase(it);
            }
        }
        r.logc_ = a.logc_ + b.logc_;
        r.has_log_ = !r.logc_.is_zero();
        return r;
    }
    friend Series operator-(const Series &a, const Series &b) { return a + b.negated(); }
    Series negated() const {
        Series r = *this;
        for (auto &[m, v] : r.c_) v = -v;
        r.logc_ = -r.logc_;
        return r;
    }

    template <class Scal>
    Series scaled(const Scal &s) const {
        Series r = *this;
        for (auto &[m, v] : r.c_) v = v * s;
        r.logc_ = r.logc_ * s;
        r.has_log_ = !r.logc_.is_zero();
        r.prune();
        return r;
    }

    // (num/den) * hbar^hpow * f, applied coefficientwise; works for any
    // coefficient ring exposing scaled_fraction and mul_hbar.
    Series scaled_fraction_hbar(long num, long den, int hpow) const {
        Series r = *this;
        for (auto &[m, v] : r.c_) v = v.scaled_fraction(num, den).mul_hbar(hpow);
        r.logc_ = r.logc_.scaled_fraction(num, den).mul_hbar(hpow);
        r.has_log_ = !r.logc_.is_zero();
        r.prune();
        return r;
    }
    Series hbar_slice(int k) const { return map_coeffs([k](const R &v) { return v.slice(k); }); }
    Series d_hbar() const { return map_coeffs([](const R &v) { return v.d_hbar(); }); }
    Series truncate_hbar(int k) const {
        return map_coeffs([k](const R &v) { return v.truncated(k); });
    }
    Series div_hbar(int k) const {
        return map_coeffs([k](const R &v) { return v.div_hbar(k); });
    }
    template <class F>
    Series map_coeffs(F &&f) const {
        Series r = *this;
        for (auto &[m, v] : r.c_) v = f(v);
        r.logc_ = f(r.logc_);
        r.has_log_ = !r.logc_.is_zero();
        r.prune();
        return r;
    }

    // Product. Log-bearing factors are only admitted when the other factor is
    // a constant (K~ is K + C log z; anything else would leave the space).
    friend Series operator*(const Series &a, const Series &b) {
        if (a.has_log_ && b.has_log_)
            throw std::domain_error("Series: product of two log-bearing elements");
        if (a.has_log_ && !b.is_constant())
            throw std::domain_error("Series: log-bearing element times non-constant");
        if (b.has_log_ && !a.is_constant())
            throw std::domain_error("Series: non-constant times log-bearing element");
        Series r(std::max(a.wlo_, b.wlo_), std::min(a.whi_, b.whi_));
        r.support_ = msum(a.support_, b.support_);
        int vlo = kModeInf, vhi = -kModeInf;
        for (int m = r.wlo_; m <= r.whi_; ++m) {
            ModeInterval contrib = intersect(a.support_, reflect_about(m, b.support_));
            bool ok = a.valid_.contains(contrib) &&
                      b.valid_.contains(reflect_about(m, contrib));
            if (!ok) {
                // Tail cells: a contiguous valid run is kept, preferring the
                // one that contains complete central cells.
                if (vlo <= vhi && m > vhi) break;
                continue;
            }
            if (vlo > vhi) vlo = m;
            vhi = m;
            R acc{};
            int ilo = std::max(contrib.lo, a.wlo_);
            int ihi = std::min(contrib.hi, a.whi_);
            for (int i = ilo; i <= ihi; ++i) {
                auto ia = a.c_.find(i);
                if (ia == a.c_.end()) continue;
                auto ib = b.c_.find(m - i);
                if (ib == b.c_.end()) continue;
                acc = acc + ia->second * ib->second;
            }
            if (!acc.is_zero()) r.c_[m] = acc;
        }
        r.valid_ = ModeInterval{vlo, vhi};
        if (a.has_log_) r.set_log(a.logc_ * b.coeff(0));
        if (b.has_log_) r.set_log(b.logc_ * a.coeff(0));
        return r;
    }

    bool is_constant() const {
        if (has_log_) return false;
        for (const auto &[m, v] : c_)
            if (m != 0 && !v.is_zero()) return false;
        return support_.empty() || (support_.lo >= 0 && support_.hi <= 0);
    }

    // exp(f). Requires truncation-nilpotency: every power of f eventually
    // leaves the window in modes or in hbar order. Holds when f has only
    // strictly negative modes, only strictly positive modes, or is O(hbar)
    // at mode zero. Mixed-sign mode content must be O(hbar) entirely.
    Series exp_series(int hbar_order) const {
        if (has_log_) throw std::domain_error("Series::exp: log-bearing exponent");
        Series r = Series::constant(R::one(), wlo_, whi_);
        r.valid_ = valid_;
        Series term = r;
        long k = 1;
        // Bound on the number of terms: window width plus hbar order.
        long kmax = long(whi_ - wlo_ + 2) + hbar_order + 2;
        for (; k <= kmax; ++k) {
            term = (term * *this).truncate_hbar(hbar_order);
            term = term.template scaled<R>(R::one().scaled_fraction(1, k));
            if (term.is_zero_on_valid()) break;
            r = r + term;
        }
        if (k > kmax)
            throw std::domain_error("Series::exp: exponent is not truncation-nilpotent");
        return r;
    }

    // log(f) for f = 1 + u with u truncation-nilpotent.
    Series log_series(int hbar_order) const {
        if (has_log_) throw std::domain_error("Series::log: log-bearing argument");
        if (!known(0) || !coeff(0).has_unit_constant())
            throw std::domain_error("Series::log: leading term is not a unit");
        Series u = *this;
        u.set(0, u.coeff(0) - R::one());
        Series r = Series::zero(wlo_, whi_);
        r.valid_ = valid_;
        Series term = Series::constant(R::one(), wlo_, whi_);
        term.valid_ = valid_;
        long kmax = long(whi_ - wlo_ + 2) + hbar_order + 2;
        long k = 1;
        for (; k <= kmax; ++k) {
            term = (term * u).truncate_hbar(hbar_order);
            if (term.is_zero_on_valid()) break;
            r = r + term.template scaled<R>(R::one().scaled_fraction(k % 2 == 1 ? 1 : -1, k));
        }
        if (k > kmax)
            throw std::domain_error("Series::log: argument minus 1 is not truncation-nilpotent");
        return r;
    }

    // Splitting f = f_plus + f_minus: f_plus holds the modes >= 0, f_minus
    // the negative modes together with the log part. Cells on the discarded
    // side are known-zero, so validity extends across that side whenever the
    // original validity reaches the split point.
    Series plus_part() const {
        Series r = *this;
        r.clear_log();
        std::map<int, R> kept;
        for (auto &[m, v] : r.c_)
            if (m >= 0) kept.emplace(m, std::move(v));
        r.c_ = std::move(kept);
        r.support_ = intersect(support_, ModeInterval{0, kModeInf});
        r.valid_ = (valid_.lo <= 0) ? ModeInterval{-kModeInf, valid_.hi} : valid_;
        if (r.support_.hi < kModeInf && r.valid_.hi >= r.support_.hi)
            r.valid_.hi = kModeInf;
        return r;
    }
    Series minus_part() const {
        Series r = *this;
        std::map<int, R> kept;
        for (auto &[m, v] : r.c_)
            if (m < 0) kept.emplace(m, std::move(v));
        r.c_ = std::move(kept);
        r.support_ = intersect(support_, ModeInterval{-kModeInf, -1});
        r.valid_ = (valid_.hi >= -1) ? ModeInterval{valid_.lo, kModeInf} : valid_;
        if (r.support_.lo > -kModeInf && r.valid_.lo <= r.support_.lo)
            r.valid_.lo = -kModeInf;
        return r;
    }

    double max_norm() const {
        double n = 0;
        for (const auto &[m, v] : c_)
            if (valid_.contains(ModeInterval::of(m, m))) n = std::max(n, v.max_norm());
        if (has_log_) n = std::max(n, logc_.max_norm());
        return n;
    }

    // Debug text form: {mode: hbar_power: coefficient}, stable mode order.
    std::string str() const {
        std::ostringstream os;
        if (has_log_) os << "{log: " << logc_.str() << "} ";
        for (const auto &[m, v] : c_) {
            if (!valid_.contains(ModeInterval::of(m, m))) continue;
            if (v.is_zero()) continue;
            os << "{" << m << ": " << v.str() << "} ";
        }
        std::string s = os.str();
        if (s.empty()) s = "0";
        return s;
    }

    void prune() {
        for (auto it = c_.begin(); it != c_.end();)
            it = it->second.is_zero() ? c_.erase(it) : std::next(it);
    }

    // Copy into a different storage window. Cells that do not fit are
    // dropped and the validity is clamped accordingly.
    Series rewindow(int lo, int hi) const {
        Series r = Series::zero(lo, hi);
        for (const auto &[m, v] : c_)
            if (m >= lo && m <= hi) r.set(m, v);
        ModeInterval v2 = valid_;
        ModeInterval s2 = support_;
        if (s2.lo < lo) v2.lo = std::max(v2.lo, lo);
        if (s2.hi > hi) v2.hi = std::min(v2.hi, hi);
        r.set_valid(v2);
        if (s2.lo <= -kModeInf) r.mark_tail_lo();
        if (s2.hi >= kModeInf) r.mark_tail_hi();
        if (has_log_) r.set_log(logc_);
        return r;
    }

  private:
    std::map<int, R> c_;
    R logc_{};
    bool has_log_ = false;
    int wlo_ = 0, whi_ = 0;
    ModeInterval valid_ = ModeInterval::all();
    ModeInterval support_;   // empty
};

} // namespace qca

#endif
