#ifndef QCA_BISERIES_HPP
#define QCA_BISERIES_HPP

#include <functional>
#include <map>
#include <stdexcept>
#include <utility>

#include "qca/series.hpp"

namespace qca {

// Truncated Laurent data in two variables (z, w) with coefficients in R,
// with distinguished log z and log w summands whose coefficients are
// one-variable series in the other variable. Validity windows are tracked
// per variable, exactly as in the one-variable case.
template <class R>
class BiSeries {
  public:
    using Key = std::pair<int, int>;

    BiSeries() = default;
    BiSeries(int zlo, int zhi, int wlo, int whi)
        : zwlo_(zlo), zwhi_(zhi), wwlo_(wlo), wwhi_(whi),
          logz_(wlo, whi), logw_(zlo, zhi) {
        logz_ = Series<R>::zero(wlo, whi);
        logw_ = Series<R>::zero(zlo, zhi);
    }

    static BiSeries zero(int zlo, int zhi, int wlo, int whi) {
        BiSeries b(zlo, zhi, wlo, whi);
        b.vz_ = ModeInterval::all();
        b.vw_ = ModeInterval::all();
        b.sz_ = ModeInterval{};
        b.sw_ = ModeInterval{};
        return b;
    }
    static BiSeries constant(R v, int zlo, int zhi, int wlo, int whi) {
        BiSeries b = zero(zlo, zhi, wlo, whi);
        b.set(0, 0, std::move(v));
        return b;
    }

    int zwin_lo() const { return zwlo_; }
    int zwin_hi() const { return zwhi_; }
    int wwin_lo() const { return wwlo_; }
    int wwin_hi() const { return wwhi_; }
    const ModeInterval &valid_z() const { return vz_; }
    const ModeInterval &valid_w() const { return vw_; }
    const ModeInterval &support_z() const { return sz_; }
    const ModeInterval &support_w() const { return sw_; }
    void mark_tail(bool z_lo, bool z_hi, bool w_lo, bool w_hi) {
        if (z_lo) sz_.open_lo();
        if (z_hi) sz_.open_hi();
        if (w_lo) sw_.open_lo();
        if (w_hi) sw_.open_hi();
    }
    void restrict_valid(ModeInterval z, ModeInterval w) {
        vz_ = intersect(vz_, z);
        vw_ = intersect(vw_, w);
    }
    void set_valid(ModeInterval z, ModeInterval w) {
        vz_ = z;
        vw_ = w;
    }

    bool cell_known(int a, int b) const {
        return vz_.lo <= a && a <= vz_.hi && vw_.lo <= b && b <= vw_.hi;
    }
    const R &cell(int a, int b) const {
        static const R z{};
        if (!cell_known(a, b))
            throw std::domain_error("BiSeries::cell: outside the valid window");
        auto it = c_.find({a, b});
        return it == c_.end() ? z : it->second;
    }
    void set(int a, int b, R v) {
        if (a < zwlo_ || a > zwhi_ || b < wwlo_ || b > wwhi_)
            throw std::domain_error("BiSeries::set: outside the storage window");
        sz_ = unite(sz_, ModeInterval::of(a, a));
        sw_ = unite(sw_, ModeInterval::of(b, b));
        if (v.is_zero())
            c_.erase({a, b});
        else
            c_[{a, b}] = std::move(v);
    }
    const std::map<Key, R> &cells() const { return c_; }

    bool has_log() const { return !logz_.is_zero_on_valid() || !logw_.is_zero_on_valid(); }
    const Series<R> &logz_part() const { return logz_; }
    const Series<R> &logw_part() const { return logw_; }
    void set_logz_part(Series<R> s) { logz_ = std::move(s); }
    void set_logw_part(Series<R> s) { logw_ = std::move(s); }

    friend BiSeries operator+(const BiSeries &a, const BiSeries &b) {
        BiSeries r(std::max(a.zwlo_, b.zwlo_), std::min(a.zwhi_, b.zwhi_),
                   std::max(a.wwlo_, b.wwlo_), std::min(a.wwhi_, b.wwhi_));
        r.vz_ = intersect(a.vz_, b.vz_);
        r.vw_ = intersect(a.vw_, b.vw_);
        r.sz_ = unite(a.sz_, b.sz_);
        r.sw_ = unite(a.sw_, b.sw_);
        for (const auto &[k, v] : a.c_)
            if (r.in_window(k)) r.c_[k] = v;
        for (const auto &[k, v] : b.c_) {
            if (!r.in_window(k)) continue;
            auto it = r.c_.find(k);
            if (it == r.c_.end())
                r.c_[k] = v;
            else {
                it->second = it->second + v;
                if (it->second.is_zero()) r.c_.erase(it);
            }
        }
        r.logz_ = a.logz_ + b.logz_;
        r.logw_ = a.logw_ + b.logw_;
        r.canon_supports();
        return r;
    }
    friend BiSeries operator-(const BiSeries &a, const BiSeries &b) { return a + b.negated(); }
    BiSeries negated() const {
        BiSeries r = *this;
        for (auto &[k, v] : r.c_) v = -v;
        r.logz_ = r.logz_.negated();
        r.logw_ = r.logw_.negated();
        return r;
    }
    template <class Scal>
    BiSeries scaled(const Scal &s) const {
        BiSeries r = *this;
        for (auto &[k, v] : r.c_) v = v * s;
        r.logz_ = r.logz_.template scaled<Scal>(s);
        r.logw_ = r.logw_.template scaled<Scal>(s);
        r.prune();
        return r;
    }

    BiSeries scaled_fraction_hbar(long num, long den, int hpow) const {
        BiSeries r = *this;
        for (auto &[k, v] : r.c_) v = v.scaled_fraction(num, den).mul_hbar(hpow);
        r.logz_ = r.logz_.scaled_fraction_hbar(num, den, hpow);
        r.logw_ = r.logw_.scaled_fraction_hbar(num, den, hpow);
        r.prune();
        return r;
    }
    // hbar^k coefficient of every cell, reinterpreted at order 0.
    BiSeries hbar_slice(int k) const {
        BiSeries r = *this;
        for (auto &[key, v] : r.c_) v = v.slice(k);
        r.logz_ = r.logz_.hbar_slice(k);
        r.logw_ = r.logw_.hbar_slice(k);
        r.prune();
        return r;
    }
    BiSeries d_hbar() const {
        BiSeries r = *this;
        for (auto &[key, v] : r.c_) v = v.d_hbar();
        r.logz_ = r.logz_.d_hbar();
        r.logw_ = r.logw_.d_hbar();
        r.prune();
        return r;
    }
    BiSeries truncate_hbar(int k) const {
        BiSeries r = *this;
        for (auto &[key, v] : r.c_) v = v.truncated(k);
        r.logz_ = r.logz_.truncate_hbar(k);
        r.logw_ = r.logw_.truncate_hbar(k);
        r.prune();
        return r;
    }
    BiSeries div_hbar(int k) const {
        BiSeries r = *this;
        for (auto &[key, v] : r.c_) v = v.div_hbar(k);
        r.logz_ = r.logz_.div_hbar(k);
        r.logw_ = r.logw_.div_hbar(k);
        r.prune();
        return r;
    }

    friend BiSeries operator*(const BiSeries &a, const BiSeries &b) {
        if (a.has_log() || b.has_log())
            throw std::domain_error("BiSeries: products of log-bearing kernels are not supported");
        BiSeries r(std::max(a.zwlo_, b.zwlo_), std::min(a.zwhi_, b.zwhi_),
                   std::max(a.wwlo_, b.wwlo_), std::min(a.wwhi_, b.wwhi_));
        ModeInterval asz = a.sz_, asw = a.sw_, bsz = b.sz_, bsw = b.sw_;
        if (asz.empty() || asw.empty()) { asz = ModeInterval::none(); asw = ModeInterval::none(); }
        if (bsz.empty() || bsw.empty()) { bsz = ModeInterval::none(); bsw = ModeInterval::none(); }
        r.sz_ = msum(asz, bsz);
        r.sw_ = msum(asw, bsw);
        r.vz_ = valid_run(asz, a.vz_, bsz, b.vz_, r.zwlo_, r.zwhi_);
        r.vw_ = valid_run(asw, a.vw_, bsw, b.vw_, r.wwlo_, r.wwhi_);
        // Convolution over valid result cells only.
        for (int az = r.vz_.lo; az <= r.vz_.hi; ++az) {
            if (az < r.zwlo_ || az > r.zwhi_) continue;
            for (int bw = r.vw_.lo; bw <= r.vw_.hi; ++bw) {
                if (bw < r.wwlo_ || bw > r.wwhi_) continue;
                R acc{};
                bool any = false;
                for (const auto &[k, v] : a.c_) {
                    auto it = b.c_.find({az - k.first, bw - k.second});
                    if (it == b.c_.end()) continue;
                    acc = acc + v * it->second;
                    any = true;
                }
                if (any && !acc.is_zero()) r.c_[{az, bw}] = std::move(acc);
            }
        }
        return r;
    }

    BiSeries exp_series(int hbar_order) const {
        if (has_log()) throw std::domain_error("BiSeries::exp: log-bearing exponent");
        BiSeries r = BiSeries::constant(R::one(), zwlo_, zwhi_, wwlo_, wwhi_);
        r.vz_ = vz_;
        r.vw_ = vw_;
        BiSeries term = r;
        long kmax = long(zwhi_ - zwlo_ + 2) + long(wwhi_ - wwlo_ + 2) + hbar_order + 2;
        long k = 1;
        for (; k <= kmax; ++k) {
            term = (term * *this).truncate_hbar(hbar_order);
            term = term.template scaled<R>(R::one().scaled_fraction(1, k));
            if (term.is_zero_on_valid()) break;
            r = r + term;
        }
        if (k > kmax)
            throw std::domain_error("BiSeries::exp: exponent is not truncation-nilpotent");
        return r;
    }

    BiSeries log_series(int hbar_order) const {
        if (has_log()) throw std::domain_error("BiSeries::log: log-bearing argument");
        if (!cell_known(0, 0) || !cell(0, 0).has_unit_constant())
            throw std::domain_error("BiSeries::log: leading cell is not a unit");
        BiSeries u = *this;
        u.set(0, 0, u.cell(0, 0) - R::one());
        BiSeries r = BiSeries::zero(zwlo_, zwhi_, wwlo_, wwhi_);
        r.vz_ = vz_;
        r.vw_ = vw_;
        BiSeries term = BiSeries::constant(R::one(), zwlo_, zwhi_, wwlo_, wwhi_);
        term.vz_ = vz_;
        term.vw_ = vw_;
        long kmax = long(zwhi_ - zwlo_ + 2) + long(wwhi_ - wwlo_ + 2) + hbar_order + 2;
        long k = 1;
        for (; k <= kmax; ++k) {
            term = (term * u).truncate_hbar(hbar_order);
            if (term.is_zero_on_valid()) break;
            r = r + term.template scaled<R>(R::one().scaled_fraction(k % 2 == 1 ? 1 : -1, k));
        }
        if (k > kmax)
            throw std::domain_error("BiSeries::log: argument minus 1 is not truncation-nilpotent");
        return r;
    }

    bool is_zero_on_valid() const {
        if (has_log()) return false;
        for (const auto &[k, v] : c_)
            if (cell_known(k.first, k.second) && !v.is_zero()) return false;
        return true;
    }

    BiSeries transposed() const {
        BiSeries r(wwlo_, wwhi_, zwlo_, zwhi_);
        r.vz_ = vw_;
        r.vw_ = vz_;
        r.sz_ = sw_;
        r.sw_ = sz_;
        for (const auto &[k, v] : c_) r.c_[{k.second, k.first}] = v;
        r.logz_ = logw_;
        r.logw_ = logz_;
        return r;
    }

    // Column view at fixed w-mode b: the z-profile as a one-variable series.
    // Inherits the bi-series z-support bounds and z-validity.
    Series<R> z_column(int b) const {
        Series<R> out = Series<R>::zero(zwlo_, zwhi_);
        for (const auto &[k, v] : c_)
            if (k.second == b) out.set(k.first, v);
        out.set_support(sz_);   // per-column support is inside the joint one
        out.set_valid(vz_);
        if (!logz_.is_zero_on_valid() && logz_.known(b)) out.set_log(logz_.coeff(b));
        return out;
    }

    // Applies a one-variable transform to every z-column (including the
    // log w part, which is a z-series) and reassembles the result.
    BiSeries transform_z(const std::function<Series<R>(const Series<R> &)> &fn) const {
        BiSeries r(zwlo_, zwhi_, wwlo_, wwhi_);
        r.vw_ = vw_;
        r.sw_ = sw_;
        ModeInterval vz = ModeInterval::all();
        ModeInterval sz{};
        Series<R> new_logz = Series<R>::zero(wwlo_, wwhi_);
        new_logz.set_valid(vw_);
        bool any_log = false;
        for (int b = std::max(vw_.lo, wwlo_); b <= std::min(vw_.hi, wwhi_); ++b) {
            Series<R> col = z_column(b);
            Series<R> img = fn(col);
            vz = intersect(vz, img.valid());
            sz = unite(sz, img.support());
            for (const auto &[m, v] : img.coeffs())
                if (m >= zwlo_ && m <= zwhi_ && !v.is_zero()) r.c_[{m, b}] = v;
            if (img.has_log()) {
                new_logz.set(b, img.log_coeff());
                any_log = true;
            }
        }
        r.vz_ = vz;
        r.sz_ = sz;
        if (any_log) r.logz_ = new_logz;
        if (!logw_.is_zero_on_valid()) r.logw_ = fn(logw_);
        if (!r.has_log()) r.canon_supports();
        return r;
    }
    BiSeries transform_w(const std::function<Series<R>(const Series<R> &)> &fn) const {
        return transposed().transform_z(fn).transposed();
    }

    // Splits in the first variable; minus keeps negative z-modes and log z.
    BiSeries z_minus() const {
        BiSeries r = *this;
        std::map<Key, R> kept;
        for (auto &[k, v] : r.c_)
            if (k.first < 0) kept.emplace(k, std::move(v));
        r.c_ = std::move(kept);
        r.sz_ = intersect(sz_, ModeInterval{-kModeInf, -1});
        r.vz_ = (vz_.hi >= -1) ? ModeInterval{vz_.lo, kModeInf} : vz_;
        r.logw_ = logw_.minus_part();
        return r;
    }
    BiSeries z_plus() const {
        BiSeries r = *this;
        std::map<Key, R> kept;
        for (auto &[k, v] : r.c_)
            if (k.first >= 0) kept.emplace(k, std::move(v));
        r.c_ = std::move(kept);
        r.sz_ = intersect(sz_, ModeInterval{0, kModeInf});
        r.vz_ = (vz_.lo <= 0) ? ModeInterval{-kModeInf, vz_.hi} : vz_;
        r.logz_ = Series<R>::zero(wwlo_, wwhi_);
        r.logw_ = logw_.plus_part();
        return r;
    }
    BiSeries w_minus() const { return transposed().z_minus().transposed(); }
    BiSeries w_plus() const { return transposed().z_plus().transposed(); }

    // Diagonal evaluation w = z: cell (a,b) lands at mode a+b.
    Series<R> diagonal() const {
        Series<R> r = Series<R>::zero(zwlo_ + wwlo_, zwhi_ + wwhi_);
        ModeInterval diag_support = msum(sz_, sw_);
        // A diagonal mode m is exact when the anti-diagonal a+b=m crosses the
        // support rectangle entirely inside the valid rectangle.
        auto mode_ok = [&](int m) {
            ModeInterval arange = intersect(sz_, reflect_about(m, sw_));
            return vz_.contains(arange) && vw_.contains(reflect_about(m, arange));
        };
        std::map<int, R> acc;
        for (const auto &[k, v] : c_) {
            int m = k.first + k.second;
            auto it = acc.find(m);
            if (it == acc.end())
                acc.emplace(m, v);
            else
                it->second = it->second + v;
        }
        int lo = kModeInf, hi = -kModeInf;
        for (int m = std::max(diag_support.lo, zwlo_ + wwlo_);
             m <= std::min(diag_support.hi, zwhi_ + wwhi_); ++m) {
            if (!mode_ok(m)) {
                if (lo <= hi && m > hi) break;
                continue;
            }
            if (lo > hi) lo = m;
            hi = m;
            auto it = acc.find(m);
            if (it != acc.end() && !it->second.is_zero()) r.set(m, it->second);
        }
        if (diag_support.lo <= -kModeInf) r.mark_tail_lo();
        if (diag_support.hi >= kModeInf) r.mark_tail_hi();
        r.set_valid(ModeInterval{lo, hi});
        // log z + log w on the diagonal merge into a single log z summand;
        // only constant coefficients stay inside K~.
        if (has_log()) {
            Series<R> ls = logz_;   // series in w, evaluated at w=z -> same modes
            Series<R> lw = logw_;
            R logcoef{};
            for (const auto &[m, v] : ls.coeffs()) {
                if (m != 0) throw std::domain_error("BiSeries::diagonal: non-scalar log part");
                logcoef = logcoef + v;
            }
            for (const auto &[m, v] : lw.coeffs()) {
                if (m != 0) throw std::domain_error("BiSeries::diagonal: non-scalar log part");
                logcoef = logcoef + v;
            }
            if (!logcoef.is_zero()) r.set_log(logcoef);
        }
        return r;
    }

    double max_norm() const {
        double n = 0;
        for (const auto &[k, v] : c_)
            if (cell_known(k.first, k.second)) n = std::max(n, v.max_norm());
        n = std::max(n, logz_.max_norm());
        n = std::max(n, logw_.max_norm());
        return n;
    }

    std::string str() const {
        std::ostringstream os;
        for (const auto &[k, v] : c_) {
            if (!cell_known(k.first, k.second) || v.is_zero()) continue;
            os << "{" << k.first << "," << k.second << ": " << v.str() << "} ";
        }
        std::string s = os.str();
        return s.empty() ? "0" : s;
    }

    void prune() {
        for (auto it = c_.begin(); it != c_.end();)
            it = it->second.is_zero() ? c_.erase(it) : std::next(it);
    }

  private:
    // no cells at all when either variable's support is empty
    void canon_supports() {
        if (sz_.empty() || sw_.empty()) {
            sz_ = ModeInterval::none();
            sw_ = ModeInterval::none();
        }
    }
    bool in_window(const Key &k) const {
        return k.first >= zwlo_ && k.first <= zwhi_ && k.second >= wwlo_ && k.second <= wwhi_;
    }
    // One-variable validity rule for products, scanned over the window.
    static ModeInterval valid_run(const ModeInterval &sa, const ModeInterval &va,
                                  const ModeInterval &sb, const ModeInterval &vb,
                                  int wlo, int whi) {
        int lo = kModeInf, hi = -kModeInf;
        for (int m = wlo; m <= whi; ++m) {
            ModeInterval contrib = intersect(sa, reflect_about(m, sb));
            bool ok = va.contains(contrib) && vb.contains(reflect_about(m, contrib));
            if (!ok) {
                if (lo <= hi && m > hi) break;
                continue;
            }
            if (lo > hi) lo = m;
            hi = m;
        }
        return {lo, hi};
    }

    std::map<Key, R> c_;
    int zwlo_ = 0, zwhi_ = 0, wwlo_ = 0, wwhi_ = 0;
    ModeInterval vz_ = ModeInterval::all(), vw_ = ModeInterval::all();
    ModeInterval sz_{}, sw_{};
    Series<R> logz_;   // coefficient of log z: a series in w
    Series<R> logw_;   // coefficient of log w: a series in z
};

} // namespace qca

#endif
