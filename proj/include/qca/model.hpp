#ifndef QCA_MODEL_HPP
#define QCA_MODEL_HPP

#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "qca/biseries.hpp"
#include "qca/series.hpp"
#include "qca/theta.hpp"

namespace qca {

enum class ModelKind { RationalDz, RationalDzOverZ, RationalZN, EllipticDz };

inline const char *model_kind_name(ModelKind k) {
    switch (k) {
        case ModelKind::RationalDz: return "rational-dz";
        case ModelKind::RationalDzOverZ: return "rational-dz-over-z";
        case ModelKind::RationalZN: return "rational-zn";
        case ModelKind::EllipticDz: return "elliptic-dz";
    }
    return "?";
}

// Coefficients of x/(e^x - 1) (plus = false) or x/(1 - e^{-x}) (plus = true),
// exact rationals.
inline std::vector<Rat> todd_coefficients(int order, bool plus) {
    // invert u = (e^x-1)/x = sum x^m/(m+1)! termwise
    std::vector<Rat> u(order + 1);
    Rat fact(1);
    for (int m = 0; m <= order; ++m) {
        fact *= (m + 1);
        u[m] = Rat(1) / fact;
    }
    std::vector<Rat> c(order + 1);
    c[0] = 1;
    for (int m = 1; m <= order; ++m) {
        Rat acc(0);
        for (int j = 1; j <= m; ++j) acc += u[j] * c[m - j];
        c[m] = -acc;
    }
    if (plus && order >= 1) c[1] += 1;   // x/(1-e^{-x}) = x/(e^x-1) + x
    return c;
}

// Coefficients of (e^x - e^{-x})/x = 2 sum_j x^{2j}/(2j+1)!.
inline std::vector<Rat> sinh_ratio_coefficients(int order) {
    std::vector<Rat> c(order + 1, Rat(0));
    Rat fact(1);
    for (int m = 0; m <= order; ++m) {
        fact *= (m + 1);
        if (m % 2 == 0) c[m] = Rat(2) / fact;
    }
    return c;
}

// A curve with a chosen meromorphic differential, its local-coordinate
// calculus and its dual bases. All series data lives at the marked point(s)
// in the coordinate z.
//
// Pairing conventions: pair() is the model's raw residue pairing, oriented so
// that the catalogued dual bases satisfy <r^i, lambda_j> = delta exactly. The
// kernel layer uses the sign-normalized bases (green_sign() * lambda) so that
// the Green kernel matches its closed form; the representation layer uses the
// raw ones. Both signs are reported as normalization constants.
template <class S>
class Model {
  public:
    using HP = HPoly<S>;
    using Ser = Series<HP>;
    using Bi = BiSeries<HP>;

    static Model rational_dz(int hbar_order) {
        Model m;
        m.kind_ = ModelKind::RationalDz;
        m.horder_ = hbar_order;
        return m;
    }
    static Model rational_zn(int n, int hbar_order) {
        if (n < 0) throw std::domain_error("Model: zn parameter must be nonnegative");
        Model m;
        m.kind_ = ModelKind::RationalZN;
        m.n_ = n;
        m.horder_ = hbar_order;
        return m;
    }
    static Model rational_dz_over_z(int hbar_order) {
        Model m;
        m.kind_ = ModelKind::RationalDzOverZ;
        m.horder_ = hbar_order;
        return m;
    }
    static Model elliptic(Cplx tau, Cplx lambda, int theta_terms, int hbar_order) {
        static_assert(!scalar_traits<S>::exact || sizeof(S) == 0,
                      "elliptic model requires the complex scalar field");
        Model m;
        m.kind_ = ModelKind::EllipticDz;
        m.horder_ = hbar_order;
        m.tau_ = tau;
        m.lambda_ = lambda;
        m.theta_ = std::make_shared<Theta>(tau, theta_terms);
        return m;
    }

    ModelKind kind() const { return kind_; }
    int zn() const { return n_; }
    int hbar_order() const { return horder_; }
    int components() const { return kind_ == ModelKind::RationalDzOverZ ? 2 : 1; }
    Cplx tau() const { return tau_; }
    Cplx dyn_lambda() const { return lambda_; }
    const Theta &theta() const {
        if (!theta_) throw std::domain_error("Model: no theta data on this model");
        return *theta_;
    }
    bool lambda_in_lattice() const {
        if (kind_ != ModelKind::EllipticDz) return true;
        // lambda = a + b tau with a, b close to integers
        Cplx t = tau_;
        double det = t.imag();
        double b = lambda_.imag() / det;
        double a = lambda_.real() - b * t.real();
        return std::abs(a - std::round(a)) < 1e-9 && std::abs(b - std::round(b)) < 1e-9;
    }

    // Mode drop of one application of the derivation d/omega.
    int derive_drop() const {
        switch (kind_) {
            case ModelKind::RationalDz:
            case ModelKind::EllipticDz: return 1;
            case ModelKind::RationalDzOverZ: return 0;
            case ModelKind::RationalZN: return 2 * n_ + 1;
        }
        return 1;
    }
    // alpha_0 = d log z / omega as a monomial mode; r_0 with omega = r_0 dz.
    int alpha0_mode() const { return -1 - r0_mode(); }
    int r0_mode() const {
        switch (kind_) {
            case ModelKind::RationalDz:
            case ModelKind::EllipticDz: return 0;
            case ModelKind::RationalDzOverZ: return -1;
            case ModelKind::RationalZN: return 2 * n_;
        }
        return 0;
    }
    Ser alpha0(int wlo, int whi) const {
        return Ser::monomial(HP::one(), alpha0_mode(), wlo, whi);
    }
    Ser r0_series(int wlo, int whi) const {
        return Ser::monomial(HP::one(), r0_mode(), wlo, whi);
    }
    // Sign normalization applied to the dual bases by the kernel layer so
    // that the Green kernel matches its closed form.
    int green_sign() const {
        switch (kind_) {
            case ModelKind::RationalDz:
            case ModelKind::EllipticDz: return -1;
            default: return +1;
        }
    }
    // <1, alpha_0> under the raw pairing.
    S orientation_constant() const {
        int w = 2 * n_ + 3;
        Ser one = Ser::constant(HP::one(), -w, w);
        Ser a0 = alpha0(-w, w);
        return pair(one, a0).coeff(0);
    }

    // ---- derivation calculus (coefficient ring R is an HPoly or a matrix of
    //      them; only ring operations and hbar grading are used) ----

    template <class R>
    Series<R> derive(const Series<R> &f) const {
        const int drop = derive_drop();
        Series<R> r = Series<R>::zero(f.window_lo(), f.window_hi());
        for (const auto &[m, v] : f.coeffs()) {
            if (m == 0 && drop != 0) continue;
            long factor = m;
            int target = m - drop;
            if (target < f.window_lo() || target > f.window_hi()) continue;
            r.set(target, v.scaled_fraction(factor, 1));
        }
        if (f.has_log()) {
            int a0 = alpha0_mode();
            if (a0 >= f.window_lo() && a0 <= f.window_hi()) {
                // d(log z) = alpha_0
                auto it = r.coeffs().find(a0);
                R cur = (it != r.coeffs().end()) ? it->second : R{};
                r.set(a0, cur + f.log_coeff());
            } else {
                throw std::domain_error("Model::derive: alpha_0 mode outside window");
            }
        }
        ModeInterval v = f.valid();
        ModeInterval s = f.support();
        if (v.lo > -kModeInf) v.lo -= drop;
        if (v.hi < kModeInf) v.hi -= drop;
        if (s.lo > -kModeInf) s.lo -= drop;
        if (s.hi < kModeInf) s.hi -= drop;
        if (f.has_log()) {
            s.lo = std::min(s.lo, alpha0_mode());
            s.hi = std::max(s.hi, alpha0_mode());
        }
        // cells that dropped out of the storage window are lost
        if (s.lo < f.window_lo()) v.lo = std::max(v.lo, f.window_lo());
        if (s.hi > f.window_hi()) v.hi = std::min(v.hi, f.window_hi());
        // cells beyond a finite support side are known zero
        if (s.hi < kModeInf && v.hi >= s.hi) v.hi = kModeInf;
        if (s.lo > -kModeInf && v.lo <= s.lo) v.lo = -kModeInf;
        r.set_valid(v);
        if (s.lo <= -kModeInf) r.mark_tail_lo();
        if (s.hi >= kModeInf) r.mark_tail_hi();
        return r;
    }

    // The inverse derivation K -> K~ : the unique right inverse of the
    // derivation that kills the alpha_0 pairing and sends alpha_0 to log z.
    template <class R>
    Series<R> antiderive(const Series<R> &f) const {
        if (f.has_log())
            throw std::domain_error("Model::antiderive: input must be log-free");
        const int drop = derive_drop();
        const int a0 = alpha0_mode();
        Series<R> r = Series<R>::zero(f.window_lo(), f.window_hi());
        R logc{};
        for (const auto &[m, v] : f.coeffs()) {
            if (m == a0) {
                logc = logc + v;
                continue;
            }
            int target = m + drop;
            if (target < f.window_lo() || target > f.window_hi()) continue;
            r.set(target, v.scaled_fraction(1, target));
        }
        if (!logc.is_zero()) r.set_log(logc);
        ModeInterval v = f.valid();
        ModeInterval s = f.support();
        if (v.lo > -kModeInf) v.lo += drop;
        if (v.hi < kModeInf) v.hi += drop;
        if (s.lo > -kModeInf) s.lo += drop;
        if (s.hi < kModeInf) s.hi += drop;
        if (s.lo < f.window_lo()) v.lo = std::max(v.lo, f.window_lo());
        if (s.hi > f.window_hi()) v.hi = std::min(v.hi, f.window_hi());
        if (s.hi < kModeInf && v.hi >= s.hi) v.hi = kModeInf;
        if (s.lo > -kModeInf && v.lo <= s.lo) v.lo = -kModeInf;
        r.set_valid(v);
        if (s.lo <= -kModeInf) r.mark_tail_lo();
        if (s.hi >= kModeInf) r.mark_tail_hi();
        return r;
    }

    // e^{k hbar d} with rational k, truncated at the model's hbar order.
    template <class R>
    Series<R> shift(const Series<R> &f, long knum, long kden = 1) const {
        Series<R> acc = f;
        Series<R> dm = f;
        Rat coef(1);
        for (int m = 1; m <= horder_; ++m) {
            dm = derive(dm);
            coef *= Rat(knum, kden);
            coef /= m;
            acc = acc + dm.scaled_fraction_hbar(coef.get_num().get_si(),
                                                coef.get_den().get_si(), m);
        }
        return acc;
    }

    // Applies sum_m c_m (hbar d)^m with given rational coefficients.
    template <class R>
    Series<R> apply_hd_series(const Series<R> &f, const std::vector<Rat> &c) const {
        Series<R> acc =
            f.scaled_fraction_hbar(c[0].get_num().get_si(), c[0].get_den().get_si(), 0);
        Series<R> dm = f;
        for (int m = 1; m < int(c.size()) && m <= horder_; ++m) {
            dm = derive(dm);
            if (sgn(c[m]) == 0) continue;
            acc = acc + dm.scaled_fraction_hbar(c[m].get_num().get_si(),
                                                c[m].get_den().get_si(), m);
        }
        return acc;
    }

    // (e^{hbar d} - e^{-hbar d}) applied after the inverse derivation; the
    // log part cancels between the two shifts.
    template <class R>
    Series<R> sym_shift_antiderive(const Series<R> &f) const {
        Series<R> g = antiderive(f);
        Series<R> out = shift(g, 1) - shift(g, -1);
        out.clear_log();
        return out;
    }

    // T = (e^{hbar d} - e^{-hbar d})/(hbar d): even series, T(1) = 2.
    template <class R>
    Series<R> T_op(const Series<R> &f) const {
        return apply_hd_series(f, sinh_ratio_coefficients(horder_));
    }

    // hbar d/(e^{hbar d} - 1) and hbar d/(1 - e^{-hbar d}).
    template <class R>
    Series<R> todd_minus(const Series<R> &f) const {
        return apply_hd_series(f, todd_coefficients(horder_, false));
    }
    template <class R>
    Series<R> todd_plus(const Series<R> &f) const {
        return apply_hd_series(f, todd_coefficients(horder_, true));
    }

    // ---- residue pairing (single marked point kinds) ----

    template <class R>
    R pair(const Series<R> &f, const Series<R> &g) const {
        if (components() != 1)
            throw std::domain_error("Model::pair: use pair2 for two-point models");
        if (f.has_log() || g.has_log())
            throw std::domain_error("Model::pair: log-bearing arguments are not pairable");
        Series<R> p = f * g;
        int mode = -1 - r0_mode();
        if (!p.known(mode))
            throw std::domain_error("Model::pair: residue mode outside the valid window");
        return p.coeff(mode);
    }
    // Weight of the monomial z^b under pairing against h: pair(z^b, h).
    template <class R>
    R monomial_pair_weight(int b, const Series<R> &h) const {
        int mode = -1 - r0_mode() - b;
        if (!h.known(mode)) {
            // outside h's validity: acceptable only when provably zero
            if (h.support().lo <= mode && mode <= h.support().hi)
                throw std::domain_error("Model::monomial_pair_weight: mode outside validity");
            return R{};
        }
        return h.coeff(mode);
    }

    // ---- dual bases ----

    struct BasisFamily {
        std::vector<Ser> r;     // r^0 .. r^N
        std::vector<Ser> lam;   // raw duals lambda_0 .. lambda_N
        int sign = +1;          // green_sign of the model, recorded
    };

    // Raw catalogued bases with <r^i, lambda_j> = delta_ij under pair().
    BasisFamily dual_bases(int max_index, int wlo, int whi) const {
        BasisFamily fam;
        fam.sign = green_sign();
        switch (kind_) {
            case ModelKind::RationalDz:
                for (int i = 0; i <= max_index; ++i) {
                    fam.r.push_back(Ser::monomial(HP::one(), i, wlo, whi));
                    fam.lam.push_back(Ser::monomial(HP::one(), -i - 1, wlo, whi));
                }
                break;
            case ModelKind::RationalZN:
                for (int i = 0; i <= max_index; ++i) {
                    fam.r.push_back(Ser::monomial(HP::one(), -n_ - i - 1, wlo, whi));
                    fam.lam.push_back(Ser::monomial(HP::one(), i - n_, wlo, whi));
                }
                break;
            case ModelKind::EllipticDz: {
                if constexpr (std::is_same_v<S, Cplx>) {
                    auto span = elliptic_spanning_set(max_index, wlo, whi);
                    fam = biorthogonalize(span, max_index, wlo, whi);
                } else {
                    throw std::domain_error("Model: elliptic model needs the complex field");
                }
                break;
            }
            case ModelKind::RationalDzOverZ:
                throw std::domain_error("Model::dual_bases: use dual_bases2 for two-point models");
        }
        return fam;
    }

    // Spanning set of the complement for the elliptic model: derivatives of
    // zeta (lattice dynamical parameter) or of theta(lambda+z)/theta(z).
    std::vector<Ser> elliptic_spanning_set(int max_index, int wlo, int whi) const {
        if constexpr (!std::is_same_v<S, Cplx>) {
            (void)max_index; (void)wlo; (void)whi;
            throw std::domain_error("Model: elliptic spanning set needs the complex field");
        } else {
        std::vector<Ser> span;
        const int deg = whi;   // Taylor tail to the top of the window
        if (lambda_in_lattice()) {
            // v_k = d^k zeta = (-1)^k k! z^{-k-1} + (Taylor tail)
            std::vector<Cplx> cur_tail = theta_->zeta_taylor_tail(deg + max_index + 1);
            double pole_coef = 1.0;
            for (int k = 0; k <= max_index; ++k) {
                Ser v = Ser::zero(wlo, whi);
                if (-k - 1 >= wlo)
                    v.set(-k - 1, HP(Cplx(pole_coef, 0.0)));
                else
                    v.mark_tail_lo();
                for (int m = 0; m <= deg; ++m)
                    if (std::abs(cur_tail[m]) > 0) v.set(m, HP(cur_tail[m]));
                v.mark_tail_hi();
                v.set_valid(ModeInterval::of(wlo, deg));
                span.push_back(v);
                pole_coef *= double(-k - 1);
                std::vector<Cplx> nt(cur_tail.size(), Cplx(0, 0));
                for (size_t m = 0; m + 1 < cur_tail.size(); ++m)
                    nt[m] = Cplx(double(m + 1), 0.0) * cur_tail[m + 1];
                cur_tail = nt;
            }
        } else {
            // ratio(z) = theta(z+lambda)/(theta(z) theta(lambda)):
            // Laurent 1/z + a_0 + a_1 z + ...
            std::vector<Cplx> lau = lambda_ratio_laurent(deg + max_index + 2);
            // lau[m] = coefficient of z^{m-1}, m = 0 is the 1/z part
            std::vector<Cplx> cur = lau;
            for (int k = 0; k <= max_index; ++k) {
                Ser v = Ser::zero(wlo, whi);
                for (int m = 0; m < int(cur.size()); ++m) {
                    int mode = m - 1 - k;
                    if (mode >= wlo && mode <= whi && std::abs(cur[m]) > 0)
                        v.set(mode, HP(cur[m]));
                }
                if (-1 - k < wlo) v.mark_tail_lo();
                v.mark_tail_hi();
                v.set_valid(ModeInterval::of(wlo, whi - 1));
                span.push_back(v);
                // Differentiate the Laurent data in place: cur[m] holds the
                // coefficient of z^{m-1-k}; the derivative of z^e lands at
                // z^{e-1} = z^{m-1-(k+1)}, same vector index.
                std::vector<Cplx> nxt(cur.size(), Cplx(0, 0));
                for (int m = 0; m < int(cur.size()); ++m)
                    nxt[m] = Cplx(double(m - 1 - k), 0.0) * cur[m];
                cur = nxt;
            }
        }
        return span;
        }
    }

    // Solve the triangular system making the spanning set dual to r^i = z^i.
    BasisFamily biorthogonalize(const std::vector<Ser> &span, int max_index, int wlo,
                                int whi) const {
        BasisFamily fam;
        fam.sign = green_sign();
        for (int i = 0; i <= max_index; ++i)
            fam.r.push_back(Ser::monomial(HP::one(), i, wlo, whi));
        // M[i][k] = <z^i, v_k> = coefficient of z^{-i-1} in v_k
        const int N = max_index;
        std::vector<std::vector<S>> M(N + 1, std::vector<S>(N + 1, scalar_traits<S>::zero()));
        for (int i = 0; i <= N; ++i)
            for (int k = 0; k <= N; ++k)
                M[i][k] = monomial_pair_weight(i, span[k]).coeff(0);
        // lambda_j = sum_k a_k v_k with M a = e_j, solved from the top index
        // down (M is upper triangular up to tolerance: M[i][k] ~ 0 for i > k).
        for (int j = 0; j <= N; ++j) {
            std::vector<S> a(N + 1, scalar_traits<S>::zero());
            for (int i = N; i >= 0; --i) {
                S rhs = (i == j) ? scalar_traits<S>::one() : scalar_traits<S>::zero();
                for (int k = i + 1; k <= N; ++k) rhs = rhs - M[i][k] * a[k];
                if (scalar_norm(M[i][i]) == 0)
                    throw std::domain_error("Model::biorthogonalize: singular Gram system");
                a[i] = rhs / M[i][i];
            }
            Ser lam = Ser::zero(wlo, whi);
            for (int k = 0; k <= N; ++k) {
                if (scalar_norm(a[k]) == 0) continue;
                lam = lam + span[k].template scaled<HP>(HP(a[k]));
            }
            fam.lam.push_back(lam);
        }
        return fam;
    }

    // ---- two-point model (omega = dz/z): components at 0 and infinity ----

    struct BasisFamily2 {
        // index i in [-N, N] stored at position i + N; components (at 0, at inf)
        std::vector<std::array<Ser, 2>> r, lam;
        int max_abs = 0;
    };

    BasisFamily2 dual_bases2(int max_abs_index, int wlo, int whi) const {
        if (kind_ != ModelKind::RationalDzOverZ)
            throw std::domain_error("Model::dual_bases2: only for the two-point model");
        BasisFamily2 fam;
        fam.max_abs = max_abs_index;
        const int N = max_abs_index;
        for (int i = -N; i <= N; ++i) {
            Ser ri = Ser::monomial(HP::one(), i, wlo, whi);
            fam.r.push_back({ri, ri});
            Ser z0 = Ser::zero(wlo, whi);
            if (i < 0) {
                fam.lam.push_back({Ser::monomial(HP::one(), -i, wlo, whi), z0});
            } else if (i > 0) {
                fam.lam.push_back({z0, Ser::monomial(-HP::one(), -i, wlo, whi)});
            } else {
                // <r^0, lambda_0> = 1 needs the halved constant pair
                fam.lam.push_back({Ser::constant(HP::one().scaled_fraction(1, 2), wlo, whi),
                                   Ser::constant(HP::one().scaled_fraction(-1, 2), wlo, whi)});
            }
        }
        return fam;
    }

    // Residue pairing over both marked points: res_0(fg omega) + res_inf(fg omega).
    HP pair2(const std::array<Ser, 2> &f, const std::array<Ser, 2> &g) const {
        if (kind_ != ModelKind::RationalDzOverZ)
            throw std::domain_error("Model::pair2: only for the two-point model");
        Series<HP> p0 = f[0] * g[0];
        Series<HP> pi = f[1] * g[1];
        if (!p0.known(0) || !pi.known(0))
            throw std::domain_error("Model::pair2: residue mode outside the valid window");
        return p0.coeff(0) - pi.coeff(0);
    }

    // ---- projections onto R and onto the complement ----

    template <class R>
    Series<R> project_R(const Series<R> &f, const BasisFamily &fam) const {
        switch (kind_) {
            case ModelKind::RationalDz: {
                if (f.has_log()) throw std::domain_error("Model::project: log-bearing input");
                return f.plus_part();
            }
            case ModelKind::RationalZN: {
                if (f.has_log()) throw std::domain_error("Model::project: log-bearing input");
                // R holds the modes <= -n-1
                Series<R> r = Series<R>::zero(f.window_lo(), f.window_hi());
                for (const auto &[m, v] : f.coeffs())
                    if (m <= -n_ - 1) r.set(m, v);
                ModeInterval vv = f.valid();
                if (vv.hi >= -n_ - 1) vv.hi = kModeInf;
                r.set_valid(vv);
                if (intersect(f.support(), ModeInterval{-kModeInf, -n_ - 1}).lo <= -kModeInf)
                    r.mark_tail_lo();
                return r;
            }
            default:
                return f - project_La(f, fam);
        }
    }
    template <class R>
    Series<R> project_La(const Series<R> &f, const BasisFamily &fam) const {
        if (f.has_log()) throw std::domain_error("Model::project: log-bearing input");
        switch (kind_) {
            case ModelKind::RationalDz: {
                Series<R> r = f;
                return r.minus_part();
            }
            case ModelKind::RationalZN: {
                // complement holds modes >= -n
                Series<R> r = Series<R>::zero(f.window_lo(), f.window_hi());
                for (const auto &[m, v] : f.coeffs())
                    if (m >= -n_) r.set(m, v);
                ModeInterval vv = f.valid();
                ModeInterval s = intersect(f.support(), ModeInterval{-n_, kModeInf});
                if (vv.lo <= -n_) vv.lo = -kModeInf;
                r.set_valid(vv);
                if (s.hi >= kModeInf) r.mark_tail_hi();
                return r;
            }
            case ModelKind::EllipticDz: {
                // match principal parts against the duals; each dual has a
                // single controlled principal mode z^{-j-1} (normalization
                // read off the basis element itself)
                Series<R> acc = Series<R>::zero(f.window_lo(), f.window_hi());
                acc.set_valid(f.valid());
                for (int j = 0; j < int(fam.lam.size()); ++j) {
                    int mode = -j - 1;
                    if (mode < f.window_lo()) break;
                    if (!f.known(mode)) {
                        if (f.support().lo <= mode)
                            throw std::domain_error("Model::project: window too small");
                        continue;
                    }
                    R b = f.coeff(mode);
                    if (b.is_zero()) continue;
                    S pc = fam.lam[j].coeff(mode).coeff(0);
                    if (scalar_norm(pc) == 0)
                        throw std::domain_error("Model::project: degenerate dual basis");
                    S inv_pc = scalar_traits<S>::one() / pc;
                    Series<R> term = Series<R>::zero(f.window_lo(), f.window_hi());
                    for (const auto &[m, v] : fam.lam[j].coeffs())
                        term.set(m, (b * v).scaled(inv_pc));
                    term.set_valid(fam.lam[j].valid());
                    if (fam.lam[j].support().hi >= kModeInf) term.mark_tail_hi();
                    acc = acc + term;
                }
                return acc;
            }
            default:
                throw std::domain_error("Model::project: unsupported model kind");
        }
    }

    // Slotwise projections of two-variable kernels.
    template <class R>
    BiSeries<R> project_R_z(const BiSeries<R> &f, const BasisFamily &fam) const {
        return f.transform_z([&](const Series<R> &col) { return project_R(col, fam); });
    }
    template <class R>
    BiSeries<R> project_R_w(const BiSeries<R> &f, const BasisFamily &fam) const {
        return f.transform_w([&](const Series<R> &col) { return project_R(col, fam); });
    }
    template <class R>
    BiSeries<R> project_La_w(const BiSeries<R> &f, const BasisFamily &fam) const {
        return f.transform_w([&](const Series<R> &col) { return project_La(col, fam); });
    }

  private:
    std::vector<Cplx> lambda_ratio_laurent(int count) const {
        // theta(z+lambda)/(theta(z), theta(lambda)): returns v with v[m] the
        // coefficient of z^{m-1}.
        std::vector<Cplx> num(count);
        double fact = 1.0;
        for (int m = 0; m < count; ++m) {
            if (m > 0) fact *= m;
            num[m] = theta_->deriv(lambda_, m) / Cplx(fact, 0.0);
        }
        Cplx tl = theta_->deriv(lambda_, 0);
        if (std::abs(tl) < 1e-14)
            throw std::domain_error("Model: dynamical parameter too close to the lattice");
        std::vector<Cplx> th = theta_->taylor(count + 1);
        // denominator theta(z) = z u(z)
        std::vector<Cplx> u(count);
        for (int m = 0; m < count; ++m) u[m] = th[m + 1];
        // divide num by u, then the result is (1/z)(num/u)/theta(lambda)
        std::vector<Cplx> q(count);
        for (int m = 0; m < count; ++m) {
            Cplx acc = num[m];
            for (int j = 1; j <= m; ++j) acc -= u[j] * q[m - j];
            q[m] = acc;
        }
        for (auto &x : q) x /= tl;
        return q;
    }

    ModelKind kind_ = ModelKind::RationalDz;
    int n_ = 0;
    int horder_ = 6;
    Cplx tau_{0.0, 1.0};
    Cplx lambda_{0.0, 0.0};
    std::shared_ptr<Theta> theta_;
};

using ModelQ = Model<Rat>;
using ModelC = Model<Cplx>;

} // namespace qca

#endif
