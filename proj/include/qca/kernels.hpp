#ifndef QCA_KERNELS_HPP
#define QCA_KERNELS_HPP

#include <vector>

#include "qca/model.hpp"

namespace qca {

// ---- small bi-series constructors ----

template <class R>
BiSeries<R> outer(const Series<R> &a, const Series<R> &b) {
    BiSeries<R> r(a.window_lo(), a.window_hi(), b.window_lo(), b.window_hi());
    r.set_valid(a.valid(), b.valid());
    for (const auto &[ma, va] : a.coeffs())
        for (const auto &[mb, vb] : b.coeffs()) {
            R p = va * vb;
            if (!p.is_zero()) r.set(ma, mb, p);
        }
    if (a.support().lo <= -kModeInf) r.mark_tail(true, false, false, false);
    if (a.support().hi >= kModeInf) r.mark_tail(false, true, false, false);
    if (b.support().lo <= -kModeInf) r.mark_tail(false, false, true, false);
    if (b.support().hi >= kModeInf) r.mark_tail(false, false, false, true);
    if (a.has_log() && b.has_log())
        throw std::domain_error("outer: both factors log-bearing");
    if (a.has_log()) r.set_logz_part(b.template scaled<R>(a.log_coeff()));
    if (b.has_log()) r.set_logw_part(a.template scaled<R>(b.log_coeff()));
    return r;
}

template <class R>
BiSeries<R> embed_z(const Series<R> &a, int wlo, int whi) {
    Series<R> one = Series<R>::constant(R::one(), wlo, whi);
    return outer(a, one);
}
template <class R>
BiSeries<R> embed_w(const Series<R> &b, int zlo, int zhi) {
    Series<R> one = Series<R>::constant(R::one(), zlo, zhi);
    return outer(one, b);
}

// hbar bookkeeping applied cellwise
template <class R>
BiSeries<R> mul_hbar(const BiSeries<R> &f, int k) {
    BiSeries<R> r = f;
    return r.scaled_fraction_hbar(1, 1, k);
}

// ---- model calculus lifted to two variables ----

template <class S, class R>
BiSeries<R> derive_z(const Model<S> &m, const BiSeries<R> &f) {
    return f.transform_z([&](const Series<R> &c) { return m.derive(c); });
}
template <class S, class R>
BiSeries<R> derive_w(const Model<S> &m, const BiSeries<R> &f) {
    return f.transform_w([&](const Series<R> &c) { return m.derive(c); });
}
template <class S, class R>
BiSeries<R> shift_z(const Model<S> &m, const BiSeries<R> &f, long num, long den = 1) {
    return f.transform_z([&](const Series<R> &c) { return m.shift(c, num, den); });
}
template <class S, class R>
BiSeries<R> shift_w(const Model<S> &m, const BiSeries<R> &f, long num, long den = 1) {
    return f.transform_w([&](const Series<R> &c) { return m.shift(c, num, den); });
}
template <class S, class R>
BiSeries<R> antiderive_w(const Model<S> &m, const BiSeries<R> &f) {
    return f.transform_w([&](const Series<R> &c) { return m.antiderive(c); });
}

// Residual of the complement contamination: || f - (f)_{R (x) R} ||.
template <class S, class R>
double complement_contamination(const Model<S> &m, const BiSeries<R> &f,
                                const typename Model<S>::BasisFamily &fam) {
    BiSeries<R> rr = m.project_R_w(m.project_R_z(f, fam), fam);
    return (f - rr).max_norm();
}

// Product with the transposed Green kernel, computed basis term by term.
// This stays inside guaranteed-valid windows even when the dual tails are
// unbounded (each dual has exact bounded support; only the basis truncation
// limits validity, recorded on the result).
template <class S, class R>
BiSeries<R> green_transposed_mul(const Model<S> &model,
                                 const typename Model<S>::BasisFamily &fam,
                                 const BiSeries<R> &f) {
    const int N = int(fam.r.size()) - 1;
    BiSeries<R> acc = BiSeries<R>::zero(f.zwin_lo(), f.zwin_hi(), f.wwin_lo(), f.wwin_hi());
    acc.set_valid(f.valid_z(), f.valid_w());
    for (int i = 0; i <= N; ++i) {
        Series<R> lam_z = fam.lam[i].rewindow(f.zwin_lo(), f.zwin_hi());
        Series<R> r_w = fam.r[i].rewindow(f.wwin_lo(), f.wwin_hi());
        acc = acc + outer(lam_z, r_w) * f;
    }
    // terms beyond the basis range touch deeper z modes only
    ModeInterval vz = acc.valid_z();
    switch (model.kind()) {
        case ModelKind::RationalDz:
        case ModelKind::EllipticDz:
            vz.lo = std::max(vz.lo, -N - 1);
            acc.mark_tail(true, false, false, false);
            break;
        case ModelKind::RationalZN:
            vz.hi = std::min(vz.hi, N - model.zn());
            acc.mark_tail(false, true, false, false);
            break;
        default: break;
    }
    acc.set_valid(vz, acc.valid_w());
    return acc;
}

// Invert a kernel about its dominant cell: A = c z^a w^b (1 + V) with V
// truncation-nilpotent; returns A^{-1}.
template <class R>
BiSeries<R> invert_about(const BiSeries<R> &A, int a, int b, int hbar_order) {
    if (!A.cell_known(a, b) || A.cell(a, b).is_zero())
        throw std::domain_error("invert_about: dominant cell is zero or unknown");
    R cinv = A.cell(a, b).inverse(hbar_order);
    BiSeries<R> M = BiSeries<R>::zero(A.zwin_lo(), A.zwin_hi(), A.wwin_lo(), A.wwin_hi());
    M.set(-a, -b, cinv);
    BiSeries<R> V = A * M;
    V.set(0, 0, V.cell(0, 0) - R::one());
    BiSeries<R> acc = BiSeries<R>::constant(R::one(), A.zwin_lo(), A.zwin_hi(),
                                            A.wwin_lo(), A.wwin_hi());
    acc.set_valid(V.valid_z(), V.valid_w());
    BiSeries<R> term = acc;
    long kmax = long(A.zwin_hi() - A.zwin_lo() + 2) + long(A.wwin_hi() - A.wwin_lo() + 2) +
                hbar_order + 2;
    long k = 1;
    for (; k <= kmax; ++k) {
        term = (term * V).truncate_hbar(hbar_order);
        if (term.is_zero_on_valid()) break;
        acc = (k % 2 == 1) ? acc - term : acc + term;
    }
    if (k > kmax) throw std::domain_error("invert_about: remainder is not nilpotent");
    // geometric tail beyond the window drifts in the direction of V's support
    if (V.support_z().lo < 0) acc.mark_tail(true, false, false, false);
    if (V.support_z().hi > 0) acc.mark_tail(false, true, false, false);
    if (V.support_w().lo < 0) acc.mark_tail(false, false, true, false);
    if (V.support_w().hi > 0) acc.mark_tail(false, false, false, true);
    return acc * M;
}

// ---- the kernel set of a model ----

template <class S>
struct KernelSet {
    using HP = HPoly<S>;
    using Bi = BiSeries<HP>;

    int basis_count = 0;
    int sign = +1;                // recorded Green-kernel sign normalization

    Bi G;                         // normalized Green kernel
    Bi gamma;                     // curvature element (d (x) id)G + G^2, projected
    double riccati_residual = 0;  // complement contamination of the raw element

    Bi psi, phi;                  // order-by-order solutions of the flow equations
    double ode_residual = 0;      // recomputed equation residual
    double log_identity_residual = 0;

    Bi structure_elem;            // sum_i r^i (x) (S lam_i)_R  (must be symmetric)
    double structure_antisym_residual = 0;
    Bi tau;                       // symmetric solution, structure_elem = -2 hbar tau

    Bi logq, q;                   // deformation kernel and its logarithm
    Bi delta;                     // G + G^(21)
    Bi jfac;                      // (z - q^d w)/(q^{-d} z - w)
    Bi ifac;                      // q(z,w) (q^d z - w)/(z - q^d w), card(S)=1
};

struct KernelWindows {
    int zlo, zhi, wlo, whi;
    int basis_count;
};

// Storage windows sized so that the guaranteed-valid window after all kernel
// arithmetic still covers [-M, M] where the data allows it. Exponentials mix
// pole depth (the dual-basis count N) with hbar order D, which eats
// (D+2)(N+2) cells off the Taylor side of the complement slot.
template <class S>
KernelWindows default_kernel_windows(const Model<S> &model, int M, int N) {
    const int D = model.hbar_order();
    switch (model.kind()) {
        case ModelKind::RationalDz: {
            int pad = D + 3;
            return {-M - pad, M + pad, -M - pad, M + pad, N};
        }
        case ModelKind::RationalZN: {
            int pad = (2 * model.zn() + 1) * (D + 2) + 3;
            return {-M - pad, M + pad, -M - pad, M + pad, N};
        }
        case ModelKind::EllipticDz: {
            int pad = (D + 2) * (N + 2) + 4;
            return {-M - pad, std::max(N, M) + 4, -N - D - 4, M + pad, N};
        }
        case ModelKind::RationalDzOverZ: {
            int pad = 3;
            return {-M - pad, M + pad, -M - pad, M + pad, N};
        }
    }
    return {-M, M, -M, M, N};
}

// Canonical expansion region of the model's kernels: true when the z modes
// of R-type data are bounded below (z-small region).
template <class S>
inline bool z_small_region(const Model<S> &m) {
    return m.kind() != ModelKind::RationalZN;
}

template <class S>
KernelSet<S> build_kernels(const Model<S> &model,
                           const typename Model<S>::BasisFamily &raw,
                           const KernelWindows &kw) {
    using HP = HPoly<S>;
    using Ser = Series<HP>;
    using Bi = BiSeries<HP>;
    const int D = model.hbar_order();
    const int N = kw.basis_count;

    KernelSet<S> ks;
    ks.basis_count = N;
    ks.sign = raw.sign;

    // sign-normalized bases for the kernel layer
    std::vector<Ser> lam_geo;
    for (const auto &l : raw.lam)
        lam_geo.push_back(raw.sign < 0 ? l.negated() : l);
    typename Model<S>::BasisFamily geo;
    geo.r = raw.r;
    geo.lam = lam_geo;
    geo.sign = raw.sign;

    auto rz = [&](const Ser &s) { return s.rewindow(kw.zlo, kw.zhi); };
    auto rw = [&](const Ser &s) { return s.rewindow(kw.wlo, kw.whi); };

    // Green kernel G = sum_i r^i(z) lam_i(w) with the normalized duals.
    Bi G = Bi::zero(kw.zlo, kw.zhi, kw.wlo, kw.whi);
    for (int i = 0; i <= N; ++i) G = G + outer(rz(geo.r[i]), rw(geo.lam[i]));
    // metadata: modes beyond the included basis range are unknown tails
    {
        ModeInterval vz = ModeInterval::all(), vw = ModeInterval::all();
        switch (model.kind()) {
            case ModelKind::RationalDz:
                G.mark_tail(false, true, true, false);
                vz.hi = N;
                vw.lo = -N - 1;
                break;
            case ModelKind::RationalZN:
                G.mark_tail(true, false, false, true);
                vz.lo = -model.zn() - N - 1;
                vw.hi = N - model.zn();
                break;
            case ModelKind::EllipticDz:
                G.mark_tail(false, true, false, true);
                vz.hi = N;
                vw.lo = -N - 1;
                vw.hi = std::min(vw.hi, kw.whi);
                break;
            default:
                throw std::domain_error("build_kernels: unsupported model kind");
        }
        G.set_valid(vz, vw);
    }
    ks.G = G;

    // Curvature element and its complement contamination.
    Bi gamma_raw = derive_z(model, G) + G * G;
    ks.riccati_residual = complement_contamination(model, gamma_raw, geo);
    ks.gamma = model.project_R_w(model.project_R_z(gamma_raw, geo), geo);

    // Flow equations, solved order by order in hbar:
    //   d_h psi = (d (x) id) psi - 1 - gamma psi^2
    //   d_h phi = (d (x) id) phi - gamma psi
    {
        Bi one = Bi::constant(HP::one(), kw.zlo, kw.zhi, kw.wlo, kw.whi);
        Bi psi = Bi::zero(kw.zlo, kw.zhi, kw.wlo, kw.whi);
        psi.set_valid(ks.gamma.valid_z(), ks.gamma.valid_w());
        Bi phi = psi;
        for (int m = 1; m <= D; ++m) {
            Bi rhs_psi = derive_z(model, psi) - one - ks.gamma * psi * psi;
            Bi rhs_phi = derive_z(model, phi) - ks.gamma * psi;
            // take the hbar^{m-1} slice and add it at order m with weight 1/m
            Bi add_psi = rhs_psi.hbar_slice(m - 1).scaled_fraction_hbar(1, m, m);
            Bi add_phi = rhs_phi.hbar_slice(m - 1).scaled_fraction_hbar(1, m, m);
            psi = psi + add_psi;
            phi = phi + add_phi;
        }
        ks.psi = psi;
        ks.phi = phi;
        // recomputed residuals of both equations up to order D-1
        Bi rp = psi.d_hbar() - (derive_z(model, psi) - one - ks.gamma * psi * psi);
        Bi rf = phi.d_hbar() - (derive_z(model, phi) - ks.gamma * psi);
        ks.ode_residual = std::max(rp.truncate_hbar(D - 1).max_norm(),
                                   rf.truncate_hbar(D - 1).max_norm());
    }

    // Identity relating the half-shifted duals to the flow data, checked in
    // exponentiated form (the two sides are built independently):
    //   exp( -phi - sum_i ((e^{h d}-1)/d) lam_i(z) r^i(w) ) = 1 + G^(21) psi,
    // with the same normalized Green kernel that satisfies the curvature
    // equation (the swapped copy enters with the opposite sign).
    {
        Bi lhs_sum = Bi::zero(kw.zlo, kw.zhi, kw.wlo, kw.whi);
        for (int i = 0; i <= N; ++i) {
            Ser g = model.antiderive(rz(geo.lam[i]));
            Ser s = model.shift(g, 1) - g;
            s.clear_log();
            lhs_sum = lhs_sum + outer(s, rw(geo.r[i]));
        }
        // z-cells are complete only down to the deepest included dual
        ModeInterval vz = lhs_sum.valid_z(), vw = lhs_sum.valid_w();
        switch (model.kind()) {
            case ModelKind::RationalDz:
                lhs_sum.mark_tail(true, false, false, false);
                vz.lo = std::max(vz.lo, -N - 1);
                vw.hi = std::min(vw.hi, N);
                break;
            case ModelKind::RationalZN:
                lhs_sum.mark_tail(false, true, false, false);
                vz.hi = std::min(vz.hi, N - model.zn());
                vw.lo = std::max(vw.lo, -model.zn() - N - 1);
                break;
            case ModelKind::EllipticDz:
                lhs_sum.mark_tail(false, true, false, false);
                vz.lo = std::max(vz.lo, -N - 1 - D);
                vw.hi = std::min(vw.hi, N);
                break;
            default: break;
        }
        lhs_sum.set_valid(vz, vw);
        Bi lhs = (ks.phi + lhs_sum).negated().exp_series(D);
        Bi X = green_transposed_mul(model, geo, ks.psi);
        Bi rhs = Bi::constant(HP::one(), kw.zlo, kw.zhi, kw.wlo, kw.whi) + X;
        ks.log_identity_residual = (lhs - rhs).max_norm();
    }

    // Structure element and tau.
    {
        Bi E = Bi::zero(kw.zlo, kw.zhi, kw.wlo, kw.whi);
        for (int i = 0; i <= N; ++i) {
            Ser s = model.sym_shift_antiderive(rw(geo.lam[i]));
            Ser sR = model.project_R(s, geo);
            E = E + outer(rz(geo.r[i]), sR);
        }
        ModeInterval vz = E.valid_z();
        switch (model.kind()) {
            case ModelKind::RationalDz:
            case ModelKind::EllipticDz:
                E.mark_tail(false, true, false, false);
                vz.hi = std::min(vz.hi, N);
                break;
            case ModelKind::RationalZN:
                E.mark_tail(true, false, false, false);
                vz.lo = std::max(vz.lo, -model.zn() - N - 1);
                break;
            default: break;
        }
        E.set_valid(vz, E.valid_w());
        ks.structure_elem = E;
        ks.structure_antisym_residual = (E - E.transposed()).max_norm();
        ks.tau = E.div_hbar(1).scaled_fraction_hbar(-1, 2, 0);
    }

    // Deformation kernel q = exp( sum_i r^i(z) (S lam_i)(w) + hbar tau ).
    {
        Bi expo = mul_hbar(ks.tau, 1);
        for (int i = 0; i <= N; ++i) {
            Ser s = model.sym_shift_antiderive(rw(geo.lam[i]));
            expo = expo + outer(rz(geo.r[i]), s);
        }
        ModeInterval vz = expo.valid_z();
        switch (model.kind()) {
            case ModelKind::RationalDz:
            case ModelKind::EllipticDz:
                expo.mark_tail(false, true, false, false);
                vz.hi = std::min(vz.hi, N);
                break;
            case ModelKind::RationalZN:
                expo.mark_tail(true, false, false, false);
                vz.lo = std::max(vz.lo, -model.zn() - N - 1);
                break;
            default: break;
        }
        expo.set_valid(vz, expo.valid_w());
        ks.logq = expo;
        ks.q = expo.exp_series(D);
    }

    // delta = G + G^(21)
    ks.delta = G + G.transposed();

    // j and i kernels (single marked point only)
    // (two-point model uses dz_over_z_exp_sum instead)
    if (model.components() == 1) {
        const bool zs = z_small_region(model);
        Ser wmono = Ser::monomial(HP::one(), 1, kw.wlo, kw.whi);
        Ser zmono = Ser::monomial(HP::one(), 1, kw.zlo, kw.zhi);
        Bi cz = embed_z(zmono, kw.wlo, kw.whi);
        Bi cw = embed_w(wmono, kw.zlo, kw.zhi);
        Bi qdw = embed_w(model.shift(wmono, 1), kw.zlo, kw.zhi);
        Bi qdz_m = embed_z(model.shift(zmono, -1), kw.wlo, kw.whi);
        Bi qdz_p = embed_z(model.shift(zmono, 1), kw.wlo, kw.whi);
        Bi A = cz - qdw;        // z - q^d w
        Bi Bm = qdz_m - cw;     // q^{-d} z - w
        Bi Bp = qdz_p - cw;     // q^d z - w
        int da = zs ? 0 : 1, db = zs ? 1 : 0;
        ks.jfac = A * invert_about(Bm, da, db, D);
        ks.ifac = ks.q * Bp * invert_about(A, da, db, D);
    }

    return ks;
}

// Exponential sum of the two-point model (omega = dz/z): per component,
// exp( sum_i r^i(z) (S lambda_i)(w) ), which must reproduce the closed form
// (e^h z - w)/(z - e^h w) in each component's expansion region.
template <class S>
std::array<BiSeries<HPoly<S>>, 2> dz_over_z_exp_sum(
    const Model<S> &model, const typename Model<S>::BasisFamily2 &fam,
    const KernelWindows &kw) {
    using HP = HPoly<S>;
    using Bi = BiSeries<HP>;
    const int D = model.hbar_order();
    std::array<Bi, 2> out{Bi::zero(kw.zlo, kw.zhi, kw.wlo, kw.whi),
                          Bi::zero(kw.zlo, kw.zhi, kw.wlo, kw.whi)};
    const int N = fam.max_abs;
    for (int c = 0; c < 2; ++c) {
        Bi expo = Bi::zero(kw.zlo, kw.zhi, kw.wlo, kw.whi);
        for (int idx = 0; idx < int(fam.r.size()); ++idx) {
            const auto &lam_c = fam.lam[idx][c];
            if (lam_c.is_zero_on_valid()) continue;
            Series<HP> g = model.antiderive(lam_c.rewindow(kw.wlo, kw.whi));
            Series<HP> s = model.shift(g, 1) - model.shift(g, -1);
            s.clear_log();
            expo = expo + outer(fam.r[idx][c].rewindow(kw.zlo, kw.zhi), s);
        }
        // included indices cover z modes in [-N, N]
        expo.set_valid(intersect(expo.valid_z(), ModeInterval::of(-N, N)), expo.valid_w());
        out[c] = expo.exp_series(D);
    }
    return out;
}

} // namespace qca

#endif
