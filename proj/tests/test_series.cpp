#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "qca/model.hpp"
#include "qca/series.hpp"

using namespace qca;

using HP = HPolyQ;
using Ser = Series<HP>;
using Bi = BiSeries<HP>;

namespace {

Ser random_series(std::mt19937_64 &rng, int wlo, int whi, int hord, bool tails) {
    Ser s = Ser::zero(wlo, whi);
    std::uniform_int_distribution<int> mode(wlo, whi);
    std::uniform_int_distribution<int> num(-5, 5);
    std::uniform_int_distribution<int> hp(0, hord);
    for (int t = 0; t < 8; ++t) {
        HP v = HP::monomial(Rat(num(rng)), hp(rng), hord);
        int m = mode(rng);
        s.set(m, s.known(m) ? s.coeff(m) + v : v);
    }
    if (tails) {
        s.mark_tail_lo();
        s.mark_tail_hi();
        s.set_valid(ModeInterval::of(wlo, whi));
    }
    return s;
}

bool equal_on(const Ser &a, const Ser &b, int lo, int hi) {
    for (int m = lo; m <= hi; ++m)
        if (!(a.coeff(m) == b.coeff(m))) return false;
    return true;
}

} // namespace

TEST_CASE("hpoly arithmetic and truncation") {
    HP a = HP::monomial(Rat(1), 0, 6) + HP::monomial(Rat(2), 1, 6);
    HP b = HP::monomial(Rat(3), 2, 6);
    CHECK((a * b).coeff(3) == Rat(6));
    CHECK((a * b).order() == 6);
    CHECK((a - a).is_zero());
    HP e = HP::monomial(Rat(1), 1, 6).exp(6);
    HP l = e.log(6);
    CHECK(l.coeff(1) == Rat(1));
    CHECK(l.coeff(2) == Rat(0));
    CHECK_THROWS(HP::monomial(Rat(1), 1, 6).div_hbar(2));
    CHECK(HP::monomial(Rat(4), 3, 6).div_hbar(2).coeff(1) == Rat(4));
    HP inv = (HP::one(6) + HP::monomial(Rat(1), 1, 6)).inverse(6);
    CHECK(inv.coeff(3) == Rat(-1));
}

TEST_CASE("geometric expansion times (z-w) telescopes to 1") {
    // f = sum_{i>=0} z^i w^{-i-1}  (the z<<w expansion of 1/(w-z));
    // multiplying by (w - z) must give 1 on the joint valid window.
    const int M = 10;
    Bi f = Bi::zero(-M, M, -M, M);
    for (int i = 0; i + 1 <= M; ++i) f.set(i, -i - 1, HP::one());
    f.mark_tail(false, true, true, false);
    f.set_valid(ModeInterval::of(-M, M - 1), ModeInterval::of(-M, M));

    Bi g = Bi::zero(-M, M, -M, M);   // w - z
    g.set(0, 1, HP::one());
    g.set(1, 0, -HP::one());

    Bi p = f * g;
    CHECK(p.cell(0, 0) == HP::one());
    int nonzero = 0;
    for (const auto &[k, v] : p.cells())
        if (p.cell_known(k.first, k.second) && !v.is_zero()) ++nonzero;
    CHECK(nonzero == 1);
    // the invalid edge cells must be flagged, not reported as zero
    CHECK(!p.cell_known(M, -1));
}

TEST_CASE("squared geometric expansion matches brute-force convolution oracle") {
    // (sum_{i>=0} z^i w^{-i-1})^2 = expansion of 1/(w-z)^2: cell (a, -a-2)
    // carries a+1.
    const int M = 9;
    Bi f = Bi::zero(-M, M, -M, M);
    for (int i = 0; i + 1 <= M; ++i) f.set(i, -i - 1, HP::one());
    f.mark_tail(false, true, true, false);
    f.set_valid(ModeInterval::of(-M, M - 1), ModeInterval::of(-M, M));
    Bi p = f * f;
    for (int a = 0; a + 2 <= M; ++a) {
        CHECK(p.cell_known(a, -a - 2));
        CHECK(p.cell(a, -a - 2) == HP(Rat(a + 1)));
    }
    // brute-force oracle on a wider window agrees cell by cell
    const int W = 2 * M;
    std::map<std::pair<int, int>, long> oracle;
    for (int i = 0; i <= W; ++i)
        for (int j = 0; j <= W; ++j) oracle[{i + j, -i - j - 2}] += 1;
    for (const auto &[k, v] : p.cells()) {
        if (!p.cell_known(k.first, k.second)) continue;
        CHECK(v == HP(Rat(oracle[{k.first, k.second}])));
    }
}

TEST_CASE("ring axioms on random samples (windowed)") {
    std::mt19937_64 rng(12345);
    for (int trial = 0; trial < 20; ++trial) {
        Ser a = random_series(rng, -6, 6, 4, false);
        Ser b = random_series(rng, -6, 6, 4, false);
        Ser c = random_series(rng, -6, 6, 4, false);
        Ser lhs = (a * b) * c;
        Ser rhs = a * (b * c);
        int lo = std::max(lhs.valid().lo, rhs.valid().lo);
        int hi = std::min(lhs.valid().hi, rhs.valid().hi);
        lo = std::max(lo, -6);
        hi = std::min(hi, 6);
        CHECK(equal_on(lhs, rhs, lo, hi));
        Ser d1 = a * (b + c);
        Ser d2 = a * b + a * c;
        CHECK(equal_on(d1, d2, std::max({d1.valid().lo, d2.valid().lo, -6}),
                       std::min({d1.valid().hi, d2.valid().hi, 6})));
        Ser z = a + a.negated();
        CHECK(z.is_zero_on_valid());
    }
}

TEST_CASE("series exp/log round trip") {
    // log((z-w+h)/(z-w-h)) = 2h/(z-w) + (2/3) h^3/(z-w)^3 + ... for w<<z,
    // frozen from the odd-log identity; then exp/log round trips.
    const int M = 8, D = 5;
    // u := expansion of 1/(z-w) for w << z: cells (-k-1, k)
    Bi u = Bi::zero(-M, M, -M, M);
    for (int k = 0; k + 1 <= M; ++k) u.set(-k - 1, k, HP::one());
    u.mark_tail(true, false, false, true);
    u.set_valid(ModeInterval::of(-M, M), ModeInterval::of(-M, M - 1));

    Bi q = Bi::constant(HP::one(D), -M, M, -M, M);   // (z-w+h)/(z-w-h) series
    // build from geometric data: q = 1 + 2h u + 2h^2 u^2 + 2h^3 u^3 + ...
    Bi upow = u;
    for (int k = 1; k <= D; ++k) {
        q = q + upow.scaled(HP::monomial(Rat(2), k, D));
        upow = upow * u;
    }
    Bi lg = q.log_series(D);
    // odd-series oracle: log = 2(h u + h^3 u^3/3 + h^5 u^5/5)
    Bi expect = Bi::zero(-M, M, -M, M);
    Bi up = u;
    for (int k = 1; k <= D; k += 2) {
        expect = expect + up.scaled(HP::monomial(Rat(2, k), k, D));
        up = up * u;
        up = up * u;
    }
    Bi diff = lg - expect;
    CHECK(diff.max_norm() == 0.0);
    Bi back = lg.exp_series(D);
    Bi rd = back - q;
    CHECK(rd.max_norm() == 0.0);
}

TEST_CASE("split is a projection pair and respects log") {
    Ser f = Ser::zero(-5, 5);
    f.set(-1, HP::one());
    f.set(0, HP(Rat(3)));
    f.set(1, HP::one());
    auto p = f.plus_part();
    auto m = f.minus_part();
    CHECK(p.coeff(0) == HP(Rat(3)));
    CHECK(p.coeff(1) == HP::one());
    CHECK(m.coeff(-1) == HP::one());
    CHECK(!m.has_log());
    Ser sum = p + m;
    CHECK(equal_on(sum, f, -5, 5));
    auto pp = p.plus_part();
    CHECK(equal_on(pp, p, -5, 5));
    CHECK(p.minus_part().is_zero_on_valid());

    Ser lg = Ser::zero(-5, 5);
    lg.set_log(HP::one());
    CHECK(lg.minus_part().has_log());
    CHECK(!lg.plus_part().has_log());
}

TEST_CASE("derivation and shift on the rational dz model") {
    ModelQ mod = ModelQ::rational_dz(6);
    Ser f = Ser::monomial(HP::one(), 3, -8, 8);   // z^3
    Ser df = mod.derive(f);
    CHECK(df.coeff(2) == HP(Rat(3)));
    // shift by one step: z^2 -> z^2 + 2hz + h^2
    Ser g = Ser::monomial(HP::one(), 2, -8, 8);
    Ser sg = mod.shift(g, 1);
    CHECK(sg.coeff(2) == HP::one());
    CHECK(sg.coeff(1) == HP::monomial(Rat(2), 1, 6));
    CHECK(sg.coeff(0) == HP::monomial(Rat(1), 2, 6));
    // shift composition is the identity to the hbar order
    Ser rt = mod.shift(mod.shift(f, 1), -1) - f;
    CHECK(rt.max_norm() == 0.0);
    // log z derives to alpha_0 = 1/z
    Ser lg = Ser::zero(-8, 8);
    lg.set_log(HP::one());
    Ser dlg = mod.derive(lg);
    CHECK(dlg.coeff(-1) == HP::one());
    CHECK(!dlg.has_log());
}

TEST_CASE("derivation is a Leibniz rule on sampled pairs") {
    ModelQ mod = ModelQ::rational_dz(4);
    std::mt19937_64 rng(999);
    for (int t = 0; t < 10; ++t) {
        Ser a = random_series(rng, -6, 6, 3, true);
        Ser b = random_series(rng, -6, 6, 3, true);
        Ser lhs = mod.derive(a * b);
        Ser rhs = mod.derive(a) * b + a * mod.derive(b);
        Ser diff = lhs - rhs;
        CHECK(diff.max_norm() == 0.0);
    }
}

TEST_CASE("shift is a ring homomorphism on sampled pairs") {
    ModelQ mod = ModelQ::rational_dz(4);
    std::mt19937_64 rng(777);
    for (int t = 0; t < 8; ++t) {
        Ser a = random_series(rng, -5, 5, 3, true);
        Ser b = random_series(rng, -5, 5, 3, true);
        Ser lhs = mod.shift(a * b, 1);
        Ser rhs = mod.shift(a, 1) * mod.shift(b, 1);
        Ser diff = lhs - rhs;
        CHECK(diff.max_norm() == 0.0);
    }
}

TEST_CASE("dz-over-z model: derivation and shift act multiplicatively") {
    ModelQ mod = ModelQ::rational_dz_over_z(6);
    Ser f = Ser::monomial(HP::one(), 3, -8, 8);   // z^3
    CHECK(mod.derive(f).coeff(3) == HP(Rat(3)));
    Ser s = mod.shift(Ser::monomial(HP::one(), 1, -8, 8), 1);
    // e^h z: coefficient of z^1 is the truncated exponential
    HP eh = HP::monomial(Rat(1), 1, 6).exp(6);
    CHECK(s.coeff(1) == eh);
}

TEST_CASE("residue pairing: dual pairs and orientation constants") {
    ModelQ dz = ModelQ::rational_dz(4);
    auto fam = dz.dual_bases(6, -10, 10);
    for (int i = 0; i <= 6; ++i)
        for (int j = 0; j <= 6; ++j) {
            HP v = dz.pair(fam.r[i], fam.lam[j]);
            CHECK(v == (i == j ? HP::one() : HP::zero()));
        }
    CHECK(fam.sign == -1);
    // raw orientation constant <1, alpha_0>, and the kernel-layer flip
    CHECK(dz.orientation_constant() == Rat(1));

    ModelQ zn = ModelQ::rational_zn(1, 4);
    auto fz = zn.dual_bases(5, -12, 12);
    for (int i = 0; i <= 5; ++i)
        for (int j = 0; j <= 5; ++j)
            CHECK(zn.pair(fz.r[i], fz.lam[j]) == (i == j ? HP::one() : HP::zero()));
    CHECK(zn.pair(fz.r[0], fz.lam[0]) == HP::one());
    CHECK(fz.r[0].coeff(-2) == HP::one());    // r^0 = z^{-n-1}
    CHECK(fz.lam[0].coeff(-1) == HP::one());  // lambda_0 = z^{-n}
    CHECK(zn.orientation_constant() == Rat(1));
}

TEST_CASE("antiderivation: inverse of the derivation with fixed conventions") {
    ModelQ mod = ModelQ::rational_dz(5);
    // alpha_0 = 1/z maps to log z
    Ser a0 = mod.alpha0(-8, 8);
    Ser g = mod.antiderive(a0);
    CHECK(g.has_log());
    CHECK(g.log_coeff() == HP::one());
    // z^2 -> z^3/3
    Ser f = Ser::monomial(HP::one(), 2, -8, 8);
    CHECK(mod.antiderive(f).coeff(3) == HP(Rat(1, 3)));
    // round trip on log-free elements without the alpha_0 mode
    std::mt19937_64 rng(5);
    for (int t = 0; t < 6; ++t) {
        Ser s = random_series(rng, -6, 6, 3, true);
        Ser rt = mod.derive(mod.antiderive(s)) - s;
        CHECK(rt.max_norm() == 0.0);
    }
}

TEST_CASE("serialization text form is stable") {
    Ser f = Ser::zero(-3, 3);
    f.set(-1, HP::one());
    f.set(2, HP::monomial(Rat(5), 2, 4));
    CHECK(f.str() == "{-1: 1} {2: 5*h^2} ");
}
