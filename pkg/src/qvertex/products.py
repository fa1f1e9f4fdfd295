"""Li's r-th products via residue extraction and the bullet product.

Only simple poles occur for in-scope operator pairs, so the zeroth product
reduces to the residue at the coincident pole; rth_product proves the
simple-pole property at runtime and hard-errors otherwise.  A direct
iota-expansion of the generating-function definition is kept as a test-only
cross-check of the residue shortcut.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from fractions import Fraction

from .lattice import pairing
from .scalarfield import FactoredPrefactor, Q0, Q1, QScalar, qpow
from .voperator import OperatorSum, VOTerm, compose


class HigherOrderPole(ArithmeticError):
    """A prefactor pole of order >= 2: outside the engine's scope."""


class NegativeR(ValueError):
    """r-th products with r < 0 are unsupported."""


@dataclass(frozen=True)
class ShiftCandidate:
    t: Fraction
    source: str


def candidate_shifts(A: VOTerm, B: VOTerm) -> list[ShiftCandidate]:
    """Pole shifts of compose(A, B): shifting A by t = a_k moves the pole
    at z1 = q^(a_k) z2 to the coincidence z1 = z2."""
    F, _ = compose(A, B)
    out = []
    for a, e in F.factors:
        if e < 0:
            out.append(ShiftCandidate(a, f"pole (z1 - q^({a}) z2)^{e}"))
    return out


def shifted_compose(A: VOTerm, B: VOTerm, t) -> tuple[FactoredPrefactor, VOTerm]:
    """compose(A.shift(t), B) computed from the cached compose(A, B).

    Shifting A moves every contraction root a to a - t, multiplies the
    cross constant by q^(t (d_A, wt B)) and the merged scalar by q^(t g_A),
    and shifts A's exponential blocks."""
    t = Fraction(t)
    F, nord = compose(A, B)
    if not t:
        return F, nord
    wtb = B.wt()
    const = F.constant * qpow(t * pairing(A.sides[0].d, wtb))
    factors = tuple(sorted((a - t, e) for a, e in F.factors))
    Ft = FactoredPrefactor(const, F.z1exp, F.z2exp, factors)
    At = A.shift(t)
    side0 = At.sides[0]
    nord_t = replace(
        nord,
        scalar=nord.scalar * qpow(t * A.sides[0].g),
        h=tuple(hc + t * dc for hc, dc in zip(nord.h, A.sides[0].d.coords)),
        sides=(side0, nord.sides[1]),
    )
    return Ft, nord_t


def _residue_scalar(F: FactoredPrefactor) -> tuple[QScalar, Fraction]:
    """[(z1 - z2) F](z, z) for F with a simple pole at coincidence.

    Returns (constant, z-exponent)."""
    const = F.constant
    zexp = F.z1exp + F.z2exp
    for a, e in F.factors:
        if a == 0:
            continue
        const = const * (Q1 - qpow(a)) ** e
        zexp += e
    return const, zexp


def _extract_zeroth(F: FactoredPrefactor, nord: VOTerm, r: int) -> OperatorSum:
    if r < 0:
        raise NegativeR("r-th products with r < 0 are out of scope")
    if F.max_pole_order() > 1:
        raise HigherOrderPole(f"prefactor {F.render()} has a pole of order >= 2")
    pole_at_zero = any(a == 0 and e == -1 for a, e in F.factors)
    if r >= 1 or not pole_at_zero:
        return OperatorSum.zero()
    const, zexp = _residue_scalar(F)
    term = nord.collapse()
    side = term.sides[0]
    term = replace(term, scalar=term.scalar * const, sides=(replace(side, g=side.g + zexp),))
    return OperatorSum.of(term)


def rth_product(A: VOTerm, B: VOTerm, r: int) -> OperatorSum:
    """Li's r-th product a(z)_r b(z) for r >= 0 (simple poles only).

    Zero unless the prefactor has a simple pole exactly at z1 = z2 and r = 0,
    in which case the result is the residue term [(z1 - z2) F nord]|_{z1=z2}.
    """
    F, nord = compose(A, B)
    return _extract_zeroth(F, nord, r)


def zeroth_at(A: VOTerm, B: VOTerm, t) -> OperatorSum:
    """The zeroth product a(z q^t)_0 b(z), via the cached base composition."""
    F, nord = shifted_compose(A, B, t)
    return _extract_zeroth(F, nord, 0)


def bullet(A, B) -> OperatorSum:
    """The paper's bullet product, bilinear over OperatorSum arguments:

    a(z). b(z) = sum_t (1/(z q^t))^((wt a, wt b) + 1) q^t  a(z q^t)_0 b(z).
    """
    aterms = A.terms if isinstance(A, OperatorSum) else (A,)
    bterms = B.terms if isinstance(B, OperatorSum) else (B,)
    out = OperatorSum.zero()
    for ta in aterms:
        for tb in bterms:
            p = pairing(ta.wt(), tb.wt())
            for cand in candidate_shifts(ta, tb):
                t = cand.t
                res = zeroth_at(ta, tb, t)
                if res.is_zero():
                    continue
                scale = qpow(-t * p)
                shifted = []
                for term in res.terms:
                    side = term.sides[0]
                    shifted.append(
                        replace(
                            term,
                            scalar=term.scalar * scale,
                            sides=(replace(side, g=side.g - (p + 1)),),
                        )
                    )
                out = out + OperatorSum(shifted)
    return out


def bullet_chain(heads, start) -> OperatorSum:
    """Apply bullet heads right to left: heads[0] . (heads[1] . ( ... start))."""
    acc = start if isinstance(start, OperatorSum) else OperatorSum.of(start)
    for head in reversed(list(heads)):
        acc = bullet(head, acc)
        if acc.is_zero():
            return acc
    return acc


def offcandidate_scan(A: VOTerm, B: VOTerm, bound: int = 6) -> list[Fraction]:
    """All t in [-bound, bound] cap (1/2)Z with a nonzero zeroth product.

    Used to confirm the bullet sum's finite support outside candidate_shifts."""
    hits = []
    for two_t in range(-2 * bound, 2 * bound + 1):
        t = Fraction(two_t, 2)
        if not zeroth_at(A, B, t).is_zero():
            hits.append(t)
    return hits


# ---------------------------------------------------------------------------
# test-only path: residue via the iota-expansion of Definition "n:product"
# ---------------------------------------------------------------------------


def residue_via_iota(F: FactoredPrefactor, orders: int = 8) -> tuple[QScalar, Fraction]:
    """Coefficient of z0^(-1) in iota(p(z+z0, z)^(-1)) (p F)(z+z0, z).

    p is the minimal clearing polynomial (product of the pole factors of F).
    Simple poles only.  Returns (constant, z-exponent); must agree with the
    residue shortcut when F has a simple coincident pole, and vanish when F
    has no pole at coincidence.
    """
    if F.max_pole_order() > 1:
        raise HigherOrderPole("iota check needs simple poles")
    poles = [a for a, e in F.factors if e == -1]
    zeros = [(a, e) for a, e in F.factors if e > 0]
    # (pF)(z1, z2) = const z1^z1exp z2^z2exp prod_zeros (z1 - q^a z2)^e
    # substitute z1 = z + z0 and expand in z0; coefficients carry z-powers.
    # series as {z0 power: {z power: QScalar}}
    def series_mul(s1, s2):
        out = {}
        for k1, m1 in s1.items():
            for k2, m2 in s2.items():
                k = k1 + k2
                if k > orders:
                    continue
                dst = out.setdefault(k, {})
                for e1, c1 in m1.items():
                    for e2, c2 in m2.items():
                        e = e1 + e2
                        v = c1 * c2
                        cur = dst.get(e)
                        s = v if cur is None else cur + v
                        if s.is_zero():
                            dst.pop(e, None)
                        else:
                            dst[e] = s
        return out

    one = {0: {Fraction(0): Q1}}
    acc = {0: {Fraction(0): F.constant}}
    # z1^z1exp at z1 = z + z0 only occurs with integer z1exp in-scope;
    # expand by binomial when nonnegative, else shift via (z(1+z0/z))^k.
    k = F.z1exp + F.z2exp
    assert k.denominator == 1
    ki = int(k)
    # (z+z0)^z1exp z^z2exp = z^(z1exp+z2exp) (1 + z0/z)^z1exp
    e1 = F.z1exp
    binom = {}
    coef = Q1
    top = None if e1 < 0 else int(e1)
    j = 0
    while j <= orders and (top is None or j <= top):
        binom.setdefault(j, {})[Fraction(ki) - j] = coef * Q1
        # next binomial coefficient of (1+u)^e1: e1 choose j+1
        coef = coef * QScalar.from_fraction(Fraction(e1 - j, j + 1))
        j += 1
    acc = series_mul(acc, binom)
    for a, e in zeros:
        base = {}
        # (z + z0 - q^a z)^e with e >= 1: ((1 - q^a) z + z0)^e
        c0 = Q1 - qpow(a)
        for _ in range(e):
            lin = {0: {Fraction(1): c0}, 1: {Fraction(0): Q1}}
            base = series_mul(base, lin) if base else lin
        acc = series_mul(acc, base)
    # iota(p(z+z0, z)^(-1)): factors (z0)^-1 for a = 0 and geometric series else
    z0_shift = 0
    for a in poles:
        if a == 0:
            z0_shift += 1
            continue
        c0 = Q1 - qpow(a)
        inv = {}
        sign = Q1
        for j0 in range(orders + 1):
            inv[j0] = {Fraction(-1 - j0): sign / c0 ** (j0 + 1)}
            sign = -sign
        acc = series_mul(acc, inv)
    # want coefficient of z0^(-1): i.e. z0^(z0_shift - 1) of acc
    want = z0_shift - 1
    if want < 0 or want not in acc:
        return Q0, Fraction(0)
    m = acc[want]
    if not m:
        return Q0, Fraction(0)
    assert len(m) == 1, "residue must be a single z-power"
    ((ze, c),) = m.items()
    return c, ze
