"""Mode algebra a_i(r), a_i*(l) and the truncated level-1 Fock evaluator.

The evaluator is the engine's independent oracle: it applies normal-ordered
vertex-operator terms to explicit states of K(1) tensor C{P} and returns exact
coefficients of each z-power.  Coefficients live in the ring
Q(q^(1/2))[w]/(w^(n+1) + 1), w a primitive 2(n+1)-th root of unity carried as
a small tag dict (the Koyama sign operator needs it on fractional weights).
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import comb, factorial

from .lattice import (
    GroupWord,
    LatticeVector,
    cartan_matrix,
    fundamental,
    group_mul,
    pairing,
    pairing_frac,
    word_weight,
)
from .scalarfield import Q0, Q1, QScalar, ly_eval, qint, qpow

# ---------------------------------------------------------------------------
# modes and exact brackets
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Mode:
    """a_index(degree) (plain) or a_index*(degree) (starred); degree != 0."""

    starred: bool
    index: int
    degree: int

    def __post_init__(self):
        assert self.degree != 0


def plain(index: int, degree: int) -> Mode:
    return Mode(False, index, degree)


def starred(index: int, degree: int) -> Mode:
    return Mode(True, index, degree)


@lru_cache(maxsize=None)
def astar_coeff(n: int, i: int, j: int, l: int) -> QScalar:
    """m_i^(j) at mode degree l: a_i*(l) = sum_j m_i^(j) a_j(l)."""
    assert 1 <= i <= n and 1 <= j <= n and l != 0
    if j <= i:
        num = qint(j * l) * qint((n - i + 1) * l)
    else:
        num = qint(i * l) * qint((n - j + 1) * l)
    return num / (qint((n + 1) * l) * qint(l))


@lru_cache(maxsize=None)
def _bracket_plain(n: int, i: int, j: int, r: int, c: int) -> QScalar:
    """[a_i(r), a_j(-r)] = [a_ij r][cr]/r at integer level c."""
    a_ij = cartan_matrix(n)[i - 1][j - 1]
    if a_ij == 0:
        return Q0
    return qint(a_ij * r) * qint(c * r) / Fraction(r)


def bracket(n: int, m1: Mode, m2: Mode, c: int = 1) -> QScalar:
    """Exact bracket [m1, m2]; zero when the degrees do not cancel.

    Starred modes are expanded in plain modes via astar_coeff.
    """
    if m1.degree + m2.degree != 0:
        return Q0
    r = m1.degree
    if not m1.starred and not m2.starred:
        return _bracket_plain(n, m1.index, m2.index, r, c) if r > 0 else -_bracket_plain(
            n, m2.index, m1.index, -r, c
        )
    if m1.starred and not m2.starred:
        out = Q0
        for k in range(1, n + 1):
            mk = astar_coeff(n, m1.index, k, r)
            if not mk.is_zero():
                out = out + mk * bracket(n, plain(k, r), m2, c)
        return out
    if not m1.starred and m2.starred:
        return -bracket(n, m2, m1, c)
    out = Q0
    for k in range(1, n + 1):
        mk = astar_coeff(n, m2.index, k, m2.degree)
        if not mk.is_zero():
            out = out + mk * bracket(n, m1, plain(k, m2.degree), c)
    return out


@lru_cache(maxsize=None)
def block_denominator(n: int, r: int) -> QScalar:
    """Common denominator [r]^2 [(n+1)r] of the block coefficient numerators."""
    return qint(r) * qint(r) * qint((n + 1) * r)


# ---------------------------------------------------------------------------
# cyclotomic-tagged coefficients
# ---------------------------------------------------------------------------
# A value is a dict {tag: QScalar} with 0 <= tag <= n, representing
# sum_tag coeff * w^tag, w = exp(i*pi/(n+1)); w^(n+1) = -1 folds into signs.


def fold_tag(n: int, tag: int) -> tuple[int, int]:
    """Fold w^tag to sign * w^tag' with 0 <= tag' <= n."""
    m = tag % (2 * (n + 1))
    if m >= n + 1:
        return -1, m - (n + 1)
    return 1, m


def cyc_make(n: int, scalar: QScalar, tag: int = 0) -> dict:
    if scalar.is_zero():
        return {}
    sgn, t = fold_tag(n, tag)
    return {t: scalar if sgn == 1 else -scalar}


def cyc_add_into(acc: dict, other: dict) -> None:
    for t, v in other.items():
        cur = acc.get(t)
        s = v if cur is None else cur + v
        if s.is_zero():
            acc.pop(t, None)
        else:
            acc[t] = s


def cyc_scale(cv: dict, s: QScalar) -> dict:
    if s.is_zero():
        return {}
    return {t: v * s for t, v in cv.items()}


def cyc_mul(n: int, a: dict, b: dict) -> dict:
    out: dict = {}
    for ta, va in a.items():
        for tb, vb in b.items():
            cyc_add_into(out, cyc_make(n, va * vb, ta + tb))
    return out


def cyc_is_zero(cv: dict) -> bool:
    return not cv


# ---------------------------------------------------------------------------
# states of K(1) tensor C{P}
# ---------------------------------------------------------------------------
# Fock monomials are sorted tuples of (index, r) entries, one per creation
# mode a_index(-r) factor; repeats allowed.

Monomial = tuple

VACUUM: Monomial = ()


def mono_degree(mono: Monomial) -> int:
    return sum(r for _, r in mono)


def mono_mul(a: Monomial, b: Monomial) -> Monomial:
    return tuple(sorted(a + b))


@dataclass(frozen=True)
class FGState:
    """A finitely-supported vector of K(1) tensor a single group word."""

    n: int
    fock: tuple  # ((Monomial, QScalar), ...) with nonzero coefficients
    word: GroupWord

    def degree(self) -> int:
        return max((mono_degree(m) for m, _ in self.fock), default=0)


def basis_state(n: int, mono: Monomial, word: GroupWord) -> FGState:
    return FGState(n, ((mono, Q1),), word)


def random_state(n: int, rng, max_degree: int = 2, coord_bound: int = 2) -> FGState:
    from .lattice import to_gen_coords

    mono = []
    budget = rng.randint(0, max_degree)
    while budget > 0:
        r = rng.randint(1, budget)
        k = rng.randint(1, n)
        mono.append((k, r))
        budget -= r
    coeff = QScalar.from_fraction(Fraction(rng.randint(1, 3), rng.randint(1, 2)))
    mu = LatticeVector(n, tuple(rng.randint(-coord_bound, coord_bound) for _ in range(n)))
    return FGState(n, ((tuple(sorted(mono)), coeff),), to_gen_coords(mu))


# ---------------------------------------------------------------------------
# the truncated evaluator
# ---------------------------------------------------------------------------
# A term is duck-typed: fields n, scalar, rtag, word, h, sigma and a method
# sides() returning per-variable ExpSide-like objects with fields
# cre, ann (per-mode LaurentY numerators over block_denominator), d, g.


@lru_cache(maxsize=None)
def _coeff_of(block_entry, n: int, r: int) -> QScalar:
    """Coefficient of the mode at degree r for one per-mode numerator."""
    if not block_entry:
        return Q0
    return ly_eval(block_entry, r) / block_denominator(n, r)


def _ann_apply(n: int, ann, mono: Monomial):
    """Apply exp(sum_r sum_j c_j(r) a_j(r) z^-r) to a Fock monomial.

    Returns a list of (new_mono, coeff, zloss).  Derivations commute across
    distinct r; per r the exponential acts as a shift operator in the modes.
    """
    by_r: dict[int, dict[int, int]] = {}
    for k, r in mono:
        by_r.setdefault(r, {}).setdefault(k, 0)
        by_r[r][k] += 1
    results = [({}, Q1, 0)]  # (kill counts per (r,k), coeff, zloss)
    for r, mults in sorted(by_r.items()):
        dks = {}
        for k in mults:
            dk = Q0
            for j in range(1, n + 1):
                cj = _coeff_of(ann[j - 1], n, r)
                if not cj.is_zero():
                    br = _bracket_plain(n, j, k, r, 1)
                    if not br.is_zero():
                        dk = dk + cj * br
            dks[k] = dk
        new_results = []
        for kills, coeff, zloss in results:
            options = [[(k, 0, Q1)] for k in mults]
            for pos, k in enumerate(mults):
                dk = dks[k]
                if dk.is_zero():
                    continue
                powv = Q1
                for j in range(1, mults[k] + 1):
                    powv = powv * dk
                    options[pos].append((k, j, QScalar.from_fraction(comb(mults[k], j)) * powv))
            # cartesian product of per-mode kill choices at this r
            combos = [({}, Q1)]
            for opts in options:
                combos = [
                    ({**cm, (r, k): j} if j else cm, cc * oc)
                    for cm, cc in combos
                    for k, j, oc in opts
                ]
            for cm, cc in combos:
                zl = sum(rr * j for (rr, _), j in cm.items())
                new_results.append(({**kills, **cm}, coeff * cc, zloss + zl))
        results = new_results
    out = []
    for kills, coeff, zloss in results:
        if coeff.is_zero():
            continue
        remaining = list(mono)
        for (r, k), j in kills.items():
            for _ in range(j):
                remaining.remove((k, r))
        out.append((tuple(remaining), coeff, zloss))
    return out


@lru_cache(maxsize=None)
def _cre_expansion(n: int, cre, budget: int):
    """Expansion of exp(sum_r sum_k c_k(r) a_k(-r) z^r) up to total degree budget.

    Returns a tuple of (added_mono, coeff, degree).
    """
    modes = []
    for r in range(1, budget + 1):
        for k in range(1, n + 1):
            c = _coeff_of(cre[k - 1], n, r)
            if not c.is_zero():
                modes.append((k, r, c))
    out = [(VACUUM, Q1, 0)]

    def rec(idx: int, mono: tuple, coeff: QScalar, deg: int):
        if idx == len(modes):
            return
        k, r, c = modes[idx]
        rec(idx + 1, mono, coeff, deg)
        cur_mono, cur_coeff, cur_deg, cnt = mono, coeff, deg, 0
        while cur_deg + r <= budget:
            cnt += 1
            cur_mono = cur_mono + ((k, r),)
            cur_deg += r
            cur_coeff = cur_coeff * c / Fraction(cnt)
            out.append((tuple(sorted(cur_mono)), cur_coeff, cur_deg))
            rec(idx + 1, cur_mono, cur_coeff, cur_deg)

    rec(0, VACUUM, Q1, 0)
    return tuple(sorted(out, key=lambda e: e[2]))


def fock_apply(term, state: FGState, zcutoff: int) -> dict:
    """Apply a normal-ordered term to a state, truncating created Fock degree.

    Returns {(monomial, word, zpows): {tag: QScalar}} with one z-power entry
    per variable side of the term; exponents are exact Fractions.
    """
    n = term.n
    mu = word_weight(n, state.word)
    sides = term.sides
    zoff = [pairing(s.d, mu) + s.g for s in sides]
    qe = pairing_frac(n, term.h, mu.coords)
    base = term.scalar * qpow(qe)
    ptilde = (n + 1) * pairing(fundamental(n, n), mu)
    assert ptilde.denominator == 1
    tag = term.rtag + term.sigma * int(ptilde)
    sgn, word2 = group_mul(n, term.word, state.word)
    if sgn < 0:
        base = -base
    out: dict = {}
    if base.is_zero():
        return out
    for mono0, c0 in state.fock:
        # annihilation side by side (derivations commute)
        anned = [(mono0, c0, [Fraction(0)] * len(sides))]
        for si, s in enumerate(sides):
            nxt = []
            for mono, cc, zl in anned:
                for mono1, c1, loss in _ann_apply(n, s.ann, mono):
                    zl2 = list(zl)
                    zl2[si] += loss
                    nxt.append((mono1, cc * c1, zl2))
            anned = nxt
        # creation with a joint budget
        for mono, cc, zloss in anned:
            if cc.is_zero():
                continue
            partials = [(VACUUM, cc, 0, [Fraction(0)] * len(sides))]
            for si, s in enumerate(sides):
                expansion = _cre_expansion(n, s.cre, zcutoff)
                nxt = []
                for addm, pc, pdeg, zg in partials:
                    for am, ac, adeg in expansion:
                        if pdeg + adeg > zcutoff:
                            break  # expansion is degree-sorted
                        zg2 = list(zg)
                        zg2[si] += adeg
                        nxt.append((mono_mul(addm, am), pc * ac, pdeg + adeg, zg2))
                partials = nxt
            for addm, pc, _, zg in partials:
                if pc.is_zero():
                    continue
                zpows = tuple(zoff[si] + zg[si] - zloss[si] for si in range(len(sides)))
                key = (mono_mul(mono, addm), word2, zpows)
                cyc_add_into(out.setdefault(key, {}), cyc_make(n, base * pc, tag))
    return {k: v for k, v in out.items() if v}


def sequential_apply(A, B, state: FGState, zcutoff: int) -> dict:
    """Apply B then A (each a single-variable term); z-powers kept per factor.

    Returns the same key shape as fock_apply on a composed two-sided term:
    {(monomial, word, (pA, pB)): {tag: QScalar}}.
    """
    n = A.n
    out: dict = {}
    mid = fock_apply(B, state, zcutoff)
    for (mono, word, (pb,)), cvb in mid.items():
        res = fock_apply(A, basis_state(n, mono, word), zcutoff)
        for (mono2, word2, (pa,)), cva in res.items():
            key = (mono2, word2, (pa, pb))
            cyc_add_into(out.setdefault(key, {}), cyc_mul(n, cva, cvb))
    return {k: v for k, v in out.items() if v}
