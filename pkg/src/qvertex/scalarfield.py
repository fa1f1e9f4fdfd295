"""Exact arithmetic over Q(q^(1/2)) and recognition of contraction series.

The engine works over the field of rational functions in x = q^(1/2) with
rational coefficients.  Everything is exact: polynomials are dense tuples of
fractions.Fraction, reduced by gcd, with a monic denominator, so equality is
syntactic on the canonical form.  q-powers with half-integer exponents are
integer powers of x.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import gcd as _igcd
from typing import Iterator, Sequence

HALF = Fraction(1, 2)

# ---------------------------------------------------------------------------
# dense polynomials over Q: tuples of Fraction, lowest degree first
# ---------------------------------------------------------------------------

_ZEROP: tuple = ()
_ONEP = (Fraction(1),)


def _trim(cs: list[Fraction]) -> tuple:
    n = len(cs)
    while n and not cs[n - 1]:
        n -= 1
    return tuple(cs[:n])


def _padd(a, b):
    if len(a) < len(b):
        a, b = b, a
    out = list(a)
    for i, c in enumerate(b):
        out[i] += c
    return _trim(out)


def _pneg(a):
    return tuple(-c for c in a)


def _pmul(a, b):
    if not a or not b:
        return _ZEROP
    if len(a) == 1:
        c = a[0]
        return tuple(c * v for v in b)
    if len(b) == 1:
        c = b[0]
        return tuple(c * v for v in a)
    out = [Fraction(0)] * (len(a) + len(b) - 1)
    for i, ca in enumerate(a):
        if not ca:
            continue
        for j, cb in enumerate(b):
            if cb:
                out[i + j] += ca * cb
    return _trim(out)


def _pdivmod(a, b):
    """Exact division with remainder over Q; b nonzero."""
    if not b:
        raise ZeroDivisionError("polynomial division by zero")
    a = list(a)
    q = [Fraction(0)] * max(0, len(a) - len(b) + 1)
    lb = b[-1]
    db = len(b) - 1
    while len(a) >= len(b):
        la = a[-1]
        if la:
            k = len(a) - 1 - db
            f = la / lb
            q[k] = f
            for i, cb in enumerate(b):
                a[k + i] -= f * cb
        a.pop()
    return _trim(q), _trim(a)


def _peval(a, x0: Fraction) -> Fraction:
    acc = Fraction(0)
    for c in reversed(a):
        acc = acc * x0 + c
    return acc


def _xorder(a) -> int:
    for i, c in enumerate(a):
        if c:
            return i
    return 0


def _int_primitive(a: Sequence[Fraction]) -> tuple[int, ...]:
    from math import lcm

    if not a:
        return ()
    den = 1
    for c in a:
        den = lcm(den, c.denominator)
    ints = [int(c * den) for c in a]
    g = 0
    for v in ints:
        g = _igcd(g, abs(v))
    if g > 1:
        ints = [v // g for v in ints]
    return tuple(ints)


def _iprem(a: list[int], b: list[int]) -> list[int]:
    """Primitive pseudo-remainder of integer polynomials."""
    a = list(a)
    lb = b[-1]
    db = len(b) - 1
    while len(a) >= len(b):
        la = a[-1]
        if la:
            g = _igcd(abs(la), abs(lb))
            m_a, m_b = lb // g, la // g
            a = [c * m_a for c in a]
            k = len(a) - 1 - db
            for i, cb in enumerate(b):
                a[k + i] -= m_b * cb
        a.pop()
    while a and a[-1] == 0:
        a.pop()
    if a:
        g = 0
        for v in a:
            g = _igcd(g, abs(v))
        if g > 1:
            a = [v // g for v in a]
    return a


def _pgcd(a, b):
    """Monic gcd over Q (primitive integer Euclid inside)."""
    if not a:
        return _monic(b)
    if not b:
        return _monic(a)
    # common power of x first: cheap and very frequent here
    oa, ob = _xorder(a), _xorder(b)
    shift = min(oa, ob)
    ia = list(_int_primitive(a[oa:]))
    ib = list(_int_primitive(b[ob:]))
    while ib:
        ia, ib = ib, _iprem(ia, ib)
    head = tuple(Fraction(v) for v in ia)
    return _pshift(_monic(head), shift)


def _monic(a):
    if not a or a[-1] == 1:
        return a
    lead = a[-1]
    return tuple(c / lead for c in a)


def _pshift(a, k: int):
    if not a or k == 0:
        return a
    return tuple([Fraction(0)] * k) + tuple(a)


# ---------------------------------------------------------------------------
# the field Q(x), x = q^(1/2)
# ---------------------------------------------------------------------------


class PoleAtOne(ArithmeticError):
    """Raised by limit_q1 when a genuine pole at q = 1 remains."""


class FractionalQPower(ArithmeticError):
    """Raised when an exponent of q falls outside (1/2)Z."""


class QScalar:
    """Canonical rational function in x = q^(1/2) over Q."""

    __slots__ = ("num", "den", "_hash")

    def __init__(self, num, den, _canonical=False):
        if not _canonical:
            num, den = _reduce(num, den)
        self.num = num
        self.den = den
        self._hash = None

    # -- constructors ------------------------------------------------------

    @staticmethod
    def from_fraction(v) -> "QScalar":
        v = Fraction(v)
        return QScalar((v,) if v else (), _ONEP, _canonical=True)

    # -- predicates ---------------------------------------------------------

    def is_zero(self) -> bool:
        return not self.num

    def __bool__(self) -> bool:
        return bool(self.num)

    def is_rational(self) -> bool:
        return len(self.num) <= 1 and self.den == _ONEP

    def as_fraction(self) -> Fraction:
        if not self.is_rational():
            raise ValueError(f"not a rational constant: {self}")
        return self.num[0] if self.num else Fraction(0)

    # -- arithmetic ----------------------------------------------------------

    def __add__(self, other):
        other = _coerce(other)
        if self.den == other.den:
            return QScalar(_padd(self.num, other.num), self.den)
        return QScalar(
            _padd(_pmul(self.num, other.den), _pmul(other.num, self.den)),
            _pmul(self.den, other.den),
        )

    __radd__ = __add__

    def __neg__(self):
        return QScalar(_pneg(self.num), self.den, _canonical=True)

    def __sub__(self, other):
        return self + (-_coerce(other))

    def __rsub__(self, other):
        return _coerce(other) + (-self)

    def __mul__(self, other):
        other = _coerce(other)
        if not self.num or not other.num:
            return Q0
        return QScalar(_pmul(self.num, other.num), _pmul(self.den, other.den))

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = _coerce(other)
        if not other.num:
            raise ZeroDivisionError("division by zero QScalar")
        if not self.num:
            return Q0
        return QScalar(_pmul(self.num, other.den), _pmul(self.den, other.num))

    def __rtruediv__(self, other):
        return _coerce(other) / self

    def __pow__(self, k: int):
        if k == 0:
            return Q1
        if k < 0:
            return (Q1 / self) ** (-k)
        base, acc = self, Q1
        while k:
            if k & 1:
                acc = acc * base
            base = base * base if k > 1 else base
            k >>= 1
        return acc

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = QScalar.from_fraction(other)
        if not isinstance(other, QScalar):
            return NotImplemented
        return self.num == other.num and self.den == other.den

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.num, self.den))
        return self._hash

    # -- misc ----------------------------------------------------------------

    def subs_x(self, x0: Fraction) -> Fraction:
        d = _peval(self.den, x0)
        if d == 0:
            raise ZeroDivisionError("denominator vanishes at substitution point")
        return _peval(self.num, x0) / d

    def sort_key(self):
        return (self.num, self.den)

    def __repr__(self):
        return f"QScalar({q_text(self)})"


def _reduce(num, den):
    num = _trim(list(num)) if not isinstance(num, tuple) else _trim(list(num))
    den = _trim(list(den)) if not isinstance(den, tuple) else _trim(list(den))
    if not den:
        raise ZeroDivisionError("zero denominator")
    if not num:
        return _ZEROP, _ONEP
    o = min(_xorder(num), _xorder(den))
    if o:
        num, den = num[o:], den[o:]
    if len(den) == 1:
        c = den[0]
        if c != 1:
            num = tuple(v / c for v in num)
        return num, _ONEP
    g = _pgcd(num, den)
    if len(g) > 1 or _xorder(g):
        num, _ = _pdivmod(num, g)
        den, _ = _pdivmod(den, g)
    lead = den[-1]
    if lead != 1:
        num = tuple(v / lead for v in num)
        den = tuple(v / lead for v in den)
    return num, den


def _coerce(v) -> QScalar:
    if isinstance(v, QScalar):
        return v
    if isinstance(v, (int, Fraction)):
        return QScalar.from_fraction(v)
    raise TypeError(f"cannot coerce {type(v)!r} to QScalar")


Q0 = QScalar.from_fraction(0)
Q1 = QScalar.from_fraction(1)


@lru_cache(maxsize=None)
def xpow(k: int) -> QScalar:
    """x^k for integer k (x = q^(1/2))."""
    if k >= 0:
        return QScalar(_pshift(_ONEP, k), _ONEP, _canonical=True)
    return QScalar(_ONEP, _pshift(_ONEP, -k), _canonical=True)


def qpow(e) -> QScalar:
    """q^e for e in (1/2)Z."""
    e = Fraction(e)
    two_e = 2 * e
    if two_e.denominator != 1:
        raise FractionalQPower(f"q^{e} is outside Q(q^(1/2))")
    return xpow(int(two_e))


@lru_cache(maxsize=None)
def qint(m: int) -> QScalar:
    """The q-integer [m] = (q^m - q^-m)/(q - q^-1)."""
    if m == 0:
        return Q0
    if m < 0:
        return -qint(-m)
    # [m] = q^(m-1) + q^(m-3) + ... + q^(1-m), exponents in x: 2m-2, 2m-6, ...
    out = Q0
    for j in range(m):
        out = out + xpow(2 * (m - 1 - 2 * j))
    return out


@lru_cache(maxsize=None)
def qfact(m: int) -> QScalar:
    if m < 0:
        raise ValueError("q-factorial of a negative integer")
    out = Q1
    for j in range(1, m + 1):
        out = out * qint(j)
    return out


def qbinom(m: int, k: int) -> QScalar:
    """q-binomial [m over k] = [m]!/([k]![m-k]!)."""
    if not (0 <= k <= m):
        raise ValueError(f"qbinom out of domain: m={m}, k={k}")
    return qfact(m) / (qfact(k) * qfact(m - k))


def _order_at_one(p) -> tuple[int, tuple]:
    """Vanishing order of p at x = 1, and p/(x-1)^order."""
    order = 0
    while p and _peval(p, Fraction(1)) == 0:
        p, r = _pdivmod(p, (Fraction(-1), Fraction(1)))
        assert not r
        order += 1
    return order, p


def limit_q1(f: QScalar) -> Fraction:
    """Evaluate f at q = 1 (x = 1), cancelling common (x-1) powers.

    Raises PoleAtOne when a genuine pole remains.
    """
    if f.is_zero():
        return Fraction(0)
    on, pn = _order_at_one(f.num)
    od, pd = _order_at_one(f.den)
    if on < od:
        raise PoleAtOne(f"pole of order {od - on} at q = 1")
    val = _peval(pd, Fraction(1))
    top = _peval(pn, Fraction(1)) if on == od else Fraction(0)
    return top / val


# ---------------------------------------------------------------------------
# rendering
# ---------------------------------------------------------------------------


def _q_exponent_str(k: int) -> str:
    # x^k = q^(k/2)
    if k % 2 == 0:
        e = k // 2
        if e == 1:
            return "q"
        return f"q^{e}" if e >= 0 else f"q^({e})"
    return f"q^({k}/2)"


def _poly_q_str(p) -> str:
    if not p:
        return "0"
    parts = []
    for k in range(len(p) - 1, -1, -1):
        c = p[k]
        if not c:
            continue
        mag = abs(c)
        if k == 0:
            body = str(mag)
        else:
            qs = _q_exponent_str(k)
            body = qs if mag == 1 else f"{mag}*{qs}"
        parts.append(("- " if c < 0 else "+ ") + body)
    s = " ".join(parts)
    if s.startswith("+ "):
        s = s[2:]
    elif s.startswith("- "):
        s = "-" + s[2:]
    return s


def q_text(f: QScalar) -> str:
    """Canonical text rendering, "(q^2 - 1)/(q)" style."""
    ns = _poly_q_str(f.num)
    if f.den == _ONEP:
        return ns
    return f"({ns})/({_poly_q_str(f.den)})"


def q_json(f: QScalar) -> dict:
    """Bit-exact JSON: numerator/denominator coefficient arrays in x."""
    enc = lambda p: [[c.numerator, c.denominator] for c in p]
    return {"num": enc(f.num), "den": enc(f.den)}


# ---------------------------------------------------------------------------
# Laurent polynomials in y = q^(r/2) over QScalar
# ---------------------------------------------------------------------------
# Canonical form: tuple of (exponent, coefficient) sorted by exponent,
# coefficients nonzero.  These encode mode-coefficient sequences of the
# exponential blocks; y-exponent e contributes q^(e*r/2) at mode degree r.

LaurentY = tuple

LY_ZERO: LaurentY = ()


def ly_make(items) -> LaurentY:
    acc: dict[int, QScalar] = {}
    for e, c in items:
        if e in acc:
            acc[e] = acc[e] + c
        else:
            acc[e] = c
    return tuple(sorted((e, c) for e, c in acc.items() if not c.is_zero()))


def ly_add(a: LaurentY, b: LaurentY) -> LaurentY:
    if not a:
        return b
    if not b:
        return a
    return ly_make(list(a) + list(b))


def ly_neg(a: LaurentY) -> LaurentY:
    return tuple((e, -c) for e, c in a)


def ly_scale(a: LaurentY, s: QScalar) -> LaurentY:
    if s.is_zero():
        return LY_ZERO
    return tuple((e, c * s) for e, c in a)


def ly_mul(a: LaurentY, b: LaurentY) -> LaurentY:
    out: dict[int, QScalar] = {}
    for ea, ca in a:
        for eb, cb in b:
            e = ea + eb
            v = ca * cb
            if e in out:
                out[e] = out[e] + v
            else:
                out[e] = v
    return tuple(sorted((e, c) for e, c in out.items() if not c.is_zero()))


def ly_shift(a: LaurentY, d: int) -> LaurentY:
    """Multiply by y^d."""
    if d == 0:
        return a
    return tuple((e + d, c) for e, c in a)


@lru_cache(maxsize=None)
def _xpow_cached(k: int) -> QScalar:
    return xpow(k)


def ly_eval(a: LaurentY, r: int) -> QScalar:
    """Evaluate at y = x^r, i.e. q^(r/2)."""
    out = Q0
    for e, c in a:
        out = out + c * _xpow_cached(e * r)
    return out


def ly_divmod(a: LaurentY, b: LaurentY) -> tuple[LaurentY, LaurentY]:
    """Laurent division in y over the field Q(x); returns (quotient, remainder)."""
    if not b:
        raise ZeroDivisionError("Laurent division by zero")
    if not a:
        return LY_ZERO, LY_ZERO
    amin, bmin = a[0][0], b[0][0]
    da = a[-1][0] - amin
    db = b[-1][0] - bmin
    ca = [Q0] * (da + 1)
    for e, c in a:
        ca[e - amin] = c
    cb = [Q0] * (db + 1)
    for e, c in b:
        cb[e - bmin] = c
    q = [Q0] * max(0, da - db + 1)
    lead = cb[db]
    for k in range(da - db, -1, -1):
        top = ca[k + db]
        if top.is_zero():
            continue
        f = top / lead
        q[k] = f
        for idx, cbv in enumerate(cb):
            if not cbv.is_zero():
                ca[k + idx] = ca[k + idx] - f * cbv
    shift = amin - bmin
    quot = ly_make((k + shift, c) for k, c in enumerate(q) if not c.is_zero())
    rem = ly_make((k + amin, c) for k, c in enumerate(ca) if not c.is_zero())
    return quot, rem


def ly_max_abs_exp(a: LaurentY) -> int:
    if not a:
        return 0
    return max(abs(a[0][0]), abs(a[-1][0]))


@lru_cache(maxsize=None)
def bracket_ly(m: int) -> LaurentY:
    """[m*r] as a Laurent polynomial in y = q^(r/2): (y^2m - y^-2m)/(q - q^-1)."""
    if m == 0:
        return LY_ZERO
    inv = Q1 / (qpow(1) - qpow(-1))
    return ly_make([(2 * m, inv), (-2 * m, -inv)])


# ---------------------------------------------------------------------------
# factored contraction prefactors and their recognition
# ---------------------------------------------------------------------------


class NoMatch(ValueError):
    """recognize_product could not match the sequence within bounds."""


@dataclass(frozen=True)
class FactoredPrefactor:
    """constant * z1^z1exp * z2^z2exp * prod_k (z1 - q^(a_k) z2)^(e_k)."""

    constant: QScalar
    z1exp: Fraction
    z2exp: Fraction
    factors: tuple  # ((a: Fraction, e: int), ...) sorted by a, e != 0

    def __post_init__(self):
        assert all(e != 0 for _, e in self.factors)
        object.__setattr__(self, "factors", tuple(sorted(self.factors)))

    def __mul__(self, other: "FactoredPrefactor") -> "FactoredPrefactor":
        acc: dict[Fraction, int] = {}
        for a, e in self.factors + other.factors:
            acc[a] = acc.get(a, 0) + e
        return FactoredPrefactor(
            self.constant * other.constant,
            self.z1exp + other.z1exp,
            self.z2exp + other.z2exp,
            tuple(sorted((a, e) for a, e in acc.items() if e)),
        )

    def scaled(self, c: QScalar) -> "FactoredPrefactor":
        return FactoredPrefactor(self.constant * c, self.z1exp, self.z2exp, self.factors)

    def swapped(self) -> "FactoredPrefactor":
        """The same rational function with z1 and z2 exchanged."""
        const = self.constant
        factors = []
        for a, e in self.factors:
            # (z2 - q^a z1) = (-q^a) * (z1 - q^(-a) z2)
            const = const * (-qpow(a)) ** e
            factors.append((-a, e))
        return FactoredPrefactor(const, self.z2exp, self.z1exp, tuple(sorted(factors)))

    def poles(self):
        return tuple((a, -e) for a, e in self.factors if e < 0)

    def is_trivial(self) -> bool:
        return not self.factors and self.constant == Q1 and not self.z1exp and not self.z2exp

    def max_pole_order(self) -> int:
        return max((-e for _, e in self.factors if e < 0), default=0)

    def render(self) -> str:
        bits = []
        if self.constant != Q1:
            bits.append(f"({q_text(self.constant)})")
        if self.z1exp:
            bits.append(f"z1^{self.z1exp}")
        if self.z2exp:
            bits.append(f"z2^{self.z2exp}")
        for a, e in self.factors:
            base = "(z1 - z2)" if a == 0 else f"(z1 - q^({a}) z2)"
            bits.append(base if e == 1 else f"{base}^{e}")
        return " ".join(bits) if bits else "1"


PREFACTOR_ONE = FactoredPrefactor(Q1, Fraction(0), Fraction(0), ())


def log_series(factors, n_terms: int) -> list[QScalar]:
    """c_r of log prod_k (1 - q^(a_k) w)^(e_k): c_r = -sum_k e_k q^(a_k r)/r."""
    out = []
    for r in range(1, n_terms + 1):
        s = Q0
        for a, e in factors:
            s = s + Fraction(e) * qpow(Fraction(a) * r)
        out.append(-s / Fraction(r))
    return out


def _berlekamp_massey(s: list[QScalar]) -> list[QScalar]:
    """Minimal LFSR for s over Q(x).

    Returns the connection polynomial C(y) = 1 + c_1 y + ... + c_L y^L with
    s[i] + sum_{j=1..L} c_j s[i-j] = 0 for L <= i < len(s).
    """
    C = [Q1]
    B = [Q1]
    L, m = 0, 1
    b = Q1
    for i, si in enumerate(s):
        d = si
        for j in range(1, L + 1):
            d = d + C[j] * s[i - j]
        if d.is_zero():
            m += 1
            continue
        coef = d / b
        T = list(C)
        need = m + len(B)
        if len(C) < need:
            C = C + [Q0] * (need - len(C))
        for j, bj in enumerate(B):
            C[m + j] = C[m + j] - coef * bj
        if 2 * L <= i:
            L = i + 1 - L
            B = T
            b = d
            m = 1
        else:
            m += 1
    while len(C) > 1 and C[-1].is_zero():
        C.pop()
    assert len(C) <= L + 1
    return C


def _half_range(amax) -> Iterator[Fraction]:
    amax = Fraction(amax)
    k = int(2 * amax)
    for two_a in range(-k, k + 1):
        yield Fraction(two_a, 2)


def _solve_linear(rows, rhs):
    """Gaussian elimination over QScalar; rows is a square matrix."""
    n = len(rows)
    m = [list(r) + [v] for r, v in zip(rows, rhs)]
    for col in range(n):
        piv = next((r for r in range(col, n) if not m[r][col].is_zero()), None)
        if piv is None:
            raise NoMatch("singular system while fitting exponents")
        m[col], m[piv] = m[piv], m[col]
        inv = Q1 / m[col][col]
        m[col] = [v * inv for v in m[col]]
        for r in range(n):
            if r != col and not m[r][col].is_zero():
                f = m[r][col]
                m[r] = [a - f * b for a, b in zip(m[r], m[col])]
    return [m[r][n] for r in range(n)]


def recognize_product(cs: Sequence[QScalar], amax, emax: int = 2) -> FactoredPrefactor:
    """Recognize c_r as log-expansion coefficients of prod_k (1 - q^(a_k) w)^(e_k).

    Fits the minimal linear recurrence of s_r = r*c_r (Berlekamp-Massey over
    Q(q^(1/2))), extracts roots restricted to q^a with a in (1/2)Z, |a| <= amax,
    solves for integer exponents with |e| <= emax and verifies every input
    term.  The returned prefactor carries the z1-normalization
    prod (1 - q^a w)^e = z1^(-sum e) prod (z1 - q^a z2)^e.

    Raises NoMatch when the sequence is not of this form within bounds.
    """
    n = len(cs)
    s = [Fraction(r) * cs[r - 1] for r in range(1, n + 1)]
    if all(v.is_zero() for v in s):
        return PREFACTOR_ONE
    conn = _berlekamp_massey(s)
    L = len(conn) - 1
    if L == 0 or n < 2 * L + 4:
        raise NoMatch(f"sequence too short for recurrence order {L}")
    # roots of the characteristic polynomial are the q^(a_k); conn has them
    # as y = q^(-a) roots of C(y) = prod_k (1 - q^(a_k) y)
    poly = list(conn)
    roots: list[Fraction] = []
    for a in _half_range(amax):
        ya = qpow(-a)
        # synthetic evaluation/deflation by (y - ya), i.e. root y = q^(-a)
        val = Q0
        for c in reversed(poly):
            val = val * ya + c
        if val.is_zero():
            # deflate once; repeated roots are not exponential sums
            out = []
            acc = Q0
            for c in reversed(poly):
                acc = acc * ya + c
                out.append(acc)
            out.pop()  # remainder
            poly = list(reversed(out))
            roots.append(a)
            val2 = Q0
            for c in reversed(poly):
                val2 = val2 * ya + c
            if val2.is_zero():
                raise NoMatch(f"repeated recurrence root q^{a}")
        if len(roots) == L:
            break
    if len(roots) != L:
        raise NoMatch("recurrence roots are not q-powers within range")
    rows = [[qpow(a * r) for a in roots] for r in range(1, L + 1)]
    sol = _solve_linear(rows, [-s[r - 1] for r in range(1, L + 1)])
    factors = []
    for a, e in zip(roots, sol):
        if not e.is_rational():
            raise NoMatch(f"non-constant exponent at q^{a}")
        ef = e.as_fraction()
        if ef.denominator != 1:
            raise NoMatch(f"non-integer exponent {ef} at q^{a}")
        ei = int(ef)
        if ei == 0:
            raise NoMatch(f"vanishing exponent at q^{a}")
        if abs(ei) > emax:
            raise NoMatch(f"exponent {ei} at q^{a} exceeds bound {emax}")
        factors.append((a, ei))
    factors.sort()
    result = FactoredPrefactor(Q1, Fraction(-sum(e for _, e in factors)), Fraction(0), tuple(factors))
    for r in range(1, n + 1):
        s_expect = Q0
        for a, e in factors:
            s_expect = s_expect + Fraction(e) * qpow(a * r)
        if s[r - 1] != -s_expect:
            raise NoMatch(f"verification failed at term r={r}")
    return result
