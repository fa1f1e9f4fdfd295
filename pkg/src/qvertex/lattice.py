"""Root and weight lattices of sl_{n+1} and the twisted group algebra C{P}.

Lattice vectors are integer tuples in the fundamental-weight basis
(lambda_1..lambda_n).  Group-algebra words are integer tuples in the generator
basis e^{alpha_2},...,e^{alpha_n}, e^{lambda_n}; the sign cocycle is realized
operationally by canonical reordering with the paper's exchange relations.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Sequence


@lru_cache(maxsize=None)
def cartan_matrix(n: int) -> tuple:
    rows = []
    for i in range(1, n + 1):
        rows.append(tuple(2 if i == j else (-1 if abs(i - j) == 1 else 0) for j in range(1, n + 1)))
    return tuple(rows)


@lru_cache(maxsize=None)
def weight_gram(n: int) -> tuple:
    """(lambda_i, lambda_j) = min(i,j)(n+1-max(i,j))/(n+1), the inverse Cartan matrix."""
    rows = []
    for i in range(1, n + 1):
        rows.append(tuple(Fraction(min(i, j) * (n + 1 - max(i, j)), n + 1) for j in range(1, n + 1)))
    return tuple(rows)


@dataclass(frozen=True)
class LatticeVector:
    """Element of the classical weight lattice P in lambda-coordinates."""

    n: int
    coords: tuple

    def __post_init__(self):
        assert len(self.coords) == self.n

    def __add__(self, other: "LatticeVector") -> "LatticeVector":
        return LatticeVector(self.n, tuple(a + b for a, b in zip(self.coords, other.coords)))

    def __sub__(self, other: "LatticeVector") -> "LatticeVector":
        return LatticeVector(self.n, tuple(a - b for a, b in zip(self.coords, other.coords)))

    def __neg__(self) -> "LatticeVector":
        return LatticeVector(self.n, tuple(-a for a in self.coords))

    def scaled(self, k: int) -> "LatticeVector":
        return LatticeVector(self.n, tuple(k * a for a in self.coords))

    def is_zero(self) -> bool:
        return all(a == 0 for a in self.coords)

    def as_json(self):
        return list(self.coords)


def zero_vector(n: int) -> LatticeVector:
    return LatticeVector(n, (0,) * n)


def fundamental(n: int, i: int) -> LatticeVector:
    assert 1 <= i <= n
    return LatticeVector(n, tuple(1 if j == i else 0 for j in range(1, n + 1)))


@lru_cache(maxsize=None)
def alpha(n: int, j: int) -> LatticeVector:
    """Simple root alpha_j in lambda-coordinates (a Cartan matrix column)."""
    assert 1 <= j <= n
    A = cartan_matrix(n)
    return LatticeVector(n, tuple(A[m][j - 1] for m in range(n)))


def pairing(mu: LatticeVector, nu: LatticeVector) -> Fraction:
    """The symmetric bilinear form with (alpha_i, alpha_j) = a_ij."""
    return pairing_frac(mu.n, mu.coords, nu.coords)


def pairing_frac(n: int, a: Sequence, b: Sequence) -> Fraction:
    G = weight_gram(n)
    total = Fraction(0)
    for i, ai in enumerate(a):
        if not ai:
            continue
        row = G[i]
        for j, bj in enumerate(b):
            if bj:
                total += Fraction(ai) * bj * row[j]
    return total


# ---------------------------------------------------------------------------
# twisted group algebra C{P}
# ---------------------------------------------------------------------------
# Generator basis: g_1 = e^{alpha_2}, ..., g_{n-1} = e^{alpha_n}, g_n = e^{lambda_n}.
# For n = 1 the single generator is e^{lambda_1}.

GroupWord = tuple  # integer exponents in the generator basis


@lru_cache(maxsize=None)
def _generator_vectors(n: int) -> tuple:
    gens = [alpha(n, j) for j in range(2, n + 1)]
    gens.append(fundamental(n, n))
    return tuple(gens)


@lru_cache(maxsize=None)
def _exchange_exponents(n: int) -> tuple:
    """Exchange parity table: g_k g_l = (-1)^eps(k,l) g_l g_k."""
    gens = _generator_vectors(n)
    table = []
    for k in range(n):
        row = []
        for l in range(n):
            if k == n - 1 and l == n - 1:
                row.append(0)  # e^{lambda_n} with itself
            elif k == n - 1 or l == n - 1:
                # alpha_i against lambda_n: (-1)^{delta_in}
                a = gens[k] if l == n - 1 else gens[l]
                idx = next(j for j in range(2, n + 1) if alpha(n, j) == a)
                row.append(1 if idx == n else 0)
            else:
                row.append(int(pairing(gens[k], gens[l])) % 2)
        table.append(tuple(row))
    return tuple(table)


@lru_cache(maxsize=None)
def _base_change(n: int) -> tuple:
    """Inverse of the generator-basis matrix, as Fraction rows; det is +-1."""
    gens = _generator_vectors(n)
    m = [[Fraction(g.coords[r]) for g in gens] for r in range(n)]
    inv = [[Fraction(1) if r == c else Fraction(0) for c in range(n)] for r in range(n)]
    det = Fraction(1)
    for col in range(n):
        piv = next(r for r in range(col, n) if m[r][col])
        if piv != col:
            m[col], m[piv] = m[piv], m[col]
            inv[col], inv[piv] = inv[piv], inv[col]
            det = -det
        det *= m[col][col]
        f = m[col][col]
        m[col] = [v / f for v in m[col]]
        inv[col] = [v / f for v in inv[col]]
        for r in range(n):
            if r != col and m[r][col]:
                g = m[r][col]
                m[r] = [a - g * b for a, b in zip(m[r], m[col])]
                inv[r] = [a - g * b for a, b in zip(inv[r], inv[col])]
    assert abs(det) == 1, "generator basis must be unimodular"
    return tuple(tuple(row) for row in inv)


def to_gen_coords(mu: LatticeVector) -> GroupWord:
    """Coordinates of mu in the generator basis (always integral)."""
    n = mu.n
    inv = _base_change(n)
    out = []
    for r in range(n):
        v = sum(inv[r][c] * mu.coords[c] for c in range(n))
        assert v.denominator == 1
        out.append(int(v))
    return tuple(out)


def word_weight(n: int, w: GroupWord) -> LatticeVector:
    gens = _generator_vectors(n)
    acc = zero_vector(n)
    for m, g in zip(w, gens):
        if m:
            acc = acc + g.scaled(m)
    return acc


def group_mul(n: int, u: GroupWord, v: GroupWord) -> tuple[int, GroupWord]:
    """Product of canonical words: returns (sign, canonical word).

    Reorders the concatenation u * v into canonical generator order,
    accumulating the cocycle sign from the exchange relations.
    """
    eps = _exchange_exponents(n)
    parity = 0
    for k in range(n):
        if not v[k]:
            continue
        for l in range(k + 1, n):
            if u[l]:
                parity += v[k] * u[l] * eps[k][l]
    sign = -1 if parity % 2 else 1
    word = tuple(a + b for a, b in zip(u, v))
    return sign, word


def identity_word(n: int) -> GroupWord:
    return (0,) * n
