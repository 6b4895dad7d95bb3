"""Sparse multivariate polynomials over Q and exact/generic linear algebra.

The polynomial type is the workhorse underneath the constants ring: a
dict mapping monomials (sorted tuples of (generator_index, exponent))
to Fraction coefficients.  Generator indices refer to positions in some
external generator list, so polynomials stay valid when new generators
are adjoined later.

Row reduction comes in three flavours:

* exact over Fraction (weight filtrations, rational lattices),
* generic over any field described by a FieldOps record (constants-ring
  fraction field, where zero testing is numeric-witness based),
* numeric least squares via mpmath QR (membership tests at a tolerance).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Optional, Sequence

import mpmath as mp

Monomial = tuple  # tuple[tuple[int, int], ...], sorted by generator index

_ZERO = Fraction(0)
_ONE = Fraction(1)


def _mono_mul(m1: Monomial, m2: Monomial) -> Monomial:
    if not m1:
        return m2
    if not m2:
        return m1
    d = dict(m1)
    for i, e in m2:
        d[i] = d.get(i, 0) + e
        if d[i] == 0:
            del d[i]
    return tuple(sorted(d.items()))


class Poly:
    """Sparse polynomial in externally-indexed generators, coefficients in Q."""

    __slots__ = ("terms",)

    def __init__(self, terms: Optional[dict] = None):
        self.terms = terms or {}

    # -- constructors ------------------------------------------------
    @staticmethod
    def zero() -> "Poly":
        return Poly()

    @staticmethod
    def const(c) -> "Poly":
        c = Fraction(c)
        return Poly({(): c} if c else {})

    @staticmethod
    def gen(i: int, power: int = 1) -> "Poly":
        if power == 0:
            return Poly.const(1)
        return Poly({((i, power),): _ONE})

    @staticmethod
    def from_terms(pairs: Iterable[tuple]) -> "Poly":
        """pairs of (coefficient, {gen_index: exponent})"""
        t = {}
        for c, expo in pairs:
            c = Fraction(c)
            if not c:
                continue
            mono = tuple(sorted((i, e) for i, e in expo.items() if e))
            t[mono] = t.get(mono, _ZERO) + c
            if not t[mono]:
                del t[mono]
        return Poly(t)

    # -- ring ops ----------------------------------------------------
    def __add__(self, other: "Poly") -> "Poly":
        t = dict(self.terms)
        for m, c in other.terms.items():
            s = t.get(m, _ZERO) + c
            if s:
                t[m] = s
            else:
                t.pop(m, None)
        return Poly(t)

    def __sub__(self, other: "Poly") -> "Poly":
        return self + (-other)

    def __neg__(self) -> "Poly":
        return Poly({m: -c for m, c in self.terms.items()})

    def __mul__(self, other: "Poly") -> "Poly":
        t = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                m = _mono_mul(m1, m2)
                s = t.get(m, _ZERO) + c1 * c2
                if s:
                    t[m] = s
                else:
                    t.pop(m, None)
        return Poly(t)

    def scale(self, c) -> "Poly":
        c = Fraction(c)
        if not c:
            return Poly()
        return Poly({m: cc * c for m, cc in self.terms.items()})

    def __pow__(self, n: int) -> "Poly":
        if n < 0:
            raise ValueError("negative power of a polynomial")
        out = Poly.const(1)
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    # -- queries -----------------------------------------------------
    def is_zero(self) -> bool:
        return not self.terms

    def is_constant(self) -> bool:
        return all(m == () for m in self.terms)

    def constant_value(self) -> Fraction:
        if not self.is_constant():
            raise ValueError("not a constant polynomial")
        return self.terms.get((), _ZERO)

    def gens_used(self) -> set:
        out = set()
        for m in self.terms:
            for i, _ in m:
                out.add(i)
        return out

    def total_degree(self) -> int:
        if not self.terms:
            return 0
        return max((sum(e for _, e in m) for m in self.terms), default=0)

    def __eq__(self, other):
        return isinstance(other, Poly) and self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    # -- calculus / evaluation ----------------------------------------
    def partial(self, i: int) -> "Poly":
        t = {}
        for m, c in self.terms.items():
            d = dict(m)
            e = d.get(i, 0)
            if not e:
                continue
            if e == 1:
                del d[i]
            else:
                d[i] = e - 1
            mono = tuple(sorted(d.items()))
            s = t.get(mono, _ZERO) + c * e
            if s:
                t[mono] = s
            else:
                t.pop(mono, None)
        return Poly(t)

    def eval(self, values: Sequence) -> mp.mpc:
        """Evaluate at mpmath witnesses, indexed by generator index."""
        total = mp.mpc(0)
        for m, c in self.terms.items():
            term = mp.mpc(c.numerator) / c.denominator
            for i, e in m:
                term *= mp.mpmathify(values[i]) ** e
            total += term
        return total

    def pretty(self, names: Sequence[str]) -> str:
        if not self.terms:
            return "0"
        parts = []
        for m, c in sorted(self.terms.items()):
            factors = []
            if c != 1 or not m:
                factors.append(str(c))
            for i, e in m:
                factors.append(names[i] if e == 1 else f"{names[i]}^{e}")
            parts.append("*".join(factors))
        return " + ".join(parts)

    def __repr__(self):
        return f"Poly({self.terms!r})"


# ---------------------------------------------------------------------------
# generic row reduction
# ---------------------------------------------------------------------------

@dataclass
class FieldOps:
    """Field operations for generic elimination.

    is_zero may be numeric (witness-based); pivot_size, when given,
    returns a float magnitude used to pick the best pivot in a column.
    """

    add: Callable
    sub: Callable
    mul: Callable
    div: Callable
    neg: Callable
    zero: object
    one: object
    is_zero: Callable
    pivot_size: Optional[Callable] = None


FRACTION_OPS = FieldOps(
    add=lambda a, b: a + b,
    sub=lambda a, b: a - b,
    mul=lambda a, b: a * b,
    div=lambda a, b: a / b,
    neg=lambda a: -a,
    zero=_ZERO,
    one=_ONE,
    is_zero=lambda a: a == 0,
)


def rref(rows, ops: FieldOps = FRACTION_OPS):
    """Reduced row echelon form over an arbitrary field.

    Returns (new_rows, pivot_columns).  Rows that reduce to zero are
    dropped.  Input rows are not mutated.
    """
    rows = [list(r) for r in rows]
    if not rows:
        return [], []
    ncols = len(rows[0])
    pivots = []
    out = []
    work = rows
    col = 0
    while work and col < ncols:
        # choose pivot row for this column
        best, best_sz = None, None
        for k, r in enumerate(work):
            if not ops.is_zero(r[col]):
                if ops.pivot_size is None:
                    best = k
                    break
                sz = ops.pivot_size(r[col])
                if best is None or sz > best_sz:
                    best, best_sz = k, sz
        if best is None:
            col += 1
            continue
        piv = work.pop(best)
        inv = ops.div(ops.one, piv[col])
        piv = [ops.mul(inv, x) for x in piv]
        for r in work:
            if not ops.is_zero(r[col]):
                f = r[col]
                for j in range(ncols):
                    r[j] = ops.sub(r[j], ops.mul(f, piv[j]))
        for r in out:
            if not ops.is_zero(r[col]):
                f = r[col]
                for j in range(ncols):
                    r[j] = ops.sub(r[j], ops.mul(f, piv[j]))
        out.append(piv)
        pivots.append(col)
        col += 1
    # sort rows by pivot column
    order = sorted(range(len(out)), key=lambda k: pivots[k])
    return [out[k] for k in order], sorted(pivots)


def rank(rows, ops: FieldOps = FRACTION_OPS) -> int:
    return len(rref(rows, ops)[0])


def in_rowspace(v, rows, ops: FieldOps = FRACTION_OPS) -> bool:
    base, _ = rref(rows, ops)
    ext, _ = rref(base + [list(v)], ops)
    return len(ext) == len(base)


def solve_right(A, b, ops: FieldOps = FRACTION_OPS):
    """One solution x of A x = b (columns combination), or None.

    A is a list of rows; the solution expresses b as sum_j x_j * column_j.
    """
    if not A:
        return None
    nrows, ncols = len(A), len(A[0])
    aug = [list(A[i]) + [b[i]] for i in range(nrows)]
    red, pivots = rref(aug, ops)
    if ncols in pivots:
        return None  # inconsistent
    x = [ops.zero] * ncols
    for r, p in zip(red, pivots):
        x[p] = r[-1]
    return x


def kernel(rows, ops: FieldOps = FRACTION_OPS):
    """Basis of the right kernel {x : rows . x = 0}."""
    if not rows:
        return []
    ncols = len(rows[0])
    red, pivots = rref(rows, ops)
    free = [j for j in range(ncols) if j not in pivots]
    basis = []
    for f in free:
        v = [ops.zero] * ncols
        v[f] = ops.one
        for r, p in zip(red, pivots):
            v[p] = ops.neg(r[f])
        basis.append(v)
    return basis


def annihilator(rows, ncols: int, ops: FieldOps = FRACTION_OPS):
    """Basis of functionals vanishing on the row space (as row vectors).

    A functional f kills every row of A exactly when A f^T = 0, so this
    is just the right kernel, with the empty span annihilated by all of
    the dual standard basis.
    """
    if not rows:
        out = []
        for k in range(ncols):
            v = [ops.zero] * ncols
            v[k] = ops.one
            out.append(v)
        return out
    return kernel(rows, ops)


def _transpose(rows):
    return [list(col) for col in zip(*rows)]


def intersect_rowspaces(A, B, ops: FieldOps = FRACTION_OPS):
    """Basis of rowspace(A) ∩ rowspace(B)."""
    if not A or not B:
        return []
    # Zassenhaus: reduce [A | A; B | 0], intersection shows in rows [0 | C]
    ncols = len(A[0])
    big = [list(r) + list(r) for r in A] + [list(r) + [ops.zero] * ncols for r in B]
    red, _ = rref(big, ops)
    out = []
    for r in red:
        if all(ops.is_zero(x) for x in r[:ncols]):
            tail = r[ncols:]
            if not all(ops.is_zero(x) for x in tail):
                out.append(tail)
    return out


def invert_matrix(rows, ops: FieldOps = FRACTION_OPS):
    """Inverse of a square matrix over the field, or None if singular."""
    n = len(rows)
    if any(len(r) != n for r in rows):
        raise ValueError("matrix must be square")
    aug = [list(rows[i]) + [ops.one if j == i else ops.zero
                            for j in range(n)] for i in range(n)]
    red, pivots = rref(aug, ops)
    if pivots[:n] != list(range(n)) or len(pivots) < n:
        return None
    return [r[n:] for r in red]


def kron_vec(u, v, mul=lambda a, b: a * b):
    return [mul(a, b) for a in u for b in v]


def kron_rowspace(A, B, ops: FieldOps = FRACTION_OPS):
    """Basis of the Kronecker product of two row spaces."""
    return [kron_vec(a, b, ops.mul) for a in A for b in B]


# ---------------------------------------------------------------------------
# numeric helpers
# ---------------------------------------------------------------------------

def _conj_t(M):
    out = mp.matrix(M.cols, M.rows)
    for i in range(M.rows):
        for j in range(M.cols):
            out[j, i] = mp.conj(M[i, j])
    return out


def numeric_membership_residual(cols, v):
    """Least-squares residual of expressing v by the given columns.

    cols: list of column vectors (mp numbers); v: target vector.
    Returns (residual_norm, coefficients).  Solved through the SVD
    pseudoinverse, so rank-deficient and single-column systems are fine.
    """
    with mp.extradps(15):
        bb = mp.matrix([[mp.mpc(x)] for x in v])
        if not cols:
            return mp.norm(bb), []
        n = len(cols)
        A = mp.matrix([[cols[j][i] for j in range(n)] for i in range(len(v))])
        U, S, V = mp.svd_c(A)
        smax = max(abs(S[i]) for i in range(n))
        if smax == 0:
            return mp.norm(bb), [mp.mpc(0)] * n
        cutoff = smax * mp.mpf(10) ** (-mp.mp.dps + 10)
        y = _conj_t(U) * bb
        w = mp.matrix(n, 1)
        for i in range(n):
            if abs(S[i]) > cutoff:
                w[i] = y[i] / S[i]
        x = _conj_t(V) * w
        resid = A * x - bb
        return mp.norm(resid), [x[i] for i in range(n)]


def numeric_intersection(rows_a, rows_b, tol):
    """Basis (list of rows) of the intersection of two numeric row spans.

    Finds kernel vectors (x, y) of [A^T | -B^T] via SVD, i.e. coefficient
    pairs with x.A = y.B, and returns the corresponding vectors x.A.
    """
    if not rows_a or not rows_b:
        return []
    n = len(rows_a[0])
    s, t = len(rows_a), len(rows_b)
    M = mp.matrix(n, s + t)
    for i in range(n):
        for j in range(s):
            M[i, j] = mp.mpmathify(rows_a[j][i])
        for j in range(t):
            M[i, s + j] = -mp.mpmathify(rows_b[j][i])
    U, S, V = mp.svd_c(M, full_matrices=True)
    smax = max([abs(S[k]) for k in range(len(S))] + [mp.mpf(1)])
    out = []
    for k in range(s + t):
        sigma = abs(S[k]) if k < len(S) else mp.mpf(0)
        if sigma <= tol * smax:
            coeff = [V[k, j] for j in range(s)]
            vec = [mp.fsum(coeff[j] * rows_a[j][i] for j in range(s))
                   for i in range(n)]
            if max(abs(x) for x in vec) > tol * smax:
                out.append(vec)
    return out


def numeric_rank(rows, tol):
    """Rank of a numeric matrix at a tolerance, via column pivoting."""
    rows = [[mp.mpmathify(x) for x in r] for r in rows]
    if not rows:
        return 0
    ncols = len(rows[0])
    r = 0
    col = 0
    work = [list(row) for row in rows]
    scale = max((abs(x) for row in work for x in row), default=mp.mpf(0))
    if scale == 0:
        return 0
    while col < ncols and r < len(work):
        piv, pv = None, tol * scale
        for k in range(r, len(work)):
            if abs(work[k][col]) > pv:
                piv, pv = k, abs(work[k][col])
        if piv is None:
            col += 1
            continue
        work[r], work[piv] = work[piv], work[r]
        for k in range(len(work)):
            if k != r and abs(work[k][col]) > 0:
                f = work[k][col] / work[r][col]
                for j in range(ncols):
                    work[k][j] -= f * work[r][j]
        r += 1
        col += 1
    return r
