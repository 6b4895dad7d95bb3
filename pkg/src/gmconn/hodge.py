"""Exact linear algebra of mixed Hodge structures.

A structure is a rational vector space with basis labels, an increasing
weight filtration W over Q, a decreasing Hodge filtration F over C whose
vectors may have exact (ConstExpr) or floating (mpc) entries, and
optional graded polarizations.  Connections are square matrices of
one-forms over the constants field; the checker verifies the structural
identities a Gauss-Manin-style connection must satisfy (weight
preservation, Griffiths transversality, polarization compatibility) and
measures the rational span of the entries.

Conventions.  Connection matrices are columns-as-images: the j-th column
holds the coefficients of nabla(e_j) = sum_i Omega[i][j] (x) e_i.  A
polarization of weight w is a rational Gram matrix on the weight-w
graded piece together with an integer recording the (2 pi i)-power of
its value normalization; pairings satisfy Q(a,b) = (-1)^w Q(b,a).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import mpmath as mp

from .constfield import ConstExpr, Context, OneForm, qspan_dim
from .ratlinalg import (FRACTION_OPS, annihilator, in_rowspace,
                        intersect_rowspaces, invert_matrix, kron_vec,
                        numeric_intersection, numeric_membership_residual,
                        numeric_rank, rank, rref, solve_right)


class HodgeError(ValueError):
    pass


class BasisNotAdaptedError(HodgeError):
    """The basis does not split the weight filtration; change basis first."""


def standard_context(digits: int = 30) -> Context:
    """Context with pi, i and 2*pi*i adjoined.

    i carries i^2 + 1 = 0; the generator twopii is tied down linearly by
    twopii = 2*pi*i, which makes the quadratic (2*pi*i)^2 = -4*pi^2 an
    exact consequence.
    """
    ctx = Context(digits=digits)
    with mp.workdps(digits):
        ctx.adjoin("pi", mp.pi, invertible=True)
        ctx.adjoin("i", mp.mpc(0, 1), invertible=True)
        ctx.adjoin("twopii", 2j * mp.pi, invertible=True)
    pi, i, twopii = ctx.gen("pi"), ctx.gen("i"), ctx.gen("twopii")
    ctx.relate(i * i + 1)
    ctx.relate(twopii - 2 * pi * i)
    return ctx


def _frac(x) -> Fraction:
    if isinstance(x, (Fraction, int, str)):
        return Fraction(x)
    raise HodgeError(f"expected a rational entry, got {x!r}")


def _to_mp(x):
    """mpmathify that does not round exact rationals through a double."""
    if isinstance(x, Fraction):
        return mp.mpf(x.numerator) / mp.mpf(x.denominator)
    if isinstance(x, ConstExpr):
        return x.value()
    return mp.mpmathify(x)


@dataclass(frozen=True)
class Polarization:
    """Rational Gram matrix on a graded piece, valued in (2 pi i)^tate_power Q."""

    gram: tuple
    tate_power: int = 0

    @staticmethod
    def of(rows, tate_power: int = 0) -> "Polarization":
        g = tuple(tuple(_frac(x) for x in r) for r in rows)
        if any(len(r) != len(g) for r in g):
            raise HodgeError("Gram matrix must be square")
        return Polarization(gram=g, tate_power=tate_power)

    @property
    def size(self) -> int:
        return len(self.gram)

    def symmetry_sign(self) -> Optional[int]:
        """+1 symmetric, -1 antisymmetric, None if neither."""
        g = self.gram
        n = len(g)
        if all(g[i][j] == g[j][i] for i in range(n) for j in range(n)):
            return 1
        if all(g[i][j] == -g[j][i] for i in range(n) for j in range(n)):
            return -1
        return None


class MixedHodgeStructure:
    """Rational structure + weight filtration + Hodge filtration.

    W maps weight w to rational rows spanning W_w (cumulative); F maps
    index p to vectors spanning F^p, with entries either exact
    (int/Fraction/ConstExpr -> symbolic structure) or complex numbers
    (numeric structure).  Filtration values at undeclared indices follow
    the usual conventions: W below the smallest declared weight is 0,
    above the largest is everything; F left of the smallest declared
    index is everything, right of the largest is 0.
    """

    def __init__(self, ctx: Context, basis: Sequence[str], weights: dict,
                 hodge: dict, polarizations: Optional[dict] = None):
        self.ctx = ctx
        self.basis = tuple(str(b) for b in basis)
        self.n = len(self.basis)
        if len(set(self.basis)) != self.n:
            raise HodgeError("duplicate basis labels")
        self.W = {}
        for w in sorted(weights):
            rows = [[_frac(x) for x in r] for r in weights[w]]
            if any(len(r) != self.n for r in rows):
                raise HodgeError(f"W_{w} rows must have length {self.n}")
            red, _ = rref(rows, FRACTION_OPS)
            self.W[int(w)] = tuple(tuple(r) for r in red)
        symbolic = any(isinstance(x, ConstExpr)
                       for p in hodge for v in hodge[p] for x in v)
        self.symbolic = symbolic
        self.F = {}
        for p in sorted(hodge):
            vecs = []
            for v in hodge[p]:
                if len(v) != self.n:
                    raise HodgeError(f"F^{p} vectors must have length {self.n}")
                if symbolic:
                    vecs.append(tuple(self._coerce_expr(x) for x in v))
                else:
                    with mp.workdps(ctx.digits):
                        vecs.append(tuple(_to_mp(x) for x in v))
            self.F[int(p)] = tuple(vecs)
        self.polarizations = dict(polarizations or {})
        for q in self.polarizations.values():
            if not isinstance(q, Polarization):
                raise HodgeError("polarizations must be Polarization values")

    def _coerce_expr(self, x) -> ConstExpr:
        if isinstance(x, ConstExpr):
            if x.ctx is not self.ctx:
                raise HodgeError("F entry from a different context")
            return x
        if isinstance(x, (int, Fraction, str)):
            return self.ctx.const(Fraction(x))
        raise HodgeError(
            f"symbolic F entries must be exact or ConstExpr, got {type(x)}")

    # -- filtration accessors ------------------------------------------------
    def weights_declared(self):
        return sorted(self.W)

    def W_at(self, w: int):
        """Rows spanning W_w (empty below the declared range, full above)."""
        keys = self.weights_declared()
        if not keys:
            raise HodgeError("empty weight filtration")
        if w < keys[0]:
            return ()
        best = max(k for k in keys if k <= w)
        return self.W[best]

    def F_at(self, p: int):
        keys = sorted(self.F)
        if not keys:
            raise HodgeError("empty Hodge filtration")
        if p in self.F:
            return self.F[p]
        if p < keys[0]:
            return self._full_space()
        if p > keys[-1]:
            return ()
        # gap between declared indices: the last declared value persists
        best = max(k for k in keys if k <= p)
        return self.F[best]

    def _full_space(self):
        if self.symbolic:
            one, zero = self.ctx.one(), self.ctx.zero()
        else:
            one, zero = mp.mpf(1), mp.mpf(0)
        return tuple(tuple(one if i == j else zero for j in range(self.n))
                     for i in range(self.n))

    def graded_weights(self):
        """Weights w with gr^W_w != 0, as a dict weight -> dimension."""
        out = {}
        prev = 0
        for w in self.weights_declared():
            d = len(self.W[w])
            if d > prev:
                out[w] = d - prev
            prev = d
        return out

    def is_pure(self) -> Optional[int]:
        g = self.graded_weights()
        return next(iter(g)) if len(g) == 1 else None

    # -- F against W, symbolically or numerically -----------------------------
    def _w_vectors(self, w: int):
        """W_w rows over the same scalar domain as the F entries."""
        rows = self.W_at(w)
        if self.symbolic:
            return [[self.ctx.const(x) for x in r] for r in rows]
        return [[mp.mpf(x.numerator) / x.denominator for x in r]
                for r in rows]

    def dim_f_intersect_w(self, p: int, w: int) -> int:
        fp = [list(v) for v in self.F_at(p)]
        ww = self._w_vectors(w)
        if not fp or not ww:
            return 0
        if self.symbolic:
            return len(intersect_rowspaces(fp, ww, self.ctx.field_ops()))
        tol = self.ctx.tol
        with mp.workdps(self.ctx.digits):
            return (numeric_rank(fp, tol) + numeric_rank(ww, tol)
                    - numeric_rank(fp + ww, tol))

    def numeric_f(self, p: int):
        vecs = self.F_at(p)
        out = []
        with mp.workdps(self.ctx.digits):
            for v in vecs:
                if self.symbolic:
                    out.append([x.value() for x in v])
                else:
                    out.append([_to_mp(x) for x in v])
        return out

    # -- validation -----------------------------------------------------------
    def validate(self, deep: bool = False) -> "MixedHodgeStructure":
        """Check the filtration axioms; raise HodgeError on violation.

        deep=True additionally verifies (numerically) that each graded
        piece is a pure Hodge structure of its weight: for p + q = w + 1
        the pieces F^p(gr_w) and conjugate F^q(gr_w) are complementary.
        """
        keys = self.weights_declared()
        if not keys:
            raise HodgeError("no weights declared")
        prev_rows = None
        for w in keys:
            rows = [list(r) for r in self.W[w]]
            if prev_rows is not None:
                for r in prev_rows:
                    if not in_rowspace(r, rows, FRACTION_OPS):
                        raise HodgeError(
                            f"weight filtration not increasing at {w}")
            prev_rows = rows
        if len(self.W[keys[-1]]) != self.n:
            raise HodgeError("weight filtration is not exhaustive")

        fkeys = sorted(self.F)
        if not fkeys:
            raise HodgeError("no Hodge filtration declared")
        for p in fkeys:
            vecs = [list(v) for v in self.F_at(p)]
            if not vecs:
                continue
            if self.symbolic:
                if rank(vecs, self.ctx.field_ops()) != len(vecs):
                    raise HodgeError(f"F^{p} vectors are dependent")
            elif numeric_rank(vecs, self.ctx.tol) != len(vecs):
                raise HodgeError(f"F^{p} vectors are dependent")
        for p in fkeys:
            cur = [list(v) for v in self.F_at(p)]
            for v in self.F_at(p + 1):
                if self.symbolic:
                    ok, _ = _symbolic_membership(self.ctx, list(v), cur)
                    if not ok:
                        raise HodgeError(f"F^{p + 1} not inside F^{p}")
                else:
                    if not cur:
                        raise HodgeError(f"F^{p + 1} not inside F^{p}")
                    resid, _ = numeric_membership_residual(cur, list(v))
                    scale = max([abs(x) for x in v] + [mp.mpf(1)])
                    if resid > self.ctx.tol * scale * 100:
                        raise HodgeError(f"F^{p + 1} not inside F^{p}")

        gd = self.graded_weights()
        for w, q in self.polarizations.items():
            if w not in gd:
                raise HodgeError(f"polarization at weight {w} with gr = 0")
            if q.size != gd[w]:
                raise HodgeError(
                    f"polarization size {q.size} != dim gr_{w} = {gd[w]}")
            want = 1 if w % 2 == 0 else -1
            if q.symmetry_sign() != want:
                raise HodgeError(
                    f"weight-{w} polarization must satisfy "
                    f"Q(a,b) = ({'+' if want > 0 else '-'}1) Q(b,a)")
        if deep:
            self._validate_graded_purity()
        return self

    def _validate_graded_purity(self):
        """Numeric check that gr_w with the induced F is pure of weight w."""
        tol = mp.mpf(10) ** (-self.ctx.digits // 3)
        fkeys = sorted(self.F)
        for w, dim_gr in self.graded_weights().items():
            w_lower = self._numeric_w(w - 1)
            w_here = self._numeric_w(w)
            lower_rank = numeric_rank(w_lower, tol) if w_lower else 0
            for p in range(fkeys[0], fkeys[-1] + 2):
                q = w - p + 1
                fp = self.numeric_f(p)
                fqbar = [[mp.conj(x) for x in v] for v in self.numeric_f(q)]
                fp_w = numeric_intersection(fp, w_here, tol) if fp else []
                fq_w = numeric_intersection(fqbar, w_here, tol) if fqbar \
                    else []
                dp = (numeric_rank(fp_w + w_lower, tol) - lower_rank) \
                    if fp_w else 0
                dq = (numeric_rank(fq_w + w_lower, tol) - lower_rank) \
                    if fq_w else 0
                span_rank = numeric_rank(fp_w + fq_w + w_lower, tol) \
                    if (fp_w or fq_w or w_lower) else 0
                if span_rank != len(w_here):
                    raise HodgeError(
                        f"gr_{w} not pure: F^{p} + conj F^{q} does not span")
                if dp + dq != dim_gr:
                    raise HodgeError(
                        f"gr_{w} not pure: graded dims {dp}+{dq} != {dim_gr}"
                        f" at (p,q) = ({p},{q})")
        return True

    def _numeric_w(self, w: int):
        return [[mp.mpf(x.numerator) / x.denominator for x in r]
                for r in self.W_at(w)]

    # -- adapted bases ---------------------------------------------------------
    def adapted_weight_of_basis(self):
        """Weight of each basis vector when the basis is W-adapted.

        Adapted means every W_w is spanned by a subset of the basis; the
        stored reduced rows are then selection rows.  Raises
        BasisNotAdaptedError otherwise.
        """
        weight = [None] * self.n
        for w in self.weights_declared():
            for r in self.W[w]:
                nz = [j for j, x in enumerate(r) if x != 0]
                if len(nz) != 1 or r[nz[0]] != 1:
                    raise BasisNotAdaptedError(
                        "weight filtration is not spanned by basis vectors; "
                        "re-express the structure in an adapted basis")
                j = nz[0]
                if weight[j] is None:
                    weight[j] = w
        if any(w is None for w in weight):
            raise BasisNotAdaptedError("weight filtration is not exhaustive")
        return weight


# ---------------------------------------------------------------------------
# constructors and functors
# ---------------------------------------------------------------------------

def tate(ctx: Context, n: int, symbolic: bool = True) -> MixedHodgeStructure:
    """The rank-1 structure Q(n): weight -2n, F^{-n} everything.

    Its multiplication pairing is a morphism into Q(2n), so the stored
    tate_power is 2n = -weight (the standard normalization throughout).
    """
    one = ctx.one() if symbolic else 1
    return MixedHodgeStructure(
        ctx, basis=(f"t{n}",), weights={-2 * n: [[1]]},
        hodge={-n: [[one]], -n + 1: []},
        polarizations={-2 * n: Polarization.of([[1]], tate_power=2 * n)})


def tate_twist(H: MixedHodgeStructure, n: int) -> MixedHodgeStructure:
    """H(n): weights shifted by -2n, F indices by -n, same basis."""
    weights = {w - 2 * n: [list(r) for r in H.W[w]] for w in H.W}
    hodge = {p - n: [list(v) for v in H.F[p]] for p in H.F}
    pol = {w - 2 * n: Polarization(q.gram, q.tate_power + 2 * n)
           for w, q in H.polarizations.items()}
    return MixedHodgeStructure(H.ctx, H.basis, weights, hodge, pol)


def dual(H: MixedHodgeStructure) -> MixedHodgeStructure:
    """H^dual: W_w = annihilator of W_{-w-1}, F^p = annihilator of F^{1-p}.

    The dual of a polarization Gram matrix is its inverse, with the
    value-normalization power negated.
    """
    weights = {}
    for w in sorted(set([-w - 1 for w in H.W] + [-w for w in H.W])):
        weights[w] = annihilator([list(r) for r in H.W_at(-w - 1)], H.n,
                                 FRACTION_OPS)
    pruned, prev = {}, -1
    for w in sorted(weights):
        if len(weights[w]) != prev:
            pruned[w] = weights[w]
            prev = len(weights[w])

    hodge = {}
    for p in sorted(set([1 - p for p in H.F] + [-p for p in H.F])):
        target = [list(v) for v in H.F_at(1 - p)]
        if H.symbolic:
            hodge[p] = annihilator(target, H.n, H.ctx.field_ops())
        else:
            with mp.workdps(H.ctx.digits):
                hodge[p] = _numeric_annihilator(target, H.n, H.ctx.tol)
    pruned_f, prev = {}, None
    for p in sorted(hodge):
        if prev is None or len(hodge[p]) != prev:
            pruned_f[p] = hodge[p]
            prev = len(hodge[p])

    pol = {}
    for w, q in H.polarizations.items():
        inv = invert_matrix([list(r) for r in q.gram], FRACTION_OPS)
        if inv is None:
            raise HodgeError("polarization Gram matrix is singular")
        pol[-w] = Polarization(tuple(tuple(r) for r in inv), -q.tate_power)
    labels = tuple(b + "'" for b in H.basis)
    return MixedHodgeStructure(H.ctx, labels, pruned, pruned_f, pol)


def _numeric_annihilator(rows, n, tol):
    """Row vectors f with sum_j f_j v_j = 0 for every v among the rows."""
    if not rows:
        return [[mp.mpf(1) if j == i else mp.mpf(0) for j in range(n)]
                for i in range(n)]
    M = mp.matrix(len(rows), n)
    for i, r in enumerate(rows):
        for j in range(n):
            M[i, j] = _to_mp(r[j])
    U, S, V = mp.svd_c(M, full_matrices=True)
    smax = max([abs(S[k]) for k in range(len(S))] + [mp.mpf(1)])
    out = []
    for k in range(n):
        sigma = abs(S[k]) if k < len(S) else mp.mpf(0)
        if sigma <= tol * smax:
            out.append([mp.conj(V[k, j]) for j in range(n)])
    return out


def tensor(H1: MixedHodgeStructure,
           H2: MixedHodgeStructure) -> MixedHodgeStructure:
    """Tensor product: W by convolution, F by sums of indices."""
    if H1.ctx is not H2.ctx:
        raise HodgeError("tensor factors live in different contexts")
    if H1.symbolic != H2.symbolic:
        raise HodgeError("cannot tensor a symbolic with a numeric structure")
    ctx = H1.ctx
    labels = tuple(f"{a}*{b}" for a in H1.basis for b in H2.basis)
    weights = {}
    for w in sorted(set(w1 + w2 for w1 in H1.W for w2 in H2.W)):
        rows = []
        for w1 in H1.W:
            for r in H1.W_at(w1):
                for s in H2.W_at(w - w1):
                    rows.append(kron_vec(list(r), list(s)))
        red, _ = rref(rows, FRACTION_OPS) if rows else ([], [])
        weights[w] = red
    pruned, prev = {}, -1
    for w in sorted(weights):
        if len(weights[w]) != prev:
            pruned[w] = weights[w]
            prev = len(weights[w])

    hodge = {}
    f1_keys, f2_keys = sorted(H1.F), sorted(H2.F)
    # start one index below the declared sums: that is the first level
    # where an implicit "everything" factor meets a proper subspace
    with mp.workdps(ctx.digits):
        for p in range(f1_keys[0] + f2_keys[0] - 1,
                       f1_keys[-1] + f2_keys[-1] + 1):
            vecs = []
            for p1 in range(f1_keys[0] - 1, f1_keys[-1] + 1):
                for u in H1.F_at(p1):
                    for v in H2.F_at(p - p1):
                        vecs.append(kron_vec(list(u), list(v),
                                             lambda x, y: x * y))
            if not vecs:
                hodge[p] = []
            elif H1.symbolic:
                red2, _ = rref(vecs, ctx.field_ops())
                hodge[p] = red2
            else:
                hodge[p] = _numeric_row_basis(vecs, ctx.tol)
    pruned_f, prev = {}, None
    for p in sorted(hodge):
        if prev is None or len(hodge[p]) != prev:
            pruned_f[p] = hodge[p]
            prev = len(hodge[p])

    pol = {}
    w1p, w2p = H1.is_pure(), H2.is_pure()
    if (w1p is not None and w2p is not None
            and w1p in H1.polarizations and w2p in H2.polarizations):
        q1, q2 = H1.polarizations[w1p], H2.polarizations[w2p]
        gram = [[q1.gram[i1][j1] * q2.gram[i2][j2]
                 for j1 in range(q1.size) for j2 in range(q2.size)]
                for i1 in range(q1.size) for i2 in range(q2.size)]
        pol[w1p + w2p] = Polarization.of(gram, q1.tate_power + q2.tate_power)
    return MixedHodgeStructure(ctx, labels, pruned, pruned_f, pol)


def _numeric_row_basis(vecs, tol):
    out = []
    for v in vecs:
        if numeric_rank(out + [list(v)], tol) > len(out):
            out.append([_to_mp(x) for x in v])
    return out


def direct_sum(H1: MixedHodgeStructure,
               H2: MixedHodgeStructure) -> MixedHodgeStructure:
    if H1.ctx is not H2.ctx:
        raise HodgeError("summands live in different contexts")
    if H1.symbolic != H2.symbolic:
        raise HodgeError("cannot sum a symbolic with a numeric structure")
    ctx = H1.ctx
    labels = tuple(itertools.chain(H1.basis, (b + "~" for b in H2.basis)))
    weights = {}
    for w in sorted(set(H1.W) | set(H2.W)):
        weights[w] = \
            [list(r) + [Fraction(0)] * H2.n for r in H1.W_at(w)] + \
            [[Fraction(0)] * H1.n + list(r) for r in H2.W_at(w)]
    zero = ctx.zero() if H1.symbolic else mp.mpf(0)
    hodge = {}
    for p in sorted(set(H1.F) | set(H2.F)):
        hodge[p] = [list(v) + [zero] * H2.n for v in H1.F_at(p)] + \
                   [[zero] * H1.n + list(v) for v in H2.F_at(p)]
    pol = {}
    g1, g2 = H1.graded_weights(), H2.graded_weights()
    for w in set(H1.polarizations) | set(H2.polarizations):
        if w in H1.polarizations and w in H2.polarizations:
            q1, q2 = H1.polarizations[w], H2.polarizations[w]
            if q1.tate_power == q2.tate_power:
                s1, s2 = q1.size, q2.size
                gram = [[q1.gram[i][j] if i < s1 and j < s1 else
                         (q2.gram[i - s1][j - s1] if i >= s1 and j >= s1
                          else Fraction(0))
                         for j in range(s1 + s2)] for i in range(s1 + s2)]
                pol[w] = Polarization.of(gram, q1.tate_power)
        elif w in H1.polarizations and w not in g2:
            pol[w] = H1.polarizations[w]
        elif w in H2.polarizations and w not in g1:
            pol[w] = H2.polarizations[w]
    return MixedHodgeStructure(ctx, labels, weights, hodge, pol)


def is_hodge_tate(H: MixedHodgeStructure) -> bool:
    """True iff all graded weights are even and gr_{2k} is purely (k, k)."""
    gd = H.graded_weights()
    if any(w % 2 for w in gd):
        return False
    for w, d in gd.items():
        k = w // 2
        lo = H.dim_f_intersect_w(k, w) - H.dim_f_intersect_w(k, w - 2)
        hi = H.dim_f_intersect_w(k + 1, w) - H.dim_f_intersect_w(k + 1, w - 2)
        if lo != d or hi != 0:
            return False
    return True


# ---------------------------------------------------------------------------
# connections
# ---------------------------------------------------------------------------

@dataclass
class Connection:
    """Square matrix of one-forms, columns-as-images."""

    ctx: Context
    matrix: list  # rows of OneForm

    def __post_init__(self):
        n = len(self.matrix)
        for r in self.matrix:
            if len(r) != n:
                raise HodgeError("connection matrix must be square")
            for x in r:
                if not isinstance(x, OneForm):
                    raise HodgeError("entries must be OneForm")

    @property
    def n(self):
        return len(self.matrix)

    def entry(self, i, j) -> OneForm:
        return self.matrix[i][j]


def zero_connection(ctx: Context, n: int) -> Connection:
    return Connection(ctx, [[OneForm.zero(ctx) for _ in range(n)]
                            for _ in range(n)])


def dlog_pi(ctx: Context, pi_name: str = "pi") -> OneForm:
    pi = ctx.gen(pi_name)
    return ctx.d(pi_name).smul(pi ** -1)


def twist_connection(conn: Connection, n: int,
                     pi_name: str = "pi") -> Connection:
    """Matrix of the twisted structure H(n): Omega + n (dpi/pi) I."""
    ctx = conn.ctx
    bump = dlog_pi(ctx, pi_name).smul(ctx.const(n))
    rows = []
    for i in range(conn.n):
        row = []
        for j in range(conn.n):
            e = conn.matrix[i][j]
            if i == j:
                e = e + bump
            row.append(e)
        rows.append(row)
    return Connection(ctx, rows)


def tensor_connection(c1: Connection, c2: Connection) -> Connection:
    """Omega_1 (x) I + I (x) Omega_2 on the Kronecker basis."""
    ctx = c1.ctx
    rows = []
    for i1 in range(c1.n):
        for i2 in range(c2.n):
            row = []
            for j1 in range(c1.n):
                for j2 in range(c2.n):
                    e = OneForm.zero(ctx)
                    if i2 == j2:
                        e = e + c1.matrix[i1][j1]
                    if i1 == j1:
                        e = e + c2.matrix[i2][j2]
                    row.append(e)
            rows.append(row)
    return Connection(ctx, rows)


def dual_connection(conn: Connection) -> Connection:
    return Connection(conn.ctx, [[conn.matrix[j][i].smul(-1)
                                  for j in range(conn.n)]
                                 for i in range(conn.n)])


def conjugate_connection(conn: Connection, T, Tinv=None) -> Connection:
    """The matrix in the basis formed by the columns of T.

    T has ConstExpr entries; columns express the new basis in the old
    coordinates.  The result is T^{-1} (Omega T + dT).
    """
    ctx = conn.ctx
    n = conn.n
    if Tinv is None:
        Tinv = invert_matrix([list(r) for r in T], ctx.field_ops())
        if Tinv is None:
            raise HodgeError("basis change is singular")
    mid = [[_form_dot(ctx, conn.matrix[i], [T[k][j] for k in range(n)])
            for j in range(n)] for i in range(n)]
    out = []
    for i in range(n):
        row = []
        for j in range(n):
            acc = OneForm.zero(ctx)
            for k in range(n):
                acc = acc + mid[k][j].smul(Tinv[i][k])
                acc = acc + T[k][j].d().smul(Tinv[i][k])
            row.append(acc.reduce())
        out.append(row)
    return Connection(ctx, out)


def _form_dot(ctx, forms, scalars):
    acc = OneForm.zero(ctx)
    for f, s in zip(forms, scalars):
        acc = acc + f.smul(s)
    return acc


# ---------------------------------------------------------------------------
# the structural checker
# ---------------------------------------------------------------------------

@dataclass
class CheckRecord:
    name: str
    ok: bool
    residual: Optional[str] = None


@dataclass
class StructureReport:
    records: list

    @property
    def ok(self) -> bool:
        return all(r.ok for r in self.records)

    def named(self, prefix: str):
        return [r for r in self.records if r.name.startswith(prefix)]

    def pretty(self) -> str:
        lines = []
        for r in self.records:
            status = "PASS" if r.ok else "FAIL"
            extra = f"  [{r.residual}]" if r.residual else ""
            lines.append(f"{status}  {r.name}{extra}")
        return "\n".join(lines)


def check_connection_structure(H: MixedHodgeStructure, conn: Connection,
                               strict: bool = True,
                               pi_name: str = "pi") -> StructureReport:
    """Verify the structural identities of a connection on H.

    Requires a W-adapted basis.  Checks, in order: weight preservation
    (nabla W_w inside Omega^1 (x) W_w), Griffiths transversality
    (nabla F^p inside Omega^1 (x) F^{p-1}), and for each polarized
    graded weight w the compatibility
    Q(nabla a, b) + Q(a, nabla b) + w (dpi/pi) Q(a, b) = 0 together
    with its reformulations (diagonal form for even w, symplectic
    normal form for odd w).
    """
    if conn.n != H.n:
        raise HodgeError("connection size does not match the structure")
    weight = H.adapted_weight_of_basis()
    records = []

    bad = []
    for i in range(H.n):
        for j in range(H.n):
            if weight[i] > weight[j]:
                if not conn.matrix[i][j].is_zero(strict=strict):
                    bad.append((i, j))
    records.append(CheckRecord(
        name="weight preservation: nabla(W_w) inside Omega^1 (x) W_w",
        ok=not bad,
        residual=None if not bad else f"entries {bad} nonzero"))

    records.append(_check_transversality(H, conn, strict))

    for w, q in sorted(H.polarizations.items()):
        records.extend(_check_polarization(H, conn, w, q, strict, pi_name))

    return StructureReport(records=records)


def _gen_name(ctx: Context, idx: int) -> str:
    return ctx.gens[idx].name


def _check_transversality(H: MixedHodgeStructure, conn: Connection,
                          strict: bool) -> CheckRecord:
    ctx = H.ctx
    name = "Griffiths transversality: nabla(F^p) inside Omega^1 (x) F^{p-1}"
    worst = mp.mpf(0)
    for p in sorted(H.F):
        lower = [list(v) for v in H.F_at(p - 1)]
        for v in H.F_at(p):
            if H.symbolic:
                comps = []
                for i in range(H.n):
                    acc = v[i].d()
                    for j in range(H.n):
                        acc = acc + conn.matrix[i][j].smul(v[j])
                    comps.append(acc.reduce())
                directions = sorted({g for f in comps for g in f.support()})
                for g in directions:
                    gname = _gen_name(ctx, g)
                    column = [f.coefficient(gname) for f in comps]
                    ok, _ = _symbolic_membership(ctx, column, lower)
                    if not ok:
                        return CheckRecord(
                            name=name, ok=False,
                            residual=f"F^{p} direction d{gname} leaves "
                                     f"the span of F^{p - 1}")
            else:
                # constant coefficient vectors: dv = 0, and the entries
                # of nabla(v) get evaluated at the witness point
                with mp.workdps(ctx.digits):
                    reduced = [[conn.matrix[i][j].reduce()
                                for j in range(H.n)] for i in range(H.n)]
                    directions = sorted(
                        {g for row in reduced for f in row
                         for g in f.support()})
                    for g in directions:
                        gname = _gen_name(ctx, g)
                        column = []
                        for i in range(H.n):
                            acc = mp.mpc(0)
                            for j in range(H.n):
                                c = reduced[i][j].coefficient(gname)
                                if not c.num.is_zero():
                                    acc += c.value() * v[j]
                            column.append(acc)
                        scale = max([abs(x) for x in column] + [mp.mpf(1)])
                        if all(abs(x) <= ctx.tol * scale for x in column):
                            continue
                        if not lower:
                            return CheckRecord(
                                name=name, ok=False,
                                residual=f"F^{p} direction d{gname} nonzero"
                                         f" with F^{p - 1} = 0")
                        resid, _ = numeric_membership_residual(lower, column)
                        if resid > ctx.tol * scale * 100:
                            return CheckRecord(
                                name=name, ok=False,
                                residual=f"F^{p} direction d{gname} "
                                         f"residual {mp.nstr(resid, 5)}")
                        worst = max(worst, resid / scale)
    return CheckRecord(name=name, ok=True,
                       residual=mp.nstr(worst, 5) if worst > 0 else None)


def _symbolic_membership(ctx, column, lower):
    """Is the ConstExpr vector `column` in the ConstExpr span of `lower`?"""
    col = [x if isinstance(x, ConstExpr) else ctx.const(Fraction(x))
           for x in column]
    if all(x.is_zero(strict=False) for x in col):
        return True, None
    if not lower:
        return False, None
    ops = ctx.field_ops()
    A = [[_as_expr(ctx, lower[k][i]) for k in range(len(lower))]
         for i in range(len(col))]
    x = solve_right(A, col, ops)
    return (x is not None), x


def _as_expr(ctx, x):
    return x if isinstance(x, ConstExpr) else ctx.const(Fraction(x))


def _check_polarization(H: MixedHodgeStructure, conn: Connection, w: int,
                        q: Polarization, strict: bool, pi_name: str):
    ctx = H.ctx
    weight = H.adapted_weight_of_basis()
    idx = [i for i in range(H.n) if weight[i] == w]
    records = []
    if len(idx) != q.size:
        records.append(CheckRecord(
            name=f"polarization weight {w}: Gram size", ok=False,
            residual=f"{q.size} != {len(idx)}"))
        return records
    dlogpi = dlog_pi(ctx, pi_name)
    Om = [[conn.matrix[a][b] for b in idx] for a in idx]
    G = [[ctx.const(q.gram[i][j]) for j in range(q.size)]
         for i in range(q.size)]
    m = len(idx)
    bad = []
    for i in range(m):
        for j in range(m):
            acc = OneForm.zero(ctx)
            for k in range(m):
                acc = acc + Om[k][i].smul(G[k][j]) + Om[k][j].smul(G[i][k])
            acc = acc + dlogpi.smul(G[i][j] * w)
            if not acc.is_zero(strict=strict):
                bad.append((i, j))
    records.append(CheckRecord(
        name=f"polarization weight {w}: Q(nabla a, b) + Q(a, nabla b) "
             f"= -w (dpi/pi) Q(a, b)",
        ok=not bad, residual=None if not bad else f"pairs {bad}"))

    diagonal = all(q.gram[i][j] == 0 for i in range(m) for j in range(m)
                   if i != j)
    if w % 2 == 0 and diagonal and m > 0:
        ok_d = all(
            (Om[i][i] + dlogpi.smul(Fraction(w, 2))).is_zero(strict=strict)
            for i in range(m))
        records.append(CheckRecord(
            name=f"polarization weight {w}: omega_ii = -(w/2) dpi/pi",
            ok=ok_d))
        ok_r = all(
            (Om[i][j].smul(G[i][i]) + Om[j][i].smul(G[j][j]))
            .is_zero(strict=strict)
            for i in range(m) for j in range(i + 1, m))
        records.append(CheckRecord(
            name=f"polarization weight {w}: lambda_i omega_ij = "
                 f"-lambda_j omega_ji",
            ok=ok_r))
    if w % 2 == 1 and m % 2 == 0 and m > 0:
        T = _symplectic_basis(q.gram)
        if T is None:
            records.append(CheckRecord(
                name=f"polarization weight {w}: symplectic normal form",
                ok=False, residual="Gram matrix is degenerate"))
            return records
        Tc = [[ctx.const(T[i][j]) for j in range(m)] for i in range(m)]
        conj = conjugate_connection(Connection(ctx, Om), Tc)
        h = m // 2
        ok_sym = all(
            (conj.matrix[i][h + j] - conj.matrix[j][h + i])
            .is_zero(strict=strict)
            for i in range(h) for j in range(h)) and all(
            (conj.matrix[h + i][j] - conj.matrix[h + j][i])
            .is_zero(strict=strict)
            for i in range(h) for j in range(h))
        records.append(CheckRecord(
            name=f"polarization weight {w}: off-diagonal blocks symmetric "
                 f"in a symplectic basis", ok=ok_sym))
        ok_tr = True
        for i in range(h):
            for j in range(h):
                f = conj.matrix[i][j] + conj.matrix[h + j][h + i]
                if i == j:
                    f = f + dlogpi.smul(w)
                if not f.is_zero(strict=strict):
                    ok_tr = False
        records.append(CheckRecord(
            name=f"polarization weight {w}: Omega_11 + Omega_22^t = "
                 f"-w (dpi/pi) I in a symplectic basis", ok=ok_tr))
    return records


def _symplectic_basis(gram):
    """Rational T with T^t G T = [[0, I], [-I, 0]], or None if degenerate."""
    m = len(gram)
    if m % 2:
        return None
    G = [[Fraction(gram[i][j]) for j in range(m)] for i in range(m)]

    def pair(u, v):
        return sum(u[a] * G[a][b] * v[b] for a in range(m) for b in range(m))

    avail = [[Fraction(1 if i == j else 0) for j in range(m)]
             for i in range(m)]
    pairs = []
    while avail:
        u = avail.pop(0)
        v = None
        for cand in avail:
            if pair(u, cand) != 0:
                v = cand
                break
        if v is None:
            if any(x != 0 for x in u):
                return None
            continue
        avail.remove(v)
        c = pair(u, v)
        v = [x / c for x in v]
        new_avail = []
        for wv in avail:
            a = pair(u, wv)
            b = pair(wv, v)
            new_avail.append([wv[i] - a * v[i] - b * u[i] for i in range(m)])
        avail = new_avail
        pairs.append((u, v))
    if 2 * len(pairs) != m:
        return None
    cols = [p[0] for p in pairs] + [p[1] for p in pairs]
    return [[cols[j][i] for j in range(m)] for i in range(m)]


# ---------------------------------------------------------------------------
# the span of the connection entries
# ---------------------------------------------------------------------------

@dataclass
class OmegaSpanReport:
    dimension: int
    bound: int
    within_bound: bool
    bound_kind: str


def omega_span_bound(H: MixedHodgeStructure):
    """Dimension bound for the span of the entries of a structure-
    respecting connection, with the shape of the estimate used."""
    N = H.n
    w = H.is_pure()
    if w is not None and H.polarizations:
        if w % 2 == 0:
            if w == 0:
                return N * (N - 1) // 2, "pure polarized weight 0"
            return N * (N - 1) // 2 + 1, "pure polarized even weight"
        return N * (N + 1) // 2 + 1, "pure polarized odd weight"
    return N * (N + 1) // 2 + 1, "mixed or unpolarized"


def omega_H(H: MixedHodgeStructure, conn: Connection,
            mode: str = "auto", seed: int = 7) -> OmegaSpanReport:
    """Q-span dimension of the matrix entries, against the rank bound."""
    forms = [conn.matrix[i][j] for i in range(conn.n) for j in range(conn.n)]
    dim = qspan_dim(forms, mode=mode, seed=seed)
    bound, kind = omega_span_bound(H)
    return OmegaSpanReport(dimension=dim, bound=bound,
                           within_bound=dim <= bound, bound_kind=kind)


# ---------------------------------------------------------------------------
# morphisms
# ---------------------------------------------------------------------------

@dataclass
class Morphism:
    """Rational map source -> tate_twist(target, twist).

    matrix columns are indexed by the source basis: the image of the
    j-th source vector has target coordinates matrix[:][j].
    """

    source: MixedHodgeStructure
    target: MixedHodgeStructure
    matrix: list
    twist: int = 0

    def __post_init__(self):
        self.matrix = [[_frac(x) for x in r] for r in self.matrix]
        if len(self.matrix) != self.target.n or any(
                len(r) != self.source.n for r in self.matrix):
            raise HodgeError("morphism matrix shape mismatch")

    def apply(self, v):
        return [sum(self.matrix[i][j] * v[j] for j in range(self.source.n))
                for i in range(self.target.n)]


def check_morphism(mor: Morphism) -> bool:
    """True iff the map respects W and F up to the declared twist."""
    src, tgt, t = mor.source, mor.target, mor.twist
    for w in src.weights_declared():
        target_rows = [list(r) for r in tgt.W_at(w + 2 * t)]
        for r in src.W_at(w):
            img = mor.apply(list(r))
            if all(x == 0 for x in img):
                continue
            if not target_rows or not in_rowspace(img, target_rows,
                                                  FRACTION_OPS):
                return False
    for p in sorted(src.F):
        target_vecs = [list(v) for v in tgt.F_at(p + t)]
        for v in src.F_at(p):
            if src.symbolic:
                img = []
                for i in range(tgt.n):
                    acc = src.ctx.zero()
                    for j in range(src.n):
                        if mor.matrix[i][j] != 0:
                            acc = acc + v[j] * src.ctx.const(
                                mor.matrix[i][j])
                    img.append(acc)
                ok, _ = _symbolic_membership(src.ctx, img, target_vecs)
                if not ok:
                    return False
            else:
                with mp.workdps(src.ctx.digits):
                    img = [mp.fsum((mp.mpf(mor.matrix[i][j].numerator)
                                    / mor.matrix[i][j].denominator) * v[j]
                                   for j in range(src.n))
                           for i in range(tgt.n)]
                scale = max([abs(x) for x in img] + [mp.mpf(1)])
                if all(abs(x) <= src.ctx.tol * scale for x in img):
                    continue
                if not target_vecs:
                    return False
                resid, _ = numeric_membership_residual(target_vecs, img)
                if resid > src.ctx.tol * scale * 100:
                    return False
    return True


# ---------------------------------------------------------------------------
# serialization from CLI configs
# ---------------------------------------------------------------------------

def from_config(ctx: Context, cfg: dict) -> MixedHodgeStructure:
    """Build a structure from a parsed config dict.

    Expected keys: "basis" (list of labels), "weights" (map weight ->
    list of rational row vectors, numbers as strings or ints), "hodge"
    (map index -> list of vectors whose entries are expression strings
    over the context generators), optional "polarizations" (list of
    {"weight": int, "tate_power": int, "gram": rows}).
    """
    from . import expr as xp
    basis = cfg["basis"]
    weights = {int(w): [[_frac(x) for x in row] for row in rows]
               for w, rows in cfg["weights"].items()}
    names = tuple(ctx.names())
    hodge = {}
    for p, vecs in cfg["hodge"].items():
        rows = []
        for vec in vecs:
            row = []
            for entry in vec:
                node = xp.parse(str(entry), names=names)
                exact = xp.exact_value(node)
                if exact is not None and exact[1] == 0:
                    row.append(exact[0])
                else:
                    row.append(_expr_to_constexpr(ctx, node))
            rows.append(row)
        hodge[int(p)] = rows
    pol = {}
    for entry in cfg.get("polarizations", []):
        pol[int(entry["weight"])] = Polarization.of(
            entry["gram"], int(entry.get("tate_power", 0)))
    return MixedHodgeStructure(ctx, basis, weights, hodge, pol)


def _expr_to_constexpr(ctx: Context, node) -> ConstExpr:
    """Evaluate an expression tree into the constants field."""
    from . import expr as xp
    if isinstance(node, xp.Num):
        return ctx.const(node.value)
    if isinstance(node, xp.Name):
        return ctx.gen(node.ident)
    if isinstance(node, xp.Neg):
        return -_expr_to_constexpr(ctx, node.arg)
    if isinstance(node, xp.BinOp):
        a = _expr_to_constexpr(ctx, node.left)
        if node.op == "^":
            k = xp.exact_value(node.right)
            if k is None or k[1] != 0 or k[0].denominator != 1:
                raise HodgeError("exponent must be an integer")
            return a ** int(k[0])
        b = _expr_to_constexpr(ctx, node.right)
        return {"+": a + b, "-": a - b, "*": a * b, "/": a / b}[node.op]
    if isinstance(node, xp.Call):
        raise HodgeError(
            f"function {node.func} is not available in structure entries; "
            "adjoin a named generator for its value instead")
    raise HodgeError(f"cannot interpret {node!r}")
