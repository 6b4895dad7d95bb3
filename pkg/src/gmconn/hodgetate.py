"""Canonical connections on Hodge--Tate structures.

A mixed structure whose graded pieces are all of type (k, k) splits, over
the complex numbers, into a direct sum of twists: each graded class has a
unique lift into F^k cap W_{2k}.  The coefficients of those lifts against
the next-lower block are logarithms of periods, and the whole absolute
connection is determined by them.  This module computes

  * the splitting itself (`decompose`),
  * the lift coefficients and the exponentials attached to the adjacent
    ones (`period_coordinates`),
  * the connection matrix in the original adapted basis together with a
    rescaled graded frame in which the matrix is strictly block-lowering
    with dlog entries (`canonical_connection`),
  * curvature and a blockwise integrability report.

Conventions.  All matrices are columns-as-images.  A lift for the basis
vector e_j of weight 2k is written v_j = e_j - sum_i c_ij e_i with i
running over lower-weight indices; the c_ij are the period coordinates.
For an adjacent pair (one block down) the attached exponential is
q_ij = exp(pi*i*c_ij); it is adjoined as a fresh constant unless its
value collides with an existing generator — equal witnesses share one
generator, which is what makes independently computed occurrences of the
same period cancel exactly.  Derivatives of an adjoined q are free
unless an algebraic relation has been declared for it: the differential
of a constant reflects exactly the declared algebra, nothing more.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import mpmath as mp

from .constfield import ConstExpr, Context, OneForm, TwoForm
from .hodge import (Connection, HodgeError, MixedHodgeStructure, _to_mp,
                    is_hodge_tate, standard_context)
from .ratlinalg import (intersect_rowspaces, invert_matrix,
                        numeric_intersection, numeric_membership_residual)

__all__ = [
    "HodgeTateError", "HodgeTateDecomposition", "decompose",
    "PeriodCoordinates", "period_coordinates", "CanonicalConnection",
    "canonical_connection", "connection_apply", "curvature",
    "matrix_is_exactly_zero", "IntegrabilityReport", "integrability_report",
    "log_structure", "chain_structure", "random_hodge_tate",
    "tensor_coordinate_expressions", "declare_coordinate_relations",
]

# Rational values of a lift coefficient are recognized up to this
# denominator; beyond it a coefficient is treated as a free constant.
SNAP_DENOMINATOR = 24


class HodgeTateError(HodgeError):
    pass


# ---------------------------------------------------------------------------
# splitting
# ---------------------------------------------------------------------------

@dataclass
class HodgeTateDecomposition:
    """Unique lifts of the graded classes of a Hodge--Tate structure.

    blocks maps each graded weight to the ascending list of basis indices
    carrying that weight; lifts maps a basis index j of weight 2k to the
    unique vector in F^k cap W_{2k} whose class modulo W_{2k-2} is e_j.
    Entries are ConstExpr for symbolic structures and mp numbers for
    numeric ones.
    """

    structure: MixedHodgeStructure
    weight: list
    blocks: dict
    lifts: dict
    symbolic: bool

    @property
    def ctx(self) -> Context:
        return self.structure.ctx

    def lift_matrix(self):
        """Numeric matrix whose column j is the lift of e_j."""
        n = self.structure.n
        with mp.workdps(self.ctx.digits):
            return mp.matrix([[_to_mp(self.lifts[j][i]) for j in range(n)]
                              for i in range(n)])

    def reconstruction_residual(self):
        """max |V V^-1 - I| for the numeric lift matrix V."""
        n = self.structure.n
        with mp.workdps(self.ctx.digits):
            V = self.lift_matrix()
            P = V * (V ** -1)
            return max(abs(P[i, j] - (1 if i == j else 0))
                       for i in range(n) for j in range(n))

    def min_singular_value(self):
        with mp.workdps(self.ctx.digits):
            V = self.lift_matrix()
            s = mp.svd_c(V, compute_uv=False)
            return min(abs(x) for x in s)

    def roundtrip_residual(self):
        """How well the lifts regenerate the Hodge filtration.

        For every graded weight 2k, the span of the lifts of weight >= 2k
        must coincide with F^k; the returned value is the largest
        membership residual in either direction, so it is ~0 exactly when
        the splitting reproduces the filtration it came from.
        """
        H = self.structure
        worst = mp.mpf(0)
        with mp.workdps(self.ctx.digits):
            for w in sorted(self.blocks):
                k = w // 2
                rebuilt = [[_to_mp(self.lifts[j][i]) for i in range(H.n)]
                           for j in range(H.n) if self.weight[j] >= w]
                original = H.numeric_f(k)
                for v in original:
                    r, _ = numeric_membership_residual(rebuilt, v)
                    worst = max(worst, r / max(mp.mpf(1), mp.norm(mp.matrix(v))))
                for v in rebuilt:
                    r, _ = numeric_membership_residual(original, v)
                    worst = max(worst, r / max(mp.mpf(1), mp.norm(mp.matrix(v))))
        return worst


def decompose(H: MixedHodgeStructure) -> HodgeTateDecomposition:
    """Split a Hodge--Tate structure into lifted graded blocks.

    Requires a weight-adapted basis.  For each graded weight 2k the
    intersection F^k cap W_{2k} is computed (exactly for symbolic
    structures, by SVD for numeric ones) and renormalized so that the
    lift of e_j reads e_j - (lower-weight corrections).
    """
    weight = H.adapted_weight_of_basis()
    if not is_hodge_tate(H):
        raise HodgeTateError("structure is not Hodge-Tate: some graded piece "
                             "is odd or not of type (k, k)")
    blocks: Dict[int, List[int]] = {}
    for j, w in enumerate(weight):
        blocks.setdefault(w, []).append(j)
    ctx = H.ctx
    lifts = {}
    for w in sorted(blocks):
        k = w // 2
        idx = blocks[w]
        fp = [list(v) for v in H.F_at(k)]
        if H.symbolic:
            ops = ctx.field_ops()
            ww = [[ctx.const(x) for x in r] for r in H.W_at(w)]
            inter = intersect_rowspaces(fp, ww, ops)
            if len(inter) != len(idx):
                raise HodgeTateError(
                    f"F^{k} cap W_{w} has dimension {len(inter)}, "
                    f"expected {len(idx)}")
            C = [[row[j] for j in idx] for row in inter]
            Cinv = invert_matrix(C, ops)
            if Cinv is None:
                raise HodgeTateError(
                    f"graded classes at weight {w} are degenerate")
            for r, j in enumerate(idx):
                lifts[j] = tuple(
                    sum((Cinv[r][s] * inter[s][i] for s in range(len(idx))),
                        ctx.zero())
                    for i in range(H.n))
        else:
            with mp.workdps(ctx.digits):
                ww = [[mp.mpf(x.numerator) / x.denominator for x in r]
                      for r in H.W_at(w)]
                inter = numeric_intersection(fp, ww, ctx.tol)
                if len(inter) != len(idx):
                    raise HodgeTateError(
                        f"F^{k} cap W_{w} has dimension {len(inter)}, "
                        f"expected {len(idx)}")
                C = mp.matrix([[row[j] for j in idx] for row in inter])
                Cinv = C ** -1
                for r, j in enumerate(idx):
                    lifts[j] = tuple(
                        sum(Cinv[r, s] * inter[s][i]
                            for s in range(len(idx)))
                        for i in range(H.n))
    return HodgeTateDecomposition(H, weight, blocks, lifts, H.symbolic)


# ---------------------------------------------------------------------------
# period coordinates
# ---------------------------------------------------------------------------

@dataclass
class PeriodCoordinates:
    """Lower-weight coefficients of the lifts, as exact constants.

    entries[(i, j)] is c_ij in  lift_j = e_j - sum_i c_ij e_i  (absent
    keys are zero).  adjacent marks the pairs one block apart; for those,
    q[(i, j)] = exp(pi*i*c_ij), exact when c_ij is rational with small
    denominator and an adjoined constant otherwise.
    """

    decomposition: HodgeTateDecomposition
    entries: dict
    q: dict
    adjacent: frozenset

    @property
    def ctx(self) -> Context:
        return self.decomposition.ctx

    def coefficient(self, i: int, j: int) -> ConstExpr:
        return self.entries.get((i, j), self.ctx.zero())

    def membership_residual(self):
        """Numeric check that adjacent coefficients are what they claim.

        For each j of weight 2k, the vector e_j - sum(adjacent c_ij e_i)
        must lie in span(F^k union W_{2k-4}); returns the worst residual.
        """
        dec = self.decomposition
        H = dec.structure
        worst = mp.mpf(0)
        with mp.workdps(self.ctx.digits):
            for j in range(H.n):
                w = dec.weight[j]
                vec = [mp.mpc(0)] * H.n
                vec[j] = mp.mpc(1)
                for (i, jj), c in self.entries.items():
                    if jj == j and (i, jj) in self.adjacent:
                        vec[i] -= _to_mp(c)
                span = [list(r) for r in H.numeric_f(w // 2)]
                span += [[mp.mpf(x.numerator) / x.denominator for x in r]
                         for r in H.W_at(w - 4)]
                r, _ = numeric_membership_residual(span, vec)
                worst = max(worst, r)
        return worst


def _snap_rational(val, tol, dps) -> Optional[Fraction]:
    """Nearest small-denominator rational within tolerance, if any."""
    with mp.workdps(dps):
        if abs(mp.im(val)) > tol * (1 + abs(val)):
            return None
        fr = Fraction(float(mp.re(val))).limit_denominator(SNAP_DENOMINATOR)
        if abs(val - mp.mpf(fr.numerator) / fr.denominator) \
                <= tol * (1 + abs(val)):
            return fr
    return None


def _exp_pi_i(ctx: Context, zval):
    with mp.workdps(ctx.digits):
        return mp.exp(mp.pi * mp.mpc(0, 1) * mp.mpc(zval))


def _q_for(ctx: Context, rat: Optional[Fraction], zval, hint: str) -> ConstExpr:
    """The exponential exp(pi*i*z) attached to an adjacent coefficient.

    Rational z with denominator 1 or 2 lands in Q(i) and is returned
    exactly; other rational z gives a root of unity, adjoined together
    with its defining power relation so that its derivative vanishes.
    Everything else is adjoined by value (deduplicated by witness), with
    no relation: whether the exponential is differentially linked to
    anything is decided by the declared algebra of the context alone.
    """
    if rat is not None:
        p, s = rat.numerator, rat.denominator
        if s == 1:
            return ctx.const((-1) ** p)
        if s == 2:
            return ctx.gen("i") ** p
        before = len(ctx.gens)
        qe = ctx.adjoin_value(hint, _exp_pi_i(ctx, mp.mpf(p) / s))
        if len(ctx.gens) > before:
            ctx.relate(qe ** (2 * s) - 1)
        return qe
    w = _exp_pi_i(ctx, zval)
    with mp.workdps(ctx.digits):
        one = ctx.one()
        ii = ctx.gen("i")
        for target, expr in ((mp.mpc(1), one), (mp.mpc(-1), -one),
                             (mp.mpc(0, 1), ii), (mp.mpc(0, -1), -ii)):
            if abs(w - target) <= ctx.tol:
                return expr
    return ctx.adjoin_value(hint, w)


def period_coordinates(dec: HodgeTateDecomposition) -> PeriodCoordinates:
    """Extract the lift coefficients and attach adjacent exponentials.

    Symbolic structures keep their exact coefficient expressions; numeric
    ones get a fresh constant per distinct coefficient value (witness
    deduplication makes repeated values share one constant).  Rational
    coefficients with denominator up to SNAP_DENOMINATOR stay rational.
    """
    H = dec.structure
    ctx = dec.ctx
    order = sorted(dec.blocks)
    rank_of = {w: r for r, w in enumerate(order)}
    entries = {}
    qmap = {}
    adjacent = set()
    for j in range(H.n):
        wj = dec.weight[j]
        for i in range(H.n):
            if i == j or dec.weight[i] >= wj:
                continue
            raw = dec.lifts[j][i]
            is_adj = rank_of[dec.weight[i]] == rank_of[wj] - 1
            if dec.symbolic:
                c = -raw
                if c.num.is_zero():
                    continue
                rat = c.as_rational()
                if rat is not None:
                    c = ctx.const(rat)
                zval = None if rat is not None else c.value()
            else:
                with mp.workdps(ctx.digits):
                    val = -mp.mpc(raw)
                    if abs(val) <= ctx.tol:
                        continue
                rat = _snap_rational(val, ctx.tol, ctx.digits)
                if rat is not None:
                    c = ctx.const(rat)
                    zval = None
                else:
                    c = ctx.adjoin_value(f"z{j}_{i}", val)
                    zval = val
            entries[(i, j)] = c
            if is_adj:
                adjacent.add((i, j))
                qmap[(i, j)] = _q_for(ctx, rat, zval, f"q{j}_{i}")
    return PeriodCoordinates(dec, entries, qmap, frozenset(adjacent))


# ---------------------------------------------------------------------------
# matrix helpers over the constant field
# ---------------------------------------------------------------------------

def _c_zeros(ctx, n):
    return [[ctx.zero() for _ in range(n)] for _ in range(n)]


def _f_zeros(ctx, n):
    return [[OneForm.zero(ctx) for _ in range(n)] for _ in range(n)]


def _c_mul(A, B, ctx):
    n = len(A)
    return [[sum((A[i][k] * B[k][j] for k in range(n)), ctx.zero())
             for j in range(n)] for i in range(n)]


def _fc_mul(F, C, ctx):
    """(one-form matrix) . (constant matrix)"""
    n = len(F)
    out = _f_zeros(ctx, n)
    for i in range(n):
        for j in range(n):
            acc = OneForm.zero(ctx)
            for k in range(n):
                acc = acc + F[i][k].smul(C[k][j])
            out[i][j] = acc
    return out


def _cf_mul(C, F, ctx):
    """(constant matrix) . (one-form matrix)"""
    n = len(F)
    out = _f_zeros(ctx, n)
    for i in range(n):
        for j in range(n):
            acc = OneForm.zero(ctx)
            for k in range(n):
                acc = acc + F[k][j].smul(C[i][k])
            out[i][j] = acc
    return out


def _d_matrix(C, ctx):
    return [[x.d() for x in row] for row in C]


# ---------------------------------------------------------------------------
# the canonical connection
# ---------------------------------------------------------------------------

@dataclass
class CanonicalConnection:
    """The absolute connection of a Hodge--Tate structure, two ways.

    connection       -- matrix in the adapted basis (primary output);
    frame_matrix     -- matrix in the rescaled graded frame
                        u_j = (2 pi i)^{w_j/2} lift_j, where it is
                        strictly block-lowering with entries
                        -2 dq/q on adjacent pairs and zero diagonal;
    frame_in_basis   -- constant matrix U, column j = u_j in the adapted
                        basis; basis_in_frame is its inverse.  The two
                        matrices are conjugate: d U + Omega_basis U =
                        U Omega_frame.
    """

    structure: MixedHodgeStructure
    decomposition: HodgeTateDecomposition
    coordinates: PeriodCoordinates
    connection: Connection
    frame_matrix: list
    frame_in_basis: list
    basis_in_frame: list

    @property
    def ctx(self) -> Context:
        return self.structure.ctx


def canonical_connection(H: MixedHodgeStructure,
                         dec: Optional[HodgeTateDecomposition] = None,
                         coords: Optional[PeriodCoordinates] = None
                         ) -> CanonicalConnection:
    """Construct the canonical absolute connection of a Hodge--Tate
    structure.

    In the rescaled graded frame the matrix has -2 dq_ij / q_ij on
    adjacent pairs and nothing else; transforming back to the adapted
    basis yields -k dpi/pi diagonal blocks at weight 2k plus lower
    triangle entries built from the differentials of the period
    coordinates.
    """
    dec = dec or decompose(H)
    coords = coords or period_coordinates(dec)
    ctx = H.ctx
    n = H.n
    two_pi_i = ctx.gen("twopii")
    kpow = [two_pi_i ** (w // 2) for w in dec.weight]

    U = _c_zeros(ctx, n)
    for j in range(n):
        U[j][j] = kpow[j]
    for (i, j), c in coords.entries.items():
        U[i][j] = -(kpow[j] * c)

    Om_u = _f_zeros(ctx, n)
    for (i, j), qe in coords.q.items():
        Om_u[i][j] = qe.d().smul(ctx.const(-2) / qe)

    Uinv = invert_matrix(U, ctx.field_ops())
    if Uinv is None:
        raise HodgeTateError("graded frame is degenerate")

    conj = _fc_mul(_cf_mul(U, Om_u, ctx), Uinv, ctx)
    shift = _fc_mul(_d_matrix(U, ctx), Uinv, ctx)
    Om_e = [[(conj[i][j] - shift[i][j]).reduce() for j in range(n)]
            for i in range(n)]
    return CanonicalConnection(H, dec, coords, Connection(ctx, Om_e),
                               Om_u, U, Uinv)


def symbolic_model(cc: CanonicalConnection) -> MixedHodgeStructure:
    """The structure with F re-expressed through the exact coordinates.

    For a numeric structure the filtration entries are opaque numbers, so
    a checker cannot see that they are witnesses of adjoined constants
    with nonvanishing differentials.  This rebuilds the same filtration
    with the lifts written exactly in those constants; structural checks
    of the canonical connection must run against this model.  Symbolic
    structures are returned unchanged.
    """
    H = cc.structure
    if H.symbolic:
        return H
    ctx = H.ctx
    dec, coords = cc.decomposition, cc.coordinates
    lifts_sym = {}
    for j in range(H.n):
        v = [ctx.zero()] * H.n
        v[j] = ctx.one()
        for (i, jj), c in coords.entries.items():
            if jj == j:
                v[i] = -c
        lifts_sym[j] = v
    fdict = {}
    ws = sorted(dec.blocks)
    for k in range(ws[0] // 2, ws[-1] // 2 + 2):
        fdict[k] = [lifts_sym[j] for j in range(H.n) if dec.weight[j] >= 2 * k]
    wdict = {w: [list(r) for r in H.W[w]] for w in H.W}
    return MixedHodgeStructure(ctx, H.basis, wdict, fdict, H.polarizations)


def structural_report(cc: CanonicalConnection, strict: bool = True):
    """Weight/transversality/polarization checks of the canonical
    connection, run against the exact symbolic model of the structure."""
    from .hodge import check_connection_structure
    return check_connection_structure(symbolic_model(cc), cc.connection,
                                      strict=strict)


def connection_apply(conn: Connection, vec: Sequence) -> list:
    """Image of a constant-coefficient vector: component i of
    nabla(sum_j vec_j e_j) as a one-form, i.e. d(vec_i) + sum_j
    Omega_ij vec_j."""
    ctx = conn.ctx
    out = []
    for i in range(conn.n):
        acc = _as_const(ctx, vec[i]).d()
        for j in range(conn.n):
            acc = acc + conn.matrix[i][j].smul(_as_const(ctx, vec[j]))
        out.append(acc.reduce())
    return out


def _as_const(ctx, x) -> ConstExpr:
    if isinstance(x, ConstExpr):
        return x
    return ctx.const(Fraction(x))


# ---------------------------------------------------------------------------
# curvature and integrability
# ---------------------------------------------------------------------------

def curvature(obj, ctx: Optional[Context] = None) -> list:
    """Curvature d(Omega) + Omega ^ Omega of a connection matrix, as a
    matrix of two-forms (entrywise reduced)."""
    if isinstance(obj, Connection):
        ctx, M = obj.ctx, obj.matrix
    else:
        M = obj
        if ctx is None:
            raise ValueError("a raw matrix needs an explicit context")
    n = len(M)
    out = []
    for i in range(n):
        row = []
        for j in range(n):
            acc = M[i][j].exterior_d()
            for k in range(n):
                acc = acc + M[i][k].wedge(M[k][j])
            row.append(acc.reduce())
        out.append(row)
    return out


def matrix_is_exactly_zero(M) -> bool:
    return all(x.is_exactly_zero() for row in M for x in row)


@dataclass
class IntegrabilityReport:
    """Blockwise versus global flatness of the graded-frame matrix.

    per_step[w] says whether every two-step composite ending at the
    weight-w block vanishes identically; flat says whether the full
    curvature does.  For a strictly block-lowering matrix with closed
    dlog entries these must agree; `consistent` records that they do.
    """

    per_step: dict
    flat: bool

    @property
    def overall(self) -> bool:
        return self.flat

    @property
    def consistent(self) -> bool:
        return self.flat == all(self.per_step.values())

    def pretty(self) -> str:
        lines = [f"two-step composite into weight {w}: "
                 + ("vanishes" if ok else "NONZERO")
                 for w, ok in sorted(self.per_step.items())]
        lines.append("frame curvature: "
                     + ("flat" if self.flat else "NOT flat"))
        return "\n".join(lines)


def integrability_report(cc: CanonicalConnection) -> IntegrabilityReport:
    ctx = cc.ctx
    blocks = cc.decomposition.blocks
    order = sorted(blocks)
    per = {}
    for r in range(2, len(order)):
        w0, w1, w2 = order[r - 2], order[r - 1], order[r]
        ok = True
        for m in blocks[w0]:
            for j in blocks[w2]:
                acc = TwoForm.zero(ctx)
                for l in blocks[w1]:
                    acc = acc + cc.frame_matrix[m][l].wedge(
                        cc.frame_matrix[l][j])
                if not acc.reduce().is_exactly_zero():
                    ok = False
        per[w2] = ok
    flat = matrix_is_exactly_zero(curvature(cc.frame_matrix, ctx))
    return IntegrabilityReport(per, flat)


# ---------------------------------------------------------------------------
# ready-made structures
# ---------------------------------------------------------------------------

def log_structure(a_value=3, digits: int = 30,
                  ctx: Optional[Context] = None,
                  names: Tuple[str, str, str] = ("a", "loga", "q0"),
                  labels: Tuple[str, str] = ("e0", "e2")):
    """Rank-2 structure extending weight 0 by weight 2 via a logarithm.

    Adjoins an invertible constant a, its logarithm, and the square root
    q0 = a^(-1/2) with the defining relation q0^2 a = 1; the Hodge line
    is spanned by e2 + (loga / 2 pi i) e0.  Returns (ctx, structure).
    """
    ctx = ctx or standard_context(digits)
    aname, logname, qname = names
    with mp.workdps(ctx.digits):
        aw = mp.mpc(a_value)
        a = (ctx.gen(aname) if ctx.has_gen(aname)
             else ctx.adjoin(aname, aw, invertible=True))
        la = (ctx.gen(logname) if ctx.has_gen(logname)
              else ctx.adjoin(logname, mp.log(aw)))
        before = len(ctx.gens)
        q0 = ctx.adjoin_value(qname, mp.exp(-mp.log(aw) / 2))
        if len(ctx.gens) > before:
            ctx.relate(q0 * q0 * a - 1)
    v = (la / ctx.gen("twopii"), ctx.one())
    H = MixedHodgeStructure(
        ctx, labels,
        {0: [[1, 0]], 2: [[1, 0], [0, 1]]},
        {1: [v], 2: []})
    return ctx, H


def chain_structure(z0_value, z2_value, corner_value,
                    digits: int = 30, ctx: Optional[Context] = None,
                    names: Tuple[str, str, str] = ("z0", "z2", "y0"),
                    labels: Tuple[str, str, str] = ("e0", "e2", "e4")):
    """Rank-3 structure with weights 0, 2, 4 and free lift coefficients.

    The Hodge flag is F^1 = <e2 - z0 e0, v>, F^2 = <v> with
    v = e4 - z2 e2 - y0 e0; the three coefficients are adjoined as free
    constants with the given numeric witnesses.  Returns (ctx, structure).
    """
    ctx = ctx or standard_context(digits)
    z0 = ctx.adjoin(names[0], z0_value)
    z2 = ctx.adjoin(names[1], z2_value)
    y0 = ctx.adjoin(names[2], corner_value)
    v1 = (-z0, ctx.one(), ctx.zero())
    v2 = (-y0, -z2, ctx.one())
    H = MixedHodgeStructure(
        ctx, labels,
        {0: [[1, 0, 0]], 2: [[1, 0, 0], [0, 1, 0]],
         4: [[1, 0, 0], [0, 1, 0], [0, 0, 1]]},
        {1: [v1, v2], 2: [v2], 3: []})
    return ctx, H


def random_hodge_tate(ctx: Context, rng, max_rank: int = 6
                      ) -> MixedHodgeStructure:
    """Random numeric Hodge--Tate structure in an adapted basis.

    Consecutive (occasionally gapped) even weights, one to three graded
    blocks of small dimension, lift coefficients drawn from a small pool
    so that repeated values occur with positive probability, with some
    coefficients exactly zero or small rationals.
    """
    nblocks = rng.randint(1, 3)
    sizes = []
    total = 0
    for _ in range(nblocks):
        s = rng.randint(1, 2 if nblocks > 1 else max_rank)
        s = min(s, max_rank - total)
        if s <= 0:
            break
        sizes.append(s)
        total += s
    nblocks = len(sizes)
    k = rng.randint(-2, 1)
    weights = []
    for b in range(nblocks):
        weights.append(2 * k)
        k += 1 if rng.random() > 0.15 else 2
    n = sum(sizes)
    labels = [f"e{j}" for j in range(n)]
    weight_of = []
    for b, s in enumerate(sizes):
        weight_of += [weights[b]] * s

    pool = [rng.uniform(-2, 2) + 1j * rng.uniform(-2, 2) for _ in range(3)]

    def draw():
        u = rng.random()
        if u < 0.15:
            return None                      # structurally zero
        if u < 0.25:
            return Fraction(rng.choice([1, -1, 2]), rng.choice([1, 2]))
        if u < 0.5:
            return rng.choice(pool)          # shared value
        return rng.uniform(-2, 2) + 1j * rng.uniform(-2, 2)

    with mp.workdps(ctx.digits):
        lift = [[mp.mpc(1 if i == j else 0) for j in range(n)]
                for i in range(n)]
        for j in range(n):
            for i in range(n):
                if weight_of[i] < weight_of[j]:
                    c = draw()
                    if c is None:
                        continue
                    if isinstance(c, Fraction):
                        lift[i][j] = -mp.mpf(c.numerator) / c.denominator
                    else:
                        lift[i][j] = -mp.mpc(c)
        wdict = {}
        for b, w in enumerate(weights):
            m = sum(sizes[:b + 1])
            wdict[w] = [[1 if jj == ii else 0 for jj in range(n)]
                        for ii in range(m)]
        fdict = {}
        for kk in range(weights[0] // 2, weights[-1] // 2 + 2):
            fdict[kk] = [[lift[i][j] for i in range(n)]
                         for j in range(n) if weight_of[j] >= 2 * kk]
    return MixedHodgeStructure(ctx, labels, wdict, fdict, {})


# ---------------------------------------------------------------------------
# products
# ---------------------------------------------------------------------------

def tensor_coordinate_expressions(H1: MixedHodgeStructure,
                                  coords1: PeriodCoordinates,
                                  H2: MixedHodgeStructure,
                                  coords2: PeriodCoordinates) -> dict:
    """Period coordinates a tensor product must have, from its factors.

    The lift of e_{j1} (x) e_{j2} is the product of the factor lifts, so
    the coefficient at (i1, i2) is the product of factor coefficients.
    Keys follow the row-major index convention of the tensor functor.
    Only structurally nonzero coefficients appear.
    """
    n1, n2 = H1.n, H2.n
    ctx = H1.ctx

    def lmat(H, coords):
        L = [[ctx.one() if i == j else ctx.zero() for j in range(H.n)]
             for i in range(H.n)]
        for (i, j), c in coords.entries.items():
            L[i][j] = -c
        return L

    L1, L2 = lmat(H1, coords1), lmat(H2, coords2)
    w1 = coords1.decomposition.weight
    w2 = coords2.decomposition.weight
    out = {}
    for j1 in range(n1):
        for j2 in range(n2):
            for i1 in range(n1):
                for i2 in range(n2):
                    if w1[i1] + w2[i2] >= w1[j1] + w2[j2]:
                        continue
                    prod = L1[i1][j1] * L2[i2][j2]
                    if prod.is_zero():
                        continue
                    out[(i1 * n2 + i2, j1 * n2 + j2)] = -prod
    return out


def declare_coordinate_relations(coords: PeriodCoordinates,
                                 expected: dict) -> int:
    """Declare that independently solved coordinates equal expected
    expressions (e.g. factor products for a tensor structure).

    Each declaration is witness-checked; entries that already agree
    exactly are skipped.  Returns the number of relations declared.
    Differentials of previously free coordinate constants become linked
    through these relations, which is what makes the connection of a
    product agree exactly with the product of connections.
    """
    ctx = coords.ctx
    count = 0
    for key, expr in expected.items():
        have = coords.entries.get(key)
        if have is None:
            continue
        diff = have - expr
        if diff.num.is_zero():
            continue
        ctx.relate(diff.num)
        count += 1
    return count
