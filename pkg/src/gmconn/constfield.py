"""Finitely presented ring of differential constants with numeric witnesses.

A Context holds named generators, each carrying a high-precision numeric
witness, together with declared polynomial relations among them.  The
differential d kills exactly the declared algebraic structure: dg is a
free symbol for every generator, except that each relation R = 0
contributes the cotangent row dR = sum_i (dR/dg_i) dg_i = 0, which is
used to eliminate the differential of one generator per relation.

Elimination strategy (deliberately not Groebner): the Jacobian rows are
brought to triangular form over the fraction field of the ring, with
the pivot of each row chosen as the *latest-adjoined* generator whose
coefficient has a nonzero witness.  This gives a substitution map
  d(pivot) = sum over free generators of coeff * dg
which is cached per context version and applied to one- and two-forms.
Zero testing of ring elements is witness-based at tolerance
10^(-digits/2); an exact polynomial zero is of course also a zero.

Forms are reduced lazily: they remember the context version they were
last reduced against and re-reduce when relations have been added.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence, Union

import mpmath as mp

from .numutil import default_tolerance, real_pslq
from .ratlinalg import FieldOps, Poly, rank as _qrank


class ConstFieldError(Exception):
    pass


class WitnessError(ConstFieldError):
    """A numeric witness contradicts a declared or implied identity."""


class FrozenContextError(ConstFieldError):
    pass


class NotRationalComplexError(ConstFieldError):
    """Exact span computation met a coefficient outside Q(i)."""


@dataclass
class Generator:
    name: str
    witness: mp.mpc
    invertible: bool = False


Scalar = Union[int, Fraction, "ConstExpr"]


class Context:
    """Mutable-until-frozen differential constants ring."""

    def __init__(self, digits: int = 30):
        self.digits = digits
        self.gens: list[Generator] = []
        self._by_name: dict[str, int] = {}
        self.relations: list[Poly] = []
        self.version = 0
        self.frozen = False
        self._subst_cache = None  # (version, {pivot_index: {free_index: ConstExpr}})

    # -- tolerances ---------------------------------------------------
    @property
    def tol(self) -> mp.mpf:
        with mp.workdps(self.digits):
            return default_tolerance(self.digits)

    def strict_tol(self) -> mp.mpf:
        with mp.workdps(self.digits):
            return mp.mpf(10) ** (-(4 * self.digits) // 5)

    # -- construction ---------------------------------------------------
    def _check_mutable(self):
        if self.frozen:
            raise FrozenContextError("context is frozen")

    def adjoin(self, name: str, witness, invertible: bool = False) -> "ConstExpr":
        """Adjoin a new named generator.  Errors on duplicate names."""
        self._check_mutable()
        if name in self._by_name:
            raise ConstFieldError(f"generator {name!r} already adjoined")
        with mp.workdps(self.digits):
            w = mp.mpc(witness)
        if not mp.isfinite(w):
            raise WitnessError(f"witness for {name!r} is not finite")
        if invertible and abs(w) <= self.tol:
            raise WitnessError(
                f"witness for invertible generator {name!r} is numerically zero")
        self.gens.append(Generator(name, w, invertible))
        self._by_name[name] = len(self.gens) - 1
        self.version += 1
        return self.gen(name)

    def adjoin_value(self, name_hint: str, witness,
                     invertible: bool = False) -> "ConstExpr":
        """Adjoin with deduplication by witness value.

        If some existing generator's witness agrees with the given one
        to within tolerance, that generator is returned instead of a new
        one — this is what makes independently constructed occurrences
        of the same constant symbolically equal.
        """
        with mp.workdps(self.digits):
            w = mp.mpc(witness)
            for k, g in enumerate(self.gens):
                if abs(g.witness - w) <= self.tol * (1 + abs(w)):
                    return ConstExpr(self, Poly.gen(k))
        name = name_hint
        k = 2
        while name in self._by_name:
            name = f"{name_hint}_{k}"
            k += 1
        return self.adjoin(name, w, invertible)

    def relate(self, expr: Union["ConstExpr", Poly]) -> None:
        """Declare a polynomial relation (expr = 0), witness-checked.

        The check is relative to the total magnitude of the monomials, so
        relations among large periods are not spuriously accepted or
        rejected.  Declaring a nonzero rational constant to be zero is an
        error regardless of its size.
        """
        self._check_mutable()
        # num/den = 0 with invertible den is equivalent to num = 0
        poly = expr.num if isinstance(expr, ConstExpr) else expr
        if poly.is_zero():
            return
        if poly.is_constant():
            raise WitnessError("relation declares a nonzero rational to be zero")
        with mp.workdps(self.digits):
            vals = self.witnesses()
            total = mp.mpc(0)
            scale = mp.mpf(0)
            for m, c in poly.terms.items():
                t = mp.mpc(c.numerator) / c.denominator
                for i, e in m:
                    t *= vals[i] ** e
                total += t
                scale = max(scale, abs(t))
            if abs(total) > self.tol * max(mp.mpf(1), scale):
                raise WitnessError(
                    "relation fails its numeric witness check: |residual| = "
                    f"{mp.nstr(abs(total), 5)} vs tolerance {mp.nstr(self.tol, 3)}")
        self.relations.append(poly)
        self.version += 1

    def freeze(self):
        self.frozen = True

    # -- element constructors -------------------------------------------
    def gen(self, name: str) -> "ConstExpr":
        if name not in self._by_name:
            raise ConstFieldError(f"no generator named {name!r}")
        return ConstExpr(self, Poly.gen(self._by_name[name]))

    def has_gen(self, name: str) -> bool:
        return name in self._by_name

    def const(self, c) -> "ConstExpr":
        return ConstExpr(self, Poly.const(Fraction(c)))

    def zero(self) -> "ConstExpr":
        return ConstExpr(self, Poly.zero())

    def one(self) -> "ConstExpr":
        return ConstExpr(self, Poly.const(1))

    def witnesses(self):
        return [g.witness for g in self.gens]

    def names(self):
        return [g.name for g in self.gens]

    # -- differential structure -------------------------------------------
    def substitutions(self) -> dict:
        """Map pivot generator index -> {free index: ConstExpr coefficient}.

        Computed from the Jacobian rows of the declared relations by
        back-substituted triangular elimination; cached per version.
        """
        if self._subst_cache is not None and self._subst_cache[0] == self.version:
            return self._subst_cache[1]
        subst: dict[int, dict[int, ConstExpr]] = {}
        for rel in self.relations:
            row: dict[int, ConstExpr] = {}
            for i in rel.gens_used():
                p = rel.partial(i)
                if not p.is_zero():
                    row[i] = ConstExpr(self, p)
            # substitute known pivots so the row only involves free differentials
            row = self._apply_subst_row(row, subst)
            pivot = None
            for i in sorted(row, reverse=True):
                if not row[i].is_zero():
                    pivot = i
                    break
            if pivot is None:
                continue  # differentially dependent relation; nothing new
            c = row[pivot]
            # keep every exactly-nonzero coefficient: a witness may vanish
            # at the current point while the ring element is still nonzero
            expansion = {j: (-v) / c for j, v in row.items()
                         if j != pivot and not v.num.is_zero()}
            # eliminate the new pivot from earlier expansions
            for p, exp in subst.items():
                if pivot in exp:
                    f = exp.pop(pivot)
                    for j, v in expansion.items():
                        acc = exp.get(j)
                        exp[j] = f * v if acc is None else acc + f * v
                    for j in [j for j, v in exp.items() if v.num.is_zero()]:
                        del exp[j]
            subst[pivot] = expansion
        self._subst_cache = (self.version, subst)
        return subst

    @staticmethod
    def _apply_subst_row(row, subst):
        out: dict[int, ConstExpr] = {}
        for i, c in row.items():
            if i in subst:
                for j, s in subst[i].items():
                    acc = out.get(j)
                    term = c * s
                    out[j] = term if acc is None else acc + term
            else:
                acc = out.get(i)
                out[i] = c if acc is None else acc + c
        return {j: v for j, v in out.items() if not v.num.is_zero()}

    def d(self, x: Union["ConstExpr", str]) -> "OneForm":
        if isinstance(x, str):
            x = self.gen(x)
        return x.d()

    def field_ops(self, strict: bool = False) -> FieldOps:
        """Fraction-field operations for generic elimination over this ring."""
        return FieldOps(
            add=lambda a, b: a + b,
            sub=lambda a, b: a - b,
            mul=lambda a, b: a * b,
            div=lambda a, b: a / b,
            neg=lambda a: -a,
            zero=self.zero(),
            one=self.one(),
            is_zero=lambda a: a.is_zero(strict=strict),
            pivot_size=lambda a: abs(a.value()),
        )


class ConstExpr:
    """Element of the fraction field of a constants ring."""

    __slots__ = ("ctx", "num", "den", "_val")

    def __init__(self, ctx: Context, num: Poly, den: Optional[Poly] = None):
        self.ctx = ctx
        if den is None:
            den = Poly.const(1)
        if num.is_zero():
            den = Poly.const(1)
        elif num == den:
            num, den = Poly.const(1), Poly.const(1)
        elif den.is_constant():
            c = den.constant_value()
            if c == 0:
                raise ZeroDivisionError("zero denominator polynomial")
            if c != 1:
                num, den = num.scale(1 / c), Poly.const(1)
        self.num = num
        self.den = den
        self._val = None

    # -- coercion -------------------------------------------------------
    def _coerce(self, other) -> "ConstExpr":
        if isinstance(other, ConstExpr):
            if other.ctx is not self.ctx:
                raise ConstFieldError("mixing elements of different contexts")
            return other
        if isinstance(other, (int, Fraction)):
            return ConstExpr(self.ctx, Poly.const(Fraction(other)))
        return NotImplemented

    # -- arithmetic -------------------------------------------------------
    def __add__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        if self.den == o.den:
            return ConstExpr(self.ctx, self.num + o.num, self.den)
        return ConstExpr(self.ctx, self.num * o.den + o.num * self.den,
                         self.den * o.den)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return self + (-o)

    def __rsub__(self, other):
        return (-self) + other

    def __neg__(self):
        return ConstExpr(self.ctx, -self.num, self.den)

    def __mul__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        # cheap cross-cancellation
        if self.num == o.den:
            return ConstExpr(self.ctx, o.num, self.den)
        if o.num == self.den:
            return ConstExpr(self.ctx, self.num, o.den)
        return ConstExpr(self.ctx, self.num * o.num, self.den * o.den)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        if o.num.is_zero():
            raise ZeroDivisionError("division by exact zero")
        with mp.workdps(self.ctx.digits):
            if abs(o.value()) <= self.ctx.tol:
                raise WitnessError(
                    "division by an element whose witness is numerically zero")
        inv = ConstExpr(self.ctx, o.den, o.num)
        return self * inv

    def __rtruediv__(self, other):
        o = self._coerce(other)
        return o / self

    def __pow__(self, n: int):
        if not isinstance(n, int):
            raise TypeError("only integer powers of constants")
        if n == 0:
            return self.ctx.one()
        if n < 0:
            return self.ctx.one() / (self ** (-n))
        return ConstExpr(self.ctx, self.num ** n, self.den ** n)

    # -- evaluation and tests ----------------------------------------------
    def value(self) -> mp.mpc:
        if self._val is None:
            with mp.workdps(self.ctx.digits):
                w = self.ctx.witnesses()
                dv = self.den.eval(w)
                if abs(dv) == 0:
                    raise WitnessError("denominator witness vanished")
                self._val = self.num.eval(w) / dv
        return self._val

    def is_zero(self, strict: bool = False) -> bool:
        """Exact polynomial zero, or witness below tolerance.

        strict re-evaluates with extra working precision and a tighter
        threshold, to guard against cancellation artifacts when the
        verdict feeds an elimination pivot choice.
        """
        if self.num.is_zero():
            return True
        ctx = self.ctx
        with mp.workdps(ctx.digits):
            v = abs(self.value())
        if not strict:
            return v <= ctx.tol
        if v > ctx.tol:
            return False
        with mp.workdps(2 * ctx.digits):
            w = ctx.witnesses()
            dv = self.den.eval(w)
            if abs(dv) == 0:
                return False
            v2 = abs(self.num.eval(w) / dv)
        return v2 <= ctx.strict_tol()

    def equals(self, other, strict: bool = False) -> bool:
        o = self._coerce(other)
        return (self - o).is_zero(strict=strict)

    def as_rational(self) -> Optional[Fraction]:
        """Exact rational value if the expression is one, else None."""
        if self.num.is_constant() and self.den.is_constant():
            return self.num.constant_value() / self.den.constant_value()
        return None

    def as_gaussian_rational(self, i_index: Optional[int]):
        """(x, y) with self = x + i*y, x,y in Q, or None.

        i_index is the generator index of the imaginary unit (reduced by
        i^2 = -1); pass None when no imaginary unit was adjoined.
        """
        def split(poly: Poly):
            re, im = Fraction(0), Fraction(0)
            for m, c in poly.terms.items():
                if m == ():
                    re += c
                    continue
                if i_index is None or len(m) != 1 or m[0][0] != i_index:
                    return None
                e = m[0][1] % 4  # i^e cycles 1, i, -1, -i
                if e == 0:
                    re += c
                elif e == 1:
                    im += c
                elif e == 2:
                    re -= c
                else:
                    im -= c
            return re, im
        n = split(self.num)
        d = split(self.den)
        if n is None or d is None:
            return None
        nr, ni = n
        dr, di = d
        denom = dr * dr + di * di
        if denom == 0:
            return None
        return ((nr * dr + ni * di) / denom, (ni * dr - nr * di) / denom)

    # -- differential --------------------------------------------------------
    def d(self) -> "OneForm":
        """Differential, reduced modulo the declared relations."""
        ctx = self.ctx
        coeffs: dict[int, ConstExpr] = {}
        den2 = self.den * self.den
        for i in (self.num.gens_used() | self.den.gens_used()):
            # quotient rule: (den * d num - num * d den) / den^2
            p = self.den * self.num.partial(i) - self.num * self.den.partial(i)
            if not p.is_zero():
                coeffs[i] = ConstExpr(ctx, p, den2)
        return OneForm(ctx, coeffs).reduce()

    # -- display ------------------------------------------------------------
    def pretty(self) -> str:
        names = self.ctx.names()
        n = self.num.pretty(names)
        if self.den.is_constant() and self.den.constant_value() == 1:
            return n
        return f"({n})/({self.den.pretty(names)})"

    def __repr__(self):
        return f"<ConstExpr {self.pretty()}>"


class OneForm:
    """Element of the one-forms module: sum of coeff * dg over generators."""

    __slots__ = ("ctx", "coeffs", "_reduced_at")

    def __init__(self, ctx: Context, coeffs: Optional[dict] = None,
                 _reduced_at: Optional[int] = None):
        self.ctx = ctx
        self.coeffs = {i: c for i, c in (coeffs or {}).items()
                       if not c.num.is_zero()}
        self._reduced_at = _reduced_at

    @staticmethod
    def zero(ctx: Context) -> "OneForm":
        return OneForm(ctx, {}, _reduced_at=ctx.version)

    @staticmethod
    def dgen(ctx: Context, name: str) -> "OneForm":
        return OneForm(ctx, {ctx._by_name[name]: ctx.one()})

    def __add__(self, other: "OneForm") -> "OneForm":
        if other.ctx is not self.ctx:
            raise ConstFieldError("mixing forms from different contexts")
        out = dict(self.coeffs)
        for i, c in other.coeffs.items():
            out[i] = out[i] + c if i in out else c
        return OneForm(self.ctx, out)

    def __sub__(self, other: "OneForm") -> "OneForm":
        return self + (-other)

    def __neg__(self) -> "OneForm":
        return OneForm(self.ctx, {i: -c for i, c in self.coeffs.items()})

    def smul(self, c: Scalar) -> "OneForm":
        if not isinstance(c, ConstExpr):
            c = self.ctx.const(Fraction(c))
        return OneForm(self.ctx, {i: c * v for i, v in self.coeffs.items()})

    def reduce(self) -> "OneForm":
        """Substitute differentials of pivot generators; idempotent."""
        if self._reduced_at == self.ctx.version:
            return self
        subst = self.ctx.substitutions()
        out = Context._apply_subst_row(self.coeffs, subst)
        return OneForm(self.ctx, out, _reduced_at=self.ctx.version)

    def is_zero(self, strict: bool = False) -> bool:
        r = self.reduce()
        return all(c.is_zero(strict=strict) for c in r.coeffs.values())

    def is_exactly_zero(self) -> bool:
        """True when every coefficient cancels as a literal polynomial.

        Stronger than is_zero: a certificate of exact vanishing in the
        quotient, with no numeric tolerance involved.
        """
        return not self.reduce().coeffs

    def coefficient(self, name: str) -> ConstExpr:
        r = self.reduce()
        return r.coeffs.get(self.ctx._by_name[name], self.ctx.zero())

    def support(self) -> list:
        return sorted(self.reduce().coeffs)

    def wedge(self, other: "OneForm") -> "TwoForm":
        a, b = self.reduce(), other.reduce()
        out: dict[tuple, ConstExpr] = {}
        for i, ci in a.coeffs.items():
            for j, cj in b.coeffs.items():
                if i == j:
                    continue
                key, sgn = ((i, j), 1) if i < j else ((j, i), -1)
                term = ci * cj if sgn > 0 else -(ci * cj)
                out[key] = out[key] + term if key in out else term
        return TwoForm(self.ctx, out, _reduced_at=self.ctx.version)

    def exterior_d(self) -> "TwoForm":
        """d of the reduced form.

        Well defined on the quotient because each Jacobian row is closed
        (second partials commute), so d of the substitution submodule
        lands back in the submodule.
        """
        r = self.reduce()
        out: dict[tuple, ConstExpr] = {}
        for i, c in r.coeffs.items():
            dc = c.d()
            for j, cj in dc.coeffs.items():
                if j == i:
                    continue
                key, sgn = ((j, i), 1) if j < i else ((i, j), -1)
                term = cj if sgn > 0 else -cj
                out[key] = out[key] + term if key in out else term
        return TwoForm(self.ctx, out, _reduced_at=self.ctx.version).reduce()

    def evaluate(self, tangent: dict) -> mp.mpc:
        """Pair with a tangent vector given as {generator name: mpc velocity}."""
        ctx = self.ctx
        r = self.reduce()
        with mp.workdps(ctx.digits):
            total = mp.mpc(0)
            for i, c in r.coeffs.items():
                vel = tangent.get(ctx.gens[i].name, 0)
                if vel:
                    total += c.value() * mp.mpmathify(vel)
        return total

    def pretty(self) -> str:
        r = self.reduce()
        if not r.coeffs:
            return "0"
        names = self.ctx.names()
        return " + ".join(f"({r.coeffs[i].pretty()})*d{names[i]}"
                          for i in sorted(r.coeffs))

    def __repr__(self):
        return f"<OneForm {self.pretty()}>"


class TwoForm:
    """Alternating two-forms, coefficients on dg_i ^ dg_j with i < j."""

    __slots__ = ("ctx", "coeffs", "_reduced_at")

    def __init__(self, ctx: Context, coeffs: Optional[dict] = None,
                 _reduced_at: Optional[int] = None):
        self.ctx = ctx
        self.coeffs = {k: c for k, c in (coeffs or {}).items()
                       if not c.num.is_zero()}
        self._reduced_at = _reduced_at

    @staticmethod
    def zero(ctx: Context) -> "TwoForm":
        return TwoForm(ctx, {}, _reduced_at=ctx.version)

    def __add__(self, other: "TwoForm") -> "TwoForm":
        out = dict(self.coeffs)
        for k, c in other.coeffs.items():
            out[k] = out[k] + c if k in out else c
        return TwoForm(self.ctx, out)

    def __sub__(self, other: "TwoForm") -> "TwoForm":
        return self + (-other)

    def __neg__(self) -> "TwoForm":
        return TwoForm(self.ctx, {k: -c for k, c in self.coeffs.items()})

    def smul(self, c: ConstExpr) -> "TwoForm":
        return TwoForm(self.ctx, {k: c * v for k, v in self.coeffs.items()})

    def reduce(self) -> "TwoForm":
        """Substitute pivot differentials in both wedge legs."""
        if self._reduced_at == self.ctx.version:
            return self
        subst = self.ctx.substitutions()
        one = self.ctx.one()

        def expand(i):
            if i in subst:
                return subst[i]
            return {i: one}

        out: dict[tuple, ConstExpr] = {}
        for (i, j), c in self.coeffs.items():
            for k, ck in expand(i).items():
                for l, cl in expand(j).items():
                    if k == l:
                        continue
                    key, sgn = ((k, l), 1) if k < l else ((l, k), -1)
                    term = c * ck * cl
                    if sgn < 0:
                        term = -term
                    out[key] = out[key] + term if key in out else term
        return TwoForm(self.ctx, out, _reduced_at=self.ctx.version)

    def is_zero(self, strict: bool = False) -> bool:
        r = self.reduce()
        return all(c.is_zero(strict=strict) for c in r.coeffs.values())

    def is_exactly_zero(self) -> bool:
        """All coefficients cancel as literal polynomials after reduction."""
        return not self.reduce().coeffs

    def evaluate(self, tangent_u: dict, tangent_v: dict) -> mp.mpc:
        """Pair with a bivector given as two {generator name: velocity} maps."""
        ctx = self.ctx
        r = self.reduce()
        with mp.workdps(ctx.digits):
            total = mp.mpc(0)
            for (i, j), c in r.coeffs.items():
                ni, nj = ctx.gens[i].name, ctx.gens[j].name
                ui = mp.mpmathify(tangent_u.get(ni, 0))
                uj = mp.mpmathify(tangent_u.get(nj, 0))
                vi = mp.mpmathify(tangent_v.get(ni, 0))
                vj = mp.mpmathify(tangent_v.get(nj, 0))
                cross = ui * vj - uj * vi
                if cross:
                    total += c.value() * cross
        return total

    def pretty(self) -> str:
        r = self.reduce()
        if not r.coeffs:
            return "0"
        names = self.ctx.names()
        return " + ".join(
            f"({r.coeffs[k].pretty()})*d{names[k[0]]}^d{names[k[1]]}"
            for k in sorted(r.coeffs))

    def __repr__(self):
        return f"<TwoForm {self.pretty()}>"


# ---------------------------------------------------------------------------
# Q-span dimension of a family of one-forms
# ---------------------------------------------------------------------------

def qspan_dim(forms: Sequence[OneForm], mode: str = "auto", seed: int = 7,
              strict: bool = True) -> int:
    """Dimension of the Q-span of the given one-forms.

    exact mode requires every reduced coefficient to lie in Q(i) and
    computes the rank of a rational matrix.  numeric mode hunts for
    integer relations among witness evaluations (random rational
    projection to scalars, then PSLQ, then verification coordinate by
    coordinate, then deflation and repeat).  auto tries exact first.
    """
    forms = [f.reduce() for f in forms]
    if not forms:
        return 0
    ctx = forms[0].ctx
    support = sorted(set().union(*[set(f.coeffs) for f in forms]))
    if mode == "auto":
        try:
            return qspan_dim(forms, "exact", seed)
        except NotRationalComplexError:
            return qspan_dim(forms, "numeric", seed, strict=strict)
    if mode == "exact":
        i_index = ctx._by_name.get("i")
        rows = []
        for f in forms:
            row = []
            for s in support:
                c = f.coeffs.get(s)
                if c is None:
                    row.extend([Fraction(0), Fraction(0)])
                    continue
                g = c.as_gaussian_rational(i_index)
                if g is None:
                    raise NotRationalComplexError(
                        f"coefficient {c.pretty()} is not in Q(i)")
                row.extend(g)
            rows.append(row)
        return _qrank(rows)
    if mode != "numeric":
        raise ValueError(f"unknown mode {mode!r}")

    with mp.workdps(ctx.digits):
        vecs = []
        for f in forms:
            v = []
            for s in support:
                c = f.coeffs.get(s)
                v.append(c.value() if c is not None else mp.mpc(0))
            vecs.append(v)
        scale = max((abs(x) for v in vecs for x in v), default=mp.mpf(0))
        if scale == 0:
            return 0
        live = [k for k in range(len(vecs))
                if max(abs(x) for x in vecs[k]) > ctx.tol * scale]
        rng = random.Random(seed)
        ncoord = len(support)
        primes = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43]

        def projection():
            # irrational weights applied to real and imaginary parts
            # independently (so purely-real and purely-imaginary vectors
            # both project to something of full size): a rational
            # coincidence among projections then almost surely fails the
            # coordinatewise verification below; genuine relations pass
            return [mp.sqrt(primes[rng.randrange(len(primes))])
                    * rng.randrange(1, 20) for _ in range(2 * ncoord)]

        while len(live) >= 2:
            found = None
            for _attempt in range(8):
                proj = projection()
                scalars = []
                for k in live:
                    parts = []
                    for idx, x in enumerate(vecs[k]):
                        x = mp.mpc(x)
                        parts.append(proj[2 * idx] * x.real)
                        parts.append(proj[2 * idx + 1] * x.imag)
                    scalars.append(mp.fsum(parts, absolute=False))
                # pslq refuses vectors containing (near-)zero entries, so
                # run it on the scalars of meaningful size only and extend
                # the relation by zeros afterwards
                big = [j for j, s in enumerate(scalars)
                       if abs(s) > ctx.tol * scale]
                if len(big) < 2:
                    continue
                rel_sub = real_pslq([scalars[j] for j in big],
                                    maxcoeff=10**10)
                if rel_sub is None:
                    continue
                rel = [0] * len(live)
                for c, j in zip(rel_sub, big):
                    rel[j] = c
                # verify against every coordinate, twice
                ok = True
                for s in range(ncoord):
                    resid = sum(rel[j] * vecs[k][s] for j, k in enumerate(live))
                    if abs(resid) > ctx.tol * scale * max(abs(r) for r in rel):
                        ok = False
                        break
                if ok and strict:
                    # second pass: coefficients re-evaluated with doubled
                    # working precision (same witnesses, fresh arithmetic)
                    with mp.workdps(2 * ctx.digits):
                        w = ctx.witnesses()
                        for s in range(ncoord):
                            resid = mp.mpc(0)
                            for j, k in enumerate(live):
                                c = forms[k].coeffs.get(support[s])
                                if c is not None:
                                    resid += rel[j] * c.num.eval(w) / c.den.eval(w)
                            if abs(resid) > ctx.tol * scale * max(
                                    abs(r) for r in rel):
                                ok = False
                                break
                if ok:
                    found = rel
                    break
            if found is None:
                break
            # deflate: drop the participating vector with the largest coefficient
            drop = max(range(len(found)), key=lambda j: abs(found[j]))
            live.pop(drop)
        # vectors surviving deflation admit no further detected relation,
        # so they are (numerically) independent and span the same space
        return len(live)


def dlog(x: ConstExpr) -> OneForm:
    """dx / x, the logarithmic differential."""
    return x.d().smul(x.ctx.one() / x)
