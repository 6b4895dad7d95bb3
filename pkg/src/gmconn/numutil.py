"""Small numeric helpers shared across the package.

Everything here is deliberately boring: tolerance plumbing, branch
snapping, a full Kronecker symbol (sympy's jacobi_symbol chokes on even
moduli), and thin wrappers around mpmath.pslq that tolerate complex
input with negligible imaginary part.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import mpmath as mp


@dataclass(frozen=True)
class Precision:
    """Working precision bundle.

    digits        -- mpmath working precision (decimal digits)
    target_digits -- accuracy actually promised to callers
    series_terms  -- hard cap on q-series / theta summation lengths
    """

    digits: int = 30
    target_digits: int = 25
    series_terms: int = 4000

    def __post_init__(self):
        if self.digits < self.target_digits + 4:
            raise ValueError(
                "working digits must exceed target digits by a guard margin"
            )

    @property
    def tol(self) -> mp.mpf:
        with mp.workdps(self.digits):
            return mp.mpf(10) ** (-self.target_digits)

    def with_digits(self, digits: int) -> "Precision":
        return Precision(digits=digits,
                         target_digits=digits - (self.digits - self.target_digits),
                         series_terms=self.series_terms)


def default_tolerance(digits: int) -> mp.mpf:
    """Consistency tolerance used for witness checks: 10^(-digits/2)."""
    return mp.mpf(10) ** (-(digits // 2))


def chop_imag(z, scale=1, rel=None, dps=None):
    """Snap a negligible imaginary part to exactly zero.

    `scale` sets the magnitude against which "negligible" is judged;
    `rel` overrides the default 10^(-dps/2) relative threshold.  Used to
    make principal-branch choices deterministic when a quantity is real
    in exact arithmetic but carries float noise in its imaginary part.
    """
    z = mp.mpmathify(z)
    if dps is None:
        dps = mp.mp.dps
    if rel is None:
        rel = mp.mpf(10) ** (-dps // 2)
    mag = abs(mp.mpmathify(scale))
    if mag == 0:
        mag = abs(z)
    if mag != 0 and abs(mp.im(z)) < mag * rel:
        return mp.mpc(mp.re(z), 0)
    return z


def nearly_real(z, tol) -> bool:
    return abs(mp.im(mp.mpmathify(z))) < tol


def kronecker(a: int, n: int) -> int:
    """Kronecker symbol (a|n), defined for all integers n."""
    if n == 0:
        return 1 if a in (1, -1) else 0
    sign = 1
    if n < 0:
        n = -n
        if a < 0:
            sign = -sign
    t = 0
    while n % 2 == 0:
        n //= 2
        t += 1
    if t:
        if a % 2 == 0:
            return 0
        if t % 2 == 1 and (a % 8) in (3, 5):
            sign = -sign
    a %= n
    result = sign
    while a != 0:
        while a % 2 == 0:
            a //= 2
            if n % 8 in (3, 5):
                result = -result
        a, n = n, a
        if a % 4 == 3 and n % 4 == 3:
            result = -result
        a %= n
    return result if n == 1 else 0


def real_pslq(values, tol=None, maxcoeff=10**12, maxsteps=50000):
    """mpmath.pslq on values that must be real up to noise.

    mpmath raises TypeError when handed an mpc even with zero imaginary
    part, so strip imaginary parts after checking they are negligible.
    Returns the integer relation or None.
    """
    reals = []
    for v in values:
        v = mp.mpmathify(v)
        if isinstance(v, mp.mpc):
            if abs(v.imag) > mp.mpf(10) ** (-mp.mp.dps // 2) * (1 + abs(v)):
                return None
            v = v.real
        reals.append(v)
    try:
        return mp.pslq(reals, tol=tol, maxcoeff=maxcoeff, maxsteps=maxsteps)
    except (ValueError, TypeError):
        return None


def rational_from_float(x, max_den=10**6, tol=None):
    """Recognize x as a fraction with small denominator, else None."""
    x = mp.mpmathify(x)
    if isinstance(x, mp.mpc):
        if abs(x.imag) > mp.mpf(10) ** (-mp.mp.dps + 6):
            return None
        x = x.real
    if tol is None:
        tol = mp.mpf(10) ** (-mp.mp.dps // 2)
    rel = real_pslq([x, mp.mpf(1)], maxcoeff=max_den)
    if rel is None:
        return None
    q, p = rel
    if q == 0:
        return None
    cand = Fraction(-p, q)
    if abs(x - mp.mpf(cand.numerator) / cand.denominator) < tol * (1 + abs(x)):
        return cand
    return None


def lattice_reduce(g1, g2):
    """Gauss reduction of a rank-2 lattice basis.

    Returns (h1, h2, U) with (h1, h2) = (g1, g2) * U^T for a unimodular
    integer matrix U = [[u11,u12],[u21,u22]], h1 the shortest vector and
    Im(h2/h1) > 0.
    """
    a, b = mp.mpmathify(g1), mp.mpmathify(g2)
    # row vectors of U: coordinates of h1, h2 in terms of (g1, g2)
    u1, u2 = [1, 0], [0, 1]
    if abs(a) > abs(b):
        a, b = b, a
        u1, u2 = u2, u1
    while True:
        # subtract the integer multiple of a closest to b
        m = mp.nint(mp.re(b * mp.conj(a)) / abs(a) ** 2)
        b = b - m * a
        u2 = [u2[0] - int(m) * u1[0], u2[1] - int(m) * u1[1]]
        if abs(b) >= abs(a):
            break
        a, b = b, a
        u1, u2 = u2, u1
    if mp.im(b / a) < 0:
        b = -b
        u2 = [-u2[0], -u2[1]]
    U = [u1, u2]
    det = U[0][0] * U[1][1] - U[0][1] * U[1][0]
    assert det in (1, -1)
    return a, b, U


def nearest_lattice_point(z, g1, g2):
    """Integer (m, n) minimizing |z - m*g1 - n*g2| (up to rounding)."""
    z, g1, g2 = mp.mpmathify(z), mp.mpmathify(g1), mp.mpmathify(g2)
    # solve the real 2x2 system [Re g1, Re g2; Im g1, Im g2] (m,n)^T = (Re z, Im z)^T
    det = mp.re(g1) * mp.im(g2) - mp.re(g2) * mp.im(g1)
    m = (mp.re(z) * mp.im(g2) - mp.re(g2) * mp.im(z)) / det
    n = (mp.re(g1) * mp.im(z) - mp.re(z) * mp.im(g1)) / det
    return int(mp.nint(m)), int(mp.nint(n))
