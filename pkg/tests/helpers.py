"""Shared test oracles, written independently of the package internals.

Contents:

- a high-accuracy reference integrator for the single-mode (Duffing) reduction,
- exact rational power-series utilities (for the stiffness-response Taylor
  coefficients),
- ``EC``: exact complex numbers over ``fractions.Fraction``,
- ``ZPoly``: dense-exponent exact polynomials in z_1..z_M, zbar_1..zbar_M with
  differentiation, used to realize the vector-field commutator directly from
  its defining formula (independent of the package's canonical-term engine).
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Mapping

import numpy as np
from scipy.integrate import solve_ivp


# ---------------------------------------------------------------------------
# Duffing reference

def duffing_reference(a: int, q0: float, p0: float, t_eval):
    """Reference solution of q'' + (1 + a^2 q^2) a^2 q = 0 via DOP853."""

    def rhs(_t, y):
        q, p = y
        return [p, -(1.0 + a * a * q * q) * a * a * q]

    t_eval = np.atleast_1d(np.asarray(t_eval, dtype=float))
    sol = solve_ivp(
        rhs,
        (0.0, float(t_eval[-1])),
        [q0, p0],
        method="DOP853",
        rtol=1e-12,
        atol=1e-14,
        t_eval=t_eval,
        dense_output=False,
    )
    assert sol.success
    return sol.y


# ---------------------------------------------------------------------------
# exact power series over Fraction (coefficient lists, index = power)

def series_mul(A: list[Fraction], B: list[Fraction], n: int) -> list[Fraction]:
    out = [Fraction(0)] * n
    for i, ai in enumerate(A[:n]):
        if ai == 0:
            continue
        for j, bj in enumerate(B[: n - i]):
            out[i + j] += ai * bj
    return out


def series_compose(A: list[Fraction], B: list[Fraction], n: int) -> list[Fraction]:
    """A(B(y)) with B(0) = 0."""
    assert B[0] == 0
    out = [Fraction(0)] * n
    out[0] = A[0]
    Bk = [Fraction(0)] * n
    Bk[0] = Fraction(1)
    for k in range(1, min(len(A), n)):
        Bk = series_mul(Bk, B, n)
        if A[k] == 0:
            continue
        for i in range(n):
            out[i] += A[k] * Bk[i]
    return out


def binom_series(alpha: Fraction, n: int) -> list[Fraction]:
    """(1 + t)^alpha as a series in t."""
    out = [Fraction(1)]
    c = Fraction(1)
    for k in range(1, n):
        c = c * (alpha - (k - 1)) / k
        out.append(c)
    return out


def revert_series(G: list[Fraction], n: int) -> list[Fraction]:
    """Compositional inverse of G with G(0)=0, G'(0)=1."""
    assert G[0] == 0 and G[1] == 1
    F = [Fraction(0)] * n
    F[1] = Fraction(1)
    for k in range(2, n):
        # impose [y^k] G(F(y)) = 0
        comp = series_compose(G, F, k + 1)
        F[k] = -comp[k]
    return F


def stiffness_response_series(n: int = 6) -> list[Fraction]:
    """Taylor coefficients of f(y) = (1 + 2 phi(y))^(-3/2), phi inverting x sqrt(1+2x).

    Uses the identity sqrt(1 + 2 phi(y)) = y / phi(y), so f = (phi/y)^3 needs
    only rational series arithmetic. Returns [f(0), f'(0), f''(0)/2!, ...].
    """
    m = n + 2
    # g(x) = x (1+2x)^{1/2}
    root = binom_series(Fraction(1, 2), m)  # (1+t)^{1/2}
    g = [Fraction(0)] * m
    for k, c in enumerate(root):
        if k + 1 < m:
            g[k + 1] = c * 2**k  # t = 2x
    phi = revert_series(g, m)
    # (phi/y) as a series in y
    ratio = phi[1:] + [Fraction(0)]
    cube = series_mul(series_mul(ratio, ratio, m), ratio, m)
    return cube[:n]


# ---------------------------------------------------------------------------
# exact complex numbers

class EC:
    """Complex numbers with Fraction components."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        self.re = Fraction(re)
        self.im = Fraction(im)

    def __add__(self, o):
        o = _ec(o)
        return EC(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __neg__(self):
        return EC(-self.re, -self.im)

    def __sub__(self, o):
        return self + (-_ec(o))

    def __rsub__(self, o):
        return _ec(o) + (-self)

    def __mul__(self, o):
        o = _ec(o)
        return EC(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)

    __rmul__ = __mul__

    def conj(self):
        return EC(self.re, -self.im)

    def __eq__(self, o):
        o = _ec(o)
        return self.re == o.re and self.im == o.im

    def __hash__(self):
        return hash((self.re, self.im))

    def __bool__(self):
        return self.re != 0 or self.im != 0

    def __repr__(self):
        return f"EC({self.re}, {self.im})"

    def to_complex(self):
        return complex(self.re, self.im)


def _ec(x) -> EC:
    if isinstance(x, EC):
        return x
    return EC(x)


EC_I = EC(0, 1)


# ---------------------------------------------------------------------------
# exact polynomials in z, zbar

class ZPoly:
    """Exact polynomial in z_1..z_M, zbar_1..zbar_M.

    Keys are pairs (alphas, betas): tuples of length M with the exponents of
    z_b and zbar_b. Values are EC. Supports +, *, scalar multiply, d/dz_b,
    d/dzbar_b, conjugation, and numeric evaluation.
    """

    def __init__(self, M: int, terms: Mapping | None = None):
        self.M = M
        self.terms: dict = {}
        if terms:
            for k, c in terms.items():
                c = _ec(c)
                if c:
                    self.terms[k] = c

    @classmethod
    def zero(cls, M):
        return cls(M)

    @classmethod
    def const(cls, M, c):
        z = (0,) * M
        return cls(M, {(z, z): _ec(c)})

    @classmethod
    def var(cls, M, b, bar=False):
        al = [0] * M
        be = [0] * M
        (be if bar else al)[b - 1] = 1
        return cls(M, {(tuple(al), tuple(be)): EC(1)})

    def _add_term(self, key, c):
        cur = self.terms.get(key)
        tot = c + cur if cur is not None else c
        if tot:
            self.terms[key] = tot
        elif cur is not None:
            del self.terms[key]

    def __add__(self, o):
        out = ZPoly(self.M, self.terms)
        for k, c in o.terms.items():
            out._add_term(k, c)
        return out

    def __sub__(self, o):
        return self + o.scale(EC(-1))

    def scale(self, c):
        c = _ec(c)
        if not c:
            return ZPoly(self.M)
        return ZPoly(self.M, {k: v * c for k, v in self.terms.items()})

    def __mul__(self, o):
        out = ZPoly(self.M)
        for (a1, b1), c1 in self.terms.items():
            for (a2, b2), c2 in o.terms.items():
                key = (
                    tuple(x + y for x, y in zip(a1, a2)),
                    tuple(x + y for x, y in zip(b1, b2)),
                )
                out._add_term(key, c1 * c2)
        return out

    def diff(self, b: int, bar: bool = False):
        out = ZPoly(self.M)
        i = b - 1
        for (al, be), c in self.terms.items():
            e = (be if bar else al)[i]
            if e == 0:
                continue
            al2, be2 = list(al), list(be)
            (be2 if bar else al2)[i] = e - 1
            out._add_term((tuple(al2), tuple(be2)), c * e)
        return out

    def conj(self):
        return ZPoly(self.M, {(be, al): c.conj() for (al, be), c in self.terms.items()})

    def __eq__(self, o):
        return self.M == o.M and self.terms == o.terms

    def is_zero(self):
        return not self.terms

    def eval(self, z: dict[int, complex]) -> complex:
        out = 0j
        for (al, be), c in self.terms.items():
            val = c.to_complex()
            for i, e in enumerate(al):
                if e:
                    val *= z.get(i + 1, 0j) ** e
            for i, e in enumerate(be):
                if e:
                    val *= z.get(i + 1, 0j).conjugate() ** e
            out += val
        return out


def oracle_commutator(X: dict[int, ZPoly], Y: dict[int, ZPoly], M: int) -> dict[int, ZPoly]:
    """[X, Y] = DX[Y] - DY[X] computed directly from component polynomials.

    ``X[a]`` is the z_a-component; zbar-components follow by conjugation
    (conjugate-closed real vector fields). Returns the z_a-components of the
    commutator.
    """

    def directional(A: dict[int, ZPoly], B: dict[int, ZPoly]) -> dict[int, ZPoly]:
        out = {}
        for a, comp in A.items():
            acc = ZPoly(M)
            for b in range(1, M + 1):
                Bb = B.get(b, ZPoly(M))
                d1 = comp.diff(b, bar=False)
                if not d1.is_zero() and not Bb.is_zero():
                    acc = acc + d1 * Bb
                d2 = comp.diff(b, bar=True)
                if not d2.is_zero() and not Bb.is_zero():
                    acc = acc + d2 * Bb.conj()
            if not acc.is_zero():
                out[a] = acc
        return out

    DXY = directional(X, Y)
    DYX = directional(Y, X)
    out = {}
    for a in set(DXY) | set(DYX):
        p = DXY.get(a, ZPoly(M)) - DYX.get(a, ZPoly(M))
        if not p.is_zero():
            out[a] = p
    return out
