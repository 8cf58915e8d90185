"""Vector fields with small-divisor denominators.

Past the first resonant stage the normal form divides coefficients by
frequency combinations evaluated at the actions.  A term of such a field is a
polynomial term together with a descriptor listing the combinations sitting
underneath, stored as index vectors rather than numbers so the field can be
evaluated at any state and audited structurally.

Descriptors keep three sections:

``h2``
    vectors whose divisor uses the quadratic frequency corrections only;
    each entry lowers the term's order by one.
``h4``
    vectors divided at the fully corrected frequencies, also weight one.
``kk``
    corrected-frequency divisors produced by second derivatives of the
    frequency map; each entry lowers the order by two.

Every divisor vector is stored in reduced zero-momentum form: actions
dropped, conjugate pairs cancelled, total momentum balanced by an explicit
entry, and the lexicographically smaller of the vector/conjugate pair kept
(conjugation flips the combination's sign, which moves into the coefficient).
The storage form of a divisor is therefore independent of the route that
produced it, and cancellations between routes happen at the level of keys.
"""

from __future__ import annotations

from collections import Counter
from fractions import Fraction
from typing import Dict, List, Mapping, Optional, Tuple, Union

from ..core import ComplexSeq, canonicalize, delta_sum, zeta_product
from ..divisors import FreqContext, big_omega, irr, kappa
from .poly import (
    ANTI,
    DIAG,
    QC,
    IndexVector,
    PolyVF,
    TermKey,
    canonical_from_exponents,
    commutator,
    key_exponents,
    multiplicity,
)

__all__ = [
    "Divisor",
    "DivisorRefusal",
    "RKey",
    "RationalVF",
    "conj_index_vector",
    "di_functional",
    "divisor_zero_form",
    "evaluate_exact",
    "evaluate_vf",
    "is_rational_normal_form",
    "key_order",
    "omega4_hessian",
    "rational_commutator",
    "validate_class",
]

Divisor = IndexVector
Section = Tuple[Divisor, ...]
RKey = Tuple[int, str, IndexVector, Section, Section, Section]

_F0 = Fraction(0)


class DivisorRefusal(ArithmeticError):
    """A divisor needed at a state is too small to trust.

    Carries the offending index vector as a witness together with the
    correction order it was evaluated at, its value, and the threshold that
    it failed.
    """

    def __init__(self, vector: Divisor, order: int, value: float, threshold: float):
        self.vector = vector
        self.order = order
        self.value = value
        self.threshold = threshold
        super().__init__(
            f"divisor {vector} at correction order {order} evaluates to "
            f"{value:.6e}, inside the refusal threshold {threshold:.6e}"
        )


def conj_index_vector(jvec: IndexVector) -> IndexVector:
    """Canonical conjugate of an index vector (all deltas flipped)."""
    return canonicalize(tuple((-delta, m) for delta, m in jvec))


def divisor_zero_form(vector: IndexVector) -> Tuple[Optional[Divisor], int]:
    """Canonical storage form ``(w, sign)`` of a divisor index vector.

    The frequency combination of a vector only depends on its irreducible
    part, and conjugating the vector flips the combination's sign.  The
    storage form is the irreducible zero-momentum reduction (momentum
    balanced by an explicit entry), flipped to the lexicographically smaller
    of itself and its conjugate.  The returned ``sign`` satisfies

        combination(input) == sign * combination(stored form).

    Vectors whose combination vanishes identically reduce to the empty
    vector; those come back as ``(None, 0)``.
    """
    v = canonicalize(vector)
    sign = 1
    d = delta_sum(v)
    if d < 0:
        v = conj_index_vector(v)
        d = -d
        sign = -1
    red = irr(v, d)
    rem = delta_sum(red)
    while rem != 0:
        extra = (-1, rem) if rem > 0 else (1, -rem)
        red = irr(canonicalize(red + (extra,)), 0)
        rem = delta_sum(red)
    if not red:
        return None, 0
    flip = conj_index_vector(red)
    if flip < red:
        return flip, -sign
    return red, sign


def _normalize_rkey(key: RKey) -> RKey:
    a, kind, j, h2, h4, kk = key
    return (a, kind, j, tuple(sorted(h2)), tuple(sorted(h4)), tuple(sorted(kk)))


def key_order(key: RKey) -> int:
    """Order bookkeeping: indices minus single-weight minus twice the
    double-weight divisors."""
    return len(key[2]) - len(key[3]) - len(key[4]) - 2 * len(key[5])


class RationalVF:
    """Conjugation-closed vector field whose terms carry divisor descriptors.

    Terms map ``(a, kind, jvec, h2, h4, kk)`` to an exact coefficient; the
    stored component is the usual single-sided one divided by the product of
    the divisor values.  Zero coefficients are dropped and divisor sections
    are kept sorted, so equal fields compare equal as dictionaries.
    """

    __slots__ = ("terms",)

    def __init__(self, terms: Optional[Mapping[RKey, QC]] = None):
        clean: Dict[RKey, QC] = {}
        if terms:
            for key, c in terms.items():
                if c.is_zero():
                    continue
                key = _normalize_rkey(key)
                prev = clean.get(key)
                c = c if prev is None else prev + c
                if c.is_zero():
                    clean.pop(key, None)
                else:
                    clean[key] = c
        self.terms = clean

    @classmethod
    def from_poly(cls, p: PolyVF) -> "RationalVF":
        """Embed a polynomial field as a divisor-free rational one."""
        return cls({key + ((), (), ()): c for key, c in p.terms.items()})

    def to_poly(self) -> PolyVF:
        """Inverse of :meth:`from_poly`; raises if any term carries divisors."""
        out: Dict[TermKey, QC] = {}
        for key, c in self.terms.items():
            if key[3] or key[4] or key[5]:
                raise ValueError(f"term {key} carries divisors")
            out[key[:3]] = c
        return PolyVF(out)

    # -- algebra ---------------------------------------------------------

    def __add__(self, other: "RationalVF") -> "RationalVF":
        out = dict(self.terms)
        for key, c in other.terms.items():
            prev = out.get(key)
            out[key] = c if prev is None else prev + c
        return RationalVF(out)

    def __sub__(self, other: "RationalVF") -> "RationalVF":
        return self + other.scale(QC(-1))

    def scale(self, factor) -> "RationalVF":
        if not isinstance(factor, QC):
            factor = QC(factor)
        return RationalVF({key: c * factor for key, c in self.terms.items()})

    def is_zero(self) -> bool:
        return not self.terms

    def __eq__(self, other) -> bool:
        return isinstance(other, RationalVF) and self.terms == other.terms

    # -- structure -------------------------------------------------------

    def orders(self) -> set:
        return {key_order(key) for key in self.terms}

    def select_order(self, l: int) -> "RationalVF":
        return RationalVF({k: c for k, c in self.terms.items() if key_order(k) == l})

    def max_mode(self) -> int:
        best = 0
        for a, _, j, h2, h4, kk in self.terms:
            best = max(best, a, max((m for _, m in j), default=0))
            for v in h2 + h4 + kk:
                best = max(best, max(m for _, m in v))
        return best

    def linf_norm(self) -> float:
        """Largest per-ordering coefficient magnitude, divisors ignored."""
        best = 0.0
        for key, c in self.terms.items():
            best = max(best, abs(c) / multiplicity(key[2]))
        return best

    def is_reversible_parity(self) -> bool:
        return all(c.re == 0 for c in self.terms.values())

    def is_symmetric_parity(self) -> bool:
        return all(c.im == 0 for c in self.terms.values())

    def evaluate(self, z: ComplexSeq, ctx: Optional[FreqContext] = None) -> Dict[int, complex]:
        return evaluate_vf(self, z, ctx)

    def __repr__(self) -> str:
        return f"RationalVF({len(self.terms)} terms, orders {sorted(self.orders())})"


AnyVF = Union[PolyVF, RationalVF]


def _as_rational(q: AnyVF) -> RationalVF:
    return RationalVF.from_poly(q) if isinstance(q, PolyVF) else q


# ---------------------------------------------------------------------------
# class membership

def validate_class(
    vf: AnyVF,
    N: int,
    weight=None,
    strict_control: bool = False,
) -> List[str]:
    """Check the structural constraints of the divisor-carrying class.

    Returns a list of human-readable violations (empty means the field is a
    member).  Checks per term: momentum matches the kind, field and index
    modes inside the cutoff, at least two indices once divisors appear, each
    divisor vector in reduced flip-canonical form with at most one entry more
    than the index vector, and the divisor-weight control condition over the
    single-weight sections.  ``strict_control`` drops the largest index mode
    from the right-hand side, the stronger variant the last solver stage
    needs on its inputs.  A Gevrey ``weight`` swaps the product condition for
    the corresponding sum condition with exponent ``theta``.
    """
    vf = _as_rational(vf)
    bad: List[str] = []
    for key in vf.terms:
        a, kind, j, h2, h4, kk = key
        where = f"term {key}"
        if kind == DIAG:
            if delta_sum(j) != 0:
                bad.append(f"{where}: diag term with momentum {delta_sum(j)}")
        elif kind == ANTI:
            if delta_sum(j) != a:
                bad.append(f"{where}: anti term with momentum {delta_sum(j)} != {a}")
        else:
            bad.append(f"{where}: unknown kind {kind!r}")
            continue
        if not 1 <= a <= N:
            bad.append(f"{where}: field mode {a} outside 1..{N}")
        if any(m > N for _, m in j):
            bad.append(f"{where}: index mode beyond cutoff {N}")
        divs = h2 + h4 + kk
        if not divs:
            continue
        if len(j) < 2:
            bad.append(f"{where}: divisor-carrying term needs at least 2 indices")
        for v in divs:
            if delta_sum(v) != 0:
                bad.append(f"{where}: divisor {v} has momentum {delta_sum(v)}")
            elif irr(v, 0) != v:
                bad.append(f"{where}: divisor {v} is not irreducible")
            if not 2 <= len(v) <= len(j) + 1:
                bad.append(f"{where}: divisor {v} has size {len(v)}, allowed 2..{len(j) + 1}")
            if any(m > N for _, m in v):
                bad.append(f"{where}: divisor {v} has a mode beyond cutoff {N}")
            if conj_index_vector(v) < v:
                bad.append(f"{where}: divisor {v} is not flip-canonical")
        hvec = h2 + h4
        if hvec:
            modes = sorted((m for _, m in j), reverse=True)
            rhs_modes = modes[1:] if strict_control else modes
            if weight is not None and weight.kind == "gevrey":
                lhs_s = sum(kappa(v) ** weight.theta for v in hvec)
                rhs_s = sum(m ** weight.theta for m in rhs_modes)
                if lhs_s > rhs_s + 1e-9:
                    bad.append(
                        f"{where}: weight-sum control fails ({lhs_s:.6f} > {rhs_s:.6f})"
                    )
            else:
                lhs = 1
                for v in hvec:
                    lhs *= kappa(v)
                rhs = 1
                for m in rhs_modes:
                    rhs *= m
                if lhs > rhs:
                    bad.append(f"{where}: weight-product control fails ({lhs} > {rhs})")
    return bad


# ---------------------------------------------------------------------------
# evaluation

def _divisor_value(v: Divisor, order: int, ctx: FreqContext, cache: dict) -> float:
    key = (v, order)
    val = cache.get(key)
    if val is None:
        val = big_omega(v, ctx, order)
        cache[key] = val
    return val


def evaluate_vf(
    q: AnyVF,
    z: ComplexSeq,
    ctx: Optional[FreqContext] = None,
) -> Dict[int, complex]:
    """Component values ``d/dz_a`` of a field at a state.

    Divisors are evaluated at the state's actions.  Any divisor actually
    needed (terms whose numerator vanishes at the state are skipped) whose
    magnitude falls below ``1e-12 * ||z||^2``, floored at 1e-300, aborts with
    :class:`DivisorRefusal` naming the vector.
    """
    if isinstance(q, PolyVF):
        return q.evaluate(z)
    if ctx is None:
        ctx = FreqContext.from_seq(z, z.truncation)
    threshold = max(1e-12 * z.norm2_unweighted(), 1e-300)
    cache: dict = {}
    out: Dict[int, complex] = {}
    for key, c in q.terms.items():
        a, kind, j, h2, h4, kk = key
        za = z[a]
        pref = za if kind == DIAG else za.conjugate()
        if pref == 0:
            continue
        num = c.to_complex() * pref * zeta_product(j, z)
        if num == 0:
            continue
        denom = 1.0
        for order, sec in ((2, h2), (4, h4), (4, kk)):
            for v in sec:
                val = _divisor_value(v, order, ctx, cache)
                if abs(val) < threshold:
                    raise DivisorRefusal(v, order, val, threshold)
                denom *= val
        out[a] = out.get(a, 0j) + num / denom
    return out


def _exact_omega4(a: int, acts: Mapping[int, Fraction], N: int) -> Fraction:
    Ia = acts.get(a, _F0)
    cross = _F0
    tail = _F0
    for d in range(1, N + 1):
        if d == a:
            continue
        Id = acts.get(d, _F0)
        if not Id:
            continue
        den = Fraction(d * d - a * a)
        cross += (Fraction(3, d) + d / den) * Id
        tail += Id * Id / den
    return Fraction(-27, 64 * a) * Ia * Ia - cross * Ia / 8 + Fraction(a, 16) * tail


def _zeta_exact(j: IndexVector, z: Mapping[int, QC]) -> QC:
    out = QC(1)
    for delta, m in j:
        v = z.get(m)
        if v is None:
            return QC()
        if delta == 1:
            out = out * v * v
        elif delta == -1:
            vb = v.conj()
            out = out * vb * vb
        else:
            out = out * v * v.conj()
    return out


def evaluate_exact(q: AnyVF, z: Mapping[int, QC], N: int) -> Dict[int, QC]:
    """Exact-arithmetic component values at a Gaussian-rational state.

    Companion to :func:`evaluate_vf` for cross-checks; divisors that vanish
    exactly raise ``ZeroDivisionError`` instead of going through the float
    refusal path.
    """
    q = _as_rational(q)
    acts = {m: (v * v.conj()).re for m, v in z.items() if not v.is_zero()}
    w2: Dict[int, Fraction] = {}
    w4: Dict[int, Fraction] = {}

    def freq(m: int, order: int) -> Fraction:
        val = w2.get(m)
        if val is None:
            val = w2[m] = acts.get(m, _F0) / 4 if m <= N else _F0
        if order == 2:
            return val
        val4 = w4.get(m)
        if val4 is None:
            val4 = w4[m] = _exact_omega4(m, acts, N)
        return val + val4

    dcache: Dict[Tuple[Divisor, int], Fraction] = {}

    def divisor(v: Divisor, order: int) -> Fraction:
        key = (v, order)
        val = dcache.get(key)
        if val is None:
            val = 2 * sum((delta * freq(m, order) for delta, m in v), _F0)
            dcache[key] = val
        return val

    out: Dict[int, QC] = {}
    for key, c in q.terms.items():
        a, kind, j, h2, h4, kk = key
        za = z.get(a)
        if za is None or za.is_zero():
            continue
        pref = za if kind == DIAG else za.conj()
        num = c * pref * _zeta_exact(j, z)
        if num.is_zero():
            continue
        den = Fraction(1)
        for order, sec in ((2, h2), (4, h4), (4, kk)):
            for v in sec:
                val = divisor(v, order)
                if val == 0:
                    raise ZeroDivisionError(f"divisor {v} vanishes exactly at this state")
                den *= val
        term = num * QC(1 / den)
        prev = out.get(a)
        out[a] = term if prev is None else prev + term
    return out


def di_functional(
    a: int,
    chi: AnyVF,
    z: ComplexSeq,
    ctx: Optional[FreqContext] = None,
) -> complex:
    """Derivative of the action ``I_a`` along a field, evaluated at a state.

    For conjugation-closed fields this is ``2 Re(conj(z_a) X_a)``; it comes
    back as a complex number whose imaginary part is zero up to rounding.
    """
    comps = evaluate_vf(chi, z, ctx)
    x = comps.get(a, 0j)
    za = z[a]
    return za.conjugate() * x + za * x.conjugate()


def is_rational_normal_form(q: AnyVF) -> bool:
    """Whether a field is an action-preserving reversible normal form.

    Requires every term diagonal with a purely imaginary coefficient and,
    for each term, the conjugate-index partner (same divisors) present with
    an equal coefficient.  Such fields move only the angles, so their flow
    fixes every action.
    """
    q = _as_rational(q)
    for key, c in q.terms.items():
        a, kind, j = key[:3]
        if kind != DIAG or c.re != 0:
            return False
        partner = (a, DIAG, conj_index_vector(j)) + key[3:]
        if q.terms.get(partner) != c:
            return False
    return True


# ---------------------------------------------------------------------------
# commutator

def _merge_sections(d1: Tuple[Section, Section, Section], d2: Tuple[Section, Section, Section]):
    return tuple(tuple(sorted(s1 + s2)) for s1, s2 in zip(d1, d2))


def _racc(acc: Dict[RKey, QC], key: RKey, c: QC) -> None:
    prev = acc.get(key)
    acc[key] = c if prev is None else prev + c


def _numerator_part(acc: Dict[RKey, QC], x: RationalVF, y: RationalVF) -> None:
    # divisors are constants under numerator differentiation, so the bracket
    # restricted to numerators is the polynomial one per divisor-signature pair
    def grouped(q: RationalVF) -> Dict[tuple, Dict[TermKey, QC]]:
        out: Dict[tuple, Dict[TermKey, QC]] = {}
        for key, c in q.terms.items():
            out.setdefault(key[3:], {})[key[:3]] = c
        return out

    for dx, tx in grouped(x).items():
        px = PolyVF(tx)
        for dy, ty in grouped(y).items():
            pc = commutator(px, PolyVF(ty))
            if pc.is_zero():
                continue
            dd = _merge_sections(dx, dy)
            for k, c in pc.terms.items():
                _racc(acc, k + dd, c)


_LIN_CACHE: Dict[Divisor, Tuple[Tuple[int, Fraction], ...]] = {}
_QUAD_CACHE: Dict[Tuple[Divisor, int], Tuple[Tuple[int, int, Fraction], ...]] = {}


def _linear_derivative(v: Divisor) -> Tuple[Tuple[int, Fraction], ...]:
    """Action gradient of the quadratic-frequency combination of ``v``."""
    out = _LIN_CACHE.get(v)
    if out is None:
        grad: Dict[int, Fraction] = {}
        for delta, m in v:
            if delta:
                grad[m] = grad.get(m, _F0) + Fraction(delta, 2)
        out = tuple(sorted((m, g) for m, g in grad.items() if g))
        _LIN_CACHE[v] = out
    return out


_HESS_CACHE: Dict[Tuple[int, int], Tuple[Tuple[int, int, Fraction], ...]] = {}


def omega4_hessian(m: int, N: int) -> Tuple[Tuple[int, int, Fraction], ...]:
    """Constant action Hessian of the quartic frequency correction at mode m.

    The correction is exactly quadratic in the actions, so second derivatives
    are numbers; entries come back as ``(d, e, value)`` with both orders of
    each off-diagonal pair present.
    """
    if not 1 <= m <= N:
        raise ValueError(f"mode {m} outside cutoff 1..{N}")
    out = _HESS_CACHE.get((m, N))
    if out is None:
        entries: List[Tuple[int, int, Fraction]] = [(m, m, Fraction(-27, 32 * m))]
        for e in range(1, N + 1):
            if e == m:
                continue
            cross = -(Fraction(3, e) + Fraction(e, e * e - m * m)) / 8
            entries.append((m, e, cross))
            entries.append((e, m, cross))
            entries.append((e, e, Fraction(m, 8 * (e * e - m * m))))
        out = tuple(sorted(entries))
        _HESS_CACHE[(m, N)] = out
    return out


def _quadratic_derivative(v: Divisor, N: int) -> Tuple[Tuple[int, int, Fraction], ...]:
    """Action Hessian of the corrected-minus-quadratic combination of ``v``."""
    out = _QUAD_CACHE.get((v, N))
    if out is None:
        hess: Dict[Tuple[int, int], Fraction] = {}
        for delta, m in v:
            if not delta:
                continue
            f = Fraction(2 * delta)
            for d, e, val in omega4_hessian(m, N):
                cur = hess.get((d, e), _F0) + f * val
                hess[(d, e)] = cur
        out = tuple(sorted((d, e, c) for (d, e), c in hess.items() if c))
        _QUAD_CACHE[(v, N)] = out
    return out


def _divisor_part(acc: Dict[RKey, QC], xf: RationalVF, yf: RationalVF, sign: int, N: int) -> None:
    # derivative of x's divisors along y; the extra divisor copy goes to h2
    # when a quadratic-frequency divisor was hit, to h4 for the gradient part
    # of a corrected one, and to kk for its Hessian part (which also brings
    # an action factor into the numerator)
    ymode: Dict[int, list] = {}
    for key, c in yf.terms.items():
        ymode.setdefault(key[0], []).append((c, key_exponents(key[:3]), key[3:]))
    if not ymode:
        return

    def emit(a, ex, cx_fac, d, actors, extra_actions, x_sections):
        # contract the action-derivative pieces of every actor at the hit mode
        for cy, ey, dy in actors:
            sections = _merge_sections(x_sections, dy)
            for pc, swap, bar in ((cy, False, True), (cy.conj(), True, False)):
                merged: Dict[int, list] = {m: [e[0], e[1]] for m, e in ex.items()}
                for m, e in ey.items():
                    t = merged.setdefault(m, [0, 0])
                    if swap:
                        t[0] += e[1]
                        t[1] += e[0]
                    else:
                        t[0] += e[0]
                        t[1] += e[1]
                t = merged.setdefault(d, [0, 0])
                if bar:
                    t[1] += 1
                else:
                    t[0] += 1
                for m in extra_actions:
                    t = merged.setdefault(m, [0, 0])
                    t[0] += 1
                    t[1] += 1
                newkey = canonical_from_exponents(
                    a,
                    {m: e[0] for m, e in merged.items()},
                    {m: e[1] for m, e in merged.items()},
                )
                _racc(acc, newkey + sections, cx_fac * pc)

    for key, cx in xf.terms.items():
        a, kind, j, h2, h4, kk = key
        ex = key_exponents(key[:3])
        for sec_idx, sec in ((0, h2), (1, h4), (2, kk)):
            for v, count in Counter(sec).items():
                target = 0 if sec_idx == 0 else 1
                routed = tuple(
                    s + (v,) if i == target else s for i, s in enumerate((h2, h4, kk))
                )
                for d, lam in _linear_derivative(v):
                    actors = ymode.get(d)
                    if not actors:
                        continue
                    fac = cx * QC(Fraction(-count * sign) * lam)
                    emit(a, ex, fac, d, actors, (), routed)
                if sec_idx == 0:
                    continue
                routed_q = (h2, h4, kk + (v,))
                for d, e, cde in _quadratic_derivative(v, N):
                    actors = ymode.get(d)
                    if not actors:
                        continue
                    fac = cx * QC(Fraction(-count * sign) * cde)
                    emit(a, ex, fac, d, actors, (e,), routed_q)


def rational_commutator(x: AnyVF, y: AnyVF, N: int) -> RationalVF:
    """Bracket ``[X, Y] = DX[Y] - DY[X]`` on divisor-carrying fields.

    Splits into the numerator part (the polynomial bracket per pair of
    divisor signatures, signatures concatenated) and the divisor part, where
    the chain rule differentiates a divisor along the other field and the
    result picks up one extra copy of the hit divisor.  The cutoff bounds the
    Hessian sums of the corrected frequencies.
    """
    x = _as_rational(x)
    y = _as_rational(y)
    acc: Dict[RKey, QC] = {}
    _numerator_part(acc, x, y)
    _divisor_part(acc, x, y, +1, N)
    _divisor_part(acc, y, x, -1, N)
    return RationalVF(acc)
