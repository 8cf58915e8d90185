"""Monte Carlo estimation of non-resonant measure and divisor tails.

Initial data is drawn from a Gaussian ensemble written in action-angle form:
the actions are independent exponentials whose rates make each weighted
coordinate unit scale (rate ``m**(2s)`` for Sobolev weights, rate
``exp(2 rho m**theta) * m**2`` for Gevrey weights), the angles are uniform,
and the draw is conditioned by rejection on a weighted action ball
(``sum_m m**(2s-2) I_m <= radius`` and ``sum_m exp(2 rho m**theta) I_m <=
radius`` respectively). On top of the sampler sit two estimators: the
fraction of sampled states that pass the non-resonance test after scaling,
and tail probabilities of a single divisor falling under its threshold.
Proportions carry Wilson score intervals.

Sampling is chunked, and every chunk is generated from its own generator
keyed by ``(seed, chunk index)``, so results are reproducible per seed,
independent of evaluation order, and a shorter run is a prefix of a longer
one with the same seed.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from .core import ComplexSeq, WeightSpec, canonicalize, delta_sum
from .divisors import (
    FreqContext,
    NonResonanceParams,
    _kappa_factor,
    big_omega,
    irr,
    is_nonresonant,
    kappa,
)

__all__ = [
    "DivisorTailEstimate",
    "MeasureEstimate",
    "MeasureSpec",
    "SampleBatch",
    "corrected_divisor",
    "divisor_tail",
    "estimate_measure",
    "sample_actions",
    "wilson_interval",
]

_CHUNK = 4096
# attempts consumed before the rejection-rate guard may fire
_GUARD_FLOOR = 32768

_Z95 = 1.959963984540054


@dataclass(frozen=True)
class MeasureSpec:
    """Sampling half of a Monte Carlo run: ensemble, size, and seed.

    ``truncation`` is the largest excited mode. ``ball_radius`` bounds the
    weighted action sum used by the rejection step; the default matches the
    normalization of the ensemble's density.
    """

    weight: WeightSpec
    truncation: int
    sample_count: int
    seed: int
    ball_radius: float = 0.5

    def __post_init__(self) -> None:
        if self.truncation < 1:
            raise ValueError("truncation must be >= 1")
        if self.sample_count < 1:
            raise ValueError("sample_count must be >= 1")
        if not isinstance(self.seed, int) or self.seed < 0:
            raise ValueError("seed must be a nonnegative integer")
        if not (math.isfinite(self.ball_radius) and self.ball_radius > 0):
            raise ValueError("ball_radius must be finite and > 0")


def _ball_coefficients(w: WeightSpec, modes: np.ndarray) -> np.ndarray:
    if w.kind == "sobolev":
        return modes ** (2.0 * w.s - 2.0)
    return np.exp(2.0 * w.rho * modes**w.theta)


@dataclass(frozen=True)
class SampleBatch:
    """Accepted draws: row ``i``, column ``m-1`` holds ``I_m`` (or a phase)."""

    actions: np.ndarray
    phases: np.ndarray
    spec: MeasureSpec
    attempts: int

    def __len__(self) -> int:
        return self.actions.shape[0]

    @property
    def acceptance_rate(self) -> float:
        return len(self) / self.attempts

    def state(self, i: int, eps: float = 1.0) -> ComplexSeq:
        """Complex state of sample ``i`` scaled by ``eps``."""
        M = self.spec.truncation
        amp = eps * np.sqrt(self.actions[i])
        data = {m: complex(amp[m - 1] * np.exp(1j * self.phases[i, m - 1])) for m in range(1, M + 1)}
        return ComplexSeq(data, M)


def sample_actions(spec: MeasureSpec) -> SampleBatch:
    """Draw ``spec.sample_count`` action/phase rows from the weighted ensemble.

    Rejection keeps only rows inside the ball; a rejection rate above 0.999
    (measured after a warm-up of attempts) is treated as a configuration
    error rather than looping forever.
    """
    M = spec.truncation
    modes = np.arange(1, M + 1, dtype=float)
    ball = _ball_coefficients(spec.weight, modes)
    rates = ball * modes**2
    acts: list[np.ndarray] = []
    phas: list[np.ndarray] = []
    accepted = 0
    attempts = 0
    chunk = 0
    while accepted < spec.sample_count:
        rng = np.random.default_rng(np.random.SeedSequence(entropy=spec.seed, spawn_key=(chunk,)))
        rows = rng.exponential(1.0, size=(_CHUNK, M)) / rates
        angles = rng.uniform(0.0, 2.0 * math.pi, size=(_CHUNK, M))
        keep = rows @ ball <= spec.ball_radius
        acts.append(rows[keep])
        phas.append(angles[keep])
        accepted += int(keep.sum())
        attempts += _CHUNK
        chunk += 1
        if attempts >= _GUARD_FLOOR and accepted < attempts * 1e-3:
            rej = 1.0 - accepted / attempts
            raise ValueError(
                f"ball-constraint rejection rate {rej:.6f} exceeds 0.999 "
                f"(radius {spec.ball_radius}, truncation {M}); the sampling spec is unusable"
            )
    actions = np.concatenate(acts)[: spec.sample_count]
    phases = np.concatenate(phas)[: spec.sample_count]
    return SampleBatch(actions, phases, spec, attempts)


def wilson_interval(successes: int, trials: int, z: float = _Z95) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion (default 95%)."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if not 0 <= successes <= trials:
        raise ValueError("successes must lie in [0, trials]")
    p = successes / trials
    denom = 1.0 + z * z / trials
    center = (p + z * z / (2 * trials)) / denom
    half = z * math.sqrt(p * (1.0 - p) / trials + z * z / (4.0 * trials * trials)) / denom
    # the score interval always contains the point estimate; keep that exact
    # under rounding
    return max(0.0, min(center - half, p)), min(1.0, max(center + half, p))


@dataclass(frozen=True)
class MeasureEstimate:
    """Fraction of sampled states that are non-resonant after scaling."""

    fraction: float
    ci_low: float
    ci_high: float
    samples: int
    seed: int
    gamma: float
    N: int
    r: int
    eps: float

    def record(self) -> dict:
        return {
            "gamma": self.gamma,
            "N": self.N,
            "r": self.r,
            "fraction": self.fraction,
            "ci_low": self.ci_low,
            "ci_high": self.ci_high,
            "samples": self.samples,
            "seed": self.seed,
        }


def estimate_measure(params: NonResonanceParams, spec: MeasureSpec, eps: float) -> MeasureEstimate:
    """Monte Carlo fraction of samples ``z`` with ``eps * z`` non-resonant.

    The fraction comes with a Wilson 95% interval. When ``eps`` violates
    ``eps**2 <= 2 gamma / ((r+1) N**(4r+2))`` the estimate is still computed,
    but the lower bound ``1 - lambda gamma`` on the true fraction is not
    guaranteed at that scale, so a warning is issued.
    """
    if not (math.isfinite(eps) and eps > 0):
        raise ValueError("eps must be finite and > 0")
    cap = 2.0 * params.gamma / ((params.r + 1) * float(params.N) ** (4 * params.r + 2))
    if eps * eps > cap:
        warnings.warn(
            f"eps^2 = {eps * eps:.3e} exceeds 2 gamma / ((r+1) N^(4r+2)) = {cap:.3e}; "
            "the non-resonant fraction bound does not apply at this scale",
            stacklevel=2,
        )
    batch = sample_actions(spec)
    hits = 0
    for i in range(len(batch)):
        if is_nonresonant(batch.state(i, eps), params).ok:
            hits += 1
    lo, hi = wilson_interval(hits, len(batch))
    return MeasureEstimate(
        fraction=hits / len(batch),
        ci_low=lo,
        ci_high=hi,
        samples=len(batch),
        seed=spec.seed,
        gamma=params.gamma,
        N=params.N,
        r=params.r,
        eps=eps,
    )


def _tail_only_correction(a: int, ctx: FreqContext, excluded: frozenset[int]) -> float:
    if a == 0:
        return 0.0
    af = float(a)
    total = 0.0
    for d, Id in ctx.actions.items():
        if d in excluded:
            continue
        total += Id * Id / (d * d - af * af)
    return af / 16.0 * total


def corrected_divisor(jvec: Iterable[tuple[int, int]], ctx: FreqContext) -> float:
    """Next-order divisor whose correction skips the vector's own actions.

    Each frequency correction is reduced to its pure tail sum, and the modes
    of the (irreducible part of the) index vector together with its momentum
    are excluded from that sum. The difference from the leading divisor is
    then independent of the actions at exactly those modes.
    """
    v = canonicalize(jvec)
    d = delta_sum(v)
    if d < 0:
        raise ValueError("momentum is negative; conjugate the index vector first")
    red = irr(v, d)
    if not red:
        return 0.0
    excluded = frozenset(a for _, a in red) | ({d} if d > 0 else frozenset())
    corr = sum(delta * _tail_only_correction(a, ctx, excluded) for delta, a in red)
    corr -= _tail_only_correction(d, ctx, excluded)
    return big_omega(v, ctx, 2) + 2.0 * corr


@dataclass(frozen=True)
class DivisorTailEstimate:
    """Tail probabilities of one divisor under the sampled ensemble.

    ``p_leading`` estimates how often the leading divisor falls at or below
    its threshold; ``p_corrected`` does the same for the corrected divisor
    against its larger threshold.
    """

    jvec: tuple[tuple[int, int], ...]
    p_leading: float
    p_corrected: float
    threshold_leading: float
    threshold_corrected: float
    samples: int
    seed: int
    gamma: float
    N: int
    r: int
    eps: float

    def record(self) -> dict:
        return {
            "j": [list(pair) for pair in self.jvec],
            "gamma": self.gamma,
            "N": self.N,
            "r": self.r,
            "p_leading": self.p_leading,
            "p_corrected": self.p_corrected,
            "threshold_leading": self.threshold_leading,
            "threshold_corrected": self.threshold_corrected,
            "samples": self.samples,
            "seed": self.seed,
        }


def divisor_tail(
    jvec: Iterable[tuple[int, int]],
    params: NonResonanceParams,
    spec: MeasureSpec,
    eps: float,
) -> DivisorTailEstimate:
    """Empirical probability that one divisor sits at or below its threshold.

    The leading divisor of the scaled actions is compared against
    ``gamma eps^2 N^(-4l-2) kf / 2`` and the corrected divisor against
    ``gamma eps^2 N^(-4l-2) max(kf, gamma eps^2)``, where ``kf`` is the
    weight's kappa factor. The index vector must be irreducible.
    """
    if not (math.isfinite(eps) and eps > 0):
        raise ValueError("eps must be finite and > 0")
    v = canonicalize(jvec)
    d = delta_sum(v)
    if d < 0:
        raise ValueError("momentum is negative; conjugate the index vector first")
    red = irr(v, d)
    if not red:
        raise ValueError("integrable index vector has no divisor tail")
    if red != v:
        raise ValueError("index vector is reducible; pass its irreducible part")
    l = len(v)
    kf = _kappa_factor(kappa(v), params.weight)
    scale = params.gamma * eps * eps * float(params.N) ** (-4 * l - 2)
    thr_leading = 0.5 * scale * kf
    thr_corrected = scale * max(kf, params.gamma * eps * eps)
    batch = sample_actions(spec)
    e2 = eps * eps
    M = spec.truncation
    hits2 = 0
    hits4 = 0
    for i in range(len(batch)):
        row = batch.actions[i]
        ctx = FreqContext({m: e2 * row[m - 1] for m in range(1, M + 1)}, M)
        if abs(big_omega(v, ctx, 2)) <= thr_leading:
            hits2 += 1
        if abs(corrected_divisor(v, ctx)) <= thr_corrected:
            hits4 += 1
    n = len(batch)
    return DivisorTailEstimate(
        jvec=v,
        p_leading=hits2 / n,
        p_corrected=hits4 / n,
        threshold_leading=thr_leading,
        threshold_corrected=thr_corrected,
        samples=n,
        seed=spec.seed,
        gamma=params.gamma,
        N=params.N,
        r=params.r,
        eps=eps,
    )
