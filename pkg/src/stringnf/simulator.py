"""Spectral Galerkin time integration of the quasilinear string.

The truncated system for real mode pairs ``(u_a, v_a)``, ``1 <= a <= M``, is

    du_a/dt = v_a,
    dv_a/dt = -(1 + S(u)) a^2 u_a,      S(u) = sum_b b^2 u_b^2,

a bank of oscillators coupled solely through the scalar stiffness ``1 + S``.
Two steppers are provided. ``strang_split`` composes two half steps of the
exactly solvable frozen-stiffness rotation: the first half freezes the
stiffness at the step's initial state, the second freezes it at the final
state (resolved by a short fixed-point iteration), which makes the step
symmetric and time reversible. ``rk4`` is the classical fourth-order scheme.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .core import WeightSpec
from .transforms import UVState, uv_to_psi

__all__ = [
    "SimConfig",
    "Trajectory",
    "SimulationBlowup",
    "rhs_uv",
    "energy",
    "actions",
    "simulate",
    "trajectory_to_csv",
    "trajectory_summary",
]


class SimulationBlowup(RuntimeError):
    """Raised when the state stops being finite; carries the simulation time."""

    def __init__(self, time: float, message: str = "") -> None:
        self.time = time
        super().__init__(message or f"state became non-finite at t={time:.6g}")


@dataclass(frozen=True)
class SimConfig:
    """Integration settings.

    ``dt`` must resolve the fastest linear mode; the guard ``dt <= 0.1 / M``
    is enforced unless ``allow_large_dt`` is set. ``record_stride`` thins the
    stored samples. ``linear_only`` freezes the stiffness at 1 (debugging aid:
    the split scheme then conserves every action to rounding).
    """

    dt: float
    T: float
    scheme: str = "strang_split"
    M: int = 16
    record_stride: int = 1
    weight: WeightSpec = field(default_factory=WeightSpec)
    record_states: bool = False
    linear_only: bool = False
    allow_large_dt: bool = False

    def __post_init__(self) -> None:
        if self.dt <= 0:
            raise ValueError("dt must be > 0")
        if self.T < 0:
            raise ValueError("T must be >= 0")
        if self.scheme not in ("strang_split", "rk4"):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.M < 1:
            raise ValueError("M must be >= 1")
        if self.record_stride < 1:
            raise ValueError("record_stride must be >= 1")
        if not self.allow_large_dt and self.dt > 0.1 / self.M:
            raise ValueError(
                f"dt={self.dt} too large for M={self.M} (need dt <= {0.1 / self.M:.3g}; "
                "set allow_large_dt to override)"
            )


@dataclass
class Trajectory:
    """Recorded samples of one run. Arrays share the leading sample axis."""

    times: np.ndarray
    energy: np.ndarray
    actions: np.ndarray  # shape (n_samples, M), column a-1 holds I_a
    norm_w: np.ndarray  # weighted norm of the mode amplitudes psi
    sup_drift: np.ndarray  # sup_a w(a)^2 |I_a(t) - I_a(0)|
    config: SimConfig
    states: Optional[list[UVState]] = None

    @property
    def M(self) -> int:
        return self.actions.shape[1]


def _to_arrays(state: UVState, M: int) -> tuple[np.ndarray, np.ndarray]:
    u = np.zeros(M)
    v = np.zeros(M)
    for a, x in state.u.items():
        if a > M:
            raise ValueError(f"initial data has mode {a} beyond truncation {M}")
        u[a - 1] = x
    for a, x in state.v.items():
        if a > M:
            raise ValueError(f"initial data has mode {a} beyond truncation {M}")
        v[a - 1] = x
    return u, v


def _to_state(u: np.ndarray, v: np.ndarray) -> UVState:
    M = len(u)
    return UVState(
        {a + 1: float(u[a]) for a in range(M) if u[a] != 0.0},
        {a + 1: float(v[a]) for a in range(M) if v[a] != 0.0},
        M,
    )


def rhs_uv(state: UVState) -> tuple[dict[int, float], dict[int, float]]:
    """Right-hand side in the original variables, returned as sparse maps."""
    slope2 = sum(b * b * x * x for b, x in state.u.items())
    du = dict(state.v)
    stiff = 1.0 + slope2
    dv = {a: -stiff * a * a * x for a, x in state.u.items()}
    return du, dv


def energy(state: UVState) -> float:
    """Conserved energy ``(1/2)|v|^2 + (1/2) S + (1/4) S^2`` with ``S = sum b^2 u_b^2``."""
    S = sum(b * b * x * x for b, x in state.u.items())
    kin = sum(x * x for x in state.v.values())
    return 0.5 * kin + 0.5 * S + 0.25 * S * S


def actions(state: UVState) -> dict[int, float]:
    """Mode actions ``I_a = |psi_a|^2 = (a u_a^2 + v_a^2 / a) / 2`` for all modes up to M."""
    psi = uv_to_psi(state)
    return {a: psi.seq.action(a) for a in range(1, state.truncation + 1)}


# ---------------------------------------------------------------------------
# steppers on packed arrays


def _rotate(u: np.ndarray, v: np.ndarray, omega: np.ndarray, h: float) -> tuple[np.ndarray, np.ndarray]:
    # exact flow of  u' = v,  v' = -omega^2 u  over time h
    th = omega * h
    c = np.cos(th)
    s = np.sin(th)
    return c * u + (s / omega) * v, -omega * s * u + c * v


def _slope2(u: np.ndarray, a2: np.ndarray) -> float:
    return float(a2 @ (u * u))


def _step_strang(
    u: np.ndarray,
    v: np.ndarray,
    dt: float,
    a1: np.ndarray,
    a2: np.ndarray,
    linear_only: bool,
) -> tuple[np.ndarray, np.ndarray]:
    if linear_only:
        return _rotate(u, v, a1, dt)
    c_left = 1.0 + _slope2(u, a2)
    uh, vh = _rotate(u, v, a1 * math.sqrt(c_left), 0.5 * dt)
    # second half freezes the stiffness at the step's end state
    c = 1.0 + _slope2(uh, a2)
    for _ in range(12):
        un, vn = _rotate(uh, vh, a1 * math.sqrt(c), 0.5 * dt)
        c_new = 1.0 + _slope2(un, a2)
        if abs(c_new - c) <= 1e-15 * c:
            c = c_new
            break
        c = c_new
    return _rotate(uh, vh, a1 * math.sqrt(c), 0.5 * dt)


def _step_rk4(
    u: np.ndarray,
    v: np.ndarray,
    dt: float,
    a1: np.ndarray,
    a2: np.ndarray,
    linear_only: bool,
) -> tuple[np.ndarray, np.ndarray]:
    def f(uu: np.ndarray, vv: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        stiff = 1.0 if linear_only else 1.0 + _slope2(uu, a2)
        return vv, -stiff * a2 * uu

    k1u, k1v = f(u, v)
    k2u, k2v = f(u + 0.5 * dt * k1u, v + 0.5 * dt * k1v)
    k3u, k3v = f(u + 0.5 * dt * k2u, v + 0.5 * dt * k2v)
    k4u, k4v = f(u + dt * k3u, v + dt * k3v)
    un = u + dt / 6.0 * (k1u + 2 * k2u + 2 * k3u + k4u)
    vn = v + dt / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v)
    return un, vn


def simulate(initial: UVState, config: SimConfig) -> Trajectory:
    """Integrate from ``initial`` over ``[0, T]`` and record samples.

    ``T`` is rounded to a whole number of steps. ``T = 0`` records the single
    initial sample. A non-finite state aborts with :class:`SimulationBlowup`
    stamped with the simulation time.
    """
    M = config.M
    u, v = _to_arrays(initial, M)
    a1 = np.arange(1, M + 1, dtype=float)
    a2 = a1 * a1
    w2 = np.array([config.weight.weight_sq(a) for a in range(1, M + 1)])
    step = _step_strang if config.scheme == "strang_split" else _step_rk4

    n_steps = int(round(config.T / config.dt)) if config.T > 0 else 0

    def current_actions() -> np.ndarray:
        return 0.5 * (a1 * u * u + v * v / a1)

    times = [0.0]
    acts0 = current_actions()
    acts_list = [acts0]
    H0 = 0.5 * float(v @ v) + 0.5 * _slope2(u, a2) + 0.25 * _slope2(u, a2) ** 2
    energies = [H0]
    norms = [math.sqrt(float(w2 @ acts0))]
    drifts = [0.0]
    states = [_to_state(u, v)] if config.record_states else None

    for k in range(1, n_steps + 1):
        with np.errstate(over="ignore", invalid="ignore"):
            u, v = step(u, v, config.dt, a1, a2, config.linear_only)
        if not (np.all(np.isfinite(u)) and np.all(np.isfinite(v))):
            raise SimulationBlowup(k * config.dt)
        if k % config.record_stride == 0 or k == n_steps:
            t = k * config.dt
            acts = current_actions()
            S = _slope2(u, a2)
            times.append(t)
            acts_list.append(acts)
            energies.append(0.5 * float(v @ v) + 0.5 * S + 0.25 * S * S)
            norms.append(math.sqrt(float(w2 @ acts)))
            drifts.append(float(np.max(w2 * np.abs(acts - acts0))))
            if states is not None:
                states.append(_to_state(u, v))

    return Trajectory(
        times=np.array(times),
        energy=np.array(energies),
        actions=np.array(acts_list),
        norm_w=np.array(norms),
        sup_drift=np.array(drifts),
        config=config,
        states=states,
    )


# ---------------------------------------------------------------------------
# trajectory export

def trajectory_to_csv(traj: Trajectory, stream: io.TextIOBase, header_lines: Sequence[str] = ()) -> None:
    """Write the sample table as CSV.

    Layout: optional ``#``-prefixed header lines, then a column-name row
    ``t,H,sup_drift,I_1,...,I_M``, then one row per sample with full float
    precision (``repr`` round-trip).
    """
    for line in header_lines:
        stream.write(f"# {line}\n")
    cols = ["t", "H", "sup_drift"] + [f"I_{a}" for a in range(1, traj.M + 1)]
    stream.write(",".join(cols) + "\n")
    for i in range(len(traj.times)):
        row = [traj.times[i], traj.energy[i], traj.sup_drift[i]] + list(traj.actions[i])
        stream.write(",".join(repr(float(x)) for x in row) + "\n")


def trajectory_summary(traj: Trajectory) -> dict:
    """JSON-ready summary: endpoints, extremes, and drift statistics."""
    H0 = float(traj.energy[0])
    rel_dH = float(np.max(np.abs(traj.energy - H0)) / max(abs(H0), 1e-300))
    return {
        "samples": int(len(traj.times)),
        "t_final": float(traj.times[-1]),
        "energy_initial": H0,
        "energy_final": float(traj.energy[-1]),
        "energy_rel_drift_max": rel_dH,
        "sup_action_drift_max": float(np.max(traj.sup_drift)),
        "sup_action_drift_final": float(traj.sup_drift[-1]),
        "norm_initial": float(traj.norm_w[0]),
        "norm_final": float(traj.norm_w[-1]),
        "norm_max": float(np.max(traj.norm_w)),
        "actions_initial": {str(a + 1): float(x) for a, x in enumerate(traj.actions[0])},
        "actions_final": {str(a + 1): float(x) for a, x in enumerate(traj.actions[-1])},
    }


def to_json_dict(traj: Trajectory) -> dict:
    """Full trajectory as a JSON-serializable dict (documented stable layout)."""
    return {
        "columns": ["t", "H", "sup_drift"] + [f"I_{a}" for a in range(1, traj.M + 1)],
        "rows": [
            [float(traj.times[i]), float(traj.energy[i]), float(traj.sup_drift[i])]
            + [float(x) for x in traj.actions[i]]
            for i in range(len(traj.times))
        ],
    }
