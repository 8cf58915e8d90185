"""Command line front end for simulations, sweeps, scans, and verification.

Every subcommand reads at most one plain-text configuration file plus
``--set`` overrides, validates the merged result against the subcommand's
schema before any computation starts, and embeds the resolved configuration,
the seed, and the package version in every file it writes.  Reruns with the
same inputs produce byte-identical outputs.

Config file format: one ``key = value`` assignment per line, ``#`` comments
and blank lines ignored.  Values are parsed as JSON; a value that is not
valid JSON is taken as a literal string, so ``scheme = rk4`` and
``scheme = "rk4"`` mean the same thing.  Lists and maps use JSON syntax,
e.g. ``eps = [0.2, 0.1, 0.05]`` or ``initial_u = {"1": 0.3}``.

Exit codes: 0 success, 2 configuration error, 3 numerical abort (state left
the finite range), 4 sampling failure (no admissible initial data found),
5 verification failure.
"""

from __future__ import annotations

import argparse
import json
import math
import random
import sys
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import __version__
from .core import ComplexSeq, WeightSpec
from .divisors import (
    FreqContext,
    NonResonanceParams,
    _kappa_factor,
    big_omega,
    is_nonresonant,
    kappa,
)
from .measure import MeasureSpec, estimate_measure, sample_actions
from .nf_engine import (
    RationalVF,
    chi3_explicit,
    commutator,
    dump_field,
    evaluate_vf,
    field_to_json,
    quintic_rational_solve,
    rational_commutator,
    resonant_normal_form,
    septic_stage_input,
    solve_homological_z3z5,
    taylor_vf,
    z1_field,
)
from .simulator import (
    SimConfig,
    SimulationBlowup,
    simulate,
    trajectory_summary,
    trajectory_to_csv,
)
from .transforms import (
    UVState,
    ZState,
    elastic_energy,
    psi_to_eta,
    uv_to_psi,
    uv_to_z,
    z_to_uv,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_SAMPLING = 4
EXIT_VERIFY = 5


class ConfigError(ValueError):
    """A configuration file, override, or derived object failed validation."""


class SamplingFailure(RuntimeError):
    """No admissible sample was found within the configured budget."""


# ---------------------------------------------------------------------------
# configuration schemas

def _is_real(v: Any) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _coerce_int(key: str, v: Any) -> int:
    if not isinstance(v, int) or isinstance(v, bool):
        raise ConfigError(f"{key}: expected an integer, got {v!r}")
    return v


def _coerce_num(key: str, v: Any) -> float:
    if not _is_real(v):
        raise ConfigError(f"{key}: expected a number, got {v!r}")
    return float(v)


def _coerce_bool(key: str, v: Any) -> bool:
    if not isinstance(v, bool):
        raise ConfigError(f"{key}: expected true or false, got {v!r}")
    return v


def _coerce_str(key: str, v: Any) -> str:
    if not isinstance(v, str):
        raise ConfigError(f"{key}: expected a string, got {v!r}")
    return v


def _coerce_num_list(key: str, v: Any) -> List[float]:
    if not isinstance(v, list) or not v or not all(_is_real(x) for x in v):
        raise ConfigError(f"{key}: expected a non-empty list of numbers, got {v!r}")
    return [float(x) for x in v]


def _mode_of(key: str, k: Any) -> int:
    try:
        mode = int(k)
    except (TypeError, ValueError):
        raise ConfigError(f"{key}: mode index {k!r} is not an integer") from None
    if mode < 1:
        raise ConfigError(f"{key}: mode index {mode} must be >= 1")
    return mode


def _coerce_mode_map(key: str, v: Any) -> Dict[int, float]:
    """Map of mode index to real value, e.g. ``{"1": 0.3}``."""
    if not isinstance(v, dict):
        raise ConfigError(f"{key}: expected a mode/value map, got {v!r}")
    out: Dict[int, float] = {}
    for k, x in v.items():
        if not _is_real(x):
            raise ConfigError(f"{key}: value for mode {k!r} must be a number")
        out[_mode_of(key, k)] = float(x)
    return out


def _coerce_pair_map(key: str, v: Any) -> Dict[int, Tuple[float, float]]:
    """Map of mode index to a ``[real, imag]`` pair."""
    if not isinstance(v, dict):
        raise ConfigError(f"{key}: expected a mode/[re, im] map, got {v!r}")
    out: Dict[int, Tuple[float, float]] = {}
    for k, x in v.items():
        if not (isinstance(x, list) and len(x) == 2 and all(_is_real(c) for c in x)):
            raise ConfigError(f"{key}: value for mode {k!r} must be a [re, im] pair")
        out[_mode_of(key, k)] = (float(x[0]), float(x[1]))
    return out


_COERCE: Dict[str, Callable[[str, Any], Any]] = {
    "int": _coerce_int,
    "num": _coerce_num,
    "bool": _coerce_bool,
    "str": _coerce_str,
    "num_list": _coerce_num_list,
    "mode_map": _coerce_mode_map,
    "pair_map": _coerce_pair_map,
}

_WEIGHT_SCHEMA = {
    "weight_kind": ("str", "sobolev"),
    "weight_s": ("num", 1.0),
    "weight_rho": ("num", 0.5),
    "weight_theta": ("num", 1.0),
}

SCHEMAS: Dict[str, Dict[str, Tuple[str, Any]]] = {
    "simulate": {
        "M": ("int", 16),
        "dt": ("num", 1e-3),
        "T": ("num", 10.0),
        "scheme": ("str", "strang_split"),
        "record_stride": ("int", 1),
        "linear_only": ("bool", False),
        "allow_large_dt": ("bool", False),
        "initial_u": ("mode_map", {}),
        "initial_v": ("mode_map", {}),
        "seed": ("int", 0),
        **_WEIGHT_SCHEMA,
    },
    "drift-sweep": {
        "eps": ("num_list", [0.2, 0.1, 0.05]),
        "M": ("int", 16),
        "N": ("int", 16),
        "r": ("int", 2),
        "gamma": ("num", 0.1),
        "dt": ("num", 5e-3),
        "T": ("num", 0.0),  # 0 selects T = eps^-2 per point
        "scheme": ("str", "strang_split"),
        "record_stride": ("int", 0),  # 0 selects roughly 512 records
        "max_tries": ("int", 64),
        "ball_radius": ("num", 0.5),
        "seed": ("int", 0),
        **_WEIGHT_SCHEMA,
    },
    "measure": {
        "gamma_grid": ("num_list", [0.02, 0.05, 0.1, 0.2]),
        "r": ("int", 2),
        "N": ("int", 8),
        "truncation": ("int", 0),  # 0 selects N
        "samples": ("int", 1000),
        "eps": ("num", 0.0),  # 0 selects the largest amplitude the small-data hypothesis allows
        "ball_radius": ("num", 0.5),
        "seed": ("int", 0),
        **_WEIGHT_SCHEMA,
    },
    "resonance": {
        "state": ("pair_map", {}),
        "truncation": ("int", 0),  # 0 selects max(N, highest excited mode)
        "r": ("int", 2),
        "N": ("int", 8),
        "gamma": ("num", 0.1),
        "seed": ("int", 0),
        **_WEIGHT_SCHEMA,
    },
    "nf-verify": {
        "N": ("int", 8),
        "quintic_N": ("int", 6),
        "quintic_samples": ("int", 50),
        "quintic_gamma": ("num", 1e-3),
        "quintic_s": ("num", 3.0),
        "solver_N": ("int", 4),
        "solver_samples": ("int", 50),
        "tol_quintic": ("num", 1e-10),
        "tol_solver": ("num", 1e-9),
        "golden_dir": ("str", ""),
        "seed": ("int", 0),
    },
    "roundtrip": {
        "samples": ("int", 1000),
        "M": ("int", 8),
        "scale": ("num", 0.3),
        "tol": ("num", 1e-12),
        "identity_tol": ("num", 1e-12),
        "seed": ("int", 0),
    },
}


def _parse_value(raw: str) -> Any:
    raw = raw.strip()
    try:
        return json.loads(raw)
    except (json.JSONDecodeError, ValueError):
        return raw  # bare string


def parse_config_text(text: str, source: str) -> Dict[str, Any]:
    """Parse ``key = value`` lines; values are JSON with a bare-string fallback."""
    out: Dict[str, Any] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        key, sep, raw = stripped.partition("=")
        key = key.strip()
        if not sep or not key:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {line!r}")
        out[key] = _parse_value(raw)
    return out


def resolve_config(
    command: str,
    config_path: Optional[str],
    overrides: Sequence[str],
    seed_flag: Optional[int],
) -> Dict[str, Any]:
    """Merge defaults, config file, and overrides; validate against the schema."""
    schema = SCHEMAS[command]
    cfg: Dict[str, Any] = {k: default for k, (_, default) in schema.items()}
    merged: Dict[str, Any] = {}
    if config_path is not None:
        path = Path(config_path)
        if not path.is_file():
            raise ConfigError(f"config file not found: {config_path}")
        merged.update(parse_config_text(path.read_text(), config_path))
    for item in overrides:
        key, sep, raw = item.partition("=")
        if not sep or not key.strip():
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        merged[key.strip()] = _parse_value(raw)
    for key, value in merged.items():
        if key not in schema:
            raise ConfigError(f"unknown key {key!r} for command {command!r}")
        cfg[key] = value
    if seed_flag is not None:
        cfg["seed"] = seed_flag
    for key, value in cfg.items():
        cfg[key] = _COERCE[schema[key][0]](key, value)
    return cfg


# ---------------------------------------------------------------------------
# shared helpers

def _weight_from(cfg: Dict[str, Any]) -> WeightSpec:
    try:
        return WeightSpec(
            kind=cfg["weight_kind"],
            s=cfg["weight_s"],
            rho=cfg["weight_rho"],
            theta=cfg["weight_theta"],
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _jsonable(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value


def _resolved(command: str, cfg: Dict[str, Any]) -> Dict[str, Any]:
    """Provenance block embedded in every output file."""
    return {
        "version": __version__,
        "command": command,
        "config": {k: _jsonable(cfg[k]) for k in sorted(cfg)},
    }


def _header_lines(command: str, cfg: Dict[str, Any]) -> List[str]:
    lines = [f"stringnf {__version__}", f"command = {command}"]
    for key in sorted(cfg):
        lines.append(f"{key} = {json.dumps(_jsonable(cfg[key]), sort_keys=True)}")
    return lines


def _write_json(path: Path, payload: Dict[str, Any]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _point_seed(base: int, index: int) -> int:
    return int(np.random.SeedSequence(entropy=base, spawn_key=(index,)).generate_state(1)[0])


def _pool_map(fn: Callable[[int], Any], count: int, threads: int) -> List[Any]:
    """Run ``fn`` over indices in a thread pool; results in index order."""
    if count == 0:
        return []
    workers = max(1, min(threads, count))
    if workers == 1:
        return [fn(i) for i in range(count)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(count)))


def _sup(values: Dict[int, complex]) -> float:
    return max((abs(v) for v in values.values()), default=0.0)


# ---------------------------------------------------------------------------
# simulate

def _uv_from_maps(
    u_map: Dict[int, float], v_map: Dict[int, float], truncation: int
) -> UVState:
    for name, m in (("initial_u", u_map), ("initial_v", v_map)):
        for mode in m:
            if mode > truncation:
                raise ConfigError(f"{name}: mode {mode} exceeds truncation {truncation}")
    return UVState(u_map, v_map, truncation)


def cmd_simulate(cfg: Dict[str, Any], out: Path, threads: int) -> int:
    weight = _weight_from(cfg)
    initial = _uv_from_maps(cfg["initial_u"], cfg["initial_v"], cfg["M"])
    try:
        sim = SimConfig(
            dt=cfg["dt"],
            T=cfg["T"],
            scheme=cfg["scheme"],
            M=cfg["M"],
            record_stride=cfg["record_stride"],
            weight=weight,
            linear_only=cfg["linear_only"],
            allow_large_dt=cfg["allow_large_dt"],
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    traj = simulate(initial, sim)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "trajectory.csv", "w") as fh:
        trajectory_to_csv(traj, fh, _header_lines("simulate", cfg))
    summary = trajectory_summary(traj)
    _write_json(out / "summary.json", {**_resolved("simulate", cfg), "summary": summary})
    print(
        f"simulate: {summary['samples']} samples to t={summary['t_final']:.6g}, "
        f"max relative energy drift {summary['energy_rel_drift_max']:.3e}"
    )
    return EXIT_OK


# ---------------------------------------------------------------------------
# drift sweep

def _slope_fit(points: Sequence[Tuple[float, float]]) -> Dict[str, Any]:
    """Least-squares slope of log(drift) against log(eps), with standard error."""
    usable = [(math.log(e), math.log(d)) for e, d in points if d > 0.0]
    fit: Dict[str, Any] = {"points_used": len(usable), "slope": None, "stderr": None}
    if len(usable) < 2:
        return fit
    xs = np.array([p[0] for p in usable])
    ys = np.array([p[1] for p in usable])
    sxx = float(np.sum((xs - xs.mean()) ** 2))
    if sxx == 0.0:
        return fit
    slope = float(np.sum((xs - xs.mean()) * (ys - ys.mean())) / sxx)
    fit["slope"] = slope
    if len(usable) > 2:
        resid = ys - (ys.mean() + slope * (xs - xs.mean()))
        fit["stderr"] = float(math.sqrt(float(np.sum(resid**2)) / (len(usable) - 2) / sxx))
    return fit


def cmd_drift_sweep(cfg: Dict[str, Any], out: Path, threads: int) -> int:
    weight = _weight_from(cfg)
    for e in cfg["eps"]:
        if not (e > 0.0 and math.isfinite(e)):
            raise ConfigError(f"eps: every entry must be finite and positive, got {e!r}")
    try:
        params = NonResonanceParams(cfg["r"], cfg["N"], cfg["gamma"], weight)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    out.mkdir(parents=True, exist_ok=True)

    def point(index: int) -> Dict[str, Any]:
        eps = cfg["eps"][index]
        seed_i = _point_seed(cfg["seed"], index)
        spec = MeasureSpec(weight, cfg["M"], cfg["max_tries"], seed_i, cfg["ball_radius"])
        batch = sample_actions(spec)
        z: Optional[ComplexSeq] = None
        for k in range(len(batch)):
            cand = batch.state(k, eps)
            if is_nonresonant(cand, params).ok:
                z = cand
                break
        if z is None:
            raise SamplingFailure(
                f"eps={eps:g}: none of {len(batch)} sampled states was non-resonant "
                f"at gamma={cfg['gamma']:g} (raise max_tries or lower gamma)"
            )
        horizon = cfg["T"] if cfg["T"] > 0.0 else eps**-2
        stride = cfg["record_stride"] or max(1, int(horizon / cfg["dt"] / 512))
        try:
            sim = SimConfig(
                dt=cfg["dt"],
                T=horizon,
                scheme=cfg["scheme"],
                M=cfg["M"],
                record_stride=stride,
                weight=weight,
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        traj = simulate(z_to_uv(ZState(z)), sim)
        s = trajectory_summary(traj)
        record = {
            "eps": eps,
            "T": horizon,
            "point_seed": seed_i,
            "tries": k + 1,
            "drift": s["sup_action_drift_max"],
            "drift_final": s["sup_action_drift_final"],
            "norm_initial": s["norm_initial"],
            "norm_max": s["norm_max"],
            "energy_rel_drift_max": s["energy_rel_drift_max"],
            "samples": s["samples"],
        }
        _write_json(out / f"sweep_point_{index}.json", {**_resolved("drift-sweep", cfg), "point": record})
        return record

    points = _pool_map(point, len(cfg["eps"]), threads)
    fit = _slope_fit([(p["eps"], p["drift"]) for p in points])
    _write_json(
        out / "sweep.json",
        {**_resolved("drift-sweep", cfg), "points": points, "fit": fit},
    )
    for p in points:
        print(f"eps={p['eps']:g}: T={p['T']:g} sup weighted action drift {p['drift']:.6e}")
    if fit["slope"] is None:
        print("drift-sweep: slope not defined (need >= 2 points with positive drift)")
    else:
        se = "n/a" if fit["stderr"] is None else f"{fit['stderr']:.3g}"
        print(f"drift-sweep: slope {fit['slope']:.4g} (stderr {se}) from {fit['points_used']} points")
    return EXIT_OK


# ---------------------------------------------------------------------------
# measure scan

def cmd_measure(cfg: Dict[str, Any], out: Path, threads: int) -> int:
    weight = _weight_from(cfg)
    grid = cfg["gamma_grid"]
    try:
        params = [NonResonanceParams(cfg["r"], cfg["N"], g, weight) for g in grid]
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    truncation = cfg["truncation"] or cfg["N"]
    r, n = cfg["r"], cfg["N"]
    eps = cfg["eps"]
    if eps <= 0.0:
        # largest amplitude for which the sparsity hypothesis holds on the whole grid
        eps = math.sqrt(2.0 * min(grid) / ((r + 1) * float(n) ** (4 * r + 2)))
    try:
        spec = MeasureSpec(weight, truncation, cfg["samples"], cfg["seed"], cfg["ball_radius"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None

    def one(index: int) -> Dict[str, Any]:
        return estimate_measure(params[index], spec, eps).record()

    try:
        records = _pool_map(one, len(grid), threads)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    _write_json(
        out / "measure.json",
        {**_resolved("measure", cfg), "eps_resolved": eps, "records": records},
    )
    for rec in records:
        print(
            f"gamma={rec['gamma']:g}: fraction {rec['fraction']:.6f} "
            f"ci [{rec['ci_low']:.6f}, {rec['ci_high']:.6f}] ({rec['samples']} samples)"
        )
    return EXIT_OK


# ---------------------------------------------------------------------------
# resonance report

def cmd_resonance(cfg: Dict[str, Any], out: Path, threads: int) -> int:
    weight = _weight_from(cfg)
    state = cfg["state"]
    truncation = cfg["truncation"] or max([cfg["N"], *state.keys()])
    for mode in state:
        if mode > truncation:
            raise ConfigError(f"state: mode {mode} exceeds truncation {truncation}")
    z = ComplexSeq({m: complex(re, im) for m, (re, im) in state.items()}, truncation)
    try:
        params = NonResonanceParams(cfg["r"], cfg["N"], cfg["gamma"], weight)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    rep = is_nonresonant(z, params)
    witness: Optional[Dict[str, Any]] = None
    if rep.witness is not None:
        ctx = FreqContext.from_seq(z, params.N)
        value = abs(big_omega(rep.witness, ctx, rep.witness_order))
        order = len(rep.witness)
        base = params.gamma * rep.norm_w**2 * float(params.N) ** (-4 * order - 2)
        kf = _kappa_factor(kappa(rep.witness), weight)
        if rep.witness_order == 2:
            threshold = base * kf
        else:
            threshold = base * max(kf, params.gamma * rep.norm_w**2)
        witness = {
            "index_vector": [list(pair) for pair in rep.witness],
            "divisor_order": rep.witness_order,
            "divisor": value,
            "threshold": threshold,
            "smallest_mode": kappa(rep.witness),
        }
    _write_json(
        out / "resonance.json",
        {
            **_resolved("resonance", cfg),
            "in_set": rep.ok,
            "margin": rep.margin,
            "norm": rep.norm_w,
            "reason": rep.reason,
            "worst_witness": witness,
        },
    )
    if rep.ok:
        print(f"resonance: state is non-resonant (margin {rep.margin:.4g})")
    else:
        why = rep.reason or f"margin {rep.margin:.4g}"
        print(f"resonance: state is not in the non-resonant set ({why})")
    return EXIT_OK


# ---------------------------------------------------------------------------
# normal form verification

def _ensemble_states(
    n: int, modes: int, gamma: float, s: float, seed: int
) -> List[ComplexSeq]:
    """Random non-resonant states drawn from the weighted action ensemble."""
    weight = WeightSpec("sobolev", s=s)
    params = NonResonanceParams(2, modes, gamma, weight)
    spec = MeasureSpec(weight, modes, max(4 * n, 64), seed)
    batch = sample_actions(spec)
    states: List[ComplexSeq] = []
    for i in range(len(batch)):
        z = batch.state(i)
        if is_nonresonant(z, params).ok:
            states.append(z)
            if len(states) == n:
                return states
    raise SamplingFailure(
        f"only {len(states)} of the requested {n} states were non-resonant "
        f"at gamma={gamma:g}"
    )


def _plain_states(n: int, modes: int, seed: int, scale: float = 0.35) -> List[ComplexSeq]:
    rng = random.Random(seed)
    states = []
    for _ in range(n):
        data = {}
        for a in range(1, modes + 1):
            re = rng.uniform(0.3, 1.0) * (1 if rng.random() < 0.5 else -1)
            im = rng.uniform(0.3, 1.0) * (1 if rng.random() < 0.5 else -1)
            data[a] = complex(re, im) * scale / a
        states.append(ComplexSeq(data, modes))
    return states


def _rel_residual(total: RationalVF, reference: RationalVF, states: Sequence[ComplexSeq]) -> float:
    worst = 0.0
    for z in states:
        worst = max(worst, _sup(evaluate_vf(total, z)) / max(_sup(evaluate_vf(reference, z)), 1e-300))
    return worst


_GOLDEN_NAMES = ("k3", "k5", "z5", "chi3", "s", "m")


def cmd_nf_verify(cfg: Dict[str, Any], out: Path, threads: int) -> int:
    checks: List[Dict[str, Any]] = []

    def record(name: str, ok: bool, detail: str = "") -> None:
        checks.append({"name": name, "pass": bool(ok), "detail": detail})
        suffix = f"  ({detail})" if detail else ""
        print(f"{'PASS' if ok else 'FAIL'}  {name}{suffix}")

    n = cfg["N"]
    nf = resonant_normal_form(2, n)
    chi3 = chi3_explicit(n)
    z1 = z1_field(n)
    p3 = taylor_vf(1, n)

    resid3 = commutator(z1, chi3) + p3 - nf.z3
    record("cubic homological identity", resid3.is_zero(), "exact polynomial arithmetic")
    record("cubic generator closed form", nf.generators[1] == chi3)

    # quintic-stage input reconstructed independently through the graded
    # conjugation of the interaction by the cubic generator
    p5 = taylor_vf(2, n)
    h5 = p5 + commutator(p3, chi3) + commutator(commutator(z1, chi3), chi3).scale(Fraction(1, 2))
    resid5 = commutator(z1, nf.generators[2]) + h5 - (nf.z5 + nf.k5)
    record("quintic homological identity", resid5.is_zero(), "exact polynomial arithmetic")

    # quintic cascade: bracket against the cubic rotation kills the resonant
    # non-integrable part, checked numerically at ensemble states
    nq = cfg["quintic_N"]
    nfq = nf if nq == n else resonant_normal_form(2, nq)
    s_gen, m_gen = quintic_rational_solve(nfq.k5, nq)
    states_q = _ensemble_states(
        cfg["quintic_samples"], nq, cfg["quintic_gamma"], cfg["quintic_s"], cfg["seed"]
    )
    k5q = RationalVF.from_poly(nfq.k5)
    total_q = rational_commutator(nfq.z3, s_gen + m_gen, nq) + k5q
    rq = _rel_residual(total_q, k5q, states_q)
    record(
        "quintic cascade identity",
        rq <= cfg["tol_quintic"],
        f"max relative residual {rq:.3e} over {len(states_q)} states, tol {cfg['tol_quintic']:g}",
    )

    # full rotation solver: [Z3 + Z5, chi] + Q = Z + R2 + R1
    ns = cfg["solver_N"]
    nfs = resonant_normal_form(3, ns)
    q = septic_stage_input(nfs)
    chi, z_int, echo_same, echo_down = solve_homological_z3z5(q, ns)
    rot = RationalVF.from_poly(nfs.z3) + RationalVF.from_poly(nfs.z5)
    total_s = rational_commutator(rot, chi, ns) + q - z_int - echo_same - echo_down
    states_s = _plain_states(cfg["solver_samples"], ns, cfg["seed"] + 1)
    rs = _rel_residual(total_s, q, states_s)
    record(
        "rotation solver identity",
        rs <= cfg["tol_solver"],
        f"max relative residual {rs:.3e} over {len(states_s)} states, tol {cfg['tol_solver']:g}",
    )

    s8, m8 = (s_gen, m_gen) if nq == n else quintic_rational_solve(nf.k5, n)
    fields = {
        "k3": nf.z3,
        "k5": nf.k5,
        "z5": nf.z5,
        "chi3": chi3,
        "s": s8,
        "m": m8,
    }
    out.mkdir(parents=True, exist_ok=True)
    for name in _GOLDEN_NAMES:
        dump_field(fields[name], out / f"{name}.json")
    if cfg["golden_dir"]:
        golden = Path(cfg["golden_dir"])
        for name in _GOLDEN_NAMES:
            path = golden / f"{name}.json"
            if not path.is_file():
                record(f"golden table {name}", False, f"missing {path}")
                continue
            stored = json.loads(path.read_text())
            record(f"golden table {name}", field_to_json(fields[name]) == stored, "exact coefficient match")

    ok = all(c["pass"] for c in checks)
    _write_json(out / "verify.json", {**_resolved("nf-verify", cfg), "checks": checks, "pass": ok})
    if not ok:
        failed = ", ".join(c["name"] for c in checks if not c["pass"])
        print(f"nf-verify: FAILED ({failed})", file=sys.stderr)
        return EXIT_VERIFY
    print(f"nf-verify: all {len(checks)} checks passed")
    return EXIT_OK


# ---------------------------------------------------------------------------
# coordinate roundtrip

def cmd_roundtrip(cfg: Dict[str, Any], out: Path, threads: int) -> int:
    rng = np.random.default_rng(cfg["seed"])
    modes = range(1, cfg["M"] + 1)
    scale = cfg["scale"]
    max_rt = 0.0
    max_ident = 0.0
    for _ in range(cfg["samples"]):
        state = UVState(
            {a: scale * rng.standard_normal() / a**2 for a in modes},
            {a: scale * rng.standard_normal() / a for a in modes},
            cfg["M"],
        )
        back = z_to_uv(uv_to_z(state))
        for a in modes:
            max_rt = max(
                max_rt,
                abs(back.u.get(a, 0.0) - state.u.get(a, 0.0)),
                abs(back.v.get(a, 0.0) - state.v.get(a, 0.0)),
            )
        psi = uv_to_psi(state)
        x = elastic_energy(psi.seq)
        eta = psi_to_eta(psi)
        max_ident = max(max_ident, abs(eta.elastic - x * math.sqrt(1.0 + 2.0 * x)))
    ok = max_rt <= cfg["tol"] and max_ident <= cfg["identity_tol"]
    _write_json(
        out / "roundtrip.json",
        {
            **_resolved("roundtrip", cfg),
            "max_roundtrip_error": max_rt,
            "max_dilation_identity_error": max_ident,
            "pass": ok,
        },
    )
    status = "PASS" if ok else "FAIL"
    print(
        f"roundtrip: {status} over {cfg['samples']} states "
        f"(max roundtrip error {max_rt:.3e}, max dilation identity error {max_ident:.3e})"
    )
    return EXIT_OK if ok else EXIT_VERIFY


# ---------------------------------------------------------------------------
# entry point

_COMMANDS: Dict[str, Callable[[Dict[str, Any], Path, int], int]] = {
    "simulate": cmd_simulate,
    "drift-sweep": cmd_drift_sweep,
    "measure": cmd_measure,
    "resonance": cmd_resonance,
    "nf-verify": cmd_nf_verify,
    "roundtrip": cmd_roundtrip,
}

_HELP = {
    "simulate": "integrate the string equation and write a trajectory table",
    "drift-sweep": "action drift against amplitude with a log-log slope fit",
    "measure": "Monte Carlo non-resonant fraction over a gamma grid",
    "resonance": "non-resonance report for a single state",
    "nf-verify": "verify the normal form identities and write coefficient tables",
    "roundtrip": "coordinate chain inversion and time dilation identity check",
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stringnf",
        description="Resonant normal form toolkit for the nonlocal string equation.",
    )
    parser.add_argument("--version", action="version", version=f"stringnf {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name, help=_HELP[name])
        p.add_argument("--config", metavar="FILE", help="key = value configuration file")
        p.add_argument(
            "--set",
            metavar="KEY=VALUE",
            action="append",
            default=[],
            dest="overrides",
            help="override one config key (JSON value); repeatable",
        )
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--out", metavar="DIR", default=".", help="output directory (default: .)")
        p.add_argument("--threads", type=int, default=1, help="worker threads where applicable")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args.command, args.config, args.overrides, args.seed)
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        return _COMMANDS[args.command](cfg, Path(args.out), args.threads)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SimulationBlowup as exc:
        print(f"numerical abort: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except SamplingFailure as exc:
        print(f"sampling failure: {exc}", file=sys.stderr)
        return EXIT_SAMPLING


if __name__ == "__main__":
    sys.exit(main())
