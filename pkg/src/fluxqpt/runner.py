"""Experiment configuration, orchestration and CSV/JSON output."""
from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from . import __version__
from .dynamics import UNITS, ControlSchedule, SweepModel, evolve_schrodinger, track_ground_state
from .metrics import chi_trace, macro_trace
from .network import SpinNetwork, basis_label, check_memory
from .observables import MomentHistogram, block_witnesses, computational_basis_probabilities

log = logging.getLogger(__name__)

MAX_N = 16


class ConfigError(ValueError):
    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


@dataclass(frozen=True)
class ExperimentConfig:
    topology: str = "triangle"
    n: int | None = None
    edges: tuple | None = None
    delta_weights: tuple | None = None
    j_weights: tuple | None = None
    epsilon: tuple | None = None
    t_final: float = 50.0
    delta_max: float = 5.0
    j_max: float = 5.0
    delta_floor: float = 5e-6
    j_floor: float = 5e-6
    grid_points: int = 1001
    chi_f: bool = True
    witness: bool = True
    macro: bool = True
    dynamics_verify: bool = False
    delta_s: float = 1e-4
    smoothing: float = 1e-12
    dt: float = 1e-3
    gap_tol: float = 1e-9
    fidelity_threshold: float = 0.99
    dynamics_grid_points: int = 101
    blocks: tuple | None = None
    symmetry: str = "auto"
    shots: int = 0
    seed: int = 0
    out: str = "fluxqpt-out"

    def network(self) -> SpinNetwork:
        return SpinNetwork.from_topology(self.topology, self.n, self.edges)

    def schedule(self) -> ControlSchedule:
        return ControlSchedule(self.t_final, self.delta_max, self.j_max, self.delta_floor, self.j_floor)

    def model(self) -> SweepModel:
        return SweepModel(self.network(), self.schedule(), self.delta_weights, self.j_weights, self.epsilon)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        for k, v in d.items():
            if isinstance(v, tuple):
                d[k] = [list(x) if isinstance(x, tuple) else x for x in v]
        return d


_POSITIVE = {"t_final", "delta_floor", "j_floor", "delta_s", "dt", "gap_tol", "fidelity_threshold"}
_NON_NEGATIVE = {"delta_max", "j_max", "smoothing", "shots", "seed"}
_FIELD_TYPES = {
    "topology": str, "n": int, "edges": list, "delta_weights": list, "j_weights": list, "epsilon": list,
    "t_final": float, "delta_max": float, "j_max": float, "delta_floor": float, "j_floor": float,
    "grid_points": int, "chi_f": bool, "witness": bool, "macro": bool, "dynamics_verify": bool,
    "delta_s": float, "smoothing": float, "dt": float, "gap_tol": float, "fidelity_threshold": float,
    "dynamics_grid_points": int, "blocks": list, "symmetry": str, "shots": int, "seed": int, "out": str,
}


def _coerce(key: str, value: Any):
    want = _FIELD_TYPES[key]
    if value is None and key in ("n", "edges", "delta_weights", "j_weights", "epsilon", "blocks"):
        return None
    if want is bool:
        if not isinstance(value, bool):
            raise ConfigError(key, f"expected true/false, got {value!r}")
        return value
    if want is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(key, f"expected an integer, got {value!r}")
        return value
    if want is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(key, f"expected a number, got {value!r}")
        if not np.isfinite(value):
            raise ConfigError(key, "must be finite")
        return float(value)
    if want is str:
        if not isinstance(value, str):
            raise ConfigError(key, f"expected a string, got {value!r}")
        return value
    if not isinstance(value, (list, tuple)):
        raise ConfigError(key, f"expected a list, got {value!r}")
    if key in ("edges", "blocks"):
        try:
            return tuple(tuple(int(x) for x in item) for item in value)
        except (TypeError, ValueError):
            raise ConfigError(key, "expected a list of integer tuples") from None
    try:
        return tuple(float(x) for x in value)
    except (TypeError, ValueError):
        raise ConfigError(key, "expected a list of numbers") from None


def validate_config(raw: str | dict | None) -> ExperimentConfig:
    """Parse (YAML or JSON text, or a mapping), default and range-check a config."""
    if raw is None:
        data = {}
    elif isinstance(raw, str):
        try:
            data = yaml.safe_load(raw) or {}
        except yaml.YAMLError as exc:
            raise ConfigError("<config>", f"not valid YAML/JSON: {exc}") from None
    else:
        data = dict(raw)
    if not isinstance(data, dict):
        raise ConfigError("<config>", "top level must be a mapping")
    unknown = sorted(set(data) - set(_FIELD_TYPES))
    if unknown:
        raise ConfigError(unknown[0], f"unknown key(s) {unknown}")
    values = {k: _coerce(k, v) for k, v in data.items()}

    for key in _POSITIVE:
        if key in values and not values[key] > 0:
            raise ConfigError(key, f"must be positive, got {values[key]}")
    for key in _NON_NEGATIVE:
        if key in values and values[key] < 0:
            raise ConfigError(key, f"must be non-negative, got {values[key]}")
    cfg = ExperimentConfig(**values)

    if cfg.topology not in ("triangle", "nn-nnn-chain", "custom"):
        raise ConfigError("topology", f"unknown topology {cfg.topology!r}")
    if cfg.n is not None and not 1 <= cfg.n <= MAX_N:
        raise ConfigError("n", f"must lie in [1, {MAX_N}], got {cfg.n}")
    if cfg.topology == "triangle" and cfg.n not in (None, 3):
        raise ConfigError("n", "triangle topology has n = 3")
    if cfg.topology != "triangle" and cfg.n is None:
        raise ConfigError("n", f"required for topology {cfg.topology!r}")
    if cfg.topology == "custom" and cfg.edges is None:
        raise ConfigError("edges", "required for custom topology")
    if cfg.grid_points < 2:
        raise ConfigError("grid_points", "must be at least 2")
    if cfg.dynamics_grid_points < 2:
        raise ConfigError("dynamics_grid_points", "must be at least 2")
    if cfg.delta_s >= 0.5:
        raise ConfigError("delta_s", "must be below 0.5")
    if cfg.symmetry not in ("auto", "flip-even", "none"):
        raise ConfigError("symmetry", f"unknown symmetry {cfg.symmetry!r}")
    try:
        cfg.network()
    except ValueError as exc:
        raise ConfigError("edges" if cfg.topology == "custom" else "n", str(exc)) from None
    try:
        model = cfg.model()
    except ValueError as exc:
        key = next((k for k in ("delta_weights", "j_weights", "epsilon") if k in str(exc)), "delta_weights")
        raise ConfigError(key, str(exc)) from None
    if cfg.blocks is not None:
        for b in cfg.blocks:
            if len(b) != 3 or len(set(b)) != 3 or not all(0 <= s < model.network.n for s in b):
                raise ConfigError("blocks", f"invalid block {b}")
    return cfg


def sample_shots(h: MomentHistogram, shots: int, seed: int | None = 0) -> MomentHistogram:
    """Empirical histogram of ``shots`` multinomial draws from ``h``."""
    if shots < 1:
        raise ValueError("shots must be at least 1")
    rng = np.random.default_rng(seed)
    p = h.probs / h.probs.sum()
    counts = rng.multinomial(shots, p)
    return MomentHistogram(h.n, counts / shots)


@dataclass
class RunManifest:
    config: dict
    tool_version: str
    units: str
    duration_s: float = 0.0
    files: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


def write_csv(path: Path, header: list[str], rows) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(x) for x in row])


def read_csv(path: str | Path) -> tuple[list[str], np.ndarray]:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        r = csv.reader(fh)
        header = next(r)
        data = [[float(x) for x in row] for row in r]
    return header, np.array(data, dtype=float).reshape(len(data), len(header))


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def run(config: ExperimentConfig | dict | str) -> RunManifest:
    """Run every enabled metric and write one CSV per metric plus ``manifest.json``."""
    cfg = config if isinstance(config, ExperimentConfig) else validate_config(config)
    start = time.perf_counter()
    model = cfg.model()
    net, sched = model.network, model.schedule
    check_memory(net.n)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest(cfg.to_dict(), __version__, UNITS)
    written: list[Path] = []

    def emit(name, header, rows, description):
        path = out / name
        write_csv(path, header, rows)
        written.append(path)
        manifest.files[name] = {"description": description, "sha256": _sha256(path)}

    try:
        times = np.linspace(0.0, sched.t_final, cfg.grid_points)
        sched_rows = [(t, t / sched.t_final, *sched.at_fraction(t / sched.t_final)) for t in times]
        emit("schedule.csv", ["t_ns", "s", "delta_ghz", "j_ghz"], sched_rows, "control schedule")

        traj = None
        if cfg.witness or cfg.macro or cfg.dynamics_verify:
            log.info("tracking ground state on %d points (n=%d)", cfg.grid_points, net.n)
            traj = track_ground_state(model, None, cfg.grid_points, gap_tol=cfg.gap_tol, symmetry=cfg.symmetry)
            if traj.flags.any():
                manifest.warnings.append(
                    f"degenerate ground state at {int(traj.flags.sum())} tracked grid point(s)")
            s_col = traj.fractions
            if net.n == 3:
                probs = np.array([computational_basis_probabilities(p) for p in traj.states])
                emit("probabilities.csv", ["t_ns", "s"] + [f"p_{basis_label(i, 3)}" for i in range(8)],
                     [(t, s, *row) for t, s, row in zip(traj.times, s_col, probs)],
                     "computational-basis probabilities of the tracked ground state")

        if cfg.witness and net.n >= 3:
            blocks = list(cfg.blocks) if cfg.blocks else net.contiguous_blocks()
            values = np.array([[w.value for w in block_witnesses(p, blocks)] for p in traj.states])
            emit("witness.csv", ["t_ns", "s"] + ["W_" + "_".join(map(str, b)) for b in blocks],
                 [(t, s, *row) for t, s, row in zip(traj.times, s_col, values)],
                 "symmetric W-state witness expectation per 3-site block")
            manifest.summary["witness_start"] = values[0].tolist()
            manifest.summary["witness_end"] = values[-1].tolist()
        elif cfg.witness:
            manifest.warnings.append("witness skipped: needs n >= 3")

        if cfg.macro:
            mt = macro_trace(traj, cfg.smoothing)
            support = list(range(-net.n, net.n + 1, 2))
            emit("moments.csv", ["t_ns", "s"] + [f"mu_{k}" for k in support],
                 [(t, s, *h.probs) for t, s, h in zip(traj.times, s_col, mt.histograms)],
                 "total-moment distribution of the tracked ground state")
            emit("macro.csv", ["t_ns", "s", "D", "alpha"],
                 [(t, s, d, a) for t, s, d, a in zip(traj.times, s_col, mt.D, mt.alpha)],
                 "macroscopic KL sign measure (nats) and per-point exponential decay rate")
            manifest.summary.update(D_start=float(mt.D[0]), D_end=float(mt.D[-1]),
                                    D_sign_changes=mt.sign_changes(), reference_alpha=mt.reference_alpha)
            if cfg.shots:
                rng = np.random.default_rng(cfg.seed)
                sampled = [sample_shots(h, cfg.shots, rng) for h in mt.histograms]
                emit("moments_sampled.csv", ["t_ns", "s"] + [f"mu_{k}" for k in support],
                     [(t, s, *h.probs) for t, s, h in zip(traj.times, s_col, sampled)],
                     f"finite-shot moment histograms ({cfg.shots} shots, seed {cfg.seed})")

        if cfg.chi_f:
            log.info("fidelity susceptibility on %d points", cfg.grid_points)
            ct = chi_trace(model, None, cfg.grid_points, cfg.delta_s, gap_tol=cfg.gap_tol, symmetry=cfg.symmetry)
            emit("chi.csv", ["s", "t_ns", "chi_f", "chi_f_derivative", "flagged"],
                 zip(ct.grid, ct.times, ct.chi, ct.chi_derivative, ct.flags),
                 "fidelity susceptibility per unit s^2 (overlap and derivative estimators)")
            if ct.flags.any():
                manifest.warnings.append(f"chi_f skipped at {int(ct.flags.sum())} degenerate grid point(s)")
            s_peak, chi_peak = ct.peak()
            manifest.summary.update(chi_peak_s=s_peak, chi_peak=chi_peak)

        if cfg.dynamics_verify:
            dyn = evolve_schrodinger(model, None, traj.states[0], cfg.dt, grid_points=cfg.dynamics_grid_points)
            idx = np.rint(dyn.times / sched.t_final * (cfg.grid_points - 1)).astype(int)
            aligned = np.isclose(idx / (cfg.grid_points - 1) * sched.t_final, dyn.times)
            fid = [abs(np.vdot(traj.states[i], p)) ** 2 if ok else np.nan
                   for i, ok, p in zip(idx, aligned, dyn.states)]
            emit("dynamics.csv", ["t_ns", "norm", "energy_ghz", "fidelity_to_tracked"],
                 [(t, np.linalg.norm(p), e, f) for t, p, e, f in zip(dyn.times, dyn.states, dyn.energies, fid)],
                 "integrated Schroedinger dynamics")
            passed = dyn.adiabatic_fidelity >= cfg.fidelity_threshold
            manifest.summary.update(norm_drift=dyn.norm_drift, adiabatic_fidelity=dyn.adiabatic_fidelity,
                                    adiabatic_pass=bool(passed))
            if not passed:
                manifest.warnings.append(
                    f"adiabatic fidelity {dyn.adiabatic_fidelity:.6f} below threshold {cfg.fidelity_threshold}")
    except BaseException:
        for path in written:
            path.unlink(missing_ok=True)
        raise

    manifest.duration_s = time.perf_counter() - start
    mpath = out / "manifest.json"
    mpath.write_text(json.dumps(manifest.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return manifest
