"""Experiment configuration and result rows.

A configuration is one JSON document.  Validation happens up front so that a
bad file fails before any simulation starts.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from dataclasses import dataclass, field, replace
from typing import Any, Iterable

import numpy as np

from ..noise import NoiseChannel, channel_from_spec

EXPERIMENTS = ("qst_sweep", "qpt_sweep", "zne", "entangled_qpt", "moment_checks", "lower_bound", "learn")

CSV_COLUMNS = (
    "experiment",
    "n",
    "rows",
    "cols",
    "depth",
    "l_prime",
    "gamma",
    "noise_type",
    "trial",
    "seed",
    "metric",
    "value",
    "wall_ms",
)


class ConfigError(ValueError):
    """Invalid or inconsistent experiment configuration."""


def derive_seed(master: int, *keys: int) -> int:
    """Deterministic 63-bit child seed for a (master, key...) tuple."""
    ss = np.random.SeedSequence([int(master) & (2**64 - 1), *[int(k) for k in keys]])
    return int(ss.generate_state(1, np.uint64)[0] >> np.uint64(1))


@dataclass(frozen=True)
class CircuitSpec:
    kind: str = "tfim"
    rows: int = 2
    cols: int = 3
    layers: int = 5
    theta_h: float = math.pi / 4
    n: int | None = None
    architecture: str = "brickwork"
    gate_ensemble: str = "haar"

    @property
    def num_qubits(self) -> int:
        return self.rows * self.cols if self.kind == "tfim" else int(self.n)

    def to_json(self) -> dict:
        if self.kind == "tfim":
            return {"kind": "tfim", "rows": self.rows, "cols": self.cols, "layers": self.layers, "theta_h": self.theta_h}
        return {
            "kind": "random",
            "n": self.n,
            "depth": self.layers,
            "architecture": self.architecture,
            "gate_ensemble": self.gate_ensemble,
        }


@dataclass(frozen=True)
class LearnerSpec:
    l_prime: tuple[int, ...] = (1, 2)
    n_data: int = 50_000
    acquisition: str = "exact"


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    seed: int = 0
    trials: int = 1
    circuits: tuple[CircuitSpec, ...] = (CircuitSpec(),)
    noises: tuple[dict, ...] = ({"type": "depolarizing", "gamma": 0.01},)
    learner: LearnerSpec = LearnerSpec()
    observable: dict = field(default_factory=lambda: {"qubit": 0, "axis": "Z"})
    product_inputs: int = 100
    entangled_inputs: int = 20
    entangled_layers: int = 2
    scales: tuple[int, ...] = (1, 2, 3, 4, 5)
    moment_draws: int = 100_000
    orthogonality_circuits: int = 10_000
    orthogonality_pairs: int = 20
    lower_bound: dict | None = None
    epsilon_target: float | None = None
    trajectory_fallback: bool = False
    trajectories: int = 32
    difference_matrix_dir: str | None = None
    learn_kind: str = "state"
    output: str | None = None

    def noise_channels(self) -> list[NoiseChannel]:
        return [channel_from_spec(s) for s in self.noises]

    def with_seed(self, seed: int | None) -> "ExperimentConfig":
        return self if seed is None else replace(self, seed=int(seed))

    @classmethod
    def load(cls, path: str) -> "ExperimentConfig":
        try:
            with open(path) as fh:
                data = json.load(fh)
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from None
        return cls.from_dict(data)

    @classmethod
    def from_dict(cls, data: Any) -> "ExperimentConfig":
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        unknown = set(data) - _KNOWN_KEYS
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        exp = data.get("experiment")
        if exp not in EXPERIMENTS:
            raise ConfigError(f"experiment must be one of {EXPERIMENTS}, got {exp!r}")
        kw: dict[str, Any] = {"experiment": exp}
        kw["seed"] = _int(data, "seed", 0, lo=0)
        kw["trials"] = _int(data, "trials", 1, lo=1)
        kw["circuits"] = _parse_circuits(data)
        kw["noises"] = _parse_noises(data)
        kw["learner"] = _parse_learner(data.get("learner", {}), kw["circuits"])
        obs = data.get("observable", {"qubit": 0, "axis": "Z"})
        if not isinstance(obs, dict) or not ({"qubit", "axis"} <= set(obs) or "label" in obs):
            raise ConfigError("observable must be {'qubit': q, 'axis': 'X|Y|Z'} or {'label': 'IZ..'}")
        if "axis" in obs and obs["axis"] not in ("X", "Y", "Z"):
            raise ConfigError("observable axis must be X, Y or Z")
        kw["observable"] = dict(obs)
        for key in ("product_inputs", "entangled_inputs"):
            kw[key] = _int(data, key, getattr(cls, key), lo=0)
        for key in ("entangled_layers", "moment_draws", "orthogonality_circuits", "orthogonality_pairs", "trajectories"):
            kw[key] = _int(data, key, getattr(cls, key), lo=1)
        scales = data.get("scales", list(cls.scales))
        if not isinstance(scales, list) or len(scales) < 2 or any(not isinstance(s, int) or s < 1 for s in scales):
            raise ConfigError("scales must be a list of at least two positive integers")
        kw["scales"] = tuple(scales)
        if "lower_bound" in data:
            kw["lower_bound"] = _parse_lower_bound(data["lower_bound"])
        elif exp == "lower_bound":
            raise ConfigError("lower_bound experiment needs a 'lower_bound' section")
        eps = data.get("epsilon_target")
        if eps is not None and (not isinstance(eps, (int, float)) or eps <= 0):
            raise ConfigError("epsilon_target must be positive")
        kw["epsilon_target"] = eps
        kw["trajectory_fallback"] = bool(data.get("trajectory_fallback", False))
        kind = data.get("learn_kind", "state")
        if kind not in ("state", "process"):
            raise ConfigError("learn_kind must be 'state' or 'process'")
        kw["learn_kind"] = kind
        for key in ("difference_matrix_dir", "output"):
            val = data.get(key)
            if val is not None:
                parent = os.path.dirname(os.path.abspath(val)) if key == "output" else os.path.abspath(val)
                if not os.path.isdir(parent):
                    raise ConfigError(f"{key}: directory {parent} does not exist")
            kw[key] = val
        return cls(**kw)


_KNOWN_KEYS = {
    "experiment",
    "seed",
    "trials",
    "circuit",
    "grids",
    "theta_h",
    "noise",
    "noises",
    "learner",
    "observable",
    "product_inputs",
    "entangled_inputs",
    "entangled_layers",
    "scales",
    "moment_draws",
    "orthogonality_circuits",
    "orthogonality_pairs",
    "lower_bound",
    "epsilon_target",
    "trajectory_fallback",
    "trajectories",
    "difference_matrix_dir",
    "learn_kind",
    "output",
    "comment",
}


def _int(data: dict, key: str, default: int, lo: int | None = None) -> int:
    val = data.get(key, default)
    if isinstance(val, bool) or not isinstance(val, int):
        raise ConfigError(f"{key} must be an integer")
    if lo is not None and val < lo:
        raise ConfigError(f"{key} must be >= {lo}")
    return val


def _parse_circuits(data: dict) -> tuple[CircuitSpec, ...]:
    raw = data.get("circuit", {"kind": "tfim"})
    if not isinstance(raw, dict):
        raise ConfigError("circuit must be an object")
    kind = raw.get("kind", "tfim")
    if kind == "tfim":
        layers = _int(raw, "layers", 5, lo=1)
        theta = raw.get("theta_h", math.pi / 4)
        thetas = data.get("theta_h", [theta])
        if not isinstance(thetas, list):
            thetas = [thetas]
        for t in thetas:
            if not isinstance(t, (int, float)) or not 0 <= t <= math.pi / 2 + 1e-12:
                raise ConfigError("theta_h must lie in [0, pi/2]")
        grids = data.get("grids", [[raw.get("rows", 2), raw.get("cols", 3)]])
        specs = []
        for g in grids:
            if not (isinstance(g, list) and len(g) == 2 and all(isinstance(v, int) and v >= 1 for v in g)):
                raise ConfigError("grids entries must be [rows, cols] with positive integers")
            if g[0] * g[1] < 2:
                raise ConfigError("grid must contain at least two qubits")
            for t in thetas:
                specs.append(CircuitSpec("tfim", g[0], g[1], layers, float(t)))
        return tuple(specs)
    if kind == "random":
        n = _int(raw, "n", 4, lo=2)
        depth = _int(raw, "depth", 2, lo=1)
        arch = raw.get("architecture", "brickwork")
        ens = raw.get("gate_ensemble", "haar")
        if arch not in ("brickwork", "staircase"):
            raise ConfigError(f"unknown architecture {arch!r}")
        if ens not in ("haar", "clifford"):
            raise ConfigError(f"unknown gate ensemble {ens!r}")
        return (CircuitSpec("random", 1, n, depth, 0.0, n, arch, ens),)
    raise ConfigError(f"unknown circuit kind {kind!r}")


def _parse_noises(data: dict) -> tuple[dict, ...]:
    if "noise" in data and "noises" in data:
        raise ConfigError("give either 'noise' or 'noises', not both")
    specs = data.get("noises", [data.get("noise", {"type": "depolarizing", "gamma": 0.01})])
    if not isinstance(specs, list) or not specs:
        raise ConfigError("noises must be a non-empty list")
    for s in specs:
        try:
            channel_from_spec(s)
        except (ValueError, KeyError, TypeError) as exc:
            raise ConfigError(f"bad noise spec {s!r}: {exc}") from None
    return tuple(specs)


def _parse_learner(raw: Any, circuits) -> LearnerSpec:
    if not isinstance(raw, dict):
        raise ConfigError("learner must be an object")
    lp = raw.get("l_prime", [1, 2])
    if isinstance(lp, int):
        lp = [lp]
    if not isinstance(lp, list) or not lp or any(not isinstance(v, int) or v < 0 for v in lp):
        raise ConfigError("learner.l_prime must be a non-negative integer or list of them")
    n_min = min(c.num_qubits for c in circuits)
    if max(lp) > n_min:
        raise ConfigError(f"l_prime {max(lp)} exceeds register size {n_min}")
    n_data = _int(raw, "n_data", 50_000, lo=1)
    acq = raw.get("acquisition", "exact")
    if not (acq == "exact" or (isinstance(acq, str) and acq.startswith("shots:") and acq[6:].isdigit() and int(acq[6:]) >= 1)):
        raise ConfigError("acquisition must be 'exact' or 'shots:<m>'")
    return LearnerSpec(tuple(lp), n_data, acq)


def _parse_lower_bound(raw: Any) -> dict:
    if not isinstance(raw, dict) or not {"gamma", "d", "n", "eta"} <= set(raw):
        raise ConfigError("lower_bound needs gamma, d, n, eta")
    return dict(raw)


@dataclass(frozen=True)
class ResultRow:
    experiment: str
    n: int
    rows: int | str
    cols: int | str
    depth: int | str
    l_prime: int | str
    gamma: float | str
    noise_type: str
    trial: int
    seed: int
    metric: str
    value: float
    wall_ms: float | None = None

    def as_tuple(self, with_timing: bool) -> tuple:
        wall = "" if not with_timing or self.wall_ms is None else f"{self.wall_ms:.3f}"
        return (
            self.experiment,
            self.n,
            self.rows,
            self.cols,
            self.depth,
            self.l_prime,
            _fmt(self.gamma),
            self.noise_type,
            self.trial,
            self.seed,
            self.metric,
            _fmt(self.value),
            wall,
        )

    def to_json(self) -> dict:
        return dict(zip(CSV_COLUMNS, self.as_tuple(True)))


def _fmt(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def rows_to_csv(rows: Iterable[ResultRow], with_timing: bool = False) -> str:
    """CSV text with the fixed column order.

    Wall times vary run to run, so they are left blank unless requested; the
    remaining columns are a pure function of (config, seed).
    """
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        w.writerow(r.as_tuple(with_timing))
    return buf.getvalue()


def rows_to_json(rows: Iterable[ResultRow], extra: dict | None = None) -> str:
    doc = {"rows": [r.to_json() for r in rows]}
    if extra:
        doc.update(extra)
    return json.dumps(doc, indent=1, sort_keys=True)
