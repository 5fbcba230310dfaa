"""Command-line entry point.

Exit codes: 0 success, 2 configuration error, 3 failed pass/fail check.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from .. import learners, oracle_sim
from ..pauli_core import STAB_CODE, StabilizerProductState
from .config import ConfigError, ExperimentConfig, derive_seed, rows_to_csv, rows_to_json
from .runners import (
    _heisenberg,
    _points,
    build_circuit,
    evaluate,
    lower_bound_samples,
    observable_for,
    run,
    zne_report,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_CHECK = 3

SUBCOMMANDS = {
    "qst": "qst_sweep",
    "qpt": "qpt_sweep",
    "zne": "zne",
    "entangled-qpt": "entangled_qpt",
    "checks": "moment_checks",
    "lower-bound": "lower_bound",
    "learn": "learn",
}

# small defaults so that a bare invocation finishes quickly
DEFAULTS = {
    "qst_sweep": {
        "circuit": {"kind": "tfim", "rows": 2, "cols": 2, "layers": 5, "theta_h": math.pi / 4},
        "noise": {"type": "depolarizing", "gamma": 0.02},
        "learner": {"l_prime": [1, 2, 3], "n_data": 20000},
        "trials": 3,
    },
    "qpt_sweep": {
        "circuit": {"kind": "tfim", "rows": 2, "cols": 2, "layers": 5},
        "noises": [
            {"type": "depolarizing", "gamma": 0.01},
            {"type": "composed", "parts": [{"type": "depolarizing", "gamma": 0.01}, {"type": "amplitude_damping", "gamma": 0.01}]},
        ],
        "learner": {"l_prime": [1, 2], "n_data": 20000},
        "trials": 3,
    },
    "entangled_qpt": {
        "circuit": {"kind": "tfim", "rows": 2, "cols": 2, "layers": 5},
        "noise": {"type": "depolarizing", "gamma": 0.01},
        "learner": {"l_prime": [2], "n_data": 20000},
        "trials": 3,
    },
    "zne": {
        "circuit": {"kind": "tfim", "rows": 2, "cols": 2, "layers": 5},
        "noise": {"type": "depolarizing", "gamma": 0.01},
        "learner": {"l_prime": [3], "n_data": 20000},
        "trials": 3,
    },
    "moment_checks": {"moment_draws": 20000, "orthogonality_circuits": 1000},
    "learn": {
        "circuit": {"kind": "tfim", "rows": 2, "cols": 2, "layers": 3},
        "noise": {"type": "depolarizing", "gamma": 0.02},
        "learner": {"l_prime": [2], "n_data": 20000},
    },
}


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="noisy-tomography", description="Low-weight Pauli learning of noisy states and processes.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="JSON configuration file")
        sp.add_argument("--seed", type=int, help="master seed (overrides the config)")
        sp.add_argument("--out", help="output path (default: stdout)")
        sp.add_argument("--threads", type=int, default=1, help="worker processes")
        sp.add_argument("--format", choices=("csv", "json"), default="csv")
        sp.add_argument("--record-timing", action="store_true", help="fill the wall_ms column")
        sp.add_argument("--check", action="store_true", help="evaluate pass/fail thresholds; exit 3 on failure")

    for name in ("qst", "qpt", "zne", "entangled-qpt", "checks", "learn"):
        common(sub.add_parser(name))
    lb = sub.add_parser("lower-bound")
    common(lb)
    lb.add_argument("--gamma", type=float)
    lb.add_argument("--depth", type=int)
    lb.add_argument("--n", type=int)
    lb.add_argument("--eta", type=float, default=0.5)
    pr = sub.add_parser("predict")
    common(pr)
    pr.add_argument("--model", required=True, help="learned model JSON")
    pr.add_argument("--inputs", required=True, help="JSON list of inputs")
    return p


def _load_config(args, experiment: str) -> ExperimentConfig:
    if args.config:
        cfg = ExperimentConfig.load(args.config)
        if cfg.experiment != experiment:
            raise ConfigError(f"config is for {cfg.experiment!r}, command expects {experiment!r}")
    else:
        cfg = ExperimentConfig.from_dict({"experiment": experiment, **DEFAULTS.get(experiment, {})})
    return cfg.with_seed(args.seed)


def _emit(text: str, out: str | None):
    if out:
        with open(out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _cmd_sweep(args, experiment: str) -> int:
    cfg = _load_config(args, experiment)
    if args.threads < 1:
        raise ConfigError("--threads must be >= 1")
    rows = run(cfg, args.threads)
    checks = evaluate(experiment, rows) if (args.check or experiment == "moment_checks") else []
    if args.format == "json":
        extra = {"checks": [c.__dict__ for c in checks]} if checks else {}
        if experiment == "zne":
            extra["report"] = zne_report(rows)
        text = rows_to_json(rows, extra)
    else:
        text = rows_to_csv(rows, with_timing=args.record_timing)
    _emit(text, args.out or cfg.output)
    for c in checks:
        print(f"[{'PASS' if c.passed else 'FAIL'}] {c.name}: {c.detail}", file=sys.stderr)
    return EXIT_CHECK if any(not c.passed for c in checks) else EXIT_OK


def _cmd_lower_bound(args) -> int:
    if args.config:
        cfg = _load_config(args, "lower_bound")
        lb = cfg.lower_bound
        gamma, d, n, eta = float(lb["gamma"]), int(lb["d"]), int(lb["n"]), float(lb["eta"])
    else:
        if args.gamma is None or args.depth is None or args.n is None:
            raise ConfigError("lower-bound needs --gamma, --depth and --n (or --config)")
        gamma, d, n, eta = args.gamma, args.depth, args.n, args.eta
    try:
        m = lower_bound_samples(gamma, d, n, eta)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if args.format == "json":
        _emit(json.dumps({"gamma": gamma, "d": d, "n": n, "eta": eta, "m": m}) + "\n", args.out)
    else:
        _emit(f"gamma,d,n,eta,m\n{gamma!r},{d},{n},{eta!r},{m!r}\n", args.out)
    return EXIT_OK


def _cmd_learn(args) -> int:
    cfg = _load_config(args, "learn")
    spec, noise_spec = _points(cfg)[0]
    seed = derive_seed(cfg.seed, 0, 0)
    circuit = build_circuit(spec, seed)
    n = circuit.n
    oracle_sim._check_cap(n)
    rng = np.random.default_rng(seed)
    lp = max(cfg.learner.l_prime)
    meta = {"seed": cfg.seed, "circuit": spec.to_json(), "noise": noise_spec}
    if cfg.learn_kind == "state":
        from .runners import _dense_state

        rho = _dense_state(circuit.dumps(), json.dumps(noise_spec, sort_keys=True))
        ds = learners.generate_qst_dataset(rho, n, cfg.learner.n_data, cfg.learner.acquisition, rng)
        model = learners.estimate_state_coeffs(ds, n, lp)
    else:
        obs = observable_for(cfg, n)
        h = _heisenberg(circuit, noise_spec, obs)
        ds = learners.generate_qpt_dataset(h, n, cfg.learner.n_data, cfg.learner.acquisition, rng)
        model = learners.estimate_process_coeffs(ds, n, lp, obs)
        meta["observable"] = cfg.observable
    model.meta.update(meta)
    _emit(model.dumps() + "\n", args.out)
    return EXIT_OK


def parse_input(item, n: int):
    """One prediction input: ``{"stabilizer": ["Z+", ...]}`` or ``{"bloch": [[x, y, z], ...]}``."""
    if not isinstance(item, dict):
        raise ConfigError("each input must be an object")
    if "stabilizer" in item:
        labels = item["stabilizer"]
        if any(lab not in STAB_CODE for lab in labels):
            raise ConfigError(f"unknown stabilizer labels in {labels}")
        state = StabilizerProductState(tuple(labels))
    elif "bloch" in item:
        b = np.asarray(item["bloch"], dtype=float)
        if b.ndim != 2 or b.shape[1] != 3:
            raise ConfigError("bloch input must be a list of [x, y, z] triples")
        state = learners.ProductState(b)
    else:
        raise ConfigError("input needs a 'stabilizer' or 'bloch' field")
    if state.n != n:
        raise ConfigError(f"input has {state.n} qubits, model has {n}")
    return state


def _cmd_predict(args) -> int:
    try:
        with open(args.model) as fh:
            model = learners.LearnedModel.loads(fh.read())
        with open(args.inputs) as fh:
            items = json.load(fh)
    except (OSError, json.JSONDecodeError, KeyError) as exc:
        raise ConfigError(f"cannot read model or inputs: {exc}") from None
    if isinstance(items, dict):
        items = items.get("inputs", [])
    values = [learners.predict(model, parse_input(it, model.n)) for it in items]
    if args.format == "json":
        _emit(json.dumps({"predictions": values}) + "\n", args.out)
    else:
        _emit("index,value\n" + "".join(f"{i},{v!r}\n" for i, v in enumerate(values)), args.out)
    return EXIT_OK


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.command == "lower-bound":
            return _cmd_lower_bound(args)
        if args.command == "learn":
            return _cmd_learn(args)
        if args.command == "predict":
            return _cmd_predict(args)
        return _cmd_sweep(args, SUBCOMMANDS[args.command])
    except (ConfigError, oracle_sim.OracleSizeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
