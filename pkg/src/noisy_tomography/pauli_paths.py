"""Pauli path sums over layered noisy circuits.

A path is a sequence ``(s_0, ..., s_d)`` of Pauli strings, one per cut between
layers; ``s_0`` sits before the first layer.  Its total weight counts non-identity
factors over all ``d + 1`` cuts.  :func:`path_coefficient` returns the
normalized-basis amplitude (all-identity path gives ``2**(-n/2)``), while the
truncated expansions return standard-convention coefficients so that they can
be compared directly with :func:`oracle_sim.exact_pauli_coeff`.

Noise enters after every layer, so the decay applies to the cuts ``s_1 .. s_d``;
``s_0`` is never damped.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from itertools import product
from typing import Iterator

import numpy as np

from .circuits import Circuit
from .noise import NoiseChannel, PauliChannel, decompose_non_unital
from .pauli_core import PauliObservable, PauliString

CUTOFF = 1e-15


@dataclass(frozen=True)
class PauliPath:
    strings: tuple[PauliString, ...]

    def __post_init__(self):
        strings = tuple(self.strings)
        if not strings:
            raise ValueError("a path needs at least one string")
        if len({s.n for s in strings}) != 1:
            raise ValueError("all strings in a path must share the qubit count")
        object.__setattr__(self, "strings", strings)

    @classmethod
    def from_labels(cls, labels) -> "PauliPath":
        return cls(tuple(PauliString.from_label(lab) for lab in labels))

    @property
    def n(self) -> int:
        return self.strings[0].n

    def total_weight(self) -> int:
        return sum(s.weight() for s in self.strings)


@dataclass
class PathExpansion:
    n: int
    terms: dict[PauliString, float] = field(default_factory=dict)
    truncation_weight: int | None = None

    def merge(self, other: "PathExpansion") -> "PathExpansion":
        """Associative merge of partial sums, for per-worker accumulation."""
        if other.n != self.n:
            raise ValueError("cannot merge expansions on different registers")
        out = dict(self.terms)
        for p, c in other.terms.items():
            out[p] = out.get(p, 0.0) + c
        return PathExpansion(self.n, out, self.truncation_weight)

    def coefficient(self, p: PauliString) -> float:
        return self.terms.get(p, 0.0)


# ---------------------------------------------------------------------------
# single path coefficient


def _layer_transition(circuit: Circuit, layer_idx: int, before: np.ndarray, after: np.ndarray) -> float:
    """``Tr[s_after U s_before U^dagger]`` in the normalized basis, evaluated gate by gate."""
    layer = circuit.layers[layer_idx]
    val = 1.0
    touched = set()
    for g in layer:
        a, b = g.targets
        touched.update((a, b))
        val *= g.ptm[4 * after[a] + after[b], 4 * before[a] + before[b]]
        if val == 0.0:
            return 0.0
    for q in range(circuit.n):
        if q not in touched and before[q] != after[q]:
            return 0.0
    return float(val)


def path_coefficient(circuit: Circuit, path: PauliPath) -> float:
    """Noiseless path amplitude ``prod_i Tr(s_i C_i(s_{i-1})) <0^n|s_0|0^n>`` in the normalized basis."""
    if len(path.strings) != circuit.depth() + 1:
        raise ValueError(f"path has {len(path.strings)} cuts, circuit needs {circuit.depth() + 1}")
    if path.n != circuit.n:
        raise ValueError("path and circuit sizes differ")
    codes = [s.codes() for s in path.strings]
    if np.any((codes[0] == 1) | (codes[0] == 2)):
        return 0.0
    val = 2.0 ** (-circuit.n / 2)
    for i in range(circuit.depth()):
        val *= _layer_transition(circuit, i, codes[i], codes[i + 1])
        if val == 0.0:
            return 0.0
    return val


def transition_product(circuit: Circuit, path: PauliPath) -> float:
    """Path amplitude without the initial-state factor."""
    codes = [s.codes() for s in path.strings]
    val = 1.0
    for i in range(circuit.depth()):
        val *= _layer_transition(circuit, i, codes[i], codes[i + 1])
    return val


# ---------------------------------------------------------------------------
# legal path enumeration

_NONID_PAIRS = [(a, b) for a in range(4) for b in range(4) if (a, b) != (0, 0)]


def _layer_successors(circuit: Circuit, layer_idx: int, s: tuple[int, ...], budget: int):
    """Strings reachable through one layer under support compatibility, with weight <= budget."""
    n = circuit.n
    layer = circuit.layers[layer_idx]
    fixed = list(s)
    choices = []
    slots = []
    touched = set()
    for g in layer:
        a, b = g.targets
        touched.update((a, b))
        if s[a] == 0 and s[b] == 0:
            fixed[a] = fixed[b] = 0
        else:
            slots.append((a, b))
            choices.append(_NONID_PAIRS)
    base_weight = sum(1 for q in range(n) if q not in touched and s[q] != 0)
    if base_weight + len(slots) > budget:
        return
    for combo in product(*choices):
        w = base_weight + sum((x != 0) + (y != 0) for x, y in combo)
        if w > budget:
            continue
        out = list(fixed)
        for (a, b), (x, y) in zip(slots, combo):
            out[a], out[b] = x, y
        yield tuple(out), w


def _initial_strings(n: int, budget: int, zero_input: bool):
    axes = (0, 3) if zero_input else (0, 1, 2, 3)
    for codes in product(axes, repeat=n):
        w = sum(c != 0 for c in codes)
        if w <= budget:
            yield codes, w


def enumerate_legal_paths(
    circuit: Circuit, max_weight: int, zero_input: bool = True, max_yield: int = 10_000_000
) -> Iterator[PauliPath]:
    """Depth-first enumeration of structurally legal paths with total weight <= ``max_weight``.

    Legality: through each gate an identity pair maps to the identity pair and a
    non-identity pair to any of the 15 non-identity pairs; idle qubits keep
    their Pauli.  With ``zero_input`` the first cut is restricted to I/Z, the
    only strings with a non-zero expectation in ``|0^n>``.
    """
    n, d = circuit.n, circuit.depth()
    yielded = 0

    def rec(cut: int, stack: list, used: int):
        nonlocal yielded
        if cut == d:
            yielded += 1
            if yielded > max_yield:
                raise RuntimeError(f"legal-path enumeration exceeded {max_yield} paths")
            yield PauliPath(tuple(PauliString.from_codes(c) for c in stack))
            return
        for nxt, w in _layer_successors(circuit, cut, stack[-1], max_weight - used):
            stack.append(nxt)
            yield from rec(cut + 1, stack, used + w)
            stack.pop()

    for s0, w0 in _initial_strings(n, max_weight, zero_input):
        yield from rec(0, [s0], w0)


def count_legal_paths(circuit: Circuit, max_weight: int, zero_input: bool = True) -> dict[int, int]:
    """Number of legal paths per exact total weight, up to ``max_weight``."""
    d = circuit.depth()
    states: dict[tuple, int] = defaultdict(int)
    for s0, w0 in _initial_strings(circuit.n, max_weight, zero_input):
        states[(s0, w0)] += 1
    for i in range(d):
        nxt: dict[tuple, int] = defaultdict(int)
        for (s, w), cnt in states.items():
            for t, wt in _layer_successors(circuit, i, s, max_weight - w):
                nxt[(t, w + wt)] += cnt
        states = nxt
    out: dict[int, int] = defaultdict(int)
    for (_, w), cnt in states.items():
        out[w] += cnt
    return {w: out.get(w, 0) for w in range(max_weight + 1)}


# ---------------------------------------------------------------------------
# truncated path sums


def _apply_gate(states: dict, gate, transpose: bool) -> dict:
    a, b = gate.targets
    r = gate.ptm.T if transpose else gate.ptm
    out: dict = defaultdict(float)
    for (s, w), c in states.items():
        col = r[:, 4 * s[a] + s[b]]
        for k in np.nonzero(np.abs(col) > CUTOFF)[0]:
            t = list(s)
            t[a], t[b] = divmod(int(k), 4)
            out[(tuple(t), w)] += c * col[k]
    return out


def _apply_single_qubit_map(states: dict, m: np.ndarray, n: int) -> dict:
    """Apply the same 4x4 Pauli-basis map on every qubit (``m[:, j]`` = image of axis ``j``)."""
    for q in range(n):
        out: dict = defaultdict(float)
        for (s, w), c in states.items():
            col = m[:, s[q]]
            for k in np.nonzero(np.abs(col) > CUTOFF)[0]:
                t = list(s)
                t[q] = int(k)
                out[(tuple(t), w)] += c * col[k]
        states = out
    return states


def _reweigh_and_prune(states: dict, limit: int) -> dict:
    out: dict = defaultdict(float)
    for (s, w), c in states.items():
        w2 = w + sum(x != 0 for x in s)
        if w2 <= limit:
            out[(s, w2)] += c
    return out


def _decay(states: dict, factors: np.ndarray) -> dict:
    out = {}
    for (s, w), c in states.items():
        f = 1.0
        for x in s:
            f *= factors[x]
        out[(s, w)] = c * f
    return out


def _bucket(states: dict, n: int) -> dict[PauliString, float]:
    acc: dict[tuple, float] = defaultdict(float)
    for (s, _), c in states.items():
        acc[s] += c
    return {PauliString.from_codes(s): c for s, c in sorted(acc.items()) if c != 0.0}


def _unital_decays(noise, per_axis: bool) -> np.ndarray:
    if noise is None:
        return np.ones(4)
    if isinstance(noise, (int, float)):
        g = float(noise)
        if not 0 <= g <= 1:
            raise ValueError("decay rate must lie in [0, 1]")
        return np.array([1.0, 1 - g, 1 - g, 1 - g])
    t = noise.transfer_matrix()
    if np.max(np.abs(t - np.diag(np.diag(t)))) > 1e-12:
        raise ValueError("state-side path sums need a unital Pauli-diagonal channel")
    if per_axis or not isinstance(noise, PauliChannel):
        return np.diag(t).copy()
    g = noise.uniform_rate()
    return np.array([1.0, 1 - g, 1 - g, 1 - g])


def truncated_state_coeffs(circuit: Circuit, noise, l: int, per_axis: bool = False) -> PathExpansion:
    """Sum of damped paths with total weight <= ``l``, bucketed by the final string.

    ``noise`` is a decay rate, a Pauli-diagonal channel or ``None``.  Pauli
    channels use the conservative uniform rate unless ``per_axis`` is set.
    """
    n = circuit.n
    decays = _unital_decays(noise, per_axis)
    states: dict = defaultdict(float)
    for s0, w0 in _initial_strings(n, l, zero_input=True):
        states[(s0, w0)] += 2.0**-n
    for layer in circuit.layers:
        for g in layer:
            states = _apply_gate(states, g, transpose=False)
        states = _reweigh_and_prune(states, l)
        states = _decay(states, decays)
    return PathExpansion(n, _bucket(states, n), l)


def truncated_adjoint_coeffs(
    circuit: Circuit, noise: NoiseChannel | None, o: PauliObservable, l: int
) -> PathExpansion:
    """Heisenberg path sum for ``C^dagger(O)`` bucketed by the initial string.

    Non-unital channels are split as a depolarizing decay times the map ``E'``;
    the decay uses the effective rate and ``E'^dagger`` is applied exactly.
    """
    n = circuit.n
    if o.n != n:
        raise ValueError("observable and circuit sizes differ")
    if noise is None:
        decays, eprime_adj = np.ones(4), np.eye(4)
    else:
        dec = decompose_non_unital(noise)
        g = dec.gamma_eff
        decays = np.array([1.0, 1 - g, 1 - g, 1 - g])
        eprime_adj = dec.e_prime.T
    states: dict = defaultdict(float)
    for c, p in o.terms:
        w = p.weight()
        if w <= l:
            states[(tuple(int(x) for x in p.codes()), w)] += c
    for layer in reversed(circuit.layers):
        states = _decay(states, decays)
        states = _apply_single_qubit_map(states, eprime_adj, n)
        for g_ in layer:
            states = _apply_gate(states, g_, transpose=True)
        states = _reweigh_and_prune(states, l)
    return PathExpansion(n, _bucket(states, n), l)


def full_weight(circuit: Circuit) -> int:
    return circuit.n * (circuit.depth() + 1)


def log_count_slope(counts: dict[int, int], weights) -> float:
    """Least-squares slope of ``log(cumulative count)`` against weight."""
    ws = np.array(list(weights), dtype=float)
    cum = np.array([sum(c for w, c in counts.items() if w <= k) for k in ws], dtype=float)
    return float(np.polyfit(ws, np.log(cum), 1)[0])


LOG15 = math.log(15)
