"""Layered two-qubit circuits: random brickwork/staircase, TFIM Trotter steps, entangling preps.

A :class:`Circuit` is a list of layers; every layer holds gates on disjoint
qubit pairs and is followed by one round of single-qubit noise on every qubit.
Single-qubit rotations are folded into neighbouring two-qubit gates so that
all gates share the same 4x4 representation.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Sequence

import numpy as np

from .noise import I2, X, Y, Z

ARCHITECTURES = ("brickwork", "staircase", "custom", "tfim", "entangler")

CNOT = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)
HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
PHASE = np.diag([1, 1j]).astype(complex)

# two-qubit Pauli basis, index 4*a + b for P_a (x) P_b
PAULI2 = np.array([np.kron(a, b) for a in (I2, X, Y, Z) for b in (I2, X, Y, Z)])


@dataclass(frozen=True, eq=False)
class Gate:
    unitary: np.ndarray
    targets: tuple[int, int]

    def __post_init__(self):
        u = np.asarray(self.unitary, dtype=complex)
        if u.shape != (4, 4):
            raise ValueError(f"gate unitary must be 4x4, got {u.shape}")
        if np.max(np.abs(u.conj().T @ u - np.eye(4))) > 1e-12:
            raise ValueError("gate matrix is not unitary")
        a, b = (int(t) for t in self.targets)
        if a == b:
            raise ValueError("gate targets must be distinct")
        object.__setattr__(self, "unitary", u)
        object.__setattr__(self, "targets", (a, b))

    @cached_property
    def ptm(self) -> np.ndarray:
        """16x16 real matrix ``R[a, b] = Tr[P_a U P_b U^dagger] / 4``."""
        return gate_ptm(self.unitary)


def gate_ptm(u: np.ndarray) -> np.ndarray:
    conj = np.einsum("ij,bjk,lk->bil", u, PAULI2, u.conj())
    return np.einsum("aji,bij->ab", PAULI2, conj).real / 4


@dataclass(frozen=True, eq=False)
class Circuit:
    n: int
    layers: tuple[tuple[Gate, ...], ...]
    architecture: str = "custom"
    seed: int | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("circuit needs at least one qubit")
        if self.architecture not in ARCHITECTURES:
            raise ValueError(f"unknown architecture {self.architecture!r}")
        layers = tuple(tuple(layer) for layer in self.layers)
        for i, layer in enumerate(layers):
            used: set[int] = set()
            for g in layer:
                for q in g.targets:
                    if not 0 <= q < self.n:
                        raise ValueError(f"gate target {q} out of range in layer {i}")
                    if q in used:
                        raise ValueError(f"qubit {q} used twice in layer {i}")
                    used.add(q)
        object.__setattr__(self, "layers", layers)

    def depth(self) -> int:
        return len(self.layers)

    def __iter__(self):
        return iter(self.layers)

    def extended(self, other: "Circuit") -> "Circuit":
        if other.n != self.n:
            raise ValueError("cannot concatenate circuits on different registers")
        return Circuit(self.n, self.layers + other.layers, self.architecture, self.seed, dict(self.meta))

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "architecture": self.architecture,
            "seed": self.seed,
            "layers": [
                [
                    {
                        "targets": list(g.targets),
                        "unitary": [[float(z.real), float(z.imag)] for z in g.unitary.ravel()],
                    }
                    for g in layer
                ]
                for layer in self.layers
            ],
        }

    @classmethod
    def from_json(cls, data: dict) -> "Circuit":
        layers = []
        for layer in data["layers"]:
            gates = []
            for g in layer:
                u = np.array([complex(re, im) for re, im in g["unitary"]]).reshape(4, 4)
                gates.append(Gate(u, tuple(g["targets"])))
            layers.append(tuple(gates))
        return cls(int(data["n"]), tuple(layers), data.get("architecture", "custom"), data.get("seed"))

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


def sample_haar_su4(rng: np.random.Generator) -> np.ndarray:
    """Haar-random element of SU(4) via Ginibre QR with phase-fixed R diagonal."""
    g = (rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))) / np.sqrt(2)
    q, r = np.linalg.qr(g)
    d = np.diag(r)
    q = q * (d / np.abs(d))
    return q / np.linalg.det(q) ** 0.25


def sample_haar_su4_batch(count: int, rng: np.random.Generator) -> np.ndarray:
    """``count`` independent Haar draws, shape ``(count, 4, 4)``."""
    g = (rng.standard_normal((count, 4, 4)) + 1j * rng.standard_normal((count, 4, 4))) / np.sqrt(2)
    q, r = np.linalg.qr(g)
    d = np.diagonal(r, axis1=1, axis2=2)
    q = q * (d / np.abs(d))[:, None, :]
    return q / (np.linalg.det(q) ** 0.25)[:, None, None]


def _canonical_key(u: np.ndarray) -> bytes:
    flat = u.ravel()
    k = int(np.argmax(np.abs(flat) > 1e-6))
    v = flat / (flat[k] / abs(flat[k]))
    v = np.round(np.concatenate([v.real, v.imag]), 6) + 0.0
    return v.tobytes()


@lru_cache(maxsize=1)
def two_qubit_clifford_group() -> np.ndarray:
    """All 11520 two-qubit Cliffords modulo global phase, as an ``(11520, 4, 4)`` array."""
    gens = [
        np.kron(HADAMARD, I2),
        np.kron(I2, HADAMARD),
        np.kron(PHASE, I2),
        np.kron(I2, PHASE),
        CNOT,
    ]
    ident = np.eye(4, dtype=complex)
    seen = {_canonical_key(ident)}
    elems = [ident]
    frontier = [ident]
    while frontier:
        nxt = []
        for u in frontier:
            for g in gens:
                v = g @ u
                key = _canonical_key(v)
                if key not in seen:
                    seen.add(key)
                    elems.append(v)
                    nxt.append(v)
        frontier = nxt
    return np.array(elems)


def sample_two_qubit_clifford(rng: np.random.Generator) -> np.ndarray:
    group = two_qubit_clifford_group()
    return group[rng.integers(len(group))].copy()


GATE_ENSEMBLES = {"haar": sample_haar_su4, "clifford": sample_two_qubit_clifford}


def _brickwork_pairs(n: int, parity: int) -> list[tuple[int, int]]:
    return [(q, q + 1) for q in range(parity, n - 1, 2)]


def build_random_circuit(
    n: int,
    d: int,
    architecture: str = "brickwork",
    gate_ensemble: str = "haar",
    rng: np.random.Generator | None = None,
    seed: int | None = None,
) -> Circuit:
    """Random circuit with fresh 2-design gates.

    ``brickwork`` alternates even and staggered pair layers, ``d`` layers in
    total.  ``staircase`` repeats the stepwise string ``(n-1, n-2), ..., (1, 0)``
    ``d`` times; each step is its own layer because consecutive gates overlap.
    """
    if n < 2 or d < 1:
        raise ValueError("random circuits need n >= 2 and d >= 1")
    if gate_ensemble not in GATE_ENSEMBLES:
        raise ValueError(f"unknown gate ensemble {gate_ensemble!r}")
    if rng is None:
        rng = np.random.default_rng(seed)
    draw = GATE_ENSEMBLES[gate_ensemble]
    layers = []
    if architecture == "brickwork":
        for i in range(d):
            pairs = _brickwork_pairs(n, i % 2) or _brickwork_pairs(n, 0)
            layers.append(tuple(Gate(draw(rng), p) for p in pairs))
    elif architecture == "staircase":
        for _ in range(d):
            for q in range(n - 1, 0, -1):
                layers.append((Gate(draw(rng), (q, q - 1)),))
    else:
        raise ValueError(f"invalid random architecture {architecture!r}")
    return Circuit(n, tuple(layers), architecture, seed, {"gate_ensemble": gate_ensemble})


def rx(theta: float) -> np.ndarray:
    return np.cos(theta / 2) * I2 - 1j * np.sin(theta / 2) * X


def ry(theta: float) -> np.ndarray:
    return np.cos(theta / 2) * I2 - 1j * np.sin(theta / 2) * Y


def rz(theta: float) -> np.ndarray:
    return np.cos(theta / 2) * I2 - 1j * np.sin(theta / 2) * Z


def rzz(theta: float) -> np.ndarray:
    """``exp(-i theta/2 Z(x)Z)``."""
    phases = np.exp(-0.5j * theta * np.array([1, -1, -1, 1]))
    return np.diag(phases)


TFIM_THETA_J = -np.pi / 2


def grid_edge_colors(rows: int, cols: int) -> list[list[tuple[int, int]]]:
    """Nearest-neighbour edges of a rows x cols grid split into four disjoint colour classes."""
    horiz = [[], []]
    vert = [[], []]
    for r in range(rows):
        for c in range(cols - 1):
            horiz[c % 2].append((r * cols + c, r * cols + c + 1))
    for r in range(rows - 1):
        for c in range(cols):
            vert[r % 2].append((r * cols + c, (r + 1) * cols + c))
    return [horiz[0], horiz[1], vert[0], vert[1]]


def build_tfim_circuit(rows: int, cols: int, layers: int, theta_h: float) -> Circuit:
    """Trotterized 2D transverse-field Ising evolution.

    Each Trotter step applies ``R_ZZ(-pi/2)`` on every grid edge (one circuit
    layer per non-empty colour class), then ``R_X(theta_h)`` on every qubit,
    folded into the last ZZ gate touching that qubit.  ``layers`` counts Trotter
    steps; ``circuit.depth()`` counts noisy circuit layers.
    """
    if rows < 1 or cols < 1 or layers < 1:
        raise ValueError("grid dimensions and layer count must be positive")
    n = rows * cols
    if n < 2:
        raise ValueError("TFIM grid needs at least two qubits")
    colors = [c for c in grid_edge_colors(rows, cols) if c]
    last_color = {}
    for ci, edges in enumerate(colors):
        for a, b in edges:
            last_color[a] = ci
            last_color[b] = ci
    zz = rzz(TFIM_THETA_J)
    rot = rx(theta_h)
    step = []
    for ci, edges in enumerate(colors):
        gates = []
        for a, b in edges:
            ua = rot if last_color[a] == ci else I2
            ub = rot if last_color[b] == ci else I2
            gates.append(Gate(np.kron(ua, ub) @ zz, (a, b)))
        step.append(tuple(gates))
    meta = {
        "rows": rows,
        "cols": cols,
        "theta_h": theta_h,
        "trotter_steps": layers,
        "layers_per_step": len(step),
        "edges": sum(len(c) for c in colors),
    }
    return Circuit(n, tuple(step) * layers, "tfim", None, meta)


def build_entangled_prep(n: int, thetas, phis, num_layers: int = 1) -> Circuit:
    """State-preparation circuit: ``R_Z(phi) R_Y(theta)`` on each qubit then a cyclic CNOT chain.

    ``thetas`` and ``phis`` are either length-``n`` (reused for every layer) or
    shaped ``(num_layers, n)``.  Each CNOT occupies its own layer; the rotations
    are folded into the first CNOT touching each qubit.
    """
    if n < 2 or num_layers < 1:
        raise ValueError("entangling prep needs n >= 2 and at least one layer")
    th = np.asarray(thetas, dtype=float)
    ph = np.asarray(phis, dtype=float)
    if th.ndim == 1:
        th = np.tile(th, (num_layers, 1))
    if ph.ndim == 1:
        ph = np.tile(ph, (num_layers, 1))
    if th.shape != (num_layers, n) or ph.shape != (num_layers, n):
        raise ValueError(f"angle arrays must have {n} entries per layer for {num_layers} layers")
    layers = []
    for k in range(num_layers):
        rots = [rz(ph[k, q]) @ ry(th[k, q]) for q in range(n)]
        pending = set(range(n))
        # on two qubits the ring has a single bond, so the wrap-around CNOT is dropped
        for q in range(n if n > 2 else 1):
            ctrl, tgt = q, (q + 1) % n
            ua = rots[ctrl] if ctrl in pending else I2
            ub = rots[tgt] if tgt in pending else I2
            pending -= {ctrl, tgt}
            layers.append((Gate(CNOT @ np.kron(ua, ub), (ctrl, tgt)),))
    return Circuit(n, tuple(layers), "entangler", None, {"prep_layers": num_layers})


def identity_layers(n: int, count: int) -> Circuit:
    """``count`` gate-free layers; under noise each one applies a round of idle noise."""
    return Circuit(n, ((),) * count, "custom")


def stretch_layers(circuit: Circuit, factor: int) -> Circuit:
    """Follow every layer by ``factor - 1`` idle layers.

    The noiseless unitary is unchanged while the number of noise rounds grows
    by ``factor``.
    """
    if factor < 1:
        raise ValueError("stretch factor must be >= 1")
    layers = []
    for layer in circuit.layers:
        layers.append(layer)
        layers.extend([()] * (factor - 1))
    meta = dict(circuit.meta, stretch=factor)
    return Circuit(circuit.n, tuple(layers), circuit.architecture, circuit.seed, meta)


def random_entangled_prep(n: int, num_layers: int, rng: np.random.Generator) -> Circuit:
    thetas = rng.uniform(0, 2 * np.pi, size=(num_layers, n))
    phis = rng.uniform(0, 2 * np.pi, size=(num_layers, n))
    return build_entangled_prep(n, thetas, phis, num_layers)


def embed_single_qubit(u1: np.ndarray, qubit: int, partner: int, n: int) -> Gate:
    """Wrap a one-qubit unitary as a two-qubit gate acting trivially on ``partner``."""
    if not 0 <= partner < n:
        raise ValueError("partner qubit out of range")
    return Gate(np.kron(u1, I2), (qubit, partner))


def layer_from_pairs(pairs: Sequence[tuple[int, int]], unitaries: Sequence[np.ndarray]):
    return tuple(Gate(u, p) for u, p in zip(unitaries, pairs))
