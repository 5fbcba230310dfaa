"""Quantum-trajectory sampling for registers above the dense-oracle cap.

Each trajectory is a pure state obtained by sampling one Kraus operator per
qubit after every layer; averaging over trajectories gives unbiased estimates
of overlaps and low-weight Pauli coefficients with Monte-Carlo error bars.
"""

from __future__ import annotations

from itertools import combinations

import numpy as np

from ..circuits import Circuit
from ..noise import PAULIS, NoiseChannel
from ..pauli_core import SINGLE_QUBIT_STATES, STAB_LABELS, PauliString, enumerate_low_weight

MAX_TRAJECTORY_QUBITS = 20

_STAB_VECS = np.array([SINGLE_QUBIT_STATES[lab] for lab in STAB_LABELS])


def _apply_1q(t: np.ndarray, m: np.ndarray, q: int) -> np.ndarray:
    return np.moveaxis(np.tensordot(m, t, axes=([1], [q])), 0, q)


def _apply_2q(t: np.ndarray, u: np.ndarray, a: int, b: int) -> np.ndarray:
    t = np.tensordot(u.reshape(2, 2, 2, 2), t, axes=([2, 3], [a, b]))
    return np.moveaxis(t, [0, 1], [a, b])


def sample_trajectory(circuit: Circuit, noise: NoiseChannel | None, rng: np.random.Generator) -> np.ndarray:
    n = circuit.n
    if n > MAX_TRAJECTORY_QUBITS:
        raise ValueError(f"trajectory simulation limited to {MAX_TRAJECTORY_QUBITS} qubits")
    t = np.zeros((2,) * n, dtype=complex)
    t[(0,) * n] = 1.0
    kraus = None if noise is None else noise.kraus()
    for layer in circuit.layers:
        for g in layer:
            t = _apply_2q(t, g.unitary, *g.targets)
        if kraus is None:
            continue
        for q in range(n):
            branches = [_apply_1q(t, k, q) for k in kraus]
            probs = np.array([np.vdot(b, b).real for b in branches])
            k = rng.choice(len(branches), p=probs / probs.sum())
            t = branches[k] / np.sqrt(probs[k])
    return t.reshape(-1)


def stabilizer_overlaps(psi: np.ndarray, codes: np.ndarray, batch: int = 1024) -> np.ndarray:
    """``|<s_j|psi>|**2`` for stabilizer product states given as label codes."""
    n = codes.shape[1]
    out = np.empty(len(codes))
    for start in range(0, len(codes), batch):
        chunk = codes[start : start + batch]
        amp = np.broadcast_to(psi.reshape(1, -1), (len(chunk), psi.size))
        for q in range(n):
            amp = amp.reshape(len(chunk), 2, -1)
            amp = np.einsum("bi,bir->br", _STAB_VECS[chunk[:, q]].conj(), amp)
        out[start : start + batch] = np.abs(amp[:, 0]) ** 2
    return out


def reduced_density(psi: np.ndarray, qubits: tuple[int, ...], n: int) -> np.ndarray:
    t = psi.reshape((2,) * n)
    rest = [q for q in range(n) if q not in qubits]
    t = np.transpose(t, list(qubits) + rest).reshape(2 ** len(qubits), -1)
    return t @ t.conj().T


def low_weight_coeffs(psi: np.ndarray, n: int, l_prime: int) -> dict[PauliString, float]:
    """``2**-n <psi|P|psi>`` for every ``|P| <= l_prime`` from reduced density matrices."""
    rdms = {}
    for k in range(1, l_prime + 1):
        for sub in combinations(range(n), k):
            rdms[sub] = reduced_density(psi, sub, n)
    scale = 2.0**-n
    out = {}
    for p in enumerate_low_weight(n, l_prime):
        if p.weight() == 0:
            out[p] = scale
            continue
        sub = tuple(q for q, _ in p.support)
        op = np.ones((1, 1), dtype=complex)
        for _, a in p.support:
            op = np.kron(op, PAULIS["IXYZ".index(a)])
        out[p] = scale * float(np.trace(op @ rdms[sub]).real)
    return out


class TrajectoryValues:
    """Overlap provider averaging ``|<s|phi_k>|**2`` over sampled trajectories."""

    def __init__(self, circuit: Circuit, noise: NoiseChannel | None, num_trajectories: int, rng: np.random.Generator):
        self.n = circuit.n
        self.states = [sample_trajectory(circuit, noise, rng) for _ in range(num_trajectories)]

    def __call__(self, codes: np.ndarray) -> np.ndarray:
        codes = np.asarray(codes)
        return np.mean([stabilizer_overlaps(s, codes) for s in self.states], axis=0)

    def reference_coeffs(self, l_prime: int) -> tuple[dict[PauliString, float], dict[PauliString, float]]:
        """Trajectory-mean coefficients and their standard errors."""
        per = [low_weight_coeffs(s, self.n, l_prime) for s in self.states]
        keys = list(per[0])
        arr = np.array([[d[k] for k in keys] for d in per])
        mean = arr.mean(axis=0)
        sem = arr.std(axis=0, ddof=1) / np.sqrt(len(per)) if len(per) > 1 else np.zeros_like(mean)
        return dict(zip(keys, mean)), dict(zip(keys, sem))
