"""Single-qubit noise channels and their Pauli transfer matrices.

Transfer matrices are plain 4x4 ``numpy`` arrays in the basis ``(I, X, Y, Z)``
with ``T[i, j] = 1/2 Tr[P_i E(P_j)]``.  Composition ``E2 o E1`` corresponds to
``T2 @ T1``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Mapping

import numpy as np

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (I2, X, Y, Z)

TOL = 1e-12


class NoiseChannel:
    """Base class for the supported single-qubit channels."""

    def kraus(self) -> list[np.ndarray]:
        raise NotImplementedError

    def transfer_matrix(self) -> np.ndarray:
        return ptm_from_kraus(self.kraus())

    def is_unital(self, tol: float = 1e-12) -> bool:
        t = self.transfer_matrix()
        return bool(np.all(np.abs(t[1:, 0]) <= tol))

    def to_spec(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class Depolarizing(NoiseChannel):
    gamma: float

    def __post_init__(self):
        _check_rate(self.gamma, "depolarizing")

    def kraus(self):
        g = self.gamma
        return [np.sqrt(1 - 3 * g / 4) * I2] + [np.sqrt(g / 4) * p for p in (X, Y, Z)]

    def transfer_matrix(self):
        return np.diag([1.0, 1 - self.gamma, 1 - self.gamma, 1 - self.gamma])

    def to_spec(self):
        return {"type": "depolarizing", "gamma": self.gamma}


@dataclass(frozen=True)
class PauliChannel(NoiseChannel):
    """``rho -> g1 rho + g2 X rho X + g3 Y rho Y + g4 Z rho Z``."""

    gammas: tuple[float, float, float, float]

    def __post_init__(self):
        gs = tuple(float(g) for g in self.gammas)
        if len(gs) != 4:
            raise ValueError("a Pauli channel needs exactly four probabilities")
        if min(gs) < 0 or abs(sum(gs) - 1) > TOL:
            raise ValueError(f"Pauli channel probabilities must be >= 0 and sum to 1, got {gs}")
        object.__setattr__(self, "gammas", gs)

    def kraus(self):
        return [np.sqrt(g) * p for g, p in zip(self.gammas, PAULIS)]

    def transfer_matrix(self):
        g1, g2, g3, g4 = self.gammas
        return np.diag([1.0, 1 - 2 * (g3 + g4), 1 - 2 * (g2 + g4), 1 - 2 * (g2 + g3)])

    def uniform_rate(self) -> float:
        """Conservative single decay rate bounding all three axis decays."""
        _, g2, g3, g4 = self.gammas
        return min(g2 + g3, g2 + g4, g3 + g4)

    def to_spec(self):
        return {"type": "pauli", "gammas": list(self.gammas)}


@dataclass(frozen=True)
class AmplitudeDamping(NoiseChannel):
    gamma: float

    def __post_init__(self):
        _check_rate(self.gamma, "amplitude damping")

    def kraus(self):
        g = self.gamma
        k0 = np.array([[1, 0], [0, np.sqrt(1 - g)]], dtype=complex)
        k1 = np.array([[0, np.sqrt(g)], [0, 0]], dtype=complex)
        return [k0, k1]

    def transfer_matrix(self):
        g = self.gamma
        s = np.sqrt(1 - g)
        return np.array(
            [
                [1.0, 0.0, 0.0, 0.0],
                [0.0, s, 0.0, 0.0],
                [0.0, 0.0, s, 0.0],
                [g, 0.0, 0.0, 1 - g],
            ]
        )

    def to_spec(self):
        return {"type": "amplitude_damping", "gamma": self.gamma}


@dataclass(frozen=True)
class Composed(NoiseChannel):
    """Channels applied left to right: ``parts[0]`` acts first."""

    parts: tuple[NoiseChannel, ...]

    def __post_init__(self):
        parts = tuple(self.parts)
        if not parts:
            raise ValueError("a composed channel needs at least one part")
        object.__setattr__(self, "parts", parts)

    def kraus(self):
        ops = [I2]
        for ch in self.parts:
            ops = [k @ a for k in ch.kraus() for a in ops]
        return ops

    def transfer_matrix(self):
        t = np.eye(4)
        for ch in self.parts:
            t = ch.transfer_matrix() @ t
        return t

    def to_spec(self):
        return {"type": "composed", "parts": [p.to_spec() for p in self.parts]}


def identity_channel() -> PauliChannel:
    return PauliChannel((1.0, 0.0, 0.0, 0.0))


def _check_rate(g: float, what: str):
    if not 0.0 <= g < 1.0:
        raise ValueError(f"{what} rate must lie in [0, 1), got {g}")


def ptm_from_kraus(kraus: list[np.ndarray]) -> np.ndarray:
    t = np.empty((4, 4))
    for j, pj in enumerate(PAULIS):
        out = sum(k @ pj @ k.conj().T for k in kraus)
        for i, pi in enumerate(PAULIS):
            t[i, j] = 0.5 * np.trace(pi @ out).real
    return t


def transfer_matrix(ch: NoiseChannel) -> np.ndarray:
    return ch.transfer_matrix()


def adjoint_transfer_matrix(ch: NoiseChannel) -> np.ndarray:
    """PTM of the Heisenberg-picture map; the transpose in the real Pauli basis."""
    return ch.transfer_matrix().T.copy()


def effective_depolarizing_rate(ch: NoiseChannel) -> float:
    """``1 - chi`` where ``chi`` is the largest Frobenius gain of the adjoint on traceless inputs.

    The adjoint restricted to traceless inputs is ``T[1:, :].T``; its operator
    norm includes leakage onto the identity.
    """
    t = ch.transfer_matrix()
    chi = float(np.linalg.svd(t[1:, :], compute_uv=False)[0])
    if chi <= 1e-9:
        raise ValueError("channel contracts every traceless operator to zero; effective rate would be 1")
    return max(0.0, 1.0 - chi)


@dataclass(frozen=True)
class NonUnitalDecomposition:
    """``E = E_depo(gamma_eff) o E'`` with ``e_prime`` the PTM of ``E'``."""

    gamma_eff: float
    e_prime: np.ndarray

    def e_prime_adjoint(self) -> np.ndarray:
        return self.e_prime.T.copy()

    def identity_leakage_sq(self, axis: int = 3) -> float:
        """Squared identity coefficient of ``E'^dagger`` applied to one Pauli axis."""
        return float(self.e_prime[axis, 0] ** 2)

    def recompose(self) -> np.ndarray:
        g = self.gamma_eff
        return np.diag([1.0, 1 - g, 1 - g, 1 - g]) @ self.e_prime


def decompose_non_unital(ch: NoiseChannel) -> NonUnitalDecomposition:
    g = effective_depolarizing_rate(ch)
    if g >= 1 - 1e-9:
        raise ValueError(f"effective depolarizing rate {g} too close to 1")
    t = ch.transfer_matrix()
    scale = np.array([1.0, 1 / (1 - g), 1 / (1 - g), 1 / (1 - g)])
    return NonUnitalDecomposition(g, scale[:, None] * t)


def channel_from_spec(spec: Mapping[str, Any]) -> NoiseChannel:
    """Build a channel from its JSON description."""
    try:
        kind = spec["type"]
    except (KeyError, TypeError):
        raise ValueError(f"noise spec needs a 'type' field: {spec!r}") from None
    if kind == "depolarizing":
        return Depolarizing(float(spec["gamma"]))
    if kind == "amplitude_damping":
        return AmplitudeDamping(float(spec["gamma"]))
    if kind == "pauli":
        return PauliChannel(tuple(spec["gammas"]))
    if kind == "composed":
        return Composed(tuple(channel_from_spec(p) for p in spec["parts"]))
    raise ValueError(f"unknown noise type {kind!r}")
