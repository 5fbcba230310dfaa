"""Exact dense simulation used as ground truth for small registers.

Density matrices and operators are ``2**n x 2**n`` complex arrays with qubit 0
as the most significant tensor factor.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from .circuits import Circuit
from .noise import PAULIS, NoiseChannel
from .pauli_core import (
    SINGLE_QUBIT_STATES,
    STAB_LABELS,
    PauliObservable,
    PauliString,
    StabilizerProductState,
)

MAX_QUBITS = 12

# projectors onto the six stabilizer states, indexed like STAB_LABELS
STAB_PROJECTORS = np.array(
    [np.outer(SINGLE_QUBIT_STATES[lab], SINGLE_QUBIT_STATES[lab].conj()) for lab in STAB_LABELS]
)
PAULI_STACK = np.array(PAULIS)


class OracleSizeError(ValueError):
    """Raised when a dense simulation would exceed the qubit cap."""


def _check_cap(n: int, cap: int = MAX_QUBITS):
    if n > cap:
        raise OracleSizeError(f"{n} qubits exceeds the dense-oracle cap of {cap}")


@dataclass(frozen=True, eq=False)
class OperatorMatrix:
    n: int
    data: np.ndarray

    def __post_init__(self):
        dim = 2**self.n
        data = np.asarray(self.data, dtype=complex)
        if data.shape != (dim, dim):
            raise ValueError(f"expected a {dim}x{dim} matrix, got {data.shape}")
        if np.max(np.abs(data - data.conj().T), initial=0.0) > 1e-10:
            raise ValueError("operator is not Hermitian")
        object.__setattr__(self, "data", data)

    def __sub__(self, other: "OperatorMatrix") -> "OperatorMatrix":
        return OperatorMatrix(self.n, self.data - other.data)


@dataclass(frozen=True, eq=False)
class DensityMatrix(OperatorMatrix):
    def __post_init__(self):
        super().__post_init__()
        tr = np.trace(self.data)
        if abs(tr - 1) > 1e-10:
            raise ValueError(f"density matrix trace is {tr}, expected 1")

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.data)[0])

    def dump(self) -> bytes:
        """Debug dump: little-endian header ``n`` (uint32) then row-major complex64 pairs."""
        return np.uint32(self.n).tobytes() + self.data.astype("<c8").tobytes()

    @classmethod
    def load(cls, blob: bytes) -> "DensityMatrix":
        n = int(np.frombuffer(blob[:4], dtype="<u4")[0])
        data = np.frombuffer(blob[4:], dtype="<c8").reshape(2**n, 2**n)
        return cls(n, data.astype(complex))


def zero_state(n: int) -> DensityMatrix:
    _check_cap(n)
    data = np.zeros((2**n, 2**n), dtype=complex)
    data[0, 0] = 1
    return DensityMatrix(n, data)


def maximally_mixed(n: int) -> DensityMatrix:
    _check_cap(n)
    return DensityMatrix(n, np.eye(2**n, dtype=complex) / 2**n)


def pure_density(psi: np.ndarray) -> DensityMatrix:
    psi = np.asarray(psi, dtype=complex)
    n = int(round(np.log2(psi.size)))
    psi = psi / np.linalg.norm(psi)
    return DensityMatrix(n, np.outer(psi, psi.conj()))


def stabilizer_density(psi: StabilizerProductState) -> DensityMatrix:
    return pure_density(psi.statevector())


def pauli_matrix(p: PauliString) -> np.ndarray:
    """Dense matrix of a Pauli string (standard, unnormalized)."""
    _check_cap(p.n)
    out = np.ones((1, 1), dtype=complex)
    for code in p.codes():
        out = np.kron(out, PAULIS[code])
    return out


def to_matrix(obj) -> np.ndarray:
    if isinstance(obj, PauliString):
        return pauli_matrix(obj)
    if isinstance(obj, PauliObservable):
        return observable_matrix(obj)
    if isinstance(obj, OperatorMatrix):
        return obj.data
    raise TypeError(f"cannot convert {type(obj).__name__} to a matrix")


def observable_matrix(o: PauliObservable) -> np.ndarray:
    _check_cap(o.n)
    out = np.zeros((2**o.n, 2**o.n), dtype=complex)
    for c, p in o.terms:
        out += c * pauli_matrix(p)
    return out


# tensor-network helpers ------------------------------------------------------


def _apply_two_qubit(t: np.ndarray, u: np.ndarray, a: int, b: int) -> np.ndarray:
    """Contract a 4x4 operator into axes ``a`` and ``b`` of a qubit tensor."""
    u4 = u.reshape(2, 2, 2, 2)
    t = np.tensordot(u4, t, axes=([2, 3], [a, b]))
    return np.moveaxis(t, [0, 1], [a, b])


def _superop(kraus: list[np.ndarray]) -> np.ndarray:
    # S[i, j, k, l] = sum_K K[i, k] conj(K[j, l]) so that rho'[i, j] = S[i, j, k, l] rho[k, l]
    return sum(np.einsum("ik,jl->ijkl", k, k.conj()) for k in kraus)


def _adjoint_superop(kraus: list[np.ndarray]) -> np.ndarray:
    # O'[i, j] = sum_K conj(K[k, i]) O[k, l] K[l, j]
    return sum(np.einsum("ki,lj->ijkl", k.conj(), k) for k in kraus)


def _apply_local_superop(t: np.ndarray, s: np.ndarray, q: int, n: int) -> np.ndarray:
    t = np.tensordot(s, t, axes=([2, 3], [q, n + q]))
    return np.moveaxis(t, [0, 1], [q, n + q])


def _apply_unitary_layer(t: np.ndarray, layer, n: int, adjoint: bool = False) -> np.ndarray:
    for g in layer:
        a, b = g.targets
        u = g.unitary.conj().T if adjoint else g.unitary
        t = _apply_two_qubit(t, u, a, b)
        t = _apply_two_qubit(t, u.conj(), n + a, n + b)
    return t


def evolve_density(
    circuit: Circuit, noise: NoiseChannel | None, rho_in: DensityMatrix, cap: int = MAX_QUBITS
) -> DensityMatrix:
    """Apply each layer's unitaries followed by ``noise`` on every qubit."""
    if circuit.n != rho_in.n:
        raise ValueError("circuit and state sizes differ")
    n = circuit.n
    _check_cap(n, cap)
    t = rho_in.data.reshape((2,) * (2 * n))
    sop = None if noise is None else _superop(noise.kraus())
    for layer in circuit.layers:
        t = _apply_unitary_layer(t, layer, n)
        if sop is not None:
            for q in range(n):
                t = _apply_local_superop(t, sop, q, n)
    data = t.reshape(2**n, 2**n)
    data = 0.5 * (data + data.conj().T)
    return DensityMatrix(n, data)


def adjoint_evolve_matrix(
    circuit: Circuit, noise: NoiseChannel | None, op: np.ndarray, cap: int = MAX_QUBITS
) -> np.ndarray:
    n = circuit.n
    _check_cap(n, cap)
    t = np.asarray(op, dtype=complex).reshape((2,) * (2 * n))
    sop = None if noise is None else _adjoint_superop(noise.kraus())
    for layer in reversed(circuit.layers):
        if sop is not None:
            for q in range(n):
                t = _apply_local_superop(t, sop, q, n)
        t = _apply_unitary_layer(t, layer, n, adjoint=True)
    return t.reshape(2**n, 2**n)


def adjoint_evolve_observable(
    circuit: Circuit, noise: NoiseChannel | None, o: PauliObservable, cap: int = MAX_QUBITS
) -> OperatorMatrix:
    """Heisenberg-picture evolution of ``o`` through the noisy circuit."""
    if o.n != circuit.n:
        raise ValueError("observable and circuit sizes differ")
    data = adjoint_evolve_matrix(circuit, noise, observable_matrix(o), cap)
    return OperatorMatrix(circuit.n, 0.5 * (data + data.conj().T))


def apply_circuit_to_state(circuit: Circuit, psi: np.ndarray | None = None) -> np.ndarray:
    """Noiseless statevector evolution (starts from ``|0^n>`` by default)."""
    n = circuit.n
    if psi is None:
        psi = np.zeros(2**n, dtype=complex)
        psi[0] = 1
    t = np.asarray(psi, dtype=complex).reshape((2,) * n)
    for layer in circuit.layers:
        for g in layer:
            t = _apply_two_qubit(t, g.unitary, *g.targets)
    return t.reshape(-1)


# measurements and coefficients -------------------------------------------------


def overlap(rho: OperatorMatrix, psi: StabilizerProductState) -> float:
    if rho.n != psi.n:
        raise ValueError("state sizes differ")
    v = psi.statevector()
    return float(np.real(v.conj() @ rho.data @ v))


def noisy_overlap(rho: OperatorMatrix, psi: StabilizerProductState, shots: int, rng: np.random.Generator) -> float:
    """SWAP-test estimate of ``<psi|rho|psi>`` from ``shots`` binomial outcomes."""
    if shots < 1:
        raise ValueError("shots must be >= 1")
    return swap_test_estimate(overlap(rho, psi), shots, rng)


def swap_test_estimate(v, shots: int, rng: np.random.Generator):
    p = np.clip((1 + np.asarray(v, dtype=float)) / 2, 0.0, 1.0)
    k = rng.binomial(shots, p)
    return 2 * k / shots - 1


def stabilizer_table(op: np.ndarray, n: int) -> np.ndarray:
    """``<psi|op|psi>`` for all ``6**n`` stabilizer product states.

    Entry ``sum_q code_q * 6**(n-1-q)`` of the flat result holds the value for
    the labels ``code``.
    """
    _check_cap(n)
    t = np.asarray(op, dtype=complex).reshape(1, 2**n, 2**n)
    rest = 2**n
    for _ in range(n):
        rest //= 2
        b = t.shape[0]
        t = t.reshape(b, 2, rest, 2, rest)
        # Tr over this qubit against each projector: sum_ij A[i, j] Pi[j, i]
        t = np.einsum("lji,biajc->blac", STAB_PROJECTORS, t).reshape(b * 6, rest, rest)
    return t.reshape(-1).real.copy()


def stabilizer_index(codes: np.ndarray) -> np.ndarray:
    """Flat :func:`stabilizer_table` index for each row of label codes."""
    codes = np.asarray(codes, dtype=np.int64)
    n = codes.shape[-1]
    weights = 6 ** np.arange(n - 1, -1, -1, dtype=np.int64)
    return codes @ weights


def schatten1(a: OperatorMatrix | np.ndarray) -> float:
    data = a.data if isinstance(a, OperatorMatrix) else np.asarray(a)
    if np.max(np.abs(data - data.conj().T), initial=0.0) > 1e-10:
        raise ValueError("schatten1 expects a Hermitian matrix")
    return float(np.sum(np.abs(np.linalg.eigvalsh(0.5 * (data + data.conj().T)))))


def exact_pauli_coeff(rho: OperatorMatrix, p: PauliString) -> float:
    if rho.n != p.n:
        raise ValueError("sizes differ")
    if p.weight() == 0:
        return float(np.trace(rho.data).real / 2**p.n)
    return float(np.real(np.sum(pauli_matrix(p).T * rho.data)) / 2**p.n)


def pauli_coefficient_tensor(op: np.ndarray, n: int) -> np.ndarray:
    """All ``2**-n Tr[P op]`` as a real ``(4,)*n`` tensor indexed by axis codes."""
    t = np.asarray(op, dtype=complex).reshape(1, 2**n, 2**n)
    rest = 2**n
    for _ in range(n):
        rest //= 2
        b = t.shape[0]
        t = t.reshape(b, 2, rest, 2, rest)
        t = np.einsum("pji,biajc->bpac", PAULI_STACK, t).reshape(b * 4, rest, rest) / 2
    return t.reshape((4,) * n).real.copy()


def operator_from_coeffs(coeffs: Mapping[PauliString, float], n: int) -> np.ndarray:
    """Dense ``sum_P c_P P``."""
    _check_cap(n)
    tensor = np.zeros((4,) * n)
    for p, c in coeffs.items():
        tensor[tuple(p.codes())] += c
    return operator_from_coefficient_tensor(tensor, n)


def operator_from_coefficient_tensor(tensor: np.ndarray, n: int) -> np.ndarray:
    t = np.asarray(tensor, dtype=complex).reshape(4**n, 1, 1)
    size = 1
    for _ in range(n):
        b = t.shape[0] // 4
        t = t.reshape(b, 4, size, size)
        # codes are consumed from the innermost qubit outwards, so each new factor is most significant
        t = np.einsum("bpac,pij->biajc", t, PAULI_STACK)
        size *= 2
        t = t.reshape(b, size, size)
    return t.reshape(2**n, 2**n)


def coeff_dict(op: np.ndarray, n: int, tol: float = 0.0) -> dict[PauliString, float]:
    tensor = pauli_coefficient_tensor(op, n)
    out = {}
    for idx in zip(*np.nonzero(np.abs(tensor) > tol)):
        out[PauliString.from_codes(idx)] = float(tensor[idx])
    return out


# classical shadows ---------------------------------------------------------------

_BASIS_ROTATIONS = (
    np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2),  # X
    np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2) @ np.diag([1, -1j]),  # Y
    np.eye(2, dtype=complex),  # Z
)


def _basis_probabilities(rho: np.ndarray, bases: tuple[int, ...]) -> np.ndarray:
    v = np.ones((1, 1), dtype=complex)
    for b in bases:
        v = np.kron(v, _BASIS_ROTATIONS[b])
    return np.clip(np.real(np.diag(v @ rho @ v.conj().T)), 0, None)


def sample_shadows(rho: OperatorMatrix, num_shadows: int, rng: np.random.Generator):
    """Random single-qubit Pauli-basis snapshots.

    Returns ``(bases, signs)`` with ``bases[k, q]`` in ``{1, 2, 3}`` (X, Y, Z)
    and ``signs[k, q] = +1/-1`` for measurement outcome 0/1.
    """
    n = rho.n
    _check_cap(n)
    settings = rng.integers(0, 3, size=(num_shadows, n))
    flat = settings @ (3 ** np.arange(n - 1, -1, -1))
    signs = np.empty((num_shadows, n), dtype=np.int8)
    bits = ((np.arange(2**n)[:, None] >> np.arange(n - 1, -1, -1)) & 1).astype(np.int8)
    for key in np.unique(flat):
        rows = np.nonzero(flat == key)[0]
        probs = _basis_probabilities(rho.data, tuple(settings[rows[0]]))
        outcomes = rng.choice(2**n, size=rows.size, p=probs / probs.sum())
        signs[rows] = 1 - 2 * bits[outcomes]
    return (settings + 1).astype(np.int8), signs


def shadow_pauli_values(bases: np.ndarray, signs: np.ndarray, p: PauliString) -> np.ndarray:
    """Per-snapshot estimates of ``2**-n Tr[rho P]``."""
    n = p.n
    vals = np.full(bases.shape[0], 2.0**-n)
    for q, a in p.support:
        code = "IXYZ".index(a)
        vals *= 3.0 * (bases[:, q] == code) * signs[:, q]
    return vals


def classical_shadow_coeffs(
    rho: OperatorMatrix, p_list: Iterable[PauliString], num_shadows: int, rng: np.random.Generator
) -> dict[PauliString, float]:
    bases, signs = sample_shadows(rho, num_shadows, rng)
    return {p: float(np.mean(shadow_pauli_values(bases, signs, p))) for p in p_list}
