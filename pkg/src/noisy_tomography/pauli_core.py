"""Sparse Pauli strings, stabilizer product states and low-weight enumeration.

Conventions used across the package:

* Pauli axes are encoded as integers ``I=0, X=1, Y=2, Z=3``.
* Qubit 0 is the most significant (leftmost) tensor factor.
* Coefficients use standard (unnormalized) Pauli matrices, so that
  ``rho = sum_P alpha_P P`` with ``alpha_P = 2**-n Tr[P rho]``.  The
  normalized-Pauli coefficient is ``2**(n/2) * alpha_P`` (see
  :func:`normalized_scale`); it is never stored.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import comb
from typing import Iterator, Mapping, Sequence

import numpy as np

AXES = "IXYZ"
AXIS_CODE = {c: i for i, c in enumerate(AXES)}

# single-qubit stabilizer labels, in the order |0>, |1>, |+>, |->, |y+>, |y->
STAB_LABELS = ("Z+", "Z-", "X+", "X-", "Y+", "Y-")
STAB_CODE = {lab: i for i, lab in enumerate(STAB_LABELS)}

# STAB_EXPECT[label, axis] = <psi_label| sigma_axis |psi_label>
STAB_EXPECT = np.array(
    [
        [1, 0, 0, 1],
        [1, 0, 0, -1],
        [1, 1, 0, 0],
        [1, -1, 0, 0],
        [1, 0, 1, 0],
        [1, 0, -1, 0],
    ],
    dtype=np.int8,
)

# Bloch vectors (x, y, z) of the six stabilizer states
STAB_BLOCH = STAB_EXPECT[:, 1:].astype(float)


def normalized_scale(n: int) -> float:
    """Factor converting a standard-convention coefficient to the normalized one."""
    return 2.0 ** (n / 2)


@dataclass(frozen=True)
class PauliString:
    """An n-qubit Pauli word without phase.

    ``support`` is a tuple of ``(qubit, axis)`` pairs sorted by qubit, with
    ``axis`` one of ``"X"``, ``"Y"``, ``"Z"``.
    """

    n: int
    support: tuple[tuple[int, str], ...] = ()

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"qubit count must be >= 1, got {self.n}")
        sup = tuple(sorted((int(q), str(a)) for q, a in self.support))
        seen = set()
        for q, a in sup:
            if not 0 <= q < self.n:
                raise ValueError(f"qubit index {q} out of range for n={self.n}")
            if a not in ("X", "Y", "Z"):
                raise ValueError(f"invalid Pauli axis {a!r}")
            if q in seen:
                raise ValueError(f"duplicate qubit index {q}")
            seen.add(q)
        object.__setattr__(self, "support", sup)

    @classmethod
    def identity(cls, n: int) -> "PauliString":
        return cls(n, ())

    @classmethod
    def from_label(cls, label: str) -> "PauliString":
        """Parse a dense label such as ``"IXZ"`` (qubit 0 first)."""
        label = label.strip().upper()
        if not label or any(c not in AXES for c in label):
            raise ValueError(f"invalid Pauli label {label!r}")
        return cls(len(label), tuple((i, c) for i, c in enumerate(label) if c != "I"))

    @classmethod
    def from_codes(cls, codes: Sequence[int]) -> "PauliString":
        return cls(len(codes), tuple((i, AXES[c]) for i, c in enumerate(codes) if c))

    @classmethod
    def single(cls, n: int, qubit: int, axis: str) -> "PauliString":
        return cls(n, ((qubit, axis),))

    def weight(self) -> int:
        return len(self.support)

    def label(self) -> str:
        chars = ["I"] * self.n
        for q, a in self.support:
            chars[q] = a
        return "".join(chars)

    def codes(self) -> np.ndarray:
        out = np.zeros(self.n, dtype=np.int8)
        for q, a in self.support:
            out[q] = AXIS_CODE[a]
        return out

    def axis_on(self, qubit: int) -> str:
        for q, a in self.support:
            if q == qubit:
                return a
        return "I"

    def sort_key(self):
        return (len(self.support), self.support)

    def __lt__(self, other: "PauliString") -> bool:
        return self.sort_key() < other.sort_key()

    def __str__(self) -> str:
        return self.label()


def weight(p: PauliString) -> int:
    """Number of qubits acted on non-trivially."""
    return p.weight()


@dataclass(frozen=True)
class PauliObservable:
    """Real linear combination of Pauli strings on a common register."""

    n: int
    terms: tuple[tuple[float, PauliString], ...] = field(default=())

    def __post_init__(self):
        merged: dict[PauliString, float] = {}
        for c, p in self.terms:
            if p.n != self.n:
                raise ValueError("all Pauli strings must share the observable's qubit count")
            merged[p] = merged.get(p, 0.0) + float(c)
        terms = tuple((c, p) for p, c in sorted(merged.items(), key=lambda kv: kv[0].sort_key()))
        object.__setattr__(self, "terms", terms)

    @classmethod
    def from_dict(cls, n: int, coeffs: Mapping[PauliString, float]) -> "PauliObservable":
        return cls(n, tuple((c, p) for p, c in coeffs.items()))

    @classmethod
    def single(cls, p: PauliString, coeff: float = 1.0) -> "PauliObservable":
        return cls(p.n, ((coeff, p),))

    def as_dict(self) -> dict[PauliString, float]:
        return {p: c for c, p in self.terms}

    def frobenius_sq(self) -> float:
        """Squared normalized Frobenius norm ``2**-n Tr[O^2]``."""
        return float(sum(c * c for c, _ in self.terms))


@dataclass(frozen=True)
class StabilizerProductState:
    """Tensor product of single-qubit Pauli eigenstates."""

    labels: tuple[str, ...]

    def __post_init__(self):
        labels = tuple(self.labels)
        if not labels:
            raise ValueError("a stabilizer product state needs at least one qubit")
        for lab in labels:
            if lab not in STAB_CODE:
                raise ValueError(f"unknown stabilizer label {lab!r}")
        object.__setattr__(self, "labels", labels)

    @classmethod
    def from_codes(cls, codes: Sequence[int]) -> "StabilizerProductState":
        return cls(tuple(STAB_LABELS[int(c)] for c in codes))

    @property
    def n(self) -> int:
        return len(self.labels)

    def codes(self) -> np.ndarray:
        return np.array([STAB_CODE[lab] for lab in self.labels], dtype=np.int8)

    def statevector(self) -> np.ndarray:
        vec = np.ones(1, dtype=complex)
        for lab in self.labels:
            vec = np.kron(vec, SINGLE_QUBIT_STATES[lab])
        return vec


_s = 1 / np.sqrt(2)
SINGLE_QUBIT_STATES = {
    "Z+": np.array([1, 0], dtype=complex),
    "Z-": np.array([0, 1], dtype=complex),
    "X+": np.array([_s, _s], dtype=complex),
    "X-": np.array([_s, -_s], dtype=complex),
    "Y+": np.array([_s, 1j * _s], dtype=complex),
    "Y-": np.array([_s, -1j * _s], dtype=complex),
}


def stab_expectation(psi: StabilizerProductState, p: PauliString) -> int:
    """Return ``<psi|P|psi>`` which is always -1, 0 or +1."""
    if psi.n != p.n:
        raise ValueError(f"dimension mismatch: state has {psi.n} qubits, Pauli has {p.n}")
    val = 1
    for q, a in p.support:
        val *= int(STAB_EXPECT[STAB_CODE[psi.labels[q]], AXIS_CODE[a]])
        if val == 0:
            return 0
    return val


def count_low_weight(n: int, l_prime: int) -> int:
    return sum(comb(n, k) * 3**k for k in range(l_prime + 1))


def enumerate_low_weight(n: int, l_prime: int) -> Iterator[PauliString]:
    """Lazily yield every Pauli string of weight ``<= l_prime`` in canonical order."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if l_prime < 0 or l_prime > n:
        raise ValueError(f"l_prime must lie in [0, {n}], got {l_prime}")

    def rec(start: int, k: int, prefix: tuple):
        if k == 0:
            yield PauliString(n, prefix)
            return
        for q in range(start, n - k + 1):
            for a in "XYZ":
                yield from rec(q + 1, k - 1, prefix + ((q, a),))

    for k in range(l_prime + 1):
        yield from rec(0, k, ())


def sample_stabilizer_product(n: int, rng: np.random.Generator) -> StabilizerProductState:
    if n < 1:
        raise ValueError("n must be >= 1")
    return StabilizerProductState.from_codes(rng.integers(0, 6, size=n))


def sample_stabilizer_codes(n: int, count: int, rng: np.random.Generator) -> np.ndarray:
    """Vectorized draw of ``count`` product states as an int8 array of label codes."""
    return rng.integers(0, 6, size=(count, n), dtype=np.int8)
