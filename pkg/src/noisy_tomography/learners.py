"""Low-weight Pauli learners for noisy states and processes.

Both learners share one estimator: for a dataset of random stabilizer product
states ``psi_j`` with scalar responses ``v_j``,

    coeff[P] = 3**|P| / N * sum_j v_j <psi_j|P|psi_j>

For state tomography ``v_j = <psi_j|rho|psi_j>`` and ``coeff[P]`` estimates
``2**-n Tr[P rho]``.  For process tomography ``v_j = Tr[O C(psi_j)]`` and
``coeff[P]`` estimates ``2**-n Tr[P C^dagger(O)]``, so that
``sum_P coeff[P] <P>_rho`` predicts ``Tr[O C(rho)]``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Iterator, Sequence

import numpy as np

from . import oracle_sim
from .oracle_sim import DensityMatrix, OperatorMatrix
from .pauli_core import (
    STAB_EXPECT,
    PauliObservable,
    PauliString,
    StabilizerProductState,
    count_low_weight,
)


@dataclass(frozen=True)
class SampleRecord:
    state: StabilizerProductState
    value: float


@dataclass
class Dataset:
    """Columnar store of sample records: label codes ``(N, n)`` and responses ``(N,)``."""

    codes: np.ndarray
    values: np.ndarray
    kind: str = "qst"
    acquisition: str = "exact"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.codes = np.asarray(self.codes, dtype=np.int8)
        self.values = np.asarray(self.values, dtype=float)
        if self.codes.ndim != 2 or self.codes.shape[0] != self.values.shape[0]:
            raise ValueError("codes must be (N, n) and values (N,)")

    def __len__(self) -> int:
        return self.values.shape[0]

    @property
    def n(self) -> int:
        return self.codes.shape[1]

    def records(self) -> Iterator[SampleRecord]:
        for c, v in zip(self.codes, self.values):
            yield SampleRecord(StabilizerProductState.from_codes(c), float(v))

    @classmethod
    def from_records(cls, records: Sequence[SampleRecord], kind: str = "qst") -> "Dataset":
        if not records:
            raise ValueError("dataset is empty")
        codes = np.array([r.state.codes() for r in records])
        return cls(codes, np.array([r.value for r in records]), kind)

    def head(self, count: int) -> "Dataset":
        return Dataset(self.codes[:count], self.values[:count], self.kind, self.acquisition, dict(self.meta))


# ---------------------------------------------------------------------------
# value providers


class ExactValues:
    """Exact ``<psi|A|psi>`` for stabilizer product states of a dense operator.

    Small registers tabulate all ``6**n`` states once; larger ones contract per
    batch.
    """

    TABLE_LIMIT = 8

    def __init__(self, op: OperatorMatrix | np.ndarray, n: int | None = None):
        data = op.data if isinstance(op, OperatorMatrix) else np.asarray(op, dtype=complex)
        self.n = op.n if isinstance(op, OperatorMatrix) else int(n)
        self.data = data
        self._table = None
        if self.n <= self.TABLE_LIMIT:
            self._table = oracle_sim.stabilizer_table(data, self.n)

    def __call__(self, codes: np.ndarray) -> np.ndarray:
        codes = np.asarray(codes)
        if self._table is not None:
            return self._table[oracle_sim.stabilizer_index(codes)]
        return _batch_expectations(self.data, self.n, codes)


def _batch_expectations(data: np.ndarray, n: int, codes: np.ndarray, batch: int = 2048) -> np.ndarray:
    from .pauli_core import SINGLE_QUBIT_STATES, STAB_LABELS

    vecs = np.array([SINGLE_QUBIT_STATES[lab] for lab in STAB_LABELS])
    out = np.empty(len(codes))
    for start in range(0, len(codes), batch):
        chunk = codes[start : start + batch]
        psi = vecs[chunk[:, 0]]
        for q in range(1, n):
            psi = np.einsum("bi,bj->bij", psi, vecs[chunk[:, q]]).reshape(len(chunk), -1)
        out[start : start + batch] = np.einsum("bi,ij,bj->b", psi.conj(), data, psi).real
    return out


def _as_provider(target, n: int) -> Callable[[np.ndarray], np.ndarray]:
    if callable(target):
        return target
    if isinstance(target, (OperatorMatrix, np.ndarray)):
        return ExactValues(target, n)
    raise TypeError(f"unsupported value provider {type(target).__name__}")


def _parse_acquisition(acquisition) -> tuple[str, int]:
    if acquisition in (None, "exact"):
        return "exact", 0
    if isinstance(acquisition, str) and acquisition.startswith("shots"):
        return "shots", int(acquisition.split(":", 1)[1])
    if isinstance(acquisition, (tuple, list)) and acquisition[0] == "shots":
        return "shots", int(acquisition[1])
    if isinstance(acquisition, dict) and acquisition.get("mode") == "shots":
        return "shots", int(acquisition["shots"])
    if isinstance(acquisition, dict) and acquisition.get("mode") == "exact":
        return "exact", 0
    raise ValueError(f"unknown acquisition mode {acquisition!r}")


def _generate(provider, n: int, n_data: int, acquisition, rng: np.random.Generator, kind: str, scale: float):
    if n_data < 1:
        raise ValueError("N_data must be >= 1")
    mode, shots = _parse_acquisition(acquisition)
    state_rng, shot_rng = rng.spawn(2)
    codes = state_rng.integers(0, 6, size=(n_data, n), dtype=np.int8)
    values = np.asarray(provider(codes), dtype=float)
    if mode == "shots":
        if shots < 1:
            raise ValueError("shots must be >= 1")
        values = scale * oracle_sim.swap_test_estimate(values / scale, shots, shot_rng)
    label = "exact" if mode == "exact" else f"shots:{shots}"
    lo = 0.0 if kind == "qst" else -scale
    outside = int(np.count_nonzero((values < lo - 1e-12) | (values > scale + 1e-12)))
    return Dataset(codes, values, kind, label, {"N_data": n_data, "out_of_range": outside})


def generate_qst_dataset(target, n: int, n_data: int, acquisition="exact", rng=None) -> Dataset:
    """Overlaps ``<psi_j|rho|psi_j>`` for ``n_data`` uniform stabilizer product states.

    ``target`` is a dense state or a callable mapping label codes to overlaps.
    With ``acquisition="shots:m"`` each overlap is replaced by an m-shot SWAP-test
    estimate.
    """
    rng = np.random.default_rng() if rng is None else rng
    return _generate(_as_provider(target, n), n, n_data, acquisition, rng, "qst", 1.0)


def generate_qpt_dataset(
    process, n: int, n_data: int, acquisition="exact", rng=None, observable_norm: float = 1.0
) -> Dataset:
    """Responses ``Tr[O C(|psi_j><psi_j|)]``.

    ``process`` is the dense Heisenberg operator ``C^dagger(O)`` or a callable on
    label codes.  Shot noise assumes the observable's spectrum lies in
    ``[-observable_norm, observable_norm]``.
    """
    rng = np.random.default_rng() if rng is None else rng
    return _generate(_as_provider(process, n), n, n_data, acquisition, rng, "qpt", observable_norm)


# ---------------------------------------------------------------------------
# estimator kernel


def _weighted_sum(v: np.ndarray) -> float:
    return math.fsum(v.tolist())


def estimate_low_weight(codes: np.ndarray, values: np.ndarray, n: int, l_prime: int) -> dict[PauliString, float]:
    """Shared kernel: ``3**|P| / N * sum_j v_j <psi_j|P|psi_j>`` for all ``|P| <= l_prime``.

    Strings are visited depth-first so partial products over the support are
    reused; output follows the canonical order.
    """
    if len(values) == 0:
        raise ValueError("dataset is empty")
    if not 0 <= l_prime <= n:
        raise ValueError(f"l_prime must lie in [0, {n}]")
    n_data = len(values)
    expect = STAB_EXPECT[np.asarray(codes, dtype=np.int64)].astype(float)  # (N, n, 4)
    raw: dict[tuple, float] = {}

    def rec(start: int, k: int, prefix: tuple, partial: np.ndarray):
        raw[prefix] = _weighted_sum(partial) * 3.0 ** len(prefix) / n_data
        if k == 0:
            return
        for q in range(start, n):
            for ai, a in enumerate("XYZ", start=1):
                col = expect[:, q, ai]
                nz = col != 0
                if not nz.any():
                    raw[prefix + ((q, a),)] = 0.0
                    _fill_zero(raw, n, q + 1, k - 1, prefix + ((q, a),))
                    continue
                rec(q + 1, k - 1, prefix + ((q, a),), partial * col)

    rec(0, l_prime, (), np.asarray(values, dtype=float))
    ordered = sorted(raw.items(), key=lambda kv: (len(kv[0]), kv[0]))
    return {PauliString(n, sup): val for sup, val in ordered}


def _fill_zero(raw: dict, n: int, start: int, k: int, prefix: tuple):
    if k == 0:
        return
    for q in range(start, n):
        for a in "XYZ":
            raw[prefix + ((q, a),)] = 0.0
            _fill_zero(raw, n, q + 1, k - 1, prefix + ((q, a),))


@dataclass
class LearnedModel:
    n: int
    l_prime: int
    coeffs: dict[PauliString, float]
    meta: dict = field(default_factory=dict)
    kind: str = "state"

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "n": self.n,
            "l_prime": self.l_prime,
            "coeffs": [{"pauli": p.label(), "value": v} for p, v in self.coeffs.items()],
            "meta": self.meta,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), separators=(",", ":"))

    @classmethod
    def from_json(cls, data: dict) -> "LearnedModel":
        kind = data.get("kind", "state")
        target = LearnedProcess if kind == "process" else LearnedState
        coeffs = {PauliString.from_label(c["pauli"]): float(c["value"]) for c in data["coeffs"]}
        return target(int(data["n"]), int(data["l_prime"]), coeffs, dict(data.get("meta", {})), kind)

    @classmethod
    def loads(cls, text: str) -> "LearnedModel":
        return cls.from_json(json.loads(text))

    def coefficient(self, p: PauliString) -> float:
        return self.coeffs.get(p, 0.0)

    def operator(self) -> np.ndarray:
        return oracle_sim.operator_from_coeffs(self.coeffs, self.n)


@dataclass
class LearnedState(LearnedModel):
    kind: str = "state"


@dataclass
class LearnedProcess(LearnedModel):
    kind: str = "process"
    observable: PauliObservable | None = None


def estimate_state_coeffs(dataset: Dataset, n: int, l_prime: int) -> LearnedState:
    if len(dataset) == 0:
        raise ValueError("dataset is empty")
    if dataset.n != n:
        raise ValueError("dataset register size differs from n")
    coeffs = estimate_low_weight(dataset.codes, dataset.values, n, l_prime)
    meta = {"N_data": len(dataset), "acquisition": dataset.acquisition, **dataset.meta}
    return LearnedState(n, l_prime, coeffs, meta)


def estimate_process_coeffs(
    dataset: Dataset, n: int, l_prime: int, observable: PauliObservable | None = None
) -> LearnedProcess:
    if len(dataset) == 0:
        raise ValueError("dataset is empty")
    if dataset.n != n:
        raise ValueError("dataset register size differs from n")
    coeffs = estimate_low_weight(dataset.codes, dataset.values, n, l_prime)
    meta = {"N_data": len(dataset), "acquisition": dataset.acquisition, **dataset.meta}
    return LearnedProcess(n, l_prime, coeffs, meta, observable=observable)


def reconstruct_and_score(learned: LearnedState, oracle_rho: OperatorMatrix) -> float:
    """Trace distance ``||rho - rho_hat||_1`` of the raw (unprojected) estimate."""
    if learned.n != oracle_rho.n:
        raise ValueError("sizes differ")
    rho_hat = learned.operator()
    return oracle_sim.schatten1(oracle_rho.data - rho_hat)


def project_to_density(learned: LearnedState) -> DensityMatrix:
    """Optional post-processing: nearest density matrix by eigenvalue clipping and renormalization.

    Not part of the learner itself; downstream consumers that need a
    physical state can call it explicitly.
    """
    rho_hat = learned.operator()
    w, v = np.linalg.eigh(0.5 * (rho_hat + rho_hat.conj().T))
    w = np.clip(w, 0, None)
    if w.sum() <= 0:
        return oracle_sim.maximally_mixed(learned.n)
    w /= w.sum()
    return DensityMatrix(learned.n, (v * w) @ v.conj().T)


# ---------------------------------------------------------------------------
# prediction


@dataclass(frozen=True, eq=False)
class ProductState:
    """Tensor product of arbitrary single-qubit pure states, stored as Bloch vectors ``(n, 3)``."""

    bloch: np.ndarray

    @classmethod
    def from_statevectors(cls, vectors) -> "ProductState":
        rows = []
        for v in vectors:
            v = np.asarray(v, dtype=complex)
            v = v / np.linalg.norm(v)
            rho = np.outer(v, v.conj())
            rows.append([2 * rho[0, 1].real, -2 * rho[0, 1].imag, (rho[0, 0] - rho[1, 1]).real])
        return cls(np.array(rows))

    @classmethod
    def random(cls, n: int, rng: np.random.Generator) -> "ProductState":
        g = rng.standard_normal((n, 3))
        return cls(g / np.linalg.norm(g, axis=1, keepdims=True))

    @property
    def n(self) -> int:
        return self.bloch.shape[0]

    def statevector(self) -> np.ndarray:
        vec = np.ones(1, dtype=complex)
        for x, y, z in self.bloch:
            theta = np.arccos(np.clip(z, -1, 1))
            phi = np.arctan2(y, x)
            vec = np.kron(vec, np.array([np.cos(theta / 2), np.exp(1j * phi) * np.sin(theta / 2)]))
        return vec

    def density(self) -> DensityMatrix:
        return oracle_sim.pure_density(self.statevector())


def _pauli_expectation_table(inp, n: int) -> Callable[[PauliString], float]:
    if isinstance(inp, StabilizerProductState):
        if inp.n != n:
            raise ValueError("input size differs from model")
        bloch = STAB_EXPECT[inp.codes().astype(np.int64)][:, 1:].astype(float)
        inp = ProductState(bloch)
    if isinstance(inp, ProductState):
        if inp.n != n:
            raise ValueError("input size differs from model")
        b = inp.bloch

        def product_expect(p: PauliString) -> float:
            val = 1.0
            for q, a in p.support:
                val *= b[q, "XYZ".index(a)]
            return val

        return product_expect
    if isinstance(inp, OperatorMatrix):
        if inp.n != n:
            raise ValueError("input size differs from model")
        tensor = oracle_sim.pauli_coefficient_tensor(inp.data, n) * 2**n
        return lambda p: float(tensor[tuple(p.codes())])
    raise TypeError(f"unsupported input {type(inp).__name__}")


def predict(learned: LearnedModel, inp) -> float:
    """``sum_P coeff[P] <P>_input`` for stabilizer, product or dense inputs."""
    expect = _pauli_expectation_table(inp, learned.n)
    return math.fsum(c * expect(p) for p, c in learned.coeffs.items())


def predict_many(learned: LearnedModel, bloch: np.ndarray) -> np.ndarray:
    """Vectorized prediction for a batch of product states given as Bloch arrays ``(M, n, 3)``."""
    bloch = np.asarray(bloch, dtype=float)
    out = np.zeros(bloch.shape[0])
    for p, c in learned.coeffs.items():
        term = np.full(bloch.shape[0], c)
        for q, a in p.support:
            term = term * bloch[:, q, "XYZ".index(a)]
        out += term
    return out


# ---------------------------------------------------------------------------
# classical shadow route


def shadow_estimate_state(
    target: OperatorMatrix, n: int, l_prime: int, num_shadows: int, rng: np.random.Generator
) -> LearnedState:
    """Low-weight coefficients from random Pauli-basis snapshots of ``target``."""
    if target.n != n:
        raise ValueError("sizes differ")
    bases, signs = oracle_sim.sample_shadows(target, num_shadows, rng)
    # per-snapshot single-qubit factor 3 * [basis == axis] * sign, arranged like STAB_EXPECT
    factors = np.zeros((num_shadows, n, 4))
    factors[:, :, 0] = 1.0
    for ax in (1, 2, 3):
        factors[:, :, ax] = 3.0 * (bases == ax) * signs
    coeffs: dict[PauliString, float] = {}

    def rec(start: int, k: int, prefix: tuple, partial: np.ndarray):
        coeffs[PauliString(n, prefix)] = math.fsum(partial.tolist()) / num_shadows * 2.0**-n
        if k == 0:
            return
        for q in range(start, n):
            for ai, a in enumerate("XYZ", start=1):
                rec(q + 1, k - 1, prefix + ((q, a),), partial * factors[:, q, ai])

    rec(0, l_prime, (), np.ones(num_shadows))
    ordered = dict(sorted(coeffs.items(), key=lambda kv: kv[0].sort_key()))
    return LearnedState(n, l_prime, ordered, {"num_shadows": num_shadows, "acquisition": "shadow"})


def default_l_prime(epsilon: float, gamma: float | None = None, fallback: int = 2) -> int:
    """Truncation weight ``ceil(log(1/eps) / log(2 / (1-gamma)**2))``; ``fallback`` when gamma is unknown."""
    if gamma is None:
        return fallback
    if not 0 < epsilon < 1 or not 0 <= gamma < 1:
        raise ValueError("need 0 < epsilon < 1 and 0 <= gamma < 1")
    return max(0, math.ceil(math.log(1 / epsilon) / math.log(2 / (1 - gamma) ** 2)))


def exact_truncation(op: np.ndarray, n: int, l_prime: int) -> dict[PauliString, float]:
    """Exact low-weight part of a dense operator, for error splitting."""
    tensor = oracle_sim.pauli_coefficient_tensor(op, n)
    from .pauli_core import enumerate_low_weight

    return {p: float(tensor[tuple(p.codes())]) for p in enumerate_low_weight(n, l_prime)}


def coefficient_count(n: int, l_prime: int) -> int:
    return count_low_weight(n, l_prime)
