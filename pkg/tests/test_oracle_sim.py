import numpy as np
import pytest

from noisy_tomography import oracle_sim
from noisy_tomography.circuits import Circuit, build_random_circuit, embed_single_qubit
from noisy_tomography.noise import X, AmplitudeDamping, Composed, Depolarizing, PauliChannel
from noisy_tomography.pauli_core import PauliObservable, PauliString, StabilizerProductState, enumerate_low_weight

NOISES = [
    Depolarizing(0.1),
    PauliChannel((0.85, 0.05, 0.07, 0.03)),
    AmplitudeDamping(0.2),
    Composed((Depolarizing(0.05), AmplitudeDamping(0.1))),
]


def random_density(n, rng):
    g = rng.standard_normal((2**n, 2**n)) + 1j * rng.standard_normal((2**n, 2**n))
    rho = g @ g.conj().T
    return oracle_sim.DensityMatrix(n, rho / np.trace(rho))


def test_depth_zero_is_identity(rng):
    rho = random_density(2, rng)
    out = oracle_sim.evolve_density(Circuit(2, ()), Depolarizing(0.3), rho)
    assert np.allclose(out.data, rho.data)


def test_single_x_gate_under_depolarizing():
    g = 0.2
    c = Circuit(2, ((embed_single_qubit(X, 0, 1, 2),),))
    out = oracle_sim.evolve_density(c, Depolarizing(g), oracle_sim.zero_state(2))
    one = np.diag([1.0, 0.0])
    z = np.diag([1.0, -1.0])
    expect = np.kron(0.5 * (np.eye(2) - (1 - g) * z), 0.5 * (np.eye(2) + (1 - g) * z))
    assert np.allclose(out.data, expect, atol=1e-12)
    del one


def test_strong_depolarizing_fixed_point(rng):
    c = build_random_circuit(3, 2, "brickwork", "haar", rng)
    out = oracle_sim.evolve_density(c, Depolarizing(1 - 1e-12), oracle_sim.zero_state(3))
    assert np.allclose(out.data, np.eye(8) / 8, atol=1e-9)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_outputs_are_physical(n, rng):
    for k in range(25):
        c = build_random_circuit(n, 2, "brickwork", "haar", rng)
        out = oracle_sim.evolve_density(c, NOISES[k % len(NOISES)], random_density(n, rng))
        assert abs(np.trace(out.data) - 1) < 1e-10
        assert out.min_eigenvalue() >= -1e-9


def test_adjoint_examples(rng):
    z0 = PauliObservable.single(PauliString.single(3, 0, "Z"))
    ident = Circuit(3, ((), ()))
    assert np.allclose(oracle_sim.adjoint_evolve_observable(ident, None, z0).data, oracle_sim.observable_matrix(z0))
    g, d = 0.1, 4
    h = oracle_sim.adjoint_evolve_observable(Circuit(3, ((),) * d), Depolarizing(g), z0)
    assert np.allclose(h.data, (1 - g) ** d * oracle_sim.observable_matrix(z0))


@pytest.mark.parametrize("noise", NOISES)
def test_adjoint_duality(noise, rng):
    for _ in range(5):
        c = build_random_circuit(3, 2, "staircase", "haar", rng)
        rho = random_density(3, rng)
        terms = {p: rng.standard_normal() for p in list(enumerate_low_weight(3, 2))[1:8]}
        o = PauliObservable.from_dict(3, terms)
        fwd = np.trace(oracle_sim.observable_matrix(o) @ oracle_sim.evolve_density(c, noise, rho).data).real
        back = np.trace(oracle_sim.adjoint_evolve_observable(c, noise, o).data @ rho.data).real
        assert abs(fwd - back) <= 1e-10


def test_overlap_examples():
    n = 3
    zero = StabilizerProductState(("Z+",) * n)
    assert oracle_sim.overlap(oracle_sim.zero_state(n), zero) == pytest.approx(1.0)
    mixed = oracle_sim.maximally_mixed(n)
    assert oracle_sim.overlap(mixed, StabilizerProductState(("X-", "Y+", "Z-"))) == pytest.approx(2**-n)
    plus = oracle_sim.pure_density(np.array([1, 1]) / np.sqrt(2))
    assert oracle_sim.overlap(plus, StabilizerProductState(("Z+",))) == pytest.approx(0.5)


def test_swap_test_estimator(rng):
    assert abs(oracle_sim.swap_test_estimate(0.5, 10**7, rng) - 0.5) < 1e-3
    assert np.all(oracle_sim.swap_test_estimate(np.ones(100), 7, rng) == 1.0)
    vals = oracle_sim.swap_test_estimate(np.zeros(1000), 10**4, rng)
    assert abs(vals.std() - 0.01) < 0.001
    with pytest.raises(ValueError):
        oracle_sim.noisy_overlap(oracle_sim.zero_state(1), StabilizerProductState(("Z+",)), 0, rng)


def test_schatten1_examples(rng):
    assert oracle_sim.schatten1(np.diag([1.0, -1.0])) == pytest.approx(2.0)
    assert oracle_sim.schatten1(np.zeros((4, 4))) == 0.0
    assert oracle_sim.schatten1(np.diag([1.0, 0.0]) - np.eye(2) / 2) == pytest.approx(1.0)
    for _ in range(50):
        a = rng.standard_normal((8, 8)) + 1j * rng.standard_normal((8, 8))
        a = a + a.conj().T
        assert oracle_sim.schatten1(a) <= np.sqrt(8) * np.sqrt(np.trace(a @ a).real) + 1e-9


def test_exact_pauli_coeff_examples(rng):
    rho = random_density(2, rng)
    assert oracle_sim.exact_pauli_coeff(rho, PauliString.identity(2)) == pytest.approx(0.25)
    assert oracle_sim.exact_pauli_coeff(oracle_sim.zero_state(1), PauliString.from_label("Z")) == pytest.approx(0.5)
    mixed = oracle_sim.maximally_mixed(2)
    for p in list(enumerate_low_weight(2, 2))[1:]:
        assert oracle_sim.exact_pauli_coeff(mixed, p) == pytest.approx(0.0, abs=1e-15)


def test_coefficient_transform_round_trip(rng):
    rho = random_density(3, rng)
    tensor = oracle_sim.pauli_coefficient_tensor(rho.data, 3)
    assert np.allclose(oracle_sim.operator_from_coefficient_tensor(tensor, 3), rho.data, atol=1e-13)
    coeffs = oracle_sim.coeff_dict(rho.data, 3)
    assert np.allclose(oracle_sim.operator_from_coeffs(coeffs, 3), rho.data, atol=1e-13)
    for p in list(coeffs)[:10]:
        assert coeffs[p] == pytest.approx(oracle_sim.exact_pauli_coeff(rho, p))


def test_stabilizer_table_matches_direct(rng):
    rho = random_density(2, rng)
    table = oracle_sim.stabilizer_table(rho.data, 2)
    for codes in [(0, 0), (3, 5), (5, 2), (1, 4)]:
        psi = StabilizerProductState.from_codes(codes)
        idx = oracle_sim.stabilizer_index(np.array([codes]))[0]
        assert table[idx] == pytest.approx(oracle_sim.overlap(rho, psi), abs=1e-14)


def test_size_cap():
    with pytest.raises(oracle_sim.OracleSizeError):
        oracle_sim.adjoint_evolve_matrix(Circuit(13, ()), None, np.zeros((1, 1)))
    with pytest.raises(oracle_sim.OracleSizeError):
        oracle_sim.stabilizer_table(np.zeros((1, 1)), 13)


def test_density_validation_and_dump():
    with pytest.raises(ValueError):
        oracle_sim.DensityMatrix(1, np.eye(2))
    with pytest.raises(ValueError):
        oracle_sim.OperatorMatrix(1, np.array([[0, 1], [0, 0]]))
    rho = oracle_sim.zero_state(2)
    again = oracle_sim.DensityMatrix.load(rho.dump())
    assert np.allclose(again.data, rho.data)


def test_shadow_examples(rng):
    zero = oracle_sim.zero_state(1)
    z = PauliString.from_label("Z")
    est = oracle_sim.classical_shadow_coeffs(zero, [z, PauliString.identity(1)], 100_000, rng)
    assert abs(est[z] - 0.5) < 0.02
    assert est[PauliString.identity(1)] == 0.5
    mixed = oracle_sim.maximally_mixed(1)
    x = PauliString.from_label("X")
    bases, signs = oracle_sim.sample_shadows(mixed, 20_000, rng)
    vals = oracle_sim.shadow_pauli_values(bases, signs, x)
    assert abs(vals.mean()) <= 3 * vals.std() / np.sqrt(len(vals))


def test_shadow_unbiased_all_two_qubit_paulis(rng):
    rho = random_density(2, rng)
    bases, signs = oracle_sim.sample_shadows(rho, 400_000, rng)
    for p in enumerate_low_weight(2, 2):
        vals = oracle_sim.shadow_pauli_values(bases, signs, p)
        sem = vals.std() / np.sqrt(len(vals))
        assert abs(vals.mean() - oracle_sim.exact_pauli_coeff(rho, p)) <= 4 * sem + 1e-15
