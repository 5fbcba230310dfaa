import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from noisy_tomography import oracle_sim
from noisy_tomography.circuits import (
    CNOT,
    PAULI2,
    Circuit,
    Gate,
    build_entangled_prep,
    build_random_circuit,
    build_tfim_circuit,
    gate_ptm,
    grid_edge_colors,
    random_entangled_prep,
    rzz,
    sample_haar_su4,
    sample_haar_su4_batch,
    sample_two_qubit_clifford,
    stretch_layers,
    two_qubit_clifford_group,
)


def entanglement_entropy(psi, n, cut):
    m = psi.reshape(2**cut, 2 ** (n - cut))
    s = np.linalg.svd(m, compute_uv=False) ** 2
    s = s[s > 1e-15]
    return float(-(s * np.log2(s)).sum())


def check_layers_disjoint(c: Circuit):
    for layer in c.layers:
        qs = [q for g in layer for q in g.targets]
        assert len(qs) == len(set(qs))
        assert all(0 <= q < c.n for q in qs)


def test_haar_unitarity_and_first_moment(rng):
    for _ in range(50):
        u = sample_haar_su4(rng)
        assert np.max(np.abs(u.conj().T @ u - np.eye(4))) <= 1e-12
        assert abs(abs(np.linalg.det(u)) - 1) <= 1e-12
    us = sample_haar_su4_batch(100_000, rng)
    assert abs(np.mean(np.abs(us[:, 0, 0]) ** 2) - 0.25) < 0.01


def test_haar_second_moment(rng):
    us = sample_haar_su4_batch(200_000, rng)
    xi = PAULI2[4]
    vals = (np.einsum("ij,bjk,kl,bil->b", xi, us, xi, us.conj()).real / 4) ** 2
    sem = vals.std(ddof=1) / np.sqrt(len(vals))
    assert abs(vals.mean() - 1 / 15) <= 3 * sem


def test_clifford_group_properties(rng):
    group = two_qubit_clifford_group()
    assert len(group) == 11520
    for _ in range(30):
        u = sample_two_qubit_clifford(rng)
        assert np.max(np.abs(u.conj().T @ u - np.eye(4))) <= 1e-12
        r = gate_ptm(u)
        # conjugation maps Pauli words to signed Pauli words
        assert np.allclose(np.sort(np.abs(r), axis=0)[-1], 1.0)
        assert np.allclose(np.count_nonzero(np.abs(r) > 1e-9, axis=0), 1)


def test_clifford_exact_second_moments():
    r2 = np.array([gate_ptm(u) for u in two_qubit_clifford_group()]) ** 2
    avg = r2.mean(axis=0)
    expect = np.full((16, 16), 1 / 15)
    expect[0, :] = 0
    expect[:, 0] = 0
    expect[0, 0] = 1
    assert np.max(np.abs(avg - expect)) <= 1e-10


def test_brickwork_layout(rng):
    c = build_random_circuit(4, 2, "brickwork", "haar", rng)
    assert [sorted(g.targets for g in layer) for layer in c.layers] == [[(0, 1), (2, 3)], [(1, 2)]]
    assert c.depth() == 2


def test_staircase_layout(rng):
    c = build_random_circuit(3, 1, "staircase", "haar", rng)
    assert [g.targets for layer in c.layers for g in layer] == [(2, 1), (1, 0)]
    with pytest.raises(ValueError):
        build_random_circuit(3, 1, "ring", "haar", rng)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 7), st.integers(1, 4), st.sampled_from(["brickwork", "staircase"]), st.integers(0, 2**32))
def test_builders_keep_layers_disjoint(n, d, arch, seed):
    check_layers_disjoint(build_random_circuit(n, d, arch, "clifford", np.random.default_rng(seed)))


def test_fixed_seed_reproduces_circuit():
    a = build_random_circuit(5, 3, "brickwork", "haar", np.random.default_rng(9), seed=9)
    b = build_random_circuit(5, 3, "brickwork", "haar", np.random.default_rng(9), seed=9)
    assert a.dumps() == b.dumps()
    again = Circuit.from_json(a.to_json())
    assert again.dumps() == a.dumps()


def test_gate_validation():
    with pytest.raises(ValueError):
        Gate(np.ones((4, 4)), (0, 1))
    with pytest.raises(ValueError):
        Gate(np.eye(4), (1, 1))
    with pytest.raises(ValueError):
        Circuit(3, ((Gate(np.eye(4), (0, 1)), Gate(np.eye(4), (1, 2))),))


def test_tfim_edges_and_layers():
    c = build_tfim_circuit(3, 5, 1, np.pi / 4)
    assert c.meta["edges"] == 22
    edges = {tuple(sorted(g.targets)) for layer in c.layers for g in layer}
    assert len(edges) == 22
    check_layers_disjoint(c)
    c23 = build_tfim_circuit(2, 3, 10, np.pi / 4)
    assert c23.meta["trotter_steps"] == 10 and c23.depth() == 10 * c23.meta["layers_per_step"]
    assert sum(len(col) for col in grid_edge_colors(2, 3)) == 7
    with pytest.raises(ValueError):
        build_tfim_circuit(0, 3, 1, 0.1)


def test_tfim_zero_field_is_diagonal():
    c = build_tfim_circuit(2, 3, 2, 0.0)
    psi = oracle_sim.apply_circuit_to_state(c)
    assert np.isclose(abs(psi[0]), 1.0)


def test_rzz_matrix():
    w = np.exp(1j * np.pi / 4)
    assert np.allclose(rzz(-np.pi / 2), np.diag([w, w.conj(), w.conj(), w]))


def test_entangled_prep_examples(rng):
    zero = build_entangled_prep(4, np.zeros(4), np.zeros(4), 1)
    psi = oracle_sim.apply_circuit_to_state(zero)
    assert np.isclose(abs(psi[0]), 1.0)
    bell = build_entangled_prep(2, [np.pi / 2, 0], [0, 0], 1)
    assert entanglement_entropy(oracle_sim.apply_circuit_to_state(bell), 2, 1) > 0
    with pytest.raises(ValueError):
        build_entangled_prep(3, [0, 0], [0, 0, 0], 1)
    hits = sum(
        entanglement_entropy(oracle_sim.apply_circuit_to_state(random_entangled_prep(4, 2, rng)), 4, 2) > 0.5
        for _ in range(100)
    )
    assert hits >= 90


def test_entangled_prep_cnot_order():
    c = build_entangled_prep(3, np.zeros(3), np.zeros(3), 1)
    assert [g.targets for layer in c.layers for g in layer] == [(0, 1), (1, 2), (2, 0)]
    assert np.allclose(c.layers[1][0].unitary, CNOT)


def test_stretch_keeps_unitary(rng):
    c = build_random_circuit(3, 2, "brickwork", "haar", rng)
    s = stretch_layers(c, 3)
    assert s.depth() == 3 * c.depth()
    assert np.allclose(oracle_sim.apply_circuit_to_state(s), oracle_sim.apply_circuit_to_state(c))
