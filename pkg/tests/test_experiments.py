import itertools
import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from noisy_tomography import learners, oracle_sim
from noisy_tomography.circuits import build_entangled_prep, build_tfim_circuit
from noisy_tomography.experiments import config as cfgmod
from noisy_tomography.experiments import runners
from noisy_tomography.experiments.config import ConfigError, ExperimentConfig, rows_to_csv
from noisy_tomography.pauli_core import PauliObservable, PauliString, StabilizerProductState


def make(**kw):
    return ExperimentConfig.from_dict(kw)


def values(rows, metric, **match):
    return [r.value for r in rows if r.metric == metric and all(getattr(r, k) == v for k, v in match.items())]


# ---------------------------------------------------------------------------
# configuration


@pytest.mark.parametrize(
    "bad",
    [
        {"experiment": "nope"},
        {"experiment": "qst_sweep", "trials": 0},
        {"experiment": "qst_sweep", "bogus": 1},
        {"experiment": "qst_sweep", "noise": {"type": "depolarizing", "gamma": 1.5}},
        {"experiment": "qst_sweep", "learner": {"l_prime": [9]}},
        {"experiment": "qst_sweep", "learner": {"acquisition": "shots:0"}},
        {"experiment": "qst_sweep", "circuit": {"kind": "random", "architecture": "ring"}},
        {"experiment": "qst_sweep", "theta_h": [2.0]},
        {"experiment": "zne", "scales": [1]},
        {"experiment": "lower_bound"},
        {"experiment": "qst_sweep", "output": "/no/such/dir/out.csv"},
        {"experiment": "qpt_sweep", "observable": {"qubit": 0, "axis": "W"}},
    ],
)
def test_invalid_configs_rejected(bad):
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict(bad)


def test_grid_and_theta_lists_expand():
    cfg = make(experiment="qst_sweep", grids=[[2, 2], [1, 3]], theta_h=[0.0, 0.5], noises=[
        {"type": "depolarizing", "gamma": 0.01}, {"type": "amplitude_damping", "gamma": 0.02}])
    assert len(runners._points(cfg)) == 8


def test_derive_seed_distinct_and_stable():
    seeds = {cfgmod.derive_seed(7, p, t) for p in range(5) for t in range(5)}
    assert len(seeds) == 25
    assert cfgmod.derive_seed(7, 1, 2) == cfgmod.derive_seed(7, 1, 2)


def test_csv_columns_fixed():
    row = cfgmod.ResultRow("qst_sweep", 4, 2, 2, 5, 1, "0.02", "depolarizing", 0, 1, "m", 0.5, 12.0)
    text = rows_to_csv([row])
    assert text.splitlines()[0] == "experiment,n,rows,cols,depth,l_prime,gamma,noise_type,trial,seed,metric,value,wall_ms"
    assert text.splitlines()[1].endswith(",m,0.5,")
    assert rows_to_csv([row], with_timing=True).splitlines()[1].endswith(",m,0.5,12.000")


# ---------------------------------------------------------------------------
# state tomography sweep


def test_qst_small_grid_monotone():
    cfg = make(experiment="qst_sweep", seed=3, trials=10, circuit={"kind": "tfim", "rows": 2, "cols": 2, "layers": 5},
               noise={"type": "depolarizing", "gamma": 0.02}, learner={"l_prime": [1, 2, 3], "n_data": 20000})
    rows = runners.run(cfg)
    assert len([r for r in rows if r.metric == "trace_distance"]) == 30
    med = [np.median(values(rows, "trace_distance", l_prime=lp)) for lp in (1, 2, 3)]
    assert med[0] >= med[1] >= med[2]


def test_noiseless_full_weight_exact():
    n = 4
    c = build_tfim_circuit(2, 2, 1, math.pi / 4)
    rho = oracle_sim.evolve_density(c, None, oracle_sim.zero_state(n))
    codes = np.array(list(itertools.product(range(6), repeat=n)), dtype=np.int8)
    ds = learners.Dataset(codes, learners.ExactValues(rho)(codes))
    assert learners.reconstruct_and_score(learners.estimate_state_coeffs(ds, n, n), rho) <= 1e-6


def test_qst_error_split_rows_consistent():
    cfg = make(experiment="qst_sweep", seed=1, trials=2, circuit={"kind": "tfim", "rows": 1, "cols": 3, "layers": 2},
               learner={"l_prime": [1, 2], "n_data": 2000})
    rows = runners.run(cfg)
    for trial, lp in itertools.product(range(2), (1, 2)):
        total, = values(rows, "trace_distance", trial=trial, l_prime=lp)
        trunc, = values(rows, "truncation_error", trial=trial, l_prime=lp)
        learn, = values(rows, "learning_error", trial=trial, l_prime=lp)
        assert total <= trunc + learn + 1e-9


def test_difference_matrix_dump(tmp_path):
    cfg = make(experiment="qst_sweep", circuit={"kind": "tfim", "rows": 1, "cols": 2, "layers": 1},
               learner={"l_prime": [1], "n_data": 100}, difference_matrix_dir=str(tmp_path))
    runners.run(cfg)
    files = list(tmp_path.glob("*.npy"))
    assert len(files) == 1 and np.load(files[0]).shape == (4, 4)


def test_trajectory_fallback_matches_reference():
    cfg = make(experiment="qst_sweep", seed=2, circuit={"kind": "tfim", "rows": 1, "cols": 13, "layers": 1},
               learner={"l_prime": [1], "n_data": 3000}, trajectory_fallback=True, trajectories=4)
    rows = runners.run(cfg)
    rms, = values(rows, "coeff_rms_vs_trajectories")
    # single-qubit coefficients carry 2**-13 scale; the estimate should sit well inside that
    assert rms < 2.0**-13


def test_oracle_cap_without_fallback():
    cfg = make(experiment="qst_sweep", circuit={"kind": "tfim", "rows": 1, "cols": 13, "layers": 1},
               learner={"l_prime": [1], "n_data": 10})
    with pytest.raises(oracle_sim.OracleSizeError):
        runners.run(cfg)


# ---------------------------------------------------------------------------
# process tomography, entangled inputs


def test_qpt_fully_depolarizing_predicts_zero():
    cfg = make(experiment="qpt_sweep", seed=4, trials=1, circuit={"kind": "tfim", "rows": 1, "cols": 3, "layers": 2},
               noise={"type": "pauli", "gammas": [0.25, 0.25, 0.25, 0.25]}, learner={"l_prime": [1, 2], "n_data": 500})
    rows = runners.run(cfg)
    # every response is exactly zero, so the statistical spread is zero as well
    assert max(values(rows, "max_abs_error")) <= 1e-12


def test_zero_angle_prep_reduces_to_product():
    n = 3
    prep = build_entangled_prep(n, np.zeros(n), np.zeros(n), 2)
    rho = oracle_sim.evolve_density(prep, None, oracle_sim.zero_state(n))
    assert np.allclose(rho.data, oracle_sim.zero_state(n).data, atol=1e-14)
    rng = np.random.default_rng(0)
    coeffs = {p: rng.normal() for p in learners.exact_truncation(np.eye(8), n, 2)}
    model = learners.LearnedProcess(n, 2, coeffs)
    zero = StabilizerProductState(("Z+",) * n)
    assert learners.predict(model, rho) == pytest.approx(learners.predict(model, zero), abs=1e-12)


def test_entangled_seed_determinism():
    cfg = make(experiment="entangled_qpt", seed=5, trials=1, circuit={"kind": "tfim", "rows": 1, "cols": 3, "layers": 2},
               learner={"l_prime": [2], "n_data": 1000}, entangled_inputs=3, product_inputs=5, epsilon_target=0.5)
    a, b = rows_to_csv(runners.run(cfg)), rows_to_csv(runners.run(cfg))
    assert a == b and "entangled_within_target" in a


# ---------------------------------------------------------------------------
# zero-noise extrapolation


def test_fits_recover_exponential():
    r = np.arange(1, 6)
    f = 0.3 * 0.8**r + 0.1
    assert runners.fit_exponential(r, f) == pytest.approx(0.4, abs=1e-6)
    assert runners.fit_spline(r, 2 * r**2 - r + 1.0) == pytest.approx(1.0, abs=1e-9)


def test_constant_data_extrapolates_to_first_value():
    r = [1, 2, 3, 4, 5]
    assert runners.fit_exponential(r, [0.7] * 5) == 0.7
    assert runners.fit_spline(r, [0.7] * 5) == pytest.approx(0.7, abs=1e-12)


def test_zne_noiseless_all_scales_equal():
    cfg = make(experiment="zne", seed=6, trials=1, circuit={"kind": "tfim", "rows": 1, "cols": 3, "layers": 2},
               noise={"type": "depolarizing", "gamma": 0.0}, learner={"l_prime": [3], "n_data": 4000})
    rows = runners.run(cfg)
    f = [values(rows, f"f_r{r}")[0] for r in range(1, 6)]
    exact = [values(rows, f"exact_f_r{r}")[0] for r in range(1, 6)]
    assert np.ptp(exact) < 1e-12
    # exact responses are identical across scales, so only sampling differs
    ideal, = values(rows, "noiseless_value")
    assert abs(np.mean(f) - ideal) < 0.1
    report = runners.zne_report(rows)
    assert len(report["trials"]) == 1


def test_zne_degenerate_fit_reported_not_fatal(monkeypatch):
    def boom(scales, vals):
        raise runners.FitError("degenerate")

    monkeypatch.setattr(runners, "fit_spline", boom)
    cfg = make(experiment="zne", trials=1, circuit={"kind": "tfim", "rows": 1, "cols": 2, "layers": 1},
               learner={"l_prime": [2], "n_data": 200}, scales=[1, 2, 3])
    rows = runners.run(cfg)
    assert values(rows, "fit_failed_spline") == [1]
    assert math.isnan(values(rows, "extrapolated_spline")[0])


# ---------------------------------------------------------------------------
# lower bound


def test_lower_bound_noiseless():
    assert runners.lower_bound_samples(0.0, 7, 4, 0.5) == pytest.approx(0.25 / 8, rel=1e-15)


def test_lower_bound_reference_point():
    m = runners.lower_bound_samples(0.1, 10, 4, 0.5)
    assert m == pytest.approx(0.1429, abs=5e-5)


@settings(max_examples=50, deadline=None)
@given(st.floats(0.001, 0.99), st.integers(1, 50), st.integers(1, 100), st.floats(0.01, 0.99))
def test_lower_bound_matches_high_precision(gamma, d, n, eta):
    with mpmath.workdps(50):
        c = 1 / (2 * mpmath.log(2))
        ref = (1 - mpmath.mpf(gamma)) ** (-2 * c * d) * (1 - mpmath.mpf(eta)) ** 2 / (2 * n)
    m = runners.lower_bound_samples(gamma, d, n, eta)
    assert abs(m - float(ref)) <= 1e-12 * max(1.0, abs(float(ref)))


@settings(max_examples=50, deadline=None)
@given(st.floats(0.001, 0.99), st.integers(1, 40), st.integers(1, 20), st.floats(0.01, 0.99))
def test_lower_bound_increasing_in_depth(gamma, d, n, eta):
    assert runners.lower_bound_samples(gamma, d + 1, n, eta) > runners.lower_bound_samples(gamma, d, n, eta)


@pytest.mark.parametrize("args", [(1.0, 1, 1, 0.5), (-0.1, 1, 1, 0.5), (0.1, 0, 1, 0.5), (0.1, 1, 0, 0.5),
                                  (0.1, 1, 1, 0.0), (0.1, 1, 1, 1.0)])
def test_lower_bound_domain(args):
    with pytest.raises(ValueError):
        runners.lower_bound_samples(*args)


# ---------------------------------------------------------------------------
# statistical self-checks


def test_stabilizer_identity_exact():
    assert runners.stabilizer_identity_deviation() <= 1e-12


def test_identity_ensemble_fails_moment_check():
    us = np.broadcast_to(np.eye(4, dtype=complex), (1000, 4, 4))
    assert not all(ok for *_, ok in runners.second_moment_check(us))


def test_small_moment_checks_pass():
    cfg = make(experiment="moment_checks", seed=11, moment_draws=20000, orthogonality_circuits=500)
    rows = runners.run(cfg)
    checks = runners.evaluate("moment_checks", rows)
    names = {c.name for c in checks}
    assert {"negative_control_detected_pass", "weight_gap_pass", "clifford_second_moment_pass"} <= names
    assert all(c.passed for c in checks), [c for c in checks if not c.passed]


def test_evaluate_flags_nonmonotone_qst():
    def row(lp, v):
        return cfgmod.ResultRow("qst_sweep", 4, 2, 2, 5, lp, "0.02", "depolarizing", 0, 0, "trace_distance", v)

    good = runners.evaluate("qst_sweep", [row(1, 0.5), row(2, 0.4), row(3, 0.3)])
    bad = runners.evaluate("qst_sweep", [row(1, 0.5), row(2, 0.6), row(3, 0.45)])
    assert all(c.passed for c in good)
    assert not any(c.passed for c in bad)


# ---------------------------------------------------------------------------
# reproducibility


def test_csv_identical_across_worker_counts():
    cfg = make(experiment="qpt_sweep", seed=9, trials=2, circuit={"kind": "tfim", "rows": 1, "cols": 3, "layers": 2},
               noises=[{"type": "depolarizing", "gamma": 0.01}, {"type": "amplitude_damping", "gamma": 0.01}],
               learner={"l_prime": [1, 2], "n_data": 500}, product_inputs=10)
    assert rows_to_csv(runners.run(cfg, 1)) == rows_to_csv(runners.run(cfg, 2))


def test_observable_label_and_range():
    cfg = make(experiment="qpt_sweep", observable={"label": "ZZI"}, circuit={"kind": "tfim", "rows": 1, "cols": 3})
    obs = runners.observable_for(cfg, 3)
    assert obs == PauliObservable.single(PauliString.from_label("ZZI"))
    cfg = make(experiment="qpt_sweep", observable={"qubit": 5, "axis": "Z"}, circuit={"kind": "tfim", "rows": 1, "cols": 3})
    with pytest.raises(ConfigError):
        runners.observable_for(cfg, 3)
