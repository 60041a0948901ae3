import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qlimits import (
    ConfigError,
    PrimalPredictor,
    bayes_risk,
    expected_risk_mc,
    make_problem,
    read_dataset_csv,
    sample_dataset,
    write_dataset_csv,
)


@pytest.mark.parametrize("sigma,expected", [(0.0, 0.0), (0.5, 0.25), (2.0, 4.0)])
def test_bayes_risk_is_noise_variance(sigma, expected):
    problem = make_problem(10, sigma, seed=1)
    assert bayes_risk(problem) == expected
    assert problem.bayes_risk == expected


def test_make_problem_rejects_bad_inputs():
    with pytest.raises(ConfigError):
        make_problem(0, 0.5)
    with pytest.raises(ConfigError):
        make_problem(3, -0.1)
    with pytest.raises(ConfigError):
        make_problem(3, 0.5, input_law="cauchy")


def test_target_weights_unit_norm_and_seeded():
    a = make_problem(7, 0.1, seed=42)
    b = make_problem(7, 0.1, seed=42)
    c = make_problem(7, 0.1, seed=43)
    assert np.linalg.norm(a.target_weights) == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_array_equal(a.target_weights, b.target_weights)
    assert not np.array_equal(a.target_weights, c.target_weights)


def test_noiseless_labels_are_exact():
    problem = make_problem(4, 0.0, seed=7)
    ds = sample_dataset(problem, 5, seed=3)
    np.testing.assert_array_equal(ds.labels, ds.features @ problem.target_weights)


def test_same_seed_reproduces_bit_exactly():
    problem = make_problem(3, 1.0, seed=1)
    a = sample_dataset(problem, 50, seed=3)
    b = sample_dataset(problem, 50, seed=3)
    c = sample_dataset(problem, 50, seed=4)
    np.testing.assert_array_equal(a.features, b.features)
    np.testing.assert_array_equal(a.labels, b.labels)
    assert not np.array_equal(a.labels, c.labels)


def test_label_noise_variance_matches_sigma():
    # direct law-of-large-numbers check on the residuals
    problem = make_problem(2, 1.0, seed=5)
    ds = sample_dataset(problem, 10_000, seed=9)
    residuals = ds.labels - ds.features @ problem.target_weights
    assert np.var(residuals, ddof=1) == pytest.approx(1.0, rel=0.05)


@pytest.mark.parametrize("law", ["unit_sphere_uniform", "gaussian_clipped"])
def test_input_norms_bounded(law):
    problem = make_problem(6, 0.3, input_law=law, seed=2)
    ds = sample_dataset(problem, 500, seed=11)
    norms = np.linalg.norm(ds.features, axis=1)
    assert np.all(norms <= problem.input_radius * (1 + 1e-12))
    if law == "unit_sphere_uniform":
        np.testing.assert_allclose(norms, 1.0, atol=1e-12)


def test_bayes_predictor_has_zero_risk_on_noiseless_problem():
    problem = make_problem(5, 0.0, seed=3)
    estimate = expected_risk_mc(
        PrimalPredictor(problem.target_weights), problem, n_eval=1000, seed=8
    )
    assert estimate.value <= 1e-12
    assert estimate.std_error <= 1e-12


def test_sample_dataset_rejects_empty():
    problem = make_problem(2, 0.1)
    with pytest.raises(ConfigError):
        sample_dataset(problem, 0, seed=1)


def test_csv_roundtrip_bit_exact(tmp_path):
    problem = make_problem(3, 0.7, seed=4)
    ds = sample_dataset(problem, 20, seed=6)
    path = tmp_path / "data.csv"
    write_dataset_csv(ds, path)
    loaded = read_dataset_csv(path)
    np.testing.assert_array_equal(loaded.features, ds.features)
    np.testing.assert_array_equal(loaded.labels, ds.labels)
    first = path.read_bytes()
    write_dataset_csv(ds, path)
    assert path.read_bytes() == first
    assert first.decode().splitlines()[0] == "x0,x1,x2,y"


def test_csv_rejects_malformed(tmp_path):
    bad_header = tmp_path / "a.csv"
    bad_header.write_text("a,b,y\n1,2,3\n")
    with pytest.raises(ConfigError):
        read_dataset_csv(bad_header)
    bad_row = tmp_path / "b.csv"
    bad_row.write_text("x0,y\n1.0\n")
    with pytest.raises(ConfigError):
        read_dataset_csv(bad_row)
    empty = tmp_path / "c.csv"
    empty.write_text("x0,y\n")
    with pytest.raises(ConfigError):
        read_dataset_csv(empty)


@settings(max_examples=25, deadline=None)
@given(
    d=st.integers(1, 6),
    sigma=st.floats(0.0, 2.0),
    law=st.sampled_from(["unit_sphere_uniform", "gaussian_clipped"]),
    seed=st.integers(0, 2**32),
    n=st.integers(1, 64),
)
def test_sampling_invariants(d, sigma, law, seed, n):
    problem = make_problem(d, sigma, input_law=law, seed=seed)
    ds = sample_dataset(problem, n, seed=seed)
    again = sample_dataset(problem, n, seed=seed)
    np.testing.assert_array_equal(ds.features, again.features)
    np.testing.assert_array_equal(ds.labels, again.labels)
    assert np.all(np.isfinite(ds.features)) and np.all(np.isfinite(ds.labels))
    norms = np.linalg.norm(ds.features, axis=1)
    assert np.all(norms <= problem.input_radius * (1 + 1e-12))
