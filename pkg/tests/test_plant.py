import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ddmpc.errors import ConfigError, ShapeError
from ddmpc.plant import (NoiseSpec, StateSpaceModel, double_integrator, generate_data, load_model,
                         model_from_config, model_to_config, pe_input, random_minimal_model,
                         sample_bounded, save_model, scalar_plant, simulate, structural_ranks)


def test_scalar_plant_step():
    X, Y = simulate(scalar_plant(), [1.0], [0.0])
    assert X[1, 0] == 0.5 and Y[0, 0] == 1.0
    X, Y = simulate(scalar_plant(), [0.0], [[1.0], [1.0]])
    np.testing.assert_allclose(X[:, 0], [0.0, 1.0, 1.5])
    np.testing.assert_allclose(Y[:, 0], [0.0, 1.0])


def test_double_integrator_ranks():
    ranks = structural_ranks(double_integrator())
    assert ranks.controllability == 2 and ranks.observability == 2
    assert double_integrator().is_minimal()


def test_nonminimal_rejected():
    model = StateSpaceModel(np.diag([0.5, 0.3]), [[1.0], [0.0]], [[1.0, 0.0]], [[0.0]])
    assert not model.is_minimal()
    with pytest.raises(ConfigError):
        model.require_minimal()


def test_simulate_shape_errors():
    with pytest.raises(ShapeError):
        simulate(scalar_plant(), [0.0, 0.0], [[1.0]])
    with pytest.raises(ShapeError):
        simulate(scalar_plant(), [0.0], np.ones((3, 2)))
    with pytest.raises(ShapeError):
        StateSpaceModel(np.ones((2, 3)), [1.0], [1.0], [0.0])


def test_generate_noise_free_data_identical():
    data = generate_data(double_integrator(), pe_input(30, 1, 2))
    np.testing.assert_array_equal(data.y, data.y_clean)
    assert data.eps_bar == 0.0 and data.x.shape == (30, 2)


@settings(max_examples=30, deadline=None)
@given(st.floats(1e-6, 10.0), st.sampled_from(["uniform-ball", "truncated-gaussian"]),
       st.integers(1, 4), st.integers(0, 10**6))
def test_noise_respects_bound(bound, dist, dim, seed):
    eps = NoiseSpec(bound, dist, seed).sample(200, dim)
    assert eps.shape == (200, dim)
    assert np.all(np.linalg.norm(eps, axis=1) <= bound)


def test_noise_seeded_and_validation():
    a = NoiseSpec(0.1, seed=4).sample(5, 2)
    np.testing.assert_array_equal(a, NoiseSpec(0.1, seed=4).sample(5, 2))
    assert not np.array_equal(a, NoiseSpec(0.1, seed=5).sample(5, 2))
    assert np.all(NoiseSpec(0.0).sample(3, 1) == 0)
    with pytest.raises(ConfigError):
        NoiseSpec(-1.0)
    with pytest.raises(ConfigError):
        NoiseSpec(1.0, "laplace")
    with pytest.raises(ConfigError):
        sample_bounded(1.0, "laplace", 3, 1, np.random.default_rng(0))


def test_noisy_data_bounded():
    data = generate_data(scalar_plant(), pe_input(50, 1), noise=NoiseSpec(1e-2, seed=3))
    assert np.max(np.abs(data.y - data.y_clean)) <= 1e-2
    assert data.eps_bar == 1e-2


def test_pe_input_values():
    u = pe_input(40, 2, seed=9, amplitude=0.5)
    assert u.shape == (40, 2) and set(np.unique(u)) == {-0.5, 0.5}


def test_random_minimal_model_is_minimal_and_stable():
    rng = np.random.default_rng(3)
    for _ in range(5):
        model = random_minimal_model(rng, 4, 2, 2)
        assert model.is_minimal(1e-6)
        assert max(abs(np.linalg.eigvals(model.A))) < 1.0


def test_model_file_round_trip(tmp_path):
    model = double_integrator()
    save_model(tmp_path / "p.toml", model)
    back = load_model(tmp_path / "p.toml")
    for name in "ABCD":
        np.testing.assert_array_equal(getattr(back, name), getattr(model, name))
    cfg = model_to_config(model)
    cfg["A"] = [1.0, 2.0]
    with pytest.raises(ConfigError):
        model_from_config(cfg)
    with pytest.raises(ConfigError):
        model_from_config({"n": 1, "m": 1})
