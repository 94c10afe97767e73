import warnings

import numpy as np
import pytest

from ddmpc import qp
from ddmpc.analysis import ExperimentSetup, model_based_oracle
from ddmpc.errors import ConfigError, DataQualityError, ShapeError
from ddmpc.mpc_nominal import NominalMpcConfig, Polytope, assemble_nominal, solve_nominal
from ddmpc.plant import double_integrator, generate_data, pe_input, scalar_plant
from ddmpc.signals import ExtendedState, TrajectoryData


def _hand_config(**kw):
    data = generate_data(scalar_plant(), pe_input(20, 1, seed=1))
    return NominalMpcConfig(data, L=2, n=1, Q=np.eye(1), R=np.eye(1), **kw)


HAND_INIT = ExtendedState(np.array([[0.0]]), np.array([[1.0]]))


def test_hand_example():
    # x_{-1} = 1 -> x_0 = 0.5; terminal y_1 = 0.25 + u_0 = 0 -> u_0 = -0.25
    sol = solve_nominal(_hand_config(), HAND_INIT)
    assert sol.optimal
    assert sol.planned_inputs[0, 0] == pytest.approx(-0.25, abs=1e-9)
    assert sol.cost == pytest.approx(0.3125, abs=1e-9)
    np.testing.assert_allclose(sol.planned_outputs[:, 0], [0.5, 0.0], atol=1e-9)


def test_hand_example_model_based_path():
    cfg = _hand_config()
    ref = model_based_oracle(scalar_plant(), cfg, HAND_INIT)
    assert ref.planned_inputs[0, 0] == pytest.approx(-0.25, abs=1e-9)
    assert ref.cost == pytest.approx(0.3125, abs=1e-9)


def test_zero_init_gives_zero_solution():
    sol = solve_nominal(_hand_config(), ExtendedState.zeros(1, 1, 1))
    assert sol.optimal and sol.cost == pytest.approx(0.0, abs=1e-14)
    assert np.abs(sol.u_bar).max() <= 1e-12 and np.abs(sol.alpha).max() <= 1e-12


def test_licq_at_solution():
    setup = ExperimentSetup()
    cfg = setup.nominal()
    problem, _ = assemble_nominal(cfg, setup.initial_state())
    sol = qp.solve(problem)
    assert qp.check_licq(problem, sol.z).holds


@pytest.mark.parametrize("plant, x0", [(scalar_plant(), 3.0), (double_integrator(), 1.0)])
def test_solution_structure(plant, x0):
    setup = ExperimentSetup(plant=plant, input_bound=2.0)
    cfg = setup.nominal()
    init = setup.initial_state(x0 * np.ones(plant.n))
    sol = solve_nominal(cfg, init)
    assert sol.optimal
    n = cfg.n
    np.testing.assert_allclose(sol.u_bar[:n], init.u_past, atol=1e-9)
    np.testing.assert_allclose(sol.y_bar[:n], init.y_past, atol=1e-9)
    assert np.abs(sol.u_bar[-n:]).max() <= 1e-9 and np.abs(sol.y_bar[-n:]).max() <= 1e-9
    assert np.all(np.abs(sol.planned_inputs) <= 2.0 + 1e-9)
    # the combination vector reproduces the trajectory through the Hankel matrices
    np.testing.assert_allclose(cfg.hankel_u @ sol.alpha, sol.u_bar.ravel(), atol=1e-8)
    np.testing.assert_allclose(cfg.hankel_y @ sol.alpha, sol.y_bar.ravel(), atol=1e-7)
    assert sol.qp.kkt.max() <= 1e-9


def test_output_constraints_respected():
    data = generate_data(scalar_plant(), pe_input(60, 1, seed=1))
    cfg = NominalMpcConfig(data, 8, 1, np.eye(1), np.eye(1), input_set=Polytope.box(-5, 5),
                           output_set=Polytope.box(-0.3, 2.0))
    init = ExtendedState(np.zeros((1, 1)), np.array([[1.0]]))
    sol = solve_nominal(cfg, init)
    assert sol.optimal
    assert sol.planned_outputs.min() >= -0.3 - 1e-9


def test_infeasible_reports_status():
    setup = ExperimentSetup(plant=double_integrator(), input_bound=0.01)
    sol = solve_nominal(setup.nominal(), setup.initial_state([50.0, 5.0]))
    assert sol.status == qp.INFEASIBLE and not sol.optimal
    assert np.all(np.isnan(sol.u_bar)) and np.isnan(sol.cost)


def test_pe_warning_and_strict():
    data = generate_data(scalar_plant(), pe_input(12, 1, seed=1))
    with pytest.warns(UserWarning, match="persistently exciting"):
        NominalMpcConfig(data, 8, 1, np.eye(1), np.eye(1))
    with pytest.raises(DataQualityError):
        NominalMpcConfig(data, 8, 1, np.eye(1), np.eye(1), strict_pe=True)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        cfg = NominalMpcConfig(data, 8, 1, np.eye(1), np.eye(1))
    with pytest.raises(DataQualityError):
        _ = cfg.parametrization


def test_config_validation():
    data = generate_data(scalar_plant(), pe_input(40, 1))
    with pytest.raises(ConfigError):
        NominalMpcConfig(data, 1, 2, np.eye(1), np.eye(1))
    with pytest.raises(ConfigError):
        NominalMpcConfig(data, 4, 1, -np.eye(1), np.eye(1))
    with pytest.raises(ConfigError):
        NominalMpcConfig(data, 4, 1, np.eye(1), [[1.0, 2.0], [0.0, 1.0]])
    with pytest.raises(ShapeError):
        NominalMpcConfig(data, 4, 1, np.eye(2), np.eye(1))
    with pytest.raises(ShapeError):
        NominalMpcConfig(data, 4, 1, np.eye(1), np.eye(1), input_set=Polytope.box(-1, 1, 2))
    cfg = NominalMpcConfig(data, 4, 1, np.eye(1), np.eye(1))
    with pytest.raises(ShapeError):
        solve_nominal(cfg, ExtendedState.zeros(2, 1, 1))


def test_polytope_helpers():
    box = Polytope.box([-1, -2], [1, 2])
    assert box.dim == 2 and box.contains([0.5, -2.0]) and not box.contains([1.5, 0.0])
    assert box.contains_origin_in_interior() and box.is_bounded()
    half = Polytope([[1.0, 0.0]], [1.0])
    assert not half.is_bounded()
    assert not Polytope.box(0.0, 1.0).contains_origin_in_interior()
    with pytest.raises(ConfigError):
        Polytope.box(1.0, -1.0)
    with pytest.raises(ShapeError):
        Polytope(np.eye(2), [1.0])


def test_unconstrained_inputs_allowed():
    data = generate_data(double_integrator(), pe_input(60, 1, seed=1))
    cfg = NominalMpcConfig(data, 8, 2, np.eye(1), np.eye(1))
    sol = solve_nominal(cfg, ExtendedState(np.zeros((2, 1)), np.array([[1.0], [2.0]])))
    assert sol.optimal and sol.qp.kkt.max() <= 1e-9


def test_trajectory_data_required_shapes():
    cfg = _hand_config()
    assert cfg.hankel_u.shape == (3, 18) and cfg.depth == 3
    assert cfg.stage_cost([[1.0], [2.0]], [[0.0], [1.0]]) == pytest.approx(6.0)
    assert isinstance(cfg.data, TrajectoryData)
