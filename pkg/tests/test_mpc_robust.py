import numpy as np
import pytest

from ddmpc import qp
from ddmpc.analysis import ExperimentSetup
from ddmpc.errors import ConfigError
from ddmpc.mpc_nominal import NominalMpcConfig, Polytope, solve_nominal
from ddmpc.mpc_robust import (RobustMpcConfig, assemble_robust, evaluate_cost, optimality_bound_violation,
                              solve_robust)
from ddmpc.plant import double_integrator, generate_data, pe_input, scalar_plant
from ddmpc.signals import ExtendedState

SETUP = ExperimentSetup()


def _robust(eps, seed=3, setup=SETUP, **kw):
    return RobustMpcConfig(setup.nominal(setup.data(eps, seed)), eps, **kw)


def test_weights():
    cfg = _robust(1e-4, lambda_alpha=2.0, lambda_sigma=3.0)
    assert cfg.alpha_weight == pytest.approx(2.0 * 1e-2)
    assert cfg.sigma_weight == pytest.approx(3.0 / 1e-2)


def test_config_validation():
    base = SETUP.nominal()
    with pytest.raises(ConfigError, match="nominal"):
        RobustMpcConfig(base, 0.0)
    with pytest.raises(ConfigError):
        RobustMpcConfig(base, 1e-3, beta_alpha=1.0, beta_sigma=1.0)
    with pytest.raises(ConfigError):
        RobustMpcConfig(base, 1e-3, lambda_alpha=-1.0)
    data = SETUP.data()
    free = NominalMpcConfig(data, 8, 1, np.eye(1), np.eye(1))
    with pytest.raises(ConfigError, match="compact"):
        RobustMpcConfig(free, 1e-3)
    shifted = NominalMpcConfig(data, 8, 1, np.eye(1), np.eye(1), input_set=Polytope.box(0.0, 1.0))
    with pytest.raises(ConfigError, match="interior"):
        RobustMpcConfig(shifted, 1e-3)
    short = NominalMpcConfig(data, 1, 1, np.eye(1), np.eye(1), input_set=Polytope.box(-1, 1))
    with pytest.raises(ConfigError, match="2n"):
        RobustMpcConfig(short, 1e-3)
    with_y = NominalMpcConfig(data, 8, 1, np.eye(1), np.eye(1), input_set=Polytope.box(-1, 1),
                              output_set=Polytope.box(-1, 1))
    with pytest.raises(ConfigError, match="output"):
        RobustMpcConfig(with_y, 1e-3)


def test_zero_init_noise_free_data():
    cfg = RobustMpcConfig(SETUP.nominal(), 1e-3)
    sol = solve_robust(cfg, ExtendedState.zeros(1, 1, 1))
    assert sol.optimal and sol.cost == pytest.approx(0.0, abs=1e-14)
    for arr in (sol.u_hat, sol.y_hat, sol.alpha_hat, sol.sigma_hat):
        assert np.abs(arr).max() <= 1e-12


def test_slack_elimination_identity():
    cfg = _robust(1e-3)
    problem, layout = assemble_robust(cfg, SETUP.noisy_state(1e-3, 5))
    rng = np.random.default_rng(0)
    # random points on the equality manifold
    A_pinv = np.linalg.pinv(problem.A_eq)
    Z = np.linalg.svd(problem.A_eq)[2][problem.n_eq:].T
    for _ in range(10):
        v = A_pinv @ problem.b_eq + Z @ rng.standard_normal(Z.shape[1])
        alpha, y_hat = layout.unpack(v)
        u_hat = cfg.base.hankel_u @ alpha
        sigma = cfg.base.hankel_y @ alpha - y_hat.ravel()
        direct = evaluate_cost(cfg, u_hat, y_hat, alpha, sigma).total
        assert problem.objective(v) == pytest.approx(direct, rel=1e-10)


def test_noise_free_data_matches_nominal():
    cfg = RobustMpcConfig(SETUP.nominal(), 1e-8)
    init = SETUP.initial_state()
    rob = solve_robust(cfg, init)
    nom = solve_nominal(SETUP.nominal(), init)
    assert rob.optimal and nom.optimal
    assert np.abs(rob.planned_inputs - nom.planned_inputs).max() <= 1e-4


def test_solution_structure_and_bounds():
    eps = 1e-3
    cfg = _robust(eps)
    init = SETUP.noisy_state(eps, 7)
    sol = solve_robust(cfg, init)
    assert sol.optimal and sol.qp.kkt.max() <= 1e-9
    np.testing.assert_allclose(sol.u_hat[:1], init.u_past, atol=1e-9)
    np.testing.assert_allclose(sol.y_hat[:1], init.y_past, atol=1e-9)
    assert np.abs(sol.u_hat[-1:]).max() <= 1e-9 and np.abs(sol.y_hat[-1:]).max() <= 1e-9
    assert np.all(np.abs(sol.planned_inputs) <= SETUP.input_bound + 1e-9)
    parts = sol.breakdown
    assert parts.total == pytest.approx(sol.cost)
    assert min(parts) >= 0.0


def test_optimality_bounds_random_instances():
    rng = np.random.default_rng(1)
    worst = 0.0
    for i in range(100):
        eps = 10.0 ** rng.uniform(-5, -1)
        cfg = _robust(eps, seed=i)
        init = SETUP.noisy_state(eps, 1000 + i, x0=rng.uniform(-2, 2, 1))
        sol = solve_robust(cfg, init)
        assert sol.optimal
        worst = max(worst, optimality_bound_violation(cfg, sol))
    assert worst <= 1e-9


def test_hessian_curvature():
    eps = 1e-3
    cfg = _robust(eps)
    problem, layout = assemble_robust(cfg, SETUP.noisy_state(eps, 2))
    na = layout.n_alpha
    # cost Hessian is P (objective 0.5 v'Pv); the alpha block carries 2a I
    assert np.linalg.eigvalsh(problem.P[:na, :na])[0] >= 2 * cfg.alpha_weight * (1 - 1e-9)
    assert qp.reduced_hessian_min_eig(problem) > 0


@pytest.mark.parametrize("plant", [scalar_plant(), double_integrator()])
def test_licq_at_solution(plant):
    setup = ExperimentSetup(plant=plant)
    eps = 1e-3
    cfg = RobustMpcConfig(setup.nominal(setup.data(eps, 1)), eps)
    problem, _ = assemble_robust(cfg, setup.noisy_state(eps, 2))
    sol = qp.solve(problem)
    assert sol.optimal
    assert qp.check_licq(problem, sol.z).holds


def test_deviation_shrinks_with_noise():
    init_clean = SETUP.initial_state()
    nom = solve_nominal(SETUP.nominal(), init_clean)
    devs = []
    for eps in (1e-1, 1e-2, 1e-3, 1e-4):
        sol = solve_robust(_robust(eps), SETUP.noisy_state(eps, 11))
        devs.append(np.linalg.norm(sol.planned_inputs - nom.planned_inputs))
    assert all(b <= a for a, b in zip(devs, devs[1:]))
    assert devs[-1] < 0.05 * devs[0]


def test_double_integrator_robust_matches_nominal_at_small_noise():
    setup = ExperimentSetup(plant=double_integrator())
    data = generate_data(setup.plant, pe_input(60, 1, 1))
    cfg = RobustMpcConfig(setup.nominal(data), 1e-6)
    init = setup.initial_state()
    sol = solve_robust(cfg, init)
    nom = solve_nominal(setup.nominal(data), init)
    assert sol.optimal
    assert np.linalg.norm(sol.planned_inputs - nom.planned_inputs) < 0.1
