import csv
import dataclasses

import numpy as np
import pytest

from ddmpc.analysis import (ExperimentSetup, SweepReport, calibrate_disturbance, candidate_construction,
                            candidate_gap_sweep, continuity_sweep, cost_decrease_audit, excitation_sweep,
                            fit_exponential_decay, inherent_robustness_sweep, model_based_oracle,
                            monotone_within_ripple, seed_streams, state_hankel_pinv)
from ddmpc.errors import DataQualityError, PreconditionError, ValidationError
from ddmpc.loop import N_STEP, run_closed_loop
from ddmpc.mpc_nominal import NominalMpcConfig, solve_nominal
from ddmpc.mpc_robust import solve_robust
from ddmpc.plant import NoiseSpec, double_integrator, generate_data, pe_input, scalar_plant
from ddmpc.signals import ExtendedState

SCALAR = ExperimentSetup()
DI = ExperimentSetup(plant=double_integrator())


def test_monotone_within_ripple():
    assert monotone_within_ripple([1.0, 2.0, 3.0])
    assert monotone_within_ripple([1.0, 0.95, 2.0])
    assert not monotone_within_ripple([1.0, 0.85, 2.0])
    assert not monotone_within_ripple([1.0, np.nan])
    assert monotone_within_ripple([4.0])


def test_sweep_report_grid_validation():
    with pytest.raises(ValidationError):
        SweepReport("eps_bar", "m", [], np.zeros((0, 1)), np.zeros(0), 1)
    with pytest.raises(ValidationError):
        SweepReport("eps_bar", "m", [1e-2, 1e-3], np.zeros((2, 1)), np.ones(2), 1)


def test_sweep_report_single_point_and_outputs(tmp_path):
    rep = SweepReport("eps_bar", "dev", [1e-3], [[1.0, 3.0]], [1.0], 2)
    assert rep.check_monotone()
    assert "trivially true" in rep.notes[0] and rep.verdict
    np.testing.assert_allclose(rep.mean, [2.0])
    np.testing.assert_allclose(rep.std, [1.0])
    rep.write_csv(tmp_path / "r.csv")
    with open(tmp_path / "r.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["eps_bar", "metric_mean", "metric_std", "feasibility_rate"]
    assert float(rows[1][1]) == 2.0
    rep.check(False, "forced")
    text = rep.verdict_text()
    assert "FAIL forced" in text and text.endswith("verdict: FAIL\n")


def test_seed_streams_deterministic_and_distinct():
    a, b = seed_streams(7, 3), seed_streams(7, 3)
    assert a == b
    flat = [x for s in a for x in s]
    assert len(set(flat)) == len(flat)
    assert seed_streams(8, 1)[0] != a[0]


def test_model_based_oracle_hand_example():
    data = generate_data(scalar_plant(), pe_input(20, 1, seed=1))
    cfg = NominalMpcConfig(data, 2, 1, np.eye(1), np.eye(1))
    ref = model_based_oracle(scalar_plant(), cfg, ExtendedState(np.zeros((1, 1)), np.ones((1, 1))))
    assert ref.planned_inputs[0, 0] == pytest.approx(-0.25, abs=1e-9)
    zero = model_based_oracle(scalar_plant(), cfg, ExtendedState.zeros(1, 1, 1))
    assert zero.cost == pytest.approx(0.0, abs=1e-14)


@pytest.mark.parametrize("setup", [SCALAR, DI])
def test_model_based_oracle_matches_data_driven(setup):
    cfg = setup.nominal()
    rng = np.random.default_rng(0)
    for _ in range(5):
        init = setup.initial_state(rng.uniform(-1, 1, setup.plant.n))
        dd, mb = solve_nominal(cfg, init), model_based_oracle(setup.plant, cfg, init)
        assert dd.optimal and mb.optimal
        assert np.abs(dd.planned_inputs - mb.planned_inputs).max() <= 1e-8
        assert dd.cost == pytest.approx(mb.cost, rel=1e-8, abs=1e-12)


def test_cost_decrease_audit():
    cfg = DI.nominal()
    trace = run_closed_loop(DI.closed_loop(cfg))
    margins = cost_decrease_audit(trace, cfg)
    assert margins.size == len(trace) - 1 and margins.max() <= 1e-7
    recomputed = cost_decrease_audit(trace, cfg, recompute=True)
    np.testing.assert_allclose(recomputed[:-1], margins, atol=1e-9)
    still = run_closed_loop(DI.closed_loop(cfg, x0=[0.0, 0.0]))
    assert np.all(cost_decrease_audit(still, cfg) == 0.0)


def test_cost_decrease_audit_preconditions():
    cfg = SCALAR.nominal()
    with pytest.raises(PreconditionError):
        cost_decrease_audit(run_closed_loop(SCALAR.closed_loop(cfg, N_STEP)), cfg)
    noisy = SCALAR.closed_loop(cfg, online_noise=NoiseSpec(1e-3, seed=1))
    with pytest.raises(PreconditionError):
        cost_decrease_audit(run_closed_loop(noisy), cfg)
    robust = SCALAR.robust(1e-3, SCALAR.data(1e-3, 1))
    with pytest.raises(PreconditionError):
        cost_decrease_audit(run_closed_loop(SCALAR.closed_loop(robust)), cfg)


def test_candidate_feasible_and_upper_bounds_noisy_optimum():
    ref = solve_nominal(SCALAR.nominal(), SCALAR.initial_state())
    sigmas, gaps = [], []
    for eps in (1e-2, 1e-4, 1e-6):
        data = SCALAR.data(eps, 3)
        rcfg = SCALAR.robust(eps, data)
        init = SCALAR.noisy_state(eps, 4)
        cand = candidate_construction(rcfg, data, ref, SCALAR.x0, init)
        sol = solve_robust(rcfg, init)
        assert cand.feasible() and sol.optimal
        assert sol.cost <= cand.cost * (1 + 1e-9)
        sigmas.append(np.abs(cand.sigma_hat).max())
        gaps.append(abs(cand.cost - ref.cost))
    assert sigmas[-1] < 1e-3 * sigmas[0]
    assert gaps[-1] < 1e-2 * gaps[0]


def test_candidate_preconditions():
    ref = solve_nominal(SCALAR.nominal(), SCALAR.initial_state())
    data = SCALAR.data(1e-3, 3)
    rcfg = SCALAR.robust(1e-3, data)
    init = SCALAR.noisy_state(1e-3, 4)
    stripped = dataclasses.replace(data, x=None)
    with pytest.raises(PreconditionError):
        candidate_construction(rcfg, stripped, ref, SCALAR.x0, init)
    bad = solve_nominal(ExperimentSetup(plant=double_integrator(), input_bound=0.01).nominal(),
                        DI.initial_state([50.0, 5.0]))
    with pytest.raises(PreconditionError):
        candidate_construction(rcfg, data, bad, SCALAR.x0, init)


def test_state_hankel_pinv_rank_check():
    cfg = SCALAR.nominal()
    data = SCALAR.data()
    pinv = state_hankel_pinv(cfg, data.x)
    assert pinv.shape[1] == cfg.hankel_u.shape[0] + 1
    with pytest.raises(DataQualityError):
        state_hankel_pinv(cfg, np.zeros_like(data.x))


def test_fit_exponential_decay():
    t = np.arange(30)
    rho, C, r2 = fit_exponential_decay(3.0 * 0.6 ** t)
    assert rho == pytest.approx(0.6, rel=1e-10) and C == pytest.approx(3.0, rel=1e-9)
    assert r2 == pytest.approx(1.0)
    # points under the floor are ignored
    v = np.append(0.5 ** np.arange(10), np.zeros(5))
    assert fit_exponential_decay(v)[0] == pytest.approx(0.5)
    assert fit_exponential_decay([1.0, 0.0])[0] == 0.0


def test_inherent_robustness_zero_and_large_disturbance():
    rep = inherent_robustness_sweep(DI, [0.0, 1e-3], seeds=2)
    assert rep.values[0, 0] == rep.baseline and rep.verdict
    big = inherent_robustness_sweep(DI, [1e-3, 10.0], seeds=2, feasible_below=1e-3)
    assert big.feasibility[1] < 1.0 and big.verdict


def test_calibrate_disturbance():
    d = calibrate_disturbance(DI, 1e-3, 10.0, seeds=2, iterations=4)
    assert d is not None and 1e-3 <= d < 10.0
    assert calibrate_disturbance(SCALAR, 1e-3, 1e-2, seeds=2, iterations=2) is None


def test_small_sweeps_pass_and_repeat():
    rep = continuity_sweep(SCALAR, [1e-4, 1e-2], seeds=2)
    assert rep.verdict and rep.values.shape == (2, 2)
    again = continuity_sweep(SCALAR, [1e-4, 1e-2], seeds=2)
    np.testing.assert_array_equal(rep.values, again.values)
    gap = candidate_gap_sweep(SCALAR, [1e-4, 1e-2], seeds=2)
    assert gap.verdict and gap.mean[0] < gap.mean[1]


def test_excitation_sweep():
    rep = excitation_sweep(SCALAR, [0.5, 2.0], 1e-3, seeds=2)
    assert rep.parameter == "amplitude" and rep.verdict
    assert np.all(np.isfinite(rep.values))
