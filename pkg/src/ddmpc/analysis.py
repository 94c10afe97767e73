"""Experiment drivers and reference oracles for the data-driven controllers.

Each sweep is deterministic in its root seed: per-seed streams for offline
data noise, online measurement noise and input disturbances are split off
with :class:`numpy.random.SeedSequence`.
"""
from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Callable, List, NamedTuple, Optional, Sequence

import numpy as np

from . import qp as qpmod
from .errors import DataQualityError, PreconditionError, ValidationError
from .loop import N_STEP, ONE_STEP, ClosedLoopConfig, ClosedLoopTrace, DisturbanceSpec, run_closed_loop
from .mpc_nominal import MpcSolution, NominalMpcConfig, Polytope, solve_nominal
from .mpc_robust import RobustMpcConfig, evaluate_cost, solve_robust
from .plant import NoiseSpec, StateSpaceModel, generate_data, pe_input, scalar_plant, simulate
from .signals import ExtendedState, TrajectoryData, build_hankel, extended_state

RIPPLE = 0.1


def _seed(ss: np.random.SeedSequence) -> int:
    return int(ss.generate_state(1)[0])


class SeedStreams(NamedTuple):
    data: int
    online: int
    disturbance: int


def seed_streams(root: int, count: int) -> List[SeedStreams]:
    """Split a root seed into ``count`` independent (data, online, disturbance) triples."""
    out = []
    for child in np.random.SeedSequence(root).spawn(count):
        out.append(SeedStreams(*(_seed(s) for s in child.spawn(3))))
    return out


@dataclass(frozen=True)
class ExperimentSetup:
    """Plant, controller and data settings shared by a family of experiments.

    ``x0`` is the plant state at time ``-n``; the initial extended state
    comes from applying ``n`` zero inputs from there.
    """

    plant: StateSpaceModel = field(default_factory=scalar_plant)
    L: int = 8
    n: Optional[int] = None
    Q: Optional[np.ndarray] = None
    R: Optional[np.ndarray] = None
    input_bound: float = 5.0
    N: int = 60
    amplitude: float = 1.0
    data_seed: int = 1
    lambda_alpha: float = 1.0
    lambda_sigma: float = 1.0
    beta_alpha: float = 0.5
    beta_sigma: float = 0.5
    x0: Optional[np.ndarray] = None
    T_sim: int = 50

    def __post_init__(self):
        pl = self.plant
        if self.n is None:
            object.__setattr__(self, "n", pl.n)
        if self.Q is None:
            object.__setattr__(self, "Q", np.eye(pl.p))
        if self.R is None:
            object.__setattr__(self, "R", np.eye(pl.m))
        x0 = np.ones(pl.n) if self.x0 is None else np.asarray(self.x0, dtype=float).reshape(pl.n)
        object.__setattr__(self, "x0", x0)

    @property
    def input_set(self) -> Polytope:
        return Polytope.box(-self.input_bound, self.input_bound, self.plant.m)

    def data_input(self) -> np.ndarray:
        return pe_input(self.N, self.plant.m, self.data_seed, self.amplitude)

    def data(self, eps_bar: float = 0.0, seed: int = 0) -> TrajectoryData:
        return generate_data(self.plant, self.data_input(), noise=NoiseSpec(eps_bar, seed=seed))

    def nominal(self, data: Optional[TrajectoryData] = None, **kw) -> NominalMpcConfig:
        data = self.data() if data is None else data
        return NominalMpcConfig(data, self.L, self.n, self.Q, self.R, input_set=self.input_set, **kw)

    def robust(self, eps_bar: float, data: TrajectoryData) -> RobustMpcConfig:
        return RobustMpcConfig(self.nominal(data), eps_bar, self.lambda_alpha, self.lambda_sigma,
                               self.beta_alpha, self.beta_sigma)

    def initial_window(self, x0=None):
        """Noise-free ``(u, y)`` history over ``-n..-1`` and the state at ``-n``."""
        x0 = self.x0 if x0 is None else np.asarray(x0, dtype=float)
        u = np.zeros((self.n, self.plant.m))
        _, y = simulate(self.plant, x0, u)
        return u, y

    def initial_state(self, x0=None) -> ExtendedState:
        u, y = self.initial_window(x0)
        return extended_state(u, y, self.n)

    def noisy_state(self, eps_bar: float, seed: int, x0=None) -> ExtendedState:
        u, y = self.initial_window(x0)
        return extended_state(u, y + NoiseSpec(eps_bar, seed=seed).sample(self.n, self.plant.p), self.n)

    def closed_loop(self, controller, schedule: str = ONE_STEP, x0=None, **kw) -> ClosedLoopConfig:
        x0 = self.x0 if x0 is None else x0
        return ClosedLoopConfig(self.plant, controller, self.T_sim, x0, schedule=schedule, **kw)


# ---------------------------------------------------------------------------
# Reports


def monotone_within_ripple(values: Sequence[float], ripple: float = RIPPLE) -> bool:
    """True if ``values`` is non-decreasing up to a relative drop of ``ripple``
    between neighbours."""
    v = np.asarray(values, dtype=float)
    if np.any(~np.isfinite(v)):
        return False
    return bool(np.all(v[1:] >= (1.0 - ripple) * v[:-1]))


@dataclass
class SweepReport:
    """Metric per grid point, aggregated over seeds.

    ``grid`` is strictly increasing. ``values`` holds the per-seed metric
    (``nan`` where the run failed) with shape ``(len(grid), seeds)``.
    """

    parameter: str
    metric: str
    grid: np.ndarray
    values: np.ndarray
    feasibility: np.ndarray
    seeds: int
    verdict: bool = True
    notes: List[str] = field(default_factory=list)
    baseline: Optional[float] = None

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=float)
        if self.grid.size == 0 or np.any(np.diff(self.grid) <= 0):
            raise ValidationError("sweep grid must be nonempty and strictly increasing")

    @property
    def mean(self) -> np.ndarray:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            return np.nanmean(self.values, axis=1)

    @property
    def std(self) -> np.ndarray:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            return np.nanstd(self.values, axis=1)

    def check(self, ok: bool, note: str) -> None:
        self.notes.append(("PASS " if ok else "FAIL ") + note)
        self.verdict = self.verdict and ok

    def check_monotone(self, ripple: float = RIPPLE) -> bool:
        if self.grid.size == 1:
            self.notes.append(f"PASS {self.metric} monotone in {self.parameter}: trivially true")
            return True
        ok = monotone_within_ripple(self.mean, ripple)
        self.check(ok, f"{self.metric} non-decreasing in {self.parameter} within {ripple:.0%} ripple")
        return ok

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow([self.parameter, "metric_mean", "metric_std", "feasibility_rate"])
            for g, mu, sd, f in zip(self.grid, self.mean, self.std, self.feasibility):
                w.writerow([repr(float(g)), repr(float(mu)), repr(float(sd)), repr(float(f))])

    def verdict_text(self) -> str:
        lines = [f"sweep: {self.parameter}", f"metric: {self.metric}", f"seeds: {self.seeds}"]
        if self.baseline is not None:
            lines.append(f"baseline: {self.baseline:.6e}")
        lines.extend(self.notes)
        lines.append("verdict: " + ("PASS" if self.verdict else "FAIL"))
        return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Oracles


def model_based_oracle(model: StateSpaceModel, cfg: NominalMpcConfig, init: ExtendedState,
                       settings: Optional[qpmod.QpSettings] = None) -> MpcSolution:
    """Same optimal control problem as :func:`solve_nominal`, with the state
    dynamics as explicit equality constraints instead of the Hankel span.

    Variables are ``[x_{-n}..x_{L}; u_{-n}..u_{L-1}; y_{-n}..y_{L-1}]``.
    """
    n, L, m, p, nx = cfg.n, cfg.L, cfg.m, cfg.p, model.n
    T = L + n
    ix = lambda k: slice((k + n) * nx, (k + n + 1) * nx)  # noqa: E731
    ou = nx * (T + 1)
    iu = lambda k: slice(ou + (k + n) * m, ou + (k + n + 1) * m)  # noqa: E731
    oy = ou + m * T
    iy = lambda k: slice(oy + (k + n) * p, oy + (k + n + 1) * p)  # noqa: E731
    nv = oy + p * T

    P = np.zeros((nv, nv))
    for k in range(L):
        P[iu(k), iu(k)] = 2 * cfg.R
        P[iy(k), iy(k)] = 2 * cfg.Q
    rows, rhs = [], []

    def eq(blocks, b):
        r = np.zeros((len(b), nv))
        for sl, M in blocks:
            r[:, sl] += M
        rows.append(r)
        rhs.append(np.asarray(b, dtype=float))

    for k in range(-n, L):
        eq([(ix(k + 1), np.eye(nx)), (ix(k), -model.A), (iu(k), -model.B)], np.zeros(nx))
        eq([(iy(k), np.eye(p)), (ix(k), -model.C), (iu(k), -model.D)], np.zeros(p))
    for j, k in enumerate(range(-n, 0)):
        eq([(iu(k), np.eye(m))], init.u_past[j])
        eq([(iy(k), np.eye(p))], init.y_past[j])
    for k in range(L - n, L):
        eq([(iu(k), np.eye(m))], np.zeros(m))
        eq([(iy(k), np.eye(p))], np.zeros(p))
    G = h = None
    if cfg.input_set is not None:
        G = np.zeros((L * cfg.input_set.G.shape[0], nv))
        h = np.tile(cfg.input_set.h, L)
        r = cfg.input_set.G.shape[0]
        for k in range(L):
            G[k * r:(k + 1) * r, iu(k)] = cfg.input_set.G
    problem = qpmod.QuadraticProgram(P, np.zeros(nv), np.vstack(rows), np.concatenate(rhs), G, h)
    sol = qpmod.solve(problem, settings or cfg.qp_settings)
    if not sol.optimal:
        return MpcSolution(np.full((T, m), np.nan), np.full((T, p), np.nan), np.array([]),
                           np.nan, sol.status, n, sol)
    z = sol.z
    u = z[ou:oy].reshape(T, m)
    y = z[oy:].reshape(T, p)
    return MpcSolution(u, y, np.array([]), cfg.stage_cost(u[n:], y[n:]), sol.status, n, sol)


class Candidate(NamedTuple):
    u_hat: np.ndarray
    y_hat: np.ndarray
    alpha_hat: np.ndarray
    sigma_hat: np.ndarray
    cost: float
    violation: float

    def feasible(self, tol: float = 1e-8) -> bool:
        return self.violation <= tol


def state_hankel_pinv(cfg: NominalMpcConfig, x_data) -> np.ndarray:
    """Pseudoinverse of ``[H_{L+n}(u^d); x^d_0 .. x^d_{N-L-n}]``.

    Raises:
        DataQualityError: if the stacked matrix lacks full row rank.
    """
    Hu = cfg.hankel_u
    X = np.asarray(x_data, dtype=float)[:Hu.shape[1]].T
    Hux = np.vstack([Hu, X])
    s = np.linalg.svd(Hux, compute_uv=False)
    if s[-1] <= cfg.rank_tol * s[0] or Hux.shape[0] > Hux.shape[1]:
        raise DataQualityError("input/state Hankel matrix is not full row rank; "
                               "the data input is not persistently exciting enough")
    return qpmod.pseudoinverse(Hux)


def candidate_construction(cfg: RobustMpcConfig, data: TrajectoryData, nominal: MpcSolution,
                           x_start, init_noisy: ExtendedState) -> Candidate:
    """Feasible point for the noisy-data problem built from the nominal optimum.

    Keeps the nominal input plan, replaces the past outputs by the noisy
    measurements, picks the combination vector that reproduces the plan and
    the true window start state ``x_start`` on the noise-free data, and
    reads the slack off the noisy Hankel matrix.

    Args:
        cfg: Robust configuration (its data carries the noisy outputs).
        data: Same trajectory with ``x`` (true states) populated.
        nominal: Nominal optimum at the true extended state.
        x_start: Plant state at the first step of the prediction window.
        init_noisy: Measured extended state.
    """
    if data.x is None:
        raise PreconditionError("candidate construction needs the true data state trajectory")
    if not nominal.optimal:
        raise PreconditionError("nominal solution is not optimal")
    base = cfg.base
    n = cfg.n
    pinv = state_hankel_pinv(base, data.x)
    u_hat = nominal.u_bar.copy()
    y_hat = nominal.y_bar.copy()
    y_hat[:n] = init_noisy.y_past
    alpha = pinv @ np.concatenate([u_hat.ravel(), np.asarray(x_start, dtype=float).ravel()])
    sigma = (base.hankel_y @ alpha).reshape(y_hat.shape) - y_hat
    cost = evaluate_cost(cfg, u_hat, y_hat, alpha, sigma).total

    # feasibility: Hankel input consistency, initial window, terminal zeros, bounds
    viol = [np.max(np.abs(base.hankel_u @ alpha - u_hat.ravel())),
            np.max(np.abs(u_hat[:n] - init_noisy.u_past)),
            np.max(np.abs(y_hat[:n] - init_noisy.y_past))]
    L = cfg.L
    viol.append(np.max(np.abs(u_hat[L:])))
    viol.append(np.max(np.abs(y_hat[L:])))
    U = base.input_set
    viol.append(max(0.0, float(np.max(U.G @ u_hat[n:].T - U.h[:, None]))))
    return Candidate(u_hat, y_hat, alpha, sigma, float(cost), float(max(viol)))


# ---------------------------------------------------------------------------
# Closed-loop audits


def fit_exponential_decay(norms, floor: float = 1e-12):
    """Least-squares fit of ``log |xi_t| = log C + t log rho``.

    Points at or below ``floor`` are dropped.

    Returns:
        ``(rho, C, r2)``.
    """
    v = np.asarray(norms, dtype=float)
    t = np.arange(v.size)
    keep = v > floor
    if keep.sum() < 2:
        return 0.0, float(v[0]) if v.size else 0.0, 1.0
    t, lv = t[keep], np.log(v[keep])
    slope, icpt = np.polyfit(t, lv, 1)
    pred = icpt + slope * t
    ss_tot = float(np.sum((lv - lv.mean()) ** 2))
    r2 = 1.0 - float(np.sum((lv - pred) ** 2)) / ss_tot if ss_tot > 0 else 1.0
    return float(math.exp(slope)), float(math.exp(icpt)), r2


def cost_decrease_audit(trace: ClosedLoopTrace, cfg: NominalMpcConfig,
                        recompute: bool = False) -> np.ndarray:
    """Per-step margins ``J(xi_{t+1}) - J(xi_t) + |u_t|_R^2 + |y_t|_Q^2``.

    All margins are nonpositive up to solver precision for the noise-free
    nominal one-step loop. With ``recompute`` the optimal costs are obtained
    by re-solving at the recorded extended states instead of read from the
    trace.

    Raises:
        PreconditionError: for traces not produced by an undisturbed
            noise-free nominal one-step loop.
    """
    if trace.kind != "nominal" or trace.schedule != ONE_STEP:
        raise PreconditionError("cost decrease audit needs a nominal one-step trace")
    if trace.noise_bound > 0 or trace.disturbance_bound > 0:
        raise PreconditionError("cost decrease audit needs a noise-free undisturbed trace")
    if not trace.feasible_throughout:
        raise PreconditionError("trace is not feasible throughout")
    recs = trace.records
    if recompute:
        states = [r.xi for r in recs] + [trace.final_xi]
        J = np.array([solve_nominal(cfg, ExtendedState.from_vector(xi, cfg.n, cfg.m, cfg.p)).cost
                      for xi in states])
    else:
        J = np.append(trace.costs, np.nan)
    margins = np.empty(len(recs) - (0 if recompute else 1))
    for i in range(margins.size):
        r = recs[i]
        margins[i] = J[i + 1] - J[i] + cfg.stage_cost(r.u_applied, r.y_true)
    return margins


# ---------------------------------------------------------------------------
# Sweeps


def _nominal_reference(setup: ExperimentSetup):
    cfg = setup.nominal()
    ref = solve_nominal(cfg, setup.initial_state())
    if not ref.optimal:
        raise PreconditionError(f"nominal problem infeasible at the sweep initial state ({ref.status})")
    return cfg, ref


def continuity_sweep(setup: ExperimentSetup, eps_grid: Sequence[float], seeds: int = 10,
                     root_seed: int = 0, floor_point: Optional[float] = None,
                     floor_bound: float = 1e-3) -> SweepReport:
    """Input deviation ``|u_hat* - u_bar*|_2`` between the noisy-data and
    noise-free problems at a fixed initial state, per noise bound.

    The noisy problem sees data and initial measurements corrupted at level
    ``eps``; the noise-free problem uses clean data and the true state.
    With ``floor_point`` an extra check requires the mean deviation at that
    noise level to stay below ``floor_bound``.
    """
    _, ref = _nominal_reference(setup)
    streams = seed_streams(root_seed, seeds)

    def deviation(eps, s: SeedStreams):
        data = setup.data(eps, s.data)
        sol = solve_robust(setup.robust(eps, data), setup.noisy_state(eps, s.online))
        if not sol.optimal:
            return np.nan
        return float(np.linalg.norm(sol.planned_inputs - ref.planned_inputs))

    grid = np.asarray(eps_grid, dtype=float)
    vals = np.array([[deviation(e, s) for s in streams] for e in grid])
    rep = SweepReport("eps_bar", "input_deviation", grid, vals, np.mean(np.isfinite(vals), axis=1), seeds)
    rep.check(bool(np.all(rep.feasibility == 1.0)), "all noisy problems solved")
    rep.check_monotone()
    if floor_point is not None:
        v = np.nanmean([deviation(floor_point, s) for s in streams])
        rep.check(bool(v <= floor_bound), f"deviation {v:.3e} at eps_bar={floor_point:g} <= {floor_bound:g}")
    return rep


def _tail_limsup(cl: ClosedLoopConfig) -> float:
    trace = run_closed_loop(cl)
    return trace.limsup_xi() if trace.feasible_throughout else np.nan


def practical_stability_sweep(setup: ExperimentSetup, eps_grid: Sequence[float], seeds: int = 10,
                              root_seed: int = 0, floor: float = 1e-2,
                              baseline_bound: float = 1e-6) -> SweepReport:
    """Tail ``limsup |xi_t|_2`` of the robust n-step closed loop per noise bound.

    Offline data and online measurements are both corrupted at level
    ``eps``. A noise-free nominal n-step run supplies the baseline.
    """
    streams = seed_streams(root_seed, seeds)
    grid = np.asarray(eps_grid, dtype=float)
    vals = np.empty((grid.size, seeds))
    for i, eps in enumerate(grid):
        for j, s in enumerate(streams):
            ctrl = setup.robust(eps, setup.data(eps, s.data))
            vals[i, j] = _tail_limsup(setup.closed_loop(ctrl, N_STEP, online_noise=NoiseSpec(eps, seed=s.online)))
    rep = SweepReport("eps_bar", "limsup_xi_norm", grid, vals, np.mean(np.isfinite(vals), axis=1), seeds)
    rep.baseline = _tail_limsup(setup.closed_loop(setup.nominal(), N_STEP))
    rep.check(bool(np.all(rep.feasibility == 1.0)), "all closed loops feasible")
    rep.check_monotone()
    rep.check(bool(rep.mean[0] <= floor), f"limsup {rep.mean[0]:.3e} at smallest eps_bar <= {floor:g}")
    rep.check(bool(rep.baseline <= baseline_bound and rep.baseline < np.nanmin(rep.mean)),
              f"noise-free baseline {rep.baseline:.3e} below every robust point")
    return rep


def _disturbed_run(setup: ExperimentSetup, cfg: NominalMpcConfig, d_bar: float, seed: int) -> ClosedLoopTrace:
    dist = DisturbanceSpec(d_bar, seed=seed) if d_bar > 0 else None
    return run_closed_loop(setup.closed_loop(cfg, N_STEP, disturbance=dist))


def inherent_robustness_sweep(setup: ExperimentSetup, d_grid: Sequence[float], seeds: int = 10,
                              root_seed: int = 0, feasible_below: Optional[float] = None) -> SweepReport:
    """Feasibility rate and tail ``limsup |xi_t|_2`` of the nominal n-step
    loop under bounded random input disturbances.

    Args:
        feasible_below: Grid points at or below this bound must be feasible
            for every seed; defaults to the whole grid.
    """
    cfg = setup.nominal()
    base = run_closed_loop(setup.closed_loop(cfg, N_STEP))
    if not base.feasible_throughout:
        raise PreconditionError("undisturbed nominal n-step loop is infeasible")
    streams = seed_streams(root_seed, seeds)
    grid = np.asarray(d_grid, dtype=float)
    vals = np.empty((grid.size, seeds))
    for i, d in enumerate(grid):
        for j, s in enumerate(streams):
            tr = _disturbed_run(setup, cfg, d, s.disturbance)
            vals[i, j] = tr.limsup_xi() if tr.feasible_throughout else np.nan
    rep = SweepReport("d_bar", "limsup_xi_norm", grid, vals, np.mean(np.isfinite(vals), axis=1), seeds)
    rep.baseline = base.limsup_xi()
    limit = grid[-1] if feasible_below is None else feasible_below
    sel = grid <= limit
    rep.check(bool(np.all(rep.feasibility[sel] == 1.0)), f"all runs feasible for d_bar <= {limit:g}")
    if np.all(rep.feasibility == 1.0):
        rep.check_monotone()
    else:
        ok = monotone_within_ripple(rep.mean[sel]) if sel.sum() > 1 else True
        rep.check(ok, f"limsup non-decreasing in d_bar within {RIPPLE:.0%} ripple on feasible points")
    return rep


def calibrate_disturbance(setup: ExperimentSetup, lo: float, hi: float, seeds: int = 5,
                          root_seed: int = 0, iterations: int = 12) -> Optional[float]:
    """Bisection for the largest ``d_bar`` in ``[lo, hi]`` keeping every seed feasible.

    Returns ``None`` when ``hi`` itself is feasible for every seed (no
    threshold in range). The result is empirical, not a certified bound.
    """
    cfg = setup.nominal()
    streams = seed_streams(root_seed, seeds)

    def all_feasible(d):
        return all(_disturbed_run(setup, cfg, d, s.disturbance).feasible_throughout for s in streams)

    if all_feasible(hi):
        return None
    if not all_feasible(lo):
        raise PreconditionError(f"loop already infeasible at d_bar={lo:g}")
    for _ in range(iterations):
        mid = math.sqrt(lo * hi) if lo > 0 else 0.5 * hi
        if all_feasible(mid):
            lo = mid
        else:
            hi = mid
    return lo


def candidate_gap_sweep(setup: ExperimentSetup, eps_grid: Sequence[float], seeds: int = 10,
                        root_seed: int = 0, tol: float = 1e-8) -> SweepReport:
    """Noisy optimal cost versus the constructed candidate and the nominal optimum.

    For every instance the candidate must be feasible and its cost must
    upper-bound the noisy optimum. The reported metric is
    ``|J_hat* - J*|``, which has to shrink with ``eps``.
    """
    _, ref = _nominal_reference(setup)
    streams = seed_streams(root_seed, seeds)
    grid = np.asarray(eps_grid, dtype=float)
    vals = np.empty((grid.size, seeds))
    feasible = sandwich = True
    for i, eps in enumerate(grid):
        for j, s in enumerate(streams):
            data = setup.data(eps, s.data)
            rcfg = setup.robust(eps, data)
            init = setup.noisy_state(eps, s.online)
            sol = solve_robust(rcfg, init)
            cand = candidate_construction(rcfg, data, ref, setup.x0, init)
            feasible &= cand.feasible(tol)
            sandwich &= bool(sol.optimal and sol.cost <= cand.cost * (1 + 1e-9) + 1e-12)
            vals[i, j] = abs(sol.cost - ref.cost) if sol.optimal else np.nan
    rep = SweepReport("eps_bar", "cost_gap", grid, vals, np.mean(np.isfinite(vals), axis=1), seeds)
    rep.check(bool(feasible), "candidate feasible on every instance")
    rep.check(sandwich, "noisy optimum <= candidate cost on every instance")
    rep.check_monotone()
    return rep


def excitation_sweep(setup: ExperimentSetup, amplitudes: Sequence[float], eps_bar: float,
                     seeds: int = 10, root_seed: int = 0) -> SweepReport:
    """Exploratory: input deviation at fixed ``eps_bar`` versus data amplitude.

    No pass/fail bound is attached; the verdict only records feasibility.
    """
    amps = np.asarray(amplitudes, dtype=float)
    vals = np.empty((amps.size, seeds))
    for i, a in enumerate(amps):
        rep = continuity_sweep(replace(setup, amplitude=float(a)), [eps_bar], seeds, root_seed)
        vals[i] = rep.values[0]
    rep = SweepReport("amplitude", "input_deviation", amps, vals, np.mean(np.isfinite(vals), axis=1), seeds)
    rep.check(bool(np.all(rep.feasibility == 1.0)), "all noisy problems solved")
    return rep


SWEEPS: dict = {
    "continuity": continuity_sweep,
    "practical-stability": practical_stability_sweep,
    "inherent-robustness": inherent_robustness_sweep,
    "candidate-gap": candidate_gap_sweep,
}
SweepFn = Callable[..., SweepReport]
