"""Receding-horizon closed-loop simulation."""
from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass, field
from typing import List, Optional, Union

import numpy as np

from .config import dump_config
from .errors import ConfigError, ShapeError, ValidationError
from .mpc_nominal import NominalMpcConfig, solve_nominal
from .mpc_robust import RobustMpcConfig, solve_robust
from .plant import NoiseSpec, StateSpaceModel, sample_bounded
from .signals import ExtendedState, extended_state

ONE_STEP = "one-step"
N_STEP = "n-step"
TAIL_FRACTION = 0.2

ControllerConfig = Union[NominalMpcConfig, RobustMpcConfig]


@dataclass(frozen=True)
class DisturbanceSpec:
    """Additive input disturbance with ``|d_t|_2 <= bound``.

    ``"constant"`` applies ``bound * 1/sqrt(m)`` in every input channel.
    """

    bound: float = 0.0
    distribution: str = "uniform-ball"
    seed: int = 0

    def __post_init__(self):
        if self.bound < 0:
            raise ConfigError("disturbance bound must be nonnegative")
        if self.distribution not in ("uniform-ball", "truncated-gaussian", "constant"):
            raise ConfigError(f"unknown disturbance distribution '{self.distribution}'")

    def sequence(self, T: int, m: int) -> np.ndarray:
        if self.distribution == "constant":
            return np.full((T, m), self.bound / math.sqrt(m))
        return sample_bounded(self.bound, self.distribution, T, m, np.random.default_rng(self.seed))


def inject_disturbance(u_opt, d, d_bar: float) -> np.ndarray:
    """Applied input ``u = u_opt + d`` after checking ``|d|_2 <= d_bar``."""
    d = np.asarray(d, dtype=float)
    if np.linalg.norm(d) > d_bar * (1 + 1e-12):
        raise ValidationError(f"disturbance norm {np.linalg.norm(d):.3e} exceeds bound {d_bar:.3e}")
    return np.asarray(u_opt, dtype=float) + d


@dataclass(frozen=True)
class ClosedLoopConfig:
    """Closed-loop experiment.

    ``x0`` is the plant state at time ``-n``; the ``warmup`` inputs
    (default zero) are applied open loop over ``-n..-1`` so that an
    extended state exists at ``t = 0``.
    """

    plant: StateSpaceModel
    controller: ControllerConfig
    T_sim: int
    x0: np.ndarray
    schedule: str = ONE_STEP
    warmup: Optional[np.ndarray] = None
    online_noise: NoiseSpec = field(default_factory=NoiseSpec)
    disturbance: Optional[DisturbanceSpec] = None
    d_sequence: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.schedule not in (ONE_STEP, N_STEP):
            raise ConfigError(f"unknown schedule '{self.schedule}'")
        n = self.controller.n
        if self.T_sim < n:
            raise ConfigError(f"T_sim must be at least n={n}")
        if self.plant.m != self.controller.m or self.plant.p != self.controller.p:
            raise ConfigError("plant and controller dimensions differ")
        if np.asarray(self.x0).size != self.plant.n:
            raise ShapeError(f"x0 must have {self.plant.n} entries")

    @property
    def n(self) -> int:
        return self.controller.n

    @property
    def kind(self) -> str:
        return "robust" if isinstance(self.controller, RobustMpcConfig) else "nominal"

    @property
    def disturbance_bound(self) -> float:
        if self.d_sequence is not None:
            if self.disturbance is None:
                return float(np.max(np.linalg.norm(np.atleast_2d(self.d_sequence), axis=1), initial=0.0))
            return self.disturbance.bound
        return 0.0 if self.disturbance is None else self.disturbance.bound


@dataclass(frozen=True)
class StepRecord:
    t: int
    u_opt: np.ndarray
    u_applied: np.ndarray
    y_true: np.ndarray
    y_measured: np.ndarray
    xi: np.ndarray
    status: str
    cost: float
    solved: bool
    solve_time: float

    @property
    def xi_norm(self) -> float:
        return float(np.linalg.norm(self.xi))


@dataclass
class ClosedLoopTrace:
    records: List[StepRecord]
    final_xi: np.ndarray
    feasible_throughout: bool
    failing_step: Optional[int]
    kind: str
    schedule: str
    n: int
    noise_bound: float
    disturbance_bound: float

    def __len__(self) -> int:
        return len(self.records)

    @property
    def xi_norms(self) -> np.ndarray:
        return np.array([r.xi_norm for r in self.records])

    @property
    def final_xi_norm(self) -> float:
        return float(np.linalg.norm(self.final_xi))

    @property
    def costs(self) -> np.ndarray:
        return np.array([r.cost for r in self.records])

    @property
    def u_applied(self) -> np.ndarray:
        return np.array([r.u_applied for r in self.records])

    @property
    def y_true(self) -> np.ndarray:
        return np.array([r.y_true for r in self.records])

    @property
    def solve_steps(self) -> List[int]:
        return [r.t for r in self.records if r.solved]

    def limsup_xi(self, fraction: float = TAIL_FRACTION) -> float:
        """Largest ``|xi_t|_2`` over the last ``fraction`` of the records."""
        norms = self.xi_norms
        if norms.size == 0:
            return float("nan")
        start = min(len(norms) - 1, int(math.floor((1 - fraction) * len(norms))))
        return float(np.max(norms[start:]))

    def summary(self) -> dict:
        return {
            "controller": self.kind,
            "schedule": self.schedule,
            "steps": len(self.records),
            "feasible_throughout": self.feasible_throughout,
            "failing_step": -1 if self.failing_step is None else self.failing_step,
            "final_xi_norm": self.final_xi_norm,
            "limsup_xi_norm": self.limsup_xi(),
            "noise_bound": self.noise_bound,
            "disturbance_bound": self.disturbance_bound,
        }

    def write_csv(self, path) -> None:
        if not self.records:
            m = p = 0
        else:
            m, p = self.records[0].u_opt.size, self.records[0].y_true.size
        header = (["t"] + [f"u*_{i}" for i in range(m)] + [f"u_applied_{i}" for i in range(m)]
                  + [f"y_true_{i}" for i in range(p)] + [f"y_meas_{i}" for i in range(p)]
                  + ["cost", "status", "xi_norm"])
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            for r in self.records:
                w.writerow([r.t] + [repr(float(v)) for v in r.u_opt] + [repr(float(v)) for v in r.u_applied]
                           + [repr(float(v)) for v in r.y_true] + [repr(float(v)) for v in r.y_measured]
                           + [repr(float(r.cost)), r.status, repr(r.xi_norm)])

    def summary_text(self) -> str:
        return dump_config(self.summary())


def _solve(controller: ControllerConfig, xi: ExtendedState):
    if isinstance(controller, RobustMpcConfig):
        return solve_robust(controller, xi)
    return solve_nominal(controller, xi)


def run_closed_loop(cfg: ClosedLoopConfig) -> ClosedLoopTrace:
    """Simulate the plant under the receding-horizon controller.

    One-step mode applies the first optimal input at every step; n-step
    mode solves at ``t = 0, n, 2n, ...`` and applies the first ``n``
    inputs of each plan. A disturbance, if configured, is added to the
    optimizer output before it reaches the plant. Measured outputs carry
    the online noise; the recorded ``xi`` is the noise-free extended state.
    """
    plant, n = cfg.plant, cfg.n
    m, p = plant.m, plant.p
    noise_rng = cfg.online_noise.rng()
    warmup = np.zeros((n, m)) if cfg.warmup is None else np.asarray(cfg.warmup, float).reshape(n, m)
    if cfg.d_sequence is not None:
        d_seq = np.asarray(cfg.d_sequence, dtype=float).reshape(-1, m)
        if len(d_seq) < cfg.T_sim:
            raise ValidationError("disturbance sequence shorter than T_sim")
    elif cfg.disturbance is not None:
        d_seq = cfg.disturbance.sequence(cfg.T_sim, m)
    else:
        d_seq = None
    d_bar = cfg.disturbance_bound

    x = np.asarray(cfg.x0, dtype=float).reshape(plant.n)
    u_hist, y_hist, ym_hist = [], [], []

    def step(u):
        nonlocal x
        y = plant.C @ x + plant.D @ u
        ym = y + cfg.online_noise.sample(1, p, noise_rng)[0]
        x = plant.A @ x + plant.B @ u
        u_hist.append(u)
        y_hist.append(y)
        ym_hist.append(ym)
        return y, ym

    for k in range(n):
        step(warmup[k])

    records: List[StepRecord] = []
    plan = None
    cost = float("nan")
    failing = None
    stride = 1 if cfg.schedule == ONE_STEP else n
    for t in range(cfg.T_sim):
        xi_true = extended_state(u_hist, y_hist, n).vector
        solved = t % stride == 0
        wall = 0.0
        if solved:
            xi_meas = extended_state(u_hist, ym_hist, n)
            t0 = time.perf_counter()
            sol = _solve(cfg.controller, xi_meas)
            wall = time.perf_counter() - t0
            if not sol.optimal:
                nan_u = np.full(m, np.nan)
                records.append(StepRecord(t, nan_u, nan_u, np.full(p, np.nan), np.full(p, np.nan),
                                          xi_true, sol.status, float("nan"), True, wall))
                failing = t
                break
            plan = sol.planned_inputs
            cost = sol.cost
        status = "optimal" if solved else "held"
        u_opt = plan[t % stride]
        u_app = u_opt.copy() if d_seq is None else inject_disturbance(u_opt, d_seq[t], d_bar)
        y, ym = step(u_app)
        records.append(StepRecord(t, u_opt.copy(), u_app, y, ym, xi_true, status,
                                  cost if solved else float("nan"), solved, wall))

    final = extended_state(u_hist, y_hist, n).vector
    return ClosedLoopTrace(records, final, failing is None, failing, cfg.kind, cfg.schedule, n,
                           cfg.online_noise.bound, d_bar)
