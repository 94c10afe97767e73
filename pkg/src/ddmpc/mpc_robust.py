"""Data-driven MPC for noisy output data: slack on the Hankel constraint and
noise-scaled ridge penalties.

Decision variables of the QP are ``v = [alpha; y_hat]``. The predicted input
``u_hat = H_u alpha`` and the slack ``sigma = H_y alpha - y_hat`` are
substituted, so only the initial-window, terminal and input constraints
remain explicit.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from . import qp as qpmod
from .errors import ConfigError
from .mpc_nominal import NominalMpcConfig, TrajectoryLayout, _check_init
from .signals import ExtendedState


@dataclass(frozen=True)
class RobustMpcConfig:
    """Noisy-data scheme built on a nominal config whose ``data.y`` is noisy.

    The penalties are ``lambda_alpha * eps_bar**beta_alpha`` on ``|alpha|^2``
    and ``lambda_sigma / eps_bar**beta_sigma`` on ``|sigma|^2``.
    """

    base: NominalMpcConfig
    eps_bar: float
    lambda_alpha: float = 1.0
    lambda_sigma: float = 1.0
    beta_alpha: float = 0.5
    beta_sigma: float = 0.5

    def __post_init__(self):
        if not self.eps_bar > 0:
            raise ConfigError("eps_bar must be > 0 for the robust scheme; "
                              "use the nominal scheme (mpc_nominal) for noise-free data")
        if min(self.lambda_alpha, self.lambda_sigma, self.beta_alpha, self.beta_sigma) <= 0:
            raise ConfigError("lambda_alpha, lambda_sigma, beta_alpha, beta_sigma must be positive")
        if self.beta_alpha + self.beta_sigma >= 2:
            raise ConfigError("beta_alpha + beta_sigma must be < 2")
        base = self.base
        if base.output_set is not None:
            raise ConfigError("output constraints are not supported by the robust scheme")
        U = base.input_set
        if U is None or not U.is_bounded():
            raise ConfigError("the robust scheme needs a compact input polytope")
        if not U.contains_origin_in_interior():
            raise ConfigError("0 must lie in the interior of the input set")
        if base.L < 2 * base.n:
            raise ConfigError(f"the robust scheme needs L >= 2n, got L={base.L}, n={base.n}")

    @property
    def alpha_weight(self) -> float:
        return self.lambda_alpha * self.eps_bar ** self.beta_alpha

    @property
    def sigma_weight(self) -> float:
        return self.lambda_sigma / self.eps_bar ** self.beta_sigma

    @property
    def n(self) -> int:
        return self.base.n

    @property
    def L(self) -> int:
        return self.base.L

    @property
    def m(self) -> int:
        return self.base.m

    @property
    def p(self) -> int:
        return self.base.p


@dataclass(frozen=True)
class RobustLayout(TrajectoryLayout):
    n_alpha: int = 0

    @property
    def n_var(self) -> int:
        return self.n_alpha + self.p * self.length

    def unpack(self, v):
        v = np.asarray(v, dtype=float)
        return v[:self.n_alpha], v[self.n_alpha:].reshape(self.length, self.p)


class CostBreakdown(NamedTuple):
    tracking: float
    alpha_penalty: float
    slack_penalty: float

    @property
    def total(self) -> float:
        return self.tracking + self.alpha_penalty + self.slack_penalty


def evaluate_cost(cfg: RobustMpcConfig, u_hat, y_hat, alpha, sigma) -> CostBreakdown:
    """Direct evaluation of the robust objective for a given point."""
    n = cfg.n
    u_hat = np.asarray(u_hat, dtype=float).reshape(-1, cfg.m)
    y_hat = np.asarray(y_hat, dtype=float).reshape(-1, cfg.p)
    tracking = cfg.base.stage_cost(u_hat[n:], y_hat[n:])
    a = np.asarray(alpha, dtype=float)
    s = np.asarray(sigma, dtype=float).ravel()
    return CostBreakdown(tracking, cfg.alpha_weight * float(a @ a), cfg.sigma_weight * float(s @ s))


@dataclass(frozen=True)
class RobustMpcSolution:
    u_hat: np.ndarray
    y_hat: np.ndarray
    alpha_hat: np.ndarray
    sigma_hat: np.ndarray
    cost: float
    status: str
    n: int
    breakdown: Optional[CostBreakdown] = None
    qp: Optional[qpmod.QpSolution] = None

    @property
    def optimal(self) -> bool:
        return self.status == qpmod.OPTIMAL

    @property
    def planned_inputs(self) -> np.ndarray:
        return self.u_hat[self.n:]

    @property
    def planned_outputs(self) -> np.ndarray:
        return self.y_hat[self.n:]


def assemble_robust(cfg: RobustMpcConfig, init_noisy: ExtendedState):
    """Build the QP over ``[alpha; y_hat]``.

    Returns:
        ``(qp, layout)``.
    """
    base = cfg.base
    _check_init(base, init_noisy)
    Hu, Hy = base.hankel_u, base.hankel_y
    na = Hu.shape[1]
    layout = RobustLayout(base.L, base.n, base.m, base.p, na)
    ny = layout.p * layout.length
    n, L = base.n, base.L

    # u_hat = Hu alpha; weights act on k = 0..L-1 only
    Wu = np.zeros((Hu.shape[0], Hu.shape[0]))
    Wy = np.zeros((ny, ny))
    for k in range(L):
        i = k + n
        Wu[i * layout.m:(i + 1) * layout.m, i * layout.m:(i + 1) * layout.m] = base.R
        Wy[i * layout.p:(i + 1) * layout.p, i * layout.p:(i + 1) * layout.p] = base.Q
    a, w = cfg.alpha_weight, cfg.sigma_weight
    Haa = Hu.T @ Wu @ Hu + a * np.eye(na) + w * Hy.T @ Hy
    Hay = -w * Hy.T
    Hyy = Wy + w * np.eye(ny)
    P = 2.0 * np.block([[Haa, Hay], [Hay.T, Hyy]])
    q = np.zeros(layout.n_var)

    def u_rows(ks):
        return np.concatenate([np.arange((k + n) * layout.m, (k + n + 1) * layout.m) for k in ks])

    def y_rows(ks):
        return np.concatenate([np.arange((k + n) * layout.p, (k + n + 1) * layout.p) for k in ks])

    past = range(-n, 0)
    term = range(L - n, L)
    rows_A, rows_b = [], []
    # initial window: inputs through the Hankel map, outputs directly
    rows_A.append(np.hstack([Hu[u_rows(past)], np.zeros((n * layout.m, ny))]))
    rows_b.append(init_noisy.u_past.ravel())
    Ey = np.eye(ny)
    rows_A.append(np.hstack([np.zeros((n * layout.p, na)), Ey[y_rows(past)]]))
    rows_b.append(init_noisy.y_past.ravel())
    # terminal equality constraints
    rows_A.append(np.hstack([Hu[u_rows(term)], np.zeros((n * layout.m, ny))]))
    rows_b.append(np.zeros(n * layout.m))
    rows_A.append(np.hstack([np.zeros((n * layout.p, na)), Ey[y_rows(term)]]))
    rows_b.append(np.zeros(n * layout.p))
    A_eq = np.vstack(rows_A)
    b_eq = np.concatenate(rows_b)

    Us = base.input_set
    G = np.vstack([np.hstack([Us.G @ Hu[u_rows([k])], np.zeros((Us.G.shape[0], ny))])
                   for k in range(L)])
    h = np.tile(Us.h, L)
    return qpmod.QuadraticProgram(P, q, A_eq, b_eq, G, h), layout


def solve_robust(cfg: RobustMpcConfig, init_noisy: ExtendedState) -> RobustMpcSolution:
    """Solve the noisy-data problem at the measured extended state."""
    problem, layout = assemble_robust(cfg, init_noisy)
    sol = qpmod.solve(problem, cfg.base.qp_settings)
    if not sol.optimal:
        nan = np.nan
        return RobustMpcSolution(np.full((layout.length, cfg.m), nan),
                                 np.full((layout.length, cfg.p), nan),
                                 np.full(layout.n_alpha, nan), np.full((layout.length, cfg.p), nan),
                                 nan, sol.status, cfg.n, None, sol)
    alpha, y_hat = layout.unpack(sol.z)
    u_hat = (cfg.base.hankel_u @ alpha).reshape(layout.length, cfg.m)
    sigma = (cfg.base.hankel_y @ alpha).reshape(layout.length, cfg.p) - y_hat
    parts = evaluate_cost(cfg, u_hat, y_hat, alpha, sigma)
    return RobustMpcSolution(u_hat, y_hat, alpha, sigma, parts.total, sol.status, cfg.n, parts, sol)


def optimality_bound_violation(cfg: RobustMpcConfig, sol: RobustMpcSolution) -> float:
    """Largest violation of ``a|alpha|^2 <= J`` and ``w|sigma|^2 <= J``
    (both follow from nonnegativity of every cost term)."""
    a = float(sol.alpha_hat @ sol.alpha_hat)
    s = float(np.sum(sol.sigma_hat ** 2))
    return max(a - sol.cost / cfg.alpha_weight, s - cfg.eps_bar ** cfg.beta_sigma * sol.cost / cfg.lambda_sigma, 0.0)
