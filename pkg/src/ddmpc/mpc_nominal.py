"""Noise-free data-driven MPC with terminal equality constraints.

The predicted input-output trajectory ``z = [u_bar; y_bar]`` over
``k = -n, ..., L-1`` must lie in the column span of the stacked Hankel
matrix ``[H_{L+n}(u^d); H_{L+n}(y^d)]``. That span constraint is removed by
writing ``z = U c`` with ``U`` an orthonormal basis of the span, so the QP
is posed in the reduced coordinates ``c``; the combination vector ``alpha``
is recovered afterwards as the minimum-norm solution ``H^+ z``.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional

import numpy as np

from . import qp as qpmod
from .errors import ConfigError, DataQualityError, ShapeError
from .signals import (DEFAULT_RANK_TOL, ExtendedState, TrajectoryData, build_hankel,
                      is_persistently_exciting)


@dataclass(frozen=True)
class Polytope:
    """``{v : G v <= h}``."""

    G: np.ndarray
    h: np.ndarray

    def __post_init__(self):
        G = np.atleast_2d(np.asarray(self.G, dtype=float))
        h = np.asarray(self.h, dtype=float).reshape(-1)
        if G.shape[0] != h.size:
            raise ShapeError("polytope G and h have different row counts")
        object.__setattr__(self, "G", G)
        object.__setattr__(self, "h", h)

    @property
    def dim(self) -> int:
        return self.G.shape[1]

    @classmethod
    def box(cls, lower, upper, dim: Optional[int] = None) -> "Polytope":
        lo = np.atleast_1d(np.asarray(lower, dtype=float))
        hi = np.atleast_1d(np.asarray(upper, dtype=float))
        d = dim or max(lo.size, hi.size)
        lo = np.broadcast_to(lo, (d,))
        hi = np.broadcast_to(hi, (d,))
        if np.any(lo > hi):
            raise ConfigError("box lower bound exceeds upper bound")
        I = np.eye(d)
        return cls(np.vstack([I, -I]), np.concatenate([hi, -lo]))

    def contains(self, v, tol: float = 1e-9) -> bool:
        v = np.asarray(v, dtype=float).reshape(-1)
        return bool(np.all(self.G @ v <= self.h + tol * np.maximum(1.0, np.abs(self.h))))

    def contains_origin_in_interior(self) -> bool:
        return bool(np.all(self.h > 0))

    def is_bounded(self) -> bool:
        from scipy.optimize import linprog

        for i in range(self.dim):
            for sign in (1.0, -1.0):
                c = np.zeros(self.dim)
                c[i] = -sign
                res = linprog(c, A_ub=self.G, b_ub=self.h, bounds=(None, None), method="highs")
                if res.status == 3:
                    return False
        return True


def _check_pd(M: np.ndarray, name: str) -> np.ndarray:
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.shape[0] != M.shape[1] or not np.allclose(M, M.T, atol=1e-12):
        raise ConfigError(f"{name} must be a symmetric square matrix")
    try:
        np.linalg.cholesky(M)
    except np.linalg.LinAlgError as exc:
        raise ConfigError(f"{name} must be positive definite") from exc
    return M


@dataclass(frozen=True)
class NominalMpcConfig:
    """Problem data for the noise-free scheme.

    Attributes:
        data: Offline trajectory; ``data.y`` is used for prediction.
        L: Prediction horizon (``L >= n``).
        n: Upper bound on the system order.
        Q, R: Output and input weights, positive definite.
        input_set: Polytope for ``u_bar_k``; ``None`` leaves inputs free.
        output_set: Polytope for ``y_bar_k``; ``None`` means all of R^p.
        strict_pe: Raise instead of warn when the data input is not
            persistently exciting of order ``L + 2n``.
    """

    data: TrajectoryData
    L: int
    n: int
    Q: np.ndarray
    R: np.ndarray
    input_set: Optional[Polytope] = None
    output_set: Optional[Polytope] = None
    strict_pe: bool = False
    rank_tol: float = DEFAULT_RANK_TOL
    qp_settings: qpmod.QpSettings = field(default_factory=qpmod.QpSettings)

    def __post_init__(self):
        if self.n < 1 or self.L < self.n:
            raise ConfigError(f"need L >= n >= 1, got L={self.L}, n={self.n}")
        m, p = self.data.m, self.data.p
        Q = _check_pd(self.Q, "Q")
        R = _check_pd(self.R, "R")
        if Q.shape != (p, p) or R.shape != (m, m):
            raise ShapeError(f"Q must be {p}x{p} and R {m}x{m}")
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "R", R)
        if self.input_set is not None and self.input_set.dim != m:
            raise ShapeError("input set dimension differs from m")
        if self.output_set is not None and self.output_set.dim != p:
            raise ShapeError("output set dimension differs from p")
        order = self.L + 2 * self.n
        if not is_persistently_exciting(self.data.u, order, self.rank_tol).exciting:
            msg = f"data input is not persistently exciting of order L+2n={order}"
            if self.strict_pe:
                raise DataQualityError(msg)
            warnings.warn(msg, stacklevel=3)

    @property
    def m(self) -> int:
        return self.data.m

    @property
    def p(self) -> int:
        return self.data.p

    @property
    def depth(self) -> int:
        return self.L + self.n

    @cached_property
    def hankel_u(self) -> np.ndarray:
        return build_hankel(self.data.u, self.depth).entries

    @cached_property
    def hankel_y(self) -> np.ndarray:
        return build_hankel(self.data.y, self.depth).entries

    @cached_property
    def parametrization(self) -> qpmod.NullSpaceParametrization:
        Hu = self.hankel_u
        if np.linalg.matrix_rank(Hu, tol=self.rank_tol * np.linalg.norm(Hu, 2)) < Hu.shape[0]:
            raise DataQualityError(
                f"H_{{L+n}}(u^d) is not full row rank; the input is not persistently "
                f"exciting of order {self.depth}")
        return qpmod.null_space_parametrization(np.vstack([Hu, self.hankel_y]), self.rank_tol)

    def stage_cost(self, u, y) -> float:
        u = np.asarray(u, dtype=float).reshape(-1, self.m)
        y = np.asarray(y, dtype=float).reshape(-1, self.p)
        return float(np.einsum("ki,ij,kj->", u, self.R, u) + np.einsum("ki,ij,kj->", y, self.Q, y))


@dataclass(frozen=True)
class TrajectoryLayout:
    """Index bookkeeping for stacked trajectories ``[u(-n..L-1); y(-n..L-1)]``."""

    L: int
    n: int
    m: int
    p: int

    @property
    def length(self) -> int:
        return self.L + self.n

    @property
    def size(self) -> int:
        return (self.m + self.p) * self.length

    def u_rows(self, k: int) -> slice:
        """Rows of ``u_bar_k``, ``k`` in ``[-n, L-1]``."""
        i = k + self.n
        return slice(i * self.m, (i + 1) * self.m)

    def y_rows(self, k: int) -> slice:
        off = self.m * self.length
        i = k + self.n
        return slice(off + i * self.p, off + (i + 1) * self.p)

    def selector(self, ks, which: str) -> np.ndarray:
        rows = []
        for k in ks:
            sl = self.u_rows(k) if which == "u" else self.y_rows(k)
            rows.extend(range(sl.start, sl.stop))
        S = np.zeros((len(rows), self.size))
        S[np.arange(len(rows)), rows] = 1.0
        return S

    def weight_matrix(self, Q: np.ndarray, R: np.ndarray) -> np.ndarray:
        """``W`` with ``z' W z = sum_{k=0}^{L-1} |u_k|_R^2 + |y_k|_Q^2``."""
        W = np.zeros((self.size, self.size))
        for k in range(self.L):
            W[self.u_rows(k), self.u_rows(k)] = R
            W[self.y_rows(k), self.y_rows(k)] = Q
        return W

    def split(self, z) -> tuple:
        z = np.asarray(z, dtype=float)
        nu = self.m * self.length
        return z[:nu].reshape(self.length, self.m), z[nu:].reshape(self.length, self.p)


@dataclass(frozen=True)
class NominalLayout(TrajectoryLayout):
    """Maps reduced coordinates ``c`` to the trajectory ``z = basis c``."""

    basis: np.ndarray = None
    H_pinv: np.ndarray = None

    @property
    def n_var(self) -> int:
        return self.basis.shape[1]

    def trajectory(self, c):
        return self.split(self.basis @ c)

    def alpha(self, c) -> np.ndarray:
        return self.H_pinv @ (self.basis @ c)


@dataclass(frozen=True)
class MpcSolution:
    """Optimal prediction over ``k = -n .. L-1`` (row ``i`` is ``k = i - n``)."""

    u_bar: np.ndarray
    y_bar: np.ndarray
    alpha: np.ndarray
    cost: float
    status: str
    n: int
    qp: Optional[qpmod.QpSolution] = None

    @property
    def optimal(self) -> bool:
        return self.status == qpmod.OPTIMAL

    @property
    def planned_inputs(self) -> np.ndarray:
        """``u_bar_k`` for ``k = 0 .. L-1``."""
        return self.u_bar[self.n:]

    @property
    def planned_outputs(self) -> np.ndarray:
        return self.y_bar[self.n:]


def _check_init(cfg, init: ExtendedState) -> None:
    if init.n != cfg.n or init.m != cfg.m or init.p != cfg.p:
        raise ShapeError(f"initial extended state has shape (n={init.n}, m={init.m}, p={init.p}), "
                         f"controller expects (n={cfg.n}, m={cfg.m}, p={cfg.p})")


def assemble_nominal(cfg: NominalMpcConfig, init: ExtendedState):
    """Build the QP in reduced trajectory coordinates.

    Returns:
        ``(qp, layout)``; ``layout.trajectory(c)`` maps a QP solution back to
        ``(u_bar, y_bar)``.
    """
    _check_init(cfg, init)
    par = cfg.parametrization
    layout = NominalLayout(cfg.L, cfg.n, cfg.m, cfg.p, par.range_basis, par.H_pinv)
    U = layout.basis
    W = layout.weight_matrix(cfg.Q, cfg.R)
    P = 2.0 * U.T @ W @ U
    q = np.zeros(U.shape[1])

    past = range(-cfg.n, 0)
    term = range(cfg.L - cfg.n, cfg.L)
    S_init = np.vstack([layout.selector(past, "u"), layout.selector(past, "y")])
    S_term = np.vstack([layout.selector(term, "u"), layout.selector(term, "y")])
    A_eq = np.vstack([S_init @ U, S_term @ U])
    b_eq = np.concatenate([init.u_past.ravel(), init.y_past.ravel(), np.zeros(S_term.shape[0])])

    G_rows, h_rows = [], []
    for k in range(cfg.L):
        if cfg.input_set is not None:
            G_rows.append(cfg.input_set.G @ layout.selector([k], "u") @ U)
            h_rows.append(cfg.input_set.h)
        if cfg.output_set is not None:
            G_rows.append(cfg.output_set.G @ layout.selector([k], "y") @ U)
            h_rows.append(cfg.output_set.h)
    G = np.vstack(G_rows) if G_rows else None
    h = np.concatenate(h_rows) if h_rows else None
    return qpmod.QuadraticProgram(P, q, A_eq, b_eq, G, h), layout


def solve_nominal(cfg: NominalMpcConfig, init: ExtendedState) -> MpcSolution:
    """Solve the noise-free problem at the extended state ``init``."""
    problem, layout = assemble_nominal(cfg, init)
    sol = qpmod.solve(problem, cfg.qp_settings)
    if not sol.optimal:
        nan_u = np.full((layout.length, cfg.m), np.nan)
        nan_y = np.full((layout.length, cfg.p), np.nan)
        return MpcSolution(nan_u, nan_y, np.full(layout.H_pinv.shape[0], np.nan),
                           np.nan, sol.status, cfg.n, sol)
    u_bar, y_bar = layout.trajectory(sol.z)
    cost = cfg.stage_cost(u_bar[cfg.n:], y_bar[cfg.n:])
    return MpcSolution(u_bar, y_bar, layout.alpha(sol.z), cost, sol.status, cfg.n, sol)
