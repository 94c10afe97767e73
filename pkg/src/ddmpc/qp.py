"""Dense convex quadratic programming.

Problems have the form::

    minimize    0.5 z' P z + q' z
    subject to  A_eq z = b_eq,   G z <= h

and are solved with a primal active-set method. Every iterate solves the
equality-constrained subproblem on the current working set by null-space
elimination, so the returned active set is exact rather than approximate.
A phase-1 linear program supplies the initial feasible point when the
equality-only minimizer violates an inequality.
"""
from __future__ import annotations

import io
from dataclasses import dataclass
from typing import List, NamedTuple, Optional, Sequence, TextIO, Tuple

import numpy as np
from scipy.optimize import linprog

from .errors import PreconditionError, ShapeError

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
MAX_ITER = "max-iterations"
INACCURATE = "inaccurate"

# reduced-Hessian eigenvalues below this (relative to max|P|) count as zero;
# about fifty ulps, near the accuracy of a symmetric eigensolver
CURVATURE_TOL = 1e-14


def _as_matrix(M, cols: int) -> np.ndarray:
    if M is None:
        return np.zeros((0, cols))
    return np.asarray(M, dtype=float).reshape(-1, cols)


@dataclass(frozen=True)
class QuadraticProgram:
    P: np.ndarray
    q: np.ndarray
    A_eq: Optional[np.ndarray] = None
    b_eq: Optional[np.ndarray] = None
    G: Optional[np.ndarray] = None
    h: Optional[np.ndarray] = None

    def __post_init__(self):
        P = np.atleast_2d(np.asarray(self.P, dtype=float))
        n = P.shape[0]
        if P.shape != (n, n):
            raise ShapeError(f"P must be square, got {P.shape}")
        if np.max(np.abs(P - P.T), initial=0.0) > 1e-10 * max(1.0, np.max(np.abs(P), initial=0.0)):
            raise ShapeError("P is not symmetric")
        q = np.asarray(self.q, dtype=float).reshape(-1)
        A = _as_matrix(self.A_eq, n)
        b = np.zeros(0) if self.b_eq is None else np.asarray(self.b_eq, dtype=float).reshape(-1)
        G = _as_matrix(self.G, n)
        h = np.zeros(0) if self.h is None else np.asarray(self.h, dtype=float).reshape(-1)
        if q.size != n or b.size != A.shape[0] or h.size != G.shape[0]:
            raise ShapeError("QP vector dimensions do not match its matrices")
        for name, val in (("P", 0.5 * (P + P.T)), ("q", q), ("A_eq", A), ("b_eq", b), ("G", G), ("h", h)):
            object.__setattr__(self, name, val)

    @property
    def n_var(self) -> int:
        return self.P.shape[0]

    @property
    def n_eq(self) -> int:
        return self.A_eq.shape[0]

    @property
    def n_ineq(self) -> int:
        return self.G.shape[0]

    def objective(self, z) -> float:
        z = np.asarray(z, dtype=float)
        return float(0.5 * z @ self.P @ z + self.q @ z)

    def scaled(self, c: float) -> "QuadraticProgram":
        return QuadraticProgram(c * self.P, c * self.q, self.A_eq, self.b_eq, self.G, self.h)


@dataclass(frozen=True)
class QpSettings:
    tol: float = 1e-9
    activity_tol: float = 1e-8
    max_iter: int = 1000


class KKTResiduals(NamedTuple):
    stationarity: float
    primal: float
    dual: float
    complementarity: float

    def max(self) -> float:
        return max(self)


@dataclass(frozen=True)
class QpSolution:
    z: np.ndarray
    duals_eq: np.ndarray
    duals_ineq: np.ndarray
    active_set: Tuple[int, ...]
    status: str
    kkt: KKTResiduals
    cost: float
    iterations: int = 0
    message: str = ""

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL


def kkt_residuals(qp: QuadraticProgram, z, duals_eq, duals_ineq) -> KKTResiduals:
    """Infinity-norm KKT residuals.

    Stationarity and primal residuals are relative to the magnitude of the
    terms they balance (floored at 1), so they stay meaningful for badly
    scaled data matrices.
    """
    z = np.asarray(z, dtype=float)
    nu = np.asarray(duals_eq, dtype=float)
    mu = np.asarray(duals_ineq, dtype=float)
    Pz = qp.P @ z
    terms = [Pz, qp.q, qp.A_eq.T @ nu, qp.G.T @ mu]
    grad = sum(terms)
    scale = max([1.0] + [float(np.max(np.abs(t), initial=0.0)) for t in terms])
    stat = float(np.max(np.abs(grad), initial=0.0)) / scale

    Az = qp.A_eq @ z
    Gz = qp.G @ z
    eq_scale = max(1.0, float(np.max(np.abs(qp.b_eq), initial=0.0)))
    in_scale = max(1.0, float(np.max(np.abs(qp.h), initial=0.0)))
    primal = max(float(np.max(np.abs(Az - qp.b_eq), initial=0.0)) / eq_scale,
                 float(np.max(Gz - qp.h, initial=0.0)) / in_scale)
    dual = float(np.max(-mu, initial=0.0))
    comp = float(np.max(np.abs(mu * (Gz - qp.h)), initial=0.0)) / in_scale
    return KKTResiduals(stat, max(primal, 0.0), max(dual, 0.0), comp)


# ---------------------------------------------------------------------------
# linear algebra helpers


def pseudoinverse(M, tol: float = 1e-12) -> np.ndarray:
    """Moore-Penrose inverse via SVD; singular values below ``tol * s_max``
    are treated as zero."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.size == 0:
        return np.zeros(M.shape[::-1])
    U, s, Vt = np.linalg.svd(M, full_matrices=False)
    cutoff = tol * s[0] if s.size and s[0] > 0 else np.inf
    inv = np.where(s > cutoff, 1.0 / np.where(s > cutoff, s, 1.0), 0.0)
    return (Vt.T * inv) @ U.T


class NullSpaceParametrization(NamedTuple):
    """Solutions of ``H a = z`` are ``a = H_pinv z + null_basis w``."""

    H_pinv: np.ndarray
    null_basis: np.ndarray
    range_basis: np.ndarray
    rank: int


def null_space_parametrization(H, tol: float = 1e-12) -> NullSpaceParametrization:
    """Split the domain of ``H`` into row space and orthonormal kernel.

    ``range_basis`` is an orthonormal basis of the column space of ``H``;
    ``z`` is reachable iff it lies in that span.
    """
    H = np.atleast_2d(np.asarray(H, dtype=float))
    rows, cols = H.shape
    U, s, Vt = np.linalg.svd(H, full_matrices=True)
    cutoff = tol * s[0] if s.size and s[0] > 0 else np.inf
    r = int(np.sum(s > cutoff))
    inv = 1.0 / s[:r]
    H_pinv = (Vt[:r].T * inv) @ U[:, :r].T
    return NullSpaceParametrization(H_pinv, Vt[r:].T.copy(), U[:, :r].copy(), r)


def _svd_split(M: np.ndarray, n: int, tol: float):
    """Row-space rank, orthonormal null basis and pseudoinverse of ``M``."""
    if M.shape[0] == 0:
        return 0, np.eye(n), np.zeros((n, 0))
    U, s, Vt = np.linalg.svd(M, full_matrices=True)
    cutoff = tol * max(1.0, s[0]) if s.size else 0.0
    r = int(np.sum(s > cutoff))
    pinv = (Vt[:r].T / s[:r]) @ U[:, :r].T
    return r, Vt[r:].T, pinv


class LicqResult(NamedTuple):
    holds: bool
    rank: int
    rows: int
    active: Tuple[int, ...]


def active_inequalities(qp: QuadraticProgram, z, activity_tol: float = 1e-8) -> Tuple[int, ...]:
    slack = qp.h - qp.G @ np.asarray(z, dtype=float)
    scale = np.maximum(1.0, np.abs(qp.h))
    return tuple(int(i) for i in np.flatnonzero(slack <= activity_tol * scale))


def check_licq(qp: QuadraticProgram, z, activity_tol: float = 1e-8,
               rank_tol: float = 1e-9) -> LicqResult:
    """Linear independence of equality rows and active inequality rows at ``z``."""
    z = np.asarray(z, dtype=float)
    scale_eq = max(1.0, float(np.max(np.abs(qp.b_eq), initial=0.0)))
    if np.max(np.abs(qp.A_eq @ z - qp.b_eq), initial=0.0) > activity_tol * scale_eq:
        raise PreconditionError("point violates the equality constraints")
    viol = qp.G @ z - qp.h
    if np.any(viol > activity_tol * np.maximum(1.0, np.abs(qp.h))):
        raise PreconditionError("point violates an inequality constraint")
    act = active_inequalities(qp, z, activity_tol)
    M = np.vstack([qp.A_eq, qp.G[list(act)]])
    if M.shape[0] == 0:
        return LicqResult(True, 0, 0, act)
    s = np.linalg.svd(M, compute_uv=False)
    r = int(np.sum(s > rank_tol * s[0])) if s[0] > 0 else 0
    return LicqResult(r == M.shape[0], r, M.shape[0], act)


def reduced_hessian_min_eig(qp: QuadraticProgram, tol: float = 1e-12) -> float:
    """Smallest eigenvalue of ``P`` restricted to the equality null space
    (``inf`` when that null space is trivial)."""
    _, Z, _ = _svd_split(qp.A_eq, qp.n_var, tol)
    if Z.shape[1] == 0:
        return float("inf")
    return float(np.linalg.eigvalsh(Z.T @ qp.P @ Z)[0])


# ---------------------------------------------------------------------------
# solver


def _phase_one(qp: QuadraticProgram, settings: QpSettings) -> Optional[np.ndarray]:
    res = linprog(np.zeros(qp.n_var),
                  A_ub=qp.G if qp.n_ineq else None, b_ub=qp.h if qp.n_ineq else None,
                  A_eq=qp.A_eq if qp.n_eq else None, b_eq=qp.b_eq if qp.n_eq else None,
                  bounds=(None, None), method="highs",
                  options={"primal_feasibility_tolerance": 1e-10})
    if res.status != 0 or res.x is None:
        return None
    return np.asarray(res.x, dtype=float)


def _eq_residual(qp: QuadraticProgram, z: np.ndarray) -> float:
    scale = max(1.0, float(np.max(np.abs(qp.b_eq), initial=0.0)))
    return float(np.max(np.abs(qp.A_eq @ z - qp.b_eq), initial=0.0)) / scale


def _failed(qp: QuadraticProgram, z, status: str, it: int, msg: str) -> QpSolution:
    z = np.full(qp.n_var, np.nan) if z is None else z
    nu, mu = np.zeros(qp.n_eq), np.zeros(qp.n_ineq)
    kkt = KKTResiduals(np.inf, np.inf, np.inf, np.inf)
    cost = -np.inf if status == UNBOUNDED else np.nan
    return QpSolution(z, nu, mu, (), status, kkt, cost, it, msg)


def solve(qp: QuadraticProgram, settings: QpSettings = QpSettings(),
          working_set: Sequence[int] = ()) -> QpSolution:
    """Solve ``qp`` with a primal active-set method.

    Args:
        qp: Problem data. ``P`` must be positive semidefinite.
        settings: Tolerances and iteration cap.
        working_set: Optional guess of active inequalities (warm start).
            Ignored unless the guess is consistent at the starting point.

    Returns:
        A :class:`QpSolution`. ``status`` is ``"optimal"``,
        ``"infeasible"``, ``"unbounded"`` or ``"max-iterations"``; in the
        last case ``z`` is the best feasible iterate reached. A converged
        active set whose KKT residuals still exceed ``tol`` is reported as
        ``"inaccurate"``.
    """
    n = qp.n_var
    tol = settings.tol
    pnorm = max(1.0, float(np.max(np.abs(qp.P), initial=0.0)))
    curv_tol = CURVATURE_TOL * pnorm
    G, h = qp.G, qp.h
    h_scale = np.maximum(1.0, np.abs(h))

    # consistency of the equalities
    r_eq, _, A_pinv = _svd_split(qp.A_eq, n, 1e-12)
    z = A_pinv @ qp.b_eq if qp.n_eq else np.zeros(n)
    if qp.n_eq and _eq_residual(qp, z) > tol:
        return _failed(qp, None, INFEASIBLE, 0, "equality constraints are inconsistent")

    W: List[int] = []
    z_eqp = _eqp_minimizer(qp, [], z)
    if z_eqp is not None and np.all(G @ z_eqp - h <= tol * h_scale):
        z = z_eqp
    else:
        start = None
        if working_set:
            cand = _eqp_point(qp, sorted(set(working_set)))
            if cand is not None and np.all(G @ cand - h <= tol * h_scale):
                start = cand
        if start is None:
            start = _phase_one(qp, settings)
        if start is None:
            return _failed(qp, None, INFEASIBLE, 0, "no point satisfies the constraints")
        z = start - A_pinv @ (qp.A_eq @ start - qp.b_eq) if qp.n_eq else start
        # greedy independent subset of the constraints active at the start
        rows = qp.A_eq
        rank = r_eq
        for i in np.flatnonzero(h - G @ z <= settings.activity_tol * h_scale):
            trial = np.vstack([rows, G[i]])
            if np.linalg.matrix_rank(trial, tol=1e-10 * max(1.0, np.abs(trial).max())) > rank:
                rows, rank = trial, rank + 1
                W.append(int(i))

    at_minimizer = not W and z_eqp is not None and z is z_eqp
    it = 0
    for it in range(1, settings.max_iter + 1):
        if not at_minimizer:
            M = np.vstack([qp.A_eq, G[W]])
            r, Z, _ = _svd_split(M, n, 1e-12)
            g = qp.P @ z + qp.q
            ray = False
            if Z.shape[1] == 0:
                p = np.zeros(n)
            else:
                Hr = Z.T @ qp.P @ Z
                gr = Z.T @ g
                evals, evecs = np.linalg.eigh(Hr)
                if evals[0] > curv_tol:
                    p = -Z @ np.linalg.solve(Hr, gr)
                else:
                    flat = evecs[:, evals <= curv_tol]
                    gf = flat.T @ gr
                    if np.linalg.norm(gf) > tol * max(1.0, np.linalg.norm(g)):
                        p = -Z @ (flat @ gf)
                        # eigenvalues near the roundoff floor of a badly scaled Hr
                        # cannot be trusted; the curvature along p itself can
                        curv = float(p @ qp.P @ p)
                        if curv > 0.0:
                            p *= min(1e300, -float(g @ p) / curv)
                        else:
                            ray = True
                    else:
                        p = -Z @ (np.linalg.pinv(Hr, rcond=1e-12) @ gr)
            if np.max(np.abs(p), initial=0.0) <= 1e-13 * (1.0 + np.max(np.abs(z), initial=0.0)):
                p = np.zeros(n)
            if np.any(p):
                step, block = (np.inf if ray else 1.0), None
                inactive = [i for i in range(qp.n_ineq) if i not in W]
                if inactive:
                    Gp = G[inactive] @ p
                    slack = h[inactive] - G[inactive] @ z
                    for k in np.flatnonzero(Gp > 1e-14 * np.linalg.norm(p)):
                        s_k = max(0.0, slack[k]) / Gp[k]
                        if s_k < step:
                            step, block = s_k, inactive[k]
                if block is None and ray:
                    return _failed(qp, z, UNBOUNDED, it, "objective decreases along a feasible ray")
                z = z + step * p
                if block is not None:
                    W.append(block)
                    W.sort()
                    continue
                if ray:
                    continue
            at_minimizer = True

        # z minimizes over the working set: test multiplier signs
        M = np.vstack([qp.A_eq, G[W]])
        g = qp.P @ z + qp.q
        lam = -np.linalg.lstsq(M.T, g, rcond=None)[0] if M.shape[0] else np.zeros(0)
        mu_W = lam[qp.n_eq:]
        if mu_W.size == 0 or mu_W.min() >= -tol * max(1.0, np.max(np.abs(g), initial=0.0)):
            return _finish(qp, z, W, it, settings)
        j = int(np.argmin(mu_W))  # argmin picks the smallest index on ties
        del W[j]
        at_minimizer = False

    sol = _finish(qp, z, W, it, settings)
    return QpSolution(sol.z, sol.duals_eq, sol.duals_ineq, sol.active_set, MAX_ITER,
                      sol.kkt, sol.cost, it, "iteration cap reached")


def _eqp_point(qp: QuadraticProgram, W: Sequence[int]) -> Optional[np.ndarray]:
    M = np.vstack([qp.A_eq, qp.G[list(W)]])
    rhs = np.concatenate([qp.b_eq, qp.h[list(W)]])
    _, _, pinv = _svd_split(M, qp.n_var, 1e-12)
    z0 = pinv @ rhs
    if M.shape[0] and np.max(np.abs(M @ z0 - rhs)) > 1e-9 * max(1.0, np.max(np.abs(rhs))):
        return None
    return _eqp_minimizer(qp, W, z0)


def _eqp_minimizer(qp: QuadraticProgram, W: Sequence[int], z0: np.ndarray) -> Optional[np.ndarray]:
    """Minimizer over the affine set through ``z0`` fixed by the equalities
    and the working set, or ``None`` if the reduced Hessian is singular."""
    M = np.vstack([qp.A_eq, qp.G[list(W)]])
    _, Z, _ = _svd_split(M, qp.n_var, 1e-12)
    if Z.shape[1] == 0:
        return z0
    Hr = Z.T @ qp.P @ Z
    pnorm = max(1.0, float(np.max(np.abs(qp.P), initial=0.0)))
    if np.linalg.eigvalsh(Hr)[0] <= CURVATURE_TOL * pnorm:
        return None
    w = np.linalg.solve(Hr, -Z.T @ (qp.P @ z0 + qp.q))
    z = z0 + Z @ w
    # one step of iterative refinement for ill-conditioned Hr
    return z + Z @ np.linalg.solve(Hr, -Z.T @ (qp.P @ z + qp.q))


def _finish(qp: QuadraticProgram, z: np.ndarray, W: List[int], it: int,
            settings: QpSettings) -> QpSolution:
    # re-solve the working-set subproblem from scratch to remove drift
    polished = _eqp_point(qp, W)
    if polished is not None and np.all(qp.G @ polished - qp.h
                                       <= settings.tol * np.maximum(1.0, np.abs(qp.h))):
        z = polished
    M = np.vstack([qp.A_eq, qp.G[W]])
    g = qp.P @ z + qp.q
    lam = -np.linalg.lstsq(M.T, g, rcond=None)[0] if M.shape[0] else np.zeros(0)
    nu = lam[:qp.n_eq]
    mu = np.zeros(qp.n_ineq)
    mu[W] = lam[qp.n_eq:]
    kkt = kkt_residuals(qp, z, nu, mu)
    status = OPTIMAL if kkt.max() <= settings.tol else INACCURATE
    msg = "" if status == OPTIMAL else f"KKT residual {kkt.max():.2e} above tolerance"
    return QpSolution(z, nu, mu, tuple(W), status, kkt, qp.objective(z), it, msg)


# ---------------------------------------------------------------------------
# debug dump


def _write_matrix(fh: TextIO, name: str, M: np.ndarray) -> None:
    M = np.atleast_2d(M) if M.ndim == 2 else M.reshape(1, -1)
    fh.write(f"{name} {M.shape[0]} {M.shape[1]}\n")
    for row in M:
        fh.write(" ".join(repr(float(v)) for v in row) + "\n")


def dump_qp(qp: QuadraticProgram, fh: Optional[TextIO] = None) -> str:
    """Plain-text dump: a dimensions header followed by row-major matrices."""
    out = io.StringIO()
    out.write(f"QP n_var={qp.n_var} n_eq={qp.n_eq} n_ineq={qp.n_ineq}\n")
    _write_matrix(out, "P", qp.P)
    _write_matrix(out, "q", qp.q.reshape(1, -1))
    _write_matrix(out, "A_eq", qp.A_eq)
    _write_matrix(out, "b_eq", qp.b_eq.reshape(1, -1))
    _write_matrix(out, "G", qp.G)
    _write_matrix(out, "h", qp.h.reshape(1, -1))
    text = out.getvalue()
    if fh is not None:
        fh.write(text)
    return text


def load_qp(text: str) -> QuadraticProgram:
    lines = text.splitlines()
    if not lines or not lines[0].startswith("QP "):
        raise ValueError("not a QP dump")
    mats = {}
    i = 1
    while i < len(lines):
        name, r, c = lines[i].split()
        r, c = int(r), int(c)
        rows = [list(map(float, lines[i + 1 + k].split())) for k in range(r)]
        mats[name] = np.array(rows, dtype=float).reshape(r, c)
        i += 1 + r
    n = mats["P"].shape[0]
    return QuadraticProgram(mats["P"], mats["q"].ravel(), mats["A_eq"].reshape(-1, n),
                            mats["b_eq"].ravel(), mats["G"].reshape(-1, n), mats["h"].ravel())
