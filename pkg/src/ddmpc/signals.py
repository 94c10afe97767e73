"""Sequence containers, Hankel matrices, persistence of excitation and the
Fundamental-Lemma membership test.

Sequences are stored as ``(N, q)`` arrays: one row per time step. A 1-D
array of length ``N`` is read as a scalar sequence (``q = 1``).
"""
from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple, Optional

import numpy as np

from .errors import InsufficientHistoryError, ShapeError, WindowTooDeepError

DEFAULT_RANK_TOL = 1e-9


def as_sequence(seq, name: str = "sequence") -> np.ndarray:
    """Coerce ``seq`` to a float array of shape ``(N, q)``."""
    try:
        arr = np.asarray(seq, dtype=float)
    except ValueError as exc:  # ragged nested lists
        raise ShapeError(f"{name}: elements have inconsistent dimensions") from exc
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2:
        raise ShapeError(f"{name}: expected a sequence of vectors, got ndim={arr.ndim}")
    return arr


@dataclass(frozen=True)
class TrajectoryData:
    """Measured input-output data.

    ``y`` is what a controller sees (noisy when ``eps_bar > 0``). The
    noise-free outputs ``y_clean`` and the state trajectory ``x`` are kept
    only when the data came from a simulation; oracles use them.
    """

    u: np.ndarray
    y: np.ndarray
    y_clean: Optional[np.ndarray] = None
    x: Optional[np.ndarray] = None
    eps_bar: float = 0.0

    def __post_init__(self):
        u = as_sequence(self.u, "u")
        y = as_sequence(self.y, "y")
        if len(u) != len(y):
            raise ShapeError(f"len(u)={len(u)} differs from len(y)={len(y)}")
        if len(u) < 1:
            raise ShapeError("trajectory must contain at least one sample")
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "y", y)
        if self.y_clean is not None:
            yc = as_sequence(self.y_clean, "y_clean")
            if yc.shape != y.shape:
                raise ShapeError("y_clean must have the same shape as y")
            object.__setattr__(self, "y_clean", yc)
        if self.x is not None:
            x = as_sequence(self.x, "x")
            if len(x) != len(u):
                raise ShapeError("state trajectory length differs from N")
            object.__setattr__(self, "x", x)

    @property
    def N(self) -> int:
        return self.u.shape[0]

    @property
    def m(self) -> int:
        return self.u.shape[1]

    @property
    def p(self) -> int:
        return self.y.shape[1]

    def noise_free(self) -> "TrajectoryData":
        """Copy whose measured outputs are the clean ones."""
        if self.y_clean is None:
            raise ValueError("no noise-free outputs stored with this trajectory")
        return TrajectoryData(self.u, self.y_clean, self.y_clean, self.x, 0.0)


@dataclass(frozen=True)
class HankelMatrix:
    """Block-Hankel matrix of depth ``L`` with ``q``-dimensional blocks."""

    entries: np.ndarray
    L: int
    q: int

    @property
    def shape(self):
        return self.entries.shape

    def block(self, i: int, j: int) -> np.ndarray:
        return self.entries[i * self.q:(i + 1) * self.q, j]

    def rows(self, a: int, b: int) -> np.ndarray:
        """Block rows ``a..b`` (inclusive) as a dense array."""
        return self.entries[a * self.q:(b + 1) * self.q]

    def __array__(self, dtype=None, copy=None):
        return self.entries if dtype is None else self.entries.astype(dtype)


def build_hankel(seq, L: int) -> HankelMatrix:
    """Stack the length-``L`` windows of ``seq`` as columns.

    Column ``j`` is ``seq[j:j+L]`` flattened in time order, so block
    ``(i, j)`` equals ``seq[i + j]``.

    Raises:
        WindowTooDeepError: if ``L`` exceeds the sequence length.
        ShapeError: if the elements do not share one dimension.
    """
    X = as_sequence(seq)
    N, q = X.shape
    if L < 1:
        raise ValueError("Hankel depth must be positive")
    if L > N:
        raise WindowTooDeepError(f"depth L={L} exceeds sequence length N={N}")
    cols = N - L + 1
    H = np.empty((q * L, cols))
    for i in range(L):
        H[i * q:(i + 1) * q, :] = X[i:i + cols].T
    return HankelMatrix(H, L, q)


class PEResult(NamedTuple):
    exciting: bool
    min_singular_value: float
    rank: int


def numerical_rank(M: np.ndarray, tol: float = DEFAULT_RANK_TOL) -> int:
    """Number of singular values above ``tol`` times the largest one."""
    if M.size == 0:
        return 0
    s = np.linalg.svd(M, compute_uv=False)
    if s[0] == 0.0:
        return 0
    return int(np.sum(s > tol * s[0]))


def is_persistently_exciting(seq, order: int, tol: float = DEFAULT_RANK_TOL) -> PEResult:
    """Check whether ``rank(H_order(seq)) = m * order``.

    The diagnostic is the smallest of the ``m * order`` leading singular
    values (zero when the Hankel matrix has too few columns).
    """
    X = as_sequence(seq)
    N, m = X.shape
    if N == 0:
        raise ShapeError("empty sequence")
    rows = m * order
    if order > N:
        return PEResult(False, 0.0, 0)
    if N - order + 1 < rows:
        return PEResult(False, 0.0, numerical_rank(build_hankel(X, order).entries, tol))
    s = np.linalg.svd(build_hankel(X, order).entries, compute_uv=False)
    rank = int(np.sum(s > tol * s[0])) if s[0] > 0 else 0
    return PEResult(rank == rows, float(s[rows - 1]), rank)


def extract_window(seq, a: int, b: int) -> np.ndarray:
    """Stacked vector ``[seq[a]; ...; seq[b]]``."""
    X = as_sequence(seq)
    N = X.shape[0]
    if not (0 <= a <= b < N):
        raise IndexError(f"window [{a}, {b}] outside [0, {N - 1}]")
    return X[a:b + 1].reshape(-1)


@dataclass(frozen=True)
class ExtendedState:
    """Past ``n`` inputs and outputs, oldest first.

    The stacked vector puts the input block above the output block.
    """

    u_past: np.ndarray
    y_past: np.ndarray

    @property
    def n(self) -> int:
        return self.u_past.shape[0]

    @property
    def m(self) -> int:
        return self.u_past.shape[1]

    @property
    def p(self) -> int:
        return self.y_past.shape[1]

    @property
    def vector(self) -> np.ndarray:
        return np.concatenate([self.u_past.reshape(-1), self.y_past.reshape(-1)])

    def norm(self) -> float:
        return float(np.linalg.norm(self.vector))

    @classmethod
    def from_vector(cls, xi, n: int, m: int, p: int) -> "ExtendedState":
        xi = np.asarray(xi, dtype=float).reshape(-1)
        if xi.size != (m + p) * n:
            raise ShapeError(f"extended state has {xi.size} entries, expected {(m + p) * n}")
        return cls(xi[:m * n].reshape(n, m), xi[m * n:].reshape(n, p))

    @classmethod
    def zeros(cls, n: int, m: int, p: int) -> "ExtendedState":
        return cls(np.zeros((n, m)), np.zeros((n, p)))


def extended_state(u_hist, y_hist, n: int) -> ExtendedState:
    """Build the extended state from the last ``n`` samples of each history."""
    U = as_sequence(u_hist, "u_hist")
    Y = as_sequence(y_hist, "y_hist")
    if len(U) < n or len(Y) < n:
        raise InsufficientHistoryError(
            f"need {n} past samples, got {len(U)} inputs and {len(Y)} outputs")
    return ExtendedState(U[len(U) - n:].copy(), Y[len(Y) - n:].copy())


class MembershipResult(NamedTuple):
    residual: float
    alpha: np.ndarray


def membership_residual(data: TrajectoryData, candidate: TrajectoryData,
                        n: Optional[int] = None,
                        tol: float = DEFAULT_RANK_TOL) -> MembershipResult:
    """Least-squares distance of ``candidate`` from the column span of the
    stacked Hankel matrix ``[H_L(u^d); H_L(y^d)]``.

    A residual near zero certifies that the candidate is a trajectory of the
    system that generated ``data`` (exact when ``u^d`` is persistently
    exciting of order ``L + n``; a warning is issued otherwise, provided the
    order bound ``n`` is given).

    Returns:
        The residual norm and the minimum-norm combination vector.
    """
    if candidate.m != data.m or candidate.p != data.p:
        raise ShapeError("candidate and data have different input/output dimensions")
    L = candidate.N
    if n is not None and not is_persistently_exciting(data.u, L + n, tol).exciting:
        warnings.warn(f"data input is not persistently exciting of order {L + n}; "
                      "a nonzero residual does not prove non-membership", stacklevel=2)
    H = np.vstack([build_hankel(data.u, L).entries, build_hankel(data.y, L).entries])
    w = np.concatenate([candidate.u.reshape(-1), candidate.y.reshape(-1)])
    alpha = np.linalg.pinv(H, rcond=tol) @ w
    return MembershipResult(float(np.linalg.norm(H @ alpha - w)), alpha)


def write_trajectory_csv(path, data: TrajectoryData, y=None) -> None:
    """Write ``t, u_0..u_{m-1}, y_0..y_{p-1}`` rows (header included).

    ``y`` overrides the output columns, e.g. to dump the clean outputs.
    """
    Y = data.y if y is None else as_sequence(y)
    header = ["t"] + [f"u_{i}" for i in range(data.m)] + [f"y_{i}" for i in range(Y.shape[1])]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for t in range(data.N):
            w.writerow([t] + [repr(float(v)) for v in data.u[t]] + [repr(float(v)) for v in Y[t]])


def read_trajectory_csv(path) -> TrajectoryData:
    with open(Path(path), newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ShapeError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    if not header or header[0] != "t":
        raise ShapeError(f"{path}: header row must start with 't'")
    u_idx = [i for i, h in enumerate(header) if h.startswith("u_")]
    y_idx = [i for i, h in enumerate(header) if h.startswith("y_")]
    body = np.array([[float(v) for v in r] for r in rows[1:] if r], dtype=float)
    if body.size == 0:
        raise ShapeError(f"{path}: no data rows")
    return TrajectoryData(body[:, u_idx], body[:, y_idx])
