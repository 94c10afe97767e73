"""Ground-truth LTI plant: simulation, noisy data generation, structural checks."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple, Optional

import numpy as np

from .config import dump_config, load_config, require
from .errors import ConfigError, ShapeError
from .signals import DEFAULT_RANK_TOL, TrajectoryData, as_sequence, numerical_rank

NOISE_DISTRIBUTIONS = ("uniform-ball", "truncated-gaussian")


@dataclass(frozen=True)
class StateSpaceModel:
    """Discrete-time ``x+ = A x + B u``, ``y = C x + D u``."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        n = A.shape[0]
        if A.shape != (n, n):
            raise ShapeError(f"A must be square, got {A.shape}")
        B = np.asarray(self.B, dtype=float).reshape(n, -1)
        C = np.asarray(self.C, dtype=float).reshape(-1, n)
        D = np.asarray(self.D, dtype=float).reshape(C.shape[0], B.shape[1])
        for name, M in (("A", A), ("B", B), ("C", C), ("D", D)):
            object.__setattr__(self, name, M)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]

    @property
    def p(self) -> int:
        return self.C.shape[0]

    def is_minimal(self, tol: float = DEFAULT_RANK_TOL) -> bool:
        ranks = structural_ranks(self, tol)
        return ranks.controllability == self.n and ranks.observability == self.n

    def require_minimal(self, tol: float = DEFAULT_RANK_TOL) -> "StateSpaceModel":
        ranks = structural_ranks(self, tol)
        if ranks.controllability < self.n or ranks.observability < self.n:
            raise ConfigError(
                f"plant must be controllable and observable (ranks {ranks.controllability}, "
                f"{ranks.observability} of {self.n})")
        return self


class StructuralRanks(NamedTuple):
    controllability: int
    observability: int


def controllability_matrix(model: StateSpaceModel) -> np.ndarray:
    blocks = [model.B]
    for _ in range(model.n - 1):
        blocks.append(model.A @ blocks[-1])
    return np.hstack(blocks)


def observability_matrix(model: StateSpaceModel, depth: Optional[int] = None) -> np.ndarray:
    blocks = [model.C]
    for _ in range((depth or model.n) - 1):
        blocks.append(blocks[-1] @ model.A)
    return np.vstack(blocks)


def structural_ranks(model: StateSpaceModel, tol: float = DEFAULT_RANK_TOL) -> StructuralRanks:
    return StructuralRanks(numerical_rank(controllability_matrix(model), tol),
                           numerical_rank(observability_matrix(model), tol))


@dataclass(frozen=True)
class NoiseSpec:
    """Bounded additive noise: every sample has 2-norm at most ``bound``."""

    bound: float = 0.0
    distribution: str = "uniform-ball"
    seed: int = 0

    def __post_init__(self):
        if self.bound < 0:
            raise ConfigError(f"noise bound must be nonnegative, got {self.bound}")
        if self.distribution not in NOISE_DISTRIBUTIONS:
            raise ConfigError(f"unknown noise distribution '{self.distribution}'")

    def rng(self) -> np.random.Generator:
        return np.random.default_rng(self.seed)

    def sample(self, count: int, dim: int, rng: Optional[np.random.Generator] = None) -> np.ndarray:
        """Draw ``count`` samples of dimension ``dim`` (seeded unless ``rng`` given)."""
        return sample_bounded(self.bound, self.distribution, count, dim,
                              self.rng() if rng is None else rng)


def sample_bounded(bound: float, distribution: str, count: int, dim: int,
                   rng: np.random.Generator) -> np.ndarray:
    if bound == 0.0 or count == 0:
        return np.zeros((count, dim))
    if distribution == "uniform-ball":
        g = rng.standard_normal((count, dim))
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        r = bound * rng.random(count) ** (1.0 / dim)
        out = g * r[:, None]
    elif distribution == "truncated-gaussian":
        sigma = bound / (2.0 * np.sqrt(dim))
        out = np.empty((count, dim))
        filled = 0
        while filled < count:
            draw = sigma * rng.standard_normal((count - filled, dim))
            keep = draw[np.linalg.norm(draw, axis=1) <= bound]
            out[filled:filled + len(keep)] = keep
            filled += len(keep)
    else:
        raise ConfigError(f"unknown distribution '{distribution}'")
    # guard the bound against rounding in the radius scaling
    norms = np.linalg.norm(out, axis=1)
    over = norms > bound
    if np.any(over):
        out[over] *= (bound / norms[over])[:, None]
    return out


def simulate(model: StateSpaceModel, x0, u):
    """Run the plant from ``x0`` under inputs ``u``.

    Returns:
        ``(x, y)`` with ``x`` of shape ``(N + 1, n)`` (final state included)
        and ``y`` of shape ``(N, p)``.
    """
    U = as_sequence(u, "u")
    if U.shape[1] != model.m:
        raise ShapeError(f"input dimension {U.shape[1]} != model m={model.m}")
    x = np.asarray(x0, dtype=float).reshape(-1)
    if x.size != model.n:
        raise ShapeError(f"x0 has {x.size} entries, model has n={model.n}")
    N = U.shape[0]
    X = np.empty((N + 1, model.n))
    Y = np.empty((N, model.p))
    X[0] = x
    for k in range(N):
        Y[k] = model.C @ X[k] + model.D @ U[k]
        X[k + 1] = model.A @ X[k] + model.B @ U[k]
    return X, Y


def pe_input(N: int, m: int, seed: int = 0, amplitude: float = 1.0) -> np.ndarray:
    """Seeded +/- ``amplitude`` pseudo-random input sequence."""
    rng = np.random.default_rng(seed)
    return amplitude * rng.choice([-1.0, 1.0], size=(N, m))


def generate_data(model: StateSpaceModel, u, x0=None,
                  noise: Optional[NoiseSpec] = None) -> TrajectoryData:
    """Simulate and corrupt the outputs with bounded measurement noise."""
    noise = noise or NoiseSpec()
    x0 = np.zeros(model.n) if x0 is None else x0
    X, Y = simulate(model, x0, u)
    eps = noise.sample(len(Y), model.p)
    return TrajectoryData(as_sequence(u), Y + eps, Y, X[:-1], noise.bound)


def scalar_plant(a: float = 0.5) -> StateSpaceModel:
    """``x+ = a x + u``, ``y = x``."""
    return StateSpaceModel([[a]], [[1.0]], [[1.0]], [[0.0]])


def double_integrator() -> StateSpaceModel:
    """Unit-step double integrator, position measured."""
    return StateSpaceModel([[1.0, 1.0], [0.0, 1.0]], [[0.5], [1.0]], [[1.0, 0.0]], [[0.0]])


def random_minimal_model(rng: np.random.Generator, n: int, m: int, p: int,
                         spectral_radius: float = 0.9) -> StateSpaceModel:
    """Random controllable/observable model with stable dynamics."""
    while True:
        A = rng.standard_normal((n, n))
        rho = max(abs(np.linalg.eigvals(A)))
        A *= spectral_radius * rng.uniform(0.5, 1.0) / rho
        model = StateSpaceModel(A, rng.standard_normal((n, m)), rng.standard_normal((p, n)),
                                rng.standard_normal((p, m)))
        if model.is_minimal(1e-6):
            return model


def model_to_config(model: StateSpaceModel) -> dict:
    return {"n": model.n, "m": model.m, "p": model.p,
            "A": model.A.ravel().tolist(), "B": model.B.ravel().tolist(),
            "C": model.C.ravel().tolist(), "D": model.D.ravel().tolist()}


def model_from_config(cfg: dict) -> StateSpaceModel:
    try:
        n, m, p = int(require(cfg, "n")), int(require(cfg, "m")), int(require(cfg, "p"))
        A = np.asarray(require(cfg, "A"), dtype=float).reshape(n, n)
        B = np.asarray(require(cfg, "B"), dtype=float).reshape(n, m)
        C = np.asarray(require(cfg, "C"), dtype=float).reshape(p, n)
        D = np.asarray(cfg.get("D", [0.0] * (p * m)), dtype=float).reshape(p, m)
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"plant matrices do not match dims: {exc}") from exc
    return StateSpaceModel(A, B, C, D)


def save_model(path, model: StateSpaceModel) -> None:
    Path(path).write_text(dump_config(model_to_config(model)))


def load_model(path) -> StateSpaceModel:
    return model_from_config(load_config(path))
