"""``ddmpc`` command-line interface.

Exit codes: 0 success, 1 failed check (PE, verdict, membership), 2 config or
I/O error, 3 infeasible closed-loop run.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np

from . import analysis
from .config import dump_config, load_config
from .errors import ConfigError, DDMPCError, ShapeError
from .loop import ONE_STEP, DisturbanceSpec, run_closed_loop
from .plant import (NoiseSpec, StateSpaceModel, double_integrator, generate_data, load_model, model_from_config,
                    scalar_plant)
from .signals import (TrajectoryData, is_persistently_exciting, membership_residual, read_trajectory_csv,
                      write_trajectory_csv)

EXIT_OK, EXIT_CHECK, EXIT_CONFIG, EXIT_INFEASIBLE = 0, 1, 2, 3


def _get(cfg: Dict, key: str, default=None, kind=None):
    value = cfg.get(key, default)
    if kind is None or value is None:
        return value
    try:
        return kind(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"config key '{key}': {exc}") from exc


def _matrix(cfg: Dict, key: str, dim: int) -> Optional[np.ndarray]:
    if key not in cfg:
        return None
    try:
        return np.asarray(cfg[key], dtype=float).reshape(dim, dim)
    except ValueError as exc:
        raise ConfigError(f"config key '{key}' must hold {dim * dim} numbers") from exc


def plant_from_config(cfg: Dict, base: Path) -> StateSpaceModel:
    if "plant.file" in cfg:
        path = base / str(cfg["plant.file"])
        if not path.is_file():
            raise FileNotFoundError(f"plant file not found: {path}")
        model = load_model(path)
    elif "plant.A" in cfg:
        sub = {k[len("plant."):]: v for k, v in cfg.items() if k.startswith("plant.")}
        model = model_from_config(sub)
    else:
        kind = _get(cfg, "plant.kind", "scalar", str)
        if kind == "scalar":
            model = scalar_plant(_get(cfg, "plant.a", 0.5, float))
        elif kind == "double-integrator":
            model = double_integrator()
        else:
            raise ConfigError(f"unknown plant.kind '{kind}'")
    return model.require_minimal()


def setup_from_config(cfg: Dict, base: Path) -> analysis.ExperimentSetup:
    plant = plant_from_config(cfg, base)
    n = _get(cfg, "controller.n", plant.n, int)
    x0 = cfg.get("loop.x0")
    return analysis.ExperimentSetup(
        plant=plant, L=_get(cfg, "controller.L", 8, int), n=n,
        Q=_matrix(cfg, "controller.Q", plant.p), R=_matrix(cfg, "controller.R", plant.m),
        input_bound=_get(cfg, "controller.input_bound", 5.0, float),
        N=_get(cfg, "data.N", 60, int), amplitude=_get(cfg, "data.amplitude", 1.0, float),
        data_seed=_get(cfg, "data.input_seed", 1, int),
        lambda_alpha=_get(cfg, "controller.lambda_alpha", 1.0, float),
        lambda_sigma=_get(cfg, "controller.lambda_sigma", 1.0, float),
        beta_alpha=_get(cfg, "controller.beta_alpha", 0.5, float),
        beta_sigma=_get(cfg, "controller.beta_sigma", 0.5, float),
        x0=None if x0 is None else np.asarray(x0, dtype=float),
        T_sim=_get(cfg, "loop.T_sim", 50, int))


class Context:
    def __init__(self, args):
        self.config_path = Path(args.config) if args.config else None
        if self.config_path is not None and not self.config_path.is_file():
            raise FileNotFoundError(f"config file not found: {self.config_path}")
        self.cfg = load_config(self.config_path) if self.config_path else {}
        self.base = self.config_path.parent if self.config_path else Path(".")
        seed = args.seed if args.seed is not None else _get(self.cfg, "seed", 0, int)
        self.seed = int(seed)
        self.streams = analysis.seed_streams(self.seed, 1)[0]
        self.out = Path(args.out)
        self.out.mkdir(parents=True, exist_ok=True)

    def setup(self) -> analysis.ExperimentSetup:
        return setup_from_config(self.cfg, self.base)

    def path(self, key: str) -> Path:
        path = self.base / str(self.cfg[key])
        if not path.is_file():
            raise FileNotFoundError(f"file not found: {path}")
        return path


def _data_noise(ctx: Context) -> NoiseSpec:
    return NoiseSpec(_get(ctx.cfg, "data.eps_bar", 0.0, float),
                     _get(ctx.cfg, "data.distribution", "uniform-ball", str), ctx.streams.data)


def cmd_generate_data(ctx: Context) -> int:
    setup = ctx.setup()
    noise = _data_noise(ctx)
    data = generate_data(setup.plant, setup.data_input(), noise=noise)
    write_trajectory_csv(ctx.out / "data.csv", data)
    write_trajectory_csv(ctx.out / "data_true.csv", data, y=data.y_clean)
    order = setup.L + 2 * setup.n
    pe = is_persistently_exciting(data.u, order)
    report = {"required_order": order, "persistently_exciting": pe.exciting, "rank": pe.rank,
              "min_singular_value": pe.min_singular_value, "samples": data.N, "eps_bar": noise.bound}
    (ctx.out / "pe_report.txt").write_text(dump_config(report))
    if pe.exciting:
        print(f"PE order {order} verified (min singular value {pe.min_singular_value:.3e})")
        return EXIT_OK
    print(f"input is NOT persistently exciting of order {order}", file=sys.stderr)
    return EXIT_CHECK


def _load_data(ctx: Context, setup: analysis.ExperimentSetup) -> TrajectoryData:
    if "data.file" in ctx.cfg:
        data = read_trajectory_csv(ctx.path("data.file"))
        if data.m != setup.plant.m or data.p != setup.plant.p:
            raise ShapeError("data file dimensions do not match the plant")
        return data
    noise = _data_noise(ctx)
    return generate_data(setup.plant, setup.data_input(), noise=noise)


def _controller(ctx: Context, setup: analysis.ExperimentSetup, data: TrajectoryData):
    kind = _get(ctx.cfg, "controller.kind", "nominal", str)
    if kind == "nominal":
        return setup.nominal(data)
    if kind == "robust":
        if "controller.eps_bar" not in ctx.cfg:
            raise ConfigError("robust controller needs 'controller.eps_bar'")
        return setup.robust(_get(ctx.cfg, "controller.eps_bar", kind=float), data)
    raise ConfigError(f"unknown controller.kind '{kind}'")


def cmd_run(ctx: Context) -> int:
    setup = ctx.setup()
    ctrl = _controller(ctx, setup, _load_data(ctx, setup))
    schedule = _get(ctx.cfg, "loop.schedule", ONE_STEP, str)
    default_noise = getattr(ctrl, "eps_bar", 0.0)
    online = NoiseSpec(_get(ctx.cfg, "loop.noise_bound", default_noise, float),
                       _get(ctx.cfg, "loop.noise_distribution", "uniform-ball", str), ctx.streams.online)
    d_bar = _get(ctx.cfg, "loop.disturbance_bound", 0.0, float)
    dist = None
    if d_bar > 0:
        dist = DisturbanceSpec(d_bar, _get(ctx.cfg, "loop.disturbance_distribution", "uniform-ball", str),
                               ctx.streams.disturbance)
    trace = run_closed_loop(setup.closed_loop(ctrl, schedule, online_noise=online, disturbance=dist))
    trace.write_csv(ctx.out / "trace.csv")
    (ctx.out / "summary.txt").write_text(trace.summary_text())
    if trace.feasible_throughout:
        print(f"feasible throughout; final |xi| = {trace.final_xi_norm:.3e}")
        return EXIT_OK
    print(f"infeasible at step {trace.failing_step}", file=sys.stderr)
    return EXIT_INFEASIBLE


def cmd_sweep(ctx: Context) -> int:
    setup = ctx.setup()
    param = _get(ctx.cfg, "sweep.parameter", None, str)
    grid = ctx.cfg.get("sweep.grid")
    if not grid:
        raise ConfigError("'sweep.grid' must be a nonempty list")
    grid = [float(g) for g in grid]
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ConfigError("'sweep.grid' must be strictly increasing")
    seeds = _get(ctx.cfg, "sweep.seeds", 10, int)
    if param == "eps_bar":
        metric = _get(ctx.cfg, "sweep.metric", "continuity", str)
        if metric not in ("continuity", "practical-stability", "candidate-gap"):
            raise ConfigError(f"unknown eps_bar sweep metric '{metric}'")
        report = analysis.SWEEPS[metric](setup, grid, seeds, ctx.seed)
    elif param == "d_bar":
        report = analysis.inherent_robustness_sweep(setup, grid, seeds, ctx.seed)
    else:
        raise ConfigError(f"unknown sweep parameter '{param}' (expected eps_bar or d_bar)")
    report.write_csv(ctx.out / "report.csv")
    (ctx.out / "verdict.txt").write_text(report.verdict_text())
    print(report.verdict_text(), end="")
    return EXIT_OK if report.verdict else EXIT_CHECK


def cmd_verify_lemma(ctx: Context) -> int:
    data = read_trajectory_csv(ctx.path("verify.data"))
    cand = read_trajectory_csv(ctx.path("verify.candidate"))
    n = _get(ctx.cfg, "verify.n", None, int)
    tol = _get(ctx.cfg, "verify.tol", 1e-8, float)
    res = membership_residual(data, cand, n)
    verdict = res.residual <= tol
    (ctx.out / "lemma.txt").write_text(dump_config({"residual": res.residual, "tol": tol, "member": verdict}))
    print(f"membership residual {res.residual:.3e} ({'member' if verdict else 'not a member'})")
    return EXIT_OK if verdict else EXIT_CHECK


COMMANDS = {
    "generate-data": cmd_generate_data,
    "run": cmd_run,
    "sweep": cmd_sweep,
    "verify-lemma": cmd_verify_lemma,
}


def _global_flags(p: argparse.ArgumentParser, default) -> None:
    p.add_argument("--config", default=default(None), help="TOML experiment config")
    p.add_argument("--seed", type=int, default=default(None), help="root seed")
    p.add_argument("--out", default=default("out"), help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ddmpc", description="Data-driven MPC experiments")
    _global_flags(parser, lambda v: v)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        # accept the global flags after the subcommand too
        _global_flags(sp, lambda v: argparse.SUPPRESS)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        ctx = Context(args)
        return COMMANDS[args.command](ctx)
    except (ConfigError, OSError, ShapeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DDMPCError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CHECK
    except ValueError as exc:
        # malformed numbers in user-supplied files
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
