"""Command-line entry point: load an experiment file, run the grid, write CSV."""

from __future__ import annotations

import argparse
import itertools
import os
import sys
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from .engine import (
    SimConfig,
    TraceWriter,
    run_experiment,
    run_replicate,
    summarize,
    write_results_csv,
)
from .environment import ENV_KINDS, EnvConfig
from .gpmap import KernelParams
from .planning import EXPLORE_REWARD_MODES, PLANNERS
from .strategies import STRATEGIES

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_CONFIG = 2

DEFAULT_SEED = 42

_EXPERIMENT_KEYS = {"name", "replicates", "master_seed", "workers", "output"}
_ENV_KEYS = {"size", "feature_ratio", "denial_ratio", "kinds", "gradient_width",
             "patch_count", "patch_radius"}
_SIM_KEYS = {"agent_count", "comm_range", "t_max", "speed", "strategies",
             "planners", "explore_reward", "end_rule", "rb_leg"}
_KERNEL_KEYS = {"smoothness", "length_scale", "jitter"}


class ConfigError(ValueError):
    """Configuration file or flag rejected, with the offending key named."""


@dataclass
class ExperimentSpec:
    """Cartesian grid of simulation cells plus batch settings."""

    name: str = "experiment"
    replicates: int = 20
    master_seed: int = DEFAULT_SEED
    workers: int = 0  # 0 = one per CPU
    output: str = "results.csv"
    strategies: List[str] = field(default_factory=lambda: ["DC"])
    planners: List[str] = field(default_factory=lambda: ["RB"])
    env_kinds: List[str] = field(default_factory=lambda: ["continuous"])
    denial_ratios: List[float] = field(default_factory=lambda: [0.5])
    feature_ratios: List[float] = field(default_factory=lambda: [0.65])
    size: int = 64
    gradient_width: float = 4.0
    patch_count: int = 120
    patch_radius: int = 3
    agent_count: int = 36
    comm_range: float = 5.0
    t_max: int = 9000
    speed: float = 1.0
    rb_leg: float = 1.0
    explore_reward: str = "as_written"
    end_rule: str = "both_ends_product"
    kernel: KernelParams = field(default_factory=KernelParams)

    def cells(self) -> List[Tuple[str, SimConfig]]:
        """Expand the grid; one cell per strategy x planner x env point."""
        out = []
        for strategy, planner, kind, r_c, r_f in itertools.product(
                self.strategies, self.planners, self.env_kinds,
                self.denial_ratios, self.feature_ratios):
            try:
                env = EnvConfig(size=self.size, feature_ratio=r_f,
                                denial_ratio=r_c, env_kind=kind,
                                gradient_width=self.gradient_width,
                                patch_count=self.patch_count,
                                patch_radius=self.patch_radius)
                config = SimConfig(env=env, agent_count=self.agent_count,
                                   comm_range=self.comm_range, t_max=self.t_max,
                                   strategy=strategy, planner=planner,
                                   kernel=self.kernel, speed=self.speed,
                                   explore_reward=self.explore_reward,
                                   rb_leg=self.rb_leg, end_rule=self.end_rule)
            except ValueError as exc:
                raise ConfigError(str(exc)) from exc
            cell_id = f"{self.name}-{strategy}-{planner}-{kind}-rc{r_c}-rf{r_f}"
            out.append((cell_id, config))
        if not out:
            raise ConfigError("experiment grid is empty")
        return out


def _as_list(value) -> list:
    return list(value) if isinstance(value, (list, tuple)) else [value]


def _check_keys(section: str, table: dict, allowed: set) -> None:
    unknown = set(table) - allowed
    if unknown:
        raise ConfigError(f"unknown key(s) in [{section}]: "
                          f"{', '.join(sorted(unknown))}")


def _check_choice(name: str, values, allowed) -> None:
    for v in values:
        if v not in allowed:
            raise ConfigError(f"{name} must be one of {sorted(allowed)}, "
                              f"got {v!r}")


def load_spec(path, overrides: Optional[argparse.Namespace] = None
              ) -> ExperimentSpec:
    """Parse a TOML experiment file and apply flag overrides."""
    spec = ExperimentSpec()
    if path is not None:
        try:
            with open(path, "rb") as fh:
                data = tomllib.load(fh)
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}")
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"config file {path} is not valid TOML: {exc}")
        _check_keys("<root>", data,
                    {"experiment", "environment", "simulation", "kernel"})
        exp = data.get("experiment", {})
        _check_keys("experiment", exp, _EXPERIMENT_KEYS)
        env = data.get("environment", {})
        _check_keys("environment", env, _ENV_KEYS)
        sim = data.get("simulation", {})
        _check_keys("simulation", sim, _SIM_KEYS)
        ker = data.get("kernel", {})
        _check_keys("kernel", ker, _KERNEL_KEYS)

        spec.name = exp.get("name", spec.name)
        spec.replicates = exp.get("replicates", spec.replicates)
        spec.master_seed = exp.get("master_seed", spec.master_seed)
        spec.workers = exp.get("workers", spec.workers)
        spec.output = exp.get("output", spec.output)
        spec.size = env.get("size", spec.size)
        spec.feature_ratios = [float(v) for v in
                               _as_list(env.get("feature_ratio",
                                                spec.feature_ratios))]
        spec.denial_ratios = [float(v) for v in
                              _as_list(env.get("denial_ratio",
                                               spec.denial_ratios))]
        spec.env_kinds = [str(v) for v in _as_list(env.get("kinds",
                                                           spec.env_kinds))]
        spec.gradient_width = env.get("gradient_width", spec.gradient_width)
        spec.patch_count = env.get("patch_count", spec.patch_count)
        spec.patch_radius = env.get("patch_radius", spec.patch_radius)
        spec.agent_count = sim.get("agent_count", spec.agent_count)
        spec.comm_range = sim.get("comm_range", spec.comm_range)
        spec.t_max = sim.get("t_max", spec.t_max)
        spec.speed = sim.get("speed", spec.speed)
        spec.rb_leg = sim.get("rb_leg", spec.rb_leg)
        spec.strategies = [str(v) for v in
                           _as_list(sim.get("strategies", spec.strategies))]
        spec.planners = [str(v) for v in
                         _as_list(sim.get("planners", spec.planners))]
        spec.explore_reward = sim.get("explore_reward", spec.explore_reward)
        spec.end_rule = sim.get("end_rule", spec.end_rule)
        try:
            spec.kernel = KernelParams(
                smoothness=ker.get("smoothness", 1.5),
                length_scale=ker.get("length_scale", 10.0),
                jitter=ker.get("jitter", 1e-6))
        except ValueError as exc:
            raise ConfigError(f"[kernel]: {exc}") from exc

    if overrides is not None:
        _apply_overrides(spec, overrides)
    _validate_spec(spec)
    return spec


def _apply_overrides(spec: ExperimentSpec, args: argparse.Namespace) -> None:
    if args.strategy:
        spec.strategies = [args.strategy]
    if args.planner:
        spec.planners = [args.planner]
    if args.env:
        spec.env_kinds = [args.env]
    if args.rc is not None:
        spec.denial_ratios = [args.rc]
    if args.rf is not None:
        spec.feature_ratios = [args.rf]
    if args.replicates is not None:
        spec.replicates = args.replicates
    if args.seed is not None:
        spec.master_seed = args.seed
    elif os.environ.get("SIM_SEED"):
        try:
            spec.master_seed = int(os.environ["SIM_SEED"])
        except ValueError:
            raise ConfigError(
                f"SIM_SEED must be an integer, got {os.environ['SIM_SEED']!r}")
    if args.t_max is not None:
        spec.t_max = args.t_max
    if args.out:
        spec.output = args.out
    if args.workers is not None:
        spec.workers = args.workers


def _validate_spec(spec: ExperimentSpec) -> None:
    if spec.replicates < 1:
        raise ConfigError(f"replicates must be >= 1, got {spec.replicates}")
    if spec.workers < 0:
        raise ConfigError(f"workers must be >= 0, got {spec.workers}")
    _check_choice("strategy", spec.strategies, set(STRATEGIES))
    _check_choice("planner", spec.planners, set(PLANNERS))
    _check_choice("env kind", spec.env_kinds, set(ENV_KINDS))
    if spec.explore_reward not in EXPLORE_REWARD_MODES:
        raise ConfigError(f"explore_reward must be one of "
                          f"{EXPLORE_REWARD_MODES}, got {spec.explore_reward!r}")
    for r in spec.feature_ratios:
        if not 0.0 < r < 1.0:
            raise ConfigError(f"feature_ratio must lie in (0, 1), got {r}")
    for r in spec.denial_ratios:
        if not 0.0 <= r < 1.0:
            raise ConfigError(f"denial_ratio must lie in [0, 1), got {r}")
    spec.cells()  # surfaces remaining constraint violations with key names


def bundled_config(name: str) -> Optional[str]:
    """Path of a packaged figure config, or None if the name is not bundled."""
    here = os.path.dirname(os.path.abspath(__file__))
    path = os.path.join(here, "configs", f"{name}.toml")
    return path if os.path.isfile(path) else None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="simulate",
        description="Communication-aware collective perception experiments")
    parser.add_argument("--config", help="experiment TOML file, or a bundled "
                        "name (fig2, fig4a, fig4b, smoke)")
    parser.add_argument("--strategy", choices=list(STRATEGIES))
    parser.add_argument("--planner", choices=list(PLANNERS))
    parser.add_argument("--env", choices=list(ENV_KINDS))
    parser.add_argument("--rc", type=float, help="denial ratio override")
    parser.add_argument("--rf", type=float, help="feature ratio override")
    parser.add_argument("--replicates", type=int)
    parser.add_argument("--seed", type=int, help="master seed "
                        "(SIM_SEED env var is the fallback)")
    parser.add_argument("--t-max", dest="t_max", type=int)
    parser.add_argument("--out", help="results CSV path")
    parser.add_argument("--workers", type=int,
                        help="replicate processes (0 = one per CPU)")
    parser.add_argument("--trace", metavar="DIR",
                        help="write per-step trace files under DIR "
                        "(runs replicates sequentially)")
    parser.add_argument("--quiet", action="store_true",
                        help="suppress progress output")
    return parser


def _print_summary(rows, out=None) -> None:
    out = out if out is not None else sys.stdout
    print("experiment_id,n,ok,incorrect,unconverged,"
          "median_time,q1,q3,median_est_error", file=out)
    for s in summarize(rows):
        med = "" if s["median_time"] is None else f"{s['median_time']:.0f}"
        q1 = "" if s["q1_time"] is None else f"{s['q1_time']:.0f}"
        q3 = "" if s["q3_time"] is None else f"{s['q3_time']:.0f}"
        err = ("" if s["median_estimate_error"] is None
               else f"{s['median_estimate_error']:.4f}")
        print(f"{s['experiment_id']},{s['n']},{s['n_converged_correct']},"
              f"{s['n_incorrect']},{s['n_unconverged']},{med},{q1},{q3},{err}",
              file=out)


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config_path = args.config
        if config_path is not None and not os.path.isfile(config_path):
            bundled = bundled_config(config_path)
            if bundled is not None:
                config_path = bundled
        spec = load_spec(config_path, args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    cells = spec.cells()
    total = len(cells) * spec.replicates
    workers = spec.workers if spec.workers > 0 else (os.cpu_count() or 1)

    def progress(i, n, row):
        if not args.quiet:
            print(f"[{i}/{n}] {row['experiment_id']} seed={row['seed']} "
                  f"converged={row['converged']} t={row['convergence_time']}",
                  file=sys.stderr, flush=True)

    try:
        if args.trace:
            rows = []
            done = 0
            from .engine import _result_row, derive_seed
            for c_idx, (cell_id, config) in enumerate(cells):
                for rep in range(spec.replicates):
                    seed = derive_seed(spec.master_seed, c_idx, rep)
                    tracer = TraceWriter(args.trace, f"{cell_id}-s{seed}")
                    try:
                        result = run_replicate(config, seed, trace=tracer)
                    finally:
                        tracer.close()
                    rows.append(_result_row(cell_id, config, seed, result))
                    done += 1
                    progress(done, total, rows[-1])
        else:
            rows = run_experiment(cells, spec.replicates, spec.master_seed,
                                  workers=workers, progress=progress)
        write_results_csv(rows, spec.output)
    except Exception as exc:  # runtime failure: distinct exit code
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME

    if not args.quiet:
        print(f"wrote {len(rows)} rows to {spec.output}", file=sys.stderr)
    _print_summary(rows)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
