"""Replicate orchestration: world construction, the lock-step loop,
consensus detection and the batch experiment harness."""

from __future__ import annotations

import csv
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from multiprocessing import get_context
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .agent import Agent
from .comms import LinkModel, delivery_matrices
from .environment import EnvConfig, generate_comm_grid, generate_feature_grid
from .gpmap import KernelParams
from .planning import EXPLORE_REWARD_MODES, PLANNERS
from .strategies import STRATEGIES, BeliefState

log = logging.getLogger(__name__)

RESULT_COLUMNS = [
    "experiment_id", "strategy", "planner", "env_kind", "r_c", "r_f",
    "seed", "converged", "correct", "convergence_time",
    "mean_estimate", "median_estimate_error",
]


@dataclass(frozen=True)
class SimConfig:
    """Full parameterization of one replicate."""

    env: EnvConfig = field(default_factory=EnvConfig)
    agent_count: int = 36
    comm_range: float = 5.0
    t_max: int = 9000
    strategy: str = "DC"
    planner: str = "RB"
    kernel: KernelParams = field(default_factory=KernelParams)
    speed: float = 1.0
    explore_reward: str = "as_written"
    rb_leg: float = 1.0  # heading redrawn each unit step; 0 = boundary legs
    end_rule: str = "both_ends_product"

    def __post_init__(self):
        if self.agent_count < 2:
            raise ValueError(f"agent_count must be >= 2, got {self.agent_count}")
        if self.t_max < 1:
            raise ValueError(f"t_max must be >= 1, got {self.t_max}")
        if self.strategy not in STRATEGIES:
            raise ValueError(f"strategy must be one of {STRATEGIES}, "
                             f"got {self.strategy!r}")
        if self.planner not in PLANNERS:
            raise ValueError(f"planner must be one of {PLANNERS}, "
                             f"got {self.planner!r}")
        if self.explore_reward not in EXPLORE_REWARD_MODES:
            raise ValueError(f"explore_reward must be one of "
                             f"{EXPLORE_REWARD_MODES}, got {self.explore_reward!r}")
        if self.speed <= 0:
            raise ValueError(f"speed must be > 0, got {self.speed}")
        if self.rb_leg < 0:
            raise ValueError(f"rb_leg must be >= 0, got {self.rb_leg}")
        # LinkModel validates comm_range / end_rule
        LinkModel(comm_range=self.comm_range, end_rule=self.end_rule)


@dataclass
class RunResult:
    """Outcome of a single replicate."""

    converged: bool
    correct: bool
    convergence_time: Optional[int]
    final_beliefs: List[int]
    mean_estimate: float
    median_estimate: float
    locked_fraction: float
    seed: int
    wall_time: float


class TraceWriter:
    """Optional per-step trace files (time series, beliefs, messages)."""

    def __init__(self, directory, label: str):
        os.makedirs(directory, exist_ok=True)
        base = os.path.join(directory, label)
        self._ts = open(base + "_timeseries.csv", "w", newline="")
        self._ts_w = csv.writer(self._ts)
        self._ts_w.writerow(["t", "beliefs_for_1_count", "mean_rho_1"])
        self._beliefs = open(base + "_beliefs.csv", "w", newline="")
        self._beliefs_w = csv.writer(self._beliefs)
        self._beliefs_w.writerow(["t", "agent", "b", "rho_1", "C", "locked"])
        self._msg = open(base + "_messages.csv", "w", newline="")
        self._msg_w = csv.writer(self._msg)
        self._msg_w.writerow(["t", "sender", "receiver", "kind", "delivered"])

    def step(self, t: int, agents: Sequence[Agent]) -> None:
        ones = sum(a.belief_state.belief for a in agents)
        mean_rho = sum(a.belief_state.estimate_1 for a in agents) / len(agents)
        self._ts_w.writerow([t, ones, f"{mean_rho:.6f}"])
        for a in agents:
            bs = a.belief_state
            self._beliefs_w.writerow(
                [t, a.id, bs.belief, f"{bs.estimate_1:.6f}",
                 f"{bs.concentration:.6f}",
                 "" if bs.locked is None else bs.locked])

    def messages(self, t: int, in_range: np.ndarray, hb: np.ndarray,
                 ack: np.ndarray) -> None:
        for i, j in zip(*np.nonzero(in_range)):
            self._msg_w.writerow([t, i, j, "heartbeat", int(hb[i, j])])
            if hb[i, j]:
                self._msg_w.writerow([t, j, i, "ack", int(ack[i, j])])

    def close(self) -> None:
        self._ts.close()
        self._beliefs.close()
        self._msg.close()


def check_consensus(agents: Sequence[Agent]) -> Optional[int]:
    """The shared belief if every agent holds it, else None."""
    first = agents[0].belief_state.belief
    for a in agents[1:]:
        if a.belief_state.belief != first:
            return None
    return first


def build_agents(config: SimConfig, agent_seeds) -> List[Agent]:
    agents = []
    for i in range(config.agent_count):
        arng = np.random.default_rng(agent_seeds[i])
        pos = arng.uniform(0.0, config.env.size, size=2)
        belief = int(arng.integers(0, 2))
        agents.append(Agent(
            agent_id=i, position=pos,
            belief_state=BeliefState(strategy=config.strategy, belief=belief),
            planner_kind=config.planner, arena_size=config.env.size,
            kernel_params=config.kernel, rng=arng, speed=config.speed,
            explore_mode=config.explore_reward,
            rb_leg=config.rb_leg if config.rb_leg > 0 else None))
    return agents


def run_replicate(config: SimConfig, seed: int,
                  trace: Optional[TraceWriter] = None) -> RunResult:
    """Run one seeded replicate to consensus or the step cap."""
    t_start = time.perf_counter()
    root = np.random.SeedSequence(seed)
    children = root.spawn(2 + config.agent_count)
    env_rng = np.random.default_rng(children[0])
    comms_rng = np.random.default_rng(children[1])

    feature = generate_feature_grid(config.env, env_rng, seed=seed)
    comm = generate_comm_grid(config.env, env_rng, seed=seed)
    agents = build_agents(config, children[2:])
    link = LinkModel(comm_range=config.comm_range, end_rule=config.end_rule)
    size = config.env.size

    convergence_time: Optional[int] = None
    consensus = check_consensus(agents)
    if consensus is not None:
        convergence_time = 0
    else:
        for t in range(config.t_max):
            positions = np.array([(a.x, a.y) for a in agents])
            ix = positions[:, 0].astype(np.intp)
            iy = positions[:, 1].astype(np.intp)
            qualities = comm.cells[ix, iy]
            feature_vals = feature.cells[ix, iy]

            heartbeats = [a.broadcast() for a in agents]
            hb, ack = delivery_matrices(positions, qualities, link, comms_rng)
            if trace is not None:
                delta = positions[:, None, :] - positions[None, :, :]
                d2 = np.einsum("ijk,ijk->ij", delta, delta)
                in_range = d2 <= link.comm_range ** 2
                np.fill_diagonal(in_range, False)
                trace.messages(t, in_range, hb, ack)

            for j, a in enumerate(agents):
                senders = np.flatnonzero(hb[:, j])
                if senders.size:
                    a.receive_and_ack([heartbeats[i] for i in senders], t)
                else:
                    a.receive_and_ack([], t)
            for j, a in enumerate(agents):
                acked = np.flatnonzero(ack[j])
                a.observe(set(acked.tolist()), int(feature_vals[j]), t)
            for a in agents:
                a.transition()
            for a in agents:
                a.plan_and_move(t)
            if trace is not None:
                trace.step(t, agents)

            consensus = check_consensus(agents)
            if consensus is not None:
                convergence_time = t + 1
                break

    beliefs = [a.belief_state.belief for a in agents]
    estimates = np.array([a.belief_state.estimate_1 for a in agents])
    locked = sum(a.belief_state.locked is not None for a in agents)
    converged = consensus is not None
    return RunResult(
        converged=converged,
        correct=converged and consensus == 1,
        convergence_time=convergence_time,
        final_beliefs=beliefs,
        mean_estimate=float(estimates.mean()),
        median_estimate=float(np.median(estimates)),
        locked_fraction=locked / len(agents),
        seed=seed,
        wall_time=time.perf_counter() - t_start,
    )


def derive_seed(master_seed: int, cell_index: int, replicate: int) -> int:
    ss = np.random.SeedSequence((master_seed, cell_index, replicate))
    return int(ss.generate_state(1)[0])


def _result_row(experiment_id: str, config: SimConfig, seed: int,
                result: Optional[RunResult]) -> Dict[str, object]:
    row = {
        "experiment_id": experiment_id,
        "strategy": config.strategy,
        "planner": config.planner,
        "env_kind": config.env.env_kind,
        "r_c": config.env.denial_ratio,
        "r_f": config.env.feature_ratio,
        "seed": seed,
    }
    if result is None:  # replicate crashed: flagged, never dropped
        row.update(converged=False, correct=False, convergence_time=None,
                   mean_estimate=math.nan, median_estimate_error=math.nan,
                   wall_time=0.0)
        return row
    row.update(
        converged=result.converged,
        correct=result.correct,
        convergence_time=result.convergence_time,
        mean_estimate=result.mean_estimate,
        median_estimate_error=abs(result.median_estimate
                                  - config.env.feature_ratio),
        wall_time=result.wall_time,
    )
    return row


def _run_cell_replicate(args) -> Dict[str, object]:
    experiment_id, config, seed = args
    try:
        result = run_replicate(config, seed)
    except Exception:
        log.exception("replicate failed: %s seed=%d", experiment_id, seed)
        result = None
    return _result_row(experiment_id, config, seed, result)


def run_experiment(cells: Sequence[Tuple[str, SimConfig]], replicates: int,
                   master_seed: int, workers: int = 1,
                   progress=None) -> List[Dict[str, object]]:
    """Run every (cell, replicate) pair; one row per replicate, in order.

    Rows for failed or incorrect runs are flagged through the converged and
    correct columns rather than dropped. Replicates are independent, so any
    worker count produces the same table.
    """
    if replicates < 1:
        raise ValueError(f"replicates must be >= 1, got {replicates}")
    tasks = []
    for c_idx, (experiment_id, config) in enumerate(cells):
        for rep in range(replicates):
            tasks.append((experiment_id, config,
                          derive_seed(master_seed, c_idx, rep)))

    if workers <= 1:
        rows = []
        for i, task in enumerate(tasks):
            rows.append(_run_cell_replicate(task))
            if progress is not None:
                progress(i + 1, len(tasks), rows[-1])
        return rows

    # keep worker BLAS single-threaded: the pool already saturates the cores
    saved = os.environ.get("OMP_NUM_THREADS")
    os.environ["OMP_NUM_THREADS"] = "1"
    try:
        ctx = get_context("spawn")
        rows = []
        with ProcessPoolExecutor(max_workers=workers, mp_context=ctx) as pool:
            for i, row in enumerate(pool.map(_run_cell_replicate, tasks,
                                             chunksize=1)):
                rows.append(row)
                if progress is not None:
                    progress(i + 1, len(tasks), row)
    finally:
        if saved is None:
            del os.environ["OMP_NUM_THREADS"]
        else:
            os.environ["OMP_NUM_THREADS"] = saved
    return rows


def write_results_csv(rows: Sequence[Dict[str, object]], path) -> None:
    """Fixed-schema results table; float formats are pinned so identical
    experiments serialize byte-identically."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(RESULT_COLUMNS)
        for row in rows:
            writer.writerow(_format_row(row))


def _format_row(row: Dict[str, object]) -> List[str]:
    out = []
    for col in RESULT_COLUMNS:
        v = row[col]
        if col in ("converged", "correct"):
            out.append("true" if v else "false")
        elif col == "convergence_time":
            out.append("" if v is None else str(int(v)))
        elif col in ("mean_estimate", "median_estimate_error"):
            out.append("nan" if isinstance(v, float) and math.isnan(v)
                       else f"{v:.6f}")
        else:
            out.append(str(v))
    return out


def read_results_csv(path) -> List[Dict[str, object]]:
    rows = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != RESULT_COLUMNS:
            raise ValueError(f"unexpected results schema: {reader.fieldnames}")
        for rec in reader:
            rows.append({
                "experiment_id": rec["experiment_id"],
                "strategy": rec["strategy"],
                "planner": rec["planner"],
                "env_kind": rec["env_kind"],
                "r_c": float(rec["r_c"]),
                "r_f": float(rec["r_f"]),
                "seed": int(rec["seed"]),
                "converged": rec["converged"] == "true",
                "correct": rec["correct"] == "true",
                "convergence_time": (int(rec["convergence_time"])
                                     if rec["convergence_time"] else None),
                "mean_estimate": float(rec["mean_estimate"]),
                "median_estimate_error": float(rec["median_estimate_error"]),
            })
    return rows


def summarize(rows: Sequence[Dict[str, object]]) -> List[Dict[str, object]]:
    """Per-cell aggregates over converged-and-correct rows plus failure counts."""
    by_cell: Dict[str, List[Dict[str, object]]] = {}
    order = []
    for row in rows:
        key = row["experiment_id"]
        if key not in by_cell:
            by_cell[key] = []
            order.append(key)
        by_cell[key].append(row)
    out = []
    for key in order:
        group = by_cell[key]
        good_times = [r["convergence_time"] for r in group
                      if r["converged"] and r["correct"]]
        n_incorrect = sum(1 for r in group if r["converged"] and not r["correct"])
        n_unconverged = sum(1 for r in group if not r["converged"])
        entry = {
            "experiment_id": key,
            "n": len(group),
            "n_converged_correct": len(good_times),
            "n_incorrect": n_incorrect,
            "n_unconverged": n_unconverged,
        }
        if good_times:
            q1, med, q3 = np.percentile(good_times, [25, 50, 75])
            entry.update(median_time=float(med), q1_time=float(q1),
                         q3_time=float(q3))
        else:
            entry.update(median_time=None, q1_time=None, q3_time=None)
        errors = [r["median_estimate_error"] for r in group
                  if r["converged"] and r["correct"]
                  and not math.isnan(r["median_estimate_error"])]
        entry["median_estimate_error"] = (float(np.median(errors))
                                          if errors else None)
        out.append(entry)
    return out
