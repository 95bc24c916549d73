"""Movement-target selection: random-baseline walks and the
communication-aware greedy / coordinated planners over windowed reward maps."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .gpmap import GPModel

PLANNERS = ("RB", "CA-G", "CA-Co")

WINDOW_SIDE = 10.0
AREA_COUNT = 9
ARRIVAL_RADIUS = 0.5
ARENA_EPS = 1e-9  # positions live in [0, size): keep targets strictly inside

EXPLORE_REWARD_MODES = ("as_written", "high_uncertainty")


@dataclass(frozen=True)
class Target:
    point: Tuple[float, float]
    issued_at: int


class PlanWindow:
    """Square window centered on an agent, split into a k x k grid of areas.

    Precomputes the arena unit-cell centers covered by the window and the
    area index of each (x-major order). Areas that fall outside the arena
    keep their slot but cover no cells, so their reward is zero; centroids
    are clamped into the arena so any selected target is reachable.
    """

    def __init__(self, center: Tuple[float, float], arena_size: int,
                 side: float = WINDOW_SIDE, area_count: int = AREA_COUNT):
        k = math.isqrt(area_count)
        if k * k != area_count:
            raise ValueError(f"area_count must be a perfect square, "
                             f"got {area_count}")
        self.center = (float(center[0]), float(center[1]))
        self.arena_size = arena_size
        self.side = side
        self.area_count = area_count
        self.k = k
        sub = side / k
        x0 = self.center[0] - side / 2.0
        y0 = self.center[1] - side / 2.0

        ix = np.arange(max(0, int(math.floor(x0))),
                       min(arena_size, int(math.ceil(x0 + side)) + 1))
        iy = np.arange(max(0, int(math.floor(y0))),
                       min(arena_size, int(math.ceil(y0 + side)) + 1))
        cx = ix + 0.5
        cy = iy + 0.5
        cx = cx[(cx >= x0) & (cx < x0 + side) & (cx < arena_size)]
        cy = cy[(cy >= y0) & (cy < y0 + side) & (cy < arena_size)]
        gx, gy = np.meshgrid(cx, cy, indexing="ij")
        self.cells = np.stack([gx.ravel(), gy.ravel()], axis=1)

        col = np.clip(((self.cells[:, 0] - x0) // sub).astype(int), 0, k - 1)
        row = np.clip(((self.cells[:, 1] - y0) // sub).astype(int), 0, k - 1)
        self.cell_areas = col * k + row

        hi = arena_size - ARENA_EPS
        cents = []
        for a in range(area_count):
            ax, ay = divmod(a, k)
            cents.append((min(max(x0 + (ax + 0.5) * sub, 0.0), hi),
                          min(max(y0 + (ay + 0.5) * sub, 0.0), hi)))
        self.centroids = cents


def _require_model(model: Optional[GPModel]) -> GPModel:
    if model is None:
        raise ValueError("planner rewards need a fitted quality model")
    return model


def area_rewards_dissemination(window: PlanWindow,
                               model: Optional[GPModel]) -> np.ndarray:
    """Per-area sum of estimated communication quality over covered cells."""
    model = _require_model(model)
    if window.cells.shape[0] == 0:
        return np.zeros(window.area_count)
    qhat = model.predict_mean(window.cells)
    return np.bincount(window.cell_areas, weights=qhat,
                       minlength=window.area_count)


def area_rewards_exploration(window: PlanWindow, model: Optional[GPModel],
                             mode: str = "as_written") -> np.ndarray:
    """Per-area sum over the uncertainty map.

    "as_written" accumulates (1 - sigma); "high_uncertainty" accumulates
    sigma instead, which actively seeks unexplored ground.
    """
    if mode not in EXPLORE_REWARD_MODES:
        raise ValueError(f"unknown exploration reward mode {mode!r}")
    model = _require_model(model)
    if window.cells.shape[0] == 0:
        return np.zeros(window.area_count)
    sigma = model.predict_sigma(window.cells)
    w = sigma if mode == "high_uncertainty" else 1.0 - sigma
    return np.bincount(window.cell_areas, weights=w,
                       minlength=window.area_count)


def select_greedy(rewards: np.ndarray, centroids, issued_at: int = 0) -> Target:
    """Centroid of the highest-reward area; ties go to the lowest index."""
    idx = int(np.argmax(rewards))
    return Target(point=centroids[idx], issued_at=issued_at)


def select_weighted(rewards: np.ndarray, centroids, rng: np.random.Generator,
                    issued_at: int = 0) -> Target:
    """Sample an area with probability proportional to its reward share."""
    rewards = np.asarray(rewards, dtype=float)
    if np.any(rewards < 0):
        raise ValueError("rewards must be non-negative")
    total = float(rewards.sum())
    if total <= 0.0:
        idx = int(rng.integers(len(rewards)))
    else:
        u = rng.random() * total
        idx = int(np.searchsorted(np.cumsum(rewards), u, side="right"))
        idx = min(idx, len(rewards) - 1)
    return Target(point=centroids[idx], issued_at=issued_at)


def random_target(pos: Tuple[float, float], rng: np.random.Generator,
                  arena_size: int, issued_at: int = 0,
                  leg: Optional[float] = None) -> Target:
    """Uniform random heading followed for one leg, clipped at the arena.

    leg is the straight-line distance walked before the next heading draw;
    None extends the leg all the way to the boundary. Headings whose clipped
    leg ends within the arrival radius (outward-facing at a wall) are redrawn
    so the walk always makes progress.
    """
    x, y = pos
    hi = arena_size - ARENA_EPS
    px, py = x, y
    for _ in range(32):
        theta = rng.uniform(0.0, 2.0 * math.pi)
        ux, uy = math.cos(theta), math.sin(theta)
        tx = (hi - x) / ux if ux > 0 else (0.0 - x) / ux if ux < 0 else math.inf
        ty = (hi - y) / uy if uy > 0 else (0.0 - y) / uy if uy < 0 else math.inf
        t_hit = min(tx, ty)
        if leg is not None:
            t_hit = min(t_hit, leg)
        px = min(max(x + t_hit * ux, 0.0), hi)
        py = min(max(y + t_hit * uy, 0.0), hi)
        if t_hit > ARRIVAL_RADIUS:
            break
    return Target(point=(px, py), issued_at=issued_at)
