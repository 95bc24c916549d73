"""Ground-truth fields: binary feature layout and communication quality over the arena."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

ENV_KINDS = ("distributed", "continuous", "uniform")


class GridGenerationError(RuntimeError):
    """Raised when a communication grid cannot reach the requested denied fraction."""


@dataclass(frozen=True)
class EnvConfig:
    """Arena parameters.

    size: arena side length n (one unit per grid cell).
    feature_ratio: fraction of cells carrying feature value 1, in (0, 1).
    denial_ratio: fraction of cells with zero communication quality, in [0, 1).
    env_kind: one of "distributed", "continuous", "uniform".
    gradient_width: width (units) of the quality ramp around denied regions.
    patch_count / patch_radius: disk layout for the distributed kind.
    feature_count: number of distinct features; fixed at 2.
    """

    size: int = 64
    feature_ratio: float = 0.65
    denial_ratio: float = 0.5
    env_kind: str = "continuous"
    gradient_width: float = 4.0
    patch_count: int = 64
    patch_radius: int = 4
    feature_count: int = 2

    def __post_init__(self):
        if self.size < 2:
            raise ValueError(f"size must be >= 2, got {self.size}")
        if not 0.0 < self.feature_ratio < 1.0:
            raise ValueError(
                f"feature_ratio must lie in (0, 1), got {self.feature_ratio}")
        if not 0.0 <= self.denial_ratio < 1.0:
            raise ValueError(
                f"denial_ratio must lie in [0, 1), got {self.denial_ratio}")
        if self.env_kind not in ENV_KINDS:
            raise ValueError(
                f"env_kind must be one of {ENV_KINDS}, got {self.env_kind!r}")
        if self.gradient_width < 0:
            raise ValueError(
                f"gradient_width must be >= 0, got {self.gradient_width}")
        if self.patch_count < 1 or self.patch_radius < 1:
            raise ValueError("patch_count and patch_radius must be >= 1")
        if self.feature_count != 2:
            raise ValueError(
                f"feature_count is fixed at 2, got {self.feature_count}")


def _cell_centers(size: int) -> Tuple[np.ndarray, np.ndarray]:
    """Meshgrid of unit-cell centers, indexed [ix, iy]."""
    c = np.arange(size) + 0.5
    return np.meshgrid(c, c, indexing="ij")


@dataclass
class FeatureGrid:
    """Binary feature field; cells[ix, iy] in {0, 1}."""

    cells: np.ndarray
    config: Optional[EnvConfig] = None
    seed: Optional[int] = None

    @property
    def size(self) -> int:
        return self.cells.shape[0]

    def save(self, path) -> None:
        _save_grid(path, self.cells, "%d", self.config, self.seed)

    @classmethod
    def load(cls, path) -> "FeatureGrid":
        cells, config, seed = _load_grid(path, int)
        return cls(cells=cells.astype(np.int8), config=config, seed=seed)


@dataclass
class CommGrid:
    """Communication quality field; cells[ix, iy] in [0, 1]."""

    cells: np.ndarray
    config: Optional[EnvConfig] = None
    seed: Optional[int] = None

    @property
    def size(self) -> int:
        return self.cells.shape[0]

    def denied_fraction(self) -> float:
        return float(np.count_nonzero(self.cells == 0.0)) / self.cells.size

    def save(self, path) -> None:
        _save_grid(path, self.cells, "%.17g", self.config, self.seed)

    @classmethod
    def load(cls, path) -> "CommGrid":
        cells, config, seed = _load_grid(path, float)
        return cls(cells=cells, config=config, seed=seed)


def generate_feature_grid(config: EnvConfig,
                          rng: np.random.Generator,
                          seed: Optional[int] = None) -> FeatureGrid:
    """Place exactly round(r_f * size^2) one-cells by uniform shuffle."""
    n_cells = config.size * config.size
    n_ones = int(np.floor(config.feature_ratio * n_cells + 0.5))
    flat = np.zeros(n_cells, dtype=np.int8)
    flat[rng.permutation(n_cells)[:n_ones]] = 1
    return FeatureGrid(cells=flat.reshape(config.size, config.size),
                       config=config, seed=seed)


def generate_comm_grid(config: EnvConfig,
                       rng: np.random.Generator,
                       seed: Optional[int] = None) -> CommGrid:
    """Build the q_c field for the configured environment kind.

    Denied cells (q_c = 0) are those whose center lies inside a denied disk;
    elsewhere q_c ramps up linearly with distance to the nearest denied region
    over gradient_width units.
    """
    size = config.size
    if config.env_kind == "uniform" or config.denial_ratio == 0.0:
        return CommGrid(cells=np.ones((size, size)), config=config, seed=seed)

    cx, cy = _cell_centers(size)
    if config.env_kind == "continuous":
        dist = _continuous_region_distance(config, rng, cx, cy)
    else:
        dist = _distributed_region_distance(config, rng, cx, cy)

    if config.gradient_width > 0:
        quality = np.clip(dist / config.gradient_width, 0.0, 1.0)
    else:
        quality = (dist > 0).astype(float)
    quality[dist <= 0.0] = 0.0
    return CommGrid(cells=quality, config=config, seed=seed)


def _continuous_region_distance(config, rng, cx, cy) -> np.ndarray:
    """Signed-ish distance to one denied disk sized to hit the denial ratio.

    The disk center is drawn uniformly; the radius is bisected until the number
    of covered cell centers lands within the +-2% tolerance.
    """
    size = config.size
    target = config.denial_ratio * size * size
    tol = 0.02 * size * size
    center = rng.uniform(0.0, size, size=2)
    d_center = np.hypot(cx - center[0], cy - center[1])

    lo_r, hi_r = 0.0, size * np.sqrt(2.0) + 1.0
    radius = None
    for _ in range(80):
        mid = 0.5 * (lo_r + hi_r)
        count = np.count_nonzero(d_center <= mid)
        if abs(count - target) <= tol:
            radius = mid
            break
        if count < target:
            lo_r = mid
        else:
            hi_r = mid
    if radius is None:
        raise GridGenerationError(
            f"continuous denied region cannot reach r_c={config.denial_ratio}")
    return d_center - radius


def _distributed_region_distance(config, rng, cx, cy) -> np.ndarray:
    """Distance to the union of denied disks placed to hit the denial ratio.

    Disks are placed uniformly one at a time; placements that overlap existing
    patches too much (or overshoot the tolerance band) are resampled.
    """
    size = config.size
    target = config.denial_ratio * size * size
    tol = 0.02 * size * size
    lo, hi = target - tol, target + tol
    patch_cells = np.pi * config.patch_radius ** 2

    dist = np.full((size, size), np.inf)
    denied = 0
    for _ in range(config.patch_count):
        if denied >= lo:
            break
        need = lo - denied
        best_d = None
        best_new = -1
        for _ in range(200):
            c = rng.uniform(0.0, size, size=2)
            d = np.hypot(cx - c[0], cy - c[1]) - config.patch_radius
            new = int(np.count_nonzero((d <= 0.0) & (dist > 0.0)))
            if denied + new > hi:
                continue
            if new >= min(need, 0.5 * patch_cells):
                best_d, best_new = d, new
                break
            if new > best_new:
                best_d, best_new = d, new
        if best_d is None or best_new <= 0:
            raise GridGenerationError(
                f"distributed patches cannot reach r_c={config.denial_ratio} "
                f"(count={config.patch_count}, radius={config.patch_radius})")
        dist = np.minimum(dist, best_d)
        denied += best_new
    if denied < lo:
        raise GridGenerationError(
            f"distributed patches exhausted at denied fraction "
            f"{denied / (size * size):.3f} < r_c={config.denial_ratio}")
    return dist


def _check_pos(size: int, pos) -> Tuple[int, int]:
    x, y = float(pos[0]), float(pos[1])
    if not (0.0 <= x < size and 0.0 <= y < size):
        raise ValueError(f"position {pos} outside arena [0, {size})^2")
    return int(x), int(y)


def feature_at(grid: FeatureGrid, pos) -> int:
    """Feature value of the unit cell containing a continuous position."""
    ix, iy = _check_pos(grid.size, pos)
    return int(grid.cells[ix, iy])


def quality_at(grid: CommGrid, pos) -> float:
    """Communication quality of the unit cell containing a continuous position."""
    ix, iy = _check_pos(grid.size, pos)
    return float(grid.cells[ix, iy])


def _save_grid(path, cells, fmt, config, seed) -> None:
    cfg = config or EnvConfig()
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["size", "kind", "r_f", "r_c", "seed"])
        writer.writerow([cells.shape[0], cfg.env_kind, repr(cfg.feature_ratio),
                         repr(cfg.denial_ratio), "" if seed is None else seed])
        for row in cells:
            writer.writerow([fmt % v for v in row])


def _load_grid(path, cast):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != ["size", "kind", "r_f", "r_c", "seed"]:
            raise ValueError(f"unrecognized grid file header: {header}")
        size_s, kind, rf_s, rc_s, seed_s = next(reader)
        rows = [[cast(v) for v in row] for row in reader]
    cells = np.array(rows)
    config = EnvConfig(size=int(size_s), feature_ratio=float(rf_s),
                       denial_ratio=float(rc_s), env_kind=kind)
    seed = int(seed_s) if seed_s else None
    if cells.shape != (config.size, config.size):
        raise ValueError(f"grid body shape {cells.shape} does not match "
                         f"declared size {config.size}")
    return cells, config, seed
