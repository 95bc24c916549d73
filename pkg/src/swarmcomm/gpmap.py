"""Per-agent spatial model of link quality: capacity-bounded observation store
plus a Matern-kernel Gaussian process over the stored samples."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy.linalg import cho_factor, cho_solve, solve_triangular
from scipy.spatial.distance import cdist

PRIOR_MEAN = 0.5  # unexplored space reads as "unknown quality", not "denied"
STORE_CAPACITY = 100


class GPFitError(RuntimeError):
    """Kernel matrix was not positive definite despite jitter."""


@dataclass(frozen=True)
class KernelParams:
    """Matern kernel hyperparameters (unit variance).

    smoothness must be one of 0.5, 1.5, 2.5 so the kernel has a closed form.
    """

    smoothness: float = 1.5
    length_scale: float = 10.0
    jitter: float = 1e-6

    def __post_init__(self):
        if self.smoothness not in (0.5, 1.5, 2.5):
            raise ValueError(
                f"smoothness must be 0.5, 1.5 or 2.5, got {self.smoothness}")
        if self.length_scale <= 0:
            raise ValueError(
                f"length_scale must be > 0, got {self.length_scale}")
        if not 0 < self.jitter <= 1e-4:
            raise ValueError(f"jitter must be in (0, 1e-4], got {self.jitter}")


def matern_values(d: np.ndarray, params: KernelParams) -> np.ndarray:
    """Matern covariance for an array of distances."""
    r = np.asarray(d, dtype=float) / params.length_scale
    if params.smoothness == 0.5:
        return np.exp(-r)
    if params.smoothness == 1.5:
        s = math.sqrt(3.0) * r
        return (1.0 + s) * np.exp(-s)
    s = math.sqrt(5.0) * r
    return (1.0 + s + (5.0 / 3.0) * r * r) * np.exp(-s)


def matern(p, p_prime, params: KernelParams) -> float:
    """Covariance between two points."""
    d = math.hypot(p[0] - p_prime[0], p[1] - p_prime[1])
    return float(matern_values(np.array(d), params))


class ObservationStore:
    """Capacity-bounded set of (position, quality, time) samples.

    A full store accepts a new sample only if it is farther from every stored
    point than the closest stored pair is from each other, replacing one of
    that closest pair picked uniformly at random: insertions maximize spatial
    coverage. Exact duplicate positions are always rejected so the kernel
    matrix stays nonsingular.
    """

    def __init__(self, capacity: int = STORE_CAPACITY):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self.points = np.empty((capacity, 2))
        self.values = np.empty(capacity)
        self.times = np.empty(capacity, dtype=np.int64)
        self.d_min = np.empty(capacity)
        self.n = 0
        self.version = 0

    def __len__(self) -> int:
        return self.n

    def min_distance_to(self, p) -> float:
        """Distance from p to the nearest stored point (inf when empty)."""
        if self.n == 0:
            return math.inf
        dx = self.points[:self.n, 0] - p[0]
        dy = self.points[:self.n, 1] - p[1]
        return float(np.sqrt(np.min(dx * dx + dy * dy)))

    def try_insert(self, p, q: float, t: int,
                   rng: np.random.Generator) -> bool:
        """Insert per the coverage rule; True when the sample was stored."""
        if not 0.0 <= q <= 1.0:
            raise ValueError(f"quality observation must be in [0, 1], got {q}")
        px, py = float(p[0]), float(p[1])
        if self.n == 0:
            self._append(px, py, q, t, np.empty(0))
            return True
        dx = self.points[:self.n, 0] - px
        dy = self.points[:self.n, 1] - py
        dists = np.sqrt(dx * dx + dy * dy)
        m = float(dists.min())
        if m == 0.0:
            return False
        if self.n < self.capacity:
            self._append(px, py, q, t, dists)
            return True
        current_min = float(self.d_min[:self.n].min())
        if m <= current_min:
            return False
        ties = np.flatnonzero(self.d_min[:self.n] == current_min)
        idx = int(ties[rng.integers(len(ties))])
        self.points[idx] = (px, py)
        self.values[idx] = q
        self.times[idx] = t
        self._recompute_d_min()
        self.version += 1
        return True

    def _append(self, px, py, q, t, dists) -> None:
        i = self.n
        self.points[i] = (px, py)
        self.values[i] = q
        self.times[i] = t
        self.d_min[i] = dists.min() if dists.size else math.inf
        if dists.size:
            np.minimum(self.d_min[:i], dists, out=self.d_min[:i])
        self.n += 1
        self.version += 1

    def _recompute_d_min(self) -> None:
        d = cdist(self.points[:self.n], self.points[:self.n])
        np.fill_diagonal(d, np.inf)
        self.d_min[:self.n] = d.min(axis=1)

    def save(self, path, params: Optional[KernelParams] = None) -> None:
        """Dump stored samples (and kernel settings) for inspection."""
        params = params or KernelParams()
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["smoothness", "length_scale", "jitter"])
            writer.writerow([params.smoothness, params.length_scale,
                             params.jitter])
            writer.writerow(["x", "y", "q", "t"])
            for i in range(self.n):
                writer.writerow([repr(self.points[i, 0]),
                                 repr(self.points[i, 1]),
                                 repr(self.values[i]), int(self.times[i])])


class GPModel:
    """Posterior over the quality field, conditioned on a store snapshot."""

    def __init__(self, points: np.ndarray, chol, alpha: np.ndarray,
                 params: KernelParams, store_version: int):
        self.points = points
        self.chol = chol
        self.alpha = alpha
        self.params = params
        self.store_version = store_version

    def predict_mean(self, query: np.ndarray) -> np.ndarray:
        """Posterior mean, clamped to the valid quality range."""
        ks = matern_values(cdist(np.atleast_2d(query), self.points),
                           self.params)
        return np.clip(PRIOR_MEAN + ks @ self.alpha, 0.0, 1.0)

    def predict_sigma(self, query: np.ndarray) -> np.ndarray:
        """Posterior standard deviation over prior standard deviation: in [0, 1]."""
        ks = matern_values(cdist(np.atleast_2d(query), self.points),
                           self.params)
        v = solve_triangular(self.chol[0], ks.T, lower=self.chol[1],
                             check_finite=False)
        var = 1.0 - np.einsum("ij,ij->j", v, v)
        return np.sqrt(np.clip(var, 0.0, 1.0))

    def predict(self, query: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        return self.predict_mean(query), self.predict_sigma(query)


def fit(store: ObservationStore, params: KernelParams) -> GPModel:
    """Condition the GP on the store's current contents."""
    if store.n < 1:
        raise ValueError("cannot fit a model to an empty store")
    pts = store.points[:store.n].copy()
    y = store.values[:store.n] - PRIOR_MEAN
    k = matern_values(cdist(pts, pts), params)
    k[np.diag_indices_from(k)] += params.jitter
    try:
        chol = cho_factor(k, lower=True, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise GPFitError(f"kernel matrix not positive definite: {exc}") from exc
    alpha = cho_solve(chol, y, check_finite=False)
    return GPModel(points=pts, chol=chol, alpha=alpha, params=params,
                   store_version=store.version)


def predict(model: Optional[GPModel],
            query: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Posterior (mean, sigma) at query points; raises on an unfitted model."""
    if model is None:
        raise ValueError("model has not been fitted")
    return model.predict(np.asarray(query, dtype=float))


def try_insert(store: ObservationStore, p_e, q_e: float, t: int,
               rng: np.random.Generator) -> bool:
    return store.try_insert(p_e, q_e, t, rng)
