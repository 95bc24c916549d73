"""Per-agent behaviour: state timers, sensing, message handling, planning
and straight-line movement."""

from __future__ import annotations

import math
from typing import Iterable, List, Optional, Set

import numpy as np

from .comms import STATE_D, STATE_E, Ack, Heartbeat, estimate_quality
from .gpmap import GPModel, KernelParams, ObservationStore, fit
from .planning import (
    ARENA_EPS,
    ARRIVAL_RADIUS,
    PlanWindow,
    Target,
    area_rewards_dissemination,
    area_rewards_exploration,
    random_target,
    select_greedy,
    select_weighted,
)
from .strategies import (
    BeliefState,
    concentration_lock_check,
    dc_update,
    dmmd_update,
    mfdm_update,
    modulation,
    observe_feature_update,
    receive_payload,
)

D_MAX_STEPS = 120
E_STEPS = 60


class _CachedField:
    """Model adapter that serves window predictions from the agent's
    per-cell cache, refreshing only cells whose entry predates the current
    store contents."""

    def __init__(self, agent: "Agent"):
        self.agent = agent

    def predict_mean(self, cells):
        return self.agent._cached_prediction(cells, sigma=False)

    def predict_sigma(self, cells):
        return self.agent._cached_prediction(cells, sigma=True)


class Agent:
    """One swarm member executing the lock-step behaviour loop."""

    def __init__(self, agent_id: int, position, belief_state: BeliefState,
                 planner_kind: str, arena_size: int,
                 kernel_params: KernelParams, rng: np.random.Generator,
                 speed: float = 1.0, explore_mode: str = "as_written",
                 rb_leg: Optional[float] = None, store_capacity: int = 100):
        self.id = agent_id
        self.x = float(position[0])
        self.y = float(position[1])
        self.state = STATE_E  # agents begin by exploring
        self.timer = 0
        self.g = 0.5
        self.speed = speed
        self.belief_state = belief_state
        self.planner_kind = planner_kind
        self.arena_size = arena_size
        self.kernel_params = kernel_params
        self.explore_mode = explore_mode
        self.rb_leg = rb_leg
        self.rng = rng
        self.store = ObservationStore(capacity=store_capacity)
        self.model: Optional[GPModel] = None
        self.target: Optional[Target] = None
        self._needs_replan = True
        self._heard_ids: Set[int] = set()
        self._field = _CachedField(self)
        n_cells = arena_size * arena_size
        self._q_cache = np.empty(n_cells)
        self._q_ver = np.full(n_cells, -1, dtype=np.int64)
        self._s_cache = np.empty(n_cells)
        self._s_ver = np.full(n_cells, -1, dtype=np.int64)

    # -- message phases ----------------------------------------------------

    @property
    def position(self):
        return (self.x, self.y)

    def broadcast(self) -> Heartbeat:
        """Heartbeat sent every step in both states."""
        b = self.belief_state.belief
        est = (self.belief_state.estimate_for(b)
               if self.belief_state.strategy == "DC" else None)
        return Heartbeat(sender_id=self.id, sender_state=self.state,
                         payload=(b, est))

    def receive_and_ack(self, heartbeats: Iterable[Heartbeat],
                        t: int) -> List[Ack]:
        """Record heard senders, ack each heartbeat, take in D-state payloads."""
        acks = []
        self._heard_ids = set()
        in_d = self.state == STATE_D
        for hb in heartbeats:
            self._heard_ids.add(hb.sender_id)
            acks.append(Ack(sender_id=self.id, target_id=hb.sender_id))
            if hb.sender_state == STATE_D:
                receive_payload(self.belief_state, hb.payload, hb.sender_id,
                                t, receiver_in_d=in_d)
        return acks

    def observe(self, ack_ids: Set[int], feature_value: Optional[int],
                t: int) -> None:
        """Store this step's link-quality estimate; sense the feature in E."""
        obs = estimate_quality(ack_ids, self._heard_ids)
        if obs is not None:
            self.store.try_insert((self.x, self.y), obs, t, self.rng)
        if self.state == STATE_E and feature_value is not None:
            observe_feature_update(self.belief_state, feature_value)
        concentration_lock_check(self.belief_state)
        self._heard_ids = set()

    # -- state machine -----------------------------------------------------

    def d_duration(self) -> int:
        return max(1, int(math.floor(D_MAX_STEPS * self.g + 0.5)))

    def transition(self) -> None:
        """Advance the state timer and switch states when the period elapses."""
        self.timer += 1
        if self.state == STATE_E:
            if self.timer >= E_STEPS:
                self.g = modulation(self.belief_state)
                self.state = STATE_D
                self.timer = 0
                self._needs_replan = True
        elif self.timer >= self.d_duration():
            strat = self.belief_state.strategy
            if strat == "DC":
                dc_update(self.belief_state, self.rng)
            elif strat == "DMMD":
                dmmd_update(self.belief_state)
            else:
                mfdm_update(self.belief_state)
            self.state = STATE_E
            self.timer = 0
            self._needs_replan = True

    # -- planning and movement ----------------------------------------------

    def plan_and_move(self, t: int) -> None:
        """Re-plan on arrival or state change, then step toward the target."""
        if self.target is not None:
            if math.hypot(self.target.point[0] - self.x,
                          self.target.point[1] - self.y) <= ARRIVAL_RADIUS:
                self._needs_replan = True
        else:
            self._needs_replan = True
        if self._needs_replan:
            self.target = self._plan(t)
            self._needs_replan = False
        tx, ty = self.target.point
        dx, dy = tx - self.x, ty - self.y
        dist = math.hypot(dx, dy)
        if dist <= self.speed:
            self.x, self.y = tx, ty
        elif dist > 0:
            self.x += self.speed * dx / dist
            self.y += self.speed * dy / dist
        hi = self.arena_size - ARENA_EPS
        self.x = min(max(self.x, 0.0), hi)
        self.y = min(max(self.y, 0.0), hi)

    def _plan(self, t: int) -> Target:
        if self.planner_kind == "RB":
            return random_target((self.x, self.y), self.rng,
                                 self.arena_size, t, leg=self.rb_leg)
        if len(self.store) == 0:
            # no map yet: dash on a boundary-length leg until the first
            # sample arrives (a short-step walk would strand agents that
            # start deep inside a denied region)
            return random_target((self.x, self.y), self.rng,
                                 self.arena_size, t, leg=None)
        window = PlanWindow((self.x, self.y), self.arena_size)
        if self.state == STATE_D:
            rewards = area_rewards_dissemination(window, self._field)
        else:
            rewards = area_rewards_exploration(window, self._field,
                                               mode=self.explore_mode)
        if self.planner_kind == "CA-G":
            return select_greedy(rewards, window.centroids, t)
        return select_weighted(rewards, window.centroids, self.rng, t)

    # -- GP plumbing ---------------------------------------------------------

    def _ensure_model(self) -> GPModel:
        if self.model is None or self.model.store_version != self.store.version:
            self.model = fit(self.store, self.kernel_params)
        return self.model

    def _cached_prediction(self, cells: np.ndarray, sigma: bool) -> np.ndarray:
        """Per-cell predictions keyed by store version; cells must be unit-cell
        centers so each maps to one cache slot."""
        model = self._ensure_model()
        idx = (cells[:, 0].astype(np.int64) * self.arena_size
               + cells[:, 1].astype(np.int64))
        cache, ver = ((self._s_cache, self._s_ver) if sigma
                      else (self._q_cache, self._q_ver))
        stale = ver[idx] != self.store.version
        if stale.any():
            fresh = (model.predict_sigma(cells[stale]) if sigma
                     else model.predict_mean(cells[stale]))
            cache[idx[stale]] = fresh
            ver[idx[stale]] = self.store.version
        return cache[idx]
