"""Belief strategies: direct comparison (DC), majority with modulated
dissemination (DMMD), and the multi-feature variant with concentration
memory and lock-in (MFDM)."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

STRATEGIES = ("DC", "DMMD", "MFDM")

CONTACT_WINDOW = 180        # steps before a sender counts as "new" again
CONCENTRATION_KEEP = 0.9    # C* = 0.9 C + 0.1 b
LOCK_LOW = 0.1
LOCK_HIGH = 0.9
LOCK_STEPS = 30


@dataclass
class BeliefState:
    """Per-agent decision state.

    buffer holds (belief, estimate) tuples under DC and bare beliefs under
    DMMD/MFDM. Estimates are cumulative means over the whole run.
    """

    strategy: str
    belief: int
    obs_count_1: int = 0
    obs_count_total: int = 0
    buffer: list = field(default_factory=list)
    concentration: float = 0.5
    last_contact: Dict[int, int] = field(default_factory=dict)
    locked: Optional[int] = None
    band_steps: int = 0

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ValueError(
                f"strategy must be one of {STRATEGIES}, got {self.strategy!r}")
        if self.belief not in (0, 1):
            raise ValueError(f"belief must be 0 or 1, got {self.belief}")

    @property
    def estimate_1(self) -> float:
        """Cumulative ratio estimate for feature 1 (0.5 before any sample)."""
        if self.obs_count_total == 0:
            return 0.5
        return self.obs_count_1 / self.obs_count_total

    def estimate_for(self, belief: int) -> float:
        return self.estimate_1 if belief == 1 else 1.0 - self.estimate_1


def observe_feature_update(state: BeliefState, obs_f: int) -> None:
    """Fold one feature reading into the running ratio estimate."""
    state.obs_count_total += 1
    if obs_f == 1:
        state.obs_count_1 += 1


def receive_payload(state: BeliefState, payload: Tuple[int, Optional[float]],
                    sender_id: int, t: int, receiver_in_d: bool = True) -> None:
    """Record a delivered heartbeat payload from a disseminating sender.

    DC buffers in both receiver states; DMMD/MFDM buffer only while the
    receiver itself disseminates (the buffer spans one D period). The MFDM
    concentration memory updates on any considered payload from a sender not
    heard from within the contact window.
    """
    b_j = payload[0]
    if state.strategy == "DC":
        state.buffer.append((b_j, payload[1]))
        return
    if receiver_in_d:
        state.buffer.append(b_j)
    if state.strategy == "MFDM":
        # at most one concentration update per sender per contact window:
        # the window anchors on the previous counted contact
        last = state.last_contact.get(sender_id)
        if last is None or t - last >= CONTACT_WINDOW:
            state.concentration = (CONCENTRATION_KEEP * state.concentration
                                   + (1.0 - CONCENTRATION_KEEP) * b_j)
            state.last_contact[sender_id] = t


def dc_update(state: BeliefState, rng: np.random.Generator) -> None:
    """Adopt a uniformly drawn neighbor belief when its estimate beats ours."""
    if not state.buffer:
        return
    b_j, rho_j = state.buffer[int(rng.integers(len(state.buffer)))]
    if rho_j > state.estimate_for(state.belief):
        state.belief = b_j
    state.buffer.clear()


def _majority(state: BeliefState) -> None:
    n_1 = sum(state.buffer) + (1 if state.belief == 1 else 0)
    n_0 = len(state.buffer) - sum(state.buffer) + (1 if state.belief == 0 else 0)
    state.belief = 0 if n_0 > n_1 else 1
    state.buffer.clear()


def dmmd_update(state: BeliefState) -> None:
    """Majority vote over the buffered beliefs plus our own; ties go to 1."""
    _majority(state)


def mfdm_update(state: BeliefState) -> None:
    """Majority vote as DMMD; a locked agent is left untouched."""
    if state.locked is not None:
        return
    _majority(state)


def modulation(state: BeliefState) -> float:
    """Dissemination-time modulation g at the E-to-D switch."""
    if state.strategy == "DC":
        return 1.0
    if state.obs_count_total == 0:
        return 0.5
    if state.strategy == "DMMD":
        return state.estimate_for(state.belief)
    return max(state.estimate_1, 1.0 - state.estimate_1)


def concentration_lock_check(state: BeliefState) -> None:
    """Track consecutive steps with C in the lock bands; lock at the 30th."""
    if state.strategy != "MFDM" or state.locked is not None:
        return
    if state.concentration <= LOCK_LOW or state.concentration >= LOCK_HIGH:
        state.band_steps += 1
        if state.band_steps >= LOCK_STEPS:
            state.locked = state.belief
    else:
        state.band_steps = 0
