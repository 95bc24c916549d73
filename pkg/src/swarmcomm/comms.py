"""Lossy broadcast model: heartbeat/ack exchange and the local link-quality estimator."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence, Set, Tuple

import numpy as np

from .environment import CommGrid, quality_at

END_RULES = ("both_ends_product", "sender_quality")

STATE_D = "D"
STATE_E = "E"


@dataclass(frozen=True)
class Heartbeat:
    """Per-step broadcast carrying the sender's belief data.

    payload is (belief, estimate); estimate is None except under DC, where the
    sender's estimate for its current belief rides along.
    """

    sender_id: int
    sender_state: str
    payload: Tuple[int, Optional[float]]


@dataclass(frozen=True)
class Ack:
    """Acknowledgement returned immediately for a received heartbeat."""

    sender_id: int
    target_id: int


@dataclass(frozen=True)
class LinkModel:
    """Delivery parameters: range cutoff and which endpoint qualities gate success."""

    comm_range: float = 5.0
    end_rule: str = "both_ends_product"

    def __post_init__(self):
        if self.comm_range <= 0:
            raise ValueError(f"comm_range must be > 0, got {self.comm_range}")
        if self.end_rule not in END_RULES:
            raise ValueError(
                f"end_rule must be one of {END_RULES}, got {self.end_rule!r}")

    def success_prob(self, q_sender: float, q_receiver: float) -> float:
        if self.end_rule == "both_ends_product":
            return q_sender * q_receiver
        return q_sender


def neighbors_in_range(positions: Sequence[Tuple[float, float]], i: int,
                       comm_range: float) -> Set[int]:
    """Agents within Euclidean distance comm_range of agent i (boundary inclusive)."""
    xi, yi = positions[i]
    out = set()
    for j, (xj, yj) in enumerate(positions):
        if j != i and math.hypot(xj - xi, yj - yi) <= comm_range:
            out.add(j)
    return out


def deliver(sender_pos, receiver_pos, comm_grid: CommGrid,
            rng: np.random.Generator,
            link: Optional[LinkModel] = None) -> bool:
    """One Bernoulli delivery trial for a message between two in-range agents."""
    link = link or LinkModel()
    p = link.success_prob(quality_at(comm_grid, sender_pos),
                          quality_at(comm_grid, receiver_pos))
    return bool(rng.random() < p)


def estimate_quality(acks_received: Iterable[int],
                     heartbeats_received: Iterable[int]) -> Optional[float]:
    """Local link-quality estimate |A| / |A u H| from one timestep's id sets.

    Returns None when no contact occurred: an isolated step carries no
    information about quality and must not be recorded as zero.
    """
    a = set(acks_received)
    union = a | set(heartbeats_received)
    if not union:
        return None
    return len(a) / len(union)


def delivery_matrices(positions: np.ndarray, qualities: np.ndarray,
                      link: LinkModel, rng: np.random.Generator
                      ) -> Tuple[np.ndarray, np.ndarray]:
    """Resolve all heartbeat and ack deliveries for one timestep.

    Returns (hb, ack) boolean arrays: hb[i, j] means i's heartbeat reached j;
    ack[i, j] means j's ack for that heartbeat reached i. Random draws are
    consumed as two fixed-shape matrices in (sender, receiver) order, so the
    outcome stream is independent of which pairs happen to be in range.
    """
    n = positions.shape[0]
    delta = positions[:, None, :] - positions[None, :, :]
    dist2 = np.einsum("ijk,ijk->ij", delta, delta)
    in_range = dist2 <= link.comm_range * link.comm_range
    np.fill_diagonal(in_range, False)

    if link.end_rule == "both_ends_product":
        p = qualities[:, None] * qualities[None, :]
    else:
        p = np.broadcast_to(qualities[:, None], (n, n)).copy()

    hb_draws = rng.random((n, n))
    ack_draws = rng.random((n, n))
    hb = in_range & (hb_draws < p)
    # ack sender is the heartbeat's receiver: the draw for ack j->i is
    # ack_draws[j, i] and its success probability is p[j, i]
    ack = hb & (ack_draws < p).T
    return hb, ack
