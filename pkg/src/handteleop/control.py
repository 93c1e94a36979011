"""Command smoothing and serial-mode scheduling.

The scheduler keeps at most one command in flight and a single pending
slot (newest wins). A pending command older than the latency budget when
the in-flight one completes is dropped as stale; the budget lives in the
100-300 ms stability band.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from . import geometry as geo
from .errors import BadConfig, SchedulerStopped, UnknownTicket
from .geometry import Pose

LATENCY_BAND = (0.100, 0.300)  # s
DEFAULT_LATENCY_BUDGET = 0.200  # s, midpoint of the band


@dataclass(frozen=True)
class SmoothingConfig:
    alpha_pos: float = 1.0
    alpha_rot: float = 1.0
    deadband: float = 0.0  # m

    def __post_init__(self):
        if not (0 < self.alpha_pos <= 1 and 0 < self.alpha_rot <= 1) or self.deadband < 0:
            raise BadConfig("alpha in (0,1], deadband >= 0")


def smooth(prev_out: Pose, new_in: Pose, cfg: SmoothingConfig) -> Pose:
    """First-order exponential step from prev_out toward new_in."""
    delta = new_in.position - prev_out.position
    if np.linalg.norm(delta) <= cfg.deadband:
        position = prev_out.position
    else:
        position = prev_out.position + cfg.alpha_pos * delta
    rotation = geo.slerp(prev_out.rotation, new_in.rotation, cfg.alpha_rot)
    return Pose(position, rotation)


def smoothing_gain(alpha: float, omega: float, dt: float) -> float:
    """Steady-state amplitude ratio of the filter at angular frequency omega."""
    z = np.exp(-1j * omega * dt)
    return float(abs(alpha / (1.0 - (1.0 - alpha) * z)))


@dataclass(frozen=True)
class SerialSchedulerConfig:
    latency_budget: float = DEFAULT_LATENCY_BUDGET  # s, queueing delay bound

    def __post_init__(self):
        if not (LATENCY_BAND[0] <= self.latency_budget <= LATENCY_BAND[1]):
            raise BadConfig(
                f"latency_budget must be within {LATENCY_BAND[0]}-{LATENCY_BAND[1]} s"
            )


@dataclass
class CommandTicket:
    ticket_id: int
    command: object
    submitted_at: float
    dispatched_at: float | None = None
    completed_at: float | None = None


@dataclass(frozen=True)
class SchedulerEvent:
    kind: str  # submitted | dispatched | completed | dropped | stale
    t: float
    ticket_id: int
    queue_delay: float | None = None


@dataclass
class SerialScheduler:
    """Single in-flight command, single pending slot, DropOldest policy."""

    cfg: SerialSchedulerConfig = field(default_factory=SerialSchedulerConfig)
    events: list[SchedulerEvent] = field(default_factory=list)
    drops: int = 0
    stale: int = 0
    running: bool = True
    in_flight: CommandTicket | None = None
    pending: CommandTicket | None = None
    _ids: itertools.count = field(default_factory=itertools.count)

    def stop(self):
        self.running = False

    def _dispatch(self, ticket: CommandTicket, now: float) -> CommandTicket:
        ticket.dispatched_at = now
        self.in_flight = ticket
        self.events.append(
            SchedulerEvent("dispatched", now, ticket.ticket_id,
                           queue_delay=now - ticket.submitted_at)
        )
        return ticket

    def submit(self, command, now: float) -> CommandTicket | None:
        """Returns the ticket if it dispatched immediately, else None."""
        if not self.running:
            raise SchedulerStopped("scheduler is stopped")
        ticket = CommandTicket(next(self._ids), command, submitted_at=now)
        self.events.append(SchedulerEvent("submitted", now, ticket.ticket_id))
        if self.in_flight is None:
            return self._dispatch(ticket, now)
        if self.pending is not None:
            self.drops += 1
            self.events.append(SchedulerEvent("dropped", now, self.pending.ticket_id))
        self.pending = ticket
        return None

    def complete(self, ticket_id: int, now: float) -> CommandTicket | None:
        """Marks the in-flight ticket done; dispatches the pending command if
        it is still within the latency budget. Returns the newly dispatched
        ticket, if any."""
        if self.in_flight is None or self.in_flight.ticket_id != ticket_id:
            raise UnknownTicket(f"ticket {ticket_id} is not in flight")
        done = self.in_flight
        done.completed_at = now
        self.in_flight = None
        self.events.append(SchedulerEvent("completed", now, done.ticket_id))
        if self.pending is None:
            return None
        nxt, self.pending = self.pending, None
        age = now - nxt.submitted_at
        if age > self.cfg.latency_budget:
            self.stale += 1
            self.events.append(SchedulerEvent("stale", now, nxt.ticket_id, queue_delay=age))
            return None
        return self._dispatch(nxt, now)
