"""Domain types and continuous-time dynamics of a longitudinal vehicle platoon.

Vehicles are numbered 1..N with vehicle 1 the (human-driven) leader; followers
hold a constant desired gap L behind their predecessor.  Under the
predecessor-leader information topology each follower i receives V2V messages
from vehicle 1 and vehicle i-1.  All coordinates are absolute 1-D road
positions in meters.

State is stored as flat numpy arrays (index 0 = vehicle 1) so the simulation
engine can integrate it directly; the public operations take 1-based vehicle
indices matching the domain convention.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "VehicleState",
    "NeighborMessage",
    "RadarMeasurement",
    "LeaderProfile",
    "PlatoonConfig",
    "PlatoonState",
    "spacing_error",
    "desired_distance",
    "platoon_derivative",
]


@dataclass(frozen=True)
class VehicleState:
    """Longitudinal state of one vehicle: absolute position and velocity."""

    position: float
    velocity: float


@dataclass(frozen=True)
class NeighborMessage:
    """Content of a V2V broadcast: the sender's kinematic triple.

    ``sender_id`` is the 1-based index of the transmitting vehicle.  Under the
    predecessor-leader topology a follower i only consumes messages with
    sender_id in {1, i-1}.
    """

    position: float
    velocity: float
    acceleration: float
    sender_id: int


@dataclass(frozen=True)
class RadarMeasurement:
    """On-board ranging measurement of the predecessor.

    Deliberately carries no acceleration field: radar-based control cannot be
    influenced by transmitted (and therefore falsifiable) acceleration values.
    """

    position: float
    velocity: float


@dataclass(frozen=True)
class LeaderProfile:
    """Leader velocity profile: an initial speed plus acceleration pulses.

    Each pulse is a (start, end, acceleration) triple; the leader acceleration
    at time t is the sum of all pulses whose half-open window [start, end)
    contains t, and zero otherwise.  Piecewise-constant acceleration is enough
    to express the braking / speed-up disturbances used in string-stability
    experiments.
    """

    initial_velocity: float = 20.0
    pulses: tuple[tuple[float, float, float], ...] = ()

    def __post_init__(self):
        for start, end, _ in self.pulses:
            if not end > start:
                raise ValueError(f"pulse window [{start}, {end}) is empty")

    def acceleration(self, t: float) -> float:
        return sum(a for (s, e, a) in self.pulses if s <= t < e)

    def velocity(self, t: float) -> float:
        v = self.initial_velocity
        for s, e, a in self.pulses:
            v += a * max(0.0, min(t, e) - s)
        return v


@dataclass(frozen=True)
class PlatoonConfig:
    """Static description of the platoon geometry and safety threshold."""

    vehicle_count: int
    desired_gap: float
    vehicle_length: float
    epsilon_max: float
    leader_profile: LeaderProfile = field(default_factory=LeaderProfile)

    def __post_init__(self):
        if self.vehicle_count < 2:
            raise ValueError("a platoon needs at least two vehicles")
        if not self.desired_gap > self.vehicle_length > 0:
            raise ValueError("desired_gap must exceed vehicle_length > 0")
        if not 0 < self.epsilon_max < self.desired_gap - self.vehicle_length:
            raise ValueError(
                "epsilon_max must lie in (0, desired_gap - vehicle_length) so a "
                "triggered safety surface still precedes physical contact"
            )


class PlatoonState:
    """Positions and velocities of all vehicles, stored as numpy arrays."""

    __slots__ = ("positions", "velocities")

    def __init__(self, positions, velocities):
        self.positions = np.asarray(positions, dtype=float)
        self.velocities = np.asarray(velocities, dtype=float)
        if self.positions.shape != self.velocities.shape or self.positions.ndim != 1:
            raise ValueError("positions and velocities must be 1-D arrays of equal length")

    @property
    def vehicle_count(self) -> int:
        return self.positions.size

    def vehicle(self, i: int) -> VehicleState:
        """State of vehicle i (1-based)."""
        return VehicleState(float(self.positions[i - 1]), float(self.velocities[i - 1]))

    @classmethod
    def equilibrium(cls, n: int, gap: float, velocity: float, lead_position: float = 0.0):
        """All vehicles at the desired gap, moving at a common speed."""
        pos = lead_position - gap * np.arange(n, dtype=float)
        return cls(pos, np.full(n, float(velocity)))

    def copy(self) -> "PlatoonState":
        return PlatoonState(self.positions.copy(), self.velocities.copy())


def spacing_error(state: PlatoonState, i: int, L: float) -> float:
    """Spacing error of follower i: x_i - x_{i-1} + L (zero at the desired gap).

    Positive values mean the follower is too close to its predecessor.
    """
    if not 2 <= i <= state.vehicle_count:
        raise IndexError(f"follower index {i} outside 2..{state.vehicle_count}")
    return float(state.positions[i - 1] - state.positions[i - 2] + L)


def desired_distance(i: int, j: int, L: float) -> float:
    """Desired separation between vehicles i and j: L times the hop count."""
    if i == j:
        raise ValueError("desired distance is defined only for distinct vehicles")
    return L * abs(i - j)


def platoon_derivative(state: PlatoonState, accel_commands, leader_accel: float = 0.0):
    """Time derivative (dx/dt, dv/dt) of the platoon state.

    ``accel_commands`` supplies one commanded acceleration per vehicle; the
    leader's entry is ignored and replaced by ``leader_accel`` from its velocity
    profile, so follower commands can never influence the leader.
    """
    u = np.asarray(accel_commands, dtype=float)
    if u.shape != state.positions.shape:
        raise ValueError(
            f"expected {state.vehicle_count} acceleration commands, got {u.size}"
        )
    dv = u.copy()
    dv[0] = leader_accel
    return state.velocities.copy(), dv
