"""Message-falsification attack models and the imperfect anomaly detector.

The attacker compromises the V2V channel of a set of victim vehicles and
perturbs what they receive.  Two equivalent views are supported:

* ``lumped-acceleration`` -- the net effect of the falsified messages is a
  bounded additive disturbance xi(t) on the victim's acceleration channel
  (only meaningful while the victim runs the communication-based controller;
  radar-based control has no communication path, so the disturbance vanishes
  there).
* ``message-level`` -- individual message fields (position, velocity,
  acceleration) are offset by the signal before the victim's controller sees
  them.  Offsetting only the acceleration field by xi reproduces the lumped
  model exactly when the controller's acceleration feed-through gains sum
  to one.

The detector is a confusion-matrix abstraction: at each sampling instant it
reports "attack" with one probability under attack and another (false-alarm)
probability under benign traffic.  It is the chance player of the security
game, realized with a seeded generator for reproducibility.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field, replace

from .platoon import NeighborMessage

__all__ = [
    "REPORT_ATTACK",
    "REPORT_NONE",
    "MESSAGE_FIELDS",
    "AttackSignal",
    "AttackSpec",
    "DetectorModel",
    "DetectorReport",
    "attack_signal",
    "falsify_message",
    "detector_sample",
]

REPORT_ATTACK = "r"
REPORT_NONE = "nr"

MESSAGE_FIELDS = ("position", "velocity", "acceleration")


@dataclass(frozen=True)
class AttackSignal:
    """Scripted disturbance waveform, evaluated relative to the attack window.

    kinds:
      constant  -- amplitude
      ramp      -- rate * (t - window start)
      sinusoid  -- amplitude * sin(2 pi frequency (t - window start) + phase)
      table     -- zero-order hold over (times, values) sample pairs
    """

    kind: str = "constant"
    amplitude: float = 2.0
    rate: float = 0.0
    frequency: float = 0.1
    phase: float = 0.0
    times: tuple[float, ...] = ()
    values: tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind not in ("constant", "ramp", "sinusoid", "table"):
            raise ValueError(f"unknown attack signal kind {self.kind!r}")
        if self.kind == "table":
            if len(self.times) != len(self.values) or not self.times:
                raise ValueError("table signal needs matching, nonempty times/values")
            if list(self.times) != sorted(self.times):
                raise ValueError("table times must be sorted")

    def value(self, elapsed: float, absolute: float) -> float:
        if self.kind == "constant":
            return self.amplitude
        if self.kind == "ramp":
            return self.rate * elapsed
        if self.kind == "sinusoid":
            return self.amplitude * math.sin(2.0 * math.pi * self.frequency * elapsed + self.phase)
        idx = bisect.bisect_right(self.times, absolute) - 1
        return self.values[idx] if idx >= 0 else 0.0


@dataclass(frozen=True)
class AttackSpec:
    """Who is attacked, how, with what waveform, and when.

    ``targets`` are the victim vehicles whose *inbound* messages are
    falsified; the leader takes no V2V input and cannot be a target.
    ``message_fields`` selects which fields are offset in message-level mode
    (all three by default -- a consistent forged kinematic state).
    ``xi_max`` clamps the signal magnitude: the attacker stays bounded to
    evade trivial plausibility checks.
    """

    targets: frozenset[int] = frozenset({3})
    mode: str = "message-level"
    signal: AttackSignal = field(default_factory=AttackSignal)
    xi_max: float = 2.0
    window: tuple[float, float] = (0.0, math.inf)
    message_fields: frozenset[str] = frozenset(MESSAGE_FIELDS)

    def __post_init__(self):
        object.__setattr__(self, "targets", frozenset(int(i) for i in self.targets))
        object.__setattr__(self, "message_fields", frozenset(self.message_fields))
        if 1 in self.targets:
            raise ValueError("the leader takes no V2V input and cannot be attacked")
        if any(i < 1 for i in self.targets):
            raise ValueError("vehicle indices are 1-based")
        if self.mode not in ("lumped-acceleration", "message-level"):
            raise ValueError(f"unknown attack mode {self.mode!r}")
        if self.xi_max < 0:
            raise ValueError("xi_max must be nonnegative")
        if not self.window[1] > self.window[0]:
            raise ValueError("attack window must have positive length")
        unknown = self.message_fields - set(MESSAGE_FIELDS)
        if unknown:
            raise ValueError(f"unknown message fields {sorted(unknown)}")

    def active(self, t: float) -> bool:
        return self.window[0] <= t < self.window[1]


def attack_signal(spec: AttackSpec, t: float) -> float:
    """xi(t): the disturbance value, zero outside the window, clamped inside."""
    if not spec.active(t):
        return 0.0
    raw = spec.signal.value(t - spec.window[0], t)
    return max(-spec.xi_max, min(spec.xi_max, raw))


def falsify_message(msg: NeighborMessage, spec: AttackSpec, t: float,
                    rng=None) -> NeighborMessage:
    """Forge a message bound for a victim by offsetting the selected fields.

    The caller routes messages: only traffic inbound to a vehicle in
    ``spec.targets`` should pass through here.  Outside the attack window (or
    in lumped mode, which never touches message content) messages pass
    unchanged.  ``rng`` is accepted for waveforms that may need randomness;
    the scripted kinds are deterministic and ignore it.
    """
    if spec.mode != "message-level" or not spec.active(t):
        return msg
    offset = attack_signal(spec, t)
    changes = {}
    if "position" in spec.message_fields:
        changes["position"] = msg.position + offset
    if "velocity" in spec.message_fields:
        changes["velocity"] = msg.velocity + offset
    if "acceleration" in spec.message_fields:
        changes["acceleration"] = msg.acceleration + offset
    return replace(msg, **changes) if changes else msg


@dataclass(frozen=True)
class DetectorModel:
    """Confusion-matrix detector: report probabilities under each ground truth."""

    p_report_given_attack: float = 0.7
    p_report_given_benign: float = 0.1
    sampling_period: float = 0.1

    def __post_init__(self):
        for name in ("p_report_given_attack", "p_report_given_benign"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name} must be a probability, got {p}")
        if not self.sampling_period > 0:
            raise ValueError("sampling_period must be positive")


@dataclass(frozen=True)
class DetectorReport:
    """One detector output: 'r' (attack reported) or 'nr', with its timestamp."""

    value: str
    timestamp: float

    @property
    def reported(self) -> bool:
        return self.value == REPORT_ATTACK


def detector_sample(attack_active: bool, model: DetectorModel, rng,
                    timestamp: float = 0.0) -> DetectorReport:
    """Draw one report from the confusion matrix with the caller's generator."""
    p = model.p_report_given_attack if attack_active else model.p_report_given_benign
    value = REPORT_ATTACK if rng.random() < p else REPORT_NONE
    return DetectorReport(value=value, timestamp=timestamp)
