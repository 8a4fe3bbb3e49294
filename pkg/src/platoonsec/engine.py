"""Simulation engine: the switched closed-loop platoon under attack.

One run integrates the platoon with a fixed-step fourth-order scheme while a
supervisor drives each follower's controller mode.  Three rules apply, in
strict priority order:

1. safety surface -- a follower whose spacing error magnitude reaches
   epsilon_max is forced to radar-only control (and latched there until the
   error re-enters a hysteresis band);
2. dwell hold -- once the cooperative controller is (re)activated it must
   stay active for the certificate-derived minimum dwell time, recomputed
   from the state at every activation;
3. game policy -- otherwise, at each decision instant the supervisor samples
   "downgrade / don't" from the equilibrium behavioral strategy conditioned
   on the latest detector report.

Switching scope is configurable: ``per-vehicle`` gives every follower its own
detector stream and supervisor (a distributed deployment); ``platoon`` runs
one supervisor with a single switching signal applied to all followers,
which is the setting the dwell-time guarantee speaks about.  The safety
surface is always per vehicle, evaluated every integrator step.

Discontinuities (attack window edges, leader profile pulses, mode changes)
take effect only at step boundaries, so every integration step sees a smooth
vector field and the integrator keeps its order.  Attack injection follows
the communication structure: falsified content can only influence a victim
while it runs the communication-based controller; radar-only followers are
immune by construction.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .control import (ACC, CACC, AccGains, CaccGains, DEFAULT_ACC_GAINS,
                      DEFAULT_CACC_GAINS, acc_accel, assemble_closed_loop,
                      cacc_accel)
from .game import BehavioralStrategy, GameSpec, DEFAULT_GAME, equilibrium_strategy
from .platoon import (NeighborMessage, PlatoonConfig, RadarMeasurement,
                      VehicleState)
from .stability import (LyapunovCandidate, LyapunovConstants, find_common_lyapunov,
                        lyapunov_constants, min_dwell_time)
from .threat import (AttackSpec, DetectorModel, REPORT_NONE,
                     attack_signal, detector_sample, falsify_message)

__all__ = [
    "PLATOON_UNIT",
    "SwitchingConfig",
    "ScenarioConfig",
    "DwellState",
    "ModeEvent",
    "DecisionEvent",
    "ReportEvent",
    "CollisionInfo",
    "SimTrace",
    "TraceMetrics",
    "step_rk4",
    "switching_decision",
    "commanded_accelerations",
    "run_scenario",
    "trace_metrics",
    "cacc_entry_values",
    "write_trace_csv",
    "write_metrics_json",
]

PLATOON_UNIT = 0  # unit id used for platoon-scope events (vehicles are 1-based)

_CAUSE_INITIAL = "initial"
_CAUSE_GAME = "game"
_CAUSE_DWELL = "dwell-hold"
_CAUSE_SAFETY = "safety-surface"
_CAUSE_RELEASE = "safety-release"


@dataclass(frozen=True)
class SwitchingConfig:
    """Supervisor behavior: cadence, scope, dwell enforcement, hysteresis.

    ``policy_override`` replaces the game equilibrium with fixed downgrade
    probabilities (given report, given no report) -- useful for ablations
    such as "never switch" or "always radar".  ``enabled=False`` disables the
    supervisor entirely (no safety surface, no game): the platoon stays in
    ``initial_mode``.
    """

    enabled: bool = True
    decision_period: float = 1.0
    scope: str = "per-vehicle"
    dwell_enforced: bool = True
    hysteresis_release: float = 0.5
    policy_override: tuple[float, float] | None = None
    initial_mode: str = CACC

    def __post_init__(self):
        if self.decision_period <= 0:
            raise ValueError("decision_period must be positive")
        if self.scope not in ("per-vehicle", "platoon"):
            raise ValueError(f"unknown switching scope {self.scope!r}")
        if not 0.0 <= self.hysteresis_release <= 1.0:
            raise ValueError("hysteresis_release is a fraction of epsilon_max")
        if self.policy_override is not None:
            pr, pnr = self.policy_override
            if not (0.0 <= pr <= 1.0 and 0.0 <= pnr <= 1.0):
                raise ValueError("policy_override entries must be probabilities")
        if self.initial_mode not in (CACC, ACC):
            raise ValueError(f"unknown initial mode {self.initial_mode!r}")


@dataclass(frozen=True)
class ScenarioConfig:
    """Everything one deterministic run needs."""

    platoon: PlatoonConfig
    cacc_gains: CaccGains = DEFAULT_CACC_GAINS
    acc_gains: AccGains = DEFAULT_ACC_GAINS
    lyapunov: LyapunovCandidate | None = None  # None: search for a certificate
    attack: AttackSpec | None = None
    detector: DetectorModel = field(default_factory=DetectorModel)
    game: GameSpec = DEFAULT_GAME
    switching: SwitchingConfig = field(default_factory=SwitchingConfig)
    step: float = 0.01
    duration: float = 60.0
    seed: int = 0
    gap_offsets: tuple[float, ...] = ()

    def __post_init__(self):
        if self.step <= 0:
            raise ValueError("integrator step must be positive")
        if self.switching.decision_period < self.step:
            raise ValueError("decision_period must be at least one integrator step")
        if self.duration <= 0:
            raise ValueError("duration must be positive")
        if self.gap_offsets and len(self.gap_offsets) != self.platoon.vehicle_count - 1:
            raise ValueError("gap_offsets needs one entry per follower")
        if self.attack is not None:
            bad = [i for i in self.attack.targets if i > self.platoon.vehicle_count]
            if bad:
                raise ValueError(f"attack targets {bad} exceed the platoon size")


@dataclass
class DwellState:
    """Mutable supervisor state for one switching unit."""

    mode: str
    entry_time: float = 0.0
    required: float = 0.0
    constants: LyapunovConstants | None = None

    def enter(self, mode: str, now: float, error_state=None, dwell_enforced: bool = True):
        self.mode = mode
        self.entry_time = now
        if mode == CACC and dwell_enforced and self.constants is not None \
                and error_state is not None:
            self.required = min_dwell_time(error_state, error_state, self.constants).enforced
        else:
            self.required = 0.0

    def holding(self, now: float) -> bool:
        return self.mode == CACC and (now - self.entry_time) < self.required


@dataclass(frozen=True)
class ModeEvent:
    time: float
    vehicle: int
    mode: str
    cause: str


@dataclass(frozen=True)
class DecisionEvent:
    time: float
    unit: int
    report: str
    mode: str
    cause: str


@dataclass(frozen=True)
class ReportEvent:
    time: float
    unit: int
    value: str


@dataclass(frozen=True)
class CollisionInfo:
    time: float
    follower: int
    gap: float


@dataclass
class SimTrace:
    """Time-indexed record of one run; all series share the time grid."""

    times: np.ndarray
    positions: np.ndarray
    velocities: np.ndarray
    commands: np.ndarray
    modes: np.ndarray  # follower columns, "CACC"/"ACC" codes 0/1
    spacing_errors: np.ndarray
    attack_xi: np.ndarray
    reports: tuple[ReportEvent, ...]
    decisions: tuple[DecisionEvent, ...]
    mode_events: tuple[ModeEvent, ...]
    collision: CollisionInfo | None
    config: ScenarioConfig

    def mode_trace(self, vehicle: int) -> tuple[ModeEvent, ...]:
        """Per-vehicle (timestamp, mode, cause) event sequence."""
        return tuple(e for e in self.mode_events if e.vehicle == vehicle)


@dataclass(frozen=True)
class TraceMetrics:
    """Summary statistics of a run."""

    min_spacing: float
    sup_spacing_errors: tuple[float, ...]
    mode_occupancy: tuple[dict, ...]
    collision: bool
    collision_time: float | None
    string_stable: bool
    string_vacuous: bool
    tol: float

    def as_dict(self) -> dict:
        return {
            "min_spacing": self.min_spacing,
            "sup_spacing_errors": list(self.sup_spacing_errors),
            "mode_occupancy": list(self.mode_occupancy),
            "collision": self.collision,
            "collision_time": self.collision_time,
            "string_stable": self.string_stable,
            "string_vacuous": self.string_vacuous,
            "tol": self.tol,
        }


def step_rk4(state, derivative_fn, h: float):
    """One classical Runge-Kutta step on an array-valued state.

    The vector field must be smooth over the step; the engine guarantees
    that by freezing modes, attack values, and the leader profile at the
    step's left endpoint.  Aborts on non-finite results rather than letting
    divergence propagate silently.
    """
    if h <= 0:
        raise ValueError("step size must be positive")
    state = np.asarray(state, dtype=float)
    k1 = np.asarray(derivative_fn(state))
    k2 = np.asarray(derivative_fn(state + 0.5 * h * k1))
    k3 = np.asarray(derivative_fn(state + 0.5 * h * k2))
    k4 = np.asarray(derivative_fn(state + h * k3))
    out = state + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(out)):
        raise FloatingPointError("integration produced a non-finite state")
    return out


def switching_decision(vehicle, spacing_error, report, equilibrium, dwell_state,
                       config, rng, now: float = 0.0, error_rate: float = 0.0,
                       entry_state=None):
    """Mode for one switching unit at a decision instant, with its cause.

    Priority: safety surface (|eps| >= epsilon_max forces radar-only), then
    the dwell hold on an active cooperative interval, then a sample from the
    downgrade policy conditioned on the report.  On a transition into the
    cooperative mode the required dwell is recomputed from the current error
    state -- (spacing_error, error_rate) unless the caller supplies a
    platoon-level ``entry_state`` -- and the online bound estimates the next
    switching state by the current one.  Returns (mode, cause) and updates
    ``dwell_state``.
    """
    eps_max = config.platoon.epsilon_max
    sw = config.switching
    if abs(spacing_error) >= eps_max:
        if dwell_state.mode != ACC:
            dwell_state.enter(ACC, now)
        return ACC, _CAUSE_SAFETY
    if sw.dwell_enforced and dwell_state.holding(now):
        return CACC, _CAUSE_DWELL
    if sw.policy_override is not None:
        p_acc = sw.policy_override[0] if report == "r" else sw.policy_override[1]
    else:
        p_acc = float(equilibrium.defender_p_downgrade_given_r if report == "r"
                      else equilibrium.defender_p_downgrade_given_nr)
    mode = ACC if rng.random() < p_acc else CACC
    if mode != dwell_state.mode:
        dwell_state.enter(mode, now,
                          error_state=entry_state or (spacing_error, error_rate),
                          dwell_enforced=sw.dwell_enforced)
    return mode, _CAUSE_GAME


def _resolve_certificate(config: ScenarioConfig):
    """The (P, worst-case constants) pair used for dwell enforcement."""
    A_list = [assemble_closed_loop(CACC, config.cacc_gains).A,
              assemble_closed_loop(ACC, config.acc_gains).A]
    P = config.lyapunov
    if P is None:
        P = find_common_lyapunov(A_list)
        if P is None and config.switching.dwell_enforced and config.switching.enabled:
            raise ValueError("no common Lyapunov certificate found; supply one "
                             "explicitly or disable dwell enforcement")
    if P is None:
        return None, None
    constants = min(
        (lyapunov_constants(P, A) for A in A_list),
        key=lambda c: c.lam,
    )
    return P, constants


def run_scenario(config: ScenarioConfig) -> SimTrace:
    """Integrate one scenario deterministically.

    The returned trace records every state sample, every detector report,
    every supervisor decision with its cause, and every mode change.  The
    run ends early with a collision marker if any follower's front-to-rear
    gap closes to the vehicle length.
    """
    config.cacc_gains.validate()
    config.acc_gains.validate()
    platoon = config.platoon
    n = platoon.vehicle_count
    L = platoon.desired_gap
    h = config.step
    steps = max(1, int(round(config.duration / h)))
    dec_every = max(1, int(round(config.switching.decision_period / h)))
    det_every = max(1, int(round(config.detector.sampling_period / h)))

    _, constants = _resolve_certificate(config)

    if config.switching.enabled and config.switching.policy_override is None:
        equilibrium = equilibrium_strategy(config.game)
    else:
        equilibrium = BehavioralStrategy(None, Fraction(0), Fraction(0))

    seq = np.random.SeedSequence(config.seed)
    detector_rng, decision_rng = [np.random.default_rng(s) for s in seq.spawn(2)]

    # state arrays (0-based: column i is vehicle i+1)
    pos = np.empty(n)
    vel = np.full(n, platoon.leader_profile.initial_velocity, dtype=float)
    pos[0] = 0.0
    offsets = config.gap_offsets or (0.0,) * (n - 1)
    for i in range(1, n):
        pos[i] = pos[i - 1] - L + offsets[i - 1]

    per_vehicle = config.switching.scope == "per-vehicle"
    unit_ids = tuple(range(2, n + 1)) if per_vehicle else (PLATOON_UNIT,)
    units = {u: DwellState(config.switching.initial_mode, constants=constants)
             for u in unit_ids}
    latest_report = {u: REPORT_NONE for u in unit_ids}
    latched = np.zeros(n, dtype=bool)  # per-follower safety latch (leader unused)

    attack = config.attack
    cacc = config.cacc_gains
    acc = config.acc_gains

    times = np.empty(steps + 1)
    positions = np.empty((steps + 1, n))
    velocities = np.empty((steps + 1, n))
    commands = np.empty((steps + 1, n))
    modes_grid = np.empty((steps + 1, n - 1), dtype=np.uint8)
    eps_grid = np.empty((steps + 1, n - 1))
    xi_grid = np.empty(steps + 1)

    reports: list[ReportEvent] = []
    decisions: list[DecisionEvent] = []
    mode_events: list[ModeEvent] = [
        ModeEvent(0.0, i, config.switching.initial_mode, _CAUSE_INITIAL)
        for i in range(2, n + 1)
    ]
    collision: CollisionInfo | None = None

    def effective_modes() -> np.ndarray:
        """uint8 mode per follower column (0 = cooperative, 1 = radar-only)."""
        out = np.zeros(n - 1, dtype=np.uint8)
        for i in range(2, n + 1):
            unit = units[i if per_vehicle else PLATOON_UNIT]
            forced = latched[i - 1]
            out[i - 2] = 1 if (forced or unit.mode == ACC) else 0
        return out

    def unit_attacked(unit: int, t: float) -> bool:
        if attack is None or not attack.active(t):
            return False
        if unit == PLATOON_UNIT:
            return True
        return unit in attack.targets

    prev_eff = effective_modes()

    def emit_mode_changes(t, new_eff, cause_map):
        nonlocal prev_eff
        for idx in np.nonzero(new_eff != prev_eff)[0]:
            vehicle = idx + 2
            mode = ACC if new_eff[idx] else CACC
            mode_events.append(ModeEvent(t, vehicle, mode, cause_map.get(vehicle, _CAUSE_GAME)))
        prev_eff = new_eff

    lumped = attack is not None and attack.mode == "lumped-acceleration"
    offset_fields = (attack.message_fields
                     if attack is not None and attack.mode == "message-level"
                     else frozenset())
    off_x = "position" in offset_fields
    off_v = "velocity" in offset_fields
    off_a = "acceleration" in offset_fields

    # Within one step every gated quantity (modes, attack value, leader
    # acceleration) is frozen, so the closed loop is affine: xdot = M x + b
    # with x = (positions, velocities).  The classical fourth-order step on
    # an affine field collapses to x' = Phi x + Psi b with the degree-4
    # Taylor polynomials below, so integration is one cached matrix-vector
    # product per step instead of four controller-chain evaluations.
    ident = np.eye(2 * n)
    step_maps: dict[bytes, tuple] = {}

    def _accel_rows(pattern) -> np.ndarray:
        """Linear part of the physical-acceleration chain, front to back.

        Row i gives follower i+1's acceleration as a functional of the full
        state; the cooperative feed-forward term chains through the
        predecessor's row, whatever that vehicle's own mode is.
        """
        R = np.zeros((n, 2 * n))
        for i in range(1, n):
            row = R[i]
            if pattern[i - 1] == 0:  # cooperative
                row[i] = cacc.alpha_pred + cacc.alpha_lead
                row[i - 1] -= cacc.alpha_pred
                row[0] -= cacc.alpha_lead
                row[n + i] = cacc.beta_pred + cacc.beta_lead
                row[n + i - 1] -= cacc.beta_pred
                row[n] -= cacc.beta_lead
                row += cacc.gamma_pred * R[i - 1]
            else:  # radar-only
                row[i] = acc.alpha
                row[i - 1] -= acc.alpha
                row[n + i] = acc.beta
                row[n + i - 1] -= acc.beta
        return R

    def _step_map(pattern):
        key = pattern.tobytes()
        cached = step_maps.get(key)
        if cached is None:
            R = _accel_rows(pattern)
            M = np.zeros((2 * n, 2 * n))
            M[:n, n:] = np.eye(n)
            M[n:, :] = R
            M2 = M @ M
            M3 = M2 @ M
            M4 = M3 @ M
            phi = (ident + h * M + (h * h / 2.0) * M2
                   + (h ** 3 / 6.0) * M3 + (h ** 4 / 24.0) * M4)
            psi = h * (ident + (h / 2.0) * M + (h * h / 6.0) * M2
                       + (h ** 3 / 24.0) * M3)
            # b is zero on the position block, so only Psi's velocity columns act
            cached = (R, phi, np.ascontiguousarray(psi[:, n:]))
            step_maps[key] = cached
        return cached

    def _accel_consts(pattern, lead_acc, xi, hit) -> np.ndarray:
        """Constant part of the chain for the step's frozen fields.

        Message falsification adds the attack value to the selected fields of
        both inbound messages of each victim; a lumped-disturbance attack
        adds it to the victim's physical acceleration instead.  Either way
        the contribution is constant over the step.
        """
        g = np.empty(n)
        g[0] = lead_acc
        for i in range(1, n):
            if pattern[i - 1] == 0:  # cooperative
                if hit[i + 1]:
                    ox = xi if off_x else 0.0
                    ov = xi if off_v else 0.0
                    oa = xi if off_a else 0.0
                else:
                    ox = ov = oa = 0.0
                g[i] = (cacc.alpha_pred * (L - ox) - cacc.beta_pred * ov
                        + cacc.gamma_pred * (g[i - 1] + oa)
                        + cacc.alpha_lead * (i * L - ox) - cacc.beta_lead * ov
                        + cacc.gamma_lead * (lead_acc + oa))
                if lumped and hit[i + 1]:
                    g[i] += xi
            else:  # radar-only: immune to transmitted content
                g[i] = acc.alpha * L
        return g

    t = 0.0
    k = 0
    while True:
        final = (k == steps) or (collision is not None)
        eps_now = pos[1:] - pos[:-1] + L
        deps_now = vel[1:] - vel[:-1]

        if config.switching.enabled and not final:
            # 1. detector sampling (left endpoint of the step)
            if k % det_every == 0:
                for unit in unit_ids:
                    rep = detector_sample(unit_attacked(unit, t), config.detector,
                                          detector_rng, timestamp=t)
                    latest_report[unit] = rep.value
                    reports.append(ReportEvent(t, unit, rep.value))

            # 2. per-step safety surface with hysteresis
            cause_map = {}
            changed = False
            for i in range(2, n + 1):
                e = abs(eps_now[i - 2])
                if not latched[i - 1] and e >= platoon.epsilon_max:
                    latched[i - 1] = True
                    cause_map[i] = _CAUSE_SAFETY
                    changed = True
                elif latched[i - 1] and e <= config.switching.hysteresis_release * platoon.epsilon_max:
                    latched[i - 1] = False
                    cause_map[i] = _CAUSE_RELEASE
                    changed = True
                    unit = units[i if per_vehicle else PLATOON_UNIT]
                    if unit.mode == CACC:
                        # re-entering the cooperative mode: restart its dwell
                        unit.enter(CACC, t, error_state=(eps_now[i - 2], deps_now[i - 2]),
                                   dwell_enforced=config.switching.dwell_enforced)
            if changed:
                emit_mode_changes(t, effective_modes(), cause_map)

            # 3. game/dwell decisions at the decision cadence
            if k > 0 and k % dec_every == 0:
                cause_map = {}
                for unit in unit_ids:
                    state = units[unit]
                    if unit == PLATOON_UNIT:
                        worst = int(np.argmax(np.abs(eps_now)))
                        s_err = float(eps_now[worst])
                        s_rate = float(deps_now[worst])
                        z = float(np.max(np.hypot(eps_now, deps_now)))
                        entry = (z, 0.0)
                    else:
                        s_err = float(eps_now[unit - 2])
                        s_rate = float(deps_now[unit - 2])
                        entry = None
                    mode, cause = switching_decision(
                        unit, s_err, latest_report[unit], equilibrium, state,
                        config, decision_rng, now=t, error_rate=s_rate,
                        entry_state=entry,
                    )
                    decisions.append(DecisionEvent(t, unit, latest_report[unit], mode, cause))
                    if unit == PLATOON_UNIT:
                        for i in range(2, n + 1):
                            cause_map[i] = cause
                    else:
                        cause_map[unit] = cause
                emit_mode_changes(t, effective_modes(), cause_map)

        frozen = prev_eff
        lead_acc = platoon.leader_profile.acceleration(t)
        xi = attack_signal(attack, t) if attack is not None else 0.0
        hit = np.zeros(n + 2, dtype=bool)
        if attack is not None and attack.active(t):
            for i in attack.targets:
                hit[i] = True

        R, phi, psi_g = _step_map(frozen)
        g = _accel_consts(frozen, lead_acc, xi, hit)
        x = np.concatenate((pos, vel))
        u_now = R @ x + g
        if lumped and xi != 0.0:
            for i in range(1, n):
                if hit[i + 1] and frozen[i - 1] == 0:
                    u_now[i] -= xi  # command excludes the physical disturbance

        times[k] = t
        positions[k] = pos
        velocities[k] = vel
        commands[k] = u_now
        modes_grid[k] = frozen
        eps_grid[k] = eps_now
        xi_grid[k] = xi

        if final:
            break

        x = phi @ x + psi_g @ g
        if not np.all(np.isfinite(x)):
            raise FloatingPointError("integration produced a non-finite state")
        pos = x[:n]
        vel = x[n:]
        k += 1
        t = k * h

        gaps = pos[:-1] - pos[1:]
        tight = np.nonzero(gaps <= platoon.vehicle_length)[0]
        if tight.size:
            worst = int(tight[np.argmin(gaps[tight])])
            collision = CollisionInfo(time=t, follower=worst + 2, gap=float(gaps[worst]))

    last = k + 1
    return SimTrace(
        times=times[:last].copy(),
        positions=positions[:last].copy(),
        velocities=velocities[:last].copy(),
        commands=commands[:last].copy(),
        modes=modes_grid[:last].copy(),
        spacing_errors=eps_grid[:last].copy(),
        attack_xi=xi_grid[:last].copy(),
        reports=tuple(reports),
        decisions=tuple(decisions),
        mode_events=tuple(mode_events),
        collision=collision,
        config=config,
    )


def commanded_accelerations(config: ScenarioConfig, pos, vel, modes, t: float):
    """Controller evaluation through the message-object interface.

    Builds each follower's inbound traffic explicitly -- predecessor and
    leader messages (falsified when the attack targets the receiver), or a
    radar measurement -- and chains transmitted accelerations front to back.
    ``run_scenario`` integrates an algebraically identical affine form; this
    is the readable reference the property tests hold it against.

    ``modes`` is the follower mode row (0 cooperative, 1 radar-only).
    Returns (commands, physical accelerations), leader entries included.
    """
    plat = config.platoon
    n = plat.vehicle_count
    L = plat.desired_gap
    attack = config.attack
    lumped = attack is not None and attack.mode == "lumped-acceleration"
    xi = attack_signal(attack, t) if attack is not None else 0.0
    u = np.empty(n)
    dv = np.empty(n)
    u[0] = dv[0] = plat.leader_profile.acceleration(t)
    for i in range(2, n + 1):
        own = VehicleState(position=float(pos[i - 1]), velocity=float(vel[i - 1]))
        targeted = attack is not None and i in attack.targets
        if modes[i - 2] == 0:
            pred = NeighborMessage(position=float(pos[i - 2]), velocity=float(vel[i - 2]),
                                   acceleration=float(dv[i - 2]), sender_id=i - 1)
            lead = NeighborMessage(position=float(pos[0]), velocity=float(vel[0]),
                                   acceleration=float(dv[0]), sender_id=1)
            if targeted:
                pred = falsify_message(pred, attack, t)
                lead = falsify_message(lead, attack, t)
            u[i - 1] = cacc_accel(i, own, pred, lead, config.cacc_gains, L)
            dv[i - 1] = u[i - 1] + (xi if (lumped and targeted and attack.active(t))
                                    else 0.0)
        else:
            radar = RadarMeasurement(position=float(pos[i - 2]),
                                     velocity=float(vel[i - 2]))
            u[i - 1] = acc_accel(i, own, radar, config.acc_gains, L)
            dv[i - 1] = u[i - 1]
    return u, dv


def trace_metrics(trace: SimTrace, tol: float = 1e-6) -> TraceMetrics:
    """Exact max/min summaries over the stored grid plus the string verdict.

    The string-stability verdict checks the hop-wise sup-norm ordering
    sup|eps_i| <= sup|eps_{i-1}| + tol for i = 3..N.  A run whose errors
    never exceed tol is a vacuous pass (nothing propagated to compare).
    """
    if trace.times.size == 0:
        raise ValueError("empty trace")
    gaps = trace.positions[:, :-1] - trace.positions[:, 1:]
    sups = tuple(float(s) for s in np.max(np.abs(trace.spacing_errors), axis=0))
    occupancy = tuple(
        {
            CACC: float(np.mean(trace.modes[:, i] == 0)),
            ACC: float(np.mean(trace.modes[:, i] == 1)),
        }
        for i in range(trace.modes.shape[1])
    )
    vacuous = all(s <= tol for s in sups)
    stable = vacuous or all(sups[i] <= sups[i - 1] + tol for i in range(1, len(sups)))
    return TraceMetrics(
        min_spacing=float(np.min(gaps)),
        sup_spacing_errors=sups,
        mode_occupancy=occupancy,
        collision=trace.collision is not None,
        collision_time=None if trace.collision is None else trace.collision.time,
        string_stable=stable,
        string_vacuous=vacuous,
        tol=tol,
    )


def cacc_entry_values(trace: SimTrace, P) -> list[tuple[float, np.ndarray]]:
    """Per-follower V(z) = z'Pz at each cooperative (re)activation instant.

    z is the follower's spacing-error state (eps, eps_rate) sampled on the
    stored grid at the event time.  Activation events are mode changes into
    the cooperative mode caused by the supervisor (not the initial mode).
    """
    P = P.as_matrix() if isinstance(P, LyapunovCandidate) else np.asarray(P, float)
    h = float(trace.times[1] - trace.times[0]) if trace.times.size > 1 else 1.0
    entry_times = sorted({
        e.time for e in trace.mode_events
        if e.mode == CACC and e.cause in (_CAUSE_GAME, _CAUSE_RELEASE)
    })
    out = []
    for t in entry_times:
        idx = int(round(t / h))
        if idx >= trace.times.size:
            continue
        eps = trace.spacing_errors[idx]
        deps = trace.velocities[idx, 1:] - trace.velocities[idx, :-1]
        v = (P[0, 0] * eps * eps + 2.0 * P[0, 1] * eps * deps
             + P[1, 1] * deps * deps)
        out.append((float(trace.times[idx]), v))
    return out


_CSV_FLOAT = repr  # shortest round-trip representation: byte-stable given a seed


def write_trace_csv(trace: SimTrace, path):
    """One row per time step.

    Column order: t; per vehicle i = 1..N: x{i}, v{i}, u{i}; per follower
    i = 2..N: mode{i}; per follower i = 2..N: eps{i}; xi.
    """
    n = trace.positions.shape[1]
    header = ["t"]
    for i in range(1, n + 1):
        header += [f"x{i}", f"v{i}", f"u{i}"]
    header += [f"mode{i}" for i in range(2, n + 1)]
    header += [f"eps{i}" for i in range(2, n + 1)]
    header.append("xi")
    lines = [",".join(header)]
    mode_names = (CACC, ACC)
    for k in range(trace.times.size):
        row = [_CSV_FLOAT(float(trace.times[k]))]
        for i in range(n):
            row += [_CSV_FLOAT(float(trace.positions[k, i])),
                    _CSV_FLOAT(float(trace.velocities[k, i])),
                    _CSV_FLOAT(float(trace.commands[k, i]))]
        row += [mode_names[m] for m in trace.modes[k]]
        row += [_CSV_FLOAT(float(e)) for e in trace.spacing_errors[k]]
        row.append(_CSV_FLOAT(float(trace.attack_xi[k])))
        lines.append(",".join(row))
    with open(path, "w") as f:
        f.write("\n".join(lines) + "\n")


def write_metrics_json(metrics: TraceMetrics, path, extra: dict | None = None):
    payload = metrics.as_dict()
    if extra:
        payload.update(extra)
    with open(path, "w") as f:
        json.dump(payload, f, indent=2, sort_keys=True)
        f.write("\n")
