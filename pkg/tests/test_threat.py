"""Attack waveforms, message falsification, and the stochastic detector."""

import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from platoonsec.platoon import NeighborMessage
from platoonsec.threat import (MESSAGE_FIELDS, REPORT_ATTACK, REPORT_NONE,
                               AttackSignal, AttackSpec, DetectorModel,
                               attack_signal, detector_sample, falsify_message)

MSG = NeighborMessage(position=120.0, velocity=20.0, acceleration=0.3,
                      sender_id=2)


# ----------------------------------------------------------------- waveforms

def test_constant_signal():
    sig = AttackSignal(kind="constant", amplitude=1.5)
    assert sig.value(0.0, 10.0) == 1.5
    assert sig.value(99.0, 200.0) == 1.5


def test_ramp_signal_uses_window_relative_time():
    sig = AttackSignal(kind="ramp", rate=0.5)
    assert sig.value(0.0, 30.0) == 0.0
    assert sig.value(4.0, 34.0) == 2.0


def test_sinusoid_signal():
    sig = AttackSignal(kind="sinusoid", amplitude=2.0, frequency=0.25, phase=0.0)
    assert sig.value(1.0, 0.0) == pytest.approx(2.0)  # quarter period
    assert sig.value(2.0, 0.0) == pytest.approx(0.0, abs=1e-12)


def test_table_signal_zero_order_hold():
    sig = AttackSignal(kind="table", times=(1.0, 3.0, 5.0), values=(0.5, -0.5, 2.0))
    assert sig.value(0.0, 0.0) == 0.0  # before the first breakpoint
    assert sig.value(0.0, 1.0) == 0.5
    assert sig.value(0.0, 2.999) == 0.5
    assert sig.value(0.0, 3.0) == -0.5
    assert sig.value(0.0, 100.0) == 2.0


@pytest.mark.parametrize("kwargs", [
    dict(kind="square"),
    dict(kind="table", times=(1.0,), values=()),
    dict(kind="table", times=(), values=()),
    dict(kind="table", times=(2.0, 1.0), values=(0.0, 0.0)),
])
def test_signal_validation(kwargs):
    with pytest.raises(ValueError):
        AttackSignal(**kwargs)


# ------------------------------------------------------------ window / clamp

def test_window_is_half_open():
    spec = AttackSpec(targets={3}, window=(10.0, 40.0))
    assert not spec.active(9.999)
    assert spec.active(10.0)
    assert spec.active(39.999)
    assert not spec.active(40.0)


def test_signal_zero_outside_window():
    spec = AttackSpec(targets={3}, window=(10.0, 40.0),
                      signal=AttackSignal(kind="constant", amplitude=2.0))
    assert attack_signal(spec, 9.0) == 0.0
    assert attack_signal(spec, 40.0) == 0.0
    assert attack_signal(spec, 10.0) == 2.0


def test_signal_clamped_at_xi_max():
    spec = AttackSpec(targets={2}, xi_max=1.0, window=(0.0, 100.0),
                      signal=AttackSignal(kind="ramp", rate=1.0))
    assert attack_signal(spec, 0.5) == 0.5
    assert attack_signal(spec, 50.0) == 1.0  # clamped
    down = dataclasses.replace(spec, signal=AttackSignal(kind="ramp", rate=-1.0))
    assert attack_signal(down, 50.0) == -1.0


@given(t=st.floats(-10.0, 110.0), xi_max=st.floats(0.0, 5.0))
def test_signal_bound_invariant(t, xi_max):
    spec = AttackSpec(targets={2}, xi_max=xi_max, window=(0.0, 100.0),
                      signal=AttackSignal(kind="sinusoid", amplitude=7.0,
                                          frequency=0.3))
    assert abs(attack_signal(spec, t)) <= xi_max


# --------------------------------------------------------------- validation

@pytest.mark.parametrize("kwargs", [
    dict(targets={1}),
    dict(targets={0}),
    dict(targets={-2}),
    dict(targets={3}, mode="replay"),
    dict(targets={3}, xi_max=-0.1),
    dict(targets={3}, window=(5.0, 5.0)),
    dict(targets={3}, window=(8.0, 2.0)),
    dict(targets={3}, message_fields={"jerk"}),
])
def test_spec_validation(kwargs):
    with pytest.raises(ValueError):
        AttackSpec(**kwargs)


def test_spec_normalizes_target_container():
    spec = AttackSpec(targets=[4, 2, 4])
    assert spec.targets == frozenset({2, 4})


# ------------------------------------------------------------- falsification

def test_falsify_offsets_all_fields_by_default():
    spec = AttackSpec(targets={3}, window=(0.0, 10.0),
                      signal=AttackSignal(kind="constant", amplitude=2.0))
    forged = falsify_message(MSG, spec, 1.0)
    assert forged.position == MSG.position + 2.0
    assert forged.velocity == MSG.velocity + 2.0
    assert forged.acceleration == MSG.acceleration + 2.0


def test_falsify_respects_field_selection():
    spec = AttackSpec(targets={3}, window=(0.0, 10.0),
                      message_fields={"velocity"},
                      signal=AttackSignal(kind="constant", amplitude=-1.0))
    forged = falsify_message(MSG, spec, 1.0)
    assert forged.position == MSG.position
    assert forged.velocity == MSG.velocity - 1.0
    assert forged.acceleration == MSG.acceleration


def test_falsify_passthrough_outside_window_and_in_lumped_mode():
    windowed = AttackSpec(targets={3}, window=(10.0, 20.0))
    assert falsify_message(MSG, windowed, 5.0) is MSG
    lumped = AttackSpec(targets={3}, mode="lumped-acceleration", window=(0.0, 20.0))
    assert falsify_message(MSG, lumped, 5.0) is MSG


def test_falsify_does_not_mutate_original():
    spec = AttackSpec(targets={3}, window=(0.0, 10.0))
    falsify_message(MSG, spec, 1.0)
    assert MSG.position == 120.0 and MSG.velocity == 20.0


@given(offset=st.floats(-2.0, 2.0))
def test_falsified_fields_shift_together(offset):
    """All-field forgery preserves inter-field differences: a consistent
    fake kinematic state, not independent noise per channel."""
    spec = AttackSpec(targets={2}, window=(0.0, 10.0), xi_max=2.0,
                      signal=AttackSignal(kind="constant", amplitude=offset))
    forged = falsify_message(MSG, spec, 3.0)
    assert forged.position - MSG.position == pytest.approx(
        forged.velocity - MSG.velocity)
    assert forged.velocity - MSG.velocity == pytest.approx(
        forged.acceleration - MSG.acceleration)


# ----------------------------------------------------------------- detector

def test_detector_default_probabilities():
    model = DetectorModel()
    assert model.p_report_given_attack == 0.7
    assert model.p_report_given_benign == 0.1


@pytest.mark.parametrize("kwargs", [
    dict(p_report_given_attack=1.2),
    dict(p_report_given_benign=-0.01),
    dict(sampling_period=0.0),
])
def test_detector_validation(kwargs):
    with pytest.raises(ValueError):
        DetectorModel(**kwargs)


def test_detector_report_flags():
    model = DetectorModel(p_report_given_attack=1.0, p_report_given_benign=0.0)
    rng = np.random.default_rng(0)
    hit = detector_sample(True, model, rng, timestamp=3.5)
    assert hit.value == REPORT_ATTACK and hit.reported and hit.timestamp == 3.5
    miss = detector_sample(False, model, rng)
    assert miss.value == REPORT_NONE and not miss.reported


def test_detector_frequencies_match_confusion_matrix():
    """10^4 draws per condition; empirical rates within 3 binomial sigma."""
    model = DetectorModel()
    rng = np.random.default_rng(42)
    n = 10_000
    for active, p in ((True, 0.7), (False, 0.1)):
        hits = sum(detector_sample(active, model, rng).reported for _ in range(n))
        sigma = math.sqrt(p * (1 - p) / n)
        assert abs(hits / n - p) < 3 * sigma


def test_detector_reproducible_with_seeded_generator():
    model = DetectorModel()
    a = [detector_sample(True, model, np.random.default_rng(7)).value
         for _ in range(5)]
    assert len(set(a)) == 1  # same seed, same draw


def test_message_fields_constant_is_complete():
    assert set(MESSAGE_FIELDS) == {"position", "velocity", "acceleration"}
