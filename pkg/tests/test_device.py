import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from memxbar.device import (
    DEFAULT_PULSES, MAX_DX, PUBLISHED, DeviceState, MemristorParams, apply_variation,
    characterize, current, device_current, device_step, drive, get_params, integrate,
    load_params_file, state_for_conductance,
)
from memxbar.errors import ConfigError

SILVER = get_params("silver")
TITANIA = get_params("titania")


def test_zero_voltage_gives_zero_current():
    assert device_current(DeviceState(0.7, SILVER), 0.0) == 0.0


def test_silver_current_closed_form():
    # a1 * x * sinh(b v) with a1 = 0.17, b = 0.05, x = 1, v = 0.1
    expected = 0.17 * math.sinh(0.05 * 0.1)
    assert expected == pytest.approx(8.5001e-4, rel=1e-4)
    assert device_current(DeviceState(1.0, SILVER), 0.1) == pytest.approx(expected, rel=1e-14)


@given(st.floats(0, 1), st.floats(0.001, 2.0))
def test_current_is_odd_when_a1_equals_a2(x, v):
    s = DeviceState(x, SILVER)
    assert device_current(s, -v) == pytest.approx(-device_current(s, v), rel=1e-12, abs=1e-300)


@pytest.mark.parametrize("x", [0.0, 0.3, 0.55, 1.0])
def test_inside_threshold_window_is_inert(x):
    s = device_step(DeviceState(x, SILVER), 0.15, 1e-3)
    assert s.x == x


@given(st.floats(-0.15, 0.16), st.floats(0, 1))
def test_drive_is_zero_inside_window(v, x):
    assert drive(np.array(v), SILVER.as_array()) == 0.0
    assert device_step(DeviceState(x, SILVER), v, 1e-3).x == x


def test_positive_pulse_raises_state():
    s = device_step(DeviceState(0.4, SILVER), 0.3, 1e-6)
    assert s.x > 0.4


def test_negative_pulse_lowers_state():
    s = device_step(DeviceState(0.6, SILVER), -0.3, 1e-6)
    assert s.x < 0.6


def test_state_clamps_at_one():
    s = device_step(DeviceState(1.0, SILVER), 2.0, 1.0)
    assert s.x == 1.0
    s = device_step(DeviceState(0.0, SILVER), -2.0, 1.0)
    assert s.x == 0.0


def test_titania_polarity_is_reversed():
    # eta = -1: a positive supra-threshold device voltage lowers the state
    assert TITANIA.eta == -1
    P = TITANIA.as_array()
    assert integrate(np.array([0.5]), np.array([0.8]), 1e-4, P)[0] < 0.5
    assert integrate(np.array([0.5]), np.array([-0.8]), 1e-4, P)[0] > 0.5


@pytest.mark.parametrize("bad", [float("nan"), float("inf")])
def test_step_rejects_non_finite_voltage(bad):
    with pytest.raises(ValueError):
        device_step(DeviceState(0.5, SILVER), bad, 1e-6)


def test_step_rejects_non_positive_dt():
    with pytest.raises(ValueError):
        device_step(DeviceState(0.5, SILVER), 0.3, 0.0)


def test_substeps_bound_state_change():
    # a huge step is split so no sub-step moves x by more than MAX_DX;
    # the result then matches a manually refined integration
    P = SILVER.as_array()
    coarse = integrate(np.array([0.4]), np.array([0.25]), 2e-3, P)
    fine = np.array([0.4])
    for _ in range(2000):
        fine = integrate(fine, np.array([0.25]), 1e-6, P, max_dx=MAX_DX / 10)
    assert coarse[0] == pytest.approx(fine[0], abs=0.02)


def test_state_for_conductance_round_trip():
    s = DeviceState(state_for_conductance(SILVER, 4.78e-3), SILVER)
    assert s.conductance == pytest.approx(4.78e-3, rel=1e-12)


def test_params_validation():
    with pytest.raises(ConfigError):
        MemristorParams(**{**SILVER.__dict__, "Vp": -0.1})


def test_variation_table_values():
    dec = apply_variation(SILVER, "decreased", "silver")
    assert (dec.a1, dec.Ap, dec.Vp) == (0.153, 2680, 0.104848)
    inc = apply_variation(TITANIA, "increased", "titania")
    assert (inc.a1, inc.Ap, inc.Vn) == (1.54, 32.16, 0.60256)
    assert inc.eta == TITANIA.eta


@pytest.mark.parametrize("direction", [None, "none"])
def test_no_variation_is_identity(direction):
    assert apply_variation(SILVER, direction, "silver") == SILVER


def test_unknown_variation_rejected():
    with pytest.raises(ConfigError):
        apply_variation(SILVER, "sideways", "silver")


def test_params_file(tmp_path):
    p = tmp_path / "dev.ini"
    p.write_text("model = titania\nAp = 20\n")
    got = load_params_file(p)
    assert got.Ap == 20.0 and got.a1 == TITANIA.a1
    p.write_text("[device]\nbogus = 1\n")
    with pytest.raises(ConfigError):
        load_params_file(p)


def test_threshold_echo():
    c = characterize(SILVER)
    assert (c.v_th_pos, c.v_th_neg) == (0.16, -0.15)
    assert characterize(TITANIA).write_window == (-0.65, 0.56)


@pytest.mark.parametrize("model", ["silver", "titania"])
def test_characterization_matches_published_ranges(model):
    c = characterize(get_params(model))
    ref = PUBLISHED[model]
    for key in ("G_abs_min", "G_abs_max", "G_lin_min", "G_lin_max"):
        assert getattr(c, key) == pytest.approx(ref[key], rel=0.10), key
    assert c.c1 < 0 < c.c2
    assert c.G_abs_min < c.G_lin_min < c.G_ref < c.G_lin_max < c.G_abs_max


def test_default_pulse_specs_exist():
    assert set(DEFAULT_PULSES) == {"silver", "titania"}


@settings(max_examples=30, deadline=None)
@given(st.floats(0, 1), st.floats(-1.0, 1.0), st.floats(1e-7, 1e-4))
def test_state_stays_in_unit_interval(x, v, dt):
    assert 0.0 <= device_step(DeviceState(x, SILVER), v, dt).x <= 1.0


def test_current_vectorizes():
    x = np.linspace(0, 1, 5)
    v = np.linspace(-0.1, 0.1, 5)
    got = current(x, v, SILVER.as_array())
    want = [device_current(DeviceState(a, SILVER), b) for a, b in zip(x, v)]
    np.testing.assert_allclose(got, want, rtol=1e-14)
