import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from memxbar.device import characterize, get_params
from memxbar.errors import ReadSafetyError, TimingError
from memxbar.waveform import (
    DECREASE_QUARTERS, INCREASE_QUARTERS, EncodingConstants, Timing, Waveform, check_read_safe,
    encode_error, encode_read, encode_update, on_durations, sample, switch_schedule,
    update_levels,
)

T = Timing(10e-6, 1e-3)
SILVER = characterize(get_params("silver"))
TITANIA = characterize(get_params("titania"))
ENC = EncodingConstants(0.6, kappa=1e-4, kappa_dec=2e-4)


def quarter_values(w):
    return [sample(w, T.write_start + (k + 0.5) * T.quarter) for k in range(4)]


def test_zero_feature_reads_zero():
    w = encode_read(0.0, ENC, T)
    assert w.segments == ((0.0, T.T_rd, 0.0),)


def test_read_scales_linearly():
    assert sample(encode_read(-0.1, ENC, T), 0.0) == pytest.approx(-0.06)
    assert sample(encode_read(0.2, ENC, T), 5e-6) == pytest.approx(0.12)


def test_unnormalized_xor_input_is_not_read_safe():
    with pytest.raises(ReadSafetyError):
        encode_read(1.0, ENC, T)


def test_error_drive_sits_in_backward_slot():
    w = encode_error(0.1, EncodingConstants(0.12), T)
    assert (w.start, w.end) == (T.T_rd, 2 * T.T_rd)
    assert sample(w, T.T_rd) == pytest.approx(0.012)


@given(st.floats(-2, 2))
def test_read_safety_is_strict(v):
    if -0.15 < v < 0.16:
        check_read_safe(v)
    else:
        with pytest.raises(ReadSafetyError):
            check_read_safe(v)


def test_zero_feature_sits_on_thresholds():
    w = encode_update(0.0, ENC, T, SILVER, sign_x="nonneg")
    assert quarter_values(w) == [0.16, -0.15, -0.15, 0.16]


def test_update_levels_positive_branch():
    # a x = 0.05 with the silver thresholds (+0.16, -0.15)
    levels = update_levels(np.array(0.05 / 0.6), 0.6, SILVER.write_window)
    np.testing.assert_allclose(levels, [0.21, -0.20, -0.15, 0.16], atol=1e-15)


def test_update_levels_negative_branch():
    levels = update_levels(np.array(-0.05 / 0.6), 0.6, SILVER.write_window)
    np.testing.assert_allclose(levels, [0.16, -0.15, -0.20, 0.21], atol=1e-15)


def test_titania_levels_use_crossbar_frame_window():
    levels = update_levels(np.array(0.0), 0.6, TITANIA.write_window)
    np.testing.assert_allclose(levels, [0.56, -0.65, -0.65, 0.56])


def test_sign_hint_must_agree():
    with pytest.raises(ValueError):
        encode_update(0.1, ENC, T, SILVER, sign_x="neg")


def test_switch_off_for_zero_error():
    w = switch_schedule(0.0, ENC, T, SILVER)
    assert w.on_time() == 0.0
    assert w.start == T.write_start and w.end == pytest.approx(T.end)


@pytest.mark.parametrize("y,on_quarters", [(0.5, {1, 3}), (-0.5, {0, 2})])
def test_switch_on_quarters(y, on_quarters):
    d = on_durations(np.array(y), ENC, SILVER)
    assert {k for k in range(4) if d[k] > 0} == on_quarters
    w = switch_schedule(y, ENC, T, SILVER)
    for k in range(4):
        s = T.write_start + k * T.quarter
        assert sample(w, s) == (1.0 if k in on_quarters else 0.0)
        assert sample(w, s + T.quarter * (1 - 1e-9)) == 0.0


def test_durations_scale_with_error_and_slope():
    d = on_durations(np.array(0.5), ENC, SILVER)
    assert d[1] == pytest.approx(ENC.k_dec * abs(SILVER.c2) * 0.5)
    assert d[3] == pytest.approx(ENC.k_inc * abs(SILVER.c1) * 0.5)


def test_quarter_roles_partition():
    assert sorted(INCREASE_QUARTERS + DECREASE_QUARTERS) == [0, 1, 2, 3]


def test_duration_overflow_rejected():
    big = EncodingConstants(0.6, kappa=1.0)
    with pytest.raises(TimingError):
        switch_schedule(1.0, big, T, SILVER)


def test_sample_half_open_boundaries():
    w = encode_update(0.1, ENC, T, SILVER)
    q2 = T.write_start + T.quarter
    assert sample(w, q2) == pytest.approx(-0.15 - 0.06)
    with pytest.raises(ValueError):
        sample(w, -1e-9)
    with pytest.raises(ValueError):
        sample(w, w.end)


@given(st.floats(-100, 100))
def test_constant_waveform(t):
    w = Waveform(((-100.0, 101.0, 0.25),))
    assert sample(w, t) == 0.25


def test_waveform_must_be_contiguous():
    with pytest.raises(ValueError):
        Waveform(((0, 1, 0.0), (2, 3, 1.0)))


def test_timing_rules():
    assert Timing(10e-6, 1e-3).dt == pytest.approx(2.5e-6)
    with pytest.raises(TimingError):
        Timing(10e-6, 1e-3, dt=1e-5)
    with pytest.raises(TimingError):
        Timing(0.0, 1e-3)


def test_csv_renders_steps():
    text = encode_read(0.1, ENC, T).to_csv("r0")
    assert text.splitlines() == [f"r0,0.0,{0.6 * 0.1!r}", f"r0,{T.T_rd!r},{0.6 * 0.1!r}"]
