import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gprtopo.preproc import (AGC_EPS, Bscan, agc, agc_variants, background_removal,
                             bandpass, bandpass_mask, load_bscan, read_bscan, to_image,
                             windowed_rms, write_bscan)

DT = 0.1e-9
N = 1024


def tone(freq, n=N, dt=DT, amp=1.0, phase=0.0):
    t = np.arange(n) * dt
    return Bscan(amp * np.sin(2 * np.pi * freq * t + phase), dt, 0.024)


def rms(x):
    return float(np.sqrt(np.mean(np.square(x))))


def test_bscan_validation():
    with pytest.raises(ValueError):
        Bscan(np.zeros((1, 3)), DT, 0.024)
    with pytest.raises(ValueError):
        Bscan(np.zeros((4, 3)), 0.0, 0.024)
    b = Bscan(np.zeros((4, 3)), DT, 0.024)
    assert (b.n_samples, b.n_traces) == (4, 3)


def test_background_removal_examples():
    same = Bscan(np.tile(np.arange(5.0)[:, None], (1, 4)), DT, 0.024)
    assert np.all(background_removal(same).data == 0)
    single = Bscan(np.arange(5.0), DT, 0.024)
    assert np.all(background_removal(single).data == 0)
    two = Bscan(np.array([[1.0, 3.0], [0.0, 0.0]]), DT, 0.024)
    assert background_removal(two).data[0].tolist() == [-1.0, 1.0]


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_background_removal_zero_rows_and_idempotent(seed):
    rng = np.random.default_rng(seed)
    b = Bscan(rng.normal(size=(16, 7)) * 10 + 3, DT, 0.024)
    out = background_removal(b).data
    row_rms = np.sqrt(np.mean(out**2, axis=1))
    assert np.all(np.abs(out.mean(axis=1)) <= 1e-9 * np.maximum(row_rms, 1e-300))
    again = background_removal(background_removal(b)).data
    assert np.allclose(again, out, rtol=0, atol=1e-12)


def test_bandpass_mask_shape():
    f = np.array([0, 100e6, 110e6, 500e6, 1710e6, 1900e6, 2000e6])
    m = bandpass_mask(f, 100e6, 1900e6, 0.1)
    assert m.tolist() == [0.0, 0.0, 1.0, 1.0, 1.0, 0.0, 0.0]
    mid = bandpass_mask([105e6], 100e6, 1900e6, 0.1)[0]
    assert mid == pytest.approx(0.5)


def test_bandpass_dc_removed():
    b = Bscan(np.full((N, 2), 3.0), DT, 0.024)
    assert np.max(np.abs(bandpass(b).data)) <= 1e-6 * 3.0


def test_bandpass_passes_500mhz_tone():
    b = tone(500e6)
    out = bandpass(b).data
    # 500 MHz sits on the unity plateau of the mask
    assert bandpass_mask([500e6], 100e6, 1900e6)[0] == 1.0
    assert rms(out) / rms(b.data) == pytest.approx(1.0, abs=0.01)
    energy = np.sum(out**2) / np.sum(b.data**2)
    assert 0.98 <= energy <= 1.0 + 1e-12


@pytest.mark.parametrize("phase", [0.0, 0.7, 1.9])
def test_bandpass_rejects_3ghz_tone(phase):
    b = tone(3e9, phase=phase)
    out = bandpass(b).data
    core = slice(N // 4, 3 * N // 4)
    atten_db = 20 * np.log10(rms(b.data[core]) / rms(out[core]))
    assert atten_db >= 40


def test_bandpass_preconditions():
    b = tone(500e6)
    with pytest.raises(ValueError, match="Nyquist"):
        bandpass(b, 100e6, 6e9)
    with pytest.raises(ValueError):
        bandpass(b, 500e6, 400e6)
    with pytest.raises(ValueError):
        bandpass(b, 100e6, 1900e6, taper_frac=0.6)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(-5, 5), st.floats(-5, 5))
def test_bandpass_linear(seed, a, c):
    rng = np.random.default_rng(seed)
    x = Bscan(rng.normal(size=(256, 3)), DT, 0.024)
    y = Bscan(rng.normal(size=(256, 3)), DT, 0.024)
    lhs = bandpass(Bscan(a * x.data + c * y.data, DT, 0.024)).data
    rhs = a * bandpass(x).data + c * bandpass(y).data
    scale = max(np.max(np.abs(lhs)), np.max(np.abs(rhs)), 1e-300)
    assert np.max(np.abs(lhs - rhs)) <= 1e-9 * scale


def test_windowed_rms_clips_at_trace_ends():
    x = np.array([3.0, 4.0, 0.0, 0.0])
    # length 2: window [i-1, i+1)
    assert windowed_rms(x, 2).tolist() == pytest.approx(
        [3.0, np.sqrt(12.5), np.sqrt(8.0), 0.0])


def test_agc_zero_trace():
    b = Bscan(np.zeros((64, 2)), DT, 0.024)
    out = agc(b, 8 * DT)
    assert np.all(out.data == 0)
    assert AGC_EPS == 1e-12


def _interior_rms(data, length):
    w = windowed_rms(data, length)
    return w[length: -length]


def test_agc_flattens_sinusoid():
    b = tone(500e6, amp=0.3)
    out = agc(b, 64 * DT).data
    assert np.allclose(_interior_rms(out, 64), 1.0, rtol=0.1)


def test_agc_flattens_ramp():
    t = np.arange(N) * DT
    ramp = Bscan(t / t[-1] * np.sin(2 * np.pi * 500e6 * t), DT, 0.024)
    out = agc(ramp, 64 * DT, target_rms=2.0).data
    assert np.allclose(_interior_rms(out, 64), 2.0, rtol=0.1)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(3, 100), st.floats(0.1, 10))
def test_agc_output_bound(seed, length, target):
    x = np.random.default_rng(seed).standard_cauchy(size=(200, 2))
    out = agc(Bscan(x, DT, 0.024), length * DT, target).data
    assert np.all(np.abs(out) <= target * length * (1 + 1e-12))


def test_agc_preconditions():
    b = tone(500e6)
    with pytest.raises(ValueError):
        agc(b, 2 * DT)
    with pytest.raises(ValueError):
        agc(b, 8 * DT, target_rms=0)


def test_agc_variants():
    t = np.arange(N) * DT
    ramp = Bscan(t * np.sin(2 * np.pi * 500e6 * t), DT, 0.024)
    same = agc_variants(ramp, [64 * DT] * 5)
    assert all(np.array_equal(v.data, same[0].data) for v in same)
    assert np.array_equal(same[0].data, agc(ramp, 64 * DT).data)
    distinct = agc_variants(ramp)
    assert len(distinct) == 5
    for i in range(5):
        for j in range(i + 1, 5):
            assert not np.allclose(distinct[i].data, distinct[j].data)


def test_to_image():
    assert np.all(to_image(Bscan(np.zeros((4, 3)), DT, 0.024)).pixels == 0.5)
    img = to_image(Bscan(np.array([[-2.0], [2.0]]), DT, 0.024), clip_pct=100)
    assert img.pixels.ravel().tolist() == [0.0, 1.0]
    wide = to_image(Bscan(np.ones((8, 456)), DT, 0.024))
    assert (wide.width, wide.height) == (456, 8)
    with pytest.raises(ValueError):
        to_image(Bscan(np.ones((4, 2)), DT, 0.024), clip_pct=40)


def test_gprb_roundtrip(tmp_path):
    data = np.random.default_rng(3).normal(size=(5, 4)).astype(np.float32)
    b = Bscan(data, 0.25e-9, 0.024)
    write_bscan(b, tmp_path / "a.gprb")
    raw = (tmp_path / "a.gprb").read_bytes()
    assert raw[:4] == b"GPRB" and len(raw) == 4 + 4 + 4 + 8 + 8 + 4 * 20
    back = read_bscan(tmp_path / "a.gprb")
    assert np.array_equal(back.data, data.astype(np.float64))
    assert (back.dt, back.trace_spacing) == (0.25e-9, 0.024)
    (tmp_path / "bad.gprb").write_bytes(b"XXXX" + raw[4:])
    with pytest.raises(ValueError, match="magic"):
        read_bscan(tmp_path / "bad.gprb")


def test_csv_import(tmp_path):
    p = tmp_path / "b.csv"
    p.write_text("1,2,3\n4,5,6\n")
    b = load_bscan(p, DT, 0.05)
    assert b.data.tolist() == [[1, 2, 3], [4, 5, 6]]
    with pytest.raises(ValueError):
        load_bscan(p)
