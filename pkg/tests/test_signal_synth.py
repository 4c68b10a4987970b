import numpy as np
import pytest
from hypothesis import given, strategies as st

from puea_detect.signal_synth import (
    Hypothesis, WaveformSpec, apply_channel, correlate_channel, draw_channel, noise_variance, receive, srrc_taps,
    synthesize_jammer, synthesize_waveform,
)

SPEC = WaveformSpec()


def test_seven_tap_channel():
    ch = draw_channel(7, 3)
    assert ch.taps.shape == (7,)
    assert np.iscomplexobj(ch.taps)


def test_single_tap_is_rayleigh():
    mags = np.array([abs(draw_channel(1, s).taps[0]) for s in range(4000)])
    # Rayleigh with E|h|^2 = 1 has mean sqrt(pi)/2
    assert abs(np.mean(mags ** 2) - 1.0) < 0.06
    assert abs(np.mean(mags) - np.sqrt(np.pi) / 2) < 0.03


def test_channel_determinism():
    assert np.array_equal(draw_channel(7, 11).taps, draw_channel(7, 11).taps)
    assert not np.array_equal(draw_channel(7, 11).taps, draw_channel(7, 12).taps)


def test_channel_unit_average_power():
    powers = [draw_channel(7, s).power for s in range(3000)]
    assert abs(np.mean(powers) - 1.0) < 0.03


def test_bad_tap_count():
    with pytest.raises(ValueError):
        draw_channel(0, 1)


def test_correlate_limits():
    h = draw_channel(7, 5)
    assert np.array_equal(correlate_channel(h, 1.0).taps, h.taps)
    assert np.all(correlate_channel(h, 0.0).taps == 1.0)


def test_correlate_needs_reference_or_seed():
    with pytest.raises(ValueError):
        correlate_channel(None, 0.9)
    with pytest.raises(ValueError):
        correlate_channel(draw_channel(7, 1), 1.5)
    # seeded path draws its own reference
    assert np.allclose(correlate_channel(None, 0.9, rng_seed=4).taps, 0.9 * draw_channel(7, 4).taps + 0.1)


def test_correlated_magnitudes_track_reference():
    a, b = [], []
    for s in range(10_000):
        h = draw_channel(7, s)
        a.append(np.abs(h.taps))
        b.append(np.abs(correlate_channel(h, 0.9).taps))
    r = np.corrcoef(np.concatenate(a), np.concatenate(b))[0, 1]
    assert r >= 0.8


def test_srrc_is_unit_energy_and_symmetric():
    h = srrc_taps(0.2, 50, 10)
    assert h.size == 501
    assert np.isclose(np.sum(h ** 2), 1.0)
    assert np.allclose(h, h[::-1])
    assert not h.flags.writeable


def test_srrc_zero_rolloff_is_sinc():
    h = srrc_taps(0.0, 8, 4)
    t = (np.arange(h.size) - h.size // 2) / 4
    ref = np.sinc(t)
    assert np.allclose(h / np.linalg.norm(h), ref / np.linalg.norm(ref))


def test_qam_waveform_power():
    x = synthesize_waveform(SPEC, 0)
    assert x.shape == (100,)
    assert abs(np.mean(np.abs(x) ** 2) - 1.0) < 0.05


def test_pam_zero_rolloff_is_real():
    x = synthesize_waveform(WaveformSpec("PAM", 2, rolloff=0.0), 3)
    assert x.shape == (100,)
    assert np.max(np.abs(x.imag)) == 0.0


@pytest.mark.parametrize("mod", ["QAM", "PAM", "PSK", "FSK"])
def test_every_modulation(mod):
    x = synthesize_waveform(WaveformSpec(mod, 4), 9)
    assert x.shape == (100,) and np.all(np.isfinite(x))
    assert np.isclose(np.mean(np.abs(x) ** 2), 1.0)


def test_fsk_is_constant_envelope():
    x = synthesize_waveform(WaveformSpec("FSK", 2), 1)
    assert np.allclose(np.abs(x), 1.0)


def test_carrier_offset_rotates():
    base = synthesize_waveform(SPEC, 5)
    shifted = synthesize_waveform(WaveformSpec(carrier_offset=0.01), 5)
    assert np.allclose(shifted, base * np.exp(2j * np.pi * 0.01 * np.arange(100)))


@pytest.mark.parametrize("kw", [dict(modulation="OOK"), dict(order=3), dict(rolloff=1.5), dict(oversampling=0),
                                dict(span=0), dict(length=0)])
def test_spec_validation(kw):
    with pytest.raises(ValueError):
        WaveformSpec(**kw)


def test_jammer():
    j = synthesize_jammer(100, 4)
    assert j.shape == (100,)
    assert abs(np.mean(np.abs(j) ** 2) - 1.0) < 0.2
    assert np.array_equal(j, synthesize_jammer(100, 4))
    assert synthesize_jammer(1, 0).shape == (1,)
    with pytest.raises(ValueError):
        synthesize_jammer(0, 0)


def test_apply_channel_truncates():
    x = np.arange(10, dtype=complex)
    ch = draw_channel(7, 0)
    y = apply_channel(ch, x)
    assert y.shape == (10,)
    assert np.allclose(y, np.convolve(x, ch.taps)[:10])


def test_hole_is_pure_noise():
    pu = correlate_channel(draw_channel(7, 0), 0.9)
    rx = receive(Hypothesis.H0_HOLE, pu, SPEC, 10.0, 1)
    assert np.all(rx.signal_part == 0)
    assert np.array_equal(rx.samples, rx.noise_part)
    assert rx.channel is None


def test_all_hypotheses_same_length():
    pu = correlate_channel(draw_channel(7, 0), 0.9)
    for h in Hypothesis:
        assert receive(h, pu, SPEC, 0.0, 2).samples.shape == (100,)


def test_realized_snr_matches_request():
    pu = correlate_channel(draw_channel(7, 0), 0.9)
    for snr in (-5.0, 10.0):
        vals = [receive(Hypothesis.H1_PU, correlate_channel(draw_channel(7, s), 0.9), SPEC, snr, s).realized_snr_db()
                for s in range(200)]
        assert abs(np.mean(vals) - snr) <= 0.5
    assert receive(Hypothesis.H1_PU, pu, SPEC, 10.0, 0).snr_db == 10.0


def test_noise_variance_reference():
    ch = draw_channel(7, 0)
    assert np.isclose(noise_variance(10.0, ch), ch.power / 10)
    assert noise_variance(0.0, None) == 1.0


def test_pue_channel_is_independent_of_pu():
    pu_taps, att_taps = [], []
    for s in range(1000):
        pu = correlate_channel(draw_channel(7, 10_000 + s), 0.9)
        rx = receive(Hypothesis.H2_PUE, pu, SPEC, 10.0, s)
        pu_taps.append(pu.taps)
        att_taps.append(rx.channel.taps)
    pu_taps, att_taps = np.array(pu_taps), np.array(att_taps)
    corr = [abs(np.corrcoef(np.abs(pu_taps[:, i]), np.abs(att_taps[:, i]))[0, 1]) for i in range(7)]
    assert np.mean(corr) < 0.15


def test_pu_and_pue_share_waveform():
    pu = correlate_channel(draw_channel(7, 0), 0.9)
    a = receive(Hypothesis.H1_PU, pu, SPEC, 10.0, 77)
    b = receive(Hypothesis.H2_PUE, pu, SPEC, 10.0, 77)
    x = synthesize_waveform(SPEC, np.random.SeedSequence(77).spawn(3)[0])
    assert np.allclose(a.signal_part, apply_channel(pu, x))
    assert np.allclose(b.signal_part, apply_channel(b.channel, x))


def test_receive_reproducible():
    pu = correlate_channel(draw_channel(7, 0), 0.9)
    a = receive("Jammer", pu, SPEC, 5.0, 123)
    b = receive(Hypothesis.H3_JAMMER, pu, SPEC, 5.0, 123)
    assert np.array_equal(a.samples, b.samples)
    assert a.seed == 123


def test_receive_rejects_unknown_label():
    pu = correlate_channel(draw_channel(7, 0), 0.9)
    with pytest.raises(ValueError):
        receive("H7", pu, SPEC, 0.0, 0)
    with pytest.raises(ValueError):
        receive(9, pu, SPEC, 0.0, 0)


@given(st.sampled_from(list(Hypothesis)), st.floats(-10, 30), st.integers(0, 2**31))
def test_receive_is_finite(label, snr, seed):
    pu = correlate_channel(draw_channel(7, seed), 0.9)
    rx = receive(label, pu, SPEC, snr, seed)
    assert np.all(np.isfinite(rx.samples))
    assert np.allclose(rx.samples, rx.signal_part + rx.noise_part)


def test_hypothesis_parse():
    assert Hypothesis.parse("PUE") is Hypothesis.H2_PUE
    assert Hypothesis.parse("H3") is Hypothesis.H3_JAMMER
    assert Hypothesis.parse(np.int64(1)) is Hypothesis.H1_PU
    with pytest.raises(ValueError):
        Hypothesis.parse(True)
