"""Synthetic received signals for the four sensing hypotheses.

    H0  hole:    y = n
    H1  PU:      y = h_PU * x_s + n
    H2  PUE:     y = h_i  * x_s + n
    H3  jammer:  y = h_i  * x_n + n

``x_s`` is a pulse-shaped digitally modulated waveform, ``x_n`` is white
complex Gaussian, ``*`` is linear convolution truncated to the signal length.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional

import numpy as np
from scipy.signal import upfirdn

MODULATIONS = ("QAM", "PAM", "PSK", "FSK")


class Hypothesis(enum.IntEnum):
    H0_HOLE = 0
    H1_PU = 1
    H2_PUE = 2
    H3_JAMMER = 3

    @property
    def short(self) -> str:
        return ("Hole", "PU", "PUE", "Jammer")[self.value]

    @classmethod
    def parse(cls, value) -> "Hypothesis":
        if isinstance(value, Hypothesis):
            return value
        if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
            return cls(int(value))
        if isinstance(value, str):
            for member in cls:
                if value in (member.name, member.short) or value.upper() == member.name.split("_")[0]:
                    return member
        raise ValueError(f"unknown hypothesis label: {value!r}")


@dataclass(frozen=True)
class WaveformSpec:
    """Parameters of the structured transmit waveform.

    Defaults: 100 output samples, 10 samples per symbol, square-root raised
    cosine with roll-off 0.2 spanning 50 symbols.
    """

    modulation: str = "QAM"
    order: int = 4
    oversampling: int = 10
    rolloff: float = 0.2
    span: int = 50
    length: int = 100
    carrier_offset: float = 0.0

    def __post_init__(self):
        if self.modulation not in MODULATIONS:
            raise ValueError(f"modulation must be one of {MODULATIONS}, got {self.modulation!r}")
        if self.order < 2 or self.order & (self.order - 1):
            raise ValueError(f"order must be a power of 2 >= 2, got {self.order}")
        if self.oversampling < 1:
            raise ValueError("oversampling must be >= 1")
        if not 0.0 <= self.rolloff <= 1.0:
            raise ValueError(f"rolloff must lie in [0, 1], got {self.rolloff}")
        if self.span < 1:
            raise ValueError("span must be >= 1 symbol")
        if self.length < 1:
            raise ValueError("length must be positive")


@dataclass(frozen=True)
class ChannelRealization:
    taps: np.ndarray
    rho: float = 1.0

    def __post_init__(self):
        taps = np.asarray(self.taps, dtype=complex).ravel()
        if taps.size < 1:
            raise ValueError("a channel needs at least one tap")
        object.__setattr__(self, "taps", taps)

    @property
    def power(self) -> float:
        return float(np.vdot(self.taps, self.taps).real)


@dataclass
class ReceivedSignal:
    """A received snapshot together with the parts it was built from."""

    samples: np.ndarray
    label: Hypothesis
    snr_db: float
    seed: int
    signal_part: np.ndarray = field(repr=False)
    noise_part: np.ndarray = field(repr=False)
    channel: Optional[ChannelRealization] = field(default=None, repr=False)

    def realized_snr_db(self) -> float:
        return float(10 * np.log10(np.sum(np.abs(self.signal_part) ** 2) / np.sum(np.abs(self.noise_part) ** 2)))


def draw_channel(tap_count: int, rng_seed) -> ChannelRealization:
    """Rayleigh multipath channel with a flat power-delay profile of unit total power."""
    if tap_count < 1:
        raise ValueError(f"tap_count must be >= 1, got {tap_count}")
    rng = np.random.default_rng(rng_seed)
    taps = (rng.standard_normal(tap_count) + 1j * rng.standard_normal(tap_count)) / np.sqrt(2 * tap_count)
    return ChannelRealization(taps=taps, rho=0.0)


def correlate_channel(reference: Optional[ChannelRealization], rho: float, rng_seed=None,
                      tap_count: int = 7) -> ChannelRealization:
    """PU channel ``rho * h + (1 - rho)`` built tap-wise from a Rayleigh channel ``h``.

    ``h`` is ``reference`` when given; otherwise a fresh realization with
    ``tap_count`` taps is drawn from ``rng_seed``.
    """
    if not 0.0 <= rho <= 1.0:
        raise ValueError(f"rho must lie in [0, 1], got {rho}")
    if reference is None:
        if rng_seed is None:
            raise ValueError("either a reference channel or an rng_seed is required")
        reference = draw_channel(tap_count, rng_seed)
    return ChannelRealization(taps=rho * reference.taps + (1.0 - rho), rho=rho)


@lru_cache(maxsize=16)
def srrc_taps(rolloff: float, span: int, sps: int) -> np.ndarray:
    """Unit-energy square-root raised cosine impulse response, ``span * sps + 1`` taps."""
    t = np.arange(-span * sps / 2, span * sps / 2 + 1) / sps
    a = rolloff
    h = np.empty_like(t)
    if a == 0:
        h = np.sinc(t)
    else:
        for i, ti in enumerate(t):
            if np.isclose(ti, 0.0):
                h[i] = 1.0 - a + 4 * a / np.pi
            elif np.isclose(abs(ti), 1 / (4 * a)):
                h[i] = a / np.sqrt(2) * ((1 + 2 / np.pi) * np.sin(np.pi / (4 * a))
                                         + (1 - 2 / np.pi) * np.cos(np.pi / (4 * a)))
            else:
                h[i] = (np.sin(np.pi * ti * (1 - a)) + 4 * a * ti * np.cos(np.pi * ti * (1 + a))) / (
                    np.pi * ti * (1 - (4 * a * ti) ** 2))
    h = h / np.linalg.norm(h)
    h.setflags(write=False)
    return h


def constellation(modulation: str, order: int) -> np.ndarray:
    """Unit-average-energy constellation points for QAM, PAM and PSK."""
    if modulation == "PAM":
        pts = np.arange(-(order - 1), order, 2).astype(complex)
    elif modulation == "PSK":
        pts = np.exp(2j * np.pi * np.arange(order) / order)
        if order == 2:
            pts = pts.real.astype(complex)
    elif modulation == "QAM":
        if order == 2:
            pts = np.array([-1.0, 1.0], dtype=complex)
        else:
            bits = int(np.log2(order))
            ni, nq = 2 ** ((bits + 1) // 2), 2 ** (bits // 2)
            i = np.arange(-(ni - 1), ni, 2)
            q = np.arange(-(nq - 1), nq, 2)
            pts = (i[:, None] + 1j * q[None, :]).ravel()
    else:
        raise ValueError(f"no point constellation for {modulation}")
    return pts / np.sqrt(np.mean(np.abs(pts) ** 2))


def synthesize_batch(spec: WaveformSpec, count: int, rng: np.random.Generator) -> np.ndarray:
    """``count`` independent waveforms as rows of a ``(count, length)`` array."""
    sps, n = spec.oversampling, spec.length
    nsym = spec.span + -(-n // sps)
    idx = rng.integers(0, spec.order, size=(count, nsym))
    if spec.modulation == "FSK":
        # continuous-phase tone keying, tones spaced 1/T_s apart
        freqs = (idx - (spec.order - 1) / 2) / sps
        inst = np.repeat(freqs, sps, axis=1)[:, spec.span * sps // 2:][:, :n]
        phase = 2 * np.pi * np.cumsum(inst, axis=1)
        phase0 = rng.uniform(0, 2 * np.pi, size=(count, 1))
        x = np.exp(1j * (phase - phase[:, :1] + phase0))
    else:
        symbols = constellation(spec.modulation, spec.order)[idx]
        h = srrc_taps(spec.rolloff, spec.span, sps)
        shaped = upfirdn(h, symbols, up=sps, axis=1)
        start = spec.span * sps  # first fully steady-state output sample
        x = shaped[:, start:start + n]
    if spec.carrier_offset:
        x = x * np.exp(2j * np.pi * spec.carrier_offset * np.arange(n))
    power = np.mean(np.abs(x) ** 2, axis=1, keepdims=True)
    return x / np.sqrt(power)


def synthesize_waveform(spec: WaveformSpec, rng_seed) -> np.ndarray:
    """One unit-power structured waveform of ``spec.length`` samples."""
    return synthesize_batch(spec, 1, np.random.default_rng(rng_seed))[0]


def synthesize_jammer(length: int, rng_seed) -> np.ndarray:
    """Unstructured jamming waveform: i.i.d. CN(0, 1) samples."""
    if length < 1:
        raise ValueError(f"length must be >= 1, got {length}")
    rng = np.random.default_rng(rng_seed)
    return (rng.standard_normal(length) + 1j * rng.standard_normal(length)) / np.sqrt(2)


def apply_channel(channel: ChannelRealization, x: np.ndarray) -> np.ndarray:
    """Linear convolution ``h * x`` keeping the first ``len(x)`` samples."""
    x = np.asarray(x)
    return np.convolve(x, channel.taps)[: x.shape[-1]]


def noise_variance(snr_db: float, channel: Optional[ChannelRealization]) -> float:
    """Per-sample noise variance for a unit-power transmit waveform.

    The reference signal power is the expected received power over the
    transmitted symbols for the given channel, ``||h||^2``; a hole uses a
    unit-power reference.
    """
    ref = 1.0 if channel is None else channel.power
    return ref * 10.0 ** (-snr_db / 10.0)


def receive(label, pu_channel: ChannelRealization, spec: WaveformSpec, snr_db: float, rng_seed,
            attacker_taps: Optional[int] = None) -> ReceivedSignal:
    """Generate one received snapshot under hypothesis ``label``.

    Symbol generation is seeded independently of the label, so H1 and H2
    drawn with the same ``rng_seed`` carry the identical structured waveform
    and differ only in the channel. The attacker channel for H2/H3 is an
    independent Rayleigh draw with ``attacker_taps`` taps (defaults to the PU
    tap count).
    """
    try:
        label = Hypothesis.parse(label)
    except ValueError as exc:
        raise ValueError(f"invalid label: {exc}") from None
    seq = np.random.SeedSequence(rng_seed)
    sym_ss, chan_ss, noise_ss = seq.spawn(3)
    n = spec.length

    if label is Hypothesis.H0_HOLE:
        channel = None
        clean = np.zeros(n, dtype=complex)
    else:
        if label is Hypothesis.H1_PU:
            channel = pu_channel
        else:
            channel = draw_channel(attacker_taps or pu_channel.taps.size, chan_ss)
        if label is Hypothesis.H3_JAMMER:
            x = synthesize_jammer(n, sym_ss)
        else:
            x = synthesize_waveform(spec, sym_ss)
        clean = apply_channel(channel, x)

    sigma2 = noise_variance(snr_db, channel)
    rng = np.random.default_rng(noise_ss)
    noise = np.sqrt(sigma2 / 2) * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
    return ReceivedSignal(samples=clean + noise, label=label, snr_db=float(snr_db), seed=_seed_repr(rng_seed),
                          signal_part=clean, noise_part=noise, channel=channel)


def _seed_repr(seed) -> int:
    if isinstance(seed, (int, np.integer)):
        return int(seed)
    if not isinstance(seed, np.random.SeedSequence):
        seed = np.random.SeedSequence(seed)
    return int(seed.generate_state(1, dtype=np.uint64)[0])
