"""Random-projection compression and the PU-channel-dependent sampled dictionary."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg import toeplitz

from . import storage
from .signal_synth import ChannelRealization, WaveformSpec, synthesize_batch


@dataclass(frozen=True)
class MeasurementMatrix:
    entries: np.ndarray
    seed: int | None = None

    @property
    def m(self) -> int:
        return self.entries.shape[0]

    @property
    def n(self) -> int:
        return self.entries.shape[1]

    @classmethod
    def identity(cls, n: int) -> "MeasurementMatrix":
        """Pass-through operator, for checks where compression must be a no-op."""
        return cls(np.eye(n), seed=None)

    def save(self, path) -> None:
        storage.write_matrix(path, self.entries)

    @classmethod
    def load(cls, path, seed=None) -> "MeasurementMatrix":
        return cls(storage.read_matrix(path), seed)


@dataclass(frozen=True)
class SampledDictionary:
    """Atoms ``h_PU * x_j`` (columns) and their unit-norm compressed images."""

    atoms: np.ndarray
    compressed_atoms: np.ndarray
    pu_channel: ChannelRealization
    scale: np.ndarray

    @property
    def k(self) -> int:
        return self.atoms.shape[1]

    @property
    def m(self) -> int:
        return self.compressed_atoms.shape[0]

    def save(self, prefix) -> None:
        storage.write_matrix(f"{prefix}.atoms.bin", self.atoms)
        storage.write_matrix(f"{prefix}.compressed.bin", self.compressed_atoms)


def build_measurement(m: int, n: int, seed, allow_square: bool = False) -> MeasurementMatrix:
    """Real Gaussian measurement matrix with i.i.d. N(0, 1/m) entries.

    ``m < n`` is required unless ``allow_square`` is set, which admits the
    uncompressed ``m == n`` operating point with a square random matrix.
    """
    if m < 1 or n < 1:
        raise ValueError("m and n must be positive")
    if m > n or (m == n and not allow_square):
        raise ValueError(f"need m < n for compression, got m={m}, n={n}")
    rng = np.random.default_rng(seed)
    entries = rng.standard_normal((m, n)) / np.sqrt(m)
    entries.setflags(write=False)
    return MeasurementMatrix(entries, seed if isinstance(seed, int) else None)


def compress(phi: MeasurementMatrix, y) -> np.ndarray:
    y = np.asarray(y)
    if y.shape[0] != phi.n:
        raise ValueError(f"signal length {y.shape[0]} does not match measurement width {phi.n}")
    return phi.entries @ y


@lru_cache(maxsize=32)
def waveform_bank(spec: WaveformSpec, k: int, seed: int) -> np.ndarray:
    """``(length, k)`` matrix of independently synthesized waveforms, cached per (spec, k, seed)."""
    bank = synthesize_batch(spec, k, np.random.default_rng(seed)).T.copy()
    bank.setflags(write=False)
    return bank


@lru_cache(maxsize=32)
def _shifted_bank(spec: WaveformSpec, k: int, seed: int, n_taps: int) -> np.ndarray:
    """``(n_taps, length, k)`` stack of the bank delayed by 0..n_taps-1 samples (zero fill)."""
    bank = waveform_bank(spec, k, seed)
    out = np.zeros((n_taps,) + bank.shape, dtype=complex)
    for d in range(n_taps):
        out[d, d:] = bank[: bank.shape[0] - d]
    out.setflags(write=False)
    return out


@lru_cache(maxsize=32)
def _compressed_shifts(phi_seed: int, m: int, n: int, spec: WaveformSpec, k: int, seed: int, n_taps: int):
    """``Phi @ delayed bank`` for a seeded Gaussian ``Phi``, so ``Phi (h * X)`` is a tap-weighted sum."""
    phi = build_measurement(m, n, phi_seed, allow_square=True)
    shifted = _shifted_bank(spec, k, seed, n_taps)
    images = np.einsum("mn,dnk->dmk", phi.entries, shifted)
    images.setflags(write=False)
    return images, phi.entries


def convolution_matrix(channel: ChannelRealization, n: int) -> np.ndarray:
    """Lower-triangular Toeplitz matrix ``H`` with ``H @ x == (h * x)[:n]``."""
    col = np.zeros(n, dtype=complex)
    taps = channel.taps[:n]
    col[: taps.size] = taps
    return toeplitz(col, np.zeros(n, dtype=complex))


def build_dictionary(pu_channel: ChannelRealization, spec: WaveformSpec, k: int, phi: MeasurementMatrix,
                     seed: int) -> SampledDictionary:
    """Sampled dictionary ``D_PU = h_PU * X`` and its compressed image ``Phi D_PU``.

    Columns are scaled so each compressed atom has unit norm; the same scale is
    applied to the uncompressed atom, keeping ``compressed = Phi @ atoms``.
    """
    if k <= phi.m:
        raise ValueError(f"dictionary must be overcomplete in the compressed domain: k={k} <= m={phi.m}")
    if phi.n != spec.length:
        raise ValueError(f"measurement width {phi.n} does not match signal length {spec.length}")
    taps = pu_channel.taps[: spec.length]
    shifted = _shifted_bank(spec, k, int(seed), taps.size)
    atoms = np.tensordot(taps, shifted, axes=1)
    if phi.seed is not None:
        images = _compressed_shifts(phi.seed, phi.m, phi.n, spec, k, int(seed), taps.size)
        if images is not None and np.array_equal(images[1], phi.entries):
            compressed = np.tensordot(taps, images[0], axes=1)
        else:
            compressed = phi.entries @ atoms
    else:
        compressed = phi.entries @ atoms
    norms = np.linalg.norm(compressed, axis=0)
    if np.any(norms == 0):
        raise ValueError("dictionary contains an atom with zero compressed norm")
    scale = 1.0 / norms
    atoms = atoms * scale
    compressed = compressed * scale
    for arr in (atoms, compressed, scale):
        arr.setflags(write=False)
    return SampledDictionary(atoms=atoms, compressed_atoms=compressed, pu_channel=pu_channel, scale=scale)
