"""Analytic identities of the single projection step, checked on generated fixtures.

Each fixture takes one unit-norm compressed atom ``d`` from a sampled
dictionary and one compressed received signal split into its structured part
``hx`` and noise ``n``. With ``E = d d^H`` the suite checks:

* ``projection_orthogonality``: ``<d, r0 - E r0> = 0``.
* ``energy_drop``: ``||r1||^2 - ||r0||^2 = -|<d, r0>|^2``.
* ``noise_only``: for ``r0 = n`` the first gradient equals ``-||E n||^2``.
* ``composite_split``: for ``r0 = hx + n`` with ``n`` built so that
  ``<hx, n> = 0`` and ``Re<E hx, E n> = 0``, the first gradient equals
  ``-(||E hx||^2 + ||E n||^2)``.
* ``composite_sign``: for unconstrained ``r0 = hx + n`` the gradient is ``<= 0``.

References are computed with an explicit ``E`` matrix, independently of the
code under test.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .config import ExperimentConfig
from .pursuit import _energy_change, _project, gradient_first_step, projection_step
from .sensing import build_dictionary, compress
from .signal_synth import Hypothesis, correlate_channel, draw_channel, receive

TOLERANCE = 1e-9
STAGE_APPENDIX = 4
FIXTURES_PER_DICTIONARY = 10


@dataclass(frozen=True)
class IdentityResult:
    name: str
    max_error: float
    tolerance: float
    fixtures: int

    @property
    def passed(self) -> bool:
        return bool(self.max_error <= self.tolerance)


@dataclass
class AppendixReport:
    master_seed: int
    fixtures: int
    corrupted: bool
    results: list = field(default_factory=list)
    elapsed_s: float = 0.0

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    def lines(self) -> list[str]:
        out = [f"identity suite: master_seed={self.master_seed} fixtures={self.fixtures}"
               f"{' (corrupted projector)' if self.corrupted else ''}"]
        for r in self.results:
            out.append(f"  {'PASS' if r.passed else 'FAIL'} {r.name:<26} max_error={r.max_error:.3e} "
                       f"tol={r.tolerance:.0e}")
        out.append(f"  {'PASS' if self.passed else 'FAIL'} overall ({self.elapsed_s:.2f} s)")
        return out

    def to_dict(self) -> dict:
        return {
            "master_seed": self.master_seed,
            "fixtures": self.fixtures,
            "corrupted": self.corrupted,
            "passed": self.passed,
            "results": [{"name": r.name, "max_error": r.max_error, "tolerance": r.tolerance,
                         "fixtures": r.fixtures, "passed": r.passed} for r in self.results],
        }


def _rel(value: float, ref: float) -> float:
    return abs(value - ref) / max(abs(ref), np.finfo(float).tiny)


def orthogonal_composite(hx: np.ndarray, n0: np.ndarray, d: np.ndarray) -> np.ndarray:
    """Shift ``n0`` within span{hx, d} so that ``<hx, n> = 0`` and ``Re(conj(<d,hx>) <d,n>) = 0``.

    The target ``<d, n>`` keeps the magnitude of ``<d, n0>`` but is rotated a
    quarter turn from ``<d, hx>``, which zeroes the cross term of the energy drop.
    """
    a = np.vdot(d, hx)
    b = np.vdot(d, n0)
    beta = 1j * a * abs(b) / abs(a) if abs(a) > 0 else b
    gram = np.array([[np.vdot(hx, hx), np.vdot(hx, d)], [np.vdot(d, hx), np.vdot(d, d)]])
    rhs = np.array([-np.vdot(hx, n0), beta - b])
    c = np.linalg.solve(gram, rhs)
    return n0 + c[0] * hx + c[1] * d


def _fixtures(cfg: ExperimentConfig, count: int):
    """Yield ``(d, hx, n)`` triples from freshly drawn dictionaries and received signals."""
    from .pipeline import bank_seed, derive_seed, measurement_for

    spec = cfg.waveform
    m_values = list(cfg.m_values)
    groups = -(-count // FIXTURES_PER_DICTIONARY)
    made = 0
    for g in range(groups):
        gseed = derive_seed(cfg.master_seed, STAGE_APPENDIX, g)
        m = m_values[g % len(m_values)]
        phi = measurement_for(cfg, m)
        pu = correlate_channel(draw_channel(cfg.tap_count, derive_seed(gseed, 0)), cfg.rho)
        dictionary = build_dictionary(pu, spec, cfg.k, phi, bank_seed(cfg))
        rng = np.random.default_rng(derive_seed(gseed, 1))
        for i in range(min(FIXTURES_PER_DICTIONARY, count - made)):
            j = int(rng.integers(dictionary.k))
            snr = float(cfg.snr_grid_db[int(rng.integers(len(cfg.snr_grid_db)))])
            rx = receive(Hypothesis.H1_PU, pu, spec, snr, derive_seed(gseed, 2, i))
            yield dictionary.compressed_atoms[:, j], compress(phi, rx.signal_part), compress(phi, rx.noise_part)
            made += 1


def verify_identities(cfg: ExperimentConfig, fixtures: int = 1000, corrupt: bool = False) -> AppendixReport:
    """Run the identity suite; ``corrupt`` scales every atom off unit norm as a negative control.

    The corrupted run bypasses the unit-norm guard of the public step functions,
    so the identities are evaluated on a projector that is no longer idempotent.
    """
    if fixtures < 1:
        raise ValueError("need at least one fixture")
    start = time.perf_counter()
    if corrupt:
        project, energy_change = _project, _energy_change
    else:
        project, energy_change = projection_step, gradient_first_step
    worst = dict.fromkeys(["projection_orthogonality", "energy_drop", "noise_only", "composite_split",
                           "composite_sign"], 0.0)
    for d, hx, n in _fixtures(cfg, fixtures):
        if corrupt:
            d = 1.05 * d
        E = np.outer(d, d.conj()) / np.vdot(d, d).real if corrupt else np.outer(d, d.conj())

        r1 = project(n, d)
        worst["projection_orthogonality"] = max(worst["projection_orthogonality"],
                                                abs(np.vdot(d, r1)) / np.linalg.norm(n))

        g_noise = energy_change(n, d)
        worst["energy_drop"] = max(worst["energy_drop"], _rel(g_noise, -abs(np.vdot(d, n)) ** 2))
        En = E @ n
        worst["noise_only"] = max(worst["noise_only"], _rel(g_noise, -np.vdot(En, En).real))

        n_c = orthogonal_composite(hx, n, d)
        g_comp = energy_change(hx + n_c, d)
        Ehx, Enc = E @ hx, E @ n_c
        worst["composite_split"] = max(worst["composite_split"],
                                       _rel(g_comp, -(np.vdot(Ehx, Ehx).real + np.vdot(Enc, Enc).real)))

        g_free = energy_change(hx + n, d)
        scale = np.vdot(hx + n, hx + n).real
        worst["composite_sign"] = max(worst["composite_sign"], max(g_free, 0.0) / scale)

    report = AppendixReport(cfg.master_seed, fixtures, corrupt)
    report.results = [IdentityResult(name, float(err), TOLERANCE, fixtures) for name, err in worst.items()]
    report.elapsed_s = time.perf_counter() - start
    return report
