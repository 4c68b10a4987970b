"""Feature vectors built from pursuit traces: ``[||r||_2 , |G|]``."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .pursuit import PursuitTrace
from .signal_synth import Hypothesis


@dataclass(frozen=True)
class FeatureVector:
    values: np.ndarray
    label: Hypothesis
    snr_db: float

    @property
    def m(self) -> int:
        return self.values.size // 2


def absolute_gradient(residual_norms) -> np.ndarray:
    """``|G|``: absolute numerical gradient (central inside, one-sided at the ends)."""
    r = np.asarray(residual_norms, dtype=float)
    if r.ndim != 1 or r.size < 2:
        raise ValueError("need a 1-D sequence of at least 2 values")
    return np.abs(np.gradient(r))


def assemble_feature(trace: PursuitTrace, label, snr_db: float) -> FeatureVector:
    norms = np.asarray(trace.residual_norms, dtype=float)
    if norms.ndim != 1 or norms.size < 2 or not np.all(np.isfinite(norms)) or np.any(norms < 0):
        raise ValueError("invalid pursuit trace")
    values = np.concatenate([norms, absolute_gradient(norms)])
    return FeatureVector(values=values, label=Hypothesis.parse(label), snr_db=float(snr_db))
