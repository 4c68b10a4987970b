"""Energy-detection baseline: the received energy fed to the same network architecture."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .classifier import ClassifierModel, NetworkShape, TrainConfig, train
from .signal_synth import Hypothesis, ReceivedSignal


@dataclass(frozen=True)
class EnergyFeature:
    energy: float
    label: Hypothesis
    snr_db: float

    @property
    def values(self) -> np.ndarray:
        return np.array([self.energy])


def energy_of(signal) -> EnergyFeature | float:
    """``||y||^2`` of a received signal.

    Returns an :class:`EnergyFeature` for a :class:`ReceivedSignal`, and the
    bare energy for a plain sample array.
    """
    samples = signal.samples if isinstance(signal, ReceivedSignal) else signal
    y = np.asarray(samples)
    if y.size == 0:
        raise ValueError("cannot take the energy of an empty signal")
    energy = float(np.sum(y.real ** 2 + y.imag ** 2))
    if isinstance(signal, ReceivedSignal):
        return EnergyFeature(energy, signal.label, signal.snr_db)
    return energy


def train_ed(dataset, hyper: TrainConfig = TrainConfig(), hidden_dim: int = 64, labels=None, class_map=None,
             with_report: bool = False):
    """Train the energy-based classifier; same contract as :func:`classifier.train` with one input."""
    if labels is None:
        items = list(dataset)
        if not items:
            raise ValueError("empty dataset")
        x = np.array([[fv.energy] for fv in items])
        labels = [fv.label for fv in items]
    else:
        x = np.asarray(dataset, dtype=float).reshape(-1, 1)
    n_classes = len(class_map) if class_map is not None else len({int(Hypothesis.parse(v)) for v in labels})
    model, report = train(x, NetworkShape(1, hidden_dim, n_classes), hyper, labels=labels, class_map=class_map)
    return (model, report) if with_report else model
