"""Sparse-coding based detection of primary user emulation and jamming attacks.

A received (compressed) signal is sparse-coded by orthogonal matching pursuit
over a dictionary built from the legitimate primary user's channel. The decay
of the residual energy over the pursuit iterations, together with its absolute
gradient, forms the feature vector of a small feed-forward classifier.
"""

__version__ = "0.1.0"

from .signal_synth import (
    ChannelRealization,
    Hypothesis,
    ReceivedSignal,
    WaveformSpec,
    correlate_channel,
    draw_channel,
    receive,
    synthesize_jammer,
    synthesize_waveform,
)
from .sensing import (
    MeasurementMatrix,
    SampledDictionary,
    build_dictionary,
    build_measurement,
    compress,
)
from .pursuit import PursuitConfig, PursuitTrace, gradient_first_step, omp_trace, projection_step
from .features import FeatureVector, absolute_gradient, assemble_feature
from .classifier import ClassifierModel, NetworkShape, TrainConfig, TrainReport, forward, init_model, predict, train
from .ed_baseline import EnergyFeature, energy_of, train_ed
from .evaluation import ConfusionMatrix, DegenerateInputError, RocCurve, confusion, roc_ovr
from .appendix import AppendixReport, verify_identities

__all__ = [
    "AppendixReport",
    "ChannelRealization",
    "ClassifierModel",
    "ConfusionMatrix",
    "DegenerateInputError",
    "EnergyFeature",
    "FeatureVector",
    "Hypothesis",
    "MeasurementMatrix",
    "NetworkShape",
    "PursuitConfig",
    "PursuitTrace",
    "ReceivedSignal",
    "RocCurve",
    "SampledDictionary",
    "TrainConfig",
    "TrainReport",
    "WaveformSpec",
    "absolute_gradient",
    "assemble_feature",
    "build_dictionary",
    "build_measurement",
    "compress",
    "confusion",
    "correlate_channel",
    "draw_channel",
    "energy_of",
    "forward",
    "gradient_first_step",
    "init_model",
    "omp_trace",
    "predict",
    "projection_step",
    "receive",
    "roc_ovr",
    "synthesize_jammer",
    "synthesize_waveform",
    "train",
    "train_ed",
    "verify_identities",
]
