"""Confusion matrices, one-vs-rest ROC curves, AUROC and report files."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from scipy.stats import rankdata

from . import storage
from .signal_synth import Hypothesis


class DegenerateInputError(ValueError):
    """A ROC curve was requested for a class with no positives or no negatives."""


def _as_labels(values) -> np.ndarray:
    return np.array([int(Hypothesis.parse(v)) for v in values], dtype=int)


@dataclass(frozen=True)
class ConfusionMatrix:
    counts: np.ndarray
    classes: tuple

    @property
    def percentages(self) -> np.ndarray:
        rows = self.counts.sum(axis=1, keepdims=True)
        with np.errstate(invalid="ignore", divide="ignore"):
            pct = np.where(rows > 0, 100.0 * self.counts / np.maximum(rows, 1), 0.0)
        return pct

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def recall(self) -> np.ndarray:
        return np.diag(self.percentages) / 100.0

    def accuracy(self) -> float:
        return float(np.trace(self.counts) / self.total)

    def rows(self):
        pct = self.percentages
        for i, c in enumerate(self.classes):
            yield [Hypothesis(c).short, *self.counts[i].tolist(), *[round(float(p), 6) for p in pct[i]]]

    def header(self) -> list[str]:
        names = [Hypothesis(c).short for c in self.classes]
        return ["true", *[f"n_{n}" for n in names], *[f"pct_{n}" for n in names]]


@dataclass(frozen=True)
class RocCurve:
    fpr: np.ndarray
    tpr: np.ndarray
    thresholds: np.ndarray
    class_index: int
    auroc: float
    label: Optional[Hypothesis] = None

    @property
    def points(self) -> np.ndarray:
        return np.column_stack([self.fpr, self.tpr])


def confusion(truths, predictions, classes: Optional[Sequence] = None) -> ConfusionMatrix:
    """Counts ``[i, j]`` of samples whose true class is ``classes[i]`` and prediction ``classes[j]``."""
    t = _as_labels(truths)
    p = _as_labels(predictions)
    if t.size != p.size:
        raise ValueError(f"length mismatch: {t.size} truths vs {p.size} predictions")
    if t.size == 0:
        raise ValueError("no samples to evaluate")
    if classes is None:
        classes = tuple(int(c) for c in np.unique(np.concatenate([t, p])))
    else:
        classes = tuple(int(Hypothesis.parse(c)) for c in classes)
    index = {c: i for i, c in enumerate(classes)}
    missing = set(np.unique(np.concatenate([t, p])).tolist()) - set(index)
    if missing:
        raise ValueError(f"labels outside the class list: {sorted(missing)}")
    counts = np.zeros((len(classes), len(classes)), dtype=int)
    np.add.at(counts, ([index[v] for v in t], [index[v] for v in p]), 1)
    return ConfusionMatrix(counts, tuple(Hypothesis(c) for c in classes))


def roc_ovr(truths, score_rows, class_index: int, classes: Optional[Sequence] = None) -> RocCurve:
    """One-vs-rest ROC of column ``class_index`` of ``score_rows``.

    ``classes`` maps score columns to hypotheses (default ``H0, H1, ...``).
    The threshold sweeps the distinct scores from high to low; a sample is
    called positive when its score is ``>=`` the threshold, so tied scores
    enter in one step. The first point (threshold ``+inf``) is ``(0, 0)``
    and the last is ``(1, 1)``.
    """
    scores = np.asarray(score_rows, dtype=float)
    if scores.ndim == 1:
        scores = scores[:, None]
        class_index = 0 if classes is None else class_index
    if not np.all(np.isfinite(scores)):
        raise ValueError("scores must be finite")
    if classes is None:
        classes = tuple(Hypothesis(i) for i in range(scores.shape[1]))
    target = Hypothesis.parse(classes[class_index])
    t = _as_labels(truths)
    if t.size != scores.shape[0]:
        raise ValueError("truths and score rows differ in length")
    positive = t == int(target)
    n_pos, n_neg = int(positive.sum()), int((~positive).sum())
    if n_pos == 0 or n_neg == 0:
        raise DegenerateInputError(f"class {target.name}: {n_pos} positives, {n_neg} negatives")
    s = scores[:, class_index]
    order = np.argsort(-s, kind="mergesort")
    s_sorted = s[order]
    pos_sorted = positive[order]
    tp = np.cumsum(pos_sorted)
    fp = np.cumsum(~pos_sorted)
    # last index of each run of equal scores
    ends = np.flatnonzero(np.append(s_sorted[1:] != s_sorted[:-1], True))
    tpr = np.concatenate([[0.0], tp[ends] / n_pos])
    fpr = np.concatenate([[0.0], fp[ends] / n_neg])
    thresholds = np.concatenate([[np.inf], s_sorted[ends]])
    auroc = float(np.sum(np.diff(fpr) * (tpr[1:] + tpr[:-1]) / 2.0))
    return RocCurve(fpr, tpr, thresholds, class_index, auroc, target)


def pair_auroc(scores, positive) -> float:
    """P(score of a random positive > that of a random negative), ties counted 1/2 (rank-sum form)."""
    scores = np.asarray(scores, dtype=float)
    positive = np.asarray(positive, dtype=bool)
    n_pos, n_neg = int(positive.sum()), int((~positive).sum())
    if n_pos == 0 or n_neg == 0:
        raise DegenerateInputError("need at least one positive and one negative")
    ranks = rankdata(scores)
    u = ranks[positive].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


@dataclass
class EvaluationResult:
    """Everything one (attack mode, M) evaluation produces."""

    attack_mode: str
    m: int
    classes: tuple
    confusions: dict = field(default_factory=dict)
    """snr_db -> ConfusionMatrix of the proposed method."""
    ed_confusions: dict = field(default_factory=dict)
    roc: dict = field(default_factory=dict)
    """(method, Hypothesis) -> RocCurve, pooled over the test SNR grid."""
    loss_curves: dict = field(default_factory=dict)
    """method -> TrainReport."""
    checks: dict = field(default_factory=dict)

    def auroc(self, method: str, label) -> float:
        return self.roc[(method, Hypothesis.parse(label))].auroc


def _snr_tag(snr: float) -> str:
    return f"{snr:g}".replace("-", "m")


def report(result: EvaluationResult, out_dir, provenance: Optional[dict] = None) -> list[Path]:
    """Write confusion, ROC, AUROC and loss-curve CSVs; returns the paths written."""
    if result is None or not result.confusions:
        raise ValueError("no evaluation results to report")
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise storage.StorageError(f"{out}: {exc}") from exc
    prov = dict(provenance or {})
    prov.update(attack_mode=result.attack_mode, m=result.m)
    written = []

    for method, table in (("proposed", result.confusions), ("ed", result.ed_confusions)):
        for snr in sorted(table):
            cm = table[snr]
            path = out / f"confusion_{method}_M{result.m}_snr{_snr_tag(snr)}.csv"
            storage.write_csv(path, cm.header(), cm.rows(), {**prov, "snr_db": snr, "method": method})
            written.append(path)

    methods = sorted({method for method, _ in result.roc})
    for method in methods:
        rows = []
        for (meth, label), curve in sorted(result.roc.items(), key=lambda kv: (kv[0][0], int(kv[0][1]))):
            if meth != method:
                continue
            rows.extend((label.short, th, fp, tp) for th, fp, tp in zip(curve.thresholds, curve.fpr, curve.tpr))
        path = out / f"roc_{method}_M{result.m}.csv"
        storage.write_csv(path, ["class", "threshold", "fpr", "tpr"], rows, {**prov, "method": method})
        written.append(path)

    if result.roc:
        rows = [(meth, label.short, round(curve.auroc, 12))
                for (meth, label), curve in sorted(result.roc.items(), key=lambda kv: (kv[0][0], int(kv[0][1])))]
        path = out / f"auroc_M{result.m}.csv"
        storage.write_csv(path, ["method", "class", "auroc"], rows, prov)
        written.append(path)

    for method, rep in sorted(result.loss_curves.items()):
        path = out / f"loss_{method}_M{result.m}.csv"
        rep.to_csv(path, {**prov, "method": method})
        written.append(path)
    return written
