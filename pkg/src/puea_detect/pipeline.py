"""Dataset generation, training and evaluation for one experiment configuration.

Every random quantity is drawn from a seed derived from ``master_seed`` and
a fixed counter path (stage, split, class, SNR index, sample index), so any
sample can be regenerated on its own and parallel generation is reproducible.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Optional

import numpy as np

from . import storage
from .classifier import ClassifierModel, NetworkShape, TrainReport, decide, forward, train
from .config import ExperimentConfig
from .ed_baseline import energy_of
from .evaluation import EvaluationResult, confusion, pair_auroc, report, roc_ovr
from .features import absolute_gradient
from .pursuit import PursuitConfig, omp_trace
from .sensing import build_dictionary, build_measurement, compress
from .signal_synth import Hypothesis, correlate_channel, draw_channel, receive

STAGE_PHI, STAGE_BANK, STAGE_SAMPLE = 1, 2, 3
SPLITS = {"train": 0, "test": 1}


class DataError(RuntimeError):
    """Missing, inconsistent or mismatched dataset/model files."""


def derive_seed(master_seed: int, *path: int) -> int:
    """Counter-based child seed for ``path`` under ``master_seed``."""
    ss = np.random.SeedSequence([int(master_seed) & 0xFFFFFFFF, *[int(p) for p in path]])
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> 1)


def measurement_for(cfg: ExperimentConfig, m: int):
    return _measurement(m, cfg.signal_length, derive_seed(cfg.master_seed, STAGE_PHI, m))


@lru_cache(maxsize=64)
def _measurement(m: int, n: int, seed: int):
    return build_measurement(m, n, seed, allow_square=m == n)


def bank_seed(cfg: ExperimentConfig) -> int:
    return derive_seed(cfg.master_seed, STAGE_BANK)


@dataclass
class SampleKey:
    split: str
    label: Hypothesis
    snr_db: float
    snr_index: int
    index: int

    def seed(self, master_seed: int) -> int:
        return derive_seed(master_seed, STAGE_SAMPLE, SPLITS[self.split], int(self.label), self.snr_index, self.index)


def sample_keys(cfg: ExperimentConfig, split: str) -> list[SampleKey]:
    """Training samples cycle through the SNR grid; test samples are per (class, SNR)."""
    keys = []
    grid = list(cfg.snr_grid_db)
    for label in cfg.classes:
        if split == "train":
            for i in range(cfg.train_per_class):
                keys.append(SampleKey(split, label, grid[i % len(grid)], i % len(grid), i))
        else:
            for si, snr in enumerate(grid):
                for i in range(cfg.test_per_class):
                    keys.append(SampleKey(split, label, snr, si, i))
    return keys


def simulate(cfg: ExperimentConfig, key: SampleKey, m_values=None) -> dict:
    """Generate one received signal and its pursuit features for every M."""
    seed = key.seed(cfg.master_seed)
    chan_seed, rx_seed = derive_seed(seed, 0), derive_seed(seed, 1)
    spec = cfg.waveform
    pu = correlate_channel(draw_channel(cfg.tap_count, chan_seed), cfg.rho)
    rx = receive(key.label, pu, spec, key.snr_db, rx_seed)
    out = {"samples": rx.samples, "seed": seed, "energy": energy_of(rx.samples), "traces": {}}
    for m in m_values or cfg.m_values:
        phi = measurement_for(cfg, m)
        dictionary = build_dictionary(pu, spec, cfg.k, phi, bank_seed(cfg))
        trace = omp_trace(compress(phi, rx.samples), dictionary, PursuitConfig(m))
        out["traces"][m] = trace.residual_norms
    return out


def feature_matrix(norms: np.ndarray) -> np.ndarray:
    """Rows ``[||r||_2 , |G|]`` for a batch of residual-norm traces."""
    return np.hstack([norms, np.vstack([absolute_gradient(row) for row in norms])])


@dataclass
class SplitData:
    labels: np.ndarray
    snr_db: np.ndarray
    seeds: np.ndarray
    energy: np.ndarray
    traces: dict
    """M -> (n, M) residual-norm traces."""
    samples: Optional[list] = None

    def features(self, m: int) -> np.ndarray:
        return feature_matrix(self.traces[m])

    def __len__(self):
        return self.labels.size


def generate_split(cfg: ExperimentConfig, split: str, keep_samples: bool = False) -> SplitData:
    keys = sample_keys(cfg, split)
    if cfg.workers > 1:
        with ThreadPoolExecutor(cfg.workers) as pool:
            sims = list(pool.map(lambda k: simulate(cfg, k), keys))
    else:
        sims = [simulate(cfg, k) for k in keys]
    return SplitData(
        labels=np.array([int(k.label) for k in keys]),
        snr_db=np.array([k.snr_db for k in keys], dtype=float),
        seeds=np.array([s["seed"] for s in sims], dtype=np.int64),
        energy=np.array([s["energy"] for s in sims]),
        traces={m: np.vstack([s["traces"][m] for s in sims]) for m in cfg.m_values},
        samples=[s["samples"] for s in sims] if keep_samples else None,
    )


# ----------------------------------------------------------------------------- files

def dataset_dir(cfg: ExperimentConfig) -> Path:
    return Path(cfg.output_dir) / "dataset"


def write_dataset(cfg: ExperimentConfig, data: dict) -> list[Path]:
    out = dataset_dir(cfg)
    out.mkdir(parents=True, exist_ok=True)
    prov = cfg.provenance()
    written = []
    for split, sd in data.items():
        meta = [{"label": Hypothesis(int(l)).name, "snr_db": float(s), "seed": int(sd_seed), "split": split,
                 **prov}
                for l, s, sd_seed in zip(sd.labels, sd.snr_db, sd.seeds)]
        if sd.samples is not None:
            path = out / f"signals_{split}.bin"
            storage.write_records(path, sd.samples, meta)
            written += [path, path.with_suffix(".jsonl")]
        path = out / f"labels_{split}.csv"
        storage.write_csv(path, ["index", "label", "snr_db", "seed", "energy"],
                          ((i, Hypothesis(int(l)).short, float(s), int(se), float(e))
                           for i, (l, s, se, e) in enumerate(zip(sd.labels, sd.snr_db, sd.seeds, sd.energy))),
                          prov)
        written.append(path)
        info = np.column_stack([sd.labels, sd.snr_db, sd.seeds.astype(float), sd.energy])
        path = out / f"meta_{split}.bin"
        storage.write_matrix(path, info)
        written.append(path)
        for m, norms in sd.traces.items():
            path = out / f"traces_M{m}_{split}.bin"
            storage.write_matrix(path, norms)
            written.append(path)
            if cfg.csv_export:
                feats = feature_matrix(norms)
                path = out / f"features_M{m}_{split}.csv"
                storage.write_csv(path, ["label", "snr_db", *[f"f{j}" for j in range(feats.shape[1])]],
                                  ([Hypothesis(int(l)).short, float(s), *row.tolist()]
                                   for l, s, row in zip(sd.labels, sd.snr_db, feats)), {**prov, "m": m})
                written.append(path)
                path = out / f"traces_M{m}_{split}.csv"
                storage.write_csv(path, ["label", "snr_db", *[f"r{j + 1}" for j in range(m)]],
                                  ([Hypothesis(int(l)).short, float(s), *row.tolist()]
                                   for l, s, row in zip(sd.labels, sd.snr_db, norms)), {**prov, "m": m})
                written.append(path)
    manifest = {"provenance": prov, "config": cfg.semantic_dict(), "splits": sorted(data),
                "files": sorted(p.name for p in written)}
    (out / "dataset.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    for m in cfg.m_values:
        measurement_for(cfg, m).save(out / f"phi_M{m}.bin")
    return written


def read_split(cfg: ExperimentConfig, split: str) -> SplitData:
    out = dataset_dir(cfg)
    manifest_path = out / "dataset.json"
    if not manifest_path.exists():
        raise DataError(f"{manifest_path}: dataset not found (run `generate` first)")
    manifest = json.loads(manifest_path.read_text())
    if manifest["provenance"]["config_hash"] != cfg.config_hash():
        raise DataError(f"{manifest_path}: dataset was generated with config "
                        f"{manifest['provenance']['config_hash']}, current config is {cfg.config_hash()}")
    try:
        info = storage.read_matrix(out / f"meta_{split}.bin")
        traces = {m: storage.read_matrix(out / f"traces_M{m}_{split}.bin") for m in cfg.m_values}
    except storage.StorageError as exc:
        raise DataError(str(exc)) from exc
    if info.shape[0] == 0:
        raise DataError(f"{out}: empty {split} split")
    return SplitData(labels=info[:, 0].astype(int), snr_db=info[:, 1], seeds=info[:, 2].astype(np.int64),
                     energy=info[:, 3], traces=traces)


# ----------------------------------------------------------------------------- train / eval

@dataclass
class TrainedModels:
    proposed: dict = field(default_factory=dict)
    """M -> (ClassifierModel, TrainReport)."""
    ed: Optional[tuple] = None


def train_models(cfg: ExperimentConfig, data: SplitData) -> TrainedModels:
    hyper = cfg.train_config
    models = TrainedModels()
    for m in cfg.m_values:
        shape = NetworkShape(2 * m, cfg.hidden_dim, len(cfg.classes))
        models.proposed[m] = train(data.features(m), shape, hyper, labels=data.labels, class_map=cfg.classes)
    if cfg.train_ed:
        shape = NetworkShape(1, cfg.hidden_dim, len(cfg.classes))
        models.ed = train(data.energy[:, None], shape, hyper, labels=data.labels, class_map=cfg.classes)
    return models


def write_models(cfg: ExperimentConfig, models: TrainedModels) -> list[Path]:
    out = Path(cfg.output_dir) / "models"
    out.mkdir(parents=True, exist_ok=True)
    prov = cfg.provenance()
    written = []
    for m, (model, rep) in models.proposed.items():
        model.save(out / f"proposed_M{m}", {**prov, "m": m})
        rep.to_csv(out / f"loss_proposed_M{m}.csv", {**prov, "m": m})
        written += [out / f"proposed_M{m}.json", out / f"loss_proposed_M{m}.csv"]
    if models.ed is not None:
        model, rep = models.ed
        model.save(out / "ed", prov)
        rep.to_csv(out / "loss_ed.csv", prov)
        written += [out / "ed.json", out / "loss_ed.csv"]
    return written


def read_models(cfg: ExperimentConfig) -> TrainedModels:
    out = Path(cfg.output_dir) / "models"
    models = TrainedModels()
    try:
        for m in cfg.m_values:
            model = ClassifierModel.load(out / f"proposed_M{m}")
            models.proposed[m] = (model, _read_report(out / f"loss_proposed_M{m}.csv"))
        if cfg.train_ed:
            models.ed = (ClassifierModel.load(out / "ed"), _read_report(out / "loss_ed.csv"))
    except storage.StorageError as exc:
        raise DataError(f"{exc} (run `train` first)") from exc
    return models


def _read_report(path) -> TrainReport:
    _, _, rows = storage.read_csv(path)
    arr = np.array([[float(v) for v in row] for row in rows])
    return TrainReport(arr[:, 1], arr[:, 2], arr.shape[0])


def _confusion_oracle(truth: np.ndarray, pred: np.ndarray, classes) -> np.ndarray:
    counts = np.zeros((len(classes), len(classes)), dtype=int)
    for t, p in zip(truth.tolist(), pred.tolist()):
        counts[classes.index(t), classes.index(p)] += 1
    return counts


def evaluate(cfg: ExperimentConfig, models: TrainedModels, data: SplitData, m: int) -> EvaluationResult:
    """Per-SNR confusion matrices and SNR-pooled one-vs-rest ROC for one M."""
    if len(data) == 0:
        raise DataError("empty test set")
    classes = [int(c) for c in cfg.classes]
    result = EvaluationResult(cfg.attack_mode, m, cfg.classes)
    model, rep = models.proposed[m]
    feats = data.features(m)
    if feats.shape[1] != model.w1.shape[1]:
        raise DataError(f"model expects {model.w1.shape[1]} features, test set has {feats.shape[1]}")
    methods = {"proposed": (model, feats)}
    result.loss_curves["proposed"] = rep
    if models.ed is not None:
        methods["ed"] = (models.ed[0], data.energy[:, None])
        result.loss_curves["ed"] = models.ed[1]

    auroc_gap = 0.0
    tally_ok = True
    for method, (mdl, x) in methods.items():
        scores = forward(mdl, x)
        pred = np.array([int(mdl.class_map[i]) for i in decide(scores)])
        table = result.confusions if method == "proposed" else result.ed_confusions
        for snr in cfg.snr_grid_db:
            sel = data.snr_db == snr
            if not np.any(sel):
                continue
            cm = confusion(data.labels[sel], pred[sel], classes)
            tally_ok &= bool(np.array_equal(cm.counts, _confusion_oracle(data.labels[sel], pred[sel], classes)))
            table[float(snr)] = cm
        for ci, c in enumerate(mdl.class_map):
            curve = roc_ovr(data.labels, scores, ci, mdl.class_map)
            result.roc[(method, Hypothesis(c))] = curve
            auroc_gap = max(auroc_gap, abs(curve.auroc - pair_auroc(scores[:, ci], data.labels == int(c))))
    result.checks = {"auroc_trapezoid_vs_pairs_max_abs_diff": auroc_gap, "confusion_matches_tally": tally_ok}
    return result


def write_evaluation(cfg: ExperimentConfig, result: EvaluationResult) -> list[Path]:
    out = Path(cfg.output_dir) / "eval"
    written = report(result, out, cfg.provenance())
    summary = {
        "provenance": cfg.provenance(),
        "attack_mode": result.attack_mode,
        "m": result.m,
        "accuracy": {f"{snr:g}": round(cm.accuracy(), 12) for snr, cm in sorted(result.confusions.items())},
        "auroc": {f"{meth}/{label.short}": round(curve.auroc, 12)
                  for (meth, label), curve in sorted(result.roc.items(), key=lambda kv: (kv[0][0], int(kv[0][1])))},
        "checks": result.checks,
    }
    path = out / f"summary_M{result.m}.json"
    path.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return written + [path]
