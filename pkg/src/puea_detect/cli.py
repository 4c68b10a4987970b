"""Command-line entry point: generate, train, eval, appendix-verify, all.

Exit status: 0 success, 2 configuration error, 3 data or storage error,
4 numeric check failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

from . import __version__, storage
from .appendix import verify_identities
from .config import FIELD_TYPES, ConfigError, ExperimentConfig, load_config, make_config
from .evaluation import DegenerateInputError
from .pipeline import (DataError, evaluate, generate_split, read_models, read_split, train_models, write_dataset,
                       write_evaluation, write_models)

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4

log = logging.getLogger("puea_detect")


class NumericCheckError(RuntimeError):
    pass


def _flag(name: str) -> str:
    return "--" + name.replace("_", "-")


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, help="TOML file with ExperimentConfig keys")
    defaults = ExperimentConfig()
    group = parser.add_argument_group("experiment overrides")
    for name in FIELD_TYPES:
        default = getattr(defaults, name)
        kw = {"dest": name, "default": None, "help": f"default: {default}"}
        if isinstance(default, bool):
            group.add_argument(_flag(name), action=argparse.BooleanOptionalAction, **kw)
        elif isinstance(default, list):
            group.add_argument(_flag(name), nargs="+", type=int if name == "m_values" else float, **kw)
        else:
            group.add_argument(_flag(name), type=type(default), **kw)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="puea-detect", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in [("generate", "simulate signals and write pursuit features"),
                        ("train", "train the proposed and energy-detection classifiers"),
                        ("eval", "evaluate trained models on the test split"),
                        ("appendix-verify", "check the projection-step identities"),
                        ("all", "generate, train, eval and appendix-verify in sequence")]:
        p = sub.add_parser(name, help=help_)
        p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
        _add_config_flags(p)
        if name in ("appendix-verify", "all"):
            p.add_argument("--fixtures", type=int, default=1000)
            p.add_argument("--corrupt-projector", action="store_true",
                           help="negative control: use a non-normalized atom (the run must fail)")
    return parser


def resolve_config(args: argparse.Namespace) -> ExperimentConfig:
    overrides = {name: getattr(args, name) for name in FIELD_TYPES if getattr(args, name, None) is not None}
    if args.config is not None:
        return load_config(args.config, overrides)
    return make_config(overrides)


def _write_config(cfg: ExperimentConfig) -> None:
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    prov = cfg.provenance()
    header = "".join(f"# {k}={v}\n" for k, v in prov.items())
    (out / "config.toml").write_text(header + cfg.to_toml())


def run_generate(cfg: ExperimentConfig) -> list[Path]:
    t0 = time.perf_counter()
    data = {split: generate_split(cfg, split, keep_samples=True) for split in ("train", "test")}
    _write_config(cfg)
    written = write_dataset(cfg, data)
    log.info("generated %d train / %d test samples in %.1f s", len(data["train"]), len(data["test"]),
             time.perf_counter() - t0)
    return written


def run_train(cfg: ExperimentConfig) -> list[Path]:
    t0 = time.perf_counter()
    data = read_split(cfg, "train")
    models = train_models(cfg, data)
    written = write_models(cfg, models)
    for m, (_, rep) in models.proposed.items():
        log.info("M=%d: final train loss %.4f, held-out loss %.4f", m, rep.train_loss[-1], rep.heldout_loss[-1])
    log.info("trained in %.1f s", time.perf_counter() - t0)
    return written


def run_eval(cfg: ExperimentConfig) -> list[Path]:
    models = read_models(cfg)
    data = read_split(cfg, "test")
    written = []
    failures = []
    for m in cfg.m_values:
        result = evaluate(cfg, models, data, m)
        written += write_evaluation(cfg, result)
        accs = ", ".join(f"{snr:g} dB: {cm.accuracy():.3f}" for snr, cm in sorted(result.confusions.items()))
        print(f"M={m} accuracy  {accs}")
        print(f"M={m} AUROC     " + ", ".join(f"{meth}/{label.short}: {curve.auroc:.4f}"
                                              for (meth, label), curve in sorted(result.roc.items(),
                                                                                 key=lambda kv: (kv[0][0],
                                                                                                 int(kv[0][1])))))
        checks = result.checks
        if checks["auroc_trapezoid_vs_pairs_max_abs_diff"] > 1e-9 or not checks["confusion_matches_tally"]:
            failures.append(f"M={m}: metric oracle mismatch {checks}")
    if failures:
        raise NumericCheckError("; ".join(failures))
    return written


def run_appendix_verify(cfg: ExperimentConfig, fixtures: int = 1000, corrupt: bool = False):
    report = verify_identities(cfg, fixtures, corrupt)
    for line in report.lines():
        print(line)
    out = Path(cfg.output_dir) / "appendix"
    out.mkdir(parents=True, exist_ok=True)
    payload = {"provenance": cfg.provenance(), **report.to_dict()}
    (out / "identities.json").write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    if not report.passed:
        raise NumericCheckError("identity suite failed")
    return report


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        cfg = resolve_config(args)
        log.info("config %s, master_seed=%d", cfg.config_hash(), cfg.master_seed)
        if args.command in ("generate", "all"):
            run_generate(cfg)
        if args.command in ("train", "all"):
            run_train(cfg)
        if args.command in ("eval", "all"):
            run_eval(cfg)
        if args.command in ("appendix-verify", "all"):
            run_appendix_verify(cfg, args.fixtures, args.corrupt_projector)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, storage.StorageError, DegenerateInputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (NumericCheckError, FloatingPointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
