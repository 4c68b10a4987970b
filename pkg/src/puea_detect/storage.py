"""On-disk formats shared by the pipeline stages.

Matrix container (``.bin``)::

    magic   4 bytes   b"PUDM"
    kind    uint8     0 = real float64, 1 = complex (interleaved re/im float64)
    ndim    uint8
    shape   ndim x uint64 (little-endian)
    data    little-endian float64, C order

Signal record file: concatenated records of little-endian interleaved re/im
float64 samples, with one JSON object per record in a ``.jsonl`` sidecar
(line ``i`` describes record ``i`` and carries its sample count).

CSV files written here start with ``#`` comment lines carrying provenance
(config hash, master seed, package version).
"""

from __future__ import annotations

import csv
import io
import json
import struct
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

MAGIC = b"PUDM"


class StorageError(OSError):
    pass


def _wrap(path, exc):
    return StorageError(f"{path}: {exc}")


def write_matrix(path, array) -> None:
    array = np.asarray(array)
    kind = 1 if np.iscomplexobj(array) else 0
    header = MAGIC + struct.pack("<BB", kind, array.ndim) + struct.pack(f"<{array.ndim}Q", *array.shape)
    if kind:
        data = np.ascontiguousarray(array, dtype="<c16").view("<f8")
    else:
        data = np.ascontiguousarray(array, dtype="<f8")
    try:
        with open(path, "wb") as fh:
            fh.write(header)
            fh.write(data.tobytes())
    except OSError as exc:
        raise _wrap(path, exc) from exc


def read_matrix(path) -> np.ndarray:
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise _wrap(path, exc) from exc
    if raw[:4] != MAGIC:
        raise StorageError(f"{path}: not a matrix container")
    kind, ndim = struct.unpack_from("<BB", raw, 4)
    shape = struct.unpack_from(f"<{ndim}Q", raw, 6)
    offset = 6 + 8 * ndim
    data = np.frombuffer(raw, dtype="<f8", offset=offset).copy()
    if kind:
        data = data.view("<c16")
    return data.reshape(shape).astype(complex if kind else float)


def _fmt(value) -> str:
    if isinstance(value, (complex, np.complexfloating)):
        return repr(complex(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def _provenance_lines(provenance: Optional[Mapping]) -> list[str]:
    if not provenance:
        return []
    return [f"# {key}={provenance[key]}" for key in sorted(provenance)]


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence], provenance: Optional[Mapping] = None) -> None:
    buf = io.StringIO()
    for line in _provenance_lines(provenance):
        buf.write(line + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    try:
        Path(path).write_text(buf.getvalue())
    except OSError as exc:
        raise _wrap(path, exc) from exc


def read_csv(path) -> tuple[dict, list[str], list[list[str]]]:
    """Return ``(provenance, header, rows)``; values are left as strings."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise _wrap(path, exc) from exc
    provenance, body = {}, []
    for line in text.splitlines():
        if line.startswith("#"):
            key, _, value = line[1:].strip().partition("=")
            provenance[key] = value
        elif line:
            body.append(line)
    rows = list(csv.reader(body))
    if not rows:
        raise StorageError(f"{path}: empty CSV")
    return provenance, rows[0], rows[1:]


def write_matrix_csv(path, array, provenance: Optional[Mapping] = None) -> None:
    array = np.atleast_2d(np.asarray(array))
    write_csv(path, [f"c{j}" for j in range(array.shape[1])], array.tolist(), provenance)


def read_matrix_csv(path) -> np.ndarray:
    _, _, rows = read_csv(path)
    if any("j" in cell for row in rows for cell in row):
        return np.array([[complex(c) for c in row] for row in rows])
    return np.array([[float(c) for c in row] for row in rows])


def write_records(path, signals: Sequence[np.ndarray], metadata: Sequence[Mapping]) -> None:
    """Write a binary record file plus its ``.jsonl`` sidecar."""
    if len(signals) != len(metadata):
        raise ValueError("one metadata entry per record is required")
    path = Path(path)
    sidecar = path.with_suffix(".jsonl")
    lines = []
    try:
        with open(path, "wb") as fh:
            for sig, meta in zip(signals, metadata):
                sig = np.ascontiguousarray(sig, dtype="<c16")
                fh.write(sig.view("<f8").tobytes())
                lines.append(json.dumps({**meta, "n_samples": int(sig.size)}, sort_keys=True))
        sidecar.write_text("\n".join(lines) + ("\n" if lines else ""))
    except OSError as exc:
        raise _wrap(path, exc) from exc


def read_records(path) -> tuple[list[np.ndarray], list[dict]]:
    path = Path(path)
    sidecar = path.with_suffix(".jsonl")
    try:
        raw = np.frombuffer(path.read_bytes(), dtype="<f8")
        meta = [json.loads(line) for line in sidecar.read_text().splitlines() if line.strip()]
    except OSError as exc:
        raise _wrap(path, exc) from exc
    cplx = raw.view("<c16")
    signals, pos = [], 0
    for m in meta:
        n = m["n_samples"]
        signals.append(cplx[pos:pos + n].astype(complex))
        pos += n
    if pos != cplx.size:
        raise StorageError(f"{path}: record file and sidecar disagree ({cplx.size} vs {pos} samples)")
    return signals, meta
