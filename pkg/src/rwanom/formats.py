"""On-disk formats: CSV series, dataset manifests, atomic writes.

All writers go through :func:`atomic_write_text` (write to a temp file in the
target directory, then rename), so a crash never leaves a half-written file
behind.  Floats are rendered with ``repr``, which round-trips exactly, and no
file embeds timestamps — identical inputs give byte-identical outputs.
"""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from pathlib import Path

import numpy as np

from .telemetry import GroundTruth, Status, TimeSeries

SERIES_HEADER = ("k", "omega_rad_s", "friction_mNm")
TRUTH_HEADER = ("k", "dry_true_mNm")


class FormatError(ValueError):
    """Malformed data file."""


def fmt_float(x: float) -> str:
    """Shortest decimal string that round-trips to the same float."""
    return repr(float(x))


def atomic_write_text(path: str | Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def atomic_write_bytes(path: str | Path, blob: bytes) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(blob)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def dump_json(doc: object) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def write_json(path: str | Path, doc: object) -> None:
    atomic_write_text(path, dump_json(doc))


def read_json(path: str | Path) -> dict:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise FormatError(f"cannot read JSON file {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise FormatError(f"{path}: expected a JSON object")
    return doc


def write_series_csv(path: str | Path, series: TimeSeries) -> None:
    """CSV with header k,omega_rad_s,friction_mNm; k starts at 1."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SERIES_HEADER)
    for k in range(len(series)):
        writer.writerow((k + 1, fmt_float(series.omega[k]),
                         fmt_float(series.friction[k])))
    atomic_write_text(path, buf.getvalue())


def read_series_csv(path: str | Path) -> TimeSeries:
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise FormatError(f"cannot read series file {path}: {exc}") from exc
    if not rows or tuple(rows[0]) != SERIES_HEADER:
        raise FormatError(
            f"{path}: expected header {','.join(SERIES_HEADER)}")
    omega, friction = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != 3:
            raise FormatError(f"{path}:{lineno}: expected 3 columns")
        try:
            k = int(row[0])
            omega.append(float(row[1]))
            friction.append(float(row[2]))
        except ValueError as exc:
            raise FormatError(f"{path}:{lineno}: {exc}") from exc
        if k != lineno - 1:
            raise FormatError(f"{path}:{lineno}: sample index {k} out of order")
    if not omega:
        raise FormatError(f"{path}: series is empty")
    return TimeSeries(omega=np.array(omega), friction=np.array(friction))


def write_truth_csv(path: str | Path, truth: GroundTruth) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(TRUTH_HEADER)
    for k, value in enumerate(truth.dry_true, start=1):
        writer.writerow((k, fmt_float(value)))
    atomic_write_text(path, buf.getvalue())


def series_filename(series_id: int) -> str:
    return f"series_{series_id:05d}.csv"


def write_dataset(out_dir: str | Path,
                  items: list[tuple[int, TimeSeries, Status, GroundTruth]],
                  seed: int, generator_params: dict | None = None) -> None:
    """Series CSVs, ground-truth sidecars, and a manifest.json."""
    out_dir = Path(out_dir)
    entries = []
    for series_id, series, status, truth in items:
        name = series_filename(series_id)
        write_series_csv(out_dir / name, series)
        truth_name = name.replace(".csv", "_truth.csv")
        write_truth_csv(out_dir / truth_name, truth)
        entries.append({
            "id": series_id,
            "file": name,
            "truth_file": truth_name,
            "status": status.label,
            "n_samples": len(series),
            "events": [[int(k), fmt_float(d)] for k, d in truth.events],
        })
    doc = {
        "format": "rwanom-dataset-v1",
        "seed": seed,
        "n_series": len(entries),
        "series": entries,
    }
    if generator_params is not None:
        doc["generator"] = generator_params
    write_json(out_dir / "manifest.json", doc)


def read_manifest(data_dir: str | Path) -> dict:
    doc = read_json(Path(data_dir) / "manifest.json")
    if doc.get("format") != "rwanom-dataset-v1":
        raise FormatError(f"{data_dir}: not a dataset directory")
    return doc


def load_dataset(data_dir: str | Path) -> list[tuple[int, TimeSeries, Status]]:
    """All series of a dataset, sorted by id (ground truth not loaded)."""
    data_dir = Path(data_dir)
    doc = read_manifest(data_dir)
    out = []
    for entry in sorted(doc["series"], key=lambda e: e["id"]):
        series = read_series_csv(data_dir / entry["file"])
        out.append((int(entry["id"]), series, Status.from_label(entry["status"])))
    return out
