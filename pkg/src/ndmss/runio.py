"""Run logs, summaries and tables.

A run log is line-delimited JSON. The first line is a header record
``{"record": "header", "version": ..., "config": ...}``; every following
line is ``{"record": "iteration", ...}``. Floats are written with ``repr``
precision so a parse/write round trip is lossless.
"""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path

import numpy as np

from . import __version__
from .optimizer import IterationRecord
from .stats import EstimateWithError


def header_record(config: dict) -> dict:
    return {"record": "header", "version": __version__, "config": config}


def iteration_to_dict(rec: IterationRecord) -> dict:
    return {
        "record": "iteration",
        "iteration": rec.iteration,
        "cost": rec.cost.as_dict(),
        "acceptance_rate": rec.acceptance_rate,
        "observables": {k: v.as_dict() for k, v in rec.observables.items()},
        "checkpoint": rec.checkpoint,
        "wall_time": rec.wall_time,
    }


def _estimate_from_dict(d: dict) -> EstimateWithError:
    mean = d["mean"] + 1j * d["mean_imag"] if "mean_imag" in d else d["mean"]
    return EstimateWithError(mean, d["variance"], d["n_samples"], d["error"])


def iteration_from_dict(d: dict) -> IterationRecord:
    if d.get("record") != "iteration":
        raise ValueError(f"not an iteration record: {d.get('record')!r}")
    return IterationRecord(
        iteration=d["iteration"],
        cost=_estimate_from_dict(d["cost"]),
        acceptance_rate=d["acceptance_rate"],
        observables={k: _estimate_from_dict(v) for k, v in d["observables"].items()},
        checkpoint=d["checkpoint"],
        wall_time=d["wall_time"],
    )


class RunLog:
    """Append-only writer; every record is flushed as soon as it is written."""

    def __init__(self, path, config: dict):
        self.path = Path(path)
        self._fh = open(self.path, "w")
        self._write(header_record(config))

    def _write(self, obj: dict) -> None:
        self._fh.write(json.dumps(obj, allow_nan=True) + "\n")
        self._fh.flush()

    def append(self, rec: IterationRecord) -> None:
        self._write(iteration_to_dict(rec))

    def close(self) -> None:
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def read_run_log(path) -> tuple[dict, list[IterationRecord]]:
    header = None
    records = []
    with open(path) as fh:
        for n, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}:{n}: malformed record ({exc})") from exc
            if n == 1:
                if obj.get("record") != "header":
                    raise ValueError(f"{path}: first record is not a header")
                header = obj
            else:
                records.append(iteration_from_dict(obj))
    if header is None:
        raise ValueError(f"{path}: empty run log")
    return header, records


def matrix_to_json(m) -> list:
    """Complex matrix as nested ``[re, im]`` pairs."""
    m = np.asarray(m)
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def matrix_from_json(data) -> np.ndarray:
    a = np.asarray(data, dtype=np.float64)
    return a[..., 0] + 1j * a[..., 1]


def write_json(path, obj: dict) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def read_json(path) -> dict:
    return json.loads(Path(path).read_text())


def write_csv(path, columns: list[str], rows: list[dict], comments: list[str]) -> None:
    """CSV with leading ``#`` comment lines; missing cells are left empty."""
    buf = io.StringIO()
    for c in comments:
        buf.write(f"# {c}\n")
    w = csv.DictWriter(buf, fieldnames=columns, restval="", lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow(r)
    Path(path).write_text(buf.getvalue())


def read_csv(path) -> list[dict]:
    with open(path) as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    return list(csv.DictReader(lines))
