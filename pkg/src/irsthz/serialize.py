"""CSV/JSON output of trial reports and sweep tables.

Numbers are written with 9 significant digits, so re-emitting a loaded file
reproduces it byte for byte. Wall-clock timings are not written: they would
make otherwise identical runs differ.
"""
from __future__ import annotations

import csv
import io
import json
import sys

import numpy as np

from .runner import AlgorithmOutcome, SweepRow, SweepTable, TrialReport
from .scenario import Topology

CSV_COLUMNS = ("axis_value", "algorithm", "mean_rate", "stderr", "mean_tau", "trials")


def fmt(x) -> str:
    return f"{float(x):.9g}"


def _round(obj):
    """Round every float in a nested structure to 9 significant digits."""
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(fmt(obj))
    if isinstance(obj, np.ndarray):
        return _round(obj.tolist())
    if isinstance(obj, dict):
        return {k: _round(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round(v) for v in obj]
    return obj


# --------------------------------------------------------------------------
# dict conversion
# --------------------------------------------------------------------------

def report_to_dict(rep: TrialReport) -> dict:
    return _round({
        "seed": rep.seed,
        "topology": rep.topology.to_dict(),
        "ul_sums": rep.ul_sums,
        "dl_sums": rep.dl_sums,
        "ul_sinr": rep.ul_sinr,
        "dl_sinr": rep.dl_sinr,
        "dl_power": rep.dl_power,
        "waterfill": {"iterations": rep.wf_iterations, "converged": rep.wf_converged},
        "rate_matrix": rep.rate_matrix,
        "algorithms": {
            tag: {
                "pairs": out.pairs,
                "tau": out.tau,
                "rate": out.rate,
                "e2e_rate": out.e2e_rate,
                "stable": out.stable,
                "proposals": out.proposals,
                "evaluations": out.evaluations,
            }
            for tag, out in rep.algorithms.items()
        },
    })


def report_from_dict(d: dict) -> TrialReport:
    arr = lambda k: np.asarray(d[k], dtype=float)  # noqa: E731
    return TrialReport(
        seed=int(d["seed"]),
        topology=Topology.from_dict(d["topology"]),
        ul_sums=arr("ul_sums"),
        dl_sums=arr("dl_sums"),
        ul_sinr=arr("ul_sinr"),
        dl_sinr=arr("dl_sinr"),
        dl_power=arr("dl_power"),
        wf_iterations=list(d["waterfill"]["iterations"]),
        wf_converged=list(d["waterfill"]["converged"]),
        rate_matrix=arr("rate_matrix"),
        algorithms={tag: AlgorithmOutcome(**v) for tag, v in d["algorithms"].items()},
    )


def _sorted_rows(table: SweepTable) -> list:
    return sorted(table.rows, key=lambda r: (r.axis_value, r.algorithm))


def table_to_dict(table: SweepTable) -> dict:
    return _round({
        "axis": table.axis,
        "values": table.values,
        "rows": [{c: getattr(r, c) for c in CSV_COLUMNS} for r in _sorted_rows(table)],
    })


def table_from_dict(d: dict) -> SweepTable:
    rows = [SweepRow(float(r["axis_value"]), r["algorithm"], float(r["mean_rate"]),
                     float(r["stderr"]), float(r["mean_tau"]), int(r["trials"])) for r in d["rows"]]
    return SweepTable(d["axis"], [float(v) for v in d["values"]], rows)


# --------------------------------------------------------------------------
# text rendering
# --------------------------------------------------------------------------

def to_json(obj) -> str:
    if isinstance(obj, TrialReport):
        d = report_to_dict(obj)
    elif isinstance(obj, SweepTable):
        d = table_to_dict(obj)
    else:
        d = _round(obj)
    return json.dumps(d, indent=2, allow_nan=False) + "\n"


def to_csv(table: SweepTable) -> str:
    if not isinstance(table, SweepTable):
        raise TypeError("CSV output is only defined for sweep tables")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in _sorted_rows(table):
        w.writerow([fmt(r.axis_value), r.algorithm, fmt(r.mean_rate), fmt(r.stderr),
                    fmt(r.mean_tau), r.trials])
    return buf.getvalue()


def render(obj, format: str) -> str:
    if format == "json":
        return to_json(obj)
    if format == "csv":
        return to_csv(obj)
    raise ValueError(f"unknown output format {format!r}; use csv or json")


def emit(obj, format: str, path=None) -> str:
    """Write ``obj`` to ``path`` (``None`` or ``"-"`` means stdout); returns the text."""
    text = render(obj, format)
    if path is None or str(path) == "-":
        sys.stdout.write(text)
        return text
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc
    return text


def _read(path) -> str:
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise OSError(f"cannot read {path}: {exc.strerror or exc}") from exc


def load_json(path):
    """Load a JSON file written by :func:`emit` back into a report or table."""
    d = json.loads(_read(path))
    if "rows" in d and "axis" in d:
        return table_from_dict(d)
    return report_from_dict(d)


def load_csv(path, axis: str = "") -> SweepTable:
    rows = []
    reader = csv.DictReader(io.StringIO(_read(path)))
    if tuple(reader.fieldnames or ()) != CSV_COLUMNS:
        raise ValueError(f"{path}: unexpected CSV header {reader.fieldnames}")
    for r in reader:
        rows.append(SweepRow(float(r["axis_value"]), r["algorithm"], float(r["mean_rate"]),
                             float(r["stderr"]), float(r["mean_tau"]), int(r["trials"])))
    values = sorted({r.axis_value for r in rows})
    return SweepTable(axis, values, rows)
