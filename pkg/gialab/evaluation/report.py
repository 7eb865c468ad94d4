"""Report artifacts: report.json, metrics.csv, transfer_matrix.csv, curve.csv.

Floats are written with 17 significant digits in CSV and as repr() in JSON,
so every number reloads exactly.
"""
from __future__ import annotations

from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from ..core import read_csv, read_json, write_csv, write_json
from ..errors import LoadError
from .harness import EvalReport, Scores, SweepPoint, TransferMatrix

REPORT_FILE = "report.json"
METRICS_FILE = "metrics.csv"
TRANSFER_FILE = "transfer_matrix.csv"
CURVE_FILE = "curve.csv"

METRICS_HEADER = ["method", "seed", "kind", "name", "clean", "attacked", "reduction"]
CURVE_HEADER = ["method", "seed", "b", "kind", "name", "clean", "attacked", "reduction"]


def report_to_dict(report: EvalReport) -> dict:
    return {
        "method": report.method,
        "seed": report.seed,
        "budget": report.budget,
        "n_injected": report.n_injected,
        "models": [
            {"name": name, "clean_accuracy": c, "attacked_accuracy": a}
            for name, c, a in report.per_model()
        ],
        "clean": report.clean.to_dict(),
        "attacked": report.attacked.to_dict(),
        "reduction": report.reduction,
        **({"extra": report.extra} if report.extra else {}),
    }


def report_from_dict(d: dict) -> EvalReport:
    models = d["models"]
    return EvalReport(
        models=tuple(m["name"] for m in models),
        clean_accuracy=tuple(float(m["clean_accuracy"]) for m in models),
        attacked_accuracy=tuple(float(m["attacked_accuracy"]) for m in models),
        clean=Scores(**{k: float(v) for k, v in d["clean"].items()}),
        attacked=Scores(**{k: float(v) for k, v in d["attacked"].items()}),
        method=d["method"],
        seed=d.get("seed"),
        budget=d.get("budget"),
        n_injected=int(d.get("n_injected", 0)),
        extra=d.get("extra", {}),
    )


def _score_rows(report: EvalReport) -> list[list]:
    """[kind, name, clean, attacked, reduction] per model, then per aggregate."""
    rows: list[list] = [["model", name, c, a, c - a] for name, c, a in report.per_model()]
    for key in ("s_avg", "s_top3", "s_weighted"):
        c, a = getattr(report.clean, key), getattr(report.attacked, key)
        rows.append(["aggregate", key, c, a, c - a])
    return rows


def metrics_rows(reports: Sequence[EvalReport]) -> list[list]:
    rows: list[list] = []
    for r in reports:
        seed = "" if r.seed is None else r.seed
        rows.extend([r.method, seed, *row] for row in _score_rows(r))
    return rows


def write_transfer_matrix(path: Path, matrix: TransferMatrix) -> Path:
    rows = [[s, *matrix.reductions[i].tolist()] for i, s in enumerate(matrix.surrogates)]
    return write_csv(path, ["surrogate", *matrix.defenses], rows)


def load_transfer_matrix(path: Path) -> TransferMatrix:
    header, rows = read_csv(path)
    if not header or header[0] != "surrogate":
        raise LoadError(path, 1, "expected a 'surrogate' header column")
    try:
        values = np.array([[float(v) for v in row[1:]] for row in rows], dtype=np.float64)
    except ValueError as e:
        raise LoadError(path, None, f"bad matrix entry: {e}") from None
    return TransferMatrix(
        surrogates=tuple(row[0] for row in rows),
        defenses=tuple(header[1:]),
        reductions=values.reshape(len(rows), len(header) - 1),
    )


def curve_rows(points: Sequence[SweepPoint]) -> list[list]:
    rows: list[list] = []
    for p in points:
        seed = "" if p.report.seed is None else p.report.seed
        rows.extend([p.report.method, seed, p.b, *row] for row in _score_rows(p.report))
    return rows


def emit_report(
    out_dir: Path,
    reports: Sequence[EvalReport],
    *,
    matrix: Optional[TransferMatrix] = None,
    curve: Optional[Sequence[SweepPoint]] = None,
) -> list[Path]:
    out_dir = Path(out_dir)
    written = [
        write_json(out_dir / REPORT_FILE, {"reports": [report_to_dict(r) for r in reports]}),
        write_csv(out_dir / METRICS_FILE, METRICS_HEADER, metrics_rows(reports)),
    ]
    if matrix is not None:
        written.append(write_transfer_matrix(out_dir / TRANSFER_FILE, matrix))
    if curve:
        written.append(write_csv(out_dir / CURVE_FILE, CURVE_HEADER, curve_rows(curve)))
    return written


def load_reports(path: Path) -> list[EvalReport]:
    path = Path(path)
    if not path.exists():
        raise LoadError(path, None, "missing file")
    try:
        return [report_from_dict(d) for d in read_json(path)["reports"]]
    except (KeyError, TypeError, ValueError) as e:
        raise LoadError(path, None, f"malformed report: {e}") from None
