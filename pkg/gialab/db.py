from __future__ import annotations
import sqlite3
from pathlib import Path
from typing import Optional

from .core import ensure_dir, now_iso

SCHEMA = '''
CREATE TABLE IF NOT EXISTS runs (
    id INTEGER PRIMARY KEY AUTOINCREMENT,
    command TEXT NOT NULL,            -- synth | train | attack | evaluate
    method TEXT,                      -- tdgia | fgsm | afgsm | ablation:<policy>
    seed INTEGER,
    out_path TEXT NOT NULL,
    created_at TEXT NOT NULL
);

CREATE TABLE IF NOT EXISTS metrics (
    id INTEGER PRIMARY KEY AUTOINCREMENT,
    run_id INTEGER NOT NULL,
    model TEXT NOT NULL,
    clean_accuracy REAL,
    attacked_accuracy REAL,
    FOREIGN KEY(run_id) REFERENCES runs(id)
);

CREATE INDEX IF NOT EXISTS idx_runs_command ON runs(command, seed);
CREATE INDEX IF NOT EXISTS idx_metrics_run ON metrics(run_id);
'''


def connect(path: Path) -> sqlite3.Connection:
    ensure_dir(Path(path).parent)
    con = sqlite3.connect(path)
    con.row_factory = sqlite3.Row
    return con


def init_db(path: Path) -> None:
    con = connect(path)
    try:
        con.executescript(SCHEMA)
        con.commit()
    finally:
        con.close()


def q_all(path: Path, sql: str, params: tuple = ()) -> list[sqlite3.Row]:
    con = connect(path)
    try:
        return con.execute(sql, params).fetchall()
    finally:
        con.close()


def exec_sql(path: Path, sql: str, params: tuple = ()) -> int:
    con = connect(path)
    try:
        cur = con.execute(sql, params)
        con.commit()
        return cur.lastrowid
    finally:
        con.close()


def record_run(
    path: Path,
    command: str,
    out_path: Path,
    *,
    method: Optional[str] = None,
    seed: Optional[int] = None,
) -> int:
    init_db(path)
    return exec_sql(
        path,
        "INSERT INTO runs (command, method, seed, out_path, created_at) VALUES (?, ?, ?, ?, ?)",
        (command, method, seed, str(out_path), now_iso()),
    )


def record_metrics(
    path: Path,
    run_id: int,
    rows: list[tuple[str, Optional[float], Optional[float]]],
) -> None:
    con = connect(path)
    try:
        con.executemany(
            "INSERT INTO metrics (run_id, model, clean_accuracy, attacked_accuracy) VALUES (?, ?, ?, ?)",
            [(run_id, name, clean, attacked) for name, clean, attacked in rows],
        )
        con.commit()
    finally:
        con.close()
