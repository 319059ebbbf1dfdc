"""Local SQLite ledger of verification runs."""

import sqlite3
import json
from typing import Optional, List, Dict, Any
from pathlib import Path

from config.settings import settings
from utils.console import get_logger


logger = get_logger(__name__)


class RunLedger:
    """SQLite table of past runs: command, verdict, exit code and the full report."""

    def __init__(self, db_path: str = None):
        """Open (and create if needed) the ledger database."""
        self.db_path = db_path or settings.db_path
        Path(self.db_path).parent.mkdir(parents=True, exist_ok=True)
        self.conn = sqlite3.connect(self.db_path)
        self.conn.row_factory = sqlite3.Row
        self._create_tables()

    def _create_tables(self):
        cursor = self.conn.cursor()
        cursor.execute("""
            CREATE TABLE IF NOT EXISTS runs (
                id INTEGER PRIMARY KEY AUTOINCREMENT,
                command TEXT NOT NULL,
                verdict TEXT,
                exit_code INTEGER,
                tolerance REAL,
                grid_size INTEGER,
                seed TEXT,
                report TEXT,
                created_at TIMESTAMP DEFAULT CURRENT_TIMESTAMP
            )
        """)
        cursor.execute("CREATE INDEX IF NOT EXISTS idx_runs_command ON runs(command)")
        self.conn.commit()

    def record_run(
        self,
        command: str,
        verdict: Optional[str],
        exit_code: int,
        report: Dict[str, Any],
        tolerance: Optional[float] = None,
        grid_size: Optional[int] = None,
        seed: Optional[int] = None,
    ) -> Optional[int]:
        """Append a run; returns its id, or None if the write failed."""
        try:
            cursor = self.conn.cursor()
            cursor.execute("""
                INSERT INTO runs (command, verdict, exit_code, tolerance, grid_size, seed, report)
                VALUES (?, ?, ?, ?, ?, ?, ?)
            """, (
                command,
                verdict,
                exit_code,
                tolerance,
                grid_size,
                # 64-bit seeds overflow SQLite integers
                None if seed is None else str(seed),
                json.dumps(report, sort_keys=True, default=str),
            ))
            self.conn.commit()
            return cursor.lastrowid
        except sqlite3.Error as e:
            logger.warning("could not record run: %s", e)
            return None

    def _row(self, row: sqlite3.Row) -> Dict[str, Any]:
        data = dict(row)
        data["report"] = json.loads(data["report"]) if data.get("report") else None
        if data.get("seed") is not None:
            data["seed"] = int(data["seed"])
        return data

    def get_run(self, run_id: int) -> Optional[Dict[str, Any]]:
        cursor = self.conn.cursor()
        cursor.execute("SELECT * FROM runs WHERE id = ?", (run_id,))
        row = cursor.fetchone()
        return self._row(row) if row else None

    def get_recent_runs(self, limit: int = 20) -> List[Dict[str, Any]]:
        """Most recent runs first."""
        cursor = self.conn.cursor()
        cursor.execute("SELECT * FROM runs ORDER BY id DESC LIMIT ?", (limit,))
        return [self._row(row) for row in cursor.fetchall()]

    def get_runs_by_command(self, command: str, limit: int = 20) -> List[Dict[str, Any]]:
        cursor = self.conn.cursor()
        cursor.execute(
            "SELECT * FROM runs WHERE command = ? ORDER BY id DESC LIMIT ?",
            (command, limit)
        )
        return [self._row(row) for row in cursor.fetchall()]

    def verdict_counts(self) -> Dict[str, int]:
        cursor = self.conn.cursor()
        cursor.execute("SELECT COALESCE(verdict, 'error') AS verdict, COUNT(*) AS n FROM runs GROUP BY 1")
        return {row["verdict"]: row["n"] for row in cursor.fetchall()}

    def close(self):
        """Close database connection."""
        self.conn.close()
