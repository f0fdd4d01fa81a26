"""
SQLite run ledger for SplitLab
"""

import sqlite3
from datetime import datetime
from pathlib import Path

from .models import ExperimentLog


class LabDatabase:
    """Records every run, diagnose and sample invocation"""

    def __init__(self, db_path: str):
        self.db_path = db_path
        Path(db_path).parent.mkdir(parents=True, exist_ok=True)
        self.init_db()

    def get_connection(self):
        """Get a database connection"""
        conn = sqlite3.connect(self.db_path, timeout=30.0)
        conn.row_factory = sqlite3.Row
        return conn

    def init_db(self):
        """Initialize database schema"""
        conn = self.get_connection()
        cursor = conn.cursor()

        cursor.execute("""
            CREATE TABLE IF NOT EXISTS experiment_logs (
                id INTEGER PRIMARY KEY AUTOINCREMENT,
                command TEXT NOT NULL,
                target TEXT,
                scheme TEXT,
                seed TEXT,
                started_at TEXT,
                completed_at TEXT,
                out_dir TEXT,
                kl_slope REAL,
                w1_slope REAL,
                success INTEGER DEFAULT 1,
                error_message TEXT
            )
        """)
        cursor.execute("CREATE INDEX IF NOT EXISTS idx_command ON experiment_logs(command)")
        cursor.execute("CREATE INDEX IF NOT EXISTS idx_started_at ON experiment_logs(started_at)")

        conn.commit()
        conn.close()

    def log_experiment(self, log: ExperimentLog) -> int:
        """Insert a ledger entry; returns its id"""
        conn = self.get_connection()
        cursor = conn.cursor()

        cursor.execute("""
            INSERT INTO experiment_logs (
                command, target, scheme, seed,
                started_at, completed_at, out_dir,
                kl_slope, w1_slope, success, error_message
            ) VALUES (?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?)
        """, (
            log.command,
            log.target,
            log.scheme,
            # SQLite integers are signed 64-bit
            str(log.seed) if log.seed is not None else None,
            log.started_at.isoformat() if log.started_at else None,
            log.completed_at.isoformat() if log.completed_at else None,
            log.out_dir,
            log.kl_slope,
            log.w1_slope,
            int(log.success),
            log.error_message
        ))

        conn.commit()
        log.id = cursor.lastrowid
        conn.close()
        return log.id

    def get_recent_logs(self, limit: int = 20) -> list[dict]:
        """Get recent ledger entries"""
        conn = self.get_connection()
        cursor = conn.cursor()

        cursor.execute("""
            SELECT * FROM experiment_logs
            ORDER BY id DESC
            LIMIT ?
        """, (limit,))

        logs = [dict(row) for row in cursor.fetchall()]
        conn.close()
        return logs

    def get_stats(self) -> dict:
        """Get ledger statistics"""
        conn = self.get_connection()
        cursor = conn.cursor()

        cursor.execute("SELECT COUNT(*) as total, COALESCE(SUM(success), 0) as ok FROM experiment_logs")
        row = cursor.fetchone()
        total, ok = row['total'], row['ok']

        cursor.execute("SELECT command, COUNT(*) as count FROM experiment_logs GROUP BY command ORDER BY count DESC")
        by_command = {r['command']: r['count'] for r in cursor.fetchall()}

        cursor.execute("""
            SELECT target, COUNT(*) as count FROM experiment_logs
            WHERE target IS NOT NULL AND target != ''
            GROUP BY target ORDER BY count DESC
        """)
        by_target = {r['target']: r['count'] for r in cursor.fetchall()}

        cursor.execute("SELECT MAX(started_at) as last FROM experiment_logs")
        last = cursor.fetchone()['last']

        conn.close()

        return {
            'total_runs': total,
            'successful_runs': ok,
            'success_rate': ok / total if total else 0.0,
            'by_command': by_command,
            'by_target': by_target,
            'last_run': datetime.fromisoformat(last) if last else None,
        }
