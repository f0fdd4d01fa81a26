"""
Result and ledger models for SplitLab
"""

import math
from dataclasses import dataclass, field
from datetime import datetime
from typing import List, Optional

NAN = float('nan')


@dataclass
class ConvergenceRow:
    """One step size of a convergence study"""
    tau: float
    kl: float = NAN
    kl_stderr: float = NAN
    w1: float = NAN
    w1_stderr: float = NAN


@dataclass
class SlopeFit:
    slope: float
    intercept: float
    residual: float  # RMS of log-log residuals
    points: int


@dataclass
class ConvergenceReport:
    """Rows of (tau, KL, W1) with fitted log-log slopes"""
    rows: List[ConvergenceRow] = field(default_factory=list)
    kl_fit: Optional[SlopeFit] = None
    w1_fit: Optional[SlopeFit] = None
    metadata: dict = field(default_factory=dict)
    warnings: List[str] = field(default_factory=list)

    @property
    def taus(self) -> List[float]:
        return [row.tau for row in self.rows]

    def column(self, name: str) -> List[float]:
        return [getattr(row, name) for row in self.rows]

    def has_column(self, name: str) -> bool:
        return any(not math.isnan(v) for v in self.column(name))


@dataclass
class ExperimentLog:
    """Ledger entry for one CLI invocation"""
    id: Optional[int] = None
    command: str = ""
    target: str = ""
    scheme: str = ""
    seed: Optional[int] = None
    started_at: Optional[datetime] = None
    completed_at: Optional[datetime] = None
    out_dir: Optional[str] = None
    kl_slope: Optional[float] = None
    w1_slope: Optional[float] = None
    success: bool = True
    error_message: Optional[str] = None

    @property
    def duration(self) -> Optional[float]:
        """Wall time in seconds"""
        if not self.started_at or not self.completed_at:
            return None
        return (self.completed_at - self.started_at).total_seconds()
