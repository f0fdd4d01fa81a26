"""
Exceptions raised across SplitLab
"""

from typing import Optional


class SplitLabError(Exception):
    """Base class for all SplitLab failures"""


class ParameterDomainError(SplitLabError, ValueError):
    """A parameter lies outside its admissible domain"""


class ConfigError(SplitLabError):
    """Bad configuration file or inconsistent settings"""


class SamplerDivergence(SplitLabError):
    """A trajectory left the finite reals"""

    def __init__(self, step: int, particle: int, tau: Optional[float] = None):
        self.step = step
        self.particle = particle
        self.tau = tau
        where = f" (tau={tau})" if tau is not None else ""
        super().__init__(f"non-finite position for particle {particle} at step {step}{where}")


class EnvelopeViolation(SplitLabError):
    """Rejection envelope does not dominate the target"""

    def __init__(self, x: float, ratio: float):
        self.x = x
        self.ratio = ratio
        super().__init__(f"envelope violated at x={x!r} (acceptance ratio {ratio:.6g} > 1)")


class GridError(SplitLabError):
    """Degenerate, mismatched or truncated density grid"""


class SampleFileError(SplitLabError):
    """Malformed sample file"""

    def __init__(self, path: str, line: int, field: str, message: str):
        self.path = path
        self.line = line
        self.field = field
        super().__init__(f"{path}:{line}: {field}: {message}")


def at_tau(error: SplitLabError, tau: float) -> SplitLabError:
    """Tag an error with the step size it occurred at"""
    if getattr(error, 'tau', None) is None:
        error.tau = tau
        error.args = (f"tau={tau}: {error}",)
    return error
