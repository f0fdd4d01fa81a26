"""
Exact law propagation for the Ornstein-Uhlenbeck target

For U = lam/2 x^2 every scheme maps a Gaussian to a Gaussian, so the
variance follows an affine recursion v <- a v + c. RSLMC averages the two
substep orders; since both maps are affine, the mean variance follows the
average map exactly.
"""

import logging
from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np
from scipy import stats
from scipy.integrate import trapezoid

from errors import ParameterDomainError

logger = logging.getLogger(__name__)

ALIASES = {
    'drift-first': 'lie-trotter-drift-first',
    'diffusion-first': 'lie-trotter-diffusion-first',
}
ORACLE_SCHEMES = ('rslmc', 'lie-trotter-drift-first', 'lie-trotter-diffusion-first', 'lmc-euler', 'strang-symmetric')


def canonical_scheme(scheme: str) -> str:
    scheme = ALIASES.get(scheme, scheme)
    if scheme not in ORACLE_SCHEMES:
        raise ParameterDomainError(f"no OU oracle for scheme {scheme!r}")
    return scheme


def affine_map(scheme: str, lam: float, beta: float, tau: float) -> Tuple[float, float, float]:
    """(a, c, m) with v <- a v + c and mean <- m mean"""
    scheme = canonical_scheme(scheme)
    decay = np.exp(-lam * tau)
    kick = 2.0 * tau / beta

    if scheme == 'lie-trotter-drift-first':
        return decay ** 2, kick, decay
    if scheme == 'lie-trotter-diffusion-first':
        return decay ** 2, decay ** 2 * kick, decay
    if scheme == 'rslmc':
        return decay ** 2, 0.5 * kick * (1.0 + decay ** 2), decay
    if scheme == 'strang-symmetric':
        return decay ** 2, kick * decay, decay
    # lmc-euler
    m = 1.0 - lam * tau
    return m * m, kick, m


def stationary_variance(scheme: str, lam: float, beta: float, tau: float) -> float:
    """Fixed point c / (1 - a) of the scheme's variance map"""
    a, c, _ = affine_map(scheme, lam, beta, tau)
    if a >= 1.0:
        raise ParameterDomainError(f"{scheme} is unstable on OU at tau={tau} (contraction factor {a})")
    return c / (1.0 - a)


@dataclass
class OURecursion:
    scheme: str
    variance: float  # after n steps
    fixed_point: float
    steps: int


def ou_mean_variance_recursion(v0: float, lam: float, beta: float, tau: float, n: int,
                               scheme: str = 'rslmc') -> OURecursion:
    """Mean variance after n steps from variance v0, plus the fixed point"""
    a, c, _ = affine_map(scheme, lam, beta, tau)
    fixed = stationary_variance(scheme, lam, beta, tau)
    # closed form of n affine iterations
    variance = fixed + a ** n * (v0 - fixed)
    return OURecursion(scheme=canonical_scheme(scheme), variance=float(variance), fixed_point=float(fixed), steps=n)


def gaussian_w1(v1: float, v2: float) -> float:
    """W1 between centred Gaussians N(0, v1) and N(0, v2)"""
    return float(np.sqrt(2.0 / np.pi) * abs(np.sqrt(v1) - np.sqrt(v2)))


@dataclass
class OULawState:
    """
    Law of one chain as a Gaussian mixture over the order draws.
    Atoms are (variance, weight) pairs sharing one mean.
    """
    mean: float = 0.0
    atoms: List[Tuple[float, float]] = field(default_factory=lambda: [(0.0, 1.0)])

    def __post_init__(self):
        total = sum(w for _, w in self.atoms)
        if abs(total - 1.0) > 1e-12:
            raise ParameterDomainError(f"atom weights must sum to 1, got {total}")
        if any(v < 0 for v, _ in self.atoms):
            raise ParameterDomainError("atom variances must be nonnegative")

    @property
    def mean_variance(self) -> float:
        return sum(v * w for v, w in self.atoms)

    @property
    def second_moment(self) -> float:
        return self.mean ** 2 + self.mean_variance

    def step(self, lam: float, beta: float, tau: float, scheme: str = 'rslmc', max_atoms: int = 4096) -> 'OULawState':
        """Propagate the mixture through one step of the scheme"""
        scheme = canonical_scheme(scheme)
        if scheme == 'rslmc':
            branches = [('lie-trotter-drift-first', 0.5), ('lie-trotter-diffusion-first', 0.5)]
        else:
            branches = [(scheme, 1.0)]

        merged = {}
        for name, p in branches:
            a, c, m = affine_map(name, lam, beta, tau)
            for v, w in self.atoms:
                key = a * v + c
                merged[key] = merged.get(key, 0.0) + p * w

        if len(merged) > max_atoms:
            raise ParameterDomainError(f"law has {len(merged)} atoms, above the cap of {max_atoms}")
        _, _, m = affine_map(branches[0][0], lam, beta, tau)
        return OULawState(mean=m * self.mean, atoms=sorted(merged.items()))

    def cdf(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        for v, w in self.atoms:
            if v == 0.0:
                out += w * (x >= self.mean)
            else:
                out += w * stats.norm.cdf(x, loc=self.mean, scale=np.sqrt(v))
        return out

    def w1_to_gaussian(self, variance: float, n_nodes: int = 20001) -> float:
        """W1 to N(0, variance) as the integral of |F - G|"""
        spread = 12.0 * np.sqrt(max(variance, max(v for v, _ in self.atoms)))
        x = np.linspace(-spread + self.mean, spread + self.mean, n_nodes)
        return float(trapezoid(np.abs(self.cdf(x) - stats.norm.cdf(x, scale=np.sqrt(variance))), x))
