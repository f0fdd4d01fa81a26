"""
Drift and diffusion substeps

All maps act row-wise on arrays shaped (..., dim) and never touch
random state; noise is passed in explicitly.
"""

from typing import Callable

import numpy as np

VectorField = Callable[[np.ndarray], np.ndarray]


def heun_step(x: np.ndarray, h: float, drift: VectorField) -> np.ndarray:
    """Explicit trapezoidal step: Y = X + h f(X), X + h/2 (f(X) + f(Y))"""
    fx = drift(x)
    predictor = x + h * fx
    return x + 0.5 * h * (fx + drift(predictor))


def dw_cubic_flow(x: np.ndarray, h: float) -> np.ndarray:
    """Exact flow of x' = -4x^3"""
    return x / np.sqrt(1.0 + 8.0 * h * x * x)


def dw_linear_flow(x: np.ndarray, h: float) -> np.ndarray:
    """Exact flow of x' = 4x"""
    return x * np.exp(4.0 * h)


def strang_dw_step(x: np.ndarray, h: float) -> np.ndarray:
    """Symmetric composition cubic(h/2) . linear(h) . cubic(h/2) for the double-well drift"""
    return dw_cubic_flow(dw_linear_flow(dw_cubic_flow(x, 0.5 * h), h), 0.5 * h)


def diffusion_kick(x: np.ndarray, tau: float, beta: float, z: np.ndarray) -> np.ndarray:
    """x + sqrt(2 tau / beta) z"""
    return x + np.sqrt(2.0 * tau / beta) * z
