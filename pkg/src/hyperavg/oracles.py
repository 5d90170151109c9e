"""Closed-form solutions used as ground truth.

All functions are scalar/pointwise and accept numpy arrays where noted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np


class ConvergenceError(RuntimeError):
    pass


def linear_toy_exact(t, x, eps):
    """Exact solution of ``u_t + u_x = eps*u``, ``u(0, x) = sin x``."""
    return np.exp(eps * t) * np.sin(np.asarray(x) - t)


def linear_toy_truncated(t, x, eps, order: int):
    """Partial sum of the Taylor expansion of ``exp(eps*t)`` times ``sin(x - t)``.

    Every term beyond the first is secular (grows like ``(eps*t)**n``).
    """
    if order not in (0, 1, 2):
        raise ValueError(f"order must be 0, 1 or 2, got {order}")
    s = eps * t
    factor = sum(s ** n / math.factorial(n) for n in range(order + 1))
    return factor * np.sin(np.asarray(x) - t)


def resonance_model_exact(t, x, eps):
    """Exact ``u`` for ``u_t + u_x = eps*v*sin x``, ``v = sin x``, ``u(0, .) = 0``."""
    x = np.asarray(x)
    return eps / 4.0 * (2.0 * t + np.sin(2.0 * (x - t)) - np.sin(2.0 * x))


def resonance_model_averaged(tau):
    """Internally averaged solution in slow time: ``U(tau) = tau/2``.

    In fast time this is ``eps*t/2``; call with ``tau = eps*t``.
    """
    if np.any(np.asarray(tau) < 0):
        raise ValueError("tau must be >= 0")
    return np.asarray(tau) / 2.0


def resonance_model_external(t, x, eps):
    """External averaging freezes the solution and returns ``U = 0``."""
    return np.zeros_like(np.asarray(x, dtype=float) + t)


@dataclass(frozen=True)
class ImplicitWaveParams:
    epsilon: float
    v0: Callable[[float], float]
    dv0: Optional[Callable[[float], float]] = None
    newton_tol: float = 1e-12
    max_iter: int = 100

    def __post_init__(self):
        # eps = 0 is allowed: the relation degenerates to the linear simple wave
        if not 0 <= self.epsilon < 1:
            raise ValueError(f"epsilon must lie in [0, 1), got {self.epsilon}")

    def slope(self, x: float) -> float:
        if self.dv0 is not None:
            return self.dv0(x)
        d = 1e-6
        return (self.v0(x + d) - self.v0(x - d)) / (2 * d)


def burgers_implicit_wave(params: ImplicitWaveParams, t: float, x: float) -> float:
    """Solve ``v = v0(x - t + eps*t*v)`` for the nonlinear simple wave.

    Newton with step halving; falls back to bisection on the monotone
    residual when Newton stalls. Raises ConvergenceError past wave breaking.
    """
    v0, eps = params.v0, params.epsilon
    a = eps * t
    base = x - t

    def residual(v):
        return v - v0(base + a * v)

    v = float(v0(base))
    r = residual(v)
    for _ in range(params.max_iter):
        if abs(r) <= params.newton_tol:
            return v
        dg = 1.0 - a * params.slope(base + a * v)
        if dg <= 0:
            break
        step = r / dg
        lam = 1.0
        while lam > 1e-4:
            trial = v - lam * step
            rt = residual(trial)
            if abs(rt) < abs(r):
                v, r = trial, rt
                break
            lam *= 0.5
        else:
            break
    return _bisect_wave(residual, v, params)


def _bisect_wave(residual, guess, params):
    # residual is increasing in the pre-breaking regime
    width = 1.0
    lo, hi = guess - width, guess + width
    for _ in range(60):
        if residual(lo) <= 0 <= residual(hi):
            break
        width *= 2
        lo, hi = guess - width, guess + width
    else:
        raise ConvergenceError("could not bracket the implicit wave (wave breaking?)")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        r = residual(mid)
        if abs(r) <= params.newton_tol:
            return mid
        if r > 0:
            hi = mid
        else:
            lo = mid
    raise ConvergenceError(
        f"implicit wave did not converge to {params.newton_tol} (wave breaking?)")
