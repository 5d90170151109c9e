"""Internal averaging operators.

Spectral forms of the averages along characteristics, the discrete
period-average quadrature used by the finite-difference scheme, and a
brute-force time-average for validation.
"""

from __future__ import annotations

import enum
from typing import Callable

import numpy as np

from .core import Field, GridError, Spectrum, TWO_PI
from .resonance import VANISH_TOL, SystemSpec


class AverageDirection(enum.Enum):
    """``PLUS`` averages ``h(y+s) V-(y+2s)``, ``MINUS`` averages ``h(y-s) V+(y-2s)``."""

    PLUS = "plus"
    MINUS = "minus"

    @property
    def sign(self) -> int:
        return 1 if self is AverageDirection.PLUS else -1


def spectral_average(h_spectrum: Spectrum, v_spectrum: Spectrum,
                     direction: AverageDirection = AverageDirection.PLUS) -> Spectrum:
    """Average of ``h(y +- s) V(y +- 2s)`` over ``s``.

    A product of modes ``mu`` (bottom) and ``nu`` (wave) oscillates in ``s``
    with frequency ``mu + 2 nu``; only stationary products survive, each
    landing at frequency ``mu + nu``. Both directions select the same pairs.
    """
    out = []
    for mu, hm in h_spectrum.modes:
        for nu, vn in v_spectrum.modes:
            if abs(mu + 2.0 * nu) < VANISH_TOL:
                out.append((mu + nu, hm * vn))
    return Spectrum(tuple(out))


def mj_average_product(spec: SystemSpec, j: int, k: int, m: int,
                       spectra) -> Spectrum:
    """Spectral form of ``M_j[w_k dw_m/dy_m]`` for trigonometric polynomials.

    Along the ``j``-th characteristic ``y_i = y_j + (lambda_j - lambda_i) s``,
    so a mode pair ``(nu, nu')`` survives iff
    ``nu (lambda_j - lambda_k) + nu' (lambda_j - lambda_m) = 0``.
    The result is a spectrum in ``y_j``.
    """
    lam = spec.lambdas
    ck = lam[j] - lam[k]
    cm = lam[j] - lam[m]
    wk = spectra[k]
    dwm = spectra[m].derivative()
    out = []
    for nu, a in wk.modes:
        for nu2, b in dwm.modes:
            if abs(nu * ck + nu2 * cm) < VANISH_TOL:
                out.append((nu + nu2, a * b))
    return Spectrum(tuple(out))


def brute_force_average(g: Callable[[np.ndarray], np.ndarray], T: float,
                        samples_per_unit: int = 200) -> float:
    """``(1/T) int_0^T g(s) ds`` by the composite trapezoid rule (slow oracle)."""
    n = max(int(T * samples_per_unit), 2)
    s = np.linspace(0.0, T, n + 1)
    vals = g(s)
    return float(np.trapezoid(vals, s) / T)


def coupling_matrix(h_field: Field, direction: AverageDirection) -> np.ndarray:
    """Matrix ``Q`` with ``(Q v)_j = (1/2pi) sum_{i=1}^{M} h(y_j -+ i dy) v_{j -+ 2i} dy``.

    The upper sign belongs to ``PLUS``. Shifts wrap modulo ``M`` and the sum
    covers one full period (``N = M``).
    """
    grid = h_field.grid
    if abs(grid.period - TWO_PI) > 1e-12:
        raise GridError("the coupling quadrature is defined on 2*pi-periodic grids")
    m = grid.num_points
    dy = grid.spacing
    sgn = direction.sign
    hv = h_field.values
    j = np.arange(m)[:, None]
    i = np.arange(1, m + 1)[None, :]
    rows = np.broadcast_to(j, (m, m))
    hcols = (j - sgn * i) % m
    vcols = (j - 2 * sgn * i) % m
    Q = np.zeros((m, m))
    np.add.at(Q, (rows, vcols), hv[hcols] * dy / TWO_PI)
    return Q


def _check_fields(h_field: Field, *fields: Field):
    for f in fields:
        if f.grid != h_field.grid:
            raise GridError("all fields must share one grid")


def discrete_coupling(h_field: Field, v_new: Field, v_old: Field, j: int,
                      direction: AverageDirection) -> float:
    """Quadrature ``F(V^{n+1}, V^n, j)`` of the period average at node ``j``."""
    _check_fields(h_field, v_new, v_old)
    grid = h_field.grid
    if abs(grid.period - TWO_PI) > 1e-12:
        raise GridError("the coupling quadrature is defined on 2*pi-periodic grids")
    m = grid.num_points
    dy = grid.spacing
    sgn = direction.sign
    i = np.arange(1, m + 1)
    vbar = 0.5 * (v_new.values + v_old.values)
    hv = h_field.values[(j - sgn * i) % m]
    return float(np.sum(hv * vbar[(j - 2 * sgn * i) % m]) * dy / TWO_PI)


def coupling_quadrature(h_field: Field, v_new: Field, v_old: Field,
                        direction: AverageDirection) -> np.ndarray:
    """``discrete_coupling`` at every node."""
    _check_fields(h_field, v_new, v_old)
    Q = coupling_matrix(h_field, direction)
    return Q @ (0.5 * (v_new.values + v_old.values))


def coupling_term_derivative(h_field: Field, v_new: Field, v_old: Field,
                             direction: AverageDirection) -> Field:
    """``(F(j+1) - F(j-1)) / (4 dy)``: half the central derivative of the average."""
    F = coupling_quadrature(h_field, v_new, v_old, direction)
    dy = h_field.grid.spacing
    return h_field.with_values((np.roll(F, -1) - np.roll(F, 1)) / (4.0 * dy))
