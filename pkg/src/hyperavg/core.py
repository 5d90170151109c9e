"""Periodic grids, discrete fields, spectra, stencils and norms."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

TWO_PI = 2.0 * math.pi
#: spectra drop modes at or below this magnitude
AMPLITUDE_CUTOFF = 1e-12


class GridError(ValueError):
    """Raised for invalid grids or for operations mixing different grids."""


@dataclass(frozen=True)
class PeriodicGrid:
    """Uniform mesh of ``num_points`` nodes covering one period."""

    num_points: int
    period: float = TWO_PI

    def __post_init__(self):
        if int(self.num_points) != self.num_points:
            raise GridError(f"num_points must be an integer, got {self.num_points!r}")
        if self.num_points < 8 or self.num_points % 2:
            raise GridError(f"num_points must be even and >= 8, got {self.num_points}")
        if not self.period > 0:
            raise GridError(f"period must be positive, got {self.period}")

    @property
    def spacing(self) -> float:
        return self.period / self.num_points

    @property
    def nodes(self) -> np.ndarray:
        return np.arange(self.num_points) * self.spacing

    @property
    def wavenumbers(self) -> np.ndarray:
        """Angular wavenumbers in numpy FFT order."""
        return TWO_PI / self.period * np.fft.fftfreq(self.num_points, 1.0 / self.num_points)


def make_grid(M: int, P: float = TWO_PI) -> PeriodicGrid:
    return PeriodicGrid(M, P)


@dataclass(frozen=True, eq=False)
class Field:
    """Real samples on a periodic grid. Values are copied and frozen."""

    grid: PeriodicGrid
    values: np.ndarray

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        if vals.shape != (self.grid.num_points,):
            raise GridError(
                f"expected {self.grid.num_points} values, got shape {vals.shape}")
        if not np.all(np.isfinite(vals)):
            raise ValueError("field values must be finite")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    def __len__(self):
        return self.grid.num_points

    def with_values(self, values) -> "Field":
        return Field(self.grid, values)

    def roll(self, shift: int) -> "Field":
        return Field(self.grid, np.roll(self.values, shift))


@dataclass(frozen=True, eq=False)
class FieldPair:
    """State ``(V+, V-)`` of the averaged system at slow time ``tau``."""

    vplus: Field
    vminus: Field
    tau: float = 0.0

    def __post_init__(self):
        if self.vplus.grid != self.vminus.grid:
            raise GridError("V+ and V- must share one grid")
        if self.tau < 0:
            raise ValueError(f"tau must be >= 0, got {self.tau}")

    @property
    def grid(self) -> PeriodicGrid:
        return self.vplus.grid


@dataclass(frozen=True)
class Spectrum:
    """Finite list of ``(frequency, complex amplitude)`` modes.

    A signal is ``sum(a * exp(1j * nu * x))``. Modes are kept sorted by
    frequency, duplicates are merged and negligible amplitudes dropped.
    """

    modes: tuple = field(default=())

    def __post_init__(self):
        merged: dict[float, complex] = {}
        for nu, amp in self.modes:
            nu = float(nu)
            if nu == 0.0:
                nu = 0.0  # fold -0.0
            merged[nu] = merged.get(nu, 0j) + complex(amp)
        clean = tuple(sorted(
            (nu, amp) for nu, amp in merged.items() if abs(amp) > AMPLITUDE_CUTOFF))
        object.__setattr__(self, "modes", clean)

    @classmethod
    def from_terms(cls, terms: Iterable[tuple[str, float, float]]) -> "Spectrum":
        """Build from ``(kind, frequency, amplitude)`` with kind in cos/sin/const."""
        modes = []
        for kind, nu, amp in terms:
            if kind == "const":
                modes.append((0.0, amp))
            elif kind == "cos":
                modes += [(nu, amp / 2), (-nu, amp / 2)]
            elif kind == "sin":
                modes += [(nu, -0.5j * amp), (-nu, 0.5j * amp)]
            else:
                raise ValueError(f"unknown term kind {kind!r}")
        return cls(tuple(modes))

    def __len__(self):
        return len(self.modes)

    def __iter__(self):
        return iter(self.modes)

    def __bool__(self):
        return bool(self.modes)

    @property
    def frequencies(self) -> np.ndarray:
        return np.array([nu for nu, _ in self.modes], dtype=float)

    @property
    def amplitudes(self) -> np.ndarray:
        return np.array([a for _, a in self.modes], dtype=complex)

    def amplitude(self, nu: float, tol: float = 1e-10) -> complex:
        for mu, a in self.modes:
            if abs(mu - nu) <= tol:
                return a
        return 0j

    def mean(self) -> complex:
        return self.amplitude(0.0)

    def is_conjugate_symmetric(self, tol: float = 1e-12) -> bool:
        return all(abs(self.amplitude(-nu) - np.conj(a)) <= tol for nu, a in self.modes)

    def scale(self, c: complex) -> "Spectrum":
        return Spectrum(tuple((nu, c * a) for nu, a in self.modes))

    def __add__(self, other: "Spectrum") -> "Spectrum":
        return Spectrum(self.modes + other.modes)

    def __mul__(self, other: "Spectrum") -> "Spectrum":
        return Spectrum(tuple((n1 + n2, a1 * a2)
                              for n1, a1 in self.modes for n2, a2 in other.modes))

    def derivative(self) -> "Spectrum":
        return Spectrum(tuple((nu, 1j * nu * a) for nu, a in self.modes))

    def evaluate(self, x) -> np.ndarray:
        """Real part of the trigonometric sum at points ``x``."""
        x = np.asarray(x, dtype=float)
        if not self.modes:
            return np.zeros_like(x)
        phase = np.exp(1j * np.multiply.outer(x, self.frequencies))
        return (phase @ self.amplitudes).real


def sample(grid: PeriodicGrid, f: Callable[[np.ndarray], np.ndarray]) -> Field:
    vals = np.broadcast_to(np.asarray(f(grid.nodes), dtype=float), (grid.num_points,))
    return Field(grid, vals)


def mean(fld: Field) -> float:
    return float(np.mean(fld.values))


def remove_mean(fld: Field) -> Field:
    return fld.with_values(fld.values - np.mean(fld.values))


def fourier_coeffs(fld: Field) -> Spectrum:
    grid = fld.grid
    amps = np.fft.fft(fld.values) / grid.num_points
    return Spectrum(tuple(zip(grid.wavenumbers, amps)))


def inverse_fourier(spectrum: Spectrum, grid: PeriodicGrid) -> Field:
    return Field(grid, spectrum.evaluate(grid.nodes))


def d_central(fld: Field) -> Field:
    return fld.with_values(central_diff(fld.values, fld.grid.spacing))


def d3(fld: Field) -> Field:
    return fld.with_values(third_diff(fld.values, fld.grid.spacing))


def central_diff(v: np.ndarray, h: float) -> np.ndarray:
    """``(v[j+1] - v[j-1]) / 2h`` with periodic wrap."""
    return (np.roll(v, -1) - np.roll(v, 1)) / (2.0 * h)


def third_diff(v: np.ndarray, h: float) -> np.ndarray:
    """Composed stencil ``(v[j+2] - 2v[j+1] + 2v[j-1] - v[j-2]) / 2h^3``."""
    return (np.roll(v, -2) - 2.0 * np.roll(v, -1)
            + 2.0 * np.roll(v, 1) - np.roll(v, 2)) / (2.0 * h ** 3)


def _check_same_grid(a: Field, b: Field):
    if a.grid != b.grid:
        raise GridError(f"grid mismatch: {a.grid} vs {b.grid}")


def sup_norm(a: Field, b: Field) -> float:
    _check_same_grid(a, b)
    return float(np.max(np.abs(a.values - b.values)))


def l2_norm(a: Field, b: Field) -> float:
    """Root-mean-square of the difference."""
    _check_same_grid(a, b)
    return float(np.sqrt(np.mean((a.values - b.values) ** 2)))


def periodic_interp(values: Sequence[float], period: float, x) -> np.ndarray:
    """Linear interpolation of equispaced periodic samples at arbitrary ``x``."""
    values = np.asarray(values, dtype=float)
    m = len(values)
    s = np.mod(np.asarray(x, dtype=float), period) * (m / period)
    i0 = np.floor(s).astype(int) % m
    w = s - np.floor(s)
    return (1.0 - w) * values[i0] + w * values[(i0 + 1) % m]
