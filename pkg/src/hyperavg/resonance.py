"""Resonance checks for weakly nonlinear hyperbolic systems.

A family ``j`` is non-resonant when no integer (or frequency) combination
makes the phase along its characteristic stationary; the averaged equations
then decouple.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .core import Spectrum

VANISH_TOL = 1e-10
DEFAULT_BOUND = 16


class ResonanceInputError(ValueError):
    pass


@dataclass(frozen=True)
class SystemSpec:
    """Characteristic speeds plus the period/frequency data of one system.

    ``time_periods``/``space_periods`` are the forcing periods per family
    (``None`` where a family is unforced), ``profile_periods`` the spatial
    period of each initial profile. ``forcing_t``/``forcing_x`` hold forcing
    spectra per family for almost-periodic checks.
    """

    lambdas: tuple
    initial_spectra: tuple = ()
    time_periods: Optional[tuple] = None
    space_periods: Optional[tuple] = None
    profile_periods: Optional[tuple] = None
    forcing_t: Optional[tuple] = None
    forcing_x: Optional[tuple] = None
    coupling: Optional[np.ndarray] = field(default=None, compare=False)

    def __post_init__(self):
        lam = tuple(float(x) for x in self.lambdas)
        object.__setattr__(self, "lambdas", lam)
        if len(set(lam)) != len(lam):
            raise ResonanceInputError(f"characteristic speeds must be distinct: {lam}")
        for name in ("time_periods", "space_periods", "profile_periods"):
            periods = getattr(self, name)
            if periods is None:
                continue
            if len(periods) != self.n:
                raise ResonanceInputError(f"{name} needs {self.n} entries")
            if any(p is not None and not p > 0 for p in periods):
                raise ResonanceInputError(f"{name} must be positive: {periods}")
        if self.coupling is not None and np.shape(self.coupling) != (self.n,) * 3:
            raise ResonanceInputError("coupling must have shape (n, n, n)")

    @property
    def n(self) -> int:
        return len(self.lambdas)


@dataclass(frozen=True)
class ResonanceVerdict:
    resonant: bool
    witnesses: tuple = ()
    searched_bound: Optional[int] = None
    family: Optional[int] = None

    def __str__(self):
        word = "resonant" if self.resonant else "non-resonant"
        if not self.witnesses:
            return word
        shown = ", ".join(str(w) for w in self.witnesses[:4])
        more = "" if len(self.witnesses) <= 4 else f" (+{len(self.witnesses) - 4} more)"
        return f"{word}; witnesses: {shown}{more}"


def small_divisor(spec: SystemSpec, j: int, lt: int, lx: int, lk: Sequence[int]) -> float:
    """``lt/Lt_j + lambda_j*lx/Lx_j + sum_{k!=j} (lambda_j - lambda_k)*l_k/L_k``."""
    lam = spec.lambdas
    val = 0.0
    tp = spec.time_periods[j] if spec.time_periods else None
    xp = spec.space_periods[j] if spec.space_periods else None
    if tp is not None:
        val += lt / tp
    if xp is not None:
        val += lam[j] * lx / xp
    for k in range(spec.n):
        if k != j:
            val += (lam[j] - lam[k]) * lk[k] / spec.profile_periods[k]
    return val


def check_small_divisors(spec: SystemSpec, j: int, bound: int = DEFAULT_BOUND) -> ResonanceVerdict:
    """Enumerate integer tuples with max-abs <= bound for family ``j``.

    Witnesses are ``(l_t, l_x, l_1, ..., l_n)`` with ``l_j = 0``; tuples of
    absent forcing periods are held at zero. Sorted lexicographically.
    """
    if bound < 1:
        raise ResonanceInputError(f"bound must be >= 1, got {bound}")
    if spec.profile_periods is None:
        raise ResonanceInputError("profile periods are required")
    if not 0 <= j < spec.n:
        raise ResonanceInputError(f"family {j} out of range")
    has_t = bool(spec.time_periods) and spec.time_periods[j] is not None
    has_x = bool(spec.space_periods) and spec.space_periods[j] is not None

    rng = np.arange(-bound, bound + 1)
    zero = np.array([0])
    axes = [rng if has_t else zero, rng if has_x else zero]
    axes += [zero if k == j else rng for k in range(spec.n)]
    grids = np.meshgrid(*axes, indexing="ij")
    tuples = np.stack([g.ravel() for g in grids], axis=1)

    lam = spec.lambdas
    coef = np.zeros(spec.n + 2)
    if has_t:
        coef[0] = 1.0 / spec.time_periods[j]
    if has_x:
        coef[1] = lam[j] / spec.space_periods[j]
    for k in range(spec.n):
        if k != j:
            coef[2 + k] = (lam[j] - lam[k]) / spec.profile_periods[k]
    divisors = tuples @ coef
    nonzero = np.abs(tuples).sum(axis=1) != 0
    hits = tuples[nonzero & (np.abs(divisors) < VANISH_TOL)]
    witnesses = tuple(sorted(tuple(int(v) for v in row) for row in hits))
    return ResonanceVerdict(bool(witnesses), witnesses, bound, j)


def _family_factors(spec: SystemSpec, j: int, max_modes: Optional[int]):
    factors = []
    lam = spec.lambdas
    if spec.forcing_t and spec.forcing_t[j] is not None:
        factors.append(("t", spec.forcing_t[j], 1.0))
    if spec.forcing_x and spec.forcing_x[j] is not None:
        factors.append(("x", spec.forcing_x[j], lam[j]))
    for k in range(spec.n):
        if k != j and k < len(spec.initial_spectra):
            factors.append((f"u{k}", spec.initial_spectra[k], lam[j] - lam[k]))
    if max_modes is not None:
        trimmed = []
        for name, s, w in factors:
            modes = sorted(s.modes, key=lambda m: (abs(m[0]), m[0]))[:max_modes]
            trimmed.append((name, Spectrum(tuple(modes)), w))
        factors = trimmed
    return factors


def check_almost_periodic(spec: SystemSpec, j: int,
                          max_modes: Optional[int] = None) -> ResonanceVerdict:
    """Frequency-combination check for products of almost-periodic factors.

    The forcing of family ``j`` times the initial profiles of the other
    families contributes ``nu_t + nu_x*lambda_j + sum nu_k*(lambda_j - lambda_k)``;
    a vanishing combination (other than all frequencies zero) is a resonance.
    Witnesses are tuples of the chosen frequencies, one per factor.
    """
    factors = _family_factors(spec, j, max_modes)
    if not factors or any(not s for _, s, _ in factors):
        return ResonanceVerdict(False, (), max_modes, j)
    witnesses = []
    for combo in itertools.product(*[s.frequencies for _, s, _ in factors]):
        if all(nu == 0 for nu in combo):
            continue
        val = sum(nu * w for nu, (_, _, w) in zip(combo, factors))
        if abs(val) < VANISH_TOL:
            witnesses.append(tuple(float(nu) for nu in combo))
    witnesses.sort()
    return ResonanceVerdict(bool(witnesses), tuple(witnesses), max_modes, j)


def check_shallow_water_resonance(h_spectrum: Spectrum, z0_spectrum: Spectrum) -> ResonanceVerdict:
    """Resonant iff some bottom frequency equals +-2 times an initial-data frequency.

    Witnesses are ``(mu, nu)`` pairs; the pair of two zero frequencies is
    excluded.
    """
    witnesses = []
    for mu in h_spectrum.frequencies:
        for nu in z0_spectrum.frequencies:
            if mu == 0 and nu == 0:
                continue
            if abs(mu - 2 * nu) < VANISH_TOL or abs(mu + 2 * nu) < VANISH_TOL:
                witnesses.append((float(mu), float(nu)))
    witnesses.sort()
    return ResonanceVerdict(bool(witnesses), tuple(witnesses), None, None)


def shallow_water_system(h_spectrum: Spectrum, z0_spectrum: Spectrum) -> SystemSpec:
    """Riemann-variable shallow-water system: speeds (+1, -1), bottom as x-forcing.

    With ``U(0) = 0`` both Riemann invariants start as ``Z0/2``, so they share
    the frequencies of ``Z0``.
    """
    half = z0_spectrum.scale(0.5)
    coupling = np.zeros((2, 2, 2))
    # v+ equation: -(3/2) v+ v+_y ; v- equation: +(3/2) v- v-_y
    coupling[0, 0, 0] = -1.5
    coupling[1, 1, 1] = 1.5
    return SystemSpec(
        lambdas=(1.0, -1.0),
        initial_spectra=(half, half),
        forcing_x=(h_spectrum, h_spectrum),
        coupling=coupling,
    )
