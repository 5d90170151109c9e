"""Direct pseudo-spectral solution of the original shallow-water-type systems.

All kinds share the form

    Z_t = -U_x + D(U) + N_Z(Z, U),    U_t = -Z_x + N_U(Z, U)

where ``D`` is the constant-coefficient dispersive part (treated exactly by an
integrating factor) and ``N`` collects the bottom, nonlinear and
variable-depth terms (explicit RK4, products dealiased by the 2/3 rule).
The depth is ``H = 1 + eps*h(x)``.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .averaged_solver import AveragedRun
from .core import Field, FieldPair, GridError, PeriodicGrid, periodic_interp

log = logging.getLogger(__name__)

BLOWUP_LEVEL = 1e6
DEFAULT_C0 = 1.2


class ModelKind(str, enum.Enum):
    LINEAR_DISPERSION = "linear_dispersion"
    LINEAR_REGULARIZED = "linear_regularized"
    NONLINEAR_NONDISPERSIVE = "nonlinear_nondispersive"
    SIMPLIFIED_SW = "simplified_sw"
    FULL_SW_REGULARIZED = "full_sw_regularized"

    @property
    def regularized(self) -> bool:
        return self in (ModelKind.LINEAR_REGULARIZED, ModelKind.FULL_SW_REGULARIZED)

    @property
    def dispersive(self) -> bool:
        return self is not ModelKind.NONLINEAR_NONDISPERSIVE

    @property
    def nonlinear(self) -> bool:
        return self in (ModelKind.NONLINEAR_NONDISPERSIVE, ModelKind.SIMPLIFIED_SW,
                        ModelKind.FULL_SW_REGULARIZED)

    @property
    def well_posed(self) -> bool:
        return self.regularized or not self.dispersive

    def averaged_coefficients(self) -> dict:
        """Term coefficients of the averaged system this model reduces to."""
        return {"dispersion": 1.0 / 6.0 if self.dispersive else 0.0,
                "nonlinearity": 0.75 if self.nonlinear else 0.0}


class BlowUpError(RuntimeError):
    def __init__(self, message, mode: int, t: float):
        super().__init__(message)
        self.mode = mode
        self.t = t


@dataclass(frozen=True, eq=False)
class DirectState:
    Z: Field
    U: Field
    t: float = 0.0
    epsilon: float = 0.0

    def __post_init__(self):
        if self.Z.grid != self.U.grid:
            raise GridError("Z and U must share one grid")

    @property
    def grid(self) -> PeriodicGrid:
        return self.Z.grid


@dataclass(frozen=True)
class DispersionPoint:
    k: int
    omega_squared: float
    stable: bool
    growth_rate: float


def dispersion_relation(k: int, eps: float, regularized: bool = False) -> DispersionPoint:
    """Frequency of mode ``k`` for the linear dispersive system with ``H = 1``.

    ``omega^2 = k^2 - eps k^4/3`` (plus ``eps^2 k^6/20`` when regularized).
    """
    if not eps > 0:
        raise ValueError(f"eps must be positive, got {eps}")
    w2 = k ** 2 - eps * k ** 4 / 3.0
    if regularized:
        w2 += eps ** 2 * k ** 6 / 20.0
    stable = w2 >= 0
    return DispersionPoint(int(k), float(w2), bool(stable),
                           0.0 if stable else math.sqrt(-w2))


def riemann_split(state: DirectState) -> FieldPair:
    Z, U = state.Z.values, state.U.values
    return FieldPair(state.Z.with_values(0.5 * (Z + U)),
                     state.Z.with_values(0.5 * (Z - U)), 0.0)


def riemann_join(pair: FieldPair) -> tuple[Field, Field]:
    vp, vm = pair.vplus.values, pair.vminus.values
    return pair.vplus.with_values(vp + vm), pair.vplus.with_values(vp - vm)


class _SpectralModel:
    """Right-hand side and integrating factor for one kind on one grid."""

    def __init__(self, kind: ModelKind, grid: PeriodicGrid, eps: float,
                 h: np.ndarray):
        self.kind = kind
        self.grid = grid
        self.eps = eps
        m = grid.num_points
        self.k = 2 * np.pi / grid.period * np.fft.rfftfreq(m, 1.0 / m)
        self.ik = 1j * self.k
        self.ik[-1] = 0.0  # odd derivatives drop the Nyquist mode
        kmax = np.max(np.abs(np.fft.rfftfreq(m, 1.0 / m)))
        self.dealias = np.abs(np.fft.rfftfreq(m, 1.0 / m)) <= (2.0 / 3.0) * kmax
        self.h = np.asarray(h, dtype=float)
        self.H = 1.0 + eps * self.h
        self.h_hat = np.fft.rfft(self.h)
        # Z_t = -ik a(k) U_hat for the constant-coefficient part
        k2 = self.k ** 2
        a = np.ones_like(self.k)
        if kind.dispersive:
            a = a - eps * k2 / 3.0
        if kind.regularized:
            a = a + eps ** 2 * k2 ** 2 / 20.0
        self.a = a

    def propagator(self, t: float):
        """Entries of ``exp(t*A_k)`` with ``A_k = [[0, -ik a], [-ik, 0]]``."""
        sigma = np.sqrt((-(self.k ** 2) * self.a).astype(complex))
        c = np.cosh(sigma * t)
        small = np.abs(sigma) < 1e-14
        sh = np.where(small, t, np.sinh(sigma * t) / np.where(small, 1.0, sigma))
        # Nyquist mode is frozen (odd derivatives vanish there)
        c[-1] = 1.0
        return c, -self.ik * self.a * sh, -self.ik * sh

    def apply(self, P, zh, uh):
        c, pzu, puz = P
        return c * zh + pzu * uh, puz * zh + c * uh

    def _dx(self, fh, n=1):
        if n % 2:
            return np.fft.irfft(self.ik * (1j * self.k) ** (n - 1) * fh, n=self.grid.num_points)
        return np.fft.irfft((1j * self.k) ** n * fh, n=self.grid.num_points)

    def _product_hat(self, a, b):
        return np.fft.rfft(a * b) * self.dealias

    def nonlinear(self, zh, uh):
        """Explicit part of the right-hand side in Fourier space."""
        eps, kind = self.eps, self.kind
        m = self.grid.num_points
        nz = np.zeros_like(zh)
        nu = np.zeros_like(uh)
        U = np.fft.irfft(uh, n=m)
        if kind is ModelKind.FULL_SW_REGULARIZED:
            H = self.H
            Hx = eps * self._dx(self.h_hat)
            Uxx = self._dx(uh, 2)
            HU_hat = self._product_hat(H, U)
            # -((H - 1) U)_x
            nz -= self.ik * self._product_hat(H - 1.0, U)
            disp = (self.ik * self._product_hat(H ** 3, Uxx) / 6.0
                    - 0.5 * self.ik * (1j * self.k) ** 2 * HU_hat
                    - self._product_hat(H * Hx, self._dx(HU_hat, 2)))
            # the integrating factor already carries -(eps/3) U_xxx
            disp += self.dealias * self.ik * (1j * self.k) ** 2 * uh / 3.0
            nz += eps * disp
        else:
            nz -= eps * self.ik * self._product_hat(self.h, U)
        if kind.nonlinear:
            Z = np.fft.irfft(zh, n=m)
            nz -= eps * self.ik * self._product_hat(Z, U)
            nu -= eps * 0.5 * self.ik * self._product_hat(U, U)
        return nz, nu


def max_stable_dt(kind: ModelKind, grid: PeriodicGrid, eps: float, h: np.ndarray,
                  amplitude: float = 1.0) -> float:
    """Step bound for the explicit part of the integrating-factor RK4 scheme.

    Bounds the explicit operator's spectral radius at the dealiasing cutoff
    and keeps ``dt * radius`` at half of RK4's imaginary-axis limit.
    """
    kind = ModelKind(kind)
    m = grid.num_points
    kc = (2.0 / 3.0) * (m // 2) * 2 * np.pi / grid.period
    h = np.asarray(h, dtype=float)
    hmax = float(np.max(np.abs(h))) if h.size else 0.0
    rho = eps * kc * hmax
    if kind.nonlinear:
        rho += 3.0 * eps * kc * amplitude
    if kind is ModelKind.FULL_SW_REGULARIZED:
        H = 1.0 + eps * h
        hx = np.gradient(h, grid.spacing) if h.size else np.zeros(1)
        rho += eps * kc ** 3 * float(np.max(np.abs(H ** 3 / 6 - H / 2 + 1.0 / 3.0)))
        rho += 3.0 * eps ** 2 * kc ** 2 * float(np.max(np.abs(H ** 2 * hx)))
    if rho == 0:
        return np.inf
    return 1.4 / rho


def _check_blowup(zh, uh, m, t, threshold=BLOWUP_LEVEL):
    Z = np.fft.irfft(zh, n=m)
    U = np.fft.irfft(uh, n=m)
    level = max(np.max(np.abs(Z)), np.max(np.abs(U))) if np.all(np.isfinite(Z)) \
        and np.all(np.isfinite(U)) else np.inf
    if level > threshold:
        amp = np.abs(zh) + np.abs(uh)
        amp = np.where(np.isfinite(amp), amp, np.inf)
        mode = int(np.argmax(amp))
        raise BlowUpError(
            f"solution blew up (sup-norm {level:.3g} > {threshold:g}) at t={t:.4g}; "
            f"dominant unstable mode k={mode}", mode, t)


def _integrate(model: _SpectralModel, z0, u0, t0, t_end, dt, snapshot_times):
    m = model.grid.num_points
    zh = np.fft.rfft(z0)
    uh = np.fft.rfft(u0)
    span = t_end - t0
    nsteps = max(int(math.ceil(span / dt - 1e-9)), 1) if span > 0 else 0
    out = []
    targets = sorted(set(snapshot_times))
    ti = 0
    while ti < len(targets) and targets[ti] <= t0 + 1e-12:
        out.append((targets[ti], zh.copy(), uh.copy()))
        ti += 1
    if nsteps == 0:
        return out
    h = span / nsteps
    E_half = model.propagator(h / 2)
    E_full = model.propagator(h)
    t = t0
    check_every = max(1, nsteps // 2000)
    for n in range(1, nsteps + 1):
        zh, uh = _lawson_rk4(model, zh, uh, h, E_half, E_full)
        t = t0 + n * h
        if n % check_every == 0 or n == nsteps:
            _check_blowup(zh, uh, m, t)
        while ti < len(targets) and targets[ti] <= t + 0.5 * h:
            tau = targets[ti]
            if abs(tau - t) > 1e-12:
                # land exactly on the requested time with one short step
                dt_s = tau - t
                zs, us = _lawson_rk4(model, zh, uh, dt_s, model.propagator(dt_s / 2),
                                     model.propagator(dt_s))
                out.append((tau, zs, us))
            else:
                out.append((tau, zh.copy(), uh.copy()))
            ti += 1
    return out


def _lawson_rk4(model, zh, uh, h, E_half, E_full):
    ap = model.apply
    k1 = model.nonlinear(zh, uh)
    s2 = ap(E_half, zh + 0.5 * h * k1[0], uh + 0.5 * h * k1[1])
    k2 = model.nonlinear(*s2)
    ez, eu = ap(E_half, zh, uh)
    k3 = model.nonlinear(ez + 0.5 * h * k2[0], eu + 0.5 * h * k2[1])
    e3 = ap(E_half, k3[0], k3[1])
    efz, efu = ap(E_full, zh, uh)
    k4 = model.nonlinear(efz + h * e3[0], efu + h * e3[1])
    e1 = ap(E_full, k1[0], k1[1])
    e23 = ap(E_half, k2[0] + k3[0], k2[1] + k3[1])
    zn = efz + h / 6.0 * (e1[0] + 2.0 * e23[0] + k4[0])
    un = efu + h / 6.0 * (e1[1] + 2.0 * e23[1] + k4[1])
    return zn, un


def solve_direct(kind: ModelKind, initial: DirectState, h_profile: Optional[Field],
                 t_end: float, dt: float = 1e-3,
                 snapshot_times: Optional[Sequence[float]] = None,
                 c0: float = DEFAULT_C0, retry: bool = True) -> list:
    """Integrate ``kind`` from ``initial`` to ``t_end``; return DirectState snapshots.

    ``snapshot_times`` defaults to ``[t_end]``. Stable kinds get one retry at
    half the step after a blow-up; ill-posed kinds never retry.
    """
    kind = ModelKind(kind)
    eps = initial.epsilon
    grid = initial.grid
    if not eps > 0:
        raise ValueError("initial.epsilon must be positive")
    if t_end - initial.t > c0 / eps + 1e-9:
        raise ValueError(f"t_end={t_end} beyond the classical window c0/eps={c0 / eps:g}")
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if h_profile is not None and h_profile.grid != grid:
        raise GridError("bottom profile must live on the state grid")
    h = h_profile.values if h_profile is not None else np.zeros(grid.num_points)
    times = list(snapshot_times) if snapshot_times is not None else [t_end]
    if any(s < initial.t - 1e-12 or s > t_end + 1e-12 for s in times):
        raise ValueError("snapshot times must lie in [t0, t_end]")
    model = _SpectralModel(kind, grid, eps, h)
    amp = max(float(np.max(np.abs(initial.Z.values))), float(np.max(np.abs(initial.U.values))))
    dt_cap = max_stable_dt(kind, grid, eps, h, 2.0 * max(amp, 1e-3))
    if dt > dt_cap:
        log.info("capping direct step %g at the explicit stability bound %g", dt, dt_cap)
        dt = dt_cap
    try:
        raw = _integrate(model, initial.Z.values, initial.U.values, initial.t, t_end, dt, times)
    except BlowUpError:
        if not (retry and kind.well_posed):
            raise
        log.warning("%s blew up at dt=%g, retrying with dt=%g", kind.value, dt, dt / 2)
        raw = _integrate(model, initial.Z.values, initial.U.values, initial.t, t_end,
                         dt / 2, times)
    m = grid.num_points
    # snapshots at the start time are the initial data, untouched by the transforms
    return [DirectState(initial.Z, initial.U, t, eps) if t <= initial.t
            else DirectState(Field(grid, np.fft.irfft(zh, n=m)), Field(grid, np.fft.irfft(uh, n=m)),
                             t, eps) for t, zh, uh in raw]


def evaluate_asymptotic(run: AveragedRun, eps: float, t: float,
                        x_nodes: PeriodicGrid) -> tuple[Field, Field]:
    """Reconstruct ``(Z, U)`` at fast time ``t`` from the averaged solution.

    ``v+-(t, x) = V+-(eps*t, x -+ t)``, linear in slow time between
    snapshots and periodic-linear in the fast variable.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    tau = eps * t
    taus = run.taus
    if tau < taus[0] - 1e-12 or tau > taus[-1] + 1e-12:
        raise ValueError(f"tau={tau:g} outside the averaged run [{taus[0]:g}, {taus[-1]:g}]")
    vp, vm = _interp_in_tau(run, tau)
    grid = run.states[0].grid
    x = x_nodes.nodes
    if t == 0 and x_nodes == grid:
        plus, minus = vp, vm
    else:
        plus = periodic_interp(vp, grid.period, x - t)
        minus = periodic_interp(vm, grid.period, x + t)
    return Field(x_nodes, plus + minus), Field(x_nodes, plus - minus)


def _interp_in_tau(run: AveragedRun, tau: float):
    taus = run.taus
    i = int(np.searchsorted(taus, tau, side="right")) - 1
    i = min(max(i, 0), len(taus) - 1)
    s0 = run.states[i]
    if i == len(taus) - 1 or abs(tau - taus[i]) <= 1e-14:
        return s0.vplus.values, s0.vminus.values
    s1 = run.states[i + 1]
    w = (tau - taus[i]) / (taus[i + 1] - taus[i])
    return ((1 - w) * s0.vplus.values + w * s1.vplus.values,
            (1 - w) * s0.vminus.values + w * s1.vminus.values)
