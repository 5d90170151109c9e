"""Semi-implicit finite-difference solver for the averaged shallow-water system.

The state is the pair ``(V, W) = (V+, V-)`` on a periodic mesh in slow time.
Each step is Crank-Nicolson in the linear terms (dispersion and the bottom
coupling quadrature) and uses the conservative three-level product
``(V'^2 + V'V + V^2)/3`` for the quadratic term. The nonlinear implicit
equations are solved by fixed-point iteration; the linear part is inverted
exactly, so the contraction rate depends only on the quadratic term.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .averaging import AverageDirection, coupling_matrix
from .core import Field, FieldPair, GridError, PeriodicGrid, central_diff

log = logging.getLogger(__name__)

#: sign with which ``(1/2) d/dy <h V-->+`` enters the V+ equation (V- gets the opposite)
COUPLING_SIGN = 1.0

_RUN_CALLS = 0


def run_invocations() -> int:
    """Number of completed and attempted ``run`` calls in this process."""
    return _RUN_CALLS


class FixedPointError(RuntimeError):
    pass


@dataclass(frozen=True)
class SchemeParams:
    """Step controls and term coefficients of the averaged system.

    ``dispersion`` multiplies ``V_yyy`` and ``nonlinearity`` multiplies
    ``(V^2)_y`` in the V+ equation (defaults 1/6 and 3/4 give the full
    shallow-water averaged system); ``coupling=False`` drops the bottom
    interaction.
    """

    dt: float = 1e-3
    fp_tol: float = 1e-12
    fp_max_iter: int = 100
    tau_end: float = 1.0
    dispersion: float = 1.0 / 6.0
    nonlinearity: float = 0.75
    coupling: bool = True
    coupling_sign: float = COUPLING_SIGN
    stability_c: float = 1.0

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not self.fp_tol > 0:
            raise ValueError(f"fp_tol must be positive, got {self.fp_tol}")
        if self.tau_end < 0:
            raise ValueError(f"tau_end must be >= 0, got {self.tau_end}")


@dataclass
class AveragedRun:
    states: list
    h_field: Field
    params: SchemeParams
    iterations: list = field(default_factory=list)
    mass: list = field(default_factory=list)

    @property
    def taus(self) -> np.ndarray:
        return np.array([s.tau for s in self.states])

    @property
    def tau_end(self) -> float:
        return self.states[-1].tau


def _third_diff_matrix(m: int, dy: float) -> np.ndarray:
    D = np.zeros((m, m))
    idx = np.arange(m)
    for off, c in ((2, 1.0), (1, -2.0), (-1, 2.0), (-2, -1.0)):
        D[idx, (idx + off) % m] += c
    return D / (2.0 * dy ** 3)


def _central_matrix(m: int, dy: float) -> np.ndarray:
    D = np.zeros((m, m))
    idx = np.arange(m)
    D[idx, (idx + 1) % m] += 1.0
    D[idx, (idx - 1) % m] -= 1.0
    return D / (2.0 * dy)


def linear_operator(grid: PeriodicGrid, h_field: Optional[Field], params: SchemeParams,
                    components: int = 2) -> np.ndarray:
    """Matrix ``L`` of the linear right-hand side acting on the stacked state.

    For ``components=1`` only the V+ block without coupling is returned.
    """
    m, dy = grid.num_points, grid.spacing
    D3 = _third_diff_matrix(m, dy)
    if components == 1:
        return -params.dispersion * D3
    L = np.zeros((2 * m, 2 * m))
    L[:m, :m] = -params.dispersion * D3
    L[m:, m:] = params.dispersion * D3
    if params.coupling and h_field is not None:
        D1 = _central_matrix(m, dy)
        s = params.coupling_sign
        L[:m, m:] = s * 0.5 * D1 @ coupling_matrix(h_field, AverageDirection.PLUS)
        L[m:, :m] = -s * 0.5 * D1 @ coupling_matrix(h_field, AverageDirection.MINUS)
    return L


class Fds1Scheme:
    """Precomputed operators for repeated steps on one grid and bottom."""

    def __init__(self, grid: PeriodicGrid, h_field: Optional[Field], params: SchemeParams,
                 signs: Sequence[float] = (1.0, -1.0)):
        if h_field is not None and h_field.grid != grid:
            raise GridError("bottom profile must live on the solver grid")
        self.grid = grid
        self.params = params
        self.signs = tuple(signs)
        ncomp = len(self.signs)
        if ncomp == 2:
            L = linear_operator(grid, h_field, params)
        else:
            L = self.signs[0] * linear_operator(grid, None, params, components=1)
        self.L = L
        n = L.shape[0]
        eye = np.eye(n)
        half = 0.5 * params.dt * L
        self.A_inv = np.linalg.inv(eye - half)
        self.P = self.A_inv @ (eye + half)
        self._check_dt()

    def _check_dt(self):
        lim = self.params.stability_c * self.grid.spacing
        if self.params.dt > lim:
            log.warning("dt=%g exceeds the advisory bound %g*h=%g",
                        self.params.dt, self.params.stability_c, lim)

    def nonlinear(self, x_new: np.ndarray, x_old: np.ndarray) -> np.ndarray:
        m, dy = self.grid.num_points, self.grid.spacing
        b = self.params.nonlinearity
        out = np.empty_like(x_new)
        for c, sgn in enumerate(self.signs):
            sl = slice(c * m, (c + 1) * m)
            vn, vo = x_new[sl], x_old[sl]
            q = (vn * vn + vn * vo + vo * vo) / 3.0
            out[sl] = -sgn * b * central_diff(q, dy)
        return out

    def step(self, x: np.ndarray) -> tuple[np.ndarray, int, float]:
        """Advance the stacked state; returns (new state, sweeps, residual)."""
        dt = self.params.dt
        base = self.P @ x
        n_k = self.nonlinear(x, x)
        res = np.inf
        # a diverging iteration may overflow before it is detected
        with np.errstate(over="ignore", invalid="ignore"):
            for it in range(1, self.params.fp_max_iter + 1):
                x_next = base + dt * (self.A_inv @ n_k)
                n_next = self.nonlinear(x_next, x)
                # residual of the implicit equations at x_next, in state units
                res = dt * float(np.max(np.abs(n_next - n_k)))
                if not np.isfinite(res):
                    break
                if res <= self.params.fp_tol:
                    return x_next, it, res
                n_k = n_next
        raise FixedPointError(
            f"fixed-point iteration stalled after {self.params.fp_max_iter} sweeps "
            f"(residual {res:.3e}); reduce dt")

    def residual(self, x_new: np.ndarray, x_old: np.ndarray) -> np.ndarray:
        """``x_new - x_old - dt*(L*avg + N)``: zero for an exact step."""
        dt = self.params.dt
        return x_new - x_old - dt * (self.L @ (0.5 * (x_new + x_old))
                                     + self.nonlinear(x_new, x_old))

    def rhs(self, x: np.ndarray) -> np.ndarray:
        """Semi-discrete right-hand side (both time levels equal)."""
        return self.L @ x + self.nonlinear(x, x)


def _stack(state: FieldPair) -> np.ndarray:
    return np.concatenate([state.vplus.values, state.vminus.values])


def _unstack(x: np.ndarray, grid: PeriodicGrid, tau: float) -> FieldPair:
    m = grid.num_points
    return FieldPair(Field(grid, x[:m]), Field(grid, x[m:]), tau)


def step(state: FieldPair, h_field: Field, params: SchemeParams) -> FieldPair:
    """One step of the averaged scheme."""
    if h_field.grid != state.grid:
        raise GridError("bottom profile must live on the state grid")
    scheme = Fds1Scheme(state.grid, h_field, params)
    x, _, _ = scheme.step(_stack(state))
    return _unstack(x, state.grid, state.tau + params.dt)


def semi_discrete_rhs(state: FieldPair, h_field: Field, params: SchemeParams) -> FieldPair:
    """The scheme's right-hand side with ``V^{n+1} = V^n`` (the ``dt -> 0`` limit)."""
    scheme = Fds1Scheme(state.grid, h_field, params)
    return _unstack(scheme.rhs(_stack(state)), state.grid, state.tau)


def kdv_reference_step(fld: Field, params: SchemeParams, sign: int) -> Field:
    """One decoupled KdV step for the ``+`` (sign=+1) or ``-`` (sign=-1) wave."""
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    scheme = Fds1Scheme(fld.grid, None, params, signs=(float(sign),))
    x, _, _ = scheme.step(fld.values.copy())
    return fld.with_values(x)


def run(initial: FieldPair, h_field: Field, params: SchemeParams,
        snapshot_taus: Optional[Sequence[float]] = None) -> AveragedRun:
    """Integrate from ``initial.tau`` over ``params.tau_end``.

    The step is shrunk slightly so that an integer number of steps reaches
    ``tau_end``; snapshots are taken at the nearest step. The initial state
    and the final state are always recorded.
    """
    global _RUN_CALLS
    _RUN_CALLS += 1
    grid = initial.grid
    tau0 = initial.tau
    nsteps = int(round(params.tau_end / params.dt)) if params.tau_end > 0 else 0
    if params.tau_end > 0:
        nsteps = max(nsteps, 1)
        eff = replace(params, dt=params.tau_end / nsteps)
    else:
        eff = params
    wanted = {0, nsteps}
    for tau in (() if snapshot_taus is None else snapshot_taus):
        if tau < -1e-12 or tau > params.tau_end + 1e-12:
            raise ValueError(f"snapshot tau {tau} outside [0, {params.tau_end}]")
        if nsteps:
            wanted.add(int(round(tau / eff.dt)))
    x = _stack(initial)
    m = grid.num_points
    result = AveragedRun([initial], h_field, eff)
    result.mass.append((float(np.mean(x[:m])), float(np.mean(x[m:]))))
    if nsteps == 0:
        return result
    scheme = Fds1Scheme(grid, h_field, eff)
    for n in range(1, nsteps + 1):
        x, its, _ = scheme.step(x)
        if not np.all(np.isfinite(x)):
            raise FixedPointError(f"non-finite state at step {n}")
        result.iterations.append(its)
        result.mass.append((float(np.mean(x[:m])), float(np.mean(x[m:]))))
        if n in wanted:
            result.states.append(_unstack(x, grid, tau0 + n * eff.dt))
    log.debug("averaged run: %d steps, dt=%g, mean sweeps %.2f",
              nsteps, eff.dt, np.mean(result.iterations))
    return result


def riemann_initial(z0: Field, u0: Field) -> FieldPair:
    """``V+- = (Z0 +- U0)/2`` at ``tau = 0``."""
    return FieldPair(z0.with_values(0.5 * (z0.values + u0.values)),
                     z0.with_values(0.5 * (z0.values - u0.values)), 0.0)
