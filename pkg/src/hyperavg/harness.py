"""Experiment orchestration: configuration files, comparisons and CSV output.

Config files are INI-style (``configparser``)::

    [run]
    model = full_sw_regularized
    epsilon = 0.1, 0.015, 0.01
    M = 256
    dt_direct = 1e-3
    dt_averaged = 1e-3
    t_end = one_over_eps

    [initial]
    preset = resonant_bump          ; or give Z0 / U0 / h term lists
    # Z0 = cos:1, sin:2
    # h = 5*sin:2

Term lists are comma separated ``[amplitude*]cos:freq``, ``[amplitude*]sin:freq``
or a bare number for a constant.
"""

from __future__ import annotations

import configparser
import csv
import io
import logging
import math
import re
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from . import averaged_solver
from .averaged_solver import SchemeParams, riemann_initial
from .core import Field, PeriodicGrid, Spectrum, inverse_fourier, l2_norm, make_grid, sup_norm
from .direct_solver import (DirectState, ModelKind, dispersion_relation, evaluate_asymptotic,
                            solve_direct)
from .resonance import ResonanceVerdict, check_shallow_water_resonance

log = logging.getLogger(__name__)

ONE_OVER_EPS = "one_over_eps"

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_RESONANT = 2

PRESETS = {
    # U(x,0) = 0, Z(x,0) = cos x + sin 2x, h(x) = 5 sin 2x
    "resonant_bump": {"Z0": "cos:1, sin:2", "U0": "", "h": "5*sin:2"},
}


class ConfigError(ValueError):
    pass


_TERM = re.compile(r"^(?:(?P<amp>[-+]?[\d.eE+-]+)\s*\*\s*)?(?P<kind>cos|sin)\s*:\s*(?P<freq>[-+]?[\d.eE+-]+)$")


def parse_terms(text: str) -> Spectrum:
    """Parse ``"cos:1, 0.5*sin:2, 3"`` into a spectrum."""
    terms = []
    for raw in (text or "").split(","):
        item = raw.strip()
        if not item:
            continue
        m = _TERM.match(item)
        try:
            if m:
                amp = float(m["amp"]) if m["amp"] else 1.0
                terms.append((m["kind"], float(m["freq"]), amp))
            else:
                terms.append(("const", 0.0, float(item)))
        except ValueError:
            raise ConfigError(f"malformed term {item!r}") from None
    return Spectrum.from_terms(terms)


def _float_list(text: str) -> tuple:
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise ConfigError(f"expected a list of numbers, got {text!r}") from None


@dataclass(frozen=True)
class RunConfig:
    model: ModelKind = ModelKind.FULL_SW_REGULARIZED
    epsilons: tuple = (0.01,)
    M: int = 256
    dt_direct: float = 1e-3
    dt_averaged: float = 1e-3
    t_end: Union[float, str] = ONE_OVER_EPS
    z0: Spectrum = field(default_factory=lambda: parse_terms(PRESETS["resonant_bump"]["Z0"]))
    u0: Spectrum = field(default_factory=Spectrum)
    h: Spectrum = field(default_factory=lambda: parse_terms(PRESETS["resonant_bump"]["h"]))
    preset: Optional[str] = "resonant_bump"
    outputs: tuple = ("csv", "summary")
    snapshots: int = 101
    # dispersion table
    k_max: int = 10
    regularized: bool = False
    # convergence study
    levels: tuple = (64, 128, 256)
    conv_dt: float = 4e-3
    conv_tau_end: float = 0.5
    conv_coupling: bool = False
    # resonance enumeration
    bound: int = 16

    def __post_init__(self):
        if not self.epsilons:
            raise ConfigError("at least one epsilon is required")
        for eps in self.epsilons:
            if not 0 < eps < 1:
                raise ConfigError(f"epsilon must lie in (0, 1), got {eps}")
        if self.t_end != ONE_OVER_EPS and (not isinstance(self.t_end, (int, float))
                                           or self.t_end < 0):
            raise ConfigError(f"t_end must be >= 0 or {ONE_OVER_EPS!r}")
        bad = set(self.outputs) - {"csv", "summary"}
        if bad:
            raise ConfigError(f"unknown outputs {sorted(bad)}")

    @property
    def epsilon(self) -> float:
        return self.epsilons[0]

    def end_time(self, eps: float) -> float:
        return 1.0 / eps if self.t_end == ONE_OVER_EPS else float(self.t_end)

    @property
    def grid(self) -> PeriodicGrid:
        return make_grid(self.M)


def load_config(source: Union[str, Path]) -> RunConfig:
    """Read a config file path, or config text when ``source`` contains a newline."""
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    text = str(source)
    if "\n" in text:
        parser.read_string(text)
    else:
        path = Path(source)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        parser.read(path)
    return config_from_parser(parser)


def config_from_parser(parser: configparser.ConfigParser) -> RunConfig:
    kw = {}
    try:
        if parser.has_section("run"):
            run = parser["run"]
            if "model" in run:
                kw["model"] = ModelKind(run["model"].strip())
            if "epsilon" in run:
                kw["epsilons"] = _float_list(run["epsilon"])
            if "M" in run:
                kw["M"] = run.getint("M")
            for key in ("dt_direct", "dt_averaged"):
                if key in run:
                    kw[key] = run.getfloat(key)
            if "t_end" in run:
                val = run["t_end"].strip()
                kw["t_end"] = val if val == ONE_OVER_EPS else float(val)
            if "outputs" in run:
                kw["outputs"] = tuple(v.strip() for v in run["outputs"].split(",") if v.strip())
            if "snapshots" in run:
                kw["snapshots"] = run.getint("snapshots")
        if parser.has_section("initial"):
            ini = parser["initial"]
            preset = ini.get("preset", "").strip() or None
            if preset and preset not in PRESETS:
                raise ConfigError(f"unknown preset {preset!r}")
            terms = dict(PRESETS[preset]) if preset else {"Z0": "", "U0": "", "h": ""}
            for key in ("Z0", "U0", "h"):
                if key in ini:
                    terms[key] = ini[key]
            kw.update(preset=preset, z0=parse_terms(terms["Z0"]),
                      u0=parse_terms(terms["U0"]), h=parse_terms(terms["h"]))
        if parser.has_section("dispersion"):
            sec = parser["dispersion"]
            if "epsilon" in sec:
                kw["epsilons"] = _float_list(sec["epsilon"])
            if "k_max" in sec:
                kw["k_max"] = sec.getint("k_max")
            if "regularized" in sec:
                kw["regularized"] = sec.getboolean("regularized")
        if parser.has_section("convergence"):
            sec = parser["convergence"]
            if "levels" in sec:
                kw["levels"] = tuple(int(v) for v in _float_list(sec["levels"]))
            if "dt" in sec:
                kw["conv_dt"] = sec.getfloat("dt")
            if "tau_end" in sec:
                kw["conv_tau_end"] = sec.getfloat("tau_end")
            if "coupling" in sec:
                kw["conv_coupling"] = sec.getboolean("coupling")
        if parser.has_section("resonance") and "bound" in parser["resonance"]:
            kw["bound"] = parser["resonance"].getint("bound")
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from None
    return RunConfig(**kw)


@dataclass
class ErrorReport:
    epsilon: float
    t: float
    sup_error_Z: float
    sup_error_U: float
    l2_error_Z: float
    l2_error_U: float
    runtime_direct: float
    runtime_averaged: float
    M: int
    period: float

    @property
    def sup_error(self) -> float:
        """Worst component error, ``max(sup|Z - Z_a|, sup|U - U_a|)``."""
        return max(self.sup_error_Z, self.sup_error_U)


@dataclass
class Comparison:
    reports: list
    profiles: dict  # eps -> (x, Z_direct, U_direct, Z_asym, U_asym)
    averaged_run: averaged_solver.AveragedRun


def initial_fields(config: RunConfig) -> tuple[Field, Field, Field]:
    grid = config.grid
    return (inverse_fourier(config.z0, grid), inverse_fourier(config.u0, grid),
            inverse_fourier(config.h, grid))


def averaged_params(config: RunConfig, tau_end: float, coupling: bool = True) -> SchemeParams:
    return SchemeParams(dt=config.dt_averaged, tau_end=tau_end, coupling=coupling,
                        **config.model.averaged_coefficients())


def solve_averaged(config: RunConfig, tau_end: Optional[float] = None,
                   coupling: bool = True) -> averaged_solver.AveragedRun:
    """Integrate the averaged system once up to the largest slow time needed."""
    if tau_end is None:
        tau_end = max(eps * config.end_time(eps) for eps in config.epsilons)
    z0, u0, h = initial_fields(config)
    params = averaged_params(config, tau_end, coupling)
    snaps = np.linspace(0.0, tau_end, max(config.snapshots, 2)) if tau_end > 0 else []
    return averaged_solver.run(riemann_initial(z0, u0), h, params, snaps)


def cmd_compare(config: RunConfig) -> Comparison:
    """Direct vs asymptotic solution at ``t_end`` for every epsilon in the config.

    The averaged system is integrated once and reused for all epsilons.
    """
    z0, u0, h = initial_fields(config)
    grid = config.grid
    start = time.perf_counter()
    avg = solve_averaged(config)
    t_avg = time.perf_counter() - start
    reports, profiles = [], {}
    for eps in config.epsilons:
        t_end = config.end_time(eps)
        start = time.perf_counter()
        try:
            direct = solve_direct(config.model, DirectState(z0, u0, 0.0, eps), h, t_end,
                                  dt=config.dt_direct)[-1]
        except Exception as exc:
            raise RuntimeError(f"direct solve failed for eps={eps}: {exc}") from exc
        t_dir = time.perf_counter() - start
        Za, Ua = evaluate_asymptotic(avg, eps, t_end, grid)
        reports.append(ErrorReport(eps, t_end, sup_norm(direct.Z, Za), sup_norm(direct.U, Ua),
                                   l2_norm(direct.Z, Za), l2_norm(direct.U, Ua),
                                   t_dir, t_avg, grid.num_points, grid.period))
        profiles[eps] = (grid.nodes, direct.Z.values, direct.U.values, Za.values, Ua.values)
    return Comparison(reports, profiles, avg)


def format_float(v) -> str:
    return f"{float(v):.17g}"


def write_csv(path: Path, header: Sequence[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_float(v) if isinstance(v, (float, np.floating)) else v
                             for v in row])


def csv_text(header: Sequence[str], rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_float(v) if isinstance(v, (float, np.floating)) else v
                         for v in row])
    return buf.getvalue()


COMPARE_HEADER = ("x", "Z_direct", "U_direct", "Z_asym", "U_asym")
SUMMARY_HEADER = ("epsilon", "t", "sup_error", "sup_error_Z", "sup_error_U",
                  "l2_error_Z", "l2_error_U", "M")


def _eps_tag(eps: float) -> str:
    return f"{eps:g}".replace(".", "p")


def write_comparison(comp: Comparison, config: RunConfig, out: Path) -> list:
    out.mkdir(parents=True, exist_ok=True)
    written = []
    if "csv" in config.outputs:
        for eps, cols in comp.profiles.items():
            path = out / f"compare_{config.model.value}_eps{_eps_tag(eps)}.csv"
            write_csv(path, COMPARE_HEADER, zip(*cols))
            written.append(path)
    if "summary" in config.outputs:
        path = out / f"summary_{config.model.value}.csv"
        write_csv(path, SUMMARY_HEADER,
                  [(r.epsilon, r.t, r.sup_error, r.sup_error_Z, r.sup_error_U,
                    r.l2_error_Z, r.l2_error_U, r.M) for r in comp.reports])
        written.append(path)
    return written


def cmd_resonance(config: RunConfig) -> tuple[ResonanceVerdict, int]:
    verdict = check_shallow_water_resonance(config.h, config.z0)
    return verdict, EXIT_RESONANT if verdict.resonant else EXIT_OK


DISPERSION_HEADER = ("k", "omega_squared", "stable", "growth_rate")


def cmd_dispersion(eps: float, k_max: int, regularized: bool) -> str:
    """CSV table of the linear dispersion relation for ``k = 1..k_max``."""
    if k_max < 0:
        raise ConfigError("k_max must be >= 0")
    rows = []
    for k in range(1, k_max + 1):
        p = dispersion_relation(k, eps, regularized)
        rows.append((p.k, p.omega_squared, "true" if p.stable else "false", p.growth_rate))
    return csv_text(DISPERSION_HEADER, rows)


@dataclass
class ConvergenceTable:
    levels: tuple
    dts: tuple
    differences: tuple  # sup |u_l - u_{l+1}| on the coarsest nodes
    orders: tuple  # float or "n/a"

    def as_rows(self):
        for i, (m, dt) in enumerate(zip(self.levels, self.dts)):
            diff = self.differences[i] if i < len(self.differences) else ""
            order = self.orders[i] if i < len(self.orders) else ""
            yield (m, dt, diff, order)


CONVERGENCE_HEADER = ("M", "dt", "difference_to_next", "observed_order")
_ORDER_FLOOR = 1e-13


def richardson_orders(differences: Sequence[float]) -> tuple:
    orders = []
    for a, b in zip(differences[:-1], differences[1:]):
        if a < _ORDER_FLOOR or b < _ORDER_FLOOR:
            orders.append("n/a")
        else:
            orders.append(math.log2(a / b))
    return tuple(orders)


def cmd_convergence(config: RunConfig) -> ConvergenceTable:
    """Observed order of the averaged scheme under joint refinement of ``dt`` and ``h``.

    Level ``l`` uses ``M = levels[l]`` and ``dt = conv_dt * levels[0]/levels[l]``;
    successive solutions are compared on the coarsest nodes.
    """
    levels = tuple(config.levels)
    if len(levels) < 3:
        raise ConfigError("convergence needs at least three refinement levels")
    m0 = levels[0]
    if any(m % m0 for m in levels):
        raise ConfigError("refinement levels must be multiples of the coarsest mesh")
    finals, dts = [], []
    for m in levels:
        cfg = replace(config, M=m)
        dt = config.conv_dt * m0 / m
        dts.append(dt)
        z0, u0, h = initial_fields(cfg)
        params = SchemeParams(dt=dt, tau_end=config.conv_tau_end, coupling=config.conv_coupling,
                              **config.model.averaged_coefficients())
        res = averaged_solver.run(riemann_initial(z0, u0), h, params)
        last = res.states[-1]
        stride = m // m0
        finals.append(np.concatenate([last.vplus.values[::stride], last.vminus.values[::stride]]))
    diffs = tuple(float(np.max(np.abs(a - b))) for a, b in zip(finals[:-1], finals[1:]))
    return ConvergenceTable(levels, tuple(dts), diffs, richardson_orders(diffs))
