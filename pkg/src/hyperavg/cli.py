"""Command-line entry point: ``hyperavg <command> --config FILE [--out DIR]``.

Exit codes: 0 success (or non-resonant), 1 error, 2 resonant.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import harness
from .direct_solver import DirectState, solve_direct
from .harness import EXIT_ERROR, EXIT_OK, ConfigError, RunConfig

log = logging.getLogger("hyperavg")

COMMANDS = ("resonance", "dispersion", "solve-averaged", "solve-direct", "compare", "convergence")


def _resonance(cfg: RunConfig, out: Path | None) -> int:
    verdict, code = harness.cmd_resonance(cfg)
    print(verdict)
    return code


def _dispersion(cfg: RunConfig, out: Path | None) -> int:
    text = harness.cmd_dispersion(cfg.epsilon, cfg.k_max, cfg.regularized)
    if out is None:
        sys.stdout.write(text)
    else:
        out.mkdir(parents=True, exist_ok=True)
        (out / "dispersion.csv").write_text(text)
    return EXIT_OK


def _solve_averaged(cfg: RunConfig, out: Path | None) -> int:
    res = harness.solve_averaged(cfg)
    rows = [(s.tau, y, vp, vm) for s in res.states
            for y, vp, vm in zip(s.grid.nodes, s.vplus.values, s.vminus.values)]
    header = ("tau", "y", "V_plus", "V_minus")
    _emit(out, "averaged.csv", header, rows)
    log.info("averaged run: %d steps, mean sweeps %.2f", len(res.iterations),
             float(np.mean(res.iterations)) if res.iterations else 0.0)
    return EXIT_OK


def _solve_direct(cfg: RunConfig, out: Path | None) -> int:
    z0, u0, h = harness.initial_fields(cfg)
    rows = []
    for eps in cfg.epsilons:
        t_end = cfg.end_time(eps)
        times = np.linspace(0.0, t_end, 11)
        for s in solve_direct(cfg.model, DirectState(z0, u0, 0.0, eps), h, t_end,
                              dt=cfg.dt_direct, snapshot_times=times):
            rows += [(eps, s.t, x, z, u) for x, z, u in
                     zip(s.grid.nodes, s.Z.values, s.U.values)]
    _emit(out, f"direct_{cfg.model.value}.csv", ("epsilon", "t", "x", "Z", "U"), rows)
    return EXIT_OK


def _compare(cfg: RunConfig, out: Path | None) -> int:
    comp = harness.cmd_compare(cfg)
    if out is not None:
        for path in harness.write_comparison(comp, cfg, out):
            log.info("wrote %s", path)
        summary = [{"epsilon": r.epsilon, "t": r.t, "sup_error": r.sup_error,
                    "sup_error_Z": r.sup_error_Z, "sup_error_U": r.sup_error_U,
                    "l2_error_Z": r.l2_error_Z, "l2_error_U": r.l2_error_U,
                    "runtime_direct": r.runtime_direct, "runtime_averaged": r.runtime_averaged,
                    "M": r.M} for r in comp.reports]
        (out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    for r in comp.reports:
        print(f"eps={r.epsilon:g} t={r.t:g} sup_error={r.sup_error:.6g} "
              f"(Z {r.sup_error_Z:.6g}, U {r.sup_error_U:.6g}) "
              f"l2 Z {r.l2_error_Z:.6g} U {r.l2_error_U:.6g}")
    return EXIT_OK


def _convergence(cfg: RunConfig, out: Path | None) -> int:
    table = harness.cmd_convergence(cfg)
    _emit(out, "convergence.csv", harness.CONVERGENCE_HEADER, table.as_rows())
    return EXIT_OK


def _emit(out, name, header, rows):
    if out is None:
        sys.stdout.write(harness.csv_text(header, rows))
    else:
        out.mkdir(parents=True, exist_ok=True)
        harness.write_csv(out / name, header, rows)


_HANDLERS = {
    "resonance": _resonance,
    "dispersion": _dispersion,
    "solve-averaged": _solve_averaged,
    "solve-direct": _solve_direct,
    "compare": _compare,
    "convergence": _convergence,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hyperavg",
        description="Averaged asymptotics vs direct solutions for weakly nonlinear "
                    "shallow-water systems.")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True, help="INI experiment file")
    parser.add_argument("--out", default=None, help="output directory (default: stdout)")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    out = Path(args.out) if args.out else None
    try:
        cfg = harness.load_config(args.config)
        return _HANDLERS[args.command](cfg, out)
    except (ConfigError, ValueError, RuntimeError) as exc:
        print(f"hyperavg: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
