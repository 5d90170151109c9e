import csv
import math
import subprocess
import sys

import numpy as np
import pytest

from hyperavg import cli, harness
from hyperavg.averaged_solver import run_invocations
from hyperavg.core import Spectrum
from hyperavg.direct_solver import ModelKind
from hyperavg.harness import (ConfigError, EXIT_ERROR, EXIT_OK, EXIT_RESONANT, cmd_compare,
                              cmd_convergence, cmd_dispersion, cmd_resonance, load_config,
                              parse_terms, richardson_orders)

PRESET = "[initial]\npreset = resonant_bump\n"


def write(tmp_path, text, name="exp.ini"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def rows(text):
    return list(csv.reader(text.splitlines()))


class TestConfig:
    def test_terms(self):
        s = parse_terms("cos:1, 2.5*sin:2, 0.3")
        x = np.linspace(0, 6, 13)
        assert np.allclose(s.evaluate(x), np.cos(x) + 2.5 * np.sin(2 * x) + 0.3)
        assert len(parse_terms("")) == 0

    @pytest.mark.parametrize("bad", ["tan:1", "cos:", "cos:1 sin:2", "*cos:1"])
    def test_bad_terms(self, bad):
        with pytest.raises(ConfigError):
            parse_terms(bad)

    def test_preset(self):
        cfg = load_config(PRESET)
        x = np.linspace(0, 6, 7)
        assert np.allclose(cfg.z0.evaluate(x), np.cos(x) + np.sin(2 * x))
        assert np.allclose(cfg.h.evaluate(x), 5 * np.sin(2 * x))
        assert len(cfg.u0) == 0

    def test_inline_overrides_preset(self):
        cfg = load_config(PRESET + "h = sin:3\n")
        assert cfg.h.frequencies.tolist() == [-3.0, 3.0]

    def test_run_section(self):
        cfg = load_config("[run]\nmodel = simplified_sw\nepsilon = 0.1, 0.02\nM = 64\n"
                          "t_end = 3.5\noutputs = summary\n")
        assert cfg.model is ModelKind.SIMPLIFIED_SW
        assert cfg.epsilons == (0.1, 0.02)
        assert cfg.grid.num_points == 64
        assert cfg.end_time(0.1) == 3.5
        assert load_config("[run]\nepsilon = 0.04\n").end_time(0.04) == pytest.approx(25.0)

    @pytest.mark.parametrize("text", [
        "[run]\nepsilon = 1.5\n",
        "[run]\nepsilon = 0\n",
        "[run]\nmodel = euler\n",
        "[run]\nM = 7\n",
        "[run]\nt_end = soon\n",
        "[run]\noutputs = png\n",
        "[initial]\npreset = nope\n",
    ])
    def test_invalid(self, text):
        with pytest.raises((ConfigError, ValueError)):
            cfg = load_config(text)
            cfg.grid

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(str(tmp_path / "absent.ini"))


class TestResonanceCommand:
    def test_preset_resonant(self):
        verdict, code = cmd_resonance(load_config(PRESET))
        assert verdict.resonant and code == EXIT_RESONANT == 2

    def test_flat_bottom(self):
        verdict, code = cmd_resonance(load_config(PRESET + "h = 0.5\n"))
        assert not verdict.resonant and code == EXIT_OK == 0

    def test_mismatched(self):
        _, code = cmd_resonance(load_config("[initial]\nZ0 = cos:1\nh = sin:3\n"))
        assert code == 0


class TestDispersionCommand:
    def test_flip_at_six(self):
        table = rows(cmd_dispersion(0.1, 10, False))
        assert table[0] == ["k", "omega_squared", "stable", "growth_rate"]
        stable = [r[2] for r in table[1:]]
        assert stable == ["true"] * 5 + ["false"] * 5
        assert float(table[6][3]) == pytest.approx(math.sqrt(7.2), abs=1e-12)

    def test_regularized_all_stable(self):
        assert all(r[2] == "true" for r in rows(cmd_dispersion(0.1, 50, True))[1:])

    def test_header_only(self):
        assert cmd_dispersion(0.1, 0, False) == "k,omega_squared,stable,growth_rate\n"


class TestConvergenceCommand:
    def test_second_order_four_levels(self):
        cfg = load_config(PRESET + "[convergence]\nlevels = 32, 64, 128, 256\ndt = 8e-3\n"
                          "tau_end = 0.5\n")
        table = cmd_convergence(cfg)
        assert len(table.differences) == 3 and len(table.orders) == 2
        assert all(1.8 <= o <= 2.2 for o in table.orders), table.orders

    def test_constant_data(self):
        cfg = load_config("[initial]\nZ0 = 0.5\n[convergence]\nlevels = 16, 32, 64\n")
        table = cmd_convergence(cfg)
        assert max(table.differences) < 1e-13
        assert table.orders == ("n/a",)

    def test_needs_three_levels(self):
        with pytest.raises(ConfigError):
            cmd_convergence(load_config(PRESET + "[convergence]\nlevels = 64\n"))

    def test_levels_nest(self):
        with pytest.raises(ConfigError):
            cmd_convergence(load_config(PRESET + "[convergence]\nlevels = 16, 24, 32\n"))

    def test_orders(self):
        assert richardson_orders([4.0, 1.0, 0.25]) == (2.0, 2.0)
        assert richardson_orders([1.0, 0.0]) == ("n/a",)


class TestCompare:
    def test_nondispersive_profile(self):
        cfg = load_config("[run]\nmodel = nonlinear_nondispersive\nepsilon = 0.01\nM = 64\n"
                          "dt_direct = 5e-3\ndt_averaged = 2e-3\nsnapshots = 21\n" + PRESET)
        comp = cmd_compare(cfg)
        rep = comp.reports[0]
        assert rep.t == pytest.approx(100.0)
        x, zd, ud, za, ua = comp.profiles[0.01]
        assert len(x) == 64
        assert all(np.all(np.isfinite(c)) for c in (zd, ud, za, ua))
        assert rep.sup_error == max(rep.sup_error_Z, rep.sup_error_U)
        assert min(rep.sup_error_Z, rep.sup_error_U, rep.l2_error_Z, rep.l2_error_U) >= 0

    def test_zero_end_time(self):
        cfg = load_config("[run]\nmodel = linear_regularized\nepsilon = 0.1\nM = 32\nt_end = 0\n"
                          + PRESET)
        rep = cmd_compare(cfg).reports[0]
        assert rep.sup_error_Z == rep.sup_error_U == rep.l2_error_Z == rep.l2_error_U == 0.0

    def test_averaged_system_solved_once(self):
        cfg = load_config("[run]\nmodel = linear_regularized\nepsilon = 0.1, 0.015, 0.01\nM = 32\n"
                          "t_end = 2\n" + PRESET)
        before = run_invocations()
        comp = cmd_compare(cfg)
        assert run_invocations() - before == 1
        assert len(comp.reports) == 3


class TestCli:
    def test_resonance_exit_codes(self, tmp_path, capsys):
        assert cli.main(["resonance", "--config", write(tmp_path, PRESET)]) == 2
        assert capsys.readouterr().out.startswith("resonant")
        flat = write(tmp_path, "[initial]\nZ0 = cos:1\nh = sin:3\n", "flat.ini")
        assert cli.main(["resonance", "--config", flat]) == 0

    def test_error_exit(self, tmp_path, capsys):
        assert cli.main(["compare", "--config", str(tmp_path / "missing.ini")]) == EXIT_ERROR
        bad = write(tmp_path, "[run]\nepsilon = 2\n", "bad.ini")
        assert cli.main(["dispersion", "--config", bad]) == EXIT_ERROR
        assert "error" in capsys.readouterr().err

    def test_unknown_command(self, tmp_path):
        with pytest.raises(SystemExit) as info:
            cli.main(["plot", "--config", write(tmp_path, PRESET)])
        assert info.value.code == 2

    def test_dispersion_stdout(self, tmp_path, capsys):
        cfg = write(tmp_path, "[dispersion]\nepsilon = 0.1\nk_max = 10\n")
        assert cli.main(["dispersion", "--config", cfg]) == 0
        assert capsys.readouterr().out == cmd_dispersion(0.1, 10, False)

    def test_outputs_are_reproducible(self, tmp_path):
        cfg = write(tmp_path, "[run]\nmodel = linear_regularized\nepsilon = 0.1, 0.05\nM = 32\n"
                              "t_end = 3\nsnapshots = 5\n" + PRESET)
        for cmd in ("compare", "solve-averaged", "solve-direct"):
            a, b = tmp_path / f"{cmd}_a", tmp_path / f"{cmd}_b"
            assert cli.main([cmd, "--config", cfg, "--out", str(a)]) == 0
            assert cli.main([cmd, "--config", cfg, "--out", str(b)]) == 0
            names = sorted(p.name for p in a.iterdir() if p.suffix == ".csv")
            assert names and names == sorted(p.name for p in b.iterdir() if p.suffix == ".csv")
            for n in names:
                assert (a / n).read_bytes() == (b / n).read_bytes()

    def test_compare_files(self, tmp_path):
        cfg = write(tmp_path, "[run]\nmodel = linear_regularized\nepsilon = 0.1\nM = 32\n"
                              "t_end = 2\n" + PRESET)
        out = tmp_path / "out"
        assert cli.main(["compare", "--config", cfg, "--out", str(out)]) == 0
        prof = (out / "compare_linear_regularized_eps0p1.csv").read_text()
        assert prof.splitlines()[0] == "x,Z_direct,U_direct,Z_asym,U_asym"
        assert len(prof.splitlines()) == 33
        assert "\r" not in prof
        summary = rows((out / "summary_linear_regularized.csv").read_text())
        assert summary[0][:3] == ["epsilon", "t", "sup_error"]
        # full double precision survives the round trip
        assert float(summary[1][0]) == 0.1
        assert (out / "summary.json").is_file()

    def test_solve_averaged_columns(self, tmp_path):
        cfg = write(tmp_path, "[run]\nepsilon = 0.1\nM = 16\nt_end = 1\nsnapshots = 3\n" + PRESET)
        out = tmp_path / "avg"
        assert cli.main(["solve-averaged", "--config", cfg, "--out", str(out)]) == 0
        table = rows((out / "averaged.csv").read_text())
        assert table[0] == ["tau", "y", "V_plus", "V_minus"]
        assert len(table) == 1 + 3 * 16

    def test_convergence_command(self, tmp_path):
        cfg = write(tmp_path, PRESET + "[convergence]\nlevels = 16, 32, 64\ndt = 1e-2\n"
                                       "tau_end = 0.1\n")
        out = tmp_path / "conv"
        assert cli.main(["convergence", "--config", cfg, "--out", str(out)]) == 0
        table = rows((out / "convergence.csv").read_text())
        assert table[0] == ["M", "dt", "difference_to_next", "observed_order"]
        assert len(table) == 4

    def test_console_script(self, tmp_path):
        proc = subprocess.run([sys.executable, "-m", "hyperavg.cli", "resonance",
                               "--config", write(tmp_path, PRESET)], capture_output=True, text=True)
        assert proc.returncode == 2
