import io

import numpy as np
import pytest

from brownreg import Panel, TimeGrid
from brownreg.cli import main, parse_potential
from brownreg.errors import InvalidInput, InvalidSpec, RaggedJ
from brownreg.io import read_panel_csv, read_path_csv, write_panel_csv


def _write(path, text):
    path.write_text(text, encoding="utf-8")
    return str(path)


SCALAR_PANEL = "t,i,y,x_1\n1,1,1,1\n2,1,1,1\n"


class TestPanelCsv:
    def test_round_trip_is_lossless(self, rng):
        grid = TimeGrid([0.0, 0.1, 0.30000000000000004])
        p = Panel(grid, rng.normal(size=(3, 4)), rng.normal(size=(3, 4, 2)))
        buf = io.StringIO()
        write_panel_csv(p, buf, ["N=4"])
        buf.seek(0)
        assert read_panel_csv(buf) == p

    def test_header_checked(self):
        with pytest.raises(InvalidInput):
            read_panel_csv(io.StringIO("t,i,y,z\n0,1,1,1\n"))

    def test_ragged_row(self):
        with pytest.raises(RaggedJ):
            read_panel_csv(io.StringIO("t,i,y,x_1\n0,1,1\n"))

    def test_non_numeric(self):
        with pytest.raises(InvalidInput):
            read_panel_csv(io.StringIO("t,i,y,x_1\n0,1,one,1\n"))

    def test_empty(self):
        with pytest.raises(InvalidInput):
            read_panel_csv(io.StringIO("# only a comment\n"))


class TestFit:
    def test_scalar_ridge_rows(self, tmp_path):
        panel = _write(tmp_path / "p.csv", SCALAR_PANEL)
        out = tmp_path / "o"
        code = main(["fit", panel, "--penalty", "ridge", "--lambda", "0.5", "--out", str(out)])
        assert code == 0
        lines = (out / "betas.csv").read_text().splitlines()
        assert lines[0] == "t,beta_1,max_foc_residual,converged"
        # s = 1 reproduces the scalar closed form; s = 2 is a different subproblem
        t, betas = read_path_csv(io.StringIO((out / "betas.csv").read_text()))
        assert betas[0, 0] == pytest.approx(0.13582, abs=1e-5)
        assert lines[1].endswith(",1")

    def test_both_rows_at_unit_time(self, tmp_path):
        panel = _write(tmp_path / "p.csv", "t,i,y,x_1\n1,1,1,1\n1.0000000001,1,1,1\n")
        out = tmp_path / "o"
        assert main(["fit", panel, "--penalty", "ridge", "--lambda", "0.5", "--out", str(out)]) == 0
        _, betas = read_path_csv(io.StringIO((out / "betas.csv").read_text()))
        np.testing.assert_allclose(betas[:, 0], 0.13582, atol=1e-5)

    def test_bad_alpha_names_field(self, tmp_path, capsys):
        panel = _write(tmp_path / "p.csv", SCALAR_PANEL)
        code = main(["fit", panel, "--penalty", "elasticnet", "--alpha", "1.5",
                     "--out", str(tmp_path)])
        assert code == 1
        assert "alpha" in capsys.readouterr().err

    def test_config_unknown_key(self, tmp_path, capsys):
        panel = _write(tmp_path / "p.csv", SCALAR_PANEL)
        cfg = _write(tmp_path / "c.cfg", "penalty = ridge\nbogus = 1\n")
        assert main(["fit", panel, "--config", cfg, "--out", str(tmp_path)]) == 1
        assert "bogus" in capsys.readouterr().err

    def test_config_and_flag_precedence(self, tmp_path):
        panel = _write(tmp_path / "p.csv", SCALAR_PANEL)
        cfg = _write(tmp_path / "c.cfg", "# comment\npenalty = ridge\nlambda = 5\n")
        out = tmp_path / "o"
        assert main(["fit", panel, "--config", cfg, "--lambda", "0.5", "--out", str(out)]) == 0
        _, betas = read_path_csv(io.StringIO((out / "betas.csv").read_text()))
        assert betas[0, 0] == pytest.approx(0.13582, abs=1e-5)

    def test_malformed_panel(self, tmp_path, capsys):
        panel = _write(tmp_path / "p.csv", "t,i,y,x_1\n0,1,1,1\n0,2,1,1\n1,1,1,1\n")
        assert main(["fit", panel, "--out", str(tmp_path)]) == 1
        assert "missing" in capsys.readouterr().err

    def test_missing_file(self, tmp_path):
        assert main(["fit", str(tmp_path / "nope.csv"), "--out", str(tmp_path)]) == 1

    def test_partial_convergence_exit_code(self, tmp_path):
        panel = _write(tmp_path / "p.csv",
                       "t,i,y,x_1\n0,1,1,1\n0,2,2,1\n1,1,0.01,0.1\n1,2,0.01,-0.1\n")
        out = tmp_path / "o"
        assert main(["fit", panel, "--penalty", "lasso", "--lambda", "30", "--out", str(out)]) == 2
        report = (out / "report.txt").read_text()
        assert "NOT converged" in report and "converged points: 1/2" in report

    def test_usage_error_is_input_error(self):
        with pytest.raises(SystemExit) as exc:
            main(["fit"])
        assert exc.value.code == 1


class TestGen:
    def test_outputs_and_header(self, tmp_path):
        out = tmp_path / "g"
        assert main(["gen", "--out", str(out), "--seed", "3"]) == 0
        text = (out / "panel.csv").read_text()
        assert text.startswith("# N=20\n# J=2\n# grid=uniform t_max=1 n_times=11\n")
        truth = (out / "truth.csv").read_text().splitlines()
        assert truth[0] == "t,beta_1,beta_2" and len(truth) == 12

    def test_noise_free_is_linear(self, tmp_path):
        out = tmp_path / "g"
        cfg = _write(tmp_path / "c.cfg", "noise = 0\nbeta = 2, -1\nbeta_slope = 1, 0\nn_cases = 5\n")
        assert main(["gen", "--config", cfg, "--out", str(out)]) == 0
        with open(out / "panel.csv") as fh:
            panel = read_panel_csv(fh)
        beta = np.column_stack([2 + panel.grid.points, -np.ones(len(panel.grid))])
        np.testing.assert_array_equal(panel.Y, np.einsum("tij,tj->ti", panel.X, beta))

    def test_byte_identical(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        assert main(["gen", "--out", str(a), "--seed", "7", "--noise", "0.1"]) == 0
        assert main(["gen", "--out", str(b), "--seed", "7", "--noise", "0.1"]) == 0
        for name in ("panel.csv", "truth.csv"):
            assert (a / name).read_bytes() == (b / name).read_bytes()

    def test_bad_config(self, tmp_path, capsys):
        cfg = _write(tmp_path / "c.cfg", "beta = 1\nbeta_slope = 1, 2\n")
        assert main(["gen", "--config", cfg, "--out", str(tmp_path)]) == 1
        assert "beta_slope" in capsys.readouterr().err
        cfg = _write(tmp_path / "d.cfg", "n_times\n")
        assert main(["gen", "--config", cfg, "--out", str(tmp_path)]) == 1


class TestValidate:
    def test_ridge(self, capsys):
        assert main(["validate", "ridge", "--n", "30"]) == 0
        assert "max discrepancy <= 1e-06: yes" in capsys.readouterr().out

    def test_group_reports_but_succeeds(self, capsys):
        assert main(["validate", "grouplasso", "--n", "10"]) == 0
        assert "discrepancy section" in capsys.readouterr().out

    def test_unknown_family(self, capsys):
        assert main(["validate", "foo"]) == 1
        assert "family" in capsys.readouterr().err


class TestPropagate:
    def _residuals(self, capsys, *args):
        assert main(["propagate", *args]) == 0
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == "step,s,residual"
        return np.array([float(l.split(",")[2]) for l in lines[1:]])

    def test_zero_potential(self, capsys):
        assert np.all(self._residuals(capsys, "--f", "0", "--steps", "3") == 0.0)

    def test_halving_ratio(self, capsys):
        r1 = self._residuals(capsys, "--f", "1", "--epsilon", "0.01", "--steps", "1")
        r2 = self._residuals(capsys, "--f", "1", "--epsilon", "0.005", "--steps", "1")
        assert r1[0] / r2[0] == pytest.approx(2.0, abs=0.05)

    def test_quadratic_decay(self, capsys):
        r = [self._residuals(capsys, "--f", "x^2", "--epsilon", str(e), "--steps", "1")[0]
             for e in (1e-2, 5e-3, 2.5e-3)]
        assert r[0] > r[1] > r[2]

    def test_bad_expression(self, capsys):
        assert main(["propagate", "--f", "import os"]) == 1
        assert main(["propagate", "--f", "y + 1"]) == 1
        assert main(["propagate", "--epsilon", "-1"]) == 1


def test_parse_potential():
    f = parse_potential("-x^2 + 2*sin(x) + exp(0)")
    x = np.array([0.0, 1.0])
    np.testing.assert_allclose(f(x), -x ** 2 + 2 * np.sin(x) + 1)
    with pytest.raises(InvalidSpec):
        parse_potential("__import__('os')")
