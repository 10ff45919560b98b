import subprocess
import sys

import numpy as np
import pytest

from wgheat import cli, timestepper
from wgheat.linsolve import ConvergenceError, SolveReport


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_small_run_csv(capsys):
    code, out, _ = run(capsys, "--problem", "example1-dirichlet", "--levels", "2,4", "--k-rule", "h", "--format", "csv")
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0] == "h,k,inf_T,inf_dT,grad_d,l2_T,l2_dT"
    assert len(lines) == 4 and lines[-1].startswith("rate,")
    body, rates = cli.parse_csv(out)
    assert [row[0] for row in body] == [0.5, 0.25]
    assert [row[1] for row in body] == [0.5, 0.25]
    assert rates is not None and len(rates) == 5


def test_output_is_byte_reproducible(capsys, tmp_path):
    args = ["--problem", "example2-tensor", "--levels", "2,4", "--k-rule", "h", "--format", "csv"]
    first = tmp_path / "a.csv"
    second = tmp_path / "b.csv"
    assert cli.main(args + ["--out", str(first)]) == 0
    assert cli.main(args + ["--out", str(second)]) == 0
    assert first.read_bytes() == second.read_bytes()


def test_csv_and_markdown_agree():
    config = cli.RunConfig(problem="example1-robin", levels=[2, 4, 8], k_rule="h")
    report = cli.run_convergence(config)
    csv_body, csv_rates = cli.parse_csv(cli.format_csv(report))
    md_body, md_rates = cli.parse_markdown(cli.format_markdown(report))
    csv_body = np.array(csv_body)
    md_body = np.array(md_body)
    assert np.array_equal(md_body[:, 0], csv_body[:, 0])
    # markdown keeps 3 significant digits
    assert np.allclose(md_body[:, 1:], csv_body[:, 2:], rtol=5e-3, atol=0)
    assert np.allclose(md_rates, csv_rates, atol=5e-5)


def test_markdown_layout():
    config = cli.RunConfig(problem="example1-dirichlet", levels=[2, 4], k_rule="h")
    text = cli.format_markdown(cli.run_convergence(config))
    lines = text.splitlines()
    assert lines[0] == "example1-dirichlet, k = h"
    assert lines[2].startswith("| h | ‖e_h‖_{∞,T}")
    assert lines[4].startswith("| 1/2 | ")
    assert lines[-1].startswith("| O(h^r) r= | ")


def test_constant_sanity_reports_na(capsys):
    code, out, _ = run(capsys, "--problem", "constant-sanity", "--levels", "2,4", "--k-rule", "h", "--format", "csv")
    assert code == 0
    body, rates = cli.parse_csv(out)
    assert rates is None
    assert max(max(row[2:]) for row in body) <= 1e-10
    assert out.strip().splitlines()[-1] == "rate,,n/a,n/a,n/a,n/a,n/a"
    code, md, _ = run(capsys, "--problem", "constant-sanity", "--levels", "2,4", "--k-rule", "h", "--check")
    assert code == 0
    assert "n/a" in md


@pytest.mark.parametrize(
    "argv",
    [
        ["--problem", "example3"],
        ["--levels", "3,6"],
        ["--levels", "8,4"],
        ["--levels", ""],
        ["--k-rule", "h3"],
        ["--format", "xml"],
        ["--tol", "2"],
        ["--t-final", "-1"],
        ["--t-final", "0.3", "--levels", "2", "--k-rule", "h"],
        ["--diagnostics", "energy,bogus"],
        ["--bogus-flag"],
        ["--config", "/nonexistent/file.cfg"],
    ],
)
def test_usage_errors_exit_one(capsys, argv):
    code = None
    try:
        code = cli.main(argv)
    except SystemExit as exc:
        code = exc.code
    assert code == cli.EXIT_USAGE
    assert capsys.readouterr().err


def test_unknown_problem_lists_valid_ids(capsys):
    code, _, err = run(capsys, "--problem", "nope")
    assert code == 1
    for name in cli.REGISTRY:
        assert name in err


def test_config_file_with_flag_override(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(
        "# small run\nproblem = example2-tensor\nlevels = 2, 4\nk-rule = h\nformat = markdown  # overridden below\n"
    )
    code, out, _ = run(capsys, "--config", str(cfg), "--format", "csv")
    assert code == 0
    assert out.startswith("h,k,")
    code, out, _ = run(capsys, "--config", str(cfg))
    assert out.startswith("example2-tensor, k = h")
    bad = tmp_path / "bad.cfg"
    bad.write_text("levels: 2\n")
    assert run(capsys, "--config", str(bad))[0] == 1
    unknown = tmp_path / "unknown.cfg"
    unknown.write_text("colour = blue\n")
    assert run(capsys, "--config", str(unknown))[0] == 1


def test_solver_failure_exits_two_with_marker_row(monkeypatch, capsys):
    real = timestepper.solve_spd

    def failing(A, b, tol, max_iter=None, x0=None):
        if A.shape[0] > 100:
            raise ConvergenceError("forced", SolveReport(1, 1.0, False))
        return real(A, b, tol, max_iter, x0)

    monkeypatch.setattr(timestepper, "solve_spd", failing)
    code, out, err = run(capsys, "--problem", "example1-dirichlet", "--levels", "2,8", "--k-rule", "h", "--format", "csv")
    assert code == cli.EXIT_SOLVER
    lines = out.strip().splitlines()
    assert lines[1].startswith("0.5,")
    assert lines[-1].startswith("FAILED n=8")
    assert "n=8" in err


def test_check_flag_fails_outside_bands(capsys):
    # on very coarse meshes the k = h^2 rates are far from the asymptotic band
    code, _, err = run(capsys, "--problem", "example1-dirichlet", "--levels", "1,2", "--k-rule", "h2", "--check")
    assert code == cli.EXIT_CHECK
    assert "check failed" in err


def test_check_report_bands():
    levels = [cli.LevelResult(n, 1 / n, 1 / n**2, cli.ErrorNorms(*(5 * [1.0 / n**2]))) for n in (8, 16, 32)]
    report = cli.ConvergenceReport("example1-dirichlet", "h2", levels, cli.compute_rates(levels))
    assert cli.check_report(report) == []
    report = cli.ConvergenceReport("example1-dirichlet", "h", levels, cli.compute_rates(levels))
    assert len(cli.check_report(report)) == 4  # grad_d only has a lower bound


def test_diagnostics(capsys):
    code, out, _ = run(
        capsys, "--problem", "example1-dirichlet", "--levels", "8", "--diagnostics", "energy,flux,commutativity"
    )
    assert code == 0
    report = dict(line.rsplit("=", 1) for line in out.strip().splitlines())
    report = {k: float(v) for k, v in report.items()}
    assert report["energy_max_residual[n=8]"] <= 1e-8
    assert report["flux_max_jump[n=8]"] <= 1e-7 * report["flux_max_edge_flux[n=8]"]
    assert report["commutativity_max[n=8]"] <= 1e-12


def test_diagnostics_constant_problem_and_poincare():
    config = cli.RunConfig(problem="constant-sanity", levels=[4], k_rule="h", diagnostics=["flux", "poincare"])
    report = cli.run_diagnostics(config, poincare_trials=3)
    assert report["flux_max_jump[n=4]"] <= 1e-12
    assert 0 < report["poincare_ratio[n=4]"] < 0.3


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "wgheat", "--problem", "constant-sanity", "--levels", "2", "--k-rule", "h", "--format", "csv"],
        capture_output=True,
        text=True,
        check=False,
    )
    assert proc.returncode == 0
    assert proc.stdout.splitlines()[0] == "h,k,inf_T,inf_dT,grad_d,l2_T,l2_dT"
