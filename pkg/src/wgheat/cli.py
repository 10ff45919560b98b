"""Command-line driver: convergence tables and diagnostics for registry problems.

Exit codes: 0 success, 1 usage error, 2 solver failure, 3 failed --check.
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import sys
from dataclasses import dataclass, field, fields, replace
from fractions import Fraction
from pathlib import Path

import numpy as np

from .analysis import (
    ErrorNorms,
    commutativity_residual,
    edge_flux_jumps,
    energy_balance,
    error_norms,
    fit_rate,
    poincare_ratio,
)
from .linsolve import DEFAULT_TOL, SolverError
from .mesh import build_uniform_mesh
from .problems import REGISTRY, UnknownProblemError, registry_lookup
from .timestepper import initial_state, iterate_parabolic, step_count

log = logging.getLogger(__name__)

K_RULES = ("h", "h2")
FORMATS = ("csv", "markdown")
DIAGNOSTICS = ("energy", "flux", "poincare", "commutativity")
COLUMNS = ("h", "k") + ErrorNorms.names()

EXIT_OK, EXIT_USAGE, EXIT_SOLVER, EXIT_CHECK = 0, 1, 2, 3


class UsageError(ValueError):
    pass


@dataclass
class RunConfig:
    problem: str = "example1-dirichlet"
    levels: list[int] = field(default_factory=lambda: [8, 16, 32, 64])
    k_rule: str = "h2"
    t_final: float = 1.0
    tol: float = DEFAULT_TOL
    format: str = "markdown"
    out: str | None = None
    diagnostics: list[str] = field(default_factory=list)

    def validate(self) -> RunConfig:
        if self.problem not in REGISTRY:
            raise UsageError(f"unknown problem {self.problem!r}; valid ids: {', '.join(REGISTRY)}")
        if not self.levels:
            raise UsageError("at least one mesh level is required")
        for n in self.levels:
            if n < 1 or n & (n - 1):
                raise UsageError(f"mesh level {n} is not a power of two")
        if any(b <= a for a, b in zip(self.levels, self.levels[1:])):
            raise UsageError("mesh levels must be strictly ascending")
        if self.k_rule not in K_RULES:
            raise UsageError(f"k-rule must be one of {K_RULES}, got {self.k_rule!r}")
        if self.format not in FORMATS:
            raise UsageError(f"format must be one of {FORMATS}, got {self.format!r}")
        if not self.t_final > 0:
            raise UsageError("t-final must be positive")
        if not 0 < self.tol < 1:
            raise UsageError("tol must lie in (0, 1)")
        unknown = set(self.diagnostics) - set(DIAGNOSTICS)
        if unknown:
            raise UsageError(f"unknown diagnostics {sorted(unknown)}; valid: {', '.join(DIAGNOSTICS)}")
        for n in self.levels:
            try:
                step_count(self.t_final, self.time_step(n))
            except ValueError as exc:
                raise UsageError(str(exc)) from None
        return self

    def time_step(self, n: int) -> float:
        h = 1.0 / n
        return h if self.k_rule == "h" else h * h


def _parse_list(text: str) -> list[str]:
    return [s.strip() for s in text.split(",") if s.strip()]


_CONVERTERS = {
    "problem": str,
    "levels": lambda s: [int(v) for v in _parse_list(s)],
    "k_rule": str,
    "t_final": float,
    "tol": float,
    "format": str,
    "out": str,
    "diagnostics": _parse_list,
}


def read_config(path: str | Path) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    values = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in _CONVERTERS:
            raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
        try:
            values[key] = _CONVERTERS[key](value)
        except ValueError:
            raise UsageError(f"{path}:{lineno}: bad value for {key}: {value!r}") from None
    return values


@dataclass
class LevelResult:
    n: int
    h: float
    k: float
    norms: ErrorNorms


@dataclass
class ConvergenceReport:
    problem: str
    k_rule: str
    levels: list[LevelResult]
    rates: dict[str, float] | None  # None when errors vanish (rates not applicable)
    failed_level: int | None = None

    @property
    def ok(self) -> bool:
        return self.failed_level is None


def compute_rates(levels: list[LevelResult], floor: float = 1e-10) -> dict[str, float] | None:
    if len(levels) < 2:
        return None
    rates = {}
    for name in ErrorNorms.names():
        errs = [getattr(r.norms, name) for r in levels]
        if max(errs) <= floor:
            return None
        rates[name] = fit_rate([(r.h, e) for r, e in zip(levels, errs)]) if min(errs) > 0 else float("nan")
    return rates


def run_convergence(config: RunConfig) -> ConvergenceReport:
    """Solve on every level and measure errors against Q_h u at the final time."""
    config.validate()
    problem = replace(registry_lookup(config.problem), t_final=config.t_final)
    results = []
    for n in config.levels:
        k = config.time_step(n)
        mesh = build_uniform_mesh(n)
        log.info("level n=%d k=%g (%d steps)", n, k, step_count(config.t_final, k))
        try:
            state = initial_state(problem, mesh)
            for _, _, state in iterate_parabolic(problem, mesh, k, config.tol):
                pass
        except SolverError as exc:
            log.error("solver failed at n=%d: %s", n, exc)
            return ConvergenceReport(config.problem, config.k_rule, results, compute_rates(results), failed_level=n)
        results.append(LevelResult(n, 1.0 / n, k, error_norms(state, problem, config.t_final)))
    return ConvergenceReport(config.problem, config.k_rule, results, compute_rates(results))


def _h_label(h: float) -> str:
    frac = Fraction(h).limit_denominator(1 << 20)
    return f"1/{frac.denominator}" if frac.numerator == 1 else f"{h:g}"


def format_csv(report: ConvergenceReport) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(COLUMNS)
    for r in report.levels:
        writer.writerow([repr(r.h), repr(r.k)] + [repr(v) for v in r.norms.as_tuple()])
    if not report.ok:
        writer.writerow([f"FAILED n={report.failed_level}", ""] + [""] * 5)
    elif report.rates is None:
        writer.writerow(["rate", ""] + ["n/a"] * 5)
    else:
        writer.writerow(["rate", ""] + [repr(report.rates[c]) for c in ErrorNorms.names()])
    return buf.getvalue()


_MD_HEADERS = ("h", "‖e_h‖_{∞,T}", "‖e_h‖_{∞,∂T}", "‖∇_d e_h‖", "‖e_h‖_{L2,T}", "‖e_h‖_{L2,∂T}")


def format_markdown(report: ConvergenceReport) -> str:
    lines = [
        f"{report.problem}, k = {'h' if report.k_rule == 'h' else 'h^2'}",
        "",
        "| " + " | ".join(_MD_HEADERS) + " |",
        "|" + "---|" * len(_MD_HEADERS),
    ]
    for r in report.levels:
        lines.append("| " + " | ".join([_h_label(r.h)] + [f"{v:.2e}" for v in r.norms.as_tuple()]) + " |")
    if not report.ok:
        lines.append(f"| FAILED n={report.failed_level} |" + " |" * 5)
    elif report.rates is None:
        lines.append("| O(h^r) r= |" + " n/a |" * 5)
    else:
        lines.append("| O(h^r) r= | " + " | ".join(f"{report.rates[c]:.4f}" for c in ErrorNorms.names()) + " |")
    return "\n".join(lines) + "\n"


def parse_csv(text: str) -> tuple[list[list[float]], list[float] | None]:
    rows = list(csv.reader(io.StringIO(text)))
    body = [[float(v) for v in row] for row in rows[1:] if row[0] not in ("rate",) and not row[0].startswith("FAILED")]
    rate_rows = [row for row in rows if row[0] == "rate"]
    rates = None
    if rate_rows and rate_rows[0][2] != "n/a":
        rates = [float(v) for v in rate_rows[0][2:]]
    return body, rates


def parse_markdown(text: str) -> tuple[list[list[float]], list[float] | None]:
    body, rates = [], None
    for line in text.splitlines():
        if not line.startswith("| ") or line.startswith("| h "):
            continue
        cells = [c.strip() for c in line.strip("|").split("|")]
        if cells[0] == "O(h^r) r=":
            rates = None if cells[1] == "n/a" else [float(c) for c in cells[1:]]
        elif cells[0].startswith("1/"):
            body.append([1.0 / int(cells[0][2:])] + [float(c) for c in cells[1:]])
    return body, rates


# Rate bands used by --check, keyed by (problem, k-rule).
RATE_BANDS = {
    ("example1-dirichlet", "h2"): {name: (1.75, 2.25) for name in ErrorNorms.names()},
    ("example1-dirichlet", "h"): {
        "inf_T": (0.85, 1.25),
        "inf_dT": (0.85, 1.25),
        "grad_d": (1.0, np.inf),
        "l2_T": (0.85, 1.25),
        "l2_dT": (0.85, 1.25),
    },
    ("example1-robin", "h2"): {name: (1.75, np.inf) for name in ErrorNorms.names()},
    ("example2-tensor", "h2"): {name: (1.75, 2.25) for name in ErrorNorms.names()},
}


def check_report(report: ConvergenceReport) -> list[str]:
    """Return a list of failed expectations (empty when all pass)."""
    if not report.ok:
        return [f"solver failed at n={report.failed_level}"]
    failures = []
    if report.problem == "constant-sanity":
        for r in report.levels:
            worst = max(r.norms.as_tuple())
            if worst > 1e-10:
                failures.append(f"n={r.n}: error {worst:.3e} exceeds 1e-10")
        return failures
    bands = RATE_BANDS.get((report.problem, report.k_rule))
    if bands is None or report.rates is None:
        return failures
    for name, (lo, hi) in bands.items():
        r = report.rates[name]
        if not lo <= r <= hi:
            failures.append(f"rate {name} = {r:.4f} outside [{lo}, {hi}]")
    return failures


_POLYNOMIALS = {
    "1": (lambda x, y, t: np.ones_like(x), lambda x, y, t: np.zeros(np.shape(x) + (2,))),
    "x": (lambda x, y, t: x, lambda x, y, t: np.stack([np.ones_like(x), np.zeros_like(x)], -1)),
    "y": (lambda x, y, t: y, lambda x, y, t: np.stack([np.zeros_like(x), np.ones_like(x)], -1)),
    "x^2": (lambda x, y, t: x * x, lambda x, y, t: np.stack([2 * x, np.zeros_like(x)], -1)),
    "xy": (lambda x, y, t: x * y, lambda x, y, t: np.stack([y, x], -1)),
    "y^2": (lambda x, y, t: y * y, lambda x, y, t: np.stack([np.zeros_like(y), 2 * y], -1)),
}


def run_diagnostics(config: RunConfig, poincare_trials: int = 100, seed: int = 0) -> dict[str, float]:
    """Key-value diagnostics for each configured level."""
    config.validate()
    problem = replace(registry_lookup(config.problem), t_final=config.t_final)
    report: dict[str, float] = {}
    wanted = set(config.diagnostics)
    for n in config.levels:
        mesh = build_uniform_mesh(n)
        if wanted & {"energy", "flux"}:
            k = config.time_step(n)
            energy = jump = scale = 0.0
            for t_n, prev, cur in iterate_parabolic(problem, mesh, k, config.tol):
                if "energy" in wanted:
                    energy = max(energy, float(np.max(np.abs(energy_balance(problem, prev, cur, t_n, k)))))
                if "flux" in wanted:
                    jumps, flux = edge_flux_jumps(cur, problem.coeff, t_n)
                    jump = max(jump, float(jumps.max(initial=0.0)))
                    scale = max(scale, float(np.max(np.abs(flux))))
            if "energy" in wanted:
                report[f"energy_max_residual[n={n}]"] = energy
            if "flux" in wanted:
                report[f"flux_max_jump[n={n}]"] = jump
                report[f"flux_max_edge_flux[n={n}]"] = scale
        if "poincare" in wanted:
            report[f"poincare_ratio[n={n}]"] = poincare_ratio(mesh, poincare_trials, seed)
        if "commutativity" in wanted:
            report[f"commutativity_max[n={n}]"] = max(
                commutativity_residual(w, gw, mesh) for w, gw in _POLYNOMIALS.values()
            )
    return report


def format_diagnostics(report: dict[str, float]) -> str:
    return "".join(f"{key}={value!r}\n" for key, value in report.items())


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="wgheat", description="Weak Galerkin backward Euler convergence studies on the unit square.")
    p.add_argument("--config", help="file of key=value lines; command-line flags take precedence")
    p.add_argument("--problem", help=f"one of: {', '.join(REGISTRY)}")
    p.add_argument("--levels", help="comma-separated mesh levels n (powers of two), e.g. 8,16,32,64")
    p.add_argument("--k-rule", dest="k_rule", choices=K_RULES, help="time step k = h or k = h^2")
    p.add_argument("--t-final", dest="t_final", type=float)
    p.add_argument("--tol", type=float, help="relative residual tolerance of the linear solver")
    p.add_argument("--format", choices=FORMATS)
    p.add_argument("--out", help="write the table here instead of stdout")
    p.add_argument("--diagnostics", help=f"comma-separated subset of: {', '.join(DIAGNOSTICS)}")
    p.add_argument("--check", action="store_true", help="exit 3 if fitted rates fall outside the expected bands")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def config_from_args(args: argparse.Namespace) -> RunConfig:
    values = read_config(args.config) if args.config else {}
    for f in fields(RunConfig):
        raw = getattr(args, f.name, None)
        if raw is not None:
            values[f.name] = _CONVERTERS[f.name](raw) if isinstance(raw, str) else raw
    return RunConfig(**values).validate()


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        config = config_from_args(args)
    except (UsageError, UnknownProblemError, OSError) as exc:
        print(f"wgheat: {exc}", file=sys.stderr)
        return EXIT_USAGE

    try:
        if config.diagnostics:
            _emit(format_diagnostics(run_diagnostics(config)), config.out)
            return EXIT_OK
        report = run_convergence(config)
    except SolverError as exc:
        print(f"wgheat: solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER

    _emit(format_csv(report) if config.format == "csv" else format_markdown(report), config.out)
    if not report.ok:
        print(f"wgheat: solver failure at n={report.failed_level}", file=sys.stderr)
        return EXIT_SOLVER
    if args.check:
        failures = check_report(report)
        for msg in failures:
            print(f"check failed: {msg}", file=sys.stderr)
        if failures:
            return EXIT_CHECK
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
