import argparse
import dataclasses
import sys
from dataclasses import dataclass

import pandas as pd

from data.empirical import build_empirical
from data.losses import read_losses
from data.reports import (
    curve_frame,
    emit,
    record_frame,
    replication_frame,
    surface_frame,
    table_frame,
    to_csv,
    to_json,
)
from functionals.gap import delta_surface, gamma_curve
from functionals.inference import (
    consistency_check,
    es_confidence_interval,
    lower_confidence_interval,
    mc_coverage_study,
    mc_remainder_decay,
)
from functionals.riskmeasures import (
    distortion_estimate,
    distortion_risk,
    es,
    parse_measure_spec,
    rvar,
    rvar_measure,
)
from models import parse_dist_spec
from utils.errors import DataError, IntQuantError, ParameterError, ParseError, UsageError

COMMANDS = ("es", "gap", "surface", "mc-coverage", "mc-remainder", "mc-consistency",
            "distortion", "rvar", "lower")
TABLE_COMMANDS = ("gap", "surface", "mc-remainder", "mc-consistency")
GRID_TOL = 1e-9


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


@dataclass(frozen=True)
class RunConfig:
    command: str
    f: str | None = None
    g: str | None = None
    input: str | None = None
    p: float | None = None
    q: float | None = None
    level: float = 0.95
    p_grid: str | None = None
    z_grid: str | None = None
    measure: str | None = None
    n: int | None = None
    n_list: str | None = None
    reps: int | None = None
    seed: int = 0
    variance: str = "analytic"
    out: str | None = None
    format: str | None = None
    threads: int | None = None
    progress: bool = False
    verbose: bool = False

    @classmethod
    def from_namespace(cls, ns):
        names = {f.name for f in dataclasses.fields(cls)}
        return cls(**{k: v for k, v in vars(ns).items() if k in names})

    @property
    def output_format(self):
        if self.format:
            return self.format
        if self.command in TABLE_COMMANDS or (self.command == "mc-coverage" and self.verbose):
            return "csv"
        return "json"

    def validate(self):
        if self.command in ("es", "rvar", "distortion") and not (self.input or self.f):
            raise UsageError(f"{self.command}: one of --input or --f is required")
        if self.threads is not None and self.threads < 0:
            raise ParameterError(f"--threads must be >= 0, got {self.threads}")
        if self.seed < 0:
            raise ParameterError(f"--seed must be >= 0, got {self.seed}")
        return self


def parse_grid(text, name):
    """Grid from 'start:stop:step' (stop included when reached within 1e-9 steps) or 'a,b,c'."""
    text = str(text).strip()
    if ":" not in text:
        try:
            return [float(t) for t in text.split(",") if t.strip()]
        except ValueError:
            raise ParseError(f"{name}: expected 'start:stop:step' or a comma list, got {text!r}")

    parts = text.split(":")
    if len(parts) != 3:
        raise ParseError(f"{name}: expected 'start:stop:step', got {text!r}")
    try:
        start, stop, step = (float(x) for x in parts)
    except ValueError:
        raise ParameterError(f"{name}: non-numeric value in {text!r}")
    if not step > 0:
        raise ParameterError(f"{name}: step must be > 0, got {step}")
    if stop < start:
        raise ParameterError(f"{name}: stop {stop} is below start {start}")

    count = int((stop - start) / step + GRID_TOL) + 1
    return [round(start + k * step, 12) for k in range(count)]


def parse_n_list(text):
    try:
        return [int(t) for t in str(text).split(",") if t.strip()]
    except ValueError:
        raise ParameterError(f"--n-list: expected comma-separated integers, got {text!r}")


def _add_common(sub, seed=False):
    sub.add_argument("--out", type=str, default=None, help="Output file (default: stdout)")
    sub.add_argument("--format", type=str, choices=["csv", "json"], default=None,
                     help="Output format (default depends on the command)")
    sub.add_argument("--threads", type=int, default=None,
                     help="Worker threads (default: INTQUANT_THREADS, 0 = all cores)")
    sub.add_argument("--progress", action="store_true", help="Show progress bars on stderr")
    if seed:
        sub.add_argument("--seed", type=int, default=0, help="Seed of the random streams")


def build_parser():
    parser = _Parser(prog="intquant",
                     description="Integrated quantiles, Expected Shortfall and gap functionals")
    subs = parser.add_subparsers(dest="command", required=True, metavar="command")

    sub = subs.add_parser("es", help="Expected Shortfall estimate and interval")
    sub.add_argument("--input", type=str, help="Loss CSV (one column)")
    sub.add_argument("--f", type=str, help="Distribution spec, e.g. lomax:3,1 (analytic value or variance)")
    sub.add_argument("--p", type=float, required=True, help="Level p in (0,1)")
    sub.add_argument("--level", type=float, default=0.95, help="Confidence level")
    _add_common(sub)

    for name, help_text in (("gap", "Gap curve p -> Gamma*_p(F,G)"),
                            ("surface", "Difference surface (p,z) -> Delta_{p,z}(F,G)")):
        sub = subs.add_parser(name, help=help_text)
        sub.add_argument("--f", type=str, required=True, help="Distribution spec of F")
        sub.add_argument("--g", type=str, required=True, help="Distribution spec of G")
        sub.add_argument("--p-grid", dest="p_grid", type=str, default="0.01:0.99:0.01",
                         help="p grid 'start:stop:step' or 'a,b,c'")
        if name == "surface":
            sub.add_argument("--z-grid", dest="z_grid", type=str, required=True,
                             help="z grid 'start:stop:step' or 'a,b,c'")
        _add_common(sub)

    sub = subs.add_parser("mc-coverage", help="Monte Carlo coverage of the ES interval")
    sub.add_argument("--f", type=str, required=True, help="Distribution spec")
    sub.add_argument("--n", type=int, required=True, help="Sample size")
    sub.add_argument("--reps", type=int, default=1000, help="Replications (>= 100)")
    sub.add_argument("--p", type=float, required=True, help="Level p in (0,1)")
    sub.add_argument("--level", type=float, default=0.95, help="Confidence level")
    sub.add_argument("--variance", type=str, choices=["analytic", "plugin"], default="analytic",
                     help="Variance used in each interval")
    sub.add_argument("--verbose", action="store_true", help="Emit one row per replication")
    _add_common(sub, seed=True)

    for name, help_text in (("mc-remainder", "Median of sqrt(n) Gamma_p(F,F_n) per n"),
                            ("mc-consistency", "Median |error| of the integrated empirical quantile per n")):
        sub = subs.add_parser(name, help=help_text)
        sub.add_argument("--f", type=str, required=True, help="Distribution spec")
        sub.add_argument("--n-list", dest="n_list", type=str, default="250,1000,4000",
                         help="Comma-separated sample sizes")
        sub.add_argument("--reps", type=int, default=500, help="Replications per n")
        sub.add_argument("--p", type=float, required=True, help="Level p in (0,1)")
        _add_common(sub, seed=True)

    sub = subs.add_parser("distortion", help="Distortion risk measure int ES_p mu(dp)")
    sub.add_argument("--measure", type=str, required=True, help="Measure 'atom:p,w;band:a,b,h'")
    sub.add_argument("--input", type=str, help="Loss CSV (plug-in estimate with interval)")
    sub.add_argument("--f", type=str, help="Distribution spec (analytic value)")
    sub.add_argument("--level", type=float, default=0.95, help="Confidence level")
    _add_common(sub)

    sub = subs.add_parser("rvar", help="Range-VaR over (p, q)")
    sub.add_argument("--p", type=float, required=True, help="Lower level")
    sub.add_argument("--q", type=float, required=True, help="Upper level")
    sub.add_argument("--input", type=str, help="Loss CSV (plug-in estimate with interval)")
    sub.add_argument("--f", type=str, help="Distribution spec (analytic value)")
    sub.add_argument("--level", type=float, default=0.95, help="Confidence level")
    _add_common(sub)

    sub = subs.add_parser("lower", help="Lower-tail average (1/p) int_0^p F^{-1} with interval")
    sub.add_argument("--input", type=str, required=True, help="Loss CSV (one column)")
    sub.add_argument("--p", type=float, required=True, help="Level p in (0,1)")
    sub.add_argument("--level", type=float, default=0.95, help="Confidence level")
    sub.add_argument("--f", type=str, help="Distribution spec for the analytic variance")
    _add_common(sub)

    return parser


def _status(message):
    print(message, file=sys.stderr)


def _load_sample(path):
    _status(f"Loading losses from {path}...")
    sample = build_empirical(read_losses(path))
    _status(f"Loaded {sample.n} losses")
    return sample


def _model(text):
    return parse_dist_spec(text) if text else None


def _run_es(cfg):
    model = _model(cfg.f)
    if cfg.input:
        return es_confidence_interval(_load_sample(cfg.input), cfg.p, cfg.level, variance_model=model)
    return {"model": str(model), "p": cfg.p, "es": es(model, cfg.p),
            "integrated_upper_quantile": model.integrated_upper_quantile(cfg.p)}


def _run_gap(cfg):
    rows = gamma_curve(_model(cfg.f), _model(cfg.g), parse_grid(cfg.p_grid, "--p-grid"),
                       threads=cfg.threads, progress=cfg.progress)
    return curve_frame(rows)


def _run_surface(cfg):
    rows = delta_surface(_model(cfg.f), _model(cfg.g), parse_grid(cfg.p_grid, "--p-grid"),
                         parse_grid(cfg.z_grid, "--z-grid"), threads=cfg.threads, progress=cfg.progress)
    return surface_frame(rows)


def _run_coverage(cfg):
    report = mc_coverage_study(_model(cfg.f), cfg.n, cfg.reps, cfg.p, level=cfg.level, seed=cfg.seed,
                               variance=cfg.variance, threads=cfg.threads, progress=cfg.progress,
                               keep_rows=cfg.verbose)
    _status(f"Coverage {report.coverage:.4f} over {report.reps} replications (n={report.n})")
    if cfg.verbose and cfg.output_format == "csv":
        return replication_frame(report.rows)
    return report


def _run_remainder(cfg):
    rows = mc_remainder_decay(_model(cfg.f), parse_n_list(cfg.n_list), cfg.reps, cfg.p, seed=cfg.seed,
                              threads=cfg.threads, progress=cfg.progress)
    return table_frame(rows, "median_scaled_remainder")


def _run_consistency(cfg):
    rows = consistency_check(_model(cfg.f), parse_n_list(cfg.n_list), cfg.reps, cfg.p, seed=cfg.seed,
                             threads=cfg.threads, progress=cfg.progress)
    return table_frame(rows, "median_abs_error")


def _run_distortion(cfg):
    mu = parse_measure_spec(cfg.measure)
    if cfg.input:
        return distortion_estimate(_load_sample(cfg.input), mu, cfg.level)
    return {"model": cfg.f, "measure": cfg.measure, "value": distortion_risk(_model(cfg.f), mu),
            "total_variation": mu.total_variation}


def _run_rvar(cfg):
    if cfg.input:
        return distortion_estimate(_load_sample(cfg.input), rvar_measure(cfg.p, cfg.q), cfg.level)
    return {"model": cfg.f, "p": cfg.p, "q": cfg.q, "rvar": rvar(_model(cfg.f), cfg.p, cfg.q)}


def _run_lower(cfg):
    return lower_confidence_interval(_load_sample(cfg.input), cfg.p, cfg.level, variance_model=_model(cfg.f))


_DISPATCH = {
    "es": _run_es,
    "gap": _run_gap,
    "surface": _run_surface,
    "mc-coverage": _run_coverage,
    "mc-remainder": _run_remainder,
    "mc-consistency": _run_consistency,
    "distortion": _run_distortion,
    "rvar": _run_rvar,
    "lower": _run_lower,
}


def render(result, fmt):
    if isinstance(result, pd.DataFrame):
        return to_csv(result) if fmt == "csv" else to_json(result.to_dict(orient="records"))
    if fmt == "json":
        return to_json(result)
    frame = record_frame(result) if dataclasses.is_dataclass(result) else pd.DataFrame([result])
    return to_csv(frame)


def run(argv=None, stdout=None):
    """Run one command; returns the process exit code."""
    stdout = stdout or sys.stdout
    try:
        cfg = RunConfig.from_namespace(build_parser().parse_args(argv)).validate()
        result = _DISPATCH[cfg.command](cfg)
        try:
            saved = emit(render(result, cfg.output_format), cfg.out, stdout)
        except OSError as exc:
            raise DataError(f"cannot write {cfg.out}: {exc.strerror}")
        if saved:
            _status(f"Saved {cfg.command} output to {saved}")
        return 0
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 0
    except IntQuantError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
