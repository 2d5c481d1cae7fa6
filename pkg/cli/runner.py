# Import libraries
import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from pydantic import BaseModel, ValidationError
from termcolor import colored

from cli.export import columns, export_plot_data
from common.config import get_settings, override_settings
from common.errors import LandscapeError, NoCriticalPoints
from common.types import (
    CalibrationSummary,
    ChainReport,
    CriticalKind,
    DriftRow,
    ExchangeReport,
    GridFunction,
    InputError,
    Landscape,
    LdpReport,
    PeierlsCurves,
    PiecewiseCurve,
    PipelineReport,
    RunConfig,
    Scheme,
    SchemeConfig,
    Segment,
    SegmentKind,
    VerificationFailure,
    VerifyReport,
)
from services.curves import sample_curve
from services.landscape import lifted_peierls_curves
from services.landscape_service import EnergyLandscapeService
from services.potential import evaluate, random_potential_spec

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_VERIFICATION = 2

DEFAULT_EPS = "0.05,0.01,0.005"

# JSON documents the CLI emits, keyed by schema file stem.
REPORT_MODELS: dict[str, type[BaseModel]] = {
    "landscape": Landscape,
    "peierls_curves": PeierlsCurves,
    "viscosity_report": VerifyReport,
    "calibration": CalibrationSummary,
    "ldp": LdpReport,
    "chain": ChainReport,
    "exchange": ExchangeReport,
    "report": PipelineReport,
    "run_config": RunConfig,
}


class ArgumentError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        raise ArgumentError(message)


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as e:
        raise ArgumentError(f"expected comma-separated numbers, got '{text}'") from e


def _label(c: int) -> str:
    return f"x_{2 * (c // 2) + 1}/2" if c % 2 == 0 else f"x_{c // 2 + 1}"


class Context:
    """Parsed arguments, run configuration and the service for its potential."""

    def __init__(self, args: argparse.Namespace, config: RunConfig):
        self.args = args
        self.config = config
        self.out = Path(args.out or config.out_dir)
        self.service = EnergyLandscapeService(config.potential)
        self.p = self.service.potential

    def param(self, name: str, default):
        value = getattr(self.args, name, None)
        if value is not None:
            return value
        return self.config.params.get(name, default)

    @property
    def samples(self) -> int:
        return int(self.param("samples", self.config.samples))

    def write(self, tables: dict | None = None, documents: dict | None = None) -> None:
        for path in export_plot_data(self.out, tables, documents):
            print(colored(f"Wrote {path}", "green"))


def load_config(args: argparse.Namespace) -> RunConfig:
    """
    Build the run configuration from --config, or from --random/--seed.

    A config file may hold a full run configuration or just a potential
    description.
    """
    if args.random:
        rng = np.random.default_rng(args.seed)
        spec = random_potential_spec(rng, args.random, kind=args.random_kind, tilt=None if args.random_tilt else 0.0)
        if args.random_kind == "extrema":
            spec = spec.model_copy(update={"interpolate": True})
        return RunConfig(potential=spec, seed=args.seed or 0)
    if not args.config:
        raise ArgumentError("either --config or --random is required")
    data = json.loads(Path(args.config).read_text(encoding="utf-8"))
    if "potential" not in data:
        data = {"potential": data}
    if args.seed is not None:
        data["seed"] = args.seed
    return RunConfig.model_validate(data)


# Stages

def cmd_critical(ctx: Context) -> int:
    try:
        cps = ctx.service.critical_points()
    except NoCriticalPoints as e:
        print(colored(str(e), "yellow"))
        ctx.write({"critical_points.csv": (["kind", "index", "position", "value"], [])})
        return EXIT_OK
    rows = [[pt.kind.value, c // 2 + 1, pt.position, pt.value] for c, pt in enumerate(cps.points())]
    ctx.write({"critical_points.csv": (["kind", "index", "position", "value"], rows)})
    return EXIT_OK


def _barrier_outputs(ctx: Context) -> tuple[dict, dict]:
    bt = ctx.service.barrier_table()
    k = len(bt.peierls)
    rows = [
        [i + 1, j + 1, bt.hR_tilde[i][j], bt.hL_tilde[i][j], bt.peierls[i][j]] for i in range(k) for j in range(k)
    ]
    tables = {"barrier_table.csv": (["i", "j", "hR_tilde", "hL_tilde", "h"], rows)}
    tables["critical_peierls.csv"] = (
        ["a", "b", "h"],
        [[a + 1, b + 1, v] for a, row in enumerate(bt.critical) for b, v in enumerate(row)],
    )

    barriers = ctx.service.minima_barriers()
    n = ctx.samples
    for i, barrier in enumerate(barriers):
        xs = barrier.anchor + np.arange(n) / n
        tables[f"peierls_x_{i + 1}.csv"] = columns(["x", "value"], xs, sample_curve(barrier.curve, ctx.p, xs))
    return tables, {"peierls_curves.json": PeierlsCurves(barriers=barriers)}


def cmd_barriers(ctx: Context) -> int:
    tables, documents = _barrier_outputs(ctx)
    ctx.write(tables, documents)
    return EXIT_OK


def _boundary(ctx: Context) -> tuple[str, list[float] | None]:
    choice = ctx.param("boundary", "fw")
    if choice.startswith("file="):
        values = json.loads(Path(choice[len("file="):]).read_text(encoding="utf-8"))
        if isinstance(values, dict):
            values = values["minima_values"]
        return "file", [float(v) for v in values]
    return choice, None


def _landscape_outputs(ctx: Context, land: Landscape) -> tuple[dict, dict]:
    n = ctx.samples
    xs = np.arange(n) / n
    u = evaluate(ctx.p, xs)
    w = sample_curve(land.W, ctx.p, xs)
    wstar = sample_curve(land.Wstar, ctx.p, xs)
    tables = {"landscape.csv": columns(["x", "U", "W", "Wstar"], xs, u, w, wstar)}

    cps = ctx.service.critical_points()
    lifted = lifted_peierls_curves(ctx.p, cps, land, ctx.service.minima_barriers())
    header = ["x", "W"] + [
        f"lifted_{_label(2 * c.anchor_index + (1 if c.anchor_kind == CriticalKind.MINIMUM else 0))}" for c in lifted
    ]
    tables["lifted_peierls.csv"] = columns(header, xs, w, *[sample_curve(c.curve, ctx.p, xs) for c in lifted])
    return tables, {"landscape.json": land}


def _flat_outputs(ctx: Context) -> tuple[dict, dict]:
    """W = W* ≡ 0 for a strictly monotone U."""
    n = ctx.samples
    xs = np.arange(n) / n
    zero = np.zeros(n)
    flat = PiecewiseCurve(
        segments=[Segment(start=0.0, end=1.0, kind=SegmentKind.CONSTANT, level=0.0)], period_anchor=0.0, label="W"
    )
    land = Landscape(W=flat, Wstar=flat.model_copy(update={"label": "Wstar"}))
    tables = {"landscape.csv": columns(["x", "U", "W", "Wstar"], xs, evaluate(ctx.p, xs), zero, zero)}
    return tables, {"landscape.json": land}


def cmd_landscape(ctx: Context) -> int:
    mode, values = _boundary(ctx)
    try:
        land = ctx.service.landscape(mode, values)
    except NoCriticalPoints as e:
        print(colored(str(e), "yellow"))
        ctx.write(*_flat_outputs(ctx))
        return EXIT_OK
    tables, documents = _landscape_outputs(ctx, land)
    ctx.write(tables, documents)
    print(colored(f"Boundary values ({land.boundary.provenance.value}): {land.boundary.minima_values}", "yellow"))
    return EXIT_OK


def _verify_report(ctx: Context) -> VerifyReport:
    kind = ctx.param("curve", "wstar")
    if kind == "mane":
        anchor = ctx.param("anchor", None)
        if anchor is None:
            raise ArgumentError("--curve mane needs --anchor")
        curve = ctx.service.mane(float(anchor))
        name = f"mane:{float(anchor):.17g}"
    elif kind == "wstar":
        curve = ctx.service.landscape().Wstar
        name = "wstar"
    else:
        raise ArgumentError(f"unknown curve '{kind}'")
    visc, entropy = ctx.service.verify(curve)
    return VerifyReport(curve=name, viscosity=visc, entropy=entropy, passed=visc.passed and entropy.admissible)


def cmd_verify(ctx: Context) -> int:
    report = _verify_report(ctx)
    ctx.write(documents={"viscosity_report.json": report})
    if not report.passed:
        payload = VerificationFailure(data={"failures": report.viscosity.failures})
        print(colored(payload.model_dump_json(), "red"), file=sys.stderr)
        return EXIT_VERIFICATION
    return EXIT_OK


def _calibration_points(ctx: Context) -> list[float]:
    at = ctx.param("at", None)
    if at:
        return _floats(at) if isinstance(at, str) else [float(v) for v in at]
    count = 10
    return [(j + 0.37) / count for j in range(count)]


def _calibration(ctx: Context) -> tuple[dict, CalibrationSummary]:
    results = ctx.service.calibrate(_calibration_points(ctx))
    rows = []
    for traj_id, (trajectory, _) in enumerate(results, start=1):
        rows.extend([traj_id, t, g] for t, g in zip(trajectory.times, trajectory.positions))
    reports = [report for _, report in results]
    summary = CalibrationSummary(reports=reports, passed=all(r.passed for r in reports))
    return {"trajectories.csv": (["traj_id", "t", "gamma"], rows)}, summary


def cmd_calibrate(ctx: Context) -> int:
    tables, summary = _calibration(ctx)
    ctx.write(tables, {"calibration.json": summary})
    return EXIT_OK if summary.passed else EXIT_VERIFICATION


def _ldp(ctx: Context) -> tuple[dict, LdpReport]:
    eps_list = _floats(ctx.param("eps", DEFAULT_EPS))
    n = int(ctx.param("grid", 4096))
    xs = np.arange(n) / n
    u = evaluate(ctx.p, xs)
    wstar = sample_curve(ctx.service.landscape().Wstar, ctx.p, xs)
    tables = {}
    for eps in eps_list:
        w_eps = ctx.service.wkb(eps, n).values
        tables[f"wkb_eps_{eps:g}.csv"] = columns(["x", "W_eps", "U", "Wstar"], xs, w_eps, u, wstar)
    report = ctx.service.ldp(eps_list, n)
    tables["ldp_table.csv"] = (["eps", "sup_error"], [[row.eps, row.sup_error] for row in report.rows])
    return tables, report


def cmd_ldp(ctx: Context) -> int:
    tables, report = _ldp(ctx)
    ctx.write(tables, {"ldp.json": report})
    print(colored(f"Final sup error {report.final_error:.4e} (decreasing: {report.decreasing})", "yellow"))
    return EXIT_OK if report.decreasing else EXIT_VERIFICATION


def cmd_chain(ctx: Context) -> int:
    eps = float(_floats(str(ctx.param("eps", "0.05")))[0])
    model, stationary = ctx.service.chain(eps)
    ctx.write(documents={"chain.json": ChainReport(model=model, stationary=stationary)})
    return EXIT_OK if stationary.agreement <= 1e-10 else EXIT_VERIFICATION


def _initial_data(ctx: Context, n: int) -> GridFunction:
    init = ctx.param("init", "wstar")
    if init == "wstar":
        return ctx.service.sampled_wstar(n)
    if init.startswith("file="):
        text = Path(init[len("file="):]).read_text(encoding="utf-8")
        lines = [line.split(",") for line in text.strip().splitlines()[1:]]
        return GridFunction(values=[float(parts[-1]) for parts in lines])
    raise ArgumentError(f"unknown initial data '{init}'")


def cmd_evolve(ctx: Context) -> int:
    n = int(ctx.param("grid", 1000))
    T = float(ctx.param("T", 1.0))
    count = int(ctx.param("snapshots", 4))
    u0 = _initial_data(ctx, n)
    cfg = SchemeConfig(
        n=u0.n,
        cfl=float(ctx.param("cfl", 0.45)),
        T=T,
        scheme=Scheme(ctx.param("scheme", Scheme.LAX_FRIEDRICHS.value)),
    )
    times = [T * j / count for j in range(1, count + 1)]
    snapshots = ctx.service.evolve(cfg, times, u0)

    xs = u0.grid
    tables = {f"evolve_t{s.time:g}.csv": columns(["x", "u"], xs, s.values) for s in snapshots}
    drift = [DriftRow(t=0.0, sup_drift=0.0)] + [
        DriftRow(t=s.time, sup_drift=float(np.max(np.abs(s.values - u0.values)))) for s in snapshots
    ]
    tables["drift.csv"] = (["t", "sup_drift"], [[row.t, row.sup_drift] for row in drift])
    documents = {}
    eps = ctx.param("eps", None)
    if eps is not None:
        documents["exchange.json"] = ctx.service.exchange(_floats(str(eps)), T, n, cfg.cfl)
    ctx.write(tables, documents)
    print(colored(f"Sup drift at T={T:g}: {drift[-1].sup_drift:.4e}", "yellow"))
    return EXIT_OK


def cmd_all(ctx: Context) -> int:
    """Run every stage the potential supports and summarize it in report.json."""
    try:
        ctx.service.critical_points()
    except NoCriticalPoints as e:
        print(colored(str(e), "yellow"))
        tables, documents = _flat_outputs(ctx)
        documents["report.json"] = PipelineReport(potential=ctx.p.name, k=0, tilt=ctx.p.tilt)
        ctx.write(tables, documents)
        return EXIT_OK
    cmd_critical(ctx)
    cmd_barriers(ctx)
    land = ctx.service.landscape("fw")
    tables, documents = _landscape_outputs(ctx, land)
    verdicts: dict[str, bool] = {}
    report = PipelineReport(
        potential=ctx.p.name,
        k=ctx.service.critical_points().k,
        tilt=ctx.p.tilt,
        boundary=land.boundary,
        kinks=land.kinks,
    )

    if ctx.p.has_derivatives:
        verify = _verify_report(ctx)
        documents["viscosity_report.json"] = verify
        verdicts["viscosity"] = verify.viscosity.passed
        verdicts["entropy"] = verify.entropy.admissible
        calibration_tables, summary = _calibration(ctx)
        tables.update(calibration_tables)
        documents["calibration.json"] = summary
        verdicts["calibration"] = summary.passed
    else:
        logger.info("Potential has no derivatives; viscosity and calibration stages skipped")

    ldp_tables, ldp = _ldp(ctx)
    tables.update(ldp_tables)
    documents["ldp.json"] = ldp
    verdicts["ldp_decreasing"] = ldp.decreasing

    if report.k >= 2:
        model, stationary = ctx.service.chain(float(_floats(str(ctx.param("chain_eps", "0.05")))[0]))
        documents["chain.json"] = ChainReport(model=model, stationary=stationary)
        verdicts["chain_agreement"] = stationary.agreement <= 1e-10

    report.verdicts = verdicts
    if not all(verdicts.values()):
        failed = sorted(name for name, ok in verdicts.items() if not ok)
        report.errors = [VerificationFailure(data={"failed": failed})]
        report.status = "verification-failed"
    documents["report.json"] = report
    ctx.write(tables, documents)
    return EXIT_OK if report.status == "ok" else EXIT_VERIFICATION


def write_schemas(out_dir: str | Path) -> list[Path]:
    """Regenerate the JSON schema of every emitted report."""
    documents = {f"{stem}.schema.json": model.model_json_schema() for stem, model in REPORT_MODELS.items()}
    return export_plot_data(out_dir, documents=documents)


COMMANDS: dict[str, Callable[[Context], int]] = {
    "critical": cmd_critical,
    "barriers": cmd_barriers,
    "landscape": cmd_landscape,
    "verify": cmd_verify,
    "calibrate": cmd_calibrate,
    "ldp": cmd_ldp,
    "chain": cmd_chain,
    "evolve": cmd_evolve,
    "all": cmd_all,
}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="energy-landscape", description="Energy landscapes of tilted periodic potentials.")
    parser.add_argument("--log-level", default=None, help="Logging level (default from LANDSCAPE_LOG_LEVEL)")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def stage(name: str, help_text: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="Run configuration or potential description (JSON)")
        p.add_argument("--out", help="Output directory (overrides the config)")
        p.add_argument("--random", type=int, metavar="K", help="Use a random potential with K wells")
        p.add_argument("--random-kind", choices=["trig", "extrema"], default="trig")
        p.add_argument("--random-tilt", action="store_true", help="Draw a random tilt as well")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--samples", type=int, default=None, help="Samples per period in CSV output")
        return p

    stage("critical", "Critical points")
    stage("barriers", "Barrier tables")
    p = stage("landscape", "Boundary data and the glued landscape")
    p.add_argument("--boundary", default=None, help="fw | zero | file=<path>")
    p = stage("verify", "Viscosity and entropy checks")
    p.add_argument("--curve", default=None, help="wstar | mane")
    p.add_argument("--anchor", type=float, default=None)
    p = stage("calibrate", "Calibrated curves")
    p.add_argument("--at", default=None, help="Comma-separated starting points")
    p = stage("ldp", "WKB sweep and large-deviation errors")
    p.add_argument("--eps", default=None)
    p.add_argument("--grid", type=int, default=None)
    p = stage("chain", "Coarse-grained Markov chain")
    p.add_argument("--eps", default=None)
    p = stage("evolve", "HJE evolution and exchange-of-limits experiment")
    p.add_argument("--init", default=None, help="wstar | file=<csv>")
    p.add_argument("--T", type=float, default=None)
    p.add_argument("--eps", default=None)
    p.add_argument("--grid", type=int, default=None)
    p.add_argument("--cfl", type=float, default=None)
    p.add_argument("--scheme", choices=[s.value for s in Scheme], default=None)
    p.add_argument("--snapshots", type=int, default=None)
    p = stage("all", "Full pipeline with report.json")
    p.add_argument("--eps", default=None)
    p.add_argument("--grid", type=int, default=None)
    p.add_argument("--at", default=None)

    schemas = sub.add_parser("schemas", help="Write JSON schemas of all reports")
    schemas.add_argument("--out", default="schemas")
    return parser


def _input_error(message: str, data=None) -> int:
    payload = InputError(message=message, data=data)
    print(colored(payload.model_dump_json(), "red"), file=sys.stderr)
    return EXIT_INPUT


def run(argv: Sequence[str] | None = None) -> int:
    """
    Entry point for every subcommand.

    Returns:
        int: 0 on success, 1 on input errors, 2 when a verification report fails.
    """
    try:
        args = build_parser().parse_args(argv)
    except ArgumentError as e:
        return _input_error(str(e))

    level = args.log_level or get_settings().log_level
    logging.basicConfig(level=getattr(logging, str(level).upper(), logging.INFO))

    if args.command == "schemas":
        for path in write_schemas(args.out):
            print(colored(f"Wrote {path}", "green"))
        return EXIT_OK

    try:
        config = load_config(args)
        override_settings(config.tolerances)
        ctx = Context(args, config)
        print(colored(f"Running '{args.command}' on {ctx.p.name or 'unnamed potential'}", "yellow"))
        return COMMANDS[args.command](ctx)
    except ValidationError as e:
        return _input_error("Invalid configuration", json.loads(e.json(include_url=False)))
    except (LandscapeError, ArgumentError, ValueError, KeyError, OSError) as e:
        logger.debug("Input error", exc_info=True)
        return _input_error(str(e))
    finally:
        override_settings(None)


def main() -> None:
    sys.exit(run(sys.argv[1:]))
