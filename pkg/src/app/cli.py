#!/usr/bin/env python3
"""Command-line front end: fracsub {solve,study,temporal-study,oracle,weights}."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Sequence, Tuple

from pydantic import BaseModel, ConfigDict
from rich.console import Console
from rich.table import Table

from ..domain import cq
from ..domain.config import FemKind, ProblemCase, RunConfig, StudyPlan, TemporalPlan, build_model
from ..domain.errors import FracSubError, InvalidConfigurationError
from ..domain.meshkit import write_mesh
from ..domain.report import ConvergenceReport, ReportRow
from ..infrastructure.log_setup import setup_logging
from ..infrastructure.settings import LOG_LEVELS, Settings, load_settings
from ..services import harness, oracle, report_writer
from ..services.fespace import export_coo, l2_error
from ..services.stepper import solve

logger = logging.getLogger(__name__)

EXIT_OK, EXIT_FAILURE, EXIT_USAGE = 0, 1, 2

Command = Literal["solve", "study", "temporal-study", "oracle", "weights"]


class UsageError(InvalidConfigurationError):
    pass


class CliConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    command: Command
    run: Optional[RunConfig] = None
    plan: Optional[StudyPlan] = None
    temporal: Optional[TemporalPlan] = None
    alpha: Optional[float] = None  # oracle / weights
    x: Optional[float] = None
    n: Optional[int] = None
    out: Optional[str] = None
    format: Literal["csv", "markdown", "json"] = "csv"
    save: bool = False
    dump_mesh: Optional[str] = None
    dump_matrices: Optional[str] = None
    log_level: str = "INFO"


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        raise UsageError(f"{self.prog}: {message}")


def _int_list(text: str) -> Tuple[int, ...]:
    try:
        return tuple(int(p) for p in str(text).split(",") if p.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _float_list(text: str) -> Tuple[float, ...]:
    try:
        return tuple(float(p) for p in str(text).split(",") if p.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _mode(text: str) -> Tuple[int, int]:
    parts = _int_list(text)
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"mode must be 'k,l', got {text!r}")
    return parts


def _common(p: argparse.ArgumentParser, settings: Settings) -> None:
    p.add_argument("--config", help="flat JSON file with flag values; explicit flags win")
    p.add_argument("--log-level", type=str.upper, choices=LOG_LEVELS, default=settings.log_level, help="logging level (default: %(default)s)")


def _output(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", help="report path (default: standard output)")
    p.add_argument("--format", choices=["csv", "markdown", "json"], default="csv", help="report format (default: csv)")
    p.add_argument("--save", action="store_true", help="also write the report under FRACSUB_OUTPUT_DIR")


def _run_flags(p: argparse.ArgumentParser, settings: Settings) -> None:
    p.add_argument("--alpha", type=float, default=0.5, help="fractional order in (0,1] (default: 0.5)")
    p.add_argument("--final-time", type=float, default=0.1, help="final time T (default: 0.1)")
    p.add_argument("--steps", type=int, default=512, help="number of time steps N (default: 512)")
    p.add_argument("--fem", choices=[k.value for k in FemKind], default="p1", help="finite element space (default: p1)")
    p.add_argument("--case", choices=[c.value for c in ProblemCase], default="a", help="problem case (default: a)")
    p.add_argument("--source", default=None, help="source term name (default: sqrt1pu2 for cases a/b, zero otherwise)")
    p.add_argument("--mode", type=_mode, default=(1, 1), help="sine mode k,l for the manufactured case (default: 1,1)")
    p.add_argument("--fp-tol", type=float, default=1e-10, help="fixed-point relative tolerance (default: 1e-10)")
    p.add_argument("--fp-max-iters", type=int, default=50, help="fixed-point iteration cap (default: 50)")
    p.add_argument("--linearized", action="store_true", help="evaluate f at the previous step instead of iterating")
    p.add_argument("--solver", choices=["cg", "direct"], default=settings.linear_solver, help="primal linear solver (default: %(default)s)")
    p.add_argument("--flux-space", choices=["rt0", "none"], default=None, help="flux space; must agree with --fem")


def build_parser(settings: Optional[Settings] = None) -> argparse.ArgumentParser:
    settings = settings or Settings()
    parser = _Parser(prog="fracsub", description="Fractional subdiffusion solver with convergence studies.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("solve", help="run one configuration")
    _run_flags(p, settings)
    p.add_argument("--mesh", type=int, default=8, help="mesh parameter M (default: 8)")
    p.add_argument("--dump-mesh", help="write the mesh in text form to this path")
    p.add_argument("--dump-matrices", help="write assembled matrices as COO text into this directory")
    _output(p)
    _common(p, settings)

    p = sub.add_parser("study", help="spatial convergence study")
    _run_flags(p, settings)
    p.add_argument("--mesh-ladder", type=_int_list, default=(8, 16, 32, 64), help="mesh ladder (default: 8,16,32,64)")
    p.add_argument("--ref-mesh", type=int, default=None, help="reference mesh (default: 2 x max ladder)")
    p.add_argument("--ref-steps", type=int, default=None, help="reference steps (default: 2 x N)")
    p.add_argument("--reference", choices=["refined", "exact"], default="refined", help="reference protocol (default: refined)")
    p.add_argument("--workers", type=int, default=settings.workers, help="concurrent runs (default: %(default)s)")
    _output(p)
    _common(p, settings)

    p = sub.add_parser("temporal-study", help="time-step convergence against the Mittag-Leffler solution")
    p.add_argument("--alpha", type=float, default=0.5, help="fractional order (default: 0.5)")
    p.add_argument("--alphas", type=_float_list, default=None, help="several orders, e.g. 0.3,0.5,0.7 (overrides --alpha)")
    p.add_argument("--final-time", type=float, default=1.0, help="final time (default: 1.0)")
    p.add_argument("--steps-ladder", type=_int_list, default=(64, 128, 256, 512), help="step ladder (default: 64,128,256,512)")
    p.add_argument("--lam", type=float, default=1.0, help="decay rate lambda (default: 1.0)")
    p.add_argument("--mode", type=_mode, default=None, help="use lambda = pi^2 (k^2 + l^2) for mode k,l")
    _output(p)
    _common(p, settings)

    p = sub.add_parser("oracle", help="reference values")
    p.add_argument("what", choices=["ml"], help="ml: E_alpha(-x)")
    p.add_argument("--alpha", type=float, default=None, help="fractional order in (0,1]")
    p.add_argument("--x", type=float, default=None, help="evaluate at -x, x >= 0")
    _common(p, settings)

    p = sub.add_parser("weights", help="print CQ weights as j,b_j,s_j")
    p.add_argument("--alpha", type=float, default=None, help="fractional order in (0,1]")
    p.add_argument("--n", type=int, default=None, help="last weight index")
    _common(p, settings)
    return parser


def _load_config_file(path: str) -> Dict[str, Any]:
    try:
        data = json.loads(Path(path).read_text())
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc.strerror or exc}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"config file {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise UsageError(f"config file {path} must hold a flat JSON object")
    return {str(k).replace("-", "_"): v for k, v in data.items()}


def _coerce(action: argparse.Action, value: Any) -> Any:
    if value is None or action.type is None:
        return value
    if isinstance(value, (list, tuple)):
        value = ",".join(str(v) for v in value)
    try:
        return action.type(str(value) if action.type in (_int_list, _float_list, _mode) else value)
    except (argparse.ArgumentTypeError, ValueError, TypeError) as exc:
        raise UsageError(f"config value for {action.dest!r}: {exc}") from None


def _config_path(argv: Sequence[str]) -> Optional[str]:
    for i, arg in enumerate(argv):
        if arg == "--config":
            if i + 1 >= len(argv):
                raise UsageError("--config expects a path")
            return argv[i + 1]
        if arg.startswith("--config="):
            return arg.split("=", 1)[1]
    return None


def _apply_config_file(parser: argparse.ArgumentParser, argv: Sequence[str]) -> None:
    """Install values from --config as subcommand defaults."""
    path = _config_path(argv)
    if path is None:
        return
    subparsers = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    command = next((a for a in argv if a in subparsers.choices), None)
    if command is None:
        return
    values = _load_config_file(path)
    sub = subparsers.choices[command]
    actions = {a.dest: a for a in sub._actions if a.dest not in ("help", "config")}
    unknown = sorted(set(values) - set(actions))
    if unknown:
        raise UsageError(f"unknown keys in config file: {', '.join(unknown)}")
    sub.set_defaults(**{k: _coerce(actions[k], v) for k, v in values.items()})


def _run_config(ns: argparse.Namespace, mesh: int) -> RunConfig:
    if ns.flux_space is not None:
        wants_flux = ns.fem == FemKind.RT0P0.value
        if wants_flux != (ns.flux_space == "rt0"):
            raise UsageError(
                f"--fem {ns.fem} conflicts with --flux-space {ns.flux_space}: "
                f"use --flux-space {'rt0' if wants_flux else 'none'} or drop the flag"
            )
    return build_model(
        RunConfig,
        {
            "alpha": ns.alpha,
            "final_time": ns.final_time,
            "steps": ns.steps,
            "mesh": mesh,
            "fem": ns.fem,
            "case": ns.case,
            "source": ns.source,
            "mode": tuple(ns.mode),
            "fp_tol": ns.fp_tol,
            "fp_max_iters": ns.fp_max_iters,
            "linearized": ns.linearized,
            "linear_solver": ns.solver,
        },
    )


def parse(argv: Sequence[str], settings: Optional[Settings] = None) -> CliConfig:
    """argv (without the program name) to a validated CliConfig; raises UsageError."""
    argv = list(argv)
    parser = build_parser(settings)
    _apply_config_file(parser, argv)
    ns = parser.parse_args(argv)
    common = {"command": ns.command, "log_level": ns.log_level.upper()}
    try:
        if ns.command == "solve":
            return CliConfig(
                **common,
                run=_run_config(ns, ns.mesh),
                out=ns.out,
                format=ns.format,
                save=ns.save,
                dump_mesh=ns.dump_mesh,
                dump_matrices=ns.dump_matrices,
            )
        if ns.command == "study":
            base = _run_config(ns, 8)
            plan = build_model(
                StudyPlan,
                {
                    "base": base,
                    "ladder": tuple(ns.mesh_ladder),
                    "ref_mesh": ns.ref_mesh,
                    "ref_steps": ns.ref_steps,
                    "reference": ns.reference,
                    "workers": ns.workers,
                },
            )
            return CliConfig(**common, plan=plan, out=ns.out, format=ns.format, save=ns.save)
        if ns.command == "temporal-study":
            temporal = build_model(
                TemporalPlan,
                {
                    "alphas": tuple(ns.alphas) if ns.alphas else (ns.alpha,),
                    "ladder": tuple(ns.steps_ladder),
                    "lam": None if ns.mode else ns.lam,
                    "mode": ns.mode,
                    "final_time": ns.final_time,
                },
            )
            return CliConfig(**common, temporal=temporal, out=ns.out, format=ns.format, save=ns.save)
        if ns.alpha is None:
            raise UsageError(f"{ns.command} requires --alpha")
        cq.validate_order(ns.alpha)
        if ns.command == "oracle":
            if ns.x is None or not ns.x >= 0.0:
                raise UsageError("oracle ml requires --x >= 0 (it evaluates E_alpha(-x))")
            return CliConfig(**common, alpha=ns.alpha, x=ns.x)
        if ns.n is None or ns.n < 0:
            raise UsageError("weights requires --n >= 0")
        return CliConfig(**common, alpha=ns.alpha, n=ns.n)
    except InvalidConfigurationError as exc:
        raise UsageError(str(exc)) from exc


def _ints(values: Sequence[int]) -> str:
    return ",".join(str(v) for v in values)


def _render_run(run: RunConfig) -> List[str]:
    argv = [
        "--alpha", repr(run.alpha),
        "--final-time", repr(run.final_time),
        "--steps", str(run.steps),
        "--fem", run.fem.value,
        "--case", run.case.value,
        "--mode", _ints(run.mode),
        "--fp-tol", repr(run.fp_tol),
        "--fp-max-iters", str(run.fp_max_iters),
        "--solver", run.linear_solver,
    ]
    if run.source is not None:
        argv += ["--source", run.source]
    if run.linearized:
        argv.append("--linearized")
    return argv


def _render_output(config: CliConfig) -> List[str]:
    argv = ["--format", config.format]
    if config.out is not None:
        argv += ["--out", config.out]
    if config.save:
        argv.append("--save")
    return argv


def render(config: CliConfig) -> List[str]:
    """Canonical argv for a config; parse(render(c)) == c."""
    argv: List[str] = [config.command]
    if config.command == "solve":
        argv += _render_run(config.run) + ["--mesh", str(config.run.mesh)]
        if config.dump_mesh is not None:
            argv += ["--dump-mesh", config.dump_mesh]
        if config.dump_matrices is not None:
            argv += ["--dump-matrices", config.dump_matrices]
        argv += _render_output(config)
    elif config.command == "study":
        plan = config.plan
        argv += _render_run(plan.base) + ["--mesh-ladder", _ints(plan.ladder), "--reference", plan.reference]
        if plan.ref_mesh is not None:
            argv += ["--ref-mesh", str(plan.ref_mesh)]
        if plan.ref_steps is not None:
            argv += ["--ref-steps", str(plan.ref_steps)]
        argv += ["--workers", str(plan.workers)] + _render_output(config)
    elif config.command == "temporal-study":
        t = config.temporal
        argv += [
            "--alphas", ",".join(repr(a) for a in t.alphas),
            "--final-time", repr(t.final_time),
            "--steps-ladder", _ints(t.ladder),
        ]
        argv += ["--mode", _ints(t.mode)] if t.mode is not None else ["--lam", repr(t.lam)]
        argv += _render_output(config)
    elif config.command == "oracle":
        argv += ["ml", "--alpha", repr(config.alpha), "--x", repr(config.x)]
    else:
        argv += ["--alpha", repr(config.alpha), "--n", str(config.n)]
    return argv + ["--log-level", config.log_level]


# ---------------------------------------------------------------------------
# dispatch


def _show(report: ConvergenceReport) -> None:
    table = Table(title=f"{report.study} study")
    key = "M" if report.study == "spatial" else "N"
    for col in (key, "alpha", "err u", "rate", "err flux", "rate", "fp", "wall [s]", "status"):
        table.add_column(col, justify="right" if col != "status" else "left")
    for r in report.rows:
        table.add_row(
            str(r.M if key == "M" else r.N),
            f"{r.alpha:g}",
            "" if r.err_u_l2 is None else f"{r.err_u_l2:.3e}",
            "" if r.rate_u is None else f"{r.rate_u:.2f}",
            "" if r.err_flux_l2 is None else f"{r.err_flux_l2:.3e}",
            "" if r.rate_flux is None else f"{r.rate_flux:.2f}",
            "" if r.fp_iters_max is None else str(r.fp_iters_max),
            "" if r.wall_s is None else f"{r.wall_s:.2f}",
            "failed" if r.failed else "ok",
        )
    Console(stderr=True).print(table)


_SUFFIX = {"csv": ".csv", "markdown": ".md", "json": ".json"}


def _deliver(config: CliConfig, report: ConvergenceReport, settings: Settings, stem: str, plan: Optional[StudyPlan] = None, runs=()) -> None:
    _show(report)
    targets = []
    if config.out:
        targets.append(Path(config.out))
    if config.save:
        targets.append(settings.output_dir / f"{stem}{_SUFFIX[config.format]}")
    if not config.out:
        sys.stdout.write(report_writer.render(report, config.format))
    for target in targets:
        report_writer.emit(report, config.format, target)
        report_writer.write_manifest(report_writer.manifest_path(target), report, plan=plan, runs=runs)


def _solve(config: CliConfig, settings: Settings) -> int:
    run = config.run
    result = solve(run)
    row = ReportRow(
        fem=run.fem.value,
        case=run.case.value,
        alpha=run.alpha,
        M=run.mesh,
        N=run.steps,
        fp_iters_max=result.fp_iters_max,
        wall_s=result.wall_s,
    )
    if run.case is ProblemCase.MANUFACTURED:
        u_exact, _ = harness.exact_reference(run)
        err = l2_error(result.solution, u_exact)
        row.err_u_l2, row.err_u_linf = err.l2, err.linf
    if config.dump_mesh:
        write_mesh(result.system.mesh, config.dump_mesh)
    if config.dump_matrices:
        folder = Path(config.dump_matrices)
        folder.mkdir(parents=True, exist_ok=True)
        system = result.system
        for name in ("mass", "stiffness", "flux_mass", "div_block"):
            matrix = getattr(system, name)
            if matrix is not None:
                export_coo(matrix, folder / f"{name}.coo")
    report = ConvergenceReport(study="spatial", metadata={"command": "solve", **run.model_dump(mode="json")}, rows=[row])
    _deliver(config, report, settings, f"solve_{run.fem.value}_{run.case.value}_M{run.mesh}", runs=[run])
    return EXIT_OK


def _study(config: CliConfig, settings: Settings) -> int:
    plan = config.plan
    report = harness.run_study(plan)
    _deliver(config, report, settings, f"study_{plan.base.fem.value}_{plan.base.case.value}", plan=plan)
    return EXIT_OK if report.complete else EXIT_FAILURE


def _temporal(config: CliConfig, settings: Settings) -> int:
    report = harness.run_temporal_plan(config.temporal)
    _deliver(config, report, settings, "temporal_study")
    return EXIT_OK if report.complete else EXIT_FAILURE


def _oracle(config: CliConfig, settings: Settings) -> int:
    ev = oracle.ml_eval(config.alpha, config.x)
    logger.info("E_%g(-%g) via %s", ev.alpha, ev.x, ev.method)
    print(f"{ev.value:.8g}")
    return EXIT_OK


def _weights(config: CliConfig, settings: Settings) -> int:
    for j, b, s in cq.inspect_rows(config.alpha, config.n):
        print(f"{j},{b!r},{s!r}")
    return EXIT_OK


_HANDLERS = {
    "solve": _solve,
    "study": _study,
    "temporal-study": _temporal,
    "oracle": _oracle,
    "weights": _weights,
}


def dispatch(config: CliConfig, settings: Optional[Settings] = None) -> int:
    settings = settings or Settings()
    try:
        return _HANDLERS[config.command](config, settings)
    except FracSubError as exc:
        logger.error("%s: %s", type(exc).__name__, exc)
        return EXIT_FAILURE


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        settings = load_settings()
        config = parse(argv, settings)
    except InvalidConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    setup_logging(config.log_level)
    return dispatch(config, settings)


if __name__ == "__main__":
    sys.exit(main())
