#!/usr/bin/env python3
from __future__ import annotations

import csv
import io
import json
import logging
from pathlib import Path
from typing import Iterable, Literal, Optional, Union

from ..domain.config import RunConfig, StudyPlan
from ..domain.errors import InvalidConfigurationError, ReportWriteError
from ..domain.report import CSV_COLUMNS, ConvergenceReport

logger = logging.getLogger(__name__)

ReportFormat = Literal["csv", "markdown", "json"]


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(float(value))
    return str(value)


def render_csv(report: ConvergenceReport) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in report.rows:
        data = row.model_dump()
        writer.writerow([_cell(data[c]) for c in CSV_COLUMNS])
    return buf.getvalue()


def _sci(value: Optional[float]) -> str:
    return "" if value is None else f"{value:.2e}"


def _fixed(value: Optional[float]) -> str:
    return "" if value is None else f"{value:.2f}"


def render_markdown(report: ConvergenceReport) -> str:
    """Error/rate table, one line per resolution."""
    meta = report.metadata
    mixed = any(r.err_flux_l2 is not None for r in report.rows)
    key = "M" if report.study == "spatial" else "N"
    header = [key, "error (u)", "rate"]
    if mixed:
        header += ["error (sigma)", "rate"]
    header += ["fp iters", "wall [s]", "status"]
    title = ", ".join(f"{k}={meta[k]}" for k in ("fem", "case", "alpha", "final_time") if k in meta)
    lines = [f"### {report.study} study ({title})" if title else f"### {report.study} study", ""]
    lines.append("| " + " | ".join(header) + " |")
    lines.append("|" + "---|" * len(header))
    for row in report.rows:
        cells = [str(row.M if key == "M" else row.N), _sci(row.err_u_l2), _fixed(row.rate_u)]
        if mixed:
            cells += [_sci(row.err_flux_l2), _fixed(row.rate_flux)]
        status = f"failed: {row.message}" if row.failed else "ok"
        if report.study == "temporal":
            status = f"alpha={row.alpha:g} {status}"
        cells += [_cell(row.fp_iters_max), _fixed(row.wall_s), status]
        lines.append("| " + " | ".join(cells) + " |")
    return "\n".join(lines) + "\n"


def render_json(report: ConvergenceReport) -> str:
    return report.model_dump_json(indent=2)


def parse_json(text: str) -> ConvergenceReport:
    return ConvergenceReport.model_validate_json(text)


_RENDERERS = {"csv": render_csv, "markdown": render_markdown, "json": render_json}


def render(report: ConvergenceReport, fmt: ReportFormat) -> str:
    try:
        return _RENDERERS[fmt](report)
    except KeyError:
        raise InvalidConfigurationError(f"unknown report format {fmt!r}; choose from {sorted(_RENDERERS)}") from None


def _write(path: Union[str, Path], text: str) -> Path:
    target = Path(path)
    try:
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(text)
    except OSError as exc:
        raise ReportWriteError(f"cannot write {target}: {exc.strerror or exc}") from exc
    logger.info("wrote %s", target)
    return target


def emit(report: ConvergenceReport, fmt: ReportFormat, path: Union[str, Path]) -> Path:
    return _write(path, render(report, fmt))


def manifest_path(report_path: Union[str, Path]) -> Path:
    p = Path(report_path)
    return p.with_name(p.stem + ".manifest.json")


def write_manifest(
    path: Union[str, Path],
    report: ConvergenceReport,
    plan: Optional[StudyPlan] = None,
    runs: Iterable[RunConfig] = (),
) -> Path:
    """Every run's full configuration next to the report it produced."""
    configs = list(runs)
    if plan is not None:
        configs = [plan.run_config(M) for M in plan.ladder]
        if plan.reference == "refined" and plan.ladder:
            configs.append(plan.reference_config())
    payload = {
        "study": report.study,
        "metadata": report.metadata,
        "plan": None if plan is None else plan.model_dump(mode="json"),
        "runs": [c.model_dump(mode="json") for c in configs],
        "complete": report.complete,
    }
    return _write(path, json.dumps(payload, indent=2, sort_keys=True))
