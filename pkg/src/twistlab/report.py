"""Verification reports: assembly, JSON round trip, determinism hash and text rendering."""

from __future__ import annotations

import hashlib
import json
import math
from collections import Counter
from typing import Iterable

import numpy as np

from . import __version__
from .checks import ANCHORS, STATUSES, CheckResult

SCHEMA_VERSION = 1
TOOL = "twistlab"
FAILING = ("fail", "inconclusive")


class ReportError(ValueError):
    pass


def json_safe(x):
    """Plain JSON types; non-finite floats become strings so the dump stays strict."""
    if isinstance(x, dict):
        return {str(k): json_safe(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [json_safe(v) for v in x]
    if isinstance(x, np.ndarray):
        return json_safe(x.tolist())
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer, int)):
        return int(x)
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else repr(x)
    if isinstance(x, (np.complexfloating, complex)):
        return {"re": json_safe(x.real), "im": json_safe(x.imag)}
    return x


def record_of(r: CheckResult) -> dict:
    return json_safe({
        "id": r.check_id, "case": r.case, "key": r.key, "anchor": r.anchor, "status": r.status,
        "residual": r.residual, "tolerance": r.tolerance, "detail": r.detail, "data": r.data,
    })


def summarize(records: Iterable[dict]) -> dict:
    counts = Counter(rec["status"] for rec in records)
    out = {s: counts.get(s, 0) for s in STATUSES}
    out["total"] = sum(counts.values())
    return out


def _canonical(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


def determinism_hash(report: dict) -> str:
    body = {k: v for k, v in report.items() if k not in ("timing", "determinism_hash")}
    return hashlib.sha256(_canonical(body).encode()).hexdigest()


def build_report(command: str, config: dict, results: Iterable[CheckResult],
                 timing: dict | None = None) -> dict:
    records = sorted((record_of(r) for r in results), key=lambda rec: rec["key"])
    keys = [rec["key"] for rec in records]
    if len(set(keys)) != len(keys):
        raise ReportError("duplicate check keys in report")
    report = {
        "schema_version": SCHEMA_VERSION,
        "tool": TOOL,
        "version": __version__,
        "command": command,
        "seed": config.get("seed"),
        "config": json_safe(config),
        "records": records,
        "summary": summarize(records),
    }
    report["determinism_hash"] = determinism_hash(report)
    report["timing"] = json_safe(timing or {})
    return report


def exit_code(report: dict) -> int:
    return 1 if any(rec["status"] in FAILING for rec in report["records"]) else 0


def dumps(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_json(report: dict, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(report))


def validate_report(report) -> dict:
    if not isinstance(report, dict):
        raise ReportError("report must be a JSON object")
    for key in ("schema_version", "records", "summary"):
        if key not in report:
            raise ReportError(f"report lacks {key!r}")
    if report["schema_version"] != SCHEMA_VERSION:
        raise ReportError(f"unsupported schema version {report['schema_version']!r}")
    if not isinstance(report["records"], list):
        raise ReportError("records must be a list")
    for rec in report["records"]:
        if not isinstance(rec, dict) or rec.get("status") not in STATUSES or "id" not in rec:
            raise ReportError(f"malformed record: {rec!r}")
        if rec["id"] not in ANCHORS:
            raise ReportError(f"unknown check id {rec['id']!r}")
    return report


def load_report(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            report = json.load(fh)
    except OSError as err:
        raise ReportError(f"cannot read {path}: {err}") from err
    except json.JSONDecodeError as err:
        raise ReportError(f"{path} is not valid JSON: {err}") from err
    return validate_report(report)


# ---------------------------------------------------------------------------
# text rendering


def _num(x) -> str:
    if x is None:
        return "-"
    if isinstance(x, str):
        return x
    return f"{x:.3e}"


def _summary_line(summary: dict) -> str:
    total = summary.get("total", 0)
    if total == 0:
        return "0 checks"
    parts = [f"{summary.get(s, 0)} {s}" for s in STATUSES if summary.get(s, 0)]
    failing = sum(summary.get(s, 0) for s in FAILING)
    return f"{total} checks, {failing} failing: " + ", ".join(parts)


def _row(rec: dict) -> str:
    return (f"  {rec['status']:<12} {rec['key']:<52} residual {_num(rec.get('residual')):>10}"
            f"  tol {_num(rec.get('tolerance')):>9}  {rec.get('detail', '')}").rstrip()


def _metric_table(records: list[dict]) -> list[str]:
    rows = [r for r in records if r["id"] == "morphism.metric-transport"]
    if not rows:
        return []
    lines = ["", "Metric transport (source diagonal -> transported diagonal, interpretation):"]
    for rec in rows:
        data = rec.get("data", {})
        if "transported_metric" in data:
            src = np.diag(np.asarray(data["source_metric"], dtype=float))
            dst = np.diag(np.asarray(data["transported_metric"], dtype=float))
            lines.append(f"  {rec['case']:<20} {_diag(src)} -> {_diag(dst)}  "
                         f"{data.get('interpretation', '')}  [{rec['status']}]")
        for label, metric in data.get("metrics", {}).items():
            lines.append(f"  {label:<20} {_diag(np.diag(np.asarray(metric, dtype=float)))}")
    return lines


def _diag(d) -> str:
    return "diag(" + ", ".join(f"{v:+.0f}" for v in d) + ")"


def _slope_table(records: list[dict]) -> list[str]:
    rows = [r for r in records if r["id"] == "lattice.boundedness"]
    if not rows:
        return []
    lines = ["", "Commutator growth (norms by N, fitted log-log slope):"]
    for rec in rows:
        d = rec.get("data", {})
        lines.append(f"  {rec['case']}  N = {d.get('n')}")
        for label in ("untwisted", "twisted"):
            norms = ", ".join(f"{v:.4g}" for v in d.get(f"{label}_norms", []))
            lines.append(f"    {label:<10} [{norms}]  slope {d.get(f'{label}_slope', float('nan')):+.3f}"
                         f"  {d.get(f'{label}_verdict', '')}")
    return lines


def render_text(report: dict) -> str:
    records = report.get("records", [])
    lines = [f"{report.get('tool', TOOL)} {report.get('version', '')} "
             f"{report.get('command', '')} seed={report.get('seed')}".rstrip(),
             _summary_line(report.get("summary", summarize(records)))]
    failing = [r for r in records if r["status"] in FAILING]
    if failing:
        lines += ["", f"FAILURES ({len(failing)}):"]
        lines += [_row(r) for r in sorted(failing, key=lambda r: (r["anchor"], r["key"]))]
    if records:
        lines += ["", "Checks by statement:"]
        current = None
        for rec in sorted(records, key=lambda r: (r["anchor"], r["key"])):
            if rec["anchor"] != current:
                current = rec["anchor"]
                lines.append(f" {current}")
            lines.append(_row(rec))
    lines += _metric_table(records)
    lines += _slope_table(records)
    if "determinism_hash" in report:
        lines += ["", f"determinism hash {report['determinism_hash']}"]
    return "\n".join(lines) + "\n"
