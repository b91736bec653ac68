"""CSV / JSON serialisation of sweep reports, with atomic file writes."""

import csv
import io
import json
import math
import os
import tempfile

from .verify import CHECK_IDS, SweepReport

SCHEMA_VERSION = 1
RESIDUAL_CHECKS = ("eq4", "prop1", "prop2", "eq3", "eq12", "ricci_bound")


def fmt_real(x):
    """17 significant digits; empty for missing or non-finite values."""
    if x is None:
        return ""
    x = float(x)
    if not math.isfinite(x):
        return repr(x)
    return format(x, ".17g")


def csv_columns(n):
    return (
        [f"x{i + 1}" for i in range(n)]
        + ["rho", "Phi", "J", "S", "K_maxabs", "R_maxabs", "ein_a", "ein_res"]
        + [f"res_{c}" for c in RESIDUAL_CHECKS]
        + ["status"]
    )


def to_csv(report: SweepReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(csv_columns(report.n))
    for row in report.rows:
        vals = [fmt_real(v) for v in row.point]
        vals += [fmt_real(getattr(row, k)) for k in ("rho", "Phi", "J", "S", "K_maxabs", "R_maxabs", "ein_a", "ein_res")]
        for cid in RESIDUAL_CHECKS:
            r = row.results.get(cid)
            vals.append("" if r is None or r.skipped else fmt_real(r.residual))
        vals.append(row.status)
        w.writerow(vals)
    return buf.getvalue()


def _num(x):
    if x is None:
        return None
    x = float(x)
    return x if math.isfinite(x) else None


def to_json_obj(report: SweepReport) -> dict:
    rows = []
    for row in report.rows:
        checks = {}
        for cid in CHECK_IDS:
            r = row.results.get(cid)
            if r is None:
                continue
            checks[cid] = {
                "kind": r.kind,
                "lhs": _num(r.lhs),
                "rhs": _num(r.rhs),
                "residual": _num(r.residual),
                "pass": r.passed,
                "skipped": r.skipped,
                "reason": r.reason,
                "counted": r.counted,
            }
        rows.append({
            "point": [_num(v) for v in row.point],
            **{k: _num(getattr(row, k)) for k in ("rho", "Phi", "J", "S", "K_maxabs", "R_maxabs", "ein_a", "ein_res")},
            "checks": checks,
            "status": row.status,
            "error": row.error,
        })
    tol = report.tolerances
    return {
        "schema": SCHEMA_VERSION,
        "potential": report.potential,
        "n": report.n,
        "grid": None if report.grid is None else [list(a) for a in report.grid.axes],
        "checks": list(report.checks),
        "tolerances": {k: getattr(tol, k) for k in ("identity_tol", "inequality_tol", "classify_tol", "phi_floor", "fd_rel_tol")},
        "summary": report.summary(),
        "rows": rows,
    }


def to_json(report: SweepReport) -> str:
    return json.dumps(to_json_obj(report), indent=1, allow_nan=False) + "\n"


def render(report: SweepReport, fmt="csv") -> str:
    if fmt == "csv":
        return to_csv(report)
    if fmt == "json":
        return to_json(report)
    raise ValueError(f"unknown format {fmt!r}")


def write_atomic(path, text):
    """Write via a temporary file in the target directory, then rename."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
