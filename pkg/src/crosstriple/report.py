"""Deterministic JSON reports and CSV tables.

Floats are written with 12 significant digits so reruns on the same machine
give identical bytes.  The ``created`` timestamp lives in the metadata but
is left out of ``content_hash``; set ``SOURCE_DATE_EPOCH`` to pin it too.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
import platform
from datetime import datetime, timezone
from importlib import metadata as importlib_metadata
from pathlib import Path

import numpy as np
import scipy

from .config import RNG_NAME, SCHEMA_VERSION, ExperimentConfig, dump_matrix
from .suites import Row, SuiteResult

SIG_DIGITS = 12


def fmt(x):
    """Canonical scalar for reports: rounded floats, inf/nan as strings."""
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        y = float(f"{x:.{SIG_DIGITS}g}")
        return 0.0 if y == 0 else y
    if isinstance(x, (complex, np.complexfloating)):
        return [fmt(x.real), fmt(x.imag)]
    if isinstance(x, dict):
        return {str(k): fmt(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [fmt(v) for v in x]
    return x


def row_dict(row: Row) -> dict:
    out = {"suite": row.suite, "check": row.check, "inputs": fmt(row.inputs),
           "lhs": fmt(row.lhs), "rhs": fmt(row.rhs)}
    if row.kind == "identity":
        out["mismatch"] = fmt(row.lhs)
    else:
        out["slack"] = fmt(row.slack)
        out["tol"] = fmt(row.tol)
    out["pass"] = row.passed
    return out


def package_version() -> str:
    try:
        return importlib_metadata.version("artifact")
    except importlib_metadata.PackageNotFoundError:  # pragma: no cover - source checkout
        return "unknown"


def created_stamp() -> str:
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    when = datetime.fromtimestamp(int(epoch), timezone.utc) if epoch else datetime.now(timezone.utc)
    return when.strftime("%Y-%m-%dT%H:%M:%SZ")


def resolved_inputs(cfg: ExperimentConfig) -> dict:
    """Everything sampled from the seed, so any row can be recomputed from the report."""
    g = cfg.group
    return {
        "crossed_elements": {fid: [{"g": g.format(s), "matrix": dump_matrix(a)}
                                   for s, a in F.terms.items()]
                             for fid, F in cfg.crossed.items()},
        "group_states": {sid: phi.to_config() for sid, phi in cfg.group_states.items()},
        "algebra_states": {sid: dump_matrix(st.rho) for sid, st in cfg.algebra_states.items()},
    }


def build_report(cfg: ExperimentConfig, results: list, error: str | None = None) -> dict:
    rows = sorted((r for res in results for r in res.rows), key=Row.sort_key)
    suites = {}
    for res in results:
        failures = sum(not r.passed for r in res.rows)
        verdict = "pass" if failures == 0 else "fail"
        if not res.rows and res.note:
            verdict = "skipped"
        suites[res.name] = {"verdict": verdict, "rows": len(res.rows), "failures": failures}
        if res.note:
            suites[res.name]["note"] = res.note
    body = {
        "schema": SCHEMA_VERSION,
        "metadata": {
            "name": cfg.name,
            "config_hash": cfg.config_hash,
            "seed": cfg.seed,
            "rng": RNG_NAME,
            "group": cfg.group.label,
            "triple": cfg.triple.name,
            "radii": cfg.radii,
            "cap_dim": cfg.cap_dim,
            "versions": {"artifact": package_version(), "numpy": np.__version__,
                         "scipy": scipy.__version__, "python": platform.python_version()},
        },
        "config": cfg.raw,
        "resolved": fmt(resolved_inputs(cfg)),
        "summary": suites,
        "passed": error is None and all(s["failures"] == 0 for s in suites.values()),
        "rows": [row_dict(r) for r in rows],
    }
    if error is not None:
        body["error"] = error
    body["content_hash"] = content_hash(body)
    body["metadata"]["created"] = created_stamp()
    return body


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=True) + "\n"


def content_hash(body: dict) -> str:
    clean = {k: v for k, v in body.items() if k != "content_hash"}
    clean["metadata"] = {k: v for k, v in body["metadata"].items() if k != "created"}
    return hashlib.sha256(canonical_json(clean).encode()).hexdigest()


def csv_text(records: list, columns: list | None = None) -> str:
    if not records:
        return ""
    columns = columns or list(records[0].keys())
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for rec in records:
        writer.writerow([_cell(rec.get(c, "")) for c in columns])
    return buf.getvalue()


def _cell(v):
    v = fmt(v)
    return json.dumps(v) if isinstance(v, (list, dict)) else v


def write_outputs(out_dir: Path, report: dict, results: list) -> list:
    """Write ``report.json``, ``rows.csv`` and one CSV per suite table; return the paths."""
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    path = out_dir / "report.json"
    path.write_text(canonical_json(report))
    written.append(path)
    flat = [{"suite": r["suite"], "check": r["check"],
             "inputs": json.dumps(r["inputs"], sort_keys=True),
             "lhs": r["lhs"], "rhs": r["rhs"],
             "slack_or_mismatch": r.get("mismatch", r.get("slack")), "pass": r["pass"]}
            for r in report["rows"]]
    if flat:
        path = out_dir / "rows.csv"
        path.write_text(csv_text(flat))
        written.append(path)
    for res in results:
        for name, table in sorted(res.tables.items()):
            if table:
                path = out_dir / f"{name}.csv"
                path.write_text(csv_text(table))
                written.append(path)
    return written


def sweep_records(runner, cfg: ExperimentConfig) -> list:
    """Long-form ``(R, quantity, value)`` records across the radius list."""
    from .crossed import dual_spectrum
    from .coaction import verify_contractive

    records = []
    for R in cfg.radii:
        records.append((R, "spectrum_mismatch", dual_spectrum(runner.dual(R)).mismatch))
        for fid in runner.fitting(cfg.radii[0]):
            base = runner.base(fid, R)
            for sgn in "+-":
                records.append((R, f"commutator_norm[{fid}][{sgn}]", base.norms[sgn]))
        for sid in cfg.group_states:
            records.append((R, f"kernel_min_eig[{sid}]", runner.kernel(sid, R).min_eigenvalue))
            for fid in runner.fitting(cfg.radii[0]):
                rep = verify_contractive(cfg.crossed[fid], cfg.group_states[sid], runner.dual(R),
                                         cfg.action, base=runner.base(fid, R),
                                         kernel=runner.kernel(sid, R))
                records.append((R, f"contractivity_slack[{fid}][{sid}]", rep.min_slack))
    records.sort(key=lambda r: (r[1], r[0]))
    return [{"R": R, "quantity": q, "value": v} for R, q, v in records]


def sweep_result(records: list) -> SuiteResult:
    return SuiteResult("sweep", tables={"sweep": records})
