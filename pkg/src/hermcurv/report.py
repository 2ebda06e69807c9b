"""Machine-readable curvature and solver reports (structured text and CSV).

The structured-text format is stable `key: value` lines grouped in records,
prefixed with a schema-version header; CSV carries one row per record with
flattened columns.  Outputs are byte-deterministic for a fixed seed and
configuration.
"""

from __future__ import annotations

import csv
import io

import numpy as np

from . import forms
from .curvature import (gauduchon_curvature, report_matrix, ricci_and_scalars,
                        torsion_diagnostics)
from .jets import inverse_and_det
from .manifolds import ModelManifold

SCHEMA_VERSION = "hermcurv-report-1"

__all__ = ["SCHEMA_VERSION", "curvature_records", "records_to_text",
           "records_to_csv", "solver_record"]


def _fmt(x) -> str:
    if isinstance(x, float):
        return format(x, ".17g")
    return str(x)


def _flatten_matrix(prefix: str, m: np.ndarray, out: dict):
    n = m.shape[-1]
    for i in range(n):
        for j in range(n):
            out[f"{prefix}[{i + 1}][{j + 1}].re"] = float(m[i, j].real)
            out[f"{prefix}[{i + 1}][{j + 1}].im"] = float(m[i, j].imag)


def curvature_records(man: ModelManifold, points: np.ndarray,
                      ts=(0.0,)) -> list[dict]:
    """One record per (point, t): scalars, Ricci matrices, torsion data.

    Ricci coefficient matrices are reported in the golden-table convention
    (see curvature.report_matrix).  Class residuals are pointwise values of
    the same quantities `classify` maximizes over samples.
    """
    z = np.asarray(points, dtype=complex)
    if z.ndim == 1:
        z = z[None, :]
    jet = man.jet(z)
    ginv, _ = inverse_and_det(jet)
    diag = torsion_diagnostics(jet, ginv)
    n = man.n
    gaud = forms.del_delbar_omega_power(jet, n - 1).norm2(ginv)
    pluri = forms.del_delbar_omega(jet).norm2(ginv)
    records = []
    for t in ts:
        ric = ricci_and_scalars(gauduchon_curvature(jet, t, ginv), jet, ginv)
        for p in range(z.shape[0]):
            rec = {"schema": SCHEMA_VERSION, "manifold": man.name, "t": float(t)}
            for k in range(n):
                rec[f"z{k + 1}.re"] = float(z[p, k].real)
                rec[f"z{k + 1}.im"] = float(z[p, k].imag)
            rec["s1"] = float(ric.s1[p])
            rec["s2"] = float(ric.s2[p])
            for idx, m in ((1, ric.ric1), (2, ric.ric2), (3, ric.ric3),
                           (4, ric.ric4)):
                _flatten_matrix(f"ric{idx}", report_matrix(m[p]), rec)
            rec["norm.del_omega_sq"] = float(diag.norms["del_omega_sq"][p])
            rec["norm.del_star_sq"] = float(diag.norms["del_star_sq"][p])
            rec["norm.pairing"] = float(diag.norms["pairing"][p])
            for a in range(2 * n):
                rec[f"lee[{a}]"] = float(diag.lee[p, a])
            rec["residual.kahler"] = float(np.sqrt(max(
                2 * diag.norms["del_omega_sq"][p], 0.0)))
            rec["residual.balanced"] = float(np.sqrt(max(
                diag.norms["lee_sq"][p], 0.0)))
            rec["residual.gauduchon"] = float(np.sqrt(max(_at(gaud, p), 0.0)))
            rec["residual.pluriclosed"] = float(np.sqrt(max(_at(pluri, p), 0.0)))
            records.append(rec)
    return records


def _at(arr, p):
    return float(np.asarray(arr).reshape(-1)[p]) if np.ndim(arr) else float(arr)


def records_to_text(records: list[dict]) -> str:
    lines = [f"schema: {SCHEMA_VERSION}", f"records: {len(records)}", ""]
    for i, rec in enumerate(records):
        lines.append(f"[record {i}]")
        for key, val in rec.items():
            if key == "schema":
                continue
            lines.append(f"{key}: {_fmt(val)}")
        lines.append("")
    return "\n".join(lines)


def records_to_csv(records: list[dict]) -> str:
    if not records:
        return "schema\n"
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(records[0].keys()))
    writer.writeheader()
    for rec in records:
        writer.writerow({k: _fmt(v) for k, v in rec.items()})
    return buf.getvalue()


def solver_record(report, digest: dict) -> dict:
    """Flatten a SolverReport plus the input digest into one record."""
    rec = {"schema": SCHEMA_VERSION}
    rec.update({f"input.{k}": v for k, v in digest.items()})
    rec["lambda"] = float(report.lam)
    rec["residual_linf"] = float(report.residual_linf)
    rec["residual_l2"] = float(report.residual_l2)
    rec["wall_time_s"] = float(report.wall_time)
    rec["path_steps"] = len(report.path_trace)
    if report.path_trace:
        rec["path_a_final"] = float(report.path_trace[-1][0])
    rec["energy_steps"] = len(report.energy_trace)
    for key, val in report.extras.items():
        if isinstance(val, (int, float, np.floating)):
            rec[f"extras.{key}"] = float(val)
    sol = report.solution.values
    rec["solution.min"] = float(np.min(sol))
    rec["solution.max"] = float(np.max(sol))
    rec["solution.mean"] = float(np.mean(sol))
    return rec
