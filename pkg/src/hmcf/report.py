"""Plots and a text summary for a finished run directory."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from . import analytic  # noqa: E402

# fixed ids and no timestamps, so the same data gives the same file
matplotlib.rcParams["svg.hashsalt"] = "hmcf"
matplotlib.rcParams["svg.fonttype"] = "none"
_SVG_META = {"Date": None, "Creator": None}


class ReportError(RuntimeError):
    pass


def read_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return [{k: float(v) for k, v in r.items()} for r in rows]


def _load_json(path):
    return json.loads(path.read_text()) if path.exists() else None


def _sphere_radius(manifest):
    shape = (manifest or {}).get("shape") or {}
    if shape.get("kind") == "geodesic_sphere":
        return float(shape.get("params", {}).get("r", 1.0))
    return None


def _plot(path, t, series, ylabel, title, overlay=None, log=False):
    fig, ax = plt.subplots(figsize=(5.5, 3.6))
    ax.plot(t, series, lw=1.5, label="measured")
    if overlay is not None:
        ax.plot(overlay[0], overlay[1], lw=0.8, ls="--", color="k", label="analytic")
        ax.legend(frameon=False)
    if log:
        ax.set_yscale("log")
    ax.set_xlabel("t")
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata=_SVG_META)
    plt.close(fig)
    return path


def make_report(run_dir):
    """Write ``A.svg``, ``V.svg``, ``Wbar.svg``, ``maxAbsH.svg`` (and
    ``monitor.svg`` for pairs) plus ``summary.txt``.  Returns the paths."""
    run_dir = Path(run_dir)
    csv_path = next((run_dir / n for n in ("diagnostics.csv", "pair.csv") if (run_dir / n).exists()), None)
    if csv_path is None:
        raise ReportError(f"no diagnostics CSV in {run_dir}")
    rows = read_csv(csv_path)
    if not rows:
        raise ReportError(f"{csv_path} has no rows")
    manifest = _load_json(run_dir / "manifest.json")
    status = _load_json(run_dir / "status.json") or {}
    certs = _load_json(run_dir / "certificates.json") or []

    t = [r["t"] for r in rows]
    out = []
    overlay = None
    r0 = _sphere_radius(manifest)
    if r0 is not None:
        T = analytic.extinction_time(r0)
        ts = [T * k / 400 for k in range(400)]
        overlay = (ts, [analytic.sphere_area(analytic.sphere_radius(r0, s)) for s in ts])
    out.append(_plot(run_dir / "A.svg", t, [r["A"] for r in rows], "area", "A(t)", overlay))
    out.append(_plot(run_dir / "V.svg", t, [r["V"] for r in rows], "volume", "V(t)"))
    out.append(_plot(run_dir / "Wbar.svg", t, [r["Wbar"] for r in rows], "int (H^2 - 1)", "Wbar(t)"))
    out.append(_plot(run_dir / "maxAbsH.svg", t, [r["maxAbsH"] for r in rows], "max |H|", "maxAbsH(t)", log=True))
    if "monitorF1" in rows[0]:
        out.append(_plot(run_dir / "monitor.svg", t, [r["monitorF1"] for r in rows],
                         "e^t sinh(d/2) - sinh(d0/2)", "comparison monitor"))

    last = rows[-1]
    lines = [
        f"run: {run_dir.name}",
        f"status: {status.get('status', 'unknown')}",
        f"steps: {int(last['step'])}",
        f"final t: {last['t']:.10g}",
        f"A: {rows[0]['A']:.10g} -> {last['A']:.10g}",
        f"V: {rows[0]['V']:.10g} -> {last['V']:.10g}",
        f"max |H| at end: {last['maxAbsH']:.6g}",
    ]
    if not math.isnan(last.get("neckRadius", math.nan)):
        lines.append(f"neck radius at end: {last['neckRadius']:.6g}")
    if r0 is not None:
        lines.append(f"analytic extinction time: {analytic.extinction_time(r0):.10g}")
    lines.append("certificates:")
    if certs:
        for c in certs:
            lines.append(f"  {c['name']}: {c['verdict']} (margin {c['margin']:.6g}, tolerance {c['tolerance']:.6g})")
    else:
        lines.append("  none recorded")
    summary = run_dir / "summary.txt"
    summary.write_text("\n".join(lines) + "\n")
    out.append(summary)
    return out
