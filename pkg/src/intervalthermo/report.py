"""CSV, JSON and SVG artifacts for a pressure run.

Floats are written with ``repr`` so that identical runs give byte-identical
files; non-finite values become ``nan``/``inf`` in CSV and ``null`` in JSON.
"""

import csv
import json
import math

import matplotlib
from matplotlib.figure import Figure
import numpy as np

CSV_COLUMNS = ("t", "p", "p_err", "method", "lambda", "entropy", "Dminus", "Dplus", "flags")

_SVG_RC = {
    "svg.hashsalt": "intervalthermo",
    "svg.fonttype": "none",
    "path.simplify": False,
    "font.size": 9,
    "axes.linewidth": 0.6,
    "lines.linewidth": 1.2,
}


def _num(x):
    return repr(float(x))


def curve_rows(curve, report=None):
    """Rows of the curve table; kink points carry a ``kink`` flag."""
    kink_t = {k["t"] for k in report.kinks} if report is not None else set()
    for i in range(len(curve)):
        flags = list(curve.flags[i])
        if float(curve.t[i]) in kink_t:
            flags.append("kink")
        yield [_num(curve.t[i]), _num(curve.p[i]), _num(curve.p_err[i]), curve.method[i],
               _num(curve.lam[i]), _num(curve.entropy[i]), _num(curve.Dminus[i]), _num(curve.Dplus[i]),
               ";".join(flags)]


def write_csv(curve, path, report=None):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        w.writerows(curve_rows(curve, report))


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj) if math.isfinite(obj) else None
    return obj


def report_document(curve, report, extra=None):
    doc = {"map": curve.map_name, "transitions": report.to_dict(), "diagnostics": dict(curve.diagnostics)}
    failed = [float(curve.t[i]) for i in curve.failed]
    doc["diagnostics"]["failed_points"] = failed
    if extra:
        doc["diagnostics"].update(extra)
    return _clean(doc)


def write_json(curve, report, path, extra=None):
    with open(path, "w") as fh:
        json.dump(report_document(curve, report, extra), fh, sort_keys=True, indent=2, allow_nan=False)
        fh.write("\n")


def plot_svg(curve, report, path):
    """``p(t)`` polyline, kink markers and the two asymptote lines.

    Every grid point is a vertex of the ``pressure-curve`` line; kink markers
    (gid ``kink-markers``) are drawn only when kinks were reported.
    """
    with matplotlib.rc_context(_SVG_RC):
        fig = Figure(figsize=(6.0, 4.0))
        ax = fig.add_subplot(1, 1, 1)
        t, p = curve.t, curve.p
        ax.plot(t, p, color="k", marker=".", markersize=3, gid="pressure-curve", label="p(t)")
        lo, hi = float(t[0]), float(t[-1])
        tt = np.array([lo, hi])
        probe = report.maximizing
        if math.isfinite(report.lambda_M):
            ax.plot(tt, probe["intercept"] - tt * report.lambda_M, ls="--", color="C0", lw=0.8,
                    gid="asymptote-lambda-M", label=f"h - t*lambda_M, lambda_M={report.lambda_M:.4f}")
        if math.isfinite(report.lambda_m):
            ax.plot(tt, -tt * report.lambda_m, ls=":", color="C1", lw=0.8,
                    gid="asymptote-lambda-m", label=f"-t*lambda_m, lambda_m={report.lambda_m:.4f}")
        if report.kinks:
            kt = np.array([k["t"] for k in report.kinks])
            kp = np.interp(kt, t, p)
            ax.plot(kt, kp, ls="none", marker="o", mfc="none", mec="C3", ms=8, gid="kink-markers", label="kink")
        ax.axhline(0.0, color="0.7", lw=0.5)
        ax.set_xlabel("t")
        ax.set_ylabel("p(t)")
        ax.set_title(curve.map_name)
        finite = p[np.isfinite(p)]
        if finite.size:
            pad = 0.05 * (finite.max() - finite.min() + 1e-12)
            ax.set_ylim(finite.min() - pad, finite.max() + pad)
        ax.legend(loc="upper right", fontsize=7, frameon=False)
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
