"""Run artifacts: the metrics table, the JSON report, and rendered figures.

Figures are written next to the delimited output so a run directory is
self-contained; nothing here opens a window.
"""

from __future__ import annotations

import json
import math
import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .diffgeo import surface_fields
from .energy import LOW_ENERGY_THRESHOLD
from .verifier import ELReport, MINUS, PLUS, ZERO

METRICS_VERSION = "curvmin-metrics v1"
METRICS_COLUMNS = ("stage", "iter", "energy", "h", "lambda", "grad_norm",
                   "linf_times_sqrtA")


def write_metrics_csv(rows, path) -> None:
    """Fixed-column CSV; the version lives in a leading comment line."""
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(f"# {METRICS_VERSION}\n")
        fh.write(",".join(METRICS_COLUMNS) + "\n")
        for stage, it, energy, h, lam, grad, le in rows:
            fh.write(f"{stage},{it},{energy!r},{h!r},{lam!r},{grad!r},{le!r}\n")


def run_report_dict(result, config_dict=None) -> dict:
    """Serializable summary of a run: stage table, low-energy trace, and
    the final-stage verdict."""
    stages = []
    trace = []
    for i, s in enumerate(result.stages):
        stages.append({
            "p": s.p, "epsilon": s.epsilon, "iterations": s.iterations,
            "reason": s.reason, "final_energy": s.final_energy,
            "final_h": s.final_h, "final_lambda": s.final_lambda,
            "residual_l2": s.report.residual_l2,
            "alignment_residual": s.report.alignment_residual,
            "concentration": s.report.concentration,
            "class_counts": s.report.class_counts(),
            "low_energy_value": s.low_energy_value,
            "low_energy_ok": s.low_energy_ok,
        })
        trace.append({"stage": i, "p": s.p, "value": s.low_energy_value,
                      "ok": s.low_energy_ok})
    doc = {
        "start_low_energy": {"ok": result.start_low_energy_ok,
                             "value": result.start_low_energy_value},
        "low_energy_trace": trace,
        "stages": stages,
        "converged": result.converged,
        "aborted": result.aborted,
        "final_report": result.stages[-1].report.to_json_dict()
        if result.stages else None,
    }
    if result.aborted:
        doc["abort_message"] = result.abort_message
    if config_dict is not None:
        doc["config"] = config_dict
    return doc


def write_report_json(doc: dict, path) -> None:
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_report_json(path) -> dict:
    with open(path, "r", encoding="ascii") as fh:
        return json.load(fh)


_RC = {
    "figure.figsize": (6.4, 4.0),
    "font.size": 9,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "savefig.dpi": 150,
    "savefig.bbox": "tight",
}


def _save(fig, directory, name):
    path = os.path.join(directory, name)
    fig.savefig(path)
    plt.close(fig)
    return path


def render_run_figures(result, weight, directory) -> list:
    """Convergence, ladder, residual-trend, and three-value figures."""
    written = []
    rows = np.array(result.rows, dtype=float)
    with plt.rc_context(_RC):
        if len(rows):
            fig, (ax1, ax2) = plt.subplots(2, 1, sharex=True,
                                           figsize=(6.4, 5.6))
            offsets = _stage_offsets(rows)
            it = offsets + rows[:, 1]
            ax1.plot(it, rows[:, 2], lw=0.9)
            ax1.set_ylabel("energy")
            ax1.set_yscale("log")
            ax2.plot(it, rows[:, 5], lw=0.9, color="tab:orange")
            ax2.set_ylabel("flow speed (nondim.)")
            ax2.set_yscale("log")
            ax2.set_xlabel("iteration (stages concatenated)")
            for b in np.unique(offsets)[1:]:
                for ax in (ax1, ax2):
                    ax.axvline(b, color="0.7", lw=0.6)
            ax1.set_title("descent history")
            written.append(_save(fig, directory, "convergence.png"))

        if result.stages:
            ps = [s.p for s in result.stages]
            sqrt_area = math.sqrt(_area_of(result))
            fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(8.0, 3.4))
            ax1.plot(ps, [s.final_h for s in result.stages], "o-",
                     label="h_p")
            ax1.plot(ps, [s.low_energy_value / sqrt_area
                          for s in result.stages], "s--", lw=0.8,
                     label="sup |xi H|")
            ax1.set_xscale("log", base=2)
            ax1.set_xlabel("p")
            ax1.legend()
            ax1.set_title("energy ladder")
            ax2.plot(ps, [s.low_energy_value for s in result.stages], "o-")
            ax2.axhline(LOW_ENERGY_THRESHOLD, color="tab:red", lw=0.8,
                        label="sqrt(8 pi)")
            ax2.set_xscale("log", base=2)
            ax2.set_xlabel("p")
            ax2.set_title("low-energy value")
            ax2.legend()
            written.append(_save(fig, directory, "energy_ladder.png"))

            fig, ax = plt.subplots()
            ax.plot(ps, [s.report.residual_l2 for s in result.stages], "o-",
                    label="EL residual (L2)")
            ax.plot(ps, [s.report.alignment_residual for s in result.stages],
                    "s-", label="sign-alignment residual (L1)")
            ax.set_xscale("log", base=2)
            ax.set_yscale("log")
            ax.set_xlabel("p")
            ax.legend()
            ax.set_title("optimality residuals per stage")
            written.append(_save(fig, directory, "residual_trend.png"))

            written.append(render_three_value_figure(
                result.stages[-1].report, result.final_mesh, weight,
                directory))
    return written


def _area_of(result):
    return float(surface_fields(result.final_mesh).measure.sum())


def _stage_offsets(rows):
    stages = rows[:, 0].astype(int)
    offsets = np.zeros(len(rows))
    shift = 0.0
    for s in range(stages.min(), stages.max() + 1):
        sel = stages == s
        if not np.any(sel):
            continue
        offsets[sel] = shift
        shift += rows[sel, 1].max() + 1
    return offsets


def render_three_value_figure(report: ELReport, mesh, weight, directory,
                              name="three_value.png"):
    """Histogram of xi H / h over surface measure, split by class."""
    fields = surface_fields(mesh)
    xi, _ = weight.evaluate(mesh.positions)
    xh_over_h = xi * fields.H / report.h
    if report.three_value is not None:
        classes = report.three_value
    else:
        classes = np.full(len(report.w), PLUS, dtype=np.int8)

    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        bins = np.linspace(-1.5, 1.5, 61)
        for code, label, color in ((int(PLUS), "PLUS", "tab:blue"),
                                   (int(ZERO), "ZERO", "0.6"),
                                   (int(MINUS), "MINUS", "tab:red")):
            sel = classes == code
            if np.any(sel):
                ax.hist(np.clip(xh_over_h[sel], -1.5, 1.5), bins=bins,
                        weights=fields.measure[sel], alpha=0.7,
                        label=label, color=color)
        for v in (-1.0, 0.0, 1.0):
            ax.axvline(v, color="0.3", lw=0.6, ls=":")
        ax.set_xlabel("xi H / h")
        ax.set_ylabel("surface measure")
        title = f"weighted curvature at p={report.p:g}"
        if report.concentration is not None:
            title = (f"three-value structure at p={report.p:g} "
                     f"(concentration {report.concentration:.3f})")
        ax.set_title(title)
        ax.legend()
        return _save(fig, directory, name)
