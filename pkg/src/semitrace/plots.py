"""Figure rendering for sweep reports.

Everything goes through the Agg backend and straight to files; nothing
here opens a display.  Alongside the PNGs a small gnuplot script is
written so the CSV can be replotted without Python.
"""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  backend must be set first

from .harness import SweepReport  # noqa: E402


def render_error_plot(report: SweepReport, path: str) -> None:
    """Relative error against h on log-log axes, calibration point marked."""
    rows = sorted(report.rows, key=lambda r: r.h)
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    scored = [r for r in rows if not r.is_calibration]
    if scored:
        ax.loglog([r.h for r in scored], [max(r.rel_err, 1e-17) for r in scored],
                  "o-", color="#1f5fa8", label="scored")
    calibration = [r for r in rows if r.is_calibration]
    if calibration:
        ax.loglog([r.h for r in calibration],
                  [max(r.rel_err, 1e-17) for r in calibration],
                  "s", color="#b0422a", label="calibration")
    ax.set_xlabel("h")
    ax.set_ylabel("relative error")
    ax.set_title(report.system_label)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_density_plot(report: SweepReport, path: str) -> None:
    """Real parts of both sides against h, the direct visual comparison."""
    rows = sorted(report.rows, key=lambda r: r.h)
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    hs = [r.h for r in rows]
    ax.plot(hs, [r.quantum.real for r in rows], "o-", color="#1f5fa8",
            label="quantum Re")
    ax.plot(hs, [r.semiclassical.real for r in rows], "x--", color="#b0422a",
            label="semiclassical Re")
    ax.set_xscale("log")
    ax.set_xlabel("h")
    ax.set_ylabel("Re G_E(h)")
    ax.set_title(f"{report.system_label}, E = {report.energy:g}")
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_component_plot(report: SweepReport, path: str) -> None:
    """Bar chart of component weights |d| |grad H| * measure by period."""
    parts = sorted(report.components, key=lambda p: p.component.period)
    if not parts:
        return
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    periods = [p.component.period for p in parts]
    weights = [p.density.modulus * p.component.grad_norm * p.measure
               for p in parts]
    ax.bar(range(len(parts)), weights, color="#3a7d44")
    ax.set_xticks(range(len(parts)))
    ax.set_xticklabels([f"{t:.4g}" for t in periods], rotation=30)
    ax.set_xlabel("period")
    ax.set_ylabel("component weight")
    ax.set_title(report.system_label)
    ax.grid(True, axis="y", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


GNUPLOT_TEMPLATE = """set datafile separator ","
set logscale xy
set xlabel "h"
set ylabel "relative error"
set grid
set key left top
set term pngcairo size 900,630
set output "rel_err.png"
plot "report.csv" using 1:7 skip 1 with linespoints title "rel err"
"""


def write_gnuplot_script(path: str) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(GNUPLOT_TEMPLATE)


def render_all(report: SweepReport, out_dir: str) -> list[str]:
    """Render the full figure set; returns the paths written."""
    written = []
    for name, renderer in (
        ("rel_err.png", render_error_plot),
        ("density.png", render_density_plot),
        ("components.png", render_component_plot),
    ):
        path = os.path.join(out_dir, name)
        renderer(report, path)
        if os.path.exists(path):
            written.append(path)
    script = os.path.join(out_dir, "plot.gnuplot")
    write_gnuplot_script(script)
    written.append(script)
    return written
