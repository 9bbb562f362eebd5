"""Render paper-style panels from ddregister output files.

Pure file-in/file-out: all numbers come from the primary component's CSV/JSON
products; this package only draws them. Rendering is deterministic (fixed
size, dpi, hash salt, and stripped metadata), so identical inputs give
byte-identical images.
"""
from __future__ import annotations

import argparse
import json
import sys

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "ddfigures"

import matplotlib.pyplot as plt
import numpy as np

from .schema import REQUIRED_COLUMNS, SchemaError, read_table

FIGSIZE = (6.0, 3.6)
DPI = 160

# metadata stripped for byte-identical output
_PNG_META = {"Software": None}
_SVG_META = {"Date": None, "Creator": None, "Type": None}


def _save(fig, out_path: str) -> None:
    meta = _SVG_META if out_path.endswith(".svg") else _PNG_META
    fig.savefig(out_path, dpi=DPI, metadata=meta)
    plt.close(fig)


def _new_axes(xlabel: str, ylabel: str):
    fig, ax = plt.subplots(figsize=FIGSIZE, dpi=DPI, constrained_layout=True)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    return fig, ax


def panel_spectrum(inputs, out_path):
    """DD spectroscopy trace with optional dashed resonance markers."""
    _, cols = read_table(inputs[0], "spectrum")
    fig, ax = _new_axes("unit pulse time (us)", "P(electron in |X>)")
    ax.plot(cols["t_us"], cols["p_simulated"], color="C0", lw=1.2, label="simulated")
    ax.plot(cols["t_us"], cols["p_closed"], color="C1", lw=0.8, ls=":", label="closed form")
    for extra in inputs[1:]:
        with open(extra, "r", encoding="utf-8") as fh:
            data = json.load(fh)
        for order in data.get("orders", []):
            t = order["conditional"]["t_refined_us"]
            lo, hi = min(cols["t_us"]), max(cols["t_us"])
            if lo <= t <= hi:
                ax.axvline(t, color="0.4", ls="--", lw=0.8)
    ax.set_ylim(-0.05, 1.05)
    ax.legend(loc="lower left", fontsize=8)
    _save(fig, out_path)


def panel_heatmap(inputs, out_path):
    """Entangling power over the (t, N) grid with the argmax marked."""
    _, cols = read_table(inputs[0], "heatmap")
    t = np.array(cols["t_us"])
    n = np.array(cols["N"])
    ep = np.array(cols["epower"])
    t_vals = np.unique(t)
    n_vals = np.unique(n)
    grid = np.full((n_vals.size, t_vals.size), np.nan)
    for ti, ni, ei in zip(t, n, ep):
        grid[np.searchsorted(n_vals, ni), np.searchsorted(t_vals, ti)] = ei
    fig, ax = _new_axes("unit pulse time (us)", "repeats N")
    mesh = ax.pcolormesh(t_vals, n_vals, grid, vmin=0.0, vmax=1.0, cmap="viridis")
    fig.colorbar(mesh, ax=ax, label="entangling power")
    k = int(np.argmax(ep))
    ax.plot(t[k], n[k], marker="D", color="lime", ms=8, mec="black")
    _save(fig, out_path)


def panel_mqc(inputs, out_path):
    """MQC signal vs phase, with an optional fitted-model overlay."""
    _, cols = read_table(inputs[0], "mqc")
    phi = np.array(cols["phi_rad"])
    p0 = np.array(cols["p0_electron"])
    fig, ax = _new_axes("phase per qubit (rad)", "P(|0> electron)")
    ax.plot(phi, p0, "o", ms=4, color="C0", label="signal")
    for extra in inputs[1:]:
        with open(extra, "r", encoding="utf-8") as fh:
            fit = json.load(fh)
        dense = np.linspace(phi.min(), phi.max(), 400)
        model = np.full_like(dense, fit["offset"])
        label = []
        for tone in fit["tones"]:
            model += tone["amplitude"] * np.cos(tone["frequency"] * dense - tone["delta_rad"])
            label.append(f"L={tone['frequency']:.2f}")
        ax.plot(dense, model, color="C0", lw=1.0, alpha=0.8, label="fit " + ", ".join(label))
    ax.set_ylim(-0.05, 1.05)
    ax.legend(loc="upper right", fontsize=8)
    _save(fig, out_path)


def panel_decay(inputs, out_path):
    """Per-qubit Z projections and exact fidelity against entangler repeats."""
    header, cols = read_table(inputs[0], "decay")
    n_e = np.array(cols["N_E"])
    fig, ax = _new_axes("entangling gate repeats N_E", "expectation / fidelity")
    for i, name in enumerate(h for h in header if h.startswith("z_")):
        ax.plot(n_e, cols[name], "o-", ms=4, lw=0.8, color=f"C{i}", label=name)
    ax.plot(n_e, cols["f_exact"], "s--", ms=5, lw=1.0, color="black", label="|0..0> fidelity")
    ax.set_ylim(-1.05, 1.05)
    ax.axhline(0.0, color="0.8", lw=0.6)
    ax.legend(loc="lower left", fontsize=8, ncol=2)
    _save(fig, out_path)


def panel_calibration_bar(inputs, out_path):
    """Gate durations from a calibration-table JSON, grouped by gate kind."""
    with open(inputs[0], "r", encoding="utf-8") as fh:
        table = json.load(fh)
    if not isinstance(table, list) or not table:
        raise SchemaError(f"{inputs[0]}: expected a nonempty calibration list")
    for row in table:
        missing = {"gate", "targets", "total_us"} - set(row)
        if missing:
            raise SchemaError(f"{inputs[0]}: calibration entry missing {sorted(missing)}")
    labels = [f"{r['gate']}:{'+'.join(r['targets'])}" for r in table]
    totals = [r["total_us"] for r in table]
    fig, ax = _new_axes("", "gate duration (us)")
    kinds = sorted({r["gate"] for r in table})
    colors = {k: f"C{i}" for i, k in enumerate(kinds)}
    ax.bar(range(len(table)), totals, color=[colors[r["gate"]] for r in table])
    ax.set_xticks(range(len(table)))
    ax.set_xticklabels(labels, rotation=60, ha="right", fontsize=7)
    _save(fig, out_path)


PANELS = {
    "spectrum": panel_spectrum,
    "heatmap": panel_heatmap,
    "mqc": panel_mqc,
    "decay": panel_decay,
    "calibration-bar": panel_calibration_bar,
}


def render(panel: str, inputs, out_path: str) -> None:
    if panel not in PANELS:
        raise SchemaError(f"unknown panel kind {panel!r} (choose from {sorted(PANELS)})")
    if not inputs:
        raise SchemaError("need at least one input file")
    PANELS[panel](list(inputs), out_path)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="ddfig-render", description="Render a panel from ddregister output files."
    )
    parser.add_argument("--panel", required=True, choices=sorted(PANELS))
    parser.add_argument("--in", dest="inputs", nargs="+", required=True)
    parser.add_argument("--out", required=True, help="output image (.png or .svg)")
    args = parser.parse_args(argv)
    try:
        render(args.panel, args.inputs, args.out)
    except (SchemaError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
