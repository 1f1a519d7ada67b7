"""Renderers for the eight figure analogues.

Deterministic output: fixed figure sizes, the Agg backend, no timestamps,
and the input checksum stored in the image metadata. Dashed extrapolation
guides are straight lines through plotted CSV points (presentation only; no
quantity is computed that is not already a column).
"""

from __future__ import annotations

import pathlib

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .schema import FIGURES, SchemaError, load_table, schema_checksum

__all__ = ["render", "SchemaError"]

_COLORS = {3: "tab:blue", 5: "tab:green", 7: "tab:red", 1: "tab:gray"}
_K_MARKERS = {1: "^", 2: "s", 3: "o"}
_STATE_STYLE = {"zero": ("tab:blue", "$|0_L\\rangle$"),
                "plus": ("tab:green", "$|+_L\\rangle$"),
                "psi": ("tab:red", "$|\\psi_L\\rangle$")}


def _label(path) -> str:
    p = pathlib.Path(path)
    return p.parent.name if p.stem in ("points", "zne_scan") else p.stem


def _series_panel(ax, tables, labels):
    for (table, label) in zip(tables, labels):
        r = np.asarray(table["r"])
        ax.errorbar(r, table["corrected_mean"], yerr=table["corrected_stderr"],
                    marker="o", ms=4, lw=1.2, capsize=2, label=f"{label} corrected")
        ax.errorbar(r, table["uncorrected_mean"], yerr=table["uncorrected_stderr"],
                    marker="x", ms=4, lw=1.0, ls="--", alpha=0.7,
                    label=f"{label} uncorrected")
    ax.set_xlabel("noise scaling factor $r$")
    ax.legend(fontsize=7)


def _scatter_panel(ax, tables, labels):
    for table, label in zip(tables, labels):
        ds = sorted({int(d) for d in table["d"]})
        ks = sorted({int(k) for k in table["K"]})
        for d in ds:
            for k in ks:
                xs = [table["delta"][i] for i in range(len(table["d"]))
                      if int(table["d"][i]) == d and int(table["K"][i]) == k]
                ys = [table["eta"][i] for i in range(len(table["d"]))
                      if int(table["d"][i]) == d and int(table["K"][i]) == k]
                if not xs:
                    continue
                name = "no corr." if d == 1 else f"d={d}"
                ax.scatter(xs, ys, s=22, marker=_K_MARKERS.get(k, "o"),
                           color=_COLORS.get(d, "k"), alpha=0.8,
                           label=f"{label + ' ' if label else ''}{name} K={k}")
        for d in ds:
            d0s = {table["delta0"][i] for i in range(len(table["d"]))
                   if int(table["d"][i]) == d}
            for d0 in d0s:
                if d0 > 0:
                    ax.axvline(d0, color=_COLORS.get(d, "k"), ls="--",
                               lw=0.8, alpha=0.5)
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("bias $\\delta$")
    ax.set_ylabel("sampling overhead $\\eta$")
    if ax.get_legend_handles_labels()[0]:
        ax.legend(fontsize=6)


def _fig2(tables, paths, axs):
    (ax,) = axs
    table = tables[0]
    _series_panel(ax, tables, [_label(paths[0])])
    # Two-point linear guides through the first and last grid points,
    # extended to r = 0 with an open marker (the ZNE illustration).
    r = np.asarray(table["r"])
    for col, color in (("corrected_mean", "tab:red"),
                       ("uncorrected_mean", "tab:blue")):
        y = np.asarray(table[col])
        if len(r) < 2:
            continue
        r0, r1 = r[0], r[-1]
        y0, y1 = y[0], y[-1]
        slope = (y1 - y0) / (r1 - r0)
        yy = y0 - slope * r0
        ax.plot([0, r1], [yy, y1], ls=":", lw=1.0, color=color, alpha=0.8)
        ax.plot([0], [yy], marker="o", mfc="none", color=color)
    ax.set_ylabel("$\\langle Z_0\\rangle$")
    ax.set_xlim(left=-0.1)


def _fig3c(tables, paths, axs):
    (ax,) = axs
    _series_panel(ax, tables, [_label(p) for p in paths])
    ax.set_ylabel("$\\langle Z_L\\rangle$")


def _fig3d(tables, paths, axs):
    (ax,) = axs
    _scatter_panel(ax, tables, ["" for _ in paths])


def _fig3e(tables, paths, axs):
    (ax,) = axs
    _series_panel(ax, tables, [_label(p) for p in paths])
    ax.set_ylabel("$\\langle Z_L\\rangle$")


def _fig3f(tables, paths, axs):
    (ax,) = axs
    _scatter_panel(ax, tables, [_label(p) for p in paths])


def _fig4b(tables, paths, axs):
    (ax,) = axs
    theta = np.linspace(0, 2 * np.pi, 256)
    ax.plot(np.cos(theta), np.sin(theta), color="k", lw=0.8)
    table = tables[0]
    for i in range(len(table["state"])):
        state = table["state"][i]
        color, label = _STATE_STYLE.get(state, ("k", state))
        ax.plot(table["xl_corr"][i], table["zl_corr"][i], "o", color=color,
                label=f"{label} corrected")
        ax.plot(table["xl_unc"][i], table["zl_unc"][i], "x", color=color,
                label=f"{label} uncorrected")
    ax.set_xlim(-1.15, 1.15)
    ax.set_ylim(-1.15, 1.15)
    ax.set_aspect("equal")
    ax.set_xlabel("$\\langle X_L\\rangle$")
    ax.set_ylabel("$\\langle Z_L\\rangle$")
    ax.legend(fontsize=6, loc="lower left")


def _fig4cd(tables, paths, axs):
    ax1, ax2 = axs
    _series_panel(ax1, tables[:1], [_label(paths[0])])
    ax1.set_ylabel("$\\langle Z_L\\rangle$")
    _scatter_panel(ax2, tables[1:], [""])


def _s7perf(tables, paths, axs):
    ax1, ax2 = axs
    table = tables[0]
    ks = sorted({int(k) for k in table["K"]})
    for k in ks:
        sel = [i for i in range(len(table["K"])) if int(table["K"][i]) == k]
        d = [table["d"][i] for i in sel]
        ax1.plot(d, [table["delta_ratio"][i] for i in sel], marker="o",
                 label=f"K={k}")
        ax2.plot(d, [table["eta"][i] for i in sel], marker="o", label=f"K={k}")
    ax1.set_yscale("log")
    ax1.set_xlabel("code distance $d$")
    ax1.set_ylabel("$\\delta/\\delta_0$")
    ax1.legend(fontsize=7)
    ax2.set_yscale("log")
    ax2.set_xlabel("code distance $d$")
    ax2.set_ylabel("$\\eta$")
    ax2.legend(fontsize=7)


_RENDERERS = {
    "fig2": (_fig2, 1),
    "fig3c": (_fig3c, 1),
    "fig3d": (_fig3d, 1),
    "fig3e": (_fig3e, 1),
    "fig3f": (_fig3f, 1),
    "fig4b": (_fig4b, 1),
    "fig4cd": (_fig4cd, 2),
    "s7perf": (_s7perf, 2),
}


def render(figure_id: str, inputs, output) -> None:
    """Render one figure analogue from CSV artifacts to a PNG file."""
    if figure_id not in _RENDERERS:
        raise SchemaError(f"unknown figure id {figure_id!r}; "
                          f"known: {sorted(_RENDERERS)}")
    schemas = FIGURES[figure_id]
    inputs = list(inputs)
    if not inputs:
        raise SchemaError("no input CSVs given")
    if len(schemas) > 1 and len(inputs) != len(schemas):
        raise SchemaError(f"{figure_id} expects {len(schemas)} inputs, "
                          f"got {len(inputs)}")
    tables = []
    for i, path in enumerate(inputs):
        required = schemas[min(i, len(schemas) - 1)]
        tables.append(load_table(path, required))

    fn, n_panels = _RENDERERS[figure_id]
    fig, axs = plt.subplots(1, n_panels, figsize=(4.2 * n_panels, 3.4),
                            dpi=150)
    axs = [axs] if n_panels == 1 else list(axs)
    fn(tables, inputs, axs)
    fig.suptitle(figure_id)
    fig.tight_layout()
    fig.savefig(output, metadata={
        "Title": figure_id,
        "Description": f"schema:{schema_checksum(inputs)}",
        "Software": "figplots",
    })
    plt.close(fig)
