"""The seven figure renderers.

Markers are simulated data points; lines are guides to the eye. Rendering
is pure with respect to the input files: fixed style, fixed dpi, no
timestamps or software tags in the output, so identical inputs give
identical image bytes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .resultsio import SchemaError, load_many, require_columns, select  # noqa: E402

FIGURE_IDS = ("baseline_ser", "hybrid_decomp", "lod_vs_distance",
              "ctrl_gain", "ser_vs_ts", "device_heatmap", "robustness")

STYLE = {
    "figure.dpi": 120,
    "savefig.dpi": 120,
    "font.size": 9,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "lines.markersize": 5,
    "svg.hashsalt": "plotkit",
}

SCHEME_LABEL = {"mosk": "MoSK", "csk4": "CSK-4", "hybrid": "Hybrid"}
COLORS = {("mosk", "off"): "tab:green", ("csk4", "on"): "tab:orange",
          ("csk4", "off"): "tab:red", ("hybrid", "on"): "tab:blue",
          ("hybrid", "off"): "tab:purple"}
MARKERS = {"mosk": "s", "csk4": "^", "hybrid": "o"}


@dataclass
class FigureSpec:
    figure: str
    inputs: list[str]
    output: str
    log_y: bool = True
    nm: float | None = None       # operating point for hybrid_decomp
    scheme: str | None = None     # curve filter where meaningful
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.figure not in FIGURE_IDS:
            raise SchemaError(f"unknown figure id {self.figure!r}")
        if not self.inputs:
            raise SchemaError("at least one input file is required")


def _curve_label(scheme: str, ctrl: str) -> str:
    name = SCHEME_LABEL.get(scheme, scheme)
    if scheme == "mosk":
        return name
    return f"{name}{'+CTRL' if ctrl == 'on' else ' w/o CTRL'}"


def _check_log(pts, spec: FigureSpec, what: str):
    """Log axes reject nonpositive values: negatives are schema errors,
    zeros (no observed errors) are dropped from the curve with a note."""
    if any(p[1] is not None and p[1] < 0 for p in pts):
        raise SchemaError(f"{spec.figure}: negative {what} value")
    if not spec.log_y:
        return pts
    kept = [p for p in pts if p[1] > 0]
    if len(kept) < len(pts):
        import sys
        print(f"{spec.figure}: dropped {len(pts) - len(kept)} zero-{what} "
              "point(s) from the log axis", file=sys.stderr)
    return kept


def _grouped_curves(rows, x_key, y_key):
    groups = {}
    for row in rows:
        key = (row.get("scheme"), row.get("ctrl"))
        groups.setdefault(key, []).append((row[x_key], row[y_key]))
    for key in groups:
        groups[key].sort()
    return groups


def _plot_curves(ax, groups, spec, y_what):
    for (scheme, ctrl), pts in sorted(groups.items()):
        pts = _check_log(pts, spec, y_what)
        if not pts:
            continue
        ax.plot([p[0] for p in pts], [p[1] for p in pts],
                marker=MARKERS.get(scheme, "o"), linestyle="-",
                linewidth=0.9, color=COLORS.get((scheme, ctrl)),
                label=_curve_label(scheme, ctrl))
    if spec.log_y:
        ax.set_yscale("log")
    if ax.get_legend_handles_labels()[0]:
        ax.legend(fontsize=7)


def _fig_baseline_ser(rows, spec: FigureSpec):
    require_columns(rows, ("nm", "ser", "scheme", "ctrl"), spec.figure)
    fig, ax = plt.subplots(figsize=(4.4, 3.3))
    _plot_curves(ax, _grouped_curves(rows, "nm", "ser"), spec, "SER")
    ax.set_xlabel("molecules per symbol")
    ax.set_ylabel("SER")
    ax.set_title("SER vs molecule budget")
    return fig


def _fig_hybrid_decomp(rows, spec: FigureSpec):
    require_columns(rows, ("scheme", "ctrl", "nm", "symbols", "id_errors",
                           "amp_errors"), spec.figure)
    rows = select(rows, scheme="hybrid")
    if spec.nm is not None:
        rows = [r for r in rows if r["nm"] == spec.nm]
    if not rows:
        raise SchemaError("hybrid_decomp: no hybrid rows selected")
    fig, ax = plt.subplots(figsize=(4.0, 3.3))
    variants = ("off", "on")
    width = 0.35
    for pos, kind in enumerate(("id_errors", "amp_errors")):
        vals = []
        for ctrl in variants:
            sub = select(rows, ctrl=ctrl)
            if not sub:
                raise SchemaError(f"hybrid_decomp: no ctrl={ctrl} row")
            row = sub[0]
            vals.append(row[kind] / row["symbols"])
        label = "identity bit" if kind == "id_errors" else "amplitude bit"
        ax.bar(np.arange(2) + (pos - 0.5) * width, vals, width, label=label)
    ax.set_xticks([0, 1])
    ax.set_xticklabels(["CTRL off", "CTRL on"])
    ax.set_ylabel("error component rate")
    if spec.log_y:
        ax.set_yscale("log")
    ax.set_title("Hybrid error decomposition")
    ax.legend(fontsize=7)
    return fig


def _fig_lod_vs_distance(rows, spec: FigureSpec):
    require_columns(rows, ("r", "lod", "scheme", "ctrl"), spec.figure)
    rows = [r for r in rows if r.get("lod") is not None]
    if not rows:
        raise SchemaError("lod_vs_distance: no rows with an LoD value")
    for row in rows:
        row["_r_um"] = row["r"] * 1e6
    fig, ax = plt.subplots(figsize=(4.4, 3.3))
    _plot_curves(ax, _grouped_curves(rows, "_r_um", "lod"), spec, "LoD")
    ax.set_xlabel("separation (um)")
    ax.set_ylabel("LoD (molecules/symbol)")
    ax.set_title("Limit of detection vs distance")
    return fig


def _fig_ctrl_gain(rows, spec: FigureSpec):
    require_columns(rows, ("r", "lod", "scheme", "ctrl"), spec.figure)
    scheme = spec.scheme or "hybrid"
    rows = [r for r in select(rows, scheme=scheme)
            if r.get("lod") is not None]
    on = {r["r"]: r["lod"] for r in rows if r["ctrl"] == "on"}
    off = {r["r"]: r["lod"] for r in rows if r["ctrl"] == "off"}
    shared = sorted(set(on) & set(off))
    if not shared:
        raise SchemaError("ctrl_gain: need LoD rows for ctrl on and off")
    gain = [off[r] / on[r] for r in shared]
    fig, ax = plt.subplots(figsize=(4.4, 3.3))
    ax.plot([r * 1e6 for r in shared], gain, marker="o", linestyle="-",
            linewidth=0.9, color="tab:blue")
    ax.axhline(1.0, color="k", linewidth=0.8, linestyle="--")
    ax.set_xlabel("separation (um)")
    ax.set_ylabel("LoD(off) / LoD(on)")
    ax.set_title(f"{SCHEME_LABEL.get(scheme, scheme)} control gain "
                 "(>1 favors CTRL)")
    return fig


def _fig_ser_vs_ts(rows, spec: FigureSpec):
    require_columns(rows, ("ts", "ser", "ctrl"), spec.figure)
    fig, ax = plt.subplots(figsize=(4.4, 3.3))
    groups = {}
    for row in rows:
        key = (row.get("_source", "results"), row.get("ctrl"))
        groups.setdefault(key, []).append((row["ts"], row["ser"]))
    for (source, ctrl), pts in sorted(groups.items()):
        pts.sort()
        pts = _check_log(pts, spec, "SER")
        if not pts:
            continue
        ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="o",
                linestyle="-", linewidth=0.9, label=f"{source} ctrl={ctrl}")
    if spec.log_y:
        ax.set_yscale("log")
    ax.set_xlabel("symbol period (s)")
    ax.set_ylabel("SER")
    ax.set_title("SER vs symbol period")
    if ax.get_legend_handles_labels()[0]:
        ax.legend(fontsize=7)
    return fig


def _fig_device_heatmap(rows, spec: FigureSpec):
    require_columns(rows, ("value", "value2", "ser", "ctrl"), spec.figure)
    variants = sorted({r["ctrl"] for r in rows})
    fig, axes = plt.subplots(1, len(variants),
                             figsize=(3.6 * len(variants), 3.3),
                             squeeze=False)
    cmap = matplotlib.colors.ListedColormap(
        ["#2a9d8f", "#e9c46a", "#e76f51"])
    bounds = matplotlib.colors.BoundaryNorm([0, 1, 2, 3], cmap.N)
    for ax, ctrl in zip(axes[0], variants):
        sub = select(rows, ctrl=ctrl)
        gms = sorted({r["value"] for r in sub})
        cts = sorted({r["value2"] for r in sub})
        grid = np.full((len(cts), len(gms)), np.nan)
        for r in sub:
            i = cts.index(r["value2"])
            j = gms.index(r["value"])
            grid[i, j] = 0 if r["ser"] <= 0.01 else \
                (1 if r["ser"] <= 0.10 else 2)
        if np.isnan(grid).any():
            raise SchemaError("device_heatmap: incomplete (g_m, C_tot) grid")
        ax.pcolormesh(np.array(gms) * 1e3, np.array(cts) * 1e9, grid,
                      cmap=cmap, norm=bounds, shading="nearest")
        ax.set_xlabel("g_m (mS)")
        ax.set_ylabel("C_tot (nF)")
        ax.set_title(f"CTRL {ctrl}")
    handles = [matplotlib.patches.Patch(color=c, label=l) for c, l in
               zip(cmap.colors, ("SER <= 1%", "1% < SER <= 10%",
                                 "SER > 10%"))]
    fig.legend(handles=handles, loc="lower center", ncol=3, fontsize=7)
    fig.suptitle("Feasible device envelope")
    fig.subplots_adjust(bottom=0.28)
    return fig


def _fig_robustness(rows, spec: FigureSpec):
    require_columns(rows, ("axis", "value", "ser", "ctrl"), spec.figure)
    panels = [a for a in ("rho", "diffusion", "temperature")
              if any(r["axis"] == a for r in rows)]
    if not panels:
        raise SchemaError("robustness: no rho/diffusion/temperature rows")
    fig, axes = plt.subplots(1, len(panels),
                             figsize=(3.2 * len(panels), 3.1),
                             squeeze=False)
    labels = {"rho": "pre-subtraction correlation rho",
              "diffusion": "diffusion scale",
              "temperature": "temperature (K)"}
    for ax, axis in zip(axes[0], panels):
        sub = select(rows, axis=axis)
        for ctrl in sorted({r["ctrl"] for r in sub}):
            pts = sorted((r["value"], r["ser"])
                         for r in select(sub, ctrl=ctrl))
            ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="o",
                    linestyle="-", linewidth=0.9, label=f"ctrl={ctrl}")
        ax.set_xlabel(labels[axis])
        ax.set_ylabel("SER")
        ax.legend(fontsize=7)
    fig.suptitle("Robustness to nuisance parameters")
    fig.tight_layout()
    return fig


_RENDERERS = {
    "baseline_ser": _fig_baseline_ser,
    "hybrid_decomp": _fig_hybrid_decomp,
    "lod_vs_distance": _fig_lod_vs_distance,
    "ctrl_gain": _fig_ctrl_gain,
    "ser_vs_ts": _fig_ser_vs_ts,
    "device_heatmap": _fig_device_heatmap,
    "robustness": _fig_robustness,
}


def render(spec: FigureSpec) -> str:
    """Render one figure to spec.output and return the path."""
    rows = load_many(spec.inputs)
    with plt.rc_context(STYLE):
        fig = _RENDERERS[spec.figure](rows, spec)
        try:
            fig.savefig(spec.output, metadata=_stable_metadata(spec.output))
        finally:
            plt.close(fig)
    return spec.output


def _stable_metadata(path: str) -> dict:
    if path.endswith(".png"):
        return {"Software": None}
    if path.endswith(".svg"):
        return {"Date": None}
    return {}
