"""Render spinctrl CSV outputs as figures.

Four kinds, one per output family of the simulation package:

* ``scatter`` -- best fidelity vs trial number from a campaign CSV, one
  series per (scheme, t_f) combination.
* ``heatmap`` -- a 2D fidelity landscape, color scale clamped to [0, 1]
  with the 0.25 and 1 landmarks ticked on the colorbar.
* ``pulse``   -- control amplitude vs time from a pulse-shape CSV.
* ``delta``   -- per-trial fidelity differences against a reference
  scheme from a comparison CSV.

Inputs are consumed strictly through their schema tags; a mismatched tag
is an error, not a guess.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_EXPECTED_SCHEMA = {
    "scatter": "spinctrl.campaign.v1",
    "heatmap": "spinctrl.landscape.v1",
    "pulse": "spinctrl.pulse.v1",
    "delta": "spinctrl.compare.v1",
}

_MARKERS = "osv^D<>p"


class SchemaError(Exception):
    pass


@dataclass(frozen=True)
class FigureSpec:
    kind: str
    input_path: str
    output_path: str
    title: str = ""
    x_label: str = ""
    y_label: str = ""

    def __post_init__(self):
        if self.kind not in _EXPECTED_SCHEMA:
            raise ValueError(f"unknown figure kind {self.kind!r}")


def read_tagged_csv(path: str) -> tuple[str, dict, list[str], list[list[str]]]:
    """Parse (schema, meta, header, rows) from a schema-tagged CSV."""
    schema = ""
    meta: dict[str, str] = {}
    header: list[str] = []
    rows: list[list[str]] = []
    with open(path) as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                key, _, value = body.partition(":")
                if key.strip() == "schema":
                    schema = value.strip()
                else:
                    meta[key.strip()] = value.strip()
                continue
            if not header:
                header = [c.strip() for c in line.split(",")]
            else:
                rows.append(line.split(","))
    if not schema:
        raise SchemaError(f"{path}: missing '# schema:' tag")
    return schema, meta, header, rows


def _columns(header, rows):
    return {name: [row[i] for row in rows] for i, name in enumerate(header)}


def _scatter(ax, meta, header, rows):
    cols = _columns(header, rows)
    trials = np.array([int(v) for v in cols["trial"]])
    tfs = np.array([float(v) for v in cols["tf"]])
    best = np.array([float(v) for v in cols["best_F"]])
    schemes = np.array(cols["scheme"])
    series = 0
    for scheme in dict.fromkeys(schemes):
        for t_f in dict.fromkeys(tfs[schemes == scheme]):
            pick = (schemes == scheme) & (tfs == t_f)
            label = f"{scheme}, t_f={t_f:g}" if len(set(schemes)) > 1 else f"t_f={t_f:g}"
            ax.plot(
                trials[pick], best[pick], _MARKERS[series % len(_MARKERS)],
                linestyle="none", label=label,
            )
            series += 1
    ax.set_ylim(-0.02, 1.02)
    ax.legend(fontsize=8)
    return "run number", "best fidelity"


def _heatmap(fig, ax, meta, header, rows):
    cols = _columns(header, rows)
    x = np.array([float(v) for v in cols["x"]])
    y = np.array([float(v) for v in cols["y"]])
    f = np.array([float(v) for v in cols["F"]])
    nx = int(meta.get("x_size", np.unique(x).size))
    ny = int(meta.get("y_size", np.unique(y).size))
    grid = f.reshape(nx, ny)
    image = ax.pcolormesh(
        x.reshape(nx, ny), y.reshape(nx, ny), np.clip(grid, 0.0, 1.0),
        vmin=0.0, vmax=1.0, shading="nearest",
    )
    bar = fig.colorbar(image, ax=ax, label="fidelity")
    bar.set_ticks([0.0, 0.25, 0.5, 0.75, 1.0])  # 0.25 and 1 are the landmarks
    return meta.get("x_axis", "x"), meta.get("y_axis", "y")


def _pulse(ax, meta, header, rows):
    cols = _columns(header, rows)
    t = np.array([float(v) for v in cols["t"]])
    g = np.array([float(v) for v in cols["g"]])
    ax.plot(t, g, label=meta.get("label", "pulse"))
    ax.axhline(0.0, linewidth=0.6, color="0.6")
    if meta.get("label"):
        ax.legend(fontsize=8)
    return "t", "g(t)"


def _delta(ax, meta, header, rows):
    cols = _columns(header, rows)
    trials = np.array([int(v) for v in cols["trial"]])
    tfs = np.array([float(v) for v in cols["tf"]])
    schemes = np.array(cols["scheme"])
    delta = np.array([float(v) for v in cols["delta_F"]])
    series = 0
    for scheme in dict.fromkeys(schemes):
        for t_f in dict.fromkeys(tfs[schemes == scheme]):
            pick = (schemes == scheme) & (tfs == t_f)
            ax.plot(
                trials[pick], delta[pick], _MARKERS[series % len(_MARKERS)],
                linestyle="none", label=f"{scheme}, t_f={t_f:g}",
            )
            series += 1
    ax.axhline(0.0, linewidth=0.8, color="0.3")
    ax.legend(fontsize=8)
    reference = meta.get("reference", "reference")
    return "run number", f"F({reference}) - F(scheme)"


def build_figure(spec: FigureSpec):
    """Build the matplotlib figure for a spec (exposed for inspection)."""
    schema, meta, header, rows = read_tagged_csv(spec.input_path)
    expected = _EXPECTED_SCHEMA[spec.kind]
    if schema != expected:
        raise SchemaError(
            f"{spec.input_path}: schema {schema!r} does not match kind "
            f"{spec.kind!r} (expected {expected!r})"
        )
    fig, ax = plt.subplots(figsize=(6.0, 4.0), constrained_layout=True)
    if spec.kind == "scatter":
        x_label, y_label = _scatter(ax, meta, header, rows)
    elif spec.kind == "heatmap":
        x_label, y_label = _heatmap(fig, ax, meta, header, rows)
    elif spec.kind == "pulse":
        x_label, y_label = _pulse(ax, meta, header, rows)
    else:
        x_label, y_label = _delta(ax, meta, header, rows)
    ax.set_xlabel(spec.x_label or x_label)
    ax.set_ylabel(spec.y_label or y_label)
    if spec.title:
        ax.set_title(spec.title)
    return fig


def render(spec: FigureSpec) -> str:
    """Render the figure to ``spec.output_path`` and return that path."""
    fig = build_figure(spec)
    fig.savefig(spec.output_path, dpi=150)
    plt.close(fig)
    return spec.output_path


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="spinctrl-figures", description="Render spinctrl CSV outputs as figures.",
    )
    parser.add_argument("--kind", choices=sorted(_EXPECTED_SCHEMA), required=True)
    parser.add_argument("--input", required=True, help="schema-tagged CSV produced by spinctrl")
    parser.add_argument("--output", required=True, help="image path (.png, .pdf, .svg)")
    parser.add_argument("--title", default="")
    parser.add_argument("--x-label", default="")
    parser.add_argument("--y-label", default="")
    args = parser.parse_args(argv)
    spec = FigureSpec(
        kind=args.kind, input_path=args.input, output_path=args.output,
        title=args.title, x_label=args.x_label, y_label=args.y_label,
    )
    try:
        path = render(spec)
    except (SchemaError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
