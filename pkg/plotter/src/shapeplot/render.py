"""Render sweep-result CSVs into the three-panel summary figure.

Reads only the documented file contract (snr_sweep.csv, acf.csv, edi.csv);
no access to the producing package's internals. Plotted values equal the
CSV values unless --smooth is requested, in which case the smoothing is
recorded in the figure footer.
"""

from __future__ import annotations

import csv
import warnings
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

PANELS = ("snr", "acf", "edi")

SCHEMA = {
    "snr_sweep.csv": ["scheme", "power_dbm", "n_spans", "seed", "snr_db"],
    "acf.csv": ["scheme", "n_spans", "power_dbm", "tau", "r_theta"],
    "edi.csv": ["scheme", "window", "psi"],
}

# stable scheme -> color so lines match across panels
COLORS = {"uniform": "tab:gray", "ess": "tab:orange", "kess": "tab:green", "bess": "tab:blue"}
ORDER = ["uniform", "ess", "kess", "bess"]


class SchemaError(ValueError):
    """CSV malformed or its header differs from the documented contract."""


@dataclass
class FigureSpec:
    input_dir: Path
    output_path: Path
    panels: tuple[str, ...] = PANELS
    w_star_markers: tuple[int, ...] = (30, 150)
    smooth: bool = False

    def __post_init__(self):
        self.input_dir = Path(self.input_dir)
        self.output_path = Path(self.output_path)
        bad = [p for p in self.panels if p not in PANELS]
        if bad:
            raise ValueError(f"unknown panels: {bad}")


def read_table(directory: Path, name: str) -> list[dict]:
    path = directory / name
    if not path.exists():
        raise SchemaError(f"missing {path}")
    with path.open() as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path} is empty") from None
        if header != SCHEMA[name]:
            raise SchemaError(f"{path} header {header} != expected {SCHEMA[name]}")
        rows = []
        for line in reader:
            if len(line) != len(header):
                raise SchemaError(f"{path}: ragged row {line}")
            rows.append(dict(zip(header, line)))
    return rows


def _schemes_in(rows: list[dict]) -> list[str]:
    present = {r["scheme"] for r in rows}
    return [s for s in ORDER if s in present] + sorted(present - set(ORDER))


def _maybe_smooth(y: np.ndarray, enabled: bool) -> np.ndarray:
    if not enabled or y.size < 3:
        return y
    return np.convolve(y, np.ones(3) / 3, mode="same")


def _plot_snr(ax, rows, spec):
    by = defaultdict(lambda: defaultdict(list))  # (spans, scheme) -> power -> snrs
    for r in rows:
        by[(int(r["n_spans"]), r["scheme"])][float(r["power_dbm"])].append(float(r["snr_db"]))
    span_counts = sorted({k[0] for k in by})
    main = span_counts[0]
    inset = ax.inset_axes([0.56, 0.12, 0.40, 0.38]) if len(span_counts) > 1 else None
    for scheme in _schemes_in(rows):
        for spans, target in [(main, ax)] + ([(span_counts[-1], inset)] if inset else []):
            powers = sorted(by[(spans, scheme)])
            if not powers:
                continue
            snr = np.array([np.mean(by[(spans, scheme)][p]) for p in powers])
            target.plot(powers, _maybe_smooth(snr, spec.smooth), marker="o", ms=3,
                        color=COLORS.get(scheme), label=scheme if target is ax else None)
    ax.set_xlabel("launch power [dBm]")
    ax.set_ylabel(f"effective SNR [dB], {main} span{'s' if main > 1 else ''}")
    if inset is not None:
        inset.set_title(f"{span_counts[-1]} spans", fontsize=8)
        inset.tick_params(labelsize=7)
    ax.legend(fontsize=8)


def _plot_acf(ax, rows, spec):
    span_counts = sorted({int(r["n_spans"]) for r in rows})
    if not span_counts:
        return
    main = span_counts[0]
    for scheme in _schemes_in(rows):
        pts = sorted((int(r["tau"]), float(r["r_theta"])) for r in rows
                     if r["scheme"] == scheme and int(r["n_spans"]) == main)
        if not pts:
            continue
        tau, val = map(np.array, zip(*pts))
        ax.plot(tau, _maybe_smooth(val, spec.smooth), color=COLORS.get(scheme), label=scheme)
    ax.set_xlabel(r"lag $\tau$ [symbols]")
    ax.set_ylabel(r"$R_\theta[\tau]$")
    ax.axhline(0.0, color="k", lw=0.5, alpha=0.4)
    ax.legend(fontsize=8)


def _plot_edi(ax, rows, spec):
    for scheme in _schemes_in(rows):
        pts = sorted((int(r["window"]), float(r["psi"])) for r in rows
                     if r["scheme"] == scheme)
        if not pts:
            continue
        w, psi = map(np.array, zip(*pts))
        ax.semilogy(w, _maybe_smooth(psi, spec.smooth), marker=".",
                    color=COLORS.get(scheme), label=scheme)
    for w_star in spec.w_star_markers:
        ax.axvline(w_star, color="k", ls="--", lw=0.8, alpha=0.6)
        ax.text(w_star, ax.get_ylim()[1], f" W*={w_star}", fontsize=7,
                va="top", ha="left")
    ax.set_xlabel("window W [symbols]")
    ax.set_ylabel(r"energy dispersion index $\Psi$")
    ax.legend(fontsize=8)


def render(spec: FigureSpec) -> Path:
    """Draw the requested panels and write the image; returns the path.

    Missing scheme rows produce a warning and a partial plot; a malformed
    or missing CSV raises SchemaError.
    """
    tables = {}
    needed = {"snr": "snr_sweep.csv", "acf": "acf.csv", "edi": "edi.csv"}
    for panel in spec.panels:
        tables[panel] = read_table(spec.input_dir, needed[panel])

    all_schemes = set()
    for rows in tables.values():
        all_schemes |= {r["scheme"] for r in rows}
    for panel, rows in tables.items():
        missing = all_schemes - {r["scheme"] for r in rows}
        if missing:
            warnings.warn(f"{needed[panel]}: no rows for {sorted(missing)}; plotting the rest")

    fig, axes = plt.subplots(1, len(spec.panels), figsize=(4.2 * len(spec.panels), 3.4))
    axes = np.atleast_1d(axes)
    renderers = {"snr": _plot_snr, "acf": _plot_acf, "edi": _plot_edi}
    for ax, panel in zip(axes, spec.panels):
        renderers[panel](ax, tables[panel], spec)
    if spec.smooth:
        fig.text(0.01, 0.01, "smoothed: moving average, window 3", fontsize=7, alpha=0.7)
    fig.tight_layout()
    spec.output_path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(spec.output_path, dpi=160)
    plt.close(fig)
    return spec.output_path
