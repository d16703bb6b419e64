"""Persistence and figures: CSV for bulk numerics, JSON for reports, SVG figures.

CSV floats are written with shortest round-trip repr so that a write/read
cycle reproduces the field bit-exactly.  SVG output is rendered with
matplotlib and pinned to a fixed hash salt and empty date metadata, making
the bytes stable for fixed input.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .engine import ComplexGrid, ContourSet, SigmaMinField

__all__ = [
    "write_field_csv",
    "read_field_csv",
    "write_eigenvalues_csv",
    "write_contours_csv",
    "write_json_report",
    "contour_figure",
    "weyl_figure",
]

matplotlib.rcParams["svg.hashsalt"] = "pspeclab"

_SVG_META = {"Date": None}


def write_field_csv(fld: SigmaMinField, path) -> None:
    """Field as rows re,im,sigma_min; grid and fingerprint in comment lines."""
    re = fld.grid.re_points()
    im = fld.grid.im_points()
    with open(path, "w", newline="") as fh:
        g = fld.grid
        fh.write(f"# grid {g.re_min!r},{g.re_max!r},{g.im_min!r},{g.im_max!r},{g.nx},{g.ny}\n")
        fh.write(f"# fingerprint {json.dumps(fld.fingerprint, sort_keys=True)}\n")
        w = csv.writer(fh)
        w.writerow(["re", "im", "sigma_min"])
        for ix in range(g.nx):
            for iy in range(g.ny):
                w.writerow([repr(float(re[ix])), repr(float(im[iy])),
                            repr(float(fld.values[ix, iy]))])


def read_field_csv(path) -> SigmaMinField:
    with open(path, newline="") as fh:
        header = fh.readline()
        if not header.startswith("# grid "):
            raise ValueError(f"{path}: not a field CSV (missing grid header)")
        parts = header[len("# grid "):].strip().split(",")
        grid = ComplexGrid(float(parts[0]), float(parts[1]), float(parts[2]),
                           float(parts[3]), int(parts[4]), int(parts[5]))
        fp_line = fh.readline()
        fingerprint = json.loads(fp_line[len("# fingerprint "):]) if fp_line.startswith("# fingerprint ") else {}
        rd = csv.reader(fh)
        head = next(rd)
        if head != ["re", "im", "sigma_min"]:
            raise ValueError(f"{path}: unexpected CSV header {head}")
        values = np.empty((grid.nx, grid.ny))
        flat = [float(row[2]) for row in rd]
    values[...] = np.reshape(flat, (grid.nx, grid.ny))
    return SigmaMinField(grid=grid, values=values, fingerprint=fingerprint)


def write_eigenvalues_csv(eigenvalue_sets, path) -> None:
    """Eigenvalue dump, one row per eigenvalue: re,im,draw."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["re", "im", "draw"])
        for d, evs in enumerate(eigenvalue_sets):
            for z in np.asarray(evs):
                w.writerow([repr(float(z.real)), repr(float(z.imag)), d])


def write_contours_csv(cs: ContourSet, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["level", "polyline", "re", "im"])
        for level in cs.levels:
            for k, poly in enumerate(cs.polylines[level]):
                for p in poly:
                    w.writerow([repr(float(level)), k, repr(float(p[0])), repr(float(p[1]))])


def write_json_report(payload: dict, path, config: dict | None = None,
                      seed: int | None = None) -> None:
    """JSON report with the resolved config and seed embedded for provenance."""
    doc = dict(payload)
    if config is not None:
        doc["config"] = config
    if seed is not None:
        doc["seed"] = seed
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True, default=_json_default) + "\n")


def _json_default(o):
    if isinstance(o, complex):
        return {"re": o.real, "im": o.imag}
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    raise TypeError(f"cannot serialize {type(o)!r}")


def _save_svg(fig, path):
    fig.savefig(path, format="svg", metadata=_SVG_META)
    plt.close(fig)


def contour_figure(cs: ContourSet, path, eigenvalues=None, title: str = "") -> None:
    """Pseudospectra portrait: one labelled path per contour, optional spectrum dots."""
    fig, ax = plt.subplots(figsize=(6, 5))
    for level in cs.levels:
        for k, poly in enumerate(cs.polylines[level]):
            (ln,) = ax.plot(poly[:, 0], poly[:, 1], lw=1.0,
                            label=f"{level:g}" if k == 0 else None)
            ln.set_gid(f"contour-level-{level:g}-{k}")
    if eigenvalues is not None:
        ev = np.asarray(eigenvalues)
        ax.plot(ev.real, ev.imag, "k.", ms=4, label="spectrum")
    ax.set_xlabel("Re z")
    ax.set_ylabel("Im z")
    if title:
        ax.set_title(title)
    if cs.levels or eigenvalues is not None:
        ax.legend(title="level", fontsize=8)
    ax.set_aspect("equal", adjustable="box")
    _save_svg(fig, path)


def weyl_figure(report, path) -> None:
    """Two panels: perturbed spectrum with the counting box; integrated density vs Weyl."""
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(11, 4.5))
    for d, evs in enumerate(report.eigenvalues):
        ev = np.asarray(evs)
        ax1.plot(ev.real, ev.imag, ".", ms=2, color="C0", alpha=0.4,
                 label="perturbed spectrum" if d == 0 else None)
    re_min, re_max, im_min, im_max = report.gamma
    ax1.plot([re_min, re_max, re_max, re_min, re_min],
             [im_min, im_min, im_max, im_max, im_min], "k-", lw=1.2, label="Gamma")
    ax1.set_xlabel("Re z")
    ax1.set_ylabel("Im z")
    ax1.legend(fontsize=8, loc="upper right")
    ax2.step(report.density_im, report.density_counts, where="post", color="k",
             label="experimental density")
    ax2.plot(report.density_im, report.density_weyl, "r-", lw=1.5, label="Weyl law")
    ax2.set_xlabel("Im z")
    ax2.set_ylabel("integrated count")
    ax2.legend(fontsize=8)
    fig.suptitle(f"N={report.N}, h={report.h:g}, delta={report.delta:g}, "
                 f"{report.draws} draws, seed={report.seed}")
    _save_svg(fig, path)
