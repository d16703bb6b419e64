"""Grid scans of sigma_min(P - z), pseudospectral regions, contours, and exponent fits."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .gallery import DiscretizedOperator

__all__ = [
    "ComplexGrid",
    "SigmaMinField",
    "ContourSet",
    "scan",
    "region",
    "contours",
    "perturbation_inclusion_check",
    "boundary_exponent_fit",
    "exponential_rate_fit",
]


@dataclass(frozen=True)
class ComplexGrid:
    """Rectangular grid of complex plane points, nx columns (Re) by ny rows (Im)."""

    re_min: float
    re_max: float
    im_min: float
    im_max: float
    nx: int = 301
    ny: int = 301

    def __post_init__(self):
        if not (self.re_min < self.re_max and self.im_min < self.im_max):
            raise ValueError("grid bounds must satisfy re_min < re_max, im_min < im_max")
        if self.nx < 2 or self.ny < 2:
            raise ValueError("grid needs at least 2 points per axis")

    def re_points(self) -> np.ndarray:
        return np.linspace(self.re_min, self.re_max, self.nx)

    def im_points(self) -> np.ndarray:
        return np.linspace(self.im_min, self.im_max, self.ny)

    @property
    def pitch(self) -> float:
        return max((self.re_max - self.re_min) / (self.nx - 1),
                   (self.im_max - self.im_min) / (self.ny - 1))


@dataclass
class SigmaMinField:
    """sigma_min(P - z) tabulated over a grid; values[ix, iy] indexes (Re, Im).

    Per-point linear-algebra failures are recorded in ``missing`` (value 0
    there) rather than interpolated.
    """

    grid: ComplexGrid
    values: np.ndarray
    fingerprint: dict = field(default_factory=dict)
    missing: np.ndarray | None = None

    @property
    def missing_count(self) -> int:
        return 0 if self.missing is None else int(np.count_nonzero(self.missing))


def scan(op: DiscretizedOperator, grid: ComplexGrid, workers: int = 1) -> SigmaMinField:
    """sigma_min(P - z) at every grid node via the Schur-accelerated path.

    The Schur factorization is computed once and shared; rows are scanned in
    parallel and reassembled by index, so the output bytes are independent of
    the worker count.
    """
    sf = linalg.schur_form(op.matrix)
    n = op.dim
    re = grid.re_points()
    im = grid.im_points()
    values = np.zeros((grid.nx, grid.ny))
    missing = np.zeros((grid.nx, grid.ny), dtype=bool)
    eye = np.eye(n)

    def scan_row(ix: int) -> np.ndarray:
        row = np.empty(grid.ny)
        for iy in range(grid.ny):
            z = complex(re[ix], im[iy])
            try:
                row[iy] = linalg._sigma_min_triangular(sf.t - z * eye)
            except Exception:
                row[iy] = np.nan
        return row

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(scan_row, range(grid.nx)))
    else:
        rows = [scan_row(ix) for ix in range(grid.nx)]
    for ix, row in enumerate(rows):
        bad = ~np.isfinite(row)
        missing[ix] = bad
        row[bad] = 0.0
        values[ix] = row
    fp = {"model": op.name, "h": op.h, "N": n}
    return SigmaMinField(grid=grid, values=values, fingerprint=fp, missing=missing)


def region(fld: SigmaMinField, eps: float) -> np.ndarray:
    """Boolean mask of the eps-pseudospectral region {sigma_min < eps} (strict)."""
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    mask = fld.values < eps
    if fld.missing is not None:
        mask &= ~fld.missing
    return mask


@dataclass
class ContourSet:
    """Marching-squares isolines: a list of polylines (arrays of z) per level."""

    levels: list
    polylines: dict  # level -> list of (k, 2) float arrays, columns (re, im)


def _cell_segments(level, corners, pts):
    """Segments crossing one cell.

    corners = (v00, v10, v11, v01) counterclockwise; pts the matching
    interpolated edge crossings keyed bottom/right/top/left.  The two
    ambiguous saddle cases are resolved by the average corner value: an
    average below the level connects the 'inside' corners.
    """
    v00, v10, v11, v01 = corners
    inside = [v < level for v in (v00, v10, v11, v01)]
    case = inside[0] | inside[1] << 1 | inside[2] << 2 | inside[3] << 3
    b, r, t, l = pts
    table = {
        0: [], 15: [],
        1: [(l, b)], 14: [(b, l)],
        2: [(b, r)], 13: [(r, b)],
        4: [(r, t)], 11: [(t, r)],
        8: [(t, l)], 7: [(l, t)],
        3: [(l, r)], 12: [(r, l)],
        6: [(b, t)], 9: [(t, b)],
    }
    if case in table:
        return table[case]
    avg_inside = (v00 + v10 + v11 + v01) / 4.0 < level
    if case == 5:  # corners 00 and 11 inside
        return [(l, b), (r, t)] if not avg_inside else [(l, t), (r, b)]
    # case 10: corners 10 and 01 inside
    return [(b, r), (t, l)] if not avg_inside else [(b, l), (t, r)]


def _interp(za, zb, va, vb, level):
    t = 0.5 if vb == va else (level - va) / (vb - va)
    return za + t * (zb - za)


def _chain(segments):
    """Join oriented segments end-to-start into polylines (closed or open)."""
    def key(z):
        return (round(z.real, 12), round(z.imag, 12))

    polylines = []
    seg_used = [False] * len(segments)
    start_index: dict = {}
    for j, (a, b) in enumerate(segments):
        start_index.setdefault(key(a), []).append(j)
    end_keys = {key(b) for _, b in segments}
    order = list(range(len(segments)))
    # open chains first: starts that are not any segment's end
    order.sort(key=lambda j: (key(segments[j][0]) in end_keys, j))
    for j0 in order:
        if seg_used[j0]:
            continue
        pts = [segments[j0][0], segments[j0][1]]
        seg_used[j0] = True
        while True:
            nxt = None
            for j in start_index.get(key(pts[-1]), []):
                if not seg_used[j]:
                    nxt = j
                    break
            if nxt is None:
                break
            seg_used[nxt] = True
            pts.append(segments[nxt][1])
            if key(pts[-1]) == key(pts[0]):
                break
        polylines.append(np.array([(p.real, p.imag) for p in pts]))
    return polylines


def contours(fld: SigmaMinField, eps_levels) -> ContourSet:
    """Marching-squares isolines of the field at each positive ascending level."""
    levels = [float(e) for e in eps_levels]
    if any(e <= 0 for e in levels) or levels != sorted(levels):
        raise ValueError("levels must be positive and ascending")
    re = fld.grid.re_points()
    im = fld.grid.im_points()
    v = fld.values
    out: dict = {}
    for level in levels:
        segments = []
        for ix in range(fld.grid.nx - 1):
            for iy in range(fld.grid.ny - 1):
                v00 = v[ix, iy]
                v10 = v[ix + 1, iy]
                v11 = v[ix + 1, iy + 1]
                v01 = v[ix, iy + 1]
                lo, hi = min(v00, v10, v11, v01), max(v00, v10, v11, v01)
                if not (lo < level <= hi) and not (lo <= level < hi):
                    continue
                z00 = complex(re[ix], im[iy])
                z10 = complex(re[ix + 1], im[iy])
                z11 = complex(re[ix + 1], im[iy + 1])
                z01 = complex(re[ix], im[iy + 1])
                pts = (
                    _interp(z00, z10, v00, v10, level),  # bottom
                    _interp(z10, z11, v10, v11, level),  # right
                    _interp(z01, z11, v01, v11, level),  # top
                    _interp(z00, z01, v00, v01, level),  # left
                )
                segments.extend(_cell_segments(level, (v00, v10, v11, v01), pts))
        out[level] = _chain(segments)
    return ContourSet(levels=levels, polylines=out)


@dataclass
class InclusionReport:
    eps: float
    draws: int
    seed: int
    max_violation: float
    violations: int

    @property
    def passed(self) -> bool:
        return self.violations == 0


def perturbation_inclusion_check(op: DiscretizedOperator, eps: float, draws: int,
                                 seed: int) -> InclusionReport:
    """Every eigenvalue of P + eps*Q with ||Q|| = 0.99 must sit in the eps-region.

    Checks sigma_min(P - lambda) < eps*(1 + 1e-6) for each perturbed
    eigenvalue lambda; this exercises the sampler, the eigensolver, and the
    sigma_min path together.
    """
    from .randlab import sample_gaussian_matrix

    if eps <= 0:
        raise ValueError("eps must be positive")
    n = op.dim
    sf = linalg.schur_form(op.matrix)
    eye = np.eye(n)
    tol = eps * (1.0 + 1e-6)
    max_violation = 0.0
    violations = 0
    for d in range(draws):
        g = sample_gaussian_matrix(n, np.random.SeedSequence(entropy=seed, spawn_key=(d,)))
        q = 0.99 * g / linalg.operator_norm(g)
        for lam in linalg.eigenvalues(op.matrix + eps * q):
            smin = linalg._sigma_min_triangular(sf.t - lam * eye)
            if smin >= tol:
                violations += 1
                max_violation = max(max_violation, smin - eps)
    return InclusionReport(eps=eps, draws=draws, seed=seed,
                           max_violation=max_violation, violations=violations)


def _resolvent_norms(model_family, z0: complex, h_list):
    norms = []
    kept_h = []
    dropped = []
    for h in h_list:
        op = model_family(h)
        try:
            norms.append(linalg.resolvent_norm_at(op.matrix, z0))
            kept_h.append(h)
        except linalg.SingularResolventError:
            dropped.append(h)
    return np.array(kept_h), np.array(norms), dropped


def boundary_exponent_fit(model_family, z0: complex, h_list) -> float:
    """Least-squares slope of log ||(P_h - z0)^{-1}|| against log(1/h).

    ``model_family`` maps h to a DiscretizedOperator; its truncation must be
    large enough that the fit is stable under doubling N (checked in tests).
    """
    h_list = list(h_list)
    if len(h_list) < 4:
        raise ValueError("need at least 4 h values")
    hs, norms, dropped = _resolvent_norms(model_family, z0, h_list)
    if len(hs) < 3:
        raise linalg.SingularResolventError(
            f"resolvent singular at too many h values (dropped {dropped})")
    return float(np.polyfit(np.log(1.0 / hs), np.log(norms), 1)[0])


def exponential_rate_fit(model_family, z0: complex, h_list) -> float:
    """Slope of log ||(P_h - z0)^{-1}|| against 1/h (exponential-growth diagnostic)."""
    hs, norms, _ = _resolvent_norms(model_family, z0, list(h_list))
    if len(hs) < 3:
        raise linalg.SingularResolventError("too few valid resolvent norms")
    return float(np.polyfit(1.0 / hs, np.log(norms), 1)[0])
