"""Classical-spectrum and Poisson-bracket computations on symbol models.

Bracket convention: {a, b} = d_xi a * d_x b - d_x a * d_xi b.  The sets
Lambda_+/Lambda_- are decided by the sign of (1/2i){pbar, p} = {Re p, Im p};
only signs and zero sets are contract-bearing, so an overall normalization
factor is irrelevant.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .gallery import SymbolModel

__all__ = [
    "PhaseSpacePoint",
    "PhaseBox",
    "BracketReport",
    "BoxTooSmallError",
    "UnsupportedDepthError",
    "half_imag_bracket",
    "iterated_bracket",
    "order_at",
    "classical_spectrum_mask",
    "lambda_pm_mask",
    "LambdaMasks",
    "volume_V_z",
    "sublevel_volumes",
    "kappa_fit",
    "weyl_prediction",
    "weyl_prediction_interval",
    "default_phase_box",
]

BRACKET_VANISH_TOL = 1e-9   # classification threshold for (1/2i){pbar,p}
ORDER_DETECT_TOL = 1e-6     # a bracket above this counts as nonvanishing
_FD_STEP = 1e-5

# maximum total derivative order: exact through order 3 via stored second
# derivatives, one finite-difference level beyond, then refuse
_MAX_WORD_LEN = 4


class BoxTooSmallError(ValueError):
    """The sublevel set under integration touches the phase-box boundary."""


class UnsupportedDepthError(ValueError):
    """Requested iterated bracket needs derivatives beyond the implemented order."""


@dataclass(frozen=True)
class PhaseSpacePoint:
    x: float
    xi: float


@dataclass(frozen=True)
class PhaseBox:
    """Rectangle [x_min, x_max] x [xi_min, xi_max] in phase space."""

    x_min: float
    x_max: float
    xi_min: float
    xi_max: float


@dataclass(frozen=True)
class BracketReport:
    point: PhaseSpacePoint
    half_imag_bracket: float
    order: int | str
    classification: str  # lambda_plus | lambda_minus | vanishing


class _Field:
    """Scalar field with a value callable and optionally exact derivatives.

    ``grad`` returns (d_x f, d_xi f); ``hess`` returns (f_xx, f_xxi, f_xixi).
    When exact derivatives run out, gradients fall back to central finite
    differences of the value.
    """

    def __init__(self, value: Callable, grad: Callable | None = None,
                 hess: Callable | None = None):
        self.value = value
        self._grad = grad
        self.hess = hess

    def grad(self, x: float, xi: float):
        if self._grad is not None:
            return self._grad(x, xi)
        s = _FD_STEP
        fx = (self.value(x + s, xi) - self.value(x - s, xi)) / (2 * s)
        fxi = (self.value(x, xi + s) - self.value(x, xi - s)) / (2 * s)
        return fx, fxi


def _real_part_field(model: SymbolModel) -> _Field:
    return _Field(
        value=lambda x, xi: np.real(model.p0(x, xi)),
        grad=lambda x, xi: (np.real(model.dx_p0(x, xi)), np.real(model.dxi_p0(x, xi))),
        hess=lambda x, xi: (np.real(model.dxx_p0(x, xi)), np.real(model.dxxi_p0(x, xi)),
                            np.real(model.dxixi_p0(x, xi))),
    )


def _imag_part_field(model: SymbolModel) -> _Field:
    return _Field(
        value=lambda x, xi: np.imag(model.p0(x, xi)),
        grad=lambda x, xi: (np.imag(model.dx_p0(x, xi)), np.imag(model.dxi_p0(x, xi))),
        hess=lambda x, xi: (np.imag(model.dxx_p0(x, xi)), np.imag(model.dxxi_p0(x, xi)),
                            np.imag(model.dxixi_p0(x, xi))),
    )


def _bracket_field(f: _Field, g: _Field) -> _Field:
    """Poisson bracket {f, g} as a new field.

    The value needs the gradients of f and g; the gradient of the bracket
    needs their Hessians and is exact when both are stored.
    """

    def value(x, xi):
        fx, fxi = f.grad(x, xi)
        gx, gxi = g.grad(x, xi)
        return fxi * gx - fx * gxi

    grad = None
    if f.hess is not None and g.hess is not None:
        def grad(x, xi):
            fx, fxi = f.grad(x, xi)
            gx, gxi = g.grad(x, xi)
            fxx, fxxi, fxixi = f.hess(x, xi)
            gxx, gxxi, gxixi = g.hess(x, xi)
            bx = fxxi * gx + fxi * gxx - fxx * gxi - fx * gxxi
            bxi = fxixi * gx + fxi * gxxi - fxxi * gxi - fx * gxixi
            return bx, bxi

    return _Field(value=value, grad=grad, hess=None)


def half_imag_bracket(model: SymbolModel, rho: PhaseSpacePoint) -> float:
    """(1/2i){pbar_0, p_0}(rho) = {Re p_0, Im p_0}(rho) from exact derivatives."""
    dx = model.dx_p0(rho.x, rho.xi)
    dxi = model.dxi_p0(rho.x, rho.xi)
    return float(np.real(dxi) * np.imag(dx) - np.real(dx) * np.imag(dxi))


def iterated_bracket(model: SymbolModel, word: Sequence[int], rho: PhaseSpacePoint) -> float:
    """Nested bracket {p_i1, {p_i2, ..., {p_ik-1, p_ik}..}} with p1 = Re p0, p2 = Im p0."""
    if len(word) < 2:
        raise ValueError("word must have length >= 2")
    if any(i not in (1, 2) for i in word):
        raise ValueError("word entries must be 1 (Re p0) or 2 (Im p0)")
    if len(word) > _MAX_WORD_LEN:
        raise UnsupportedDepthError(
            f"bracket words longer than {_MAX_WORD_LEN} need unimplemented derivative orders")
    leaves = {1: _real_part_field(model), 2: _imag_part_field(model)}
    fld = leaves[word[-1]]
    for idx in reversed(word[:-1]):
        fld = _bracket_field(leaves[idx], fld)
    return float(fld.value(rho.x, rho.xi))


def _point_order(model: SymbolModel, rho: PhaseSpacePoint, cap: int) -> int | str:
    from itertools import product
    for j in range(1, cap + 1):
        for word in product((1, 2), repeat=j + 1):
            if abs(iterated_bracket(model, word, rho)) > ORDER_DETECT_TOL:
                return j
    return "ge_cap"


def order_at(model: SymbolModel, z: complex, level_set_sample: Sequence[PhaseSpacePoint],
             cap: int = 3) -> int | str:
    """Bracket order of z: max over the sampled level set of the per-point order.

    The per-point order is the smallest j <= cap such that some iterated
    bracket of word length j+1 is nonvanishing.
    """
    if not level_set_sample:
        raise ValueError("level_set_sample must be nonempty")
    for rho in level_set_sample:
        if abs(model.p0(rho.x, rho.xi) - z) > 1e-8:
            raise ValueError(f"sample point {rho} is not on the level set of {z}")
    orders = [_point_order(model, rho, cap) for rho in level_set_sample]
    if any(o == "ge_cap" for o in orders):
        return "ge_cap"
    return max(orders)


def bracket_report(model: SymbolModel, rho: PhaseSpacePoint, cap: int = 3) -> BracketReport:
    b = half_imag_bracket(model, rho)
    if b < -BRACKET_VANISH_TOL:
        cls = "lambda_plus"
    elif b > BRACKET_VANISH_TOL:
        cls = "lambda_minus"
    else:
        cls = "vanishing"
    return BracketReport(point=rho, half_imag_bracket=b,
                         order=_point_order(model, rho, cap), classification=cls)


def default_phase_box(model: SymbolModel, z: complex, t_max: float = 1.0,
                      max_doublings: int = 12) -> PhaseBox:
    """Auto-sized box containing the sublevel set {|p0 - z|^2 <= t_max}.

    Grows the box until no boundary sample comes near the sublevel set; the
    ellipticity of p0 - z0 guarantees termination for gallery symbols.
    """
    circle = model.domain_kind == "circle"
    l = 4.0
    for _ in range(max_doublings):
        bxi = np.linspace(-l, l, 512)
        if circle:
            bx = np.linspace(0.0, 2 * np.pi, 512, endpoint=False)
            edges = [(bx, np.full_like(bx, -l)), (bx, np.full_like(bx, l))]
        else:
            bx = np.linspace(-l, l, 512)
            edges = [(bx, np.full_like(bx, -l)), (bx, np.full_like(bx, l)),
                     (np.full_like(bxi, -l), bxi), (np.full_like(bxi, l), bxi)]
        clear = all(np.min(np.abs(model.p0(ex, exi) - z) ** 2) > 4.0 * t_max
                    for ex, exi in edges)
        if clear:
            if circle:
                return PhaseBox(0.0, 2 * np.pi, -l, l)
            return PhaseBox(-l, l, -l, l)
        l *= 2.0
    raise BoxTooSmallError(f"could not bound the sublevel set of z={z} within L={l}")


def _midpoint_grid(model: SymbolModel, phase_box: PhaseBox, resolution: int):
    if model.domain_kind == "circle":
        x = np.linspace(0.0, 2 * np.pi, resolution, endpoint=False) + np.pi / resolution
        dx = 2 * np.pi / resolution
    else:
        dx = (phase_box.x_max - phase_box.x_min) / resolution
        x = phase_box.x_min + dx * (np.arange(resolution) + 0.5)
    dxi = (phase_box.xi_max - phase_box.xi_min) / resolution
    xi = phase_box.xi_min + dxi * (np.arange(resolution) + 0.5)
    xx, xxi = np.meshgrid(x, xi, indexing="ij")
    return xx, xxi, dx * dxi


def sublevel_volumes(model: SymbolModel, z: complex, t_list: Sequence[float],
                     phase_box: PhaseBox | None = None, resolution: int = 1001) -> np.ndarray:
    """Midpoint-rule measures of {|p0 - z|^2 <= t} for each t, one symbol sweep."""
    t_arr = np.asarray(list(t_list), dtype=float)
    if np.any(t_arr < 0):
        raise ValueError("t must be nonnegative")
    if phase_box is None:
        phase_box = default_phase_box(model, z, float(t_arr.max()) if t_arr.size else 1.0)
    xx, xxi, cell = _midpoint_grid(model, phase_box, resolution)
    f = np.abs(model.p0(xx, xxi) - z) ** 2
    t_max = float(t_arr.max()) if t_arr.size else 0.0
    boundary = [f[:, 0], f[:, -1]]
    if model.domain_kind != "circle":
        boundary += [f[0, :], f[-1, :]]
    if any(np.any(b <= t_max) for b in boundary):
        raise BoxTooSmallError("sublevel set touches the phase-box boundary; box too small")
    return np.array([float(np.count_nonzero(f <= t) * cell) for t in t_arr])


def volume_V_z(model: SymbolModel, z: complex, t: float,
               phase_box: PhaseBox | None = None, resolution: int = 1001) -> float:
    """Vol{rho : |p0(rho) - z|^2 <= t} by the midpoint rule."""
    return float(sublevel_volumes(model, z, [t], phase_box, resolution)[0])


def kappa_fit(model: SymbolModel, z: complex, t_list: Sequence[float],
              phase_box: PhaseBox | None = None, resolution: int = 2001) -> float:
    """Least-squares slope of log V_z(t) against log t over a geometric t grid."""
    t_arr = np.asarray(list(t_list), dtype=float)
    if t_arr.size < 4:
        raise ValueError("need at least 4 t values")
    vols = sublevel_volumes(model, z, t_arr, phase_box, resolution)
    keep = vols > 0
    if np.count_nonzero(keep) < 3:
        raise ValueError("fewer than 3 nonzero volumes; refine the grid or enlarge t")
    return float(np.polyfit(np.log(t_arr[keep]), np.log(vols[keep]), 1)[0])


def weyl_prediction(model: SymbolModel, gamma: tuple, h: float,
                    phase_box: PhaseBox | None = None, resolution: int = 2001) -> float:
    """(2*pi*h)^{-1} times the phase-space volume of p0^{-1}(Gamma), Gamma a rectangle."""
    re_min, re_max, im_min, im_max = gamma
    zc = complex(0.5 * (re_min + re_max), 0.5 * (im_min + im_max))
    if phase_box is None:
        r2 = (re_max - re_min) ** 2 + (im_max - im_min) ** 2
        phase_box = default_phase_box(model, zc, r2)
    xx, xxi, cell = _midpoint_grid(model, phase_box, resolution)
    p = model.p0(xx, xxi)
    inside = (p.real >= re_min) & (p.real <= re_max) & (p.imag >= im_min) & (p.imag <= im_max)
    return float(np.count_nonzero(inside) * cell / (2 * np.pi * h))


def weyl_prediction_interval(model: SymbolModel, a: float, b: float, h: float,
                             phase_box: PhaseBox | None = None, resolution: int = 2001) -> float:
    """Interval variant for real-valued symbols: (2*pi*h)^{-1} Vol{a <= p0 <= b}."""
    if a >= b:
        raise ValueError("need a < b")
    if phase_box is None:
        phase_box = default_phase_box(model, complex(0.5 * (a + b)), (b - a) ** 2)
    xx, xxi, cell = _midpoint_grid(model, phase_box, resolution)
    p = np.real(model.p0(xx, xxi))
    return float(np.count_nonzero((p >= a) & (p <= b)) * cell / (2 * np.pi * h))


@dataclass(frozen=True)
class LambdaMasks:
    """Per-grid-point Lambda_+/Lambda_- membership (both may hold)."""

    plus: np.ndarray
    minus: np.ndarray


def _rasterize(grid, points: np.ndarray, weights: np.ndarray | None = None):
    """Mark grid nodes within one pitch of any of the complex ``points``.

    Returns a boolean (nx, ny) array.  ``weights`` restricts to points where
    the weight is True.
    """
    re = grid.re_points()
    im = grid.im_points()
    dre = re[1] - re[0]
    dim = im[1] - im[0]
    pitch = max(dre, dim)
    mask = np.zeros((grid.nx, grid.ny), dtype=bool)
    pts = points if weights is None else points[weights]
    if pts.size == 0:
        return mask
    fi = (pts.real - re[0]) / dre
    fj = (pts.imag - im[0]) / dim
    for oi in (-1, 0, 1):
        for oj in (-1, 0, 1):
            i = np.floor(fi).astype(int) + oi
            j = np.floor(fj).astype(int) + oj
            ok = (i >= 0) & (i < grid.nx) & (j >= 0) & (j < grid.ny)
            if not np.any(ok):
                continue
            d = np.hypot(re[i[ok]] - pts.real[ok], im[j[ok]] - pts.imag[ok])
            near = d <= pitch
            mask[i[ok][near], j[ok][near]] = True
    return mask


def classical_spectrum_mask(model: SymbolModel, grid, phase_box: PhaseBox,
                            resolution: int = 501) -> np.ndarray:
    """Boolean field marking grid points within one pitch of the sampled image of p0."""
    xx, xxi, _ = _midpoint_grid(model, phase_box, resolution)
    p = np.ravel(model.p0(xx, xxi))
    return _rasterize(grid, p)


def lambda_pm_mask(model: SymbolModel, grid, phase_box: PhaseBox,
                   resolution: int = 501) -> LambdaMasks:
    """Classify grid points by the bracket sign on nearby level-set samples."""
    xx, xxi, _ = _midpoint_grid(model, phase_box, resolution)
    p = np.ravel(model.p0(xx, xxi))
    dx = np.ravel(np.broadcast_to(model.dx_p0(xx, xxi), xx.shape))
    dxi = np.ravel(np.broadcast_to(model.dxi_p0(xx, xxi), xx.shape))
    b = np.real(dxi) * np.imag(dx) - np.real(dx) * np.imag(dxi)
    plus = _rasterize(grid, p, b < -BRACKET_VANISH_TOL)
    minus = _rasterize(grid, p, b > BRACKET_VANISH_TOL)
    return LambdaMasks(plus=plus, minus=minus)


def level_set_sample(model: SymbolModel, z: complex, phase_box: PhaseBox | None = None,
                     resolution: int = 401, max_points: int = 64,
                     newton_steps: int = 60) -> list[PhaseSpacePoint]:
    """Locate points of p0^{-1}(z): dense seeding plus Newton refinement to 1e-8."""
    if phase_box is None:
        phase_box = default_phase_box(model, z)
    xx, xxi, _ = _midpoint_grid(model, phase_box, resolution)
    f = np.abs(model.p0(xx, xxi) - z)
    flat = np.argsort(f, axis=None)[: 8 * max_points]
    seeds = np.column_stack(np.unravel_index(flat, f.shape))
    found: list[PhaseSpacePoint] = []
    for i, j in seeds:
        x, xi = float(xx[i, j]), float(xxi[i, j])
        ok = False
        for _ in range(newton_steps):
            r = model.p0(x, xi) - z
            # drive well below the 1e-8 membership tolerance: near degenerate
            # roots Newton converges linearly and order detection needs the
            # residual at ~1e-15 before the iterated brackets settle
            if abs(r) <= 1e-15:
                ok = True
                break
            jdx = complex(model.dx_p0(x, xi))
            jdxi = complex(model.dxi_p0(x, xi))
            jac = np.array([[jdx.real, jdxi.real], [jdx.imag, jdxi.imag]])
            # least-squares step: real-valued symbols have a rank-1 Jacobian
            step, *_ = np.linalg.lstsq(jac, [-r.real, -r.imag], rcond=None)
            if not np.all(np.isfinite(step)) or np.linalg.norm(step) > 1e6:
                break
            x += float(step[0])
            xi += float(step[1])
        if not ok and abs(model.p0(x, xi) - z) > 1e-8:
            continue
        if model.domain_kind == "circle":
            x = float(np.mod(x, 2 * np.pi))
        if all(np.hypot(x - q.x, xi - q.xi) > 1e-4 for q in found):
            found.append(PhaseSpacePoint(x=x, xi=xi))
        if len(found) >= max_points:
            break
    return found
