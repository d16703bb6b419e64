"""Explicit quasimodes: exact Jordan-block vectors and order-0 WKB Gaussian beams.

A beam centered at rho0 = (x0, xi0) on the level set p0(rho0) = z has the
form u(x) = chi(x - x0) exp(i(xi0 (x-x0) + Phi (x-x0)^2 / 2)/h) with phase
Hessian Phi = -d_x p0 / d_xi p0 at the center.  On the branch where
(1/2i){pbar0, p0} < 0 one gets Im Phi = -bracket/|d_xi p0|^2 > 0, so the
beam is L2-normalizable and concentrates at rho0 as h -> 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .gallery import DiscretizedOperator, SymbolModel, fourier_wavenumbers
from .symbols import PhaseSpacePoint, half_imag_bracket, level_set_sample, BRACKET_VANISH_TOL

__all__ = [
    "NoAdmissibleCenterError",
    "TurningPointError",
    "GaussianBeam",
    "QuasimodeReport",
    "jordan_quasimode",
    "beam_center",
    "build_beam",
    "expand_in_basis",
    "beam_residual",
    "residual_decay",
    "rank_one_certificate",
]


class NoAdmissibleCenterError(ValueError):
    """No level-set point with the required bracket sign was found."""


class TurningPointError(ValueError):
    """d_xi p0 vanishes at the requested center; the WKB normal form breaks down."""


def jordan_quasimode(N: int, z: complex):
    """The geometric vector e_+ = (1, z, ..., z^{N-1}) and its exact residual |z|^N.

    (P_N - z) e_+ has a single nonzero entry -z^N in the last slot, so the
    absolute residual is exactly |z|^N.
    """
    z = complex(z)
    if abs(z) >= 1:
        raise ValueError("need |z| < 1")
    e = np.zeros(N, dtype=complex)
    e[0] = 1.0
    if z != 0:
        e = z ** np.arange(N, dtype=complex)
    residual = abs(z) ** N
    return e, residual


def _smooth_bump(s: np.ndarray) -> np.ndarray:
    """C_c^infinity bump on (-1, 1), equal to 1 at 0."""
    out = np.zeros_like(np.asarray(s, dtype=float))
    m = np.abs(s) < 1.0
    out[m] = np.exp(1.0 - 1.0 / (1.0 - s[m] ** 2))
    return out


@dataclass(frozen=True)
class GaussianBeam:
    """Order-0 WKB beam with quadratic phase and a fixed smooth cutoff."""

    model: SymbolModel
    z: complex
    x0: float
    xi0: float
    phi: complex  # phase Hessian, Im phi > 0
    h: float
    cutoff_halfwidth: float
    branch: str  # plus | minus

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        d = np.asarray(x, dtype=float) - self.x0
        chi = _smooth_bump(d / self.cutoff_halfwidth)
        return chi * np.exp(1j * (self.xi0 * d + 0.5 * self.phi * d * d) / self.h)


def beam_center(model: SymbolModel, z: complex, sign: str = "plus") -> PhaseSpacePoint:
    """A level-set point with the required bracket sign (Lambda_+ : bracket < 0).

    Deterministic choice: the admissible point of smallest |rho|, ties broken
    lexicographically by (x, xi).
    """
    if sign not in ("plus", "minus"):
        raise ValueError("sign must be 'plus' or 'minus'")
    candidates = []
    for rho in level_set_sample(model, z):
        b = half_imag_bracket(model, rho)
        if sign == "plus" and b < -BRACKET_VANISH_TOL:
            candidates.append(rho)
        elif sign == "minus" and b > BRACKET_VANISH_TOL:
            candidates.append(rho)
    if not candidates:
        raise NoAdmissibleCenterError(
            f"no admissible center for z={z} on the {sign} branch at this resolution")
    candidates.sort(key=lambda r: (round(r.x * r.x + r.xi * r.xi, 9), r.x, r.xi))
    return candidates[0]


def build_beam(model: SymbolModel, z: complex, center: PhaseSpacePoint,
               h: float, branch: str = "plus") -> GaussianBeam:
    """Beam at ``center`` with Phi solving the linearized eikonal equation."""
    dxi = complex(model.dxi_p0(center.x, center.xi))
    if abs(dxi) < 1e-12:
        raise TurningPointError(f"d_xi p0 = 0 at {center}: turning point; unsupported")
    dx = complex(model.dx_p0(center.x, center.xi))
    phi = -dx / dxi
    if phi.imag <= 0:
        raise ValueError(
            f"Im Phi = {phi.imag} <= 0 at {center}; wrong bracket branch for a beam")
    halfwidth = 1.0 if model.domain_kind == "line" else min(1.0, np.pi / 2)
    return GaussianBeam(model=model, z=complex(z), x0=center.x, xi0=center.xi,
                        phi=phi, h=h, cutoff_halfwidth=halfwidth, branch=branch)


def _hermite_functions(N: int, y: np.ndarray) -> np.ndarray:
    """Normalized Hermite functions phi_0..phi_{N-1} on points y, stable recurrence."""
    out = np.empty((N, y.size))
    out[0] = np.pi ** -0.25 * np.exp(-y * y / 2.0)
    if N > 1:
        out[1] = np.sqrt(2.0) * y * out[0]
    for n in range(1, N - 1):
        out[n + 1] = np.sqrt(2.0 / (n + 1)) * y * out[n] - np.sqrt(n / (n + 1.0)) * out[n - 1]
    return out


def expand_in_basis(beam: GaussianBeam, op: DiscretizedOperator) -> np.ndarray:
    """Coefficients of the beam in the operator's basis, by dense quadrature.

    Quadrature step resolves both the beam oscillation (frequency xi0/h) and
    the fastest basis mode; roughly 8+ points per wavelength.
    """
    h = beam.h
    n = op.dim
    if op.basis == "hermite":
        l = np.sqrt((2 * n + 1) * h) + beam.cutoff_halfwidth + abs(beam.x0) + 1.0
        dx = min(np.pi * h / 10.0, 0.02)
        x = np.arange(-l, l, dx)
        u = beam.evaluate(x)
        psi = _hermite_functions(n, x / np.sqrt(h)) * h ** -0.25
        return (psi * u[None, :]).sum(axis=1) * dx
    if op.basis == "fourier":
        kmax = (n - 1) // 2
        npts = max(4096, 8 * kmax, int(16 * (abs(beam.xi0) / h + abs(beam.phi) / h)))
        x = np.linspace(0.0, 2 * np.pi, npts, endpoint=False)
        # evaluate on the periodized lift nearest to x0
        xs = x + 2 * np.pi * np.round((beam.x0 - x) / (2 * np.pi))
        u = beam.evaluate(xs)
        k = fourier_wavenumbers(n)
        ph = np.exp(-1j * np.outer(k, x)) / np.sqrt(2 * np.pi)
        return ph @ u * (2 * np.pi / npts)
    raise ValueError(f"cannot expand a beam in basis {op.basis!r}")


def beam_residual(beam: GaussianBeam, op: DiscretizedOperator) -> float:
    """Relative residual ||(P - z) u|| / ||u|| of the beam sampled into the basis."""
    c = expand_in_basis(beam, op)
    nc = np.linalg.norm(c)
    if nc == 0:
        raise ValueError("beam has no mass in the truncated basis")
    r = (op.matrix @ c) - beam.z * c
    return float(np.linalg.norm(r) / nc)


@dataclass
class QuasimodeReport:
    """Residuals of one beam family over a list of h, with the fitted decay slope."""

    z: complex
    h_list: list
    residuals: list
    slope: float
    truncation_flags: list = field(default_factory=list)
    centers: list = field(default_factory=list)

    @property
    def truncation_dominated(self) -> bool:
        return any(self.truncation_flags)


def residual_decay(model_family, z: complex, h_list, sign: str = "plus",
                   doubled_family=None) -> QuasimodeReport:
    """Relative beam residuals over h and the fitted log-log slope.

    ``model_family`` maps h to a DiscretizedOperator; if ``doubled_family``
    is given (same family at doubled truncation), each residual is flagged as
    truncation-dominated when doubling N moves it by more than 10%.
    """
    h_list = list(h_list)
    residuals = []
    flags = []
    centers = []
    for h in h_list:
        op = model_family(h)
        center = beam_center(op.symbol, z, sign)
        beam = build_beam(op.symbol, z, center, h, branch=sign)
        r = beam_residual(beam, op)
        flag = False
        if doubled_family is not None:
            r2 = beam_residual(beam, doubled_family(h))
            flag = abs(r2 - r) > 0.1 * r
        residuals.append(r)
        flags.append(flag)
        centers.append(center)
    slope = float(np.polyfit(np.log(h_list), np.log(residuals), 1)[0])
    return QuasimodeReport(z=complex(z), h_list=h_list, residuals=residuals,
                           slope=slope, truncation_flags=flags, centers=centers)


def rank_one_certificate(op: DiscretizedOperator, z: complex, u: np.ndarray):
    """Rank-one perturbation planting z in the spectrum: dQ = -r u*/||u||^2.

    Returns (dQ, ||dQ||); with r = (P - z)u the matrix P + dQ has eigenvalue
    z with eigenvector u, and ||dQ|| = ||r||/||u|| equals the relative
    residual of u.
    """
    u = np.asarray(u, dtype=complex)
    r = op.matrix @ u - z * u
    nu2 = np.vdot(u, u).real
    dq = -np.outer(r, u.conj()) / nu2
    return dq, float(np.linalg.norm(r) / np.sqrt(nu2))
