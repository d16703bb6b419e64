"""Dense complex spectral primitives: eigenvalues, singular values, resolvent norms.

Everything here operates on square complex numpy arrays.  The repeated
resolvent-norm queries of a grid scan are accelerated by a one-time Schur
factorization followed by inverse iteration on the triangular factor; the
direct SVD path is kept as the slow reference.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

__all__ = [
    "EigenConvergenceError",
    "SingularResolventError",
    "SchurForm",
    "as_complex_matrix",
    "eigenvalues",
    "smallest_singular_value",
    "operator_norm",
    "resolvent_norm_at",
    "schur_form",
]

# sigma_min below this is reported as a singular resolvent
_SINGULAR_FLOOR = 1e-300


class EigenConvergenceError(RuntimeError):
    """QR eigen-iteration failed to converge within the LAPACK iteration cap."""


class SingularResolventError(ArithmeticError):
    """sigma_min(A - z) underflowed; the resolvent norm is not representable."""


def as_complex_matrix(a) -> np.ndarray:
    """Validate and return ``a`` as a square, finite, complex double matrix."""
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m.view(float))):
        raise ValueError("matrix has non-finite entries")
    return m


@dataclass(frozen=True)
class SchurForm:
    """Unitary/triangular factorization A = U T U* with T upper triangular."""

    u: np.ndarray
    t: np.ndarray

    @property
    def dim(self) -> int:
        return self.t.shape[0]


def schur_form(a) -> SchurForm:
    """Complex Schur factorization of ``a``, shareable across scan workers."""
    m = as_complex_matrix(a)
    try:
        t, u = sla.schur(m, output="complex")
    except sla.LinAlgError as exc:  # pragma: no cover - LAPACK rarely fails here
        raise EigenConvergenceError(str(exc)) from exc
    return SchurForm(u=u, t=t)


def eigenvalues(a) -> np.ndarray:
    """Eigenvalues of ``a`` with algebraic multiplicity.

    Returned sorted lexicographically by (real part, imaginary part) so that
    repeated runs and different backends produce the same ordering.
    """
    m = as_complex_matrix(a)
    try:
        ev = np.linalg.eigvals(m)
    except np.linalg.LinAlgError as exc:
        raise EigenConvergenceError(str(exc)) from exc
    return ev[np.lexsort((ev.imag, ev.real))]


def smallest_singular_value(a) -> float:
    """Smallest singular value s_dim(A), zero iff A is numerically singular."""
    m = as_complex_matrix(a)
    return float(np.linalg.svd(m, compute_uv=False)[-1])


def operator_norm(a) -> float:
    """Largest singular value of A."""
    m = as_complex_matrix(a)
    return float(np.linalg.svd(m, compute_uv=False)[0])


def _sigma_min_triangular(r: np.ndarray, tol: float = 1e-13, maxit: int = 500) -> float:
    """sigma_min of an upper-triangular matrix by inverse iteration.

    Power iteration on (R R*)^{-1} with a fixed deterministic start vector;
    each step is two triangular solves.  Falls back to a dense SVD when the
    diagonal is (nearly) degenerate, where the solves would be unstable.
    """
    n = r.shape[0]
    d = np.abs(np.diagonal(r))
    scale = max(np.abs(r).max(), 1.0)
    if d.min() <= 1e-16 * scale:
        return float(np.linalg.svd(r, compute_uv=False)[-1])
    v = np.cos(np.arange(1, n + 1)).astype(complex)
    v /= np.linalg.norm(v)
    lam_old = 0.0
    lam = 0.0
    for _ in range(maxit):
        try:
            y = sla.solve_triangular(r, v, lower=False, trans="C")
            w = sla.solve_triangular(r, y, lower=False)
        except ValueError:
            # the solve overflowed: R is numerically singular
            return float(np.linalg.svd(r, compute_uv=False)[-1])
        lam = np.linalg.norm(w)
        if not np.isfinite(lam) or lam == 0.0:
            return float(np.linalg.svd(r, compute_uv=False)[-1])
        v = w / lam
        if abs(lam - lam_old) <= tol * lam:
            break
        lam_old = lam
    return float(1.0 / np.sqrt(lam))


def resolvent_norm_at(a, z: complex, schur: SchurForm | None = None) -> float:
    """Resolvent norm ||(A - z)^{-1}|| = 1 / sigma_min(A - z).

    When a Schur form of ``a`` is supplied, sigma_min is evaluated on the
    shifted triangular factor (unitarily equivalent), which turns every
    query into O(dim^2) triangular solves instead of a fresh SVD.
    """
    m = as_complex_matrix(a)
    n = m.shape[0]
    if schur is not None:
        if schur.dim != n:
            raise ValueError("Schur form dimension does not match the matrix")
        smin = _sigma_min_triangular(schur.t - z * np.eye(n))
    else:
        smin = smallest_singular_value(m - z * np.eye(n))
    if smin < _SINGULAR_FLOOR:
        raise SingularResolventError(f"sigma_min underflow at z={z}")
    return 1.0 / smin
