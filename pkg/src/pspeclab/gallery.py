"""Model operators: Jordan block, harmonic oscillators, and the circle transport model.

Each constructor returns a :class:`DiscretizedOperator` carrying the dense
matrix, the semiclassical parameter h, the basis it was assembled in, and
(for the differential models) the phase-space symbol with exact derivatives.

Conventions
-----------
Hermite models use the h-scaled oscillator ladder: with
a e_n = sqrt(n) e_{n-1}, x = sqrt(h/2)(a + a†) and hD = -i sqrt(h/2)(a - a†),
so (hD)^2 + x^2 = diag((2n+1)h) exactly in this basis.  Fourier models on the
circle use e_k(x) = e^{ikx}/sqrt(2*pi) with k ascending, k = -(N-1)/2 .. (N-1)/2.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = [
    "SymbolModel",
    "DiscretizedOperator",
    "jordan_block",
    "selfadjoint_ho",
    "davies_ho",
    "hager_model",
    "basis_coverage",
    "make_operator",
    "get_symbol",
    "MODEL_NAMES",
]


@dataclass(frozen=True)
class SymbolModel:
    """A 1-D phase-space symbol with exact first/second partial derivatives.

    ``m`` is the order function (>= 1 everywhere) and ``z0`` an ellipticity
    anchor satisfying |p0(rho) - z0| >= m(rho)/C0.  ``domain_kind`` is
    "line" or "circle"; circle symbols are 2*pi-periodic in x.
    """

    name: str
    p0: Callable
    dx_p0: Callable
    dxi_p0: Callable
    dxx_p0: Callable
    dxxi_p0: Callable
    dxixi_p0: Callable
    m: Callable
    z0: complex
    domain_kind: str
    C0: float
    N0: float
    xi_symmetric: bool = False


@dataclass(frozen=True)
class DiscretizedOperator:
    """Dense matrix realization of a model operator at parameter h."""

    matrix: np.ndarray
    h: float
    basis: str  # hermite | fourier | canonical
    symbol: SymbolModel | None = None
    name: str = ""

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


def _quadratic_symbol(name: str, imag_potential: bool) -> SymbolModel:
    # p0 = xi^2 + x^2 (selfadjoint) or xi^2 + i x^2 (Davies rotated oscillator)
    c = 1j if imag_potential else 1.0
    return SymbolModel(
        name=name,
        p0=lambda x, xi: xi * xi + c * x * x,
        dx_p0=lambda x, xi: 2.0 * c * x,
        dxi_p0=lambda x, xi: 2.0 * xi + 0.0 * x,
        dxx_p0=lambda x, xi: 2.0 * c + 0.0 * x,
        dxxi_p0=lambda x, xi: 0.0 * x + 0.0 * xi,
        dxixi_p0=lambda x, xi: 2.0 + 0.0 * x,
        m=lambda x, xi: 1.0 + xi * xi + x * x,
        z0=-1.0 + 0.0j,
        domain_kind="line",
        C0=2.0,
        N0=2.0,
        xi_symmetric=True,
    )


HO_SYMBOL = _quadratic_symbol("ho", imag_potential=False)
DAVIES_SYMBOL = _quadratic_symbol("davies", imag_potential=True)

HAGER_SYMBOL = SymbolModel(
    name="hager",
    p0=lambda x, xi: xi + np.exp(-1j * x),
    dx_p0=lambda x, xi: -1j * np.exp(-1j * x) + 0.0 * xi,
    dxi_p0=lambda x, xi: 1.0 + 0.0 * x + 0.0 * xi,
    dxx_p0=lambda x, xi: -np.exp(-1j * x) + 0.0 * xi,
    dxxi_p0=lambda x, xi: 0.0 * x + 0.0 * xi,
    dxixi_p0=lambda x, xi: 0.0 * x + 0.0 * xi,
    m=lambda x, xi: 1.0 + np.abs(xi) + 0.0 * x,
    z0=2.0j,
    domain_kind="circle",
    C0=3.0,
    N0=1.0,
    xi_symmetric=False,
)


def jordan_block(N: int) -> DiscretizedOperator:
    """Nilpotent shift matrix with ones on the first superdiagonal."""
    if N < 1:
        raise ValueError("N must be >= 1")
    m = np.eye(N, k=1, dtype=complex)
    return DiscretizedOperator(matrix=m, h=1.0, basis="canonical", symbol=None, name="jordan")


def selfadjoint_ho(h: float, N: int) -> DiscretizedOperator:
    """(hD)^2 + x^2, exact in the h-scaled Hermite basis: diag((2n+1)h)."""
    if h <= 0:
        raise ValueError("h must be positive")
    if N < 1:
        raise ValueError("N must be >= 1")
    n = np.arange(N)
    m = np.diag(((2 * n + 1) * h).astype(complex))
    return DiscretizedOperator(matrix=m, h=h, basis="hermite", symbol=HO_SYMBOL, name="ho")


def davies_ho(h: float, N: int) -> DiscretizedOperator:
    """(hD)^2 + i x^2 in the h-scaled Hermite basis (pentadiagonal, complex symmetric).

    Exact Galerkin entries:  (hD)^2 has diagonal (h/2)(2n+1) and +-2
    off-diagonals -(h/2)sqrt((n+1)(n+2)); x^2 the same with a + sign.
    """
    if h <= 0:
        raise ValueError("h must be positive")
    if N < 4:
        raise ValueError("N must be >= 4")
    n = np.arange(N)
    diag = (h / 2.0) * (2 * n + 1) * (1.0 + 1.0j)
    off = (h / 2.0) * np.sqrt((n[:-2] + 1.0) * (n[:-2] + 2.0)) * (-1.0 + 1.0j)
    m = np.diag(diag) + np.diag(off, 2) + np.diag(off, -2)
    return DiscretizedOperator(matrix=m, h=h, basis="hermite", symbol=DAVIES_SYMBOL, name="davies")


def hager_model(h: float, N: int) -> DiscretizedOperator:
    """hD_x + exp(-ix) on the circle, in the Fourier basis with k ascending.

    Multiplication by e^{-ix} lowers the frequency by one, so the matrix is
    diag(h*k) plus ones on the first superdiagonal: upper triangular, and the
    unperturbed spectrum is exactly {h*k}.
    """
    if h <= 0:
        raise ValueError("h must be positive")
    if N < 1 or N % 2 == 0:
        raise ValueError("N must be a positive odd integer")
    k = np.arange(-(N - 1) // 2, (N - 1) // 2 + 1)
    m = np.diag((h * k).astype(complex)) + np.eye(N, k=1, dtype=complex)
    return DiscretizedOperator(matrix=m, h=h, basis="fourier", symbol=HAGER_SYMBOL, name="hager")


def fourier_wavenumbers(N: int) -> np.ndarray:
    """Ascending wavenumbers k for an odd Fourier truncation of size N."""
    return np.arange(-(N - 1) // 2, (N - 1) // 2 + 1)


def _preimage_samples(symbol: SymbolModel, omega: tuple, resolution: int = 801):
    """Sample points of p0^{-1}(Omega) for a rectangle Omega in C."""
    re_min, re_max, im_min, im_max = omega
    zc = complex(0.5 * (re_min + re_max), 0.5 * (im_min + im_max))
    if symbol.domain_kind == "circle":
        l_xi = max(abs(zc), abs(re_min), abs(re_max)) + 3.0
        x = np.linspace(0.0, 2 * np.pi, resolution, endpoint=False)
        xi = np.linspace(-l_xi, l_xi, resolution)
    else:
        l = np.sqrt(symbol.C0 * (abs(zc - symbol.z0) + abs(re_max) + abs(im_max) + 2.0)) + 2.0
        x = np.linspace(-l, l, resolution)
        xi = np.linspace(-l, l, resolution)
    xx, xxi = np.meshgrid(x, xi, indexing="ij")
    p = symbol.p0(xx, xxi)
    mask = (p.real >= re_min) & (p.real <= re_max) & (p.imag >= im_min) & (p.imag <= im_max)
    return xx[mask], xxi[mask]


def basis_coverage(symbol: SymbolModel, basis: str, N: int, h: float, omega: tuple,
                   resolution: int = 801) -> bool:
    """Whether the first N basis modes energetically cover p0^{-1}(Omega).

    Hermite: require (2N+1)h >= 2 * max m on the preimage.  Fourier: require
    the frequency window h(N-1)/2 to reach max |xi| on the preimage.  An empty
    preimage is trivially covered.
    """
    xs, xis = _preimage_samples(symbol, omega, resolution)
    if xs.size == 0:
        return True
    if basis == "hermite":
        return (2 * N + 1) * h >= 2.0 * float(np.max(symbol.m(xs, xis)))
    if basis == "fourier":
        return h * (N - 1) / 2.0 >= float(np.max(np.abs(xis)))
    raise ValueError(f"unknown basis {basis!r}")


def coverage_dimension(symbol: SymbolModel, basis: str, h: float, omega: tuple) -> int:
    """Smallest truncation dimension that passes :func:`basis_coverage`."""
    xs, xis = _preimage_samples(symbol, omega)
    if xs.size == 0:
        return 4
    if basis == "hermite":
        mmax = float(np.max(symbol.m(xs, xis)))
        return int(np.ceil((2.0 * mmax / h - 1.0) / 2.0)) + 1
    if basis == "fourier":
        ximax = float(np.max(np.abs(xis)))
        n = int(np.ceil(2.0 * ximax / h)) + 1
        return n if n % 2 == 1 else n + 1
    raise ValueError(f"unknown basis {basis!r}")


MODEL_NAMES = ("jordan", "ho", "davies", "hager")

_SYMBOLS = {"ho": HO_SYMBOL, "davies": DAVIES_SYMBOL, "hager": HAGER_SYMBOL}


def get_symbol(name: str) -> SymbolModel:
    try:
        return _SYMBOLS[name]
    except KeyError:
        raise ValueError(f"model {name!r} has no symbol (choose from {sorted(_SYMBOLS)})") from None


def make_operator(name: str, N: int, h: float = 1.0) -> DiscretizedOperator:
    """CLI-facing constructor keyed by model name."""
    if name == "jordan":
        return jordan_block(N)
    if name == "ho":
        return selfadjoint_ho(h, N)
    if name == "davies":
        return davies_ho(h, N)
    if name == "hager":
        return hager_model(h, N)
    raise ValueError(f"unknown model {name!r} (choose from {MODEL_NAMES})")
