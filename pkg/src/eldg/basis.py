"""Legendre modal basis, Gauss-Legendre rules and transported test functions."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from numpy.polynomial import legendre as npleg


def n_quad(k: int) -> int:
    """Gauss points per (sub)interval used by every volume integral."""
    return max(k + 3, 5)


@lru_cache(maxsize=None)
def _gauss(n: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = npleg.leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


@dataclass(frozen=True)
class QuadratureRule:
    """n-point Gauss-Legendre rule on [-1, 1]; exact to degree 2n - 1."""

    n: int
    nodes: np.ndarray = field(init=False, repr=False)
    weights: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("quadrature needs at least one point")
        x, w = _gauss(self.n)
        object.__setattr__(self, "nodes", x)
        object.__setattr__(self, "weights", w)

    @property
    def exactness(self) -> int:
        return 2 * self.n - 1

    def integrate(self, f, lo: float = -1.0, hi: float = 1.0) -> float:
        half = 0.5 * (hi - lo)
        x = 0.5 * (hi + lo) + half * self.nodes
        return half * float(np.dot(self.weights, f(x)))


def legendre_table(k: int, xi) -> np.ndarray:
    """Values P_0..P_k at ``xi``; shape ``xi.shape + (k + 1,)``."""
    xi = np.asarray(xi, dtype=float)
    out = np.empty(xi.shape + (k + 1,))
    out[..., 0] = 1.0
    if k >= 1:
        out[..., 1] = xi
    for m in range(1, k):
        out[..., m + 1] = ((2 * m + 1) * xi * out[..., m] - m * out[..., m - 1]) / (m + 1)
    return out


def legendre_dtable(k: int, xi) -> np.ndarray:
    """Derivatives P_0'..P_k' with respect to the reference coordinate."""
    xi = np.asarray(xi, dtype=float)
    p = legendre_table(k, xi)
    out = np.zeros_like(p)
    # P'_{m+1} = (2m+1) P_m + P'_{m-1}
    for m in range(0, k):
        out[..., m + 1] = (2 * m + 1) * p[..., m] + (out[..., m - 1] if m >= 1 else 0.0)
    return out


@dataclass(frozen=True)
class ModalBasis:
    """Unnormalized Legendre modes (P_m(1) = 1) of degree ``k`` on [-1, 1].

    ``mode_mass[m]`` is the integral of P_m^2 over the reference cell, so the
    mass matrix of a physical cell of width w is ``diag(w / 2 * mode_mass)``.
    """

    k: int

    def __post_init__(self):
        if self.k < 0:
            raise ValueError("degree must be non-negative")

    @property
    def n_modes(self) -> int:
        return self.k + 1

    @property
    def mode_mass(self) -> np.ndarray:
        m = np.arange(self.k + 1)
        return 2.0 / (2 * m + 1)

    def eval(self, mode: int, xi):
        if not 0 <= mode <= self.k:
            raise ValueError(f"mode {mode} outside 0..{self.k}")
        return legendre_table(self.k, xi)[..., mode]

    def eval_all(self, xi) -> np.ndarray:
        return legendre_table(self.k, xi)

    def deriv_all(self, xi) -> np.ndarray:
        return legendre_dtable(self.k, xi)

    def vandermonde(self, xi) -> np.ndarray:
        return legendre_table(self.k, xi)


def basis_eval(basis: ModalBasis, mode: int, xi: float) -> float:
    if not -1.0 - 1e-14 <= xi <= 1.0 + 1e-14:
        raise ValueError(f"reference coordinate {xi} outside [-1, 1]")
    return float(basis.eval(mode, xi))


def _ref_coord(elem, x: float, t: float) -> tuple[float, float]:
    lo, hi = elem.interval_at(t)
    w = hi - lo
    if not lo - 1e-12 * w <= x <= hi + 1e-12 * w:
        raise ValueError(f"x={x} outside element interval [{lo}, {hi}] at t={t}")
    return 2.0 * (x - lo) / w - 1.0, w


def test_function_eval(elem, mode: int, x: float, t: float, k: int | None = None) -> float:
    """Adjoint-transported test function psi_{j,mode}(x, t) on a dynamic element.

    The test function keeps its shape in the frame that maps the moving
    interval linearly onto the background cell, so it is the Legendre mode
    evaluated at the mapped reference coordinate.
    """
    xi, _ = _ref_coord(elem, x, t)
    k = mode if k is None else k
    return float(legendre_table(max(k, mode), xi)[mode])


def test_function_dx(elem, mode: int, x: float, t: float) -> float:
    xi, w = _ref_coord(elem, x, t)
    return float(legendre_dtable(mode, xi)[mode] * 2.0 / w)


# keep pytest from collecting these when imported into test modules
test_function_eval.__test__ = False
test_function_dx.__test__ = False
