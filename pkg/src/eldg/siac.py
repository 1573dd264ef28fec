"""Symmetric B-spline (SIAC) post-processing of DG fields on uniform meshes.

The kernel is a combination of ``2k + 1`` integer-shifted central B-splines of
order ``k + 1`` whose coefficients make the convolution reproduce polynomials
of degree ``2k``. Convolution against a P^k field is done exactly by splitting
each cell at the kernel breakpoints.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.interpolate import BSpline

from .basis import _gauss, legendre_table
from .projection import DGField


@dataclass(frozen=True)
class SiacKernel:
    k: int
    h: float = 1.0

    @property
    def n_splines(self) -> int:
        return 2 * self.k + 1

    @property
    def order(self) -> int:
        return self.k + 1

    @property
    def shifts(self) -> np.ndarray:
        return np.arange(-self.k, self.k + 1)

    @cached_property
    def _spline(self) -> BSpline:
        knots = np.arange(self.order + 1) - 0.5 * self.order
        return BSpline.basis_element(knots, extrapolate=False)

    def bspline(self, z) -> np.ndarray:
        v = self._spline(np.asarray(z, dtype=float))
        return np.nan_to_num(v, nan=0.0)

    @property
    def half_support(self) -> float:
        return self.k + 0.5 * self.order

    @cached_property
    def breakpoints(self) -> np.ndarray:
        """Kernel breakpoints in units of ``h``."""
        base = np.arange(self.order + 1) - 0.5 * self.order
        return np.unique((base[None, :] + self.shifts[:, None]).ravel())

    @cached_property
    def coefficients(self) -> np.ndarray:
        """Shift weights making the kernel moments ``delta_{l0}`` for ``l <= 2k``."""
        xg, wg = _gauss(self.k + 2)
        edges = np.arange(self.order + 1) - 0.5 * self.order
        lo, hi = edges[:-1], edges[1:]
        z = 0.5 * (lo + hi)[:, None] + 0.5 * (hi - lo)[:, None] * xg
        w = 0.5 * (hi - lo)[:, None] * wg
        b = self.bspline(z)
        powers = np.arange(2 * self.k + 1)
        # moment of psi(z - g) times z^l = sum over pieces of psi(z) (z + g)^l
        zz = z[None, :, :] + self.shifts[:, None, None]
        M = np.einsum("gpq,pq,lgpq->lg", np.ones_like(zz), b * w,
                      zz[None] ** powers[:, None, None, None])
        rhs = np.zeros(powers.size)
        rhs[0] = 1.0
        return np.linalg.solve(M, rhs)

    def __call__(self, z) -> np.ndarray:
        """Kernel value at ``z`` in units of ``h``."""
        z = np.asarray(z, dtype=float)
        return np.einsum("g,g...->...", self.coefficients,
                         self.bspline(z[None] - self.shifts.reshape((-1,) + (1,) * z.ndim)))

    def moment(self, power: int) -> float:
        edges = self.breakpoints
        xg, wg = _gauss(self.k + 2 + power)
        lo, hi = edges[:-1], edges[1:]
        z = 0.5 * (lo + hi)[:, None] + 0.5 * (hi - lo)[:, None] * xg
        return float(np.sum(self(z) * z ** power * 0.5 * (hi - lo)[:, None] * wg))


def siac_stencil(kernel: SiacKernel, xi: np.ndarray, degree: int | None = None):
    """Weights ``C[p, l, m] = 1/2 int K((xi_p - eta)/2 - l) P_m(eta) d eta``.

    Returns ``(offsets, C)``: the filtered value at local coordinate ``xi_p``
    of cell ``j`` is ``sum_{l, m} C[p, l, m] c_{j + l, m}``.
    """
    k = kernel.k if degree is None else degree
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    L = int(np.ceil(kernel.half_support)) + 1
    offsets = np.arange(-L, L + 1)
    # breakpoints in eta for every (p, l): eta = xi - 2 (z_b + l)
    zb = kernel.breakpoints
    cuts = xi[:, None, None] - 2.0 * (zb[None, None, :] + offsets[None, :, None])
    cuts = np.clip(cuts, -1.0, 1.0)
    cuts = np.sort(np.concatenate([cuts, np.broadcast_to([-1.0, 1.0], cuts.shape[:2] + (2,))],
                                  axis=-1), axis=-1)
    lo, hi = cuts[..., :-1], cuts[..., 1:]
    xg, wg = _gauss(kernel.k + k + 2)
    eta = 0.5 * (lo + hi)[..., None] + 0.5 * (hi - lo)[..., None] * xg
    w = 0.5 * (hi - lo)[..., None] * wg
    z = 0.5 * (xi[:, None, None, None] - eta) - offsets[None, :, None, None]
    Kz = kernel(z)
    P = legendre_table(k, eta)
    C = 0.5 * np.einsum("plsq,plsq,plsqm->plm", Kz, w, P)
    return offsets, C


class SiacFiltered:
    """Point-evaluable filtered version of a periodic DG field."""

    def __init__(self, field: DGField):
        mesh = field.mesh
        if not mesh.is_uniform:
            raise NotImplementedError("SIAC filtering needs a uniform mesh")
        self.field = field
        self.kernel = SiacKernel(field.degree, mesh.dx)

    def at_local(self, xi) -> np.ndarray:
        """Filtered values ``(N, len(xi), n)`` at local coordinates ``xi`` of every cell."""
        offsets, C = siac_stencil(self.kernel, xi, self.field.degree)
        c = self.field.coeffs
        N = c.shape[0]
        idx = (np.arange(N)[:, None] + offsets[None, :]) % N
        return np.einsum("plm,jlcm->jpc", C, c[idx])

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        mesh = self.field.mesh
        r = mesh.domain_lo + np.mod(x - mesh.domain_lo, mesh.length)
        j = np.clip(((r - mesh.domain_lo) // mesh.dx).astype(int), 0, mesh.n_cells - 1)
        xi = 2.0 * (r - mesh.nodes[j]) / mesh.dx - 1.0
        offsets, C = siac_stencil(self.kernel, xi.ravel(), self.field.degree)
        c = self.field.coeffs
        idx = (j.ravel()[:, None] + offsets[None, :]) % mesh.n_cells
        out = np.einsum("plm,plcm->pc", C, c[idx])
        return out.reshape(x.shape + (c.shape[1],))


def siac_filter(field: DGField) -> SiacFiltered:
    return SiacFiltered(field)
