"""L2 projection of DG fields between overlapping periodic meshes.

The overlap of a source mesh with a destination mesh is built by merging both
node sets inside one period of the destination frame. With ``Ns`` source and
``Nd`` destination cells this always gives ``Ns + Nd`` subintervals (some may
have zero length), which lets a whole batch of destination meshes share one
array layout.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .basis import _gauss, legendre_table, n_quad
from .mesh import Mesh1D, UpstreamMesh


@dataclass(eq=False)
class DGField:
    """Piecewise P^k field with coefficients of shape ``(N, n_components, k + 1)``."""

    mesh: Mesh1D
    coeffs: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=float)
        if self.coeffs.ndim == 2:
            self.coeffs = self.coeffs[:, None, :]
        if self.coeffs.ndim != 3 or self.coeffs.shape[0] != self.mesh.n_cells:
            raise ValueError(
                f"coefficients {self.coeffs.shape} do not match {self.mesh.n_cells} cells"
            )

    @property
    def degree(self) -> int:
        return self.coeffs.shape[-1] - 1

    @property
    def n_components(self) -> int:
        return self.coeffs.shape[1]

    def copy(self, coeffs=None, time=None) -> "DGField":
        return DGField(self.mesh, self.coeffs.copy() if coeffs is None else coeffs,
                       self.time if time is None else time)

    def cell_means(self) -> np.ndarray:
        return self.coeffs[:, :, 0]

    def __call__(self, x) -> np.ndarray:
        """Point values (periodic lookup); shape ``x.shape + (n_components,)``."""
        x = np.asarray(x, dtype=float)
        m = self.mesh
        r = m.domain_lo + np.mod(x - m.domain_lo, m.length)
        j = np.clip(np.searchsorted(m.nodes, r, side="right") - 1, 0, m.n_cells - 1)
        xi = 2.0 * (r - m.nodes[j]) / m.widths[j] - 1.0
        P = legendre_table(self.degree, xi)
        return np.einsum("...ck,...k->...c", self.coeffs[j], P)


def project_function(mesh: Mesh1D, func, k: int, time: float = 0.0, nq: int | None = None) -> DGField:
    """L2 projection of ``func(x) -> (..., n)`` or scalar-valued onto P^k cells."""
    nq = nq or max(n_quad(k), 2 * k + 4)
    xg, wg = _gauss(nq)
    x = mesh.centers[:, None] + 0.5 * mesh.widths[:, None] * xg
    v = np.asarray(func(x), dtype=float)
    if v.ndim == 2:
        v = v[..., None]
    P = legendre_table(k, xg)
    mom = 0.5 * np.einsum("jqc,qk,q->jck", v, P, wg)
    coeffs = mom * (2 * np.arange(k + 1) + 1)
    return DGField(mesh, coeffs, time)


class Overlap:
    """Subinterval decomposition of a batch of destination meshes.

    ``dst_nodes`` has shape ``batch + (Nd + 1,)``; every array attribute has
    shape ``batch + (Ns + Nd,)``.
    """

    def __init__(self, src_nodes: np.ndarray, dst_nodes: np.ndarray, period: float):
        src_nodes = np.asarray(src_nodes, dtype=float)
        d = np.asarray(dst_nodes, dtype=float)
        self.src_nodes = src_nodes
        self.dst_nodes = d
        self.period = period
        self.batch = d.shape[:-1]
        ns, nd = src_nodes.size - 1, d.shape[-1] - 1
        self.ns, self.nd = ns, nd

        d0 = d[..., :1]
        s_in = d0 + np.mod(src_nodes[:-1] - d0, period)
        pts = np.concatenate([d[..., :-1], s_in], axis=-1)
        order = np.argsort(pts, axis=-1, kind="stable")
        lo = np.take_along_axis(pts, order, axis=-1)
        hi = np.concatenate([lo[..., 1:], d[..., -1:]], axis=-1)
        hi = np.maximum(hi, lo)
        is_dst = order < nd
        self.lo, self.hi = lo, hi
        self.dst = np.cumsum(is_dst, axis=-1) - 1
        mid = 0.5 * (lo + hi)
        q = mid - src_nodes[0]
        shift = np.floor(q / period)
        r = src_nodes[0] + (q - shift * period)
        self.src = np.clip(np.searchsorted(src_nodes, r, side="right") - 1, 0, ns - 1)
        self.shift = shift.astype(int)
        self.starts = np.flatnonzero(is_dst.ravel())

    @property
    def n_sub(self) -> int:
        return self.ns + self.nd

    def lengths(self) -> np.ndarray:
        return self.hi - self.lo

    def reduce(self, vals: np.ndarray) -> np.ndarray:
        """Sum per-subinterval values into destination cells.

        ``vals`` may carry a larger leading line batch than a shared geometry
        whose own leading batch extent is 1.
        """
        nb = len(self.batch)
        if vals.shape[:nb] != self.batch:
            if self.batch[0] != 1:
                raise ValueError(f"values {vals.shape} do not match overlap batch {self.batch}")
            out = self.reduce(np.moveaxis(vals, 0, -1)[None])
            return np.moveaxis(out[0], -1, 0)
        tail = vals.shape[nb + 1:]
        flat = vals.reshape((-1,) + tail)
        out = np.add.reduceat(flat, self.starts, axis=0)
        return out.reshape(self.batch + (self.nd,) + tail)

    def quadrature(self, nq: int) -> "SubQuad":
        return SubQuad(self, nq)


class SubQuad:
    """Gauss points on every subinterval of an :class:`Overlap`."""

    def __init__(self, ov: Overlap, nq: int):
        xg, wg = _gauss(nq)
        half = 0.5 * (ov.hi - ov.lo)
        mid = 0.5 * (ov.hi + ov.lo)
        self.ov = ov
        self.x = mid[..., None] + half[..., None] * xg
        self.w = half[..., None] * wg
        sn = ov.src_nodes
        src_lo = sn[ov.src]
        src_h = sn[ov.src + 1] - src_lo
        self.xi_src = 2.0 * (self.x - (ov.shift * ov.period + src_lo)[..., None]) / src_h[..., None] - 1.0
        d = ov.dst_nodes
        d_lo = np.take_along_axis(d, ov.dst, axis=-1)
        d_w = np.take_along_axis(np.diff(d, axis=-1), ov.dst, axis=-1)
        self.xi_dst = 2.0 * (self.x - d_lo[..., None]) / d_w[..., None] - 1.0

    def eval_source(self, coeffs: np.ndarray) -> np.ndarray:
        """Values of a source-mesh field at the points.

        ``coeffs`` has shape ``(Bu, Ns, n, K)`` with ``Bu`` equal to the first
        batch extent or 1; returns ``batch + (S, nq, n)``.
        """
        ov = self.ov
        k = coeffs.shape[-1] - 1
        if coeffs.shape[0] == 1:
            sub = coeffs[0][ov.src]
        elif ov.src.shape[0] == 1:
            sub = coeffs[:, ov.src[0]]
        else:
            b = np.arange(coeffs.shape[0]).reshape((-1,) + (1,) * (ov.src.ndim - 1))
            sub = coeffs[b, ov.src]
        P = legendre_table(k, self.xi_src)
        return np.einsum("...sck,...sqk->...sqc", sub, P)

    def test_moments(self, vals: np.ndarray, k: int) -> np.ndarray:
        """Integrals of ``vals`` (``batch + (S, nq) + tail``) against destination modes."""
        P = legendre_table(k, self.xi_dst)
        nb = len(self.ov.batch)
        wP = self.w[..., None] * P
        tail = vals.shape[nb + 2:]
        v = vals.reshape(vals.shape[:nb + 2] + (-1,))
        per_sub = np.einsum("...qt,...qk->...tk", v, wP)
        per_sub = per_sub.reshape(per_sub.shape[:nb + 1] + tail + (k + 1,))
        return self.ov.reduce(per_sub)


def moments_to_coeffs(moments: np.ndarray, widths: np.ndarray) -> np.ndarray:
    """Divide mode moments (last axis) by the Legendre mass ``w / (2m + 1)``."""
    k = moments.shape[-1] - 1
    scale = (2 * np.arange(k + 1) + 1)
    return moments * scale / widths


def project_batch(coeffs: np.ndarray, ov: Overlap, nq: int | None = None) -> np.ndarray:
    """Project source coefficients onto every destination mesh of ``ov``."""
    k = coeffs.shape[-1] - 1
    sq = ov.quadrature(nq or n_quad(k))
    mom = sq.test_moments(sq.eval_source(coeffs), k)
    w = np.diff(ov.dst_nodes, axis=-1)
    return moments_to_coeffs(mom, w[..., None, None])


@dataclass(eq=False)
class OverlapDecomposition:
    """For each destination cell, its (source cell, lo, hi, period shift) pieces."""

    source: Mesh1D
    destination: Mesh1D
    core: Overlap = field(repr=False)

    @cached_property
    def cells(self) -> list[list[tuple[int, float, float, int]]]:
        c = self.core
        out = [[] for _ in range(c.nd)]
        for d, s, lo, hi, sh in zip(c.dst, c.src, c.lo, c.hi, c.shift):
            if hi > lo:
                out[int(d)].append((int(s), float(lo), float(hi), int(sh)))
        return out


def overlap_decompose(src: Mesh1D, dst) -> OverlapDecomposition:
    """Split every destination cell at the source nodes it straddles."""
    if isinstance(dst, UpstreamMesh):
        dst = dst.as_mesh()
    if not np.isclose(src.length, dst.length, rtol=1e-12, atol=0.0):
        raise ValueError(
            f"meshes cover different periodic domains (lengths {src.length} vs {dst.length})"
        )
    if not (src.periodic and dst.periodic):
        raise ValueError("overlap decomposition assumes periodic meshes")
    return OverlapDecomposition(src, dst, Overlap(src.nodes, dst.nodes, src.length))


def l2_project(field: DGField, decomposition: OverlapDecomposition, dst_mesh: Mesh1D | None = None,
               degree: int | None = None) -> DGField:
    """Project ``field`` onto the destination of ``decomposition``."""
    if field.mesh is not decomposition.source and not np.array_equal(
            field.mesh.nodes, decomposition.source.nodes):
        raise ValueError("field does not live on the decomposition's source mesh")
    if degree is not None and degree != field.degree:
        raise ValueError("projection between different polynomial degrees is not supported")
    dst_mesh = dst_mesh or decomposition.destination
    c = project_batch(field.coeffs[None], decomposition.core)
    return DGField(dst_mesh, c, field.time)
