"""Domain-averaged error norms and convergence orders."""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .basis import _gauss, legendre_table, n_quad
from .projection import DGField

TINY = 1e2 * np.finfo(float).eps


class Norms(NamedTuple):
    """Per-component ``L1``, ``L2`` and ``Linf`` errors."""

    l1: np.ndarray
    l2: np.ndarray
    linf: np.ndarray


def _norms(err: np.ndarray, w: np.ndarray, measure: float) -> Norms:
    """``err`` has trailing axes ``(points, components)``; ``w`` matches the points."""
    ax = tuple(range(err.ndim - 1))
    w = w[..., None]
    l1 = np.sum(np.abs(err) * w, axis=ax) / measure
    l2 = np.sqrt(np.sum(err * err * w, axis=ax) / measure)
    return Norms(l1, l2, np.max(np.abs(err), axis=ax))


def error_norms(field: DGField, exact, t: float | None = None, *, postprocess: bool = False,
                nq: int | None = None) -> Norms:
    """Errors of a 1D field (or 2D, see :func:`error_norms_2d`) against ``exact(x, t)``.

    Integrals use ``max(k + 3, 5)`` Gauss points per cell and are divided by
    the domain length; ``Linf`` is the max over those points.
    """
    if exact is None:
        raise NotImplementedError("error norms need an exact solution")
    if hasattr(field, "mesh_y"):
        return error_norms_2d(field, exact, t, nq=nq)
    t = field.time if t is None else t
    mesh = field.mesh
    nq = nq or n_quad(field.degree)
    xg, wg = _gauss(nq)
    x = mesh.centers[:, None] + 0.5 * mesh.widths[:, None] * xg
    if postprocess:
        from .siac import siac_filter
        vals = siac_filter(field).at_local(xg)
    else:
        vals = np.einsum("jck,qk->jqc", field.coeffs, legendre_table(field.degree, xg))
    ex = np.asarray(exact(x, t), dtype=float)
    if ex.ndim == 2:
        ex = ex[..., None]
    w = 0.5 * mesh.widths[:, None] * wg
    return _norms(vals - ex, w, mesh.length)


def error_norms_2d(field, exact, t: float | None = None, nq: int | None = None) -> Norms:
    t = field.time if t is None else t
    nq = nq or n_quad(field.degree)
    xg, wg = _gauss(nq)
    vals = field.evaluate_local(xg, xg)  # (Nx, Ny, qx, qy, n)
    mx, my = field.mesh_x, field.mesh_y
    x = mx.centers[:, None] + 0.5 * mx.widths[:, None] * xg
    y = my.centers[:, None] + 0.5 * my.widths[:, None] * xg
    X = x[:, None, :, None]
    Y = y[None, :, None, :]
    ex = np.asarray(exact(*np.broadcast_arrays(X, Y), t), dtype=float)
    w = (0.5 * mx.widths[:, None] * wg)[:, None, :, None] * (0.5 * my.widths[:, None] * wg)[None, :, None, :]
    return _norms(vals - ex, w, mx.length * my.length)


def convergence_orders(errors, ratio: float = 2.0) -> list[float | None]:
    """``log(e_i / e_{i+1}) / log(ratio)``; ``None`` where an error is at round-off level."""
    out: list[float | None] = [None]
    for a, b in zip(errors[:-1], errors[1:]):
        if a > TINY and b > TINY:
            out.append(float(np.log(a / b) / np.log(ratio)))
        else:
            out.append(None)
    return out
