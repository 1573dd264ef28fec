"""TVB minmod slope limiter on the background mesh."""

from __future__ import annotations

import numpy as np

from .mesh import Mesh1D
from .projection import DGField


def minmod(*args: np.ndarray) -> np.ndarray:
    a = np.stack(np.broadcast_arrays(*args))
    s = np.sign(a[0])
    same = np.all(np.sign(a) == s, axis=0)
    return np.where(same, s * np.min(np.abs(a), axis=0), 0.0)


def limit_coeffs(U: np.ndarray, mesh: Mesh1D, m_param: float = 0.0) -> np.ndarray:
    """Limit batched coefficients ``(B, N, n, K)``; cell means are untouched.

    A cell is modified when either endpoint deviation from the mean differs
    from its minmod against the neighbouring mean differences; it is then
    replaced by the mean plus a minmod-limited linear part.
    """
    K = U.shape[-1]
    if K == 1:
        return U
    mean = U[..., 0]
    dp = np.roll(mean, -1, axis=-2) - mean
    dm = mean - np.roll(mean, 1, axis=-2)
    sign = (-1.0) ** np.arange(K)
    right = U[..., 1:].sum(axis=-1)
    left = -(U[..., 1:] * sign[1:]).sum(axis=-1)
    tol = m_param * (mesh.widths[:, None] ** 2)

    def mod(d):
        return np.where(np.abs(d) <= tol, d, minmod(d, dp, dm))

    changed = (mod(right) != right) | (mod(left) != left)
    if not np.any(changed):
        return U
    out = U.copy()
    slope = np.where(np.abs(U[..., 1]) <= tol, U[..., 1], minmod(U[..., 1], dp, dm))
    out[..., 1] = np.where(changed, slope, U[..., 1])
    out[..., 2:] = np.where(changed[..., None], 0.0, U[..., 2:])
    return out


def tvd_limit(field: DGField, m_param: float = 0.0) -> DGField:
    c = limit_coeffs(field.coeffs[None], field.mesh, m_param)[0]
    return field.copy(c)


def make_limiter(m_param: float | None):
    """Stage limiter callable for the steppers, or ``None`` when disabled."""
    if m_param is None:
        return None
    return lambda U, mesh: limit_coeffs(U, mesh, m_param)
