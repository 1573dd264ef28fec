"""Hyperbolic systems U_t + (A U)_x = F described by their characteristic data.

Every callable takes ``(x, t)`` with ``x`` an array whose leading axis is the
line batch (or 1) and returns arrays with the documented trailing shape.
"""

from __future__ import annotations

import inspect
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np


class SingularDecompositionError(RuntimeError):
    """The eigenvector pair cannot be formed (e.g. a vanishing wave speed)."""


Fn = Callable[[np.ndarray, float], np.ndarray]


@dataclass(frozen=True)
class CharSystem:
    """Flux matrix, eigenvalues and a consistent eigenvector pair.

    ``right`` returns R_p (trailing ``(n, m)``) and ``left`` returns its
    inverse (trailing ``(m, n)``); each family ``i`` carries the row weights
    ``W[r, i, :] = R_p[r, i] * left[i, :]`` whose sum over ``i`` is the unit
    row ``e_r``. ``right_dx``/``left_dx`` are optional analytic derivatives.
    ``autonomous`` declares the flux and eigen data time independent, which
    lets steppers reuse tables across steps (the source may still depend on t).
    """

    n: int
    flux_matrix: Fn
    eigenvalues: Fn
    right: Fn
    left: Fn
    right_dx: Optional[Fn] = None
    left_dx: Optional[Fn] = None
    source: Optional[Fn] = None
    constant_pair: bool = False
    autonomous: bool = True

    @property
    def m(self) -> int:
        return self.n

    def weights(self, x, t=0.0) -> np.ndarray:
        """Row/family projectors W with trailing shape ``(n, m, n)``."""
        R = self.right(x, t)
        L = self.left(x, t)
        return R[..., :, :, None] * L[..., None, :, :]

    def weights_dx(self, x, t=0.0, h: float = 1e-6) -> np.ndarray:
        if self.right_dx is not None and self.left_dx is not None:
            R, L = self.right(x, t), self.left(x, t)
            Rx, Lx = self.right_dx(x, t), self.left_dx(x, t)
            return Rx[..., :, :, None] * L[..., None, :, :] + R[..., :, :, None] * Lx[..., None, :, :]
        return (self.weights(x + h, t) - self.weights(x - h, t)) / (2 * h)

    def check_pair(self, x, t=0.0, tol: float = 1e-12) -> float:
        """Max deviation of R_p R_p^{-1} from the identity at ``x``."""
        prod = np.einsum("...ri,...in->...rn", self.right(x, t), self.left(x, t))
        err = float(np.max(np.abs(prod - np.eye(self.n))))
        if err > tol:
            raise SingularDecompositionError(f"R_p R_p^-1 deviates from I by {err:.2e}")
        return err


def _takes_time(f) -> bool:
    """Whether a coefficient callable may depend on time (accepts a second argument)."""
    if f is None or np.isscalar(f):
        return False
    if isinstance(f, np.ufunc):
        return f.nin >= 2
    try:
        params = inspect.signature(f).parameters.values()
    except (TypeError, ValueError):
        return True
    positional = [p for p in params if p.kind in (p.POSITIONAL_ONLY, p.POSITIONAL_OR_KEYWORD)]
    return len(positional) >= 2 or any(p.kind == p.VAR_POSITIONAL for p in params)


def _as_fn(f) -> Fn:
    """Accept scalars, f(x) or f(x, t)."""
    if f is None:
        return None
    if np.isscalar(f):
        c = float(f)
        return lambda x, t=0.0: np.full(np.shape(x), c)
    try:
        f(np.zeros(1), 0.0)
        return f
    except TypeError:
        return lambda x, t=0.0: f(x)


def wave_system(speed, *, n: int = 2, axis: int = 1, source=None,
                speed_p=None, speed_p_dx=None, autonomous: bool | None = None) -> CharSystem:
    """First-order form of u_tt = (c^2 u_s)_s (+ f) along one direction.

    Components are ``(u_t, u_x)`` for ``n == 2``; for ``n == 3`` the state is
    ``(u_t, u_x, u_y)`` and ``axis`` picks the swept direction. Families are
    ordered ``(+c, -c, 0)``; the zero family only exists for ``n == 3``.
    ``speed_p`` is the continuous speed used to build the eigenvector pair.
    ``autonomous`` defaults to whether none of the speed callables takes ``t``.
    """
    if n not in (2, 3) or axis not in range(1, n):
        raise ValueError("wave_system supports n=2 (axis 1) or n=3 (axis 1 or 2)")
    c = _as_fn(speed)
    cp = c if speed_p is None else _as_fn(speed_p)
    cpx = _as_fn(speed_p_dx)
    other = 3 - axis if n == 3 else None

    def A(x, t=0.0):
        cc = c(x, t)
        out = np.zeros(np.shape(cc) + (n, n))
        out[..., 0, axis] = -cc * cc
        out[..., axis, 0] = -1.0
        return out

    def lam(x, t=0.0):
        cc = c(x, t)
        out = np.zeros(np.shape(cc) + (n,))
        out[..., 0] = cc
        out[..., 1] = -cc
        return out

    def _guard(a):
        if np.any(a == 0) or not np.all(np.isfinite(a)):
            raise SingularDecompositionError("wave speed vanishes; 1/(2 a_p) is undefined")
        return a

    def R(x, t=0.0):
        a = cp(x, t)
        out = np.zeros(np.shape(a) + (n, n))
        out[..., 0, 0] = -a
        out[..., axis, 0] = 1.0
        out[..., 0, 1] = a
        out[..., axis, 1] = 1.0
        if other is not None:
            out[..., other, 2] = 1.0
        return out

    def Linv(x, t=0.0):
        a = _guard(cp(x, t))
        out = np.zeros(np.shape(a) + (n, n))
        out[..., 0, 0] = -0.5 / a
        out[..., 0, axis] = 0.5
        out[..., 1, 0] = 0.5 / a
        out[..., 1, axis] = 0.5
        if other is not None:
            out[..., 2, other] = 1.0
        return out

    Rx = Lx = None
    if cpx is not None:
        def Rx(x, t=0.0):
            d = cpx(x, t)
            out = np.zeros(np.shape(d) + (n, n))
            out[..., 0, 0] = -d
            out[..., 0, 1] = d
            return out

        def Lx(x, t=0.0):
            a, d = cp(x, t), cpx(x, t)
            out = np.zeros(np.shape(a) + (n, n))
            out[..., 0, 0] = 0.5 * d / (a * a)
            out[..., 1, 0] = -0.5 * d / (a * a)
            return out

    src = None
    if source is not None:
        f = _as_fn(source)

        def src(x, t=0.0):
            v = f(x, t)
            out = np.zeros(np.shape(v) + (n,))
            out[..., 0] = v
            return out

    const = np.isscalar(speed) if speed_p is None else np.isscalar(speed_p)
    if autonomous is None:
        autonomous = not any(_takes_time(f) for f in (speed, speed_p, speed_p_dx))
    return CharSystem(n, A, lam, R, Linv, Rx, Lx, src, constant_pair=bool(const),
                      autonomous=bool(autonomous))


def wave_system_from(a, f=None, *, a_p=None, a_p_dx=None) -> CharSystem:
    """1D wave system with A = [[0, -a^2], [-1, 0]] and source (f, 0)."""
    return wave_system(a, n=2, axis=1, source=f, speed_p=a_p, speed_p_dx=a_p_dx)


def constant_system(matrix, source=None) -> CharSystem:
    """System with a constant, real-diagonalizable flux matrix.

    Families are ordered by decreasing eigenvalue.
    """
    M = np.asarray(matrix, dtype=float)
    n = M.shape[0]
    vals, vecs = np.linalg.eig(M)
    if np.max(np.abs(np.imag(vals))) > 1e-12:
        raise SingularDecompositionError("flux matrix is not real diagonalizable")
    order = np.argsort(-np.real(vals), kind="stable")
    vals = np.real(vals)[order]
    R0 = np.real(vecs)[:, order]
    if abs(np.linalg.det(R0)) < 1e-12:
        raise SingularDecompositionError("eigenvectors are linearly dependent")
    L0 = np.linalg.inv(R0)

    def tile(v):
        return lambda x, t=0.0: np.broadcast_to(v, np.shape(x) + v.shape)

    zero = np.zeros((n, n))
    src = None
    if source is not None:
        src = source
    return CharSystem(n, tile(M), tile(vals), tile(R0), tile(L0), tile(zero), tile(zero),
                      src, constant_pair=True)


def scalar_system(velocity, source=None, autonomous: bool | None = None) -> CharSystem:
    """Single-component transport u_t + (a u)_x = s."""
    a = _as_fn(velocity)
    one = np.ones((1, 1))
    zero = np.zeros((1, 1))

    def A(x, t=0.0):
        return a(x, t)[..., None, None]

    def lam(x, t=0.0):
        return a(x, t)[..., None]

    def tile(v):
        return lambda x, t=0.0: np.broadcast_to(v, np.shape(x) + v.shape)

    src = None
    if source is not None:
        s = _as_fn(source)
        src = lambda x, t=0.0: s(x, t)[..., None]
    if autonomous is None:
        autonomous = not _takes_time(velocity)
    return CharSystem(1, A, lam, tile(one), tile(one), tile(zero), tile(zero), src,
                      constant_pair=True, autonomous=bool(autonomous))
