"""2D systems by dimensional splitting over tensor-product Gauss node lines.

A Q^k field stores point values on the ``(k + 1)^2`` Gauss nodes of every
cell. An x-sweep takes each horizontal line of nodes (fixed cell row and
y-node), turns its values into P^k modal coefficients per cell, advances the
1D system with one EL-RK step and maps back; y-sweeps do the same along
columns.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from .basis import _gauss, legendre_table
from .characteristics import CharSystem
from .mesh import Mesh1D
from .system import CONSERVATIVE, SchemeVariant, Stepper

LineSystem = Union[CharSystem, Callable[[np.ndarray], CharSystem]]

_CBRT2 = 2.0 ** (1.0 / 3.0)
TRIPLE_JUMP = (1.0 / (2.0 - _CBRT2), -_CBRT2 / (2.0 - _CBRT2), 1.0 / (2.0 - _CBRT2))


def _transforms(k: int):
    xg, wg = _gauss(k + 1)
    V = legendre_table(k, xg)  # (p, m): modal -> nodal
    T = (0.5 * (2 * np.arange(k + 1) + 1))[:, None] * (V * wg[:, None]).T  # nodal -> modal
    return xg, V, T


@dataclass(eq=False)
class Field2D:
    """Q^k field with nodal values of shape ``(Nx, Ny, k + 1, k + 1, n)``."""

    mesh_x: Mesh1D
    mesh_y: Mesh1D
    values: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        Nx, Ny, p, q, _ = self.values.shape
        if (Nx, Ny) != (self.mesh_x.n_cells, self.mesh_y.n_cells) or p != q:
            raise ValueError(f"values {self.values.shape} do not match the meshes")

    @property
    def degree(self) -> int:
        return self.values.shape[2] - 1

    @property
    def n_components(self) -> int:
        return self.values.shape[-1]

    def copy(self, values=None, time=None) -> "Field2D":
        return Field2D(self.mesh_x, self.mesh_y,
                       self.values.copy() if values is None else values,
                       self.time if time is None else time)

    def node_coordinates(self):
        xg = _gauss(self.degree + 1)[0]
        mx, my = self.mesh_x, self.mesh_y
        x = mx.centers[:, None] + 0.5 * mx.widths[:, None] * xg
        y = my.centers[:, None] + 0.5 * my.widths[:, None] * xg
        return x, y

    def modal(self) -> np.ndarray:
        """Tensor Legendre coefficients ``(Nx, Ny, k + 1, k + 1, n)``."""
        T = _transforms(self.degree)[2]
        return np.einsum("ap,bq,ijpqc->ijabc", T, T, self.values)

    def evaluate_local(self, xi, eta) -> np.ndarray:
        """Values at local points ``xi`` (x) and ``eta`` (y) of every cell."""
        k = self.degree
        Px = legendre_table(k, np.asarray(xi, float))
        Py = legendre_table(k, np.asarray(eta, float))
        return np.einsum("pa,qb,ijabc->ijpqc", Px, Py, self.modal())

    def cell_means(self) -> np.ndarray:
        return self.modal()[:, :, 0, 0, :]

    def total_mass(self) -> np.ndarray:
        area = self.mesh_x.widths[:, None] * self.mesh_y.widths[None, :]
        return np.einsum("ijc,ij->c", self.cell_means(), area)


def project_2d(mesh_x: Mesh1D, mesh_y: Mesh1D, func, k: int, time: float = 0.0) -> Field2D:
    """L2 projection of ``func(x, y) -> (..., n)`` onto Q^k, stored at the Gauss nodes."""
    nq = 2 * k + 4
    xg, wg = _gauss(nq)
    x = mesh_x.centers[:, None] + 0.5 * mesh_x.widths[:, None] * xg
    y = mesh_y.centers[:, None] + 0.5 * mesh_y.widths[:, None] * xg
    X, Y = np.broadcast_arrays(x[:, None, :, None], y[None, :, None, :])
    v = np.asarray(func(X, Y), dtype=float)
    if v.ndim == 4:
        v = v[..., None]
    P = legendre_table(k, xg)
    scale = 0.5 * (2 * np.arange(k + 1) + 1)
    modal = np.einsum("ijpqc,pa,qb,p,q->ijabc", v, P, P, wg, wg) * scale[:, None, None] * scale[None, :, None]
    V = _transforms(k)[1]
    return Field2D(mesh_x, mesh_y, np.einsum("pa,qb,ijabc->ijpqc", V, V, modal), time)


def line_system(sys: LineSystem, coords: np.ndarray) -> CharSystem:
    """The 1D system along lines at transverse coordinates ``coords`` (one per line)."""
    return sys if isinstance(sys, CharSystem) else sys(coords)


class Splitter:
    """Split 2D stepping with persistent per-direction line steppers.

    ``sys_x`` is the x-sweep system, either a :class:`CharSystem` shared by
    all lines or a factory taking the y-coordinates of the lines; ``sys_y``
    likewise for the y-sweeps.
    """

    def __init__(self, mesh_x: Mesh1D, mesh_y: Mesh1D, sys_x: LineSystem, sys_y: LineSystem,
                 degree: int, variant: SchemeVariant = CONSERVATIVE, tableau="rk4", limiter=None):
        self.mesh_x, self.mesh_y, self.k = mesh_x, mesh_y, degree
        xg = _gauss(degree + 1)[0]
        ys = (mesh_y.centers[:, None] + 0.5 * mesh_y.widths[:, None] * xg).reshape(-1)
        xs = (mesh_x.centers[:, None] + 0.5 * mesh_x.widths[:, None] * xg).reshape(-1)
        self.x_stepper = Stepper(mesh_x, line_system(sys_x, ys), degree, variant, tableau, limiter)
        self.y_stepper = Stepper(mesh_y, line_system(sys_y, xs), degree, variant, tableau, limiter)
        _, self._V, self._T = _transforms(degree)

    def _advance(self, stepper: Stepper, lines: np.ndarray, t: float, dt: float) -> np.ndarray:
        coeffs = np.einsum("mp,bipc->bicm", self._T, lines)
        coeffs = stepper.step(coeffs, t, dt)
        return np.einsum("pm,bicm->bipc", self._V, coeffs)

    def sweep_x(self, state: Field2D, dt: float, t: float | None = None) -> Field2D:
        t = state.time if t is None else t
        Nx, Ny, K, _, n = state.values.shape
        lines = state.values.transpose(1, 3, 0, 2, 4).reshape(Ny * K, Nx, K, n)
        out = self._advance(self.x_stepper, lines, t, dt)
        vals = out.reshape(Ny, K, Nx, K, n).transpose(2, 0, 3, 1, 4)
        return state.copy(np.ascontiguousarray(vals), state.time + dt)

    def sweep_y(self, state: Field2D, dt: float, t: float | None = None) -> Field2D:
        t = state.time if t is None else t
        Nx, Ny, K, _, n = state.values.shape
        lines = state.values.transpose(0, 2, 1, 3, 4).reshape(Nx * K, Ny, K, n)
        out = self._advance(self.y_stepper, lines, t, dt)
        vals = out.reshape(Nx, K, Ny, K, n).transpose(0, 2, 1, 3, 4)
        return state.copy(np.ascontiguousarray(vals), state.time + dt)

    def strang_step(self, state: Field2D, dt: float) -> Field2D:
        """x(dt/2), y(dt), x(dt/2)."""
        t0 = state.time
        s = self.sweep_x(state, 0.5 * dt, t0)
        s = self.sweep_y(s, dt, t0)
        s = self.sweep_x(s, 0.5 * dt, t0 + 0.5 * dt)
        return s.copy(s.values, t0 + dt)

    def fourth_order_step(self, state: Field2D, dt: float) -> Field2D:
        """Triple-jump composition of three Strang steps; the middle one runs backward in time."""
        t0 = state.time
        s = state
        for g in TRIPLE_JUMP:
            s = self.strang_step(s, g * dt)
        return s.copy(s.values, t0 + dt)


def _splitter(state: Field2D, sys_x, sys_y, kw) -> Splitter:
    return Splitter(state.mesh_x, state.mesh_y, sys_x, sys_y, state.degree, **kw)


def sweep_x(state: Field2D, dt: float, sys_x: LineSystem, t: float | None = None, **kw) -> Field2D:
    return _splitter(state, sys_x, sys_x, kw).sweep_x(state, dt, t)


def sweep_y(state: Field2D, dt: float, sys_y: LineSystem, t: float | None = None, **kw) -> Field2D:
    return _splitter(state, sys_y, sys_y, kw).sweep_y(state, dt, t)


def strang_step(state: Field2D, dt: float, sys_x: LineSystem, sys_y: LineSystem, **kw) -> Field2D:
    return _splitter(state, sys_x, sys_y, kw).strang_step(state, dt)


def fourth_order_step(state: Field2D, dt: float, sys_x: LineSystem, sys_y: LineSystem, **kw) -> Field2D:
    return _splitter(state, sys_x, sys_y, kw).fourth_order_step(state, dt)


SPLITTINGS = {"strang": "strang_step", "fourth": "fourth_order_step"}
