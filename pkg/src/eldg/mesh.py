"""Background meshes, dynamic space-time elements and upstream tracing."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np


class InvertedElementError(RuntimeError):
    """A traced element collapsed or flipped (time step too large)."""


@dataclass(frozen=True, eq=False)
class Mesh1D:
    """Partition of an interval by ordered ``nodes`` (``N + 1`` values).

    For periodic meshes the period is ``nodes[-1] - nodes[0]``.
    """

    nodes: np.ndarray
    periodic: bool = True

    def __post_init__(self):
        nodes = np.array(self.nodes, dtype=float)
        if nodes.ndim != 1 or nodes.size < 2:
            raise ValueError("a mesh needs at least two nodes")
        if np.any(np.diff(nodes) <= 0):
            raise ValueError("mesh nodes must be strictly increasing")
        nodes.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)

    @property
    def domain_lo(self) -> float:
        return float(self.nodes[0])

    @property
    def domain_hi(self) -> float:
        return float(self.nodes[-1])

    @property
    def length(self) -> float:
        return self.domain_hi - self.domain_lo

    @property
    def n_cells(self) -> int:
        return self.nodes.size - 1

    @cached_property
    def widths(self) -> np.ndarray:
        return np.diff(self.nodes)

    @cached_property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.nodes[1:] + self.nodes[:-1])

    @property
    def dx(self) -> float:
        return float(self.widths.max())

    @property
    def is_uniform(self) -> bool:
        w = self.widths
        return bool(np.all(np.abs(w - w[0]) <= 1e-12 * w[0]))


def build_uniform_mesh(lo: float, hi: float, n: int) -> Mesh1D:
    if int(n) != n or n < 1:
        raise ValueError(f"cell count must be a positive integer, got {n}")
    if not hi > lo:
        raise ValueError(f"need hi > lo, got [{lo}, {hi}]")
    return Mesh1D(np.linspace(lo, hi, int(n) + 1), periodic=True)


@dataclass(frozen=True)
class DynamicElement:
    """Space-time trapezoid ending on background cell ``j`` at ``t_end``.

    Endpoints move on straight lines with velocities ``nu_left`` and
    ``nu_right``; ``upstream_lo``/``upstream_hi`` are their feet at ``t_start``
    in the unwrapped frame, and ``period_shift`` counts how many periods the
    left foot lies to the left of the domain start.
    """

    j: int
    x_left: float
    x_right: float
    nu_left: float
    nu_right: float
    t_start: float
    t_end: float
    period_shift: int = 0

    def __post_init__(self):
        if not self.upstream_hi > self.upstream_lo:
            raise InvertedElementError(
                f"cell {self.j}: upstream interval [{self.upstream_lo}, {self.upstream_hi}] is inverted"
            )

    @property
    def upstream_lo(self) -> float:
        return self.x_left - (self.t_end - self.t_start) * self.nu_left

    @property
    def upstream_hi(self) -> float:
        return self.x_right - (self.t_end - self.t_start) * self.nu_right

    def interval_at(self, t: float) -> tuple[float, float]:
        s = t - self.t_end
        return self.x_left + s * self.nu_left, self.x_right + s * self.nu_right

    def width_at(self, t: float) -> float:
        lo, hi = self.interval_at(t)
        return hi - lo

    def trajectory(self, xi: float, t: float) -> float:
        """Position at time ``t`` of the point with reference coordinate ``xi``."""
        lo, hi = self.interval_at(t)
        return lo + 0.5 * (xi + 1.0) * (hi - lo)


def _check_time(elem: DynamicElement, t: float):
    a, b = sorted((elem.t_start, elem.t_end))
    span = max(b - a, 1.0)
    if not a - 1e-12 * span <= t <= b + 1e-12 * span:
        raise ValueError(f"t={t} outside element time slab [{a}, {b}]")


def alpha_eval(elem: DynamicElement, x: float, t: float) -> float:
    """Frozen linear velocity field of the adjoint problem inside ``elem``."""
    _check_time(elem, t)
    lo, hi = elem.interval_at(t)
    w = hi - lo
    if not lo - 1e-12 * abs(w) <= x <= hi + 1e-12 * abs(w):
        raise ValueError(f"x={x} outside [{lo}, {hi}] at t={t}")
    return (-elem.nu_left * (x - hi) + elem.nu_right * (x - lo)) / w


@dataclass(frozen=True, eq=False)
class UpstreamMesh:
    """All dynamic elements of one characteristic family over one step.

    ``node_velocities`` has one entry per background node; periodic meshes
    require the first and last entries to agree so the upstream cells tile
    one period.
    """

    source_mesh: Mesh1D
    node_velocities: np.ndarray
    t_start: float
    t_end: float

    @property
    def dt(self) -> float:
        return self.t_end - self.t_start

    @cached_property
    def upstream_nodes(self) -> np.ndarray:
        return self.source_mesh.nodes - self.dt * self.node_velocities

    def nodes_at(self, t: float) -> np.ndarray:
        return self.source_mesh.nodes + (t - self.t_end) * self.node_velocities

    @cached_property
    def period_shifts(self) -> np.ndarray:
        m = self.source_mesh
        return np.floor((self.upstream_nodes[:-1] - m.domain_lo) / m.length).astype(int)

    @cached_property
    def elements(self) -> list[DynamicElement]:
        x, nu = self.source_mesh.nodes, self.node_velocities
        return [
            DynamicElement(j, x[j], x[j + 1], nu[j], nu[j + 1], self.t_start, self.t_end,
                           int(self.period_shifts[j]))
            for j in range(self.source_mesh.n_cells)
        ]

    def as_mesh(self, t: float | None = None) -> Mesh1D:
        """The element intervals at time ``t`` (default: upstream time) as a mesh."""
        nodes = self.upstream_nodes if t is None else self.nodes_at(t)
        return Mesh1D(nodes, periodic=self.source_mesh.periodic)


def check_widths(widths: np.ndarray, what: str = "upstream"):
    bad = np.argwhere(~(widths > 0))
    if bad.size:
        j = tuple(int(v) for v in bad[0])
        raise InvertedElementError(
            f"{what} cell {j[-1] if len(j) == 1 else j} has non-positive width "
            f"{float(widths[tuple(bad[0])]):.3e}; reduce the time step"
        )


def trace_upstream(mesh: Mesh1D, node_velocities, dt: float, t_end: float = 0.0) -> UpstreamMesh:
    """Trace each background node back over ``dt`` along straight lines."""
    nu = np.asarray(node_velocities, dtype=float)
    if nu.shape != mesh.nodes.shape:
        raise ValueError(f"need one velocity per node ({mesh.nodes.size}), got {nu.shape}")
    if mesh.periodic and nu[0] != nu[-1]:
        if abs(nu[0] - nu[-1]) > 1e-12 * max(1.0, float(np.max(np.abs(nu)))):
            raise ValueError("periodic mesh needs matching velocities at the seam node")
        nu = nu.copy()
        nu[-1] = nu[0]
    up = mesh.nodes - dt * nu
    check_widths(np.diff(up))
    return UpstreamMesh(mesh, nu, t_end - dt, t_end)
