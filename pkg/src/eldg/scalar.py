"""Scalar transport u_t + (a(x, t) u)_x = 0 as the one-family case of the system scheme."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .characteristics import scalar_system
from .mesh import UpstreamMesh
from .projection import DGField
from .system import CONSERVATIVE, SchemeVariant, get_tableau, step_field, system_rhs


@dataclass(frozen=True)
class ScalarProblem:
    velocity: object
    initial: Callable
    exact: Optional[Callable] = None
    domain: tuple = (0.0, 2 * np.pi)

    @property
    def system(self):
        return scalar_system(self.velocity)


def scalar_rhs(field: DGField, elems: UpstreamMesh, t: float, problem: ScalarProblem) -> np.ndarray:
    """Time derivatives ``(N, k + 1)`` of ``int u psi_m`` over the moving cells at ``t``.

    ``field`` holds the solution on the dynamic intervals ``elems.nodes_at(t)``.
    """
    return system_rhs([field], [elems], t, problem.system)[0, :, 0, :]


def step_scalar(field: DGField, dt: float, tableau, problem: ScalarProblem,
                variant: SchemeVariant = CONSERVATIVE, limiter=None) -> DGField:
    return step_field(field, dt, problem.system, variant, get_tableau(tableau), limiter)
