"""Registry of test problems with initial data, coefficients and exact solutions."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

SQ2 = np.sqrt(2.0)


@dataclass(frozen=True)
class ProblemSpec:
    """One benchmark problem.

    ``kind`` selects how the flux is built:

    * ``"scalar"``: u_t + (a u)_x = 0 with ``speed = a(x, t)``.
    * ``"wave"``: 1D wave system with speed ``a(x)`` (derivative ``speed_dx``)
      and source ``f(x, t)`` in the first component.
    * ``"wave2d"``: 3-component 2D wave system with speeds ``a(x, y)`` and
      ``b(x, y)`` and their derivatives along the sweep direction.
    * ``"constant2d"``: U_t + A U_x + B U_y = 0 with constant matrices.

    ``initial`` and ``exact`` return arrays with a trailing component axis.
    1D time steps are ``CFL * dx / dt_speed`` (``dt_speed`` defaults to the
    maximum speed).
    """

    name: str
    kind: str
    dim: int
    domain: tuple
    n_components: int
    initial: Callable
    exact: Optional[Callable] = None
    speed: object = None
    speed_dx: Optional[Callable] = None
    speed_y: object = None
    speed_y_dy: Optional[Callable] = None
    source: Optional[Callable] = None
    matrices: Optional[tuple] = None
    max_speed: tuple = (1.0,)
    dt_speed: Optional[float] = None
    tfinal: float = 1.0
    description: str = ""
    extra: dict = field(default_factory=dict)


def _periodic_images(g, x, lo, length):
    """Evaluate ``g`` at the periodic image of ``x`` nearest to the window center."""
    c = lo + 0.5 * length
    r = c + np.mod(x - c + 0.5 * length, length) - 0.5 * length
    return g(r)


def _dalembert(g, h, lo, length):
    """Exact solution of u1_t - u2_x = 0, u2_t - u1_x = 0 from data (g, h)."""

    def exact(x, t):
        plus = _periodic_images(lambda s: g(s) + h(s), x + t, lo, length)
        minus = _periodic_images(lambda s: g(s) - h(s), x - t, lo, length)
        return np.stack([0.5 * (plus + minus), 0.5 * (plus - minus)], axis=-1)

    return exact


def _wave_sin_exact(x, t):
    v = np.cos(x + t)
    return np.stack([v, v], axis=-1)


def _gauss(x):
    return np.exp(-x * x / 0.005)


def _step(x):
    return np.where((x >= 0.95 * np.pi) & (x <= 1.05 * np.pi), 1.0, 0.5)


_gauss_exact = _dalembert(_gauss, np.zeros_like, -1.0, 2.0)
_step_exact = _dalembert(_step, np.ones_like, 0.0, 2 * np.pi)


def _var_a(x):
    return 2.0 + np.sin(x)


def _var_source(x, t):
    s, c = np.sin(x - 2 * t), np.cos(x - 2 * t)
    a = 2.0 + np.sin(x)
    return -4.0 * s + s * a * a - 2.0 * a * np.cos(x) * c


def _var_exact(x, t):
    # u = sin(x - 2t): u_t = -2 cos, u_x = cos
    c = np.cos(x - 2 * t)
    return np.stack([-2.0 * c, c], axis=-1)


def _c2d_exact(x, y, t):
    s = np.sin(x + y + SQ2 * t)
    c = np.cos(x + y - SQ2 * t)
    u = (s - c) / (2 * SQ2)
    v = ((SQ2 - 1) * s + (SQ2 + 1) * c) / (2 * SQ2)
    return np.stack([u, v], axis=-1)


def _v2d_a(x, y):
    return 1.0 + 0.5 * np.sin(x + y)


def _v2d_a_dx(x, y):
    return 0.5 * np.cos(x + y)


def _v2d_b(x, y):
    a = _v2d_a(x, y)
    return np.sqrt(4.0 - a * a)


def _v2d_b_dy(x, y):
    a = _v2d_a(x, y)
    return -a * _v2d_a_dx(x, y) / np.sqrt(4.0 - a * a)


def _v2d_exact(x, y, t):
    c = np.cos(x + y + 2 * t)
    return np.stack([2 * c, c, c], axis=-1)


def _g2d_initial(x, y):
    g = np.exp(-(x * x + y * y) / 0.005)
    z = np.zeros_like(g)
    return np.stack([g, z, z], axis=-1)


PROBLEMS: dict[str, ProblemSpec] = {}


def _register(p: ProblemSpec) -> ProblemSpec:
    PROBLEMS[p.name] = p
    return p


_register(ProblemSpec(
    "scalar-sin", "scalar", 1, (0.0, 2 * np.pi), 1,
    initial=lambda x: np.sin(x)[..., None],
    exact=lambda x, t: np.sin(x - t)[..., None],
    speed=1.0, max_speed=(1.0,), tfinal=1.0,
    description="u_t + u_x = 0, u0 = sin x",
))
_register(ProblemSpec(
    "scalar-variable", "scalar", 1, (0.0, 2 * np.pi), 1,
    initial=lambda x: np.ones_like(x)[..., None],
    speed=lambda x, t: 1.0 + 0.5 * np.sin(x), max_speed=(1.5,), tfinal=1.0,
    description="u_t + ((1 + sin(x)/2) u)_x = 0, u0 = 1 (no closed form)",
))
_register(ProblemSpec(
    "wave-sin", "wave", 1, (0.0, 2 * np.pi), 2,
    initial=lambda x: _wave_sin_exact(x, 0.0), exact=_wave_sin_exact,
    speed=1.0, max_speed=(1.0,), tfinal=1.0,
    description="u_tt = u_xx, u = sin(x + t); state (u_t, u_x)",
))
_register(ProblemSpec(
    "wave-gaussian", "wave", 1, (-1.0, 1.0), 2,
    initial=lambda x: _gauss_exact(x, 0.0), exact=_gauss_exact,
    speed=1.0, max_speed=(1.0,), tfinal=50.5,
    description="u_tt = u_xx, u_t(x, 0) = exp(-x^2/0.005), u_x(x, 0) = 0",
))
_register(ProblemSpec(
    "wave-step", "wave", 1, (0.0, 2 * np.pi), 2,
    initial=lambda x: _step_exact(x, 0.0), exact=_step_exact,
    speed=1.0, max_speed=(1.0,), tfinal=2.85,
    description="u_tt = u_xx with step data u_t in {0.5, 1}, u_x = 1",
    extra={"bounds": ((0.5, 1.0), (0.75, 1.25)), "jump": 0.5},
))
_register(ProblemSpec(
    "wave-variable", "wave", 1, (0.0, 2 * np.pi), 2,
    initial=lambda x: _var_exact(x, 0.0), exact=_var_exact,
    speed=_var_a, speed_dx=np.cos, source=_var_source, max_speed=(3.0,), dt_speed=1.0, tfinal=1.0,
    description="u_tt = ((2 + sin x)^2 u_x)_x + f, u = sin(x - 2t)",
))
_register(ProblemSpec(
    "wave2d-constant", "constant2d", 2, ((0.0, 2 * np.pi), (0.0, 2 * np.pi)), 2,
    initial=lambda x, y: _c2d_exact(x, y, 0.0), exact=_c2d_exact,
    matrices=(np.array([[-1.0, 0.0], [0.0, 1.0]]), np.array([[0.0, -1.0], [-1.0, 0.0]])),
    max_speed=(1.0, 1.0), tfinal=1.0,
    description="(u, v)_t + A (u, v)_x + B (u, v)_y = 0 with non-commuting A, B",
))
_register(ProblemSpec(
    "wave2d-gaussian", "wave2d", 2, ((-1.0, 1.0), (-1.0, 1.0)), 3,
    initial=_g2d_initial,
    speed=1.0, speed_y=1.0, max_speed=(1.0, 1.0), tfinal=0.5,
    description="u_tt = u_xx + u_yy with a Gaussian u_t",
))
_register(ProblemSpec(
    "wave2d-variable", "wave2d", 2, ((0.0, 2 * np.pi), (0.0, 2 * np.pi)), 3,
    initial=lambda x, y: _v2d_exact(x, y, 0.0), exact=_v2d_exact,
    speed=_v2d_a, speed_dx=_v2d_a_dx, speed_y=_v2d_b, speed_y_dy=_v2d_b_dy,
    max_speed=(1.5, np.sqrt(4.0 - 0.25)), tfinal=0.1,
    description="u_tt = (a^2 u_x)_x + (b^2 u_y)_y, a = 1 + sin(x + y)/2, a^2 + b^2 = 4",
))


def get_problem(name: str) -> ProblemSpec:
    try:
        return PROBLEMS[name]
    except KeyError:
        raise ValueError(f"unknown problem {name!r}; choose from {sorted(PROBLEMS)}") from None


def _value(f, *args):
    if f is None:
        return 0.0
    if np.isscalar(f):
        return float(f)
    return f(*args)


def pde_residual(p: ProblemSpec, n_samples: int = 64, seed: int = 0, eps: float = 1e-5) -> float:
    """Max residual of the exact solution in the PDE by central differences."""
    if p.exact is None:
        raise ValueError(f"problem {p.name} has no exact solution")
    rng = np.random.default_rng(seed)
    if p.dim == 1:
        lo, hi = p.domain
        x = rng.uniform(lo, hi, n_samples)
        t = rng.uniform(0.0, 1.0, n_samples)
        U = p.exact
        Ut = (U(x, t + eps) - U(x, t - eps)) / (2 * eps)
        if p.kind == "scalar":
            flux = lambda xx: _value(p.speed, xx, t) * U(xx, t)[..., 0]
            res = Ut[..., 0] + (flux(x + eps) - flux(x - eps)) / (2 * eps)
        else:
            def flux(xx):
                a = _value(p.speed, xx) * np.ones_like(xx)
                u = U(xx, t)
                return np.stack([-a * a * u[..., 1], -u[..., 0]], axis=-1)
            res = Ut + (flux(x + eps) - flux(x - eps)) / (2 * eps)
            if p.source is not None:
                res[..., 0] -= p.source(x, t)
        return float(np.max(np.abs(res)))
    (xl, xh), (yl, yh) = p.domain
    x = rng.uniform(xl, xh, n_samples)
    y = rng.uniform(yl, yh, n_samples)
    t = rng.uniform(0.0, 1.0, n_samples)
    U = p.exact
    Ut = (U(x, y, t + eps) - U(x, y, t - eps)) / (2 * eps)
    if p.kind == "constant2d":
        A, B = p.matrices
        fx = lambda xx: U(xx, y, t) @ A.T
        fy = lambda yy: U(x, yy, t) @ B.T
    else:
        def fx(xx):
            a = _value(p.speed, xx, y) * np.ones_like(xx)
            u = U(xx, y, t)
            return np.stack([-a * a * u[..., 1], -u[..., 0], 0 * a], axis=-1)

        def fy(yy):
            b = _value(p.speed_y, x, yy) * np.ones_like(yy)
            u = U(x, yy, t)
            return np.stack([-b * b * u[..., 2], 0 * b, -u[..., 0]], axis=-1)
    res = Ut + (fx(x + eps) - fx(x - eps)) / (2 * eps) + (fy(y + eps) - fy(y - eps)) / (2 * eps)
    return float(np.max(np.abs(res)))
