"""Drivers for convergence studies, CFL sweeps and mass tracking."""

from __future__ import annotations

import csv
import io
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional

import numpy as np

from .characteristics import CharSystem, constant_system, scalar_system, wave_system
from .limiter import make_limiter
from .mesh import build_uniform_mesh
from .norms import convergence_orders, error_norms
from .problems import ProblemSpec, get_problem
from .projection import DGField, project_function
from .splitting import SPLITTINGS, Field2D, Splitter, project_2d
from .system import EULERIAN, TABLEAUS, SchemeVariant, Stepper, total_mass

SCHEMES = ("eldg", "eldg1", "eldg2", "eldg3",
           "nmc-eldg", "nmc-eldg1", "nmc-eldg2", "nmc-eldg3", "rkdg")
BLOWUP_FACTOR = 1e3
# "quadrature": max(k + 3, 5) Gauss points per cell direction; "nodes": the k + 1
# Gauss nodes that carry the 2D nodal values
NORM_POINTS = ("quadrature", "nodes")


class ConfigError(ValueError):
    """Invalid run configuration."""


@dataclass
class RunConfig:
    problem: str
    scheme: str = "eldg"
    degree: int = 1
    nx: tuple = (20,)
    cfl: tuple = (0.1,)
    tfinal: Optional[float] = None
    rk: str = "rk4"
    limiter_m: Optional[float] = None
    postprocess: bool = False
    split: str = "fourth"
    component: int = 0
    norm_points: str = "quadrature"
    out: Optional[str] = None

    def __post_init__(self):
        self.nx = tuple(int(n) for n in np.atleast_1d(self.nx))
        self.cfl = tuple(float(c) for c in np.atleast_1d(self.cfl))

    @property
    def spec(self) -> ProblemSpec:
        return get_problem(self.problem)

    @property
    def final_time(self) -> float:
        return self.spec.tfinal if self.tfinal is None else float(self.tfinal)

    def validate(self) -> "RunConfig":
        try:
            p = self.spec
        except ValueError as e:
            raise ConfigError(str(e)) from None
        if self.scheme not in SCHEMES:
            raise ConfigError(f"unknown scheme {self.scheme!r}; choose from {SCHEMES}")
        if p.dim == 2 and self.scheme != "eldg":
            raise ConfigError("2D problems only support the eldg scheme")
        if self.degree < 0:
            raise ConfigError("degree must be non-negative")
        if not self.nx or min(self.nx) < 2:
            raise ConfigError("mesh sizes must be at least 2")
        if not self.cfl or min(self.cfl) <= 0 or not np.all(np.isfinite(self.cfl)):
            raise ConfigError("CFL numbers must be positive")
        if self.final_time <= 0:
            raise ConfigError("final time must be positive")
        if self.rk not in TABLEAUS:
            raise ConfigError(f"unknown RK method {self.rk!r}")
        if self.split not in SPLITTINGS:
            raise ConfigError(f"unknown splitting {self.split!r}")
        if self.postprocess and p.dim == 2:
            raise ConfigError("post-processing is only available in 1D")
        if not 0 <= self.component < p.n_components:
            raise ConfigError(f"component must be in [0, {p.n_components})")
        if self.norm_points not in NORM_POINTS:
            raise ConfigError(f"norm points must be one of {NORM_POINTS}")
        if self.limiter_m is not None and self.limiter_m < 0:
            raise ConfigError("limiter constant M must be non-negative")
        return self

    def manifest(self) -> str:
        d = asdict(self)
        d["tfinal"] = self.final_time
        return " ".join(f"{k}={_fmt_manifest(v)}" for k, v in d.items())


def _fmt_manifest(v) -> str:
    if isinstance(v, (tuple, list)):
        return ",".join(str(x) for x in v)
    return "off" if v is None else str(v)


def time_steps(tfinal: float, dt: float) -> list[float]:
    """Constant steps ``dt`` followed by one shorter step landing on ``tfinal``."""
    n = int(np.floor(tfinal / dt * (1 + 1e-12)))
    steps = [dt] * n
    rest = tfinal - n * dt
    if rest > 1e-12 * tfinal:
        steps.append(rest)
    return steps


def _perturbation(domain, dx):
    lo, hi = domain
    k = 2 * np.pi / (hi - lo)
    return (lambda x: np.sin(k * (x - lo)) * dx), (lambda x: k * np.cos(k * (x - lo)) * dx)


def build_system_1d(p: ProblemSpec, scheme: str, dx: float) -> tuple[CharSystem, SchemeVariant]:
    """The 1D system and scheme variant for one of the named schemes.

    ``eldg1``/``eldg3`` perturb the tracking velocities by ``sin`` of the
    domain phase times ``dx`` (away from zero), ``eldg2``/``eldg3`` build
    the eigenvector pair from a speed perturbed the same way, and the
    ``nmc-`` prefix freezes that pair per cell. ``rkdg`` tracks nothing.
    """
    nmc = scheme.startswith("nmc-")
    base = scheme[4:] if nmc else scheme
    bump, bump_dx = _perturbation(p.domain, dx)
    if p.kind == "scalar":
        sys = scalar_system(p.speed, p.source)
    elif p.kind == "wave":
        a, a_dx = p.speed, p.speed_dx
        if base in ("eldg2", "eldg3"):
            fa = (lambda x: a + 0 * x) if np.isscalar(a) else a
            fdx = (lambda x: 0 * x) if a_dx is None else a_dx
            sys = wave_system(a, n=2, axis=1, source=p.source,
                              speed_p=lambda x: fa(x) + bump(x),
                              speed_p_dx=lambda x: fdx(x) + bump_dx(x))
        else:
            sys = wave_system(a, n=2, axis=1, source=p.source, speed_p_dx=a_dx)
    else:
        raise ConfigError(f"problem {p.name} is not one-dimensional")
    if base == "rkdg":
        return sys, SchemeVariant(conservative=not nmc, node_velocity=EULERIAN.node_velocity, name=scheme)
    nu = None
    if base in ("eldg1", "eldg3"):
        nu = lambda x, t, lam: lam + np.sign(lam) * bump(x)[..., None]
    return sys, SchemeVariant(conservative=not nmc, node_velocity=nu, name=scheme)


def _lines(coords, x):
    return np.asarray(coords).reshape((-1,) + (1,) * (np.ndim(x) - 1))


def build_systems_2d(p: ProblemSpec):
    """Line-system factories for the x- and y-sweeps."""
    if p.kind == "constant2d":
        A, B = p.matrices
        return constant_system(A), constant_system(B)
    if p.kind != "wave2d":
        raise ConfigError(f"problem {p.name} is not two-dimensional")
    a, b = p.speed, p.speed_y
    if np.isscalar(a) and np.isscalar(b):
        return wave_system(a, n=3, axis=1), wave_system(b, n=3, axis=2)

    def sys_x(y):
        return wave_system(lambda x, t=0.0: a(x, _lines(y, x)), n=3, axis=1,
                           speed_p_dx=lambda x, t=0.0: p.speed_dx(x, _lines(y, x)), autonomous=True)

    def sys_y(x):
        return wave_system(lambda y, t=0.0: b(_lines(x, y), y), n=3, axis=2,
                           speed_p_dx=lambda y, t=0.0: p.speed_y_dy(_lines(x, y), y), autonomous=True)

    return sys_x, sys_y


@dataclass
class RunResult:
    field: object
    steps: int
    blowup: bool = False
    history: list = field(default_factory=list)


def _magnitude(U) -> float:
    with np.errstate(all="ignore"):
        v = float(np.max(np.abs(U)))
    return v if np.isfinite(v) else np.inf


def solve_1d(cfg: RunConfig, n: int, cfl: float,
             observer: Callable[[float, DGField], None] | None = None) -> RunResult:
    p = cfg.spec
    mesh = build_uniform_mesh(*p.domain, n)
    sys, variant = build_system_1d(p, cfg.scheme, mesh.dx)
    limiter = make_limiter(cfg.limiter_m)
    U0 = project_function(mesh, p.initial, cfg.degree)
    U = U0.coeffs[None]
    if limiter is not None:
        U = limiter(U, mesh)
    if observer is not None:
        observer(0.0, DGField(mesh, U[0], 0.0))
    ref = _magnitude(U)
    dt = cfl * mesh.dx / (p.dt_speed or p.max_speed[0])
    stepper = Stepper(mesh, sys, cfg.degree, variant, cfg.rk, limiter)
    t, count = 0.0, 0
    for h in time_steps(cfg.final_time, dt):
        with np.errstate(all="ignore"):
            U = stepper.step(U, t, h)
        t += h
        count += 1
        if _magnitude(U) > BLOWUP_FACTOR * ref:
            return RunResult(DGField(mesh, U[0], t), count, blowup=True)
        if observer is not None:
            observer(t, DGField(mesh, U[0], t))
    return RunResult(DGField(mesh, U[0], t), count)


def solve_2d(cfg: RunConfig, n: int, cfl: float,
             observer: Callable[[float, Field2D], None] | None = None) -> RunResult:
    p = cfg.spec
    (xl, xh), (yl, yh) = p.domain
    mx, my = build_uniform_mesh(xl, xh, n), build_uniform_mesh(yl, yh, n)
    limiter = make_limiter(cfg.limiter_m)
    splitter = Splitter(mx, my, *build_systems_2d(p), cfg.degree, tableau=cfg.rk, limiter=limiter)
    step = getattr(splitter, SPLITTINGS[cfg.split])
    state = project_2d(mx, my, p.initial, cfg.degree)
    if observer is not None:
        observer(0.0, state)
    ref = _magnitude(state.values)
    dt = cfl / (p.max_speed[0] / mx.dx + p.max_speed[1] / my.dx)
    count = 0
    for h in time_steps(cfg.final_time, dt):
        with np.errstate(all="ignore"):
            state = step(state, h)
        count += 1
        if _magnitude(state.values) > BLOWUP_FACTOR * ref:
            return RunResult(state, count, blowup=True)
        if observer is not None:
            observer(state.time, state)
    return RunResult(state, count)


def solve(cfg: RunConfig, n: int, cfl: float, observer=None) -> RunResult:
    return (solve_1d if cfg.spec.dim == 1 else solve_2d)(cfg, n, cfl, observer)


def _errors(cfg: RunConfig, res: RunResult):
    p = cfg.spec
    if p.exact is None:
        raise ConfigError(f"problem {p.name} has no exact solution")
    nq = cfg.degree + 1 if cfg.norm_points == "nodes" else None
    return error_norms(res.field, p.exact, res.field.time, postprocess=cfg.postprocess, nq=nq)


def run_convergence(cfg: RunConfig) -> list[dict]:
    """Errors and orders of component ``cfg.component`` over the mesh list (first CFL)."""
    cfg.validate()
    if len(cfg.nx) < 2:
        raise ConfigError("a convergence study needs at least two meshes")
    c = cfg.component
    rows = []
    for n in cfg.nx:
        res = solve(cfg, n, cfg.cfl[0])
        e = _errors(cfg, res)
        rows.append({"mesh": n, "l1": e.l1[c], "l2": e.l2[c], "linf": e.linf[c],
                     "steps": res.steps, "blowup": int(res.blowup)})
    ratios = [b / a for a, b in zip(cfg.nx[:-1], cfg.nx[1:])]
    for key in ("l1", "l2", "linf"):
        errs = [r[key] for r in rows]
        orders: list = [None]
        for i, ratio in enumerate(ratios):
            orders.append(convergence_orders(errs[i:i + 2], ratio)[1])
        for r, o in zip(rows, orders):
            r[key + "_order"] = o
    cols = ["mesh", "l1", "l1_order", "l2", "l2_order", "linf", "linf_order", "steps", "blowup"]
    return [{k: r[k] for k in cols} for r in rows]


def run_cfl_sweep(cfg: RunConfig) -> list[dict]:
    """L-infinity error versus CFL on the first mesh; blow-ups are flagged, not raised."""
    cfg.validate()
    c = cfg.component
    n = cfg.nx[0]
    rows = []
    for cfl in cfg.cfl:
        res = solve(cfg, n, cfl)
        if res.blowup or cfg.spec.exact is None:
            linf = np.inf if res.blowup else np.nan
        else:
            linf = _errors(cfg, res).linf[c]
        rows.append({"cfl": cfl, "mesh": n, "steps": res.steps, "linf": linf,
                     "blowup": int(res.blowup)})
    return rows


def run_mass_tracking(cfg: RunConfig) -> list[dict]:
    """Per-step absolute mass change of every component (first mesh and CFL)."""
    cfg.validate()
    rows: list[dict] = []
    start: list[np.ndarray] = []

    def mass_of(fld):
        return fld.total_mass() if isinstance(fld, Field2D) else total_mass(fld)

    def observe(t, fld):
        m = mass_of(fld)
        if not start:
            start.append(m)
        row = {"t": t}
        for i, d in enumerate(np.abs(m - start[0])):
            row[f"mass_err_u{i + 1}"] = d
        rows.append(row)

    solve(cfg, cfg.nx[0], cfg.cfl[0], observe)
    return rows


def solution_rows(res: RunResult, spec: ProblemSpec) -> list[dict]:
    """Plot-ready point values (Gauss nodes of every cell) with the exact solution if known."""
    fld = res.field
    rows = []
    if isinstance(fld, Field2D):
        x, y = fld.node_coordinates()
        X, Y = np.broadcast_arrays(x[:, None, :, None], y[None, :, None, :])
        vals = fld.values
        ex = spec.exact(X, Y, fld.time) if spec.exact is not None else None
        for idx in np.ndindex(X.shape):
            r = {"x": X[idx], "y": Y[idx]}
            r.update({f"u{i + 1}": v for i, v in enumerate(vals[idx])})
            if ex is not None:
                r.update({f"exact_u{i + 1}": v for i, v in enumerate(ex[idx])})
            rows.append(r)
        return rows
    from .basis import _gauss
    xg = _gauss(fld.degree + 1)[0]
    m = fld.mesh
    x = (m.centers[:, None] + 0.5 * m.widths[:, None] * xg).ravel()
    vals = fld(x)
    ex = spec.exact(x, fld.time) if spec.exact is not None else None
    for i, xv in enumerate(x):
        r = {"x": xv}
        r.update({f"u{c + 1}": v for c, v in enumerate(vals[i])})
        if ex is not None:
            r.update({f"exact_u{c + 1}": v for c, v in enumerate(np.atleast_1d(ex[i]))})
        rows.append(r)
    return rows


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.6e" % v
    return str(v)


def write_csv(rows: list[dict], path: str | None, cfg: RunConfig | None = None) -> str:
    """CSV text (also written to ``path`` when given) with a leading manifest comment."""
    buf = io.StringIO()
    if cfg is not None:
        buf.write("# " + cfg.manifest() + "\n")
    if rows:
        w = csv.writer(buf, lineterminator="\n")
        cols = list(rows[0])
        w.writerow(cols)
        for r in rows:
            w.writerow([_fmt(r.get(k)) for k in cols])
    text = buf.getvalue()
    if path:
        with open(path, "w", encoding="utf-8") as f:
            f.write(text)
    return text
