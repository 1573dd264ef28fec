"""Mass-conservative Eulerian-Lagrangian RK DG for 1D hyperbolic systems.

Each characteristic family ``i`` owns a set of dynamic elements whose nodes
move with frozen velocities ``nu_i``. For solution row ``r`` the quantity
``W[r, i] U`` (``W[r, i] = R_p[r, i] l_p^(i)``) is evolved on family ``i``'s
elements and the families are summed on the background mesh, where
``sum_i W[r, i] = e_r`` returns the row of ``U``.

All arrays carry a leading line-batch axis ``B`` (1 for a single 1D problem)
so that the 2D splitting can sweep many grid lines at once. Field
coefficients have shape ``(B, N, n, k + 1)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy import sparse

from .basis import _gauss, legendre_dtable, legendre_table, n_quad
from .characteristics import CharSystem
from .mesh import Mesh1D, UpstreamMesh, check_widths
from .projection import DGField, Overlap, moments_to_coeffs


@dataclass(frozen=True)
class ButcherTableau:
    tag: str
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.a, float)
        b = np.asarray(self.b, float)
        c = np.asarray(self.c, float)
        if abs(b.sum() - 1.0) > 1e-14 or np.max(np.abs(a.sum(axis=1) - c)) > 1e-14:
            raise ValueError(f"inconsistent tableau {self.tag}")
        if np.any(np.triu(a) != 0):
            raise ValueError("only explicit tableaus are supported")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", c)

    @property
    def stages(self) -> int:
        return self.b.size


TABLEAUS = {
    "fe": ButcherTableau("fe", [[0.0]], [1.0], [0.0]),
    "ssprk2": ButcherTableau("ssprk2", [[0, 0], [1, 0]], [0.5, 0.5], [0, 1]),
    "rk2": ButcherTableau("rk2", [[0, 0], [0.5, 0]], [0, 1], [0, 0.5]),
    "rk4": ButcherTableau(
        "rk4",
        [[0, 0, 0, 0], [0.5, 0, 0, 0], [0, 0.5, 0, 0], [0, 0, 1, 0]],
        [1 / 6, 1 / 3, 1 / 3, 1 / 6],
        [0, 0.5, 0.5, 1],
    ),
}


def get_tableau(tag) -> ButcherTableau:
    if isinstance(tag, ButcherTableau):
        return tag
    try:
        return TABLEAUS[tag]
    except KeyError:
        raise ValueError(f"unsupported tableau {tag!r}; choose from {sorted(TABLEAUS)}") from None


@dataclass(frozen=True)
class SchemeVariant:
    """How node velocities and eigenvector weights are chosen.

    ``node_velocity(x, t, lam) -> nu`` maps the exact eigenvalues at the
    background nodes (trailing axis = family) to the tracking velocities;
    ``None`` tracks with the eigenvalues themselves. The non-conservative
    (``conservative=False``) variant freezes the eigenvector pair per
    background cell at its center.
    """

    conservative: bool = True
    node_velocity: Optional[Callable] = None
    name: str = "eldg"


CONSERVATIVE = SchemeVariant()
EULERIAN = SchemeVariant(node_velocity=lambda x, t, lam: np.zeros_like(lam), name="rkdg")


def _family_diag(R: np.ndarray) -> np.ndarray:
    """``R[b, i, ..., :, i]`` for arrays shaped ``(B, m, ..., n, m)``."""
    return np.moveaxis(np.diagonal(R, axis1=1, axis2=R.ndim - 1), -1, 1)


def _family_row(L: np.ndarray) -> np.ndarray:
    """``L[b, i, ..., i, :]`` for arrays shaped ``(B, m, ..., m, n)``."""
    return np.moveaxis(np.diagonal(L, axis1=1, axis2=L.ndim - 2), -1, 1)


def _fit(v, x: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    return np.broadcast_to(v, np.broadcast_shapes(v.shape[:-2], x.shape) + v.shape[-2:])


def family_weights(sys: CharSystem, x: np.ndarray, t: float) -> np.ndarray:
    """``W[r, i, :]`` for family ``i`` at points ``x`` shaped ``(B, m, ...)``.

    Returns ``(B, m, ..., n, n)``: row ``r``, component ``n``.
    """
    Ri = _family_diag(_fit(sys.right(x, t), x))
    Li = _family_row(_fit(sys.left(x, t), x))
    return Ri[..., :, None] * Li[..., None, :]


def family_weights_dx(sys: CharSystem, x: np.ndarray, t: float, h: float) -> np.ndarray:
    if sys.right_dx is not None and sys.left_dx is not None:
        Ri = _family_diag(_fit(sys.right(x, t), x))
        Li = _family_row(_fit(sys.left(x, t), x))
        Rxi = _family_diag(_fit(sys.right_dx(x, t), x))
        Lxi = _family_row(_fit(sys.left_dx(x, t), x))
        return Rxi[..., :, None] * Li[..., None, :] + Ri[..., :, None] * Lxi[..., None, :]
    return (family_weights(sys, x + h, t) - family_weights(sys, x - h, t)) / (2 * h)



def node_velocities(mesh: Mesh1D, sys: CharSystem, t: float, variant: SchemeVariant) -> np.ndarray:
    """Tracking velocities ``(B', m, N + 1)`` frozen at time ``t``.

    ``B'`` is 1 unless the system itself varies between lines.
    """
    x = mesh.nodes[None, :]
    lam = np.asarray(sys.eigenvalues(x, t), dtype=float)
    lam = np.broadcast_to(lam, np.broadcast_shapes(lam.shape[:-1], x.shape) + lam.shape[-1:])
    nu = lam if variant.node_velocity is None else np.asarray(variant.node_velocity(x, t, lam), float)
    nu = np.array(np.moveaxis(np.broadcast_to(nu, lam.shape), -1, 1))
    if mesh.periodic:
        nu[..., -1] = nu[..., 0]
    return nu


def nmc_cell_weights(mesh: Mesh1D, sys: CharSystem) -> np.ndarray:
    """Cellwise-frozen weights ``(B', m, N, n, n)`` from the pair at cell centers."""
    xc = mesh.centers[None, :]
    R = _fit(sys.right(xc, 0.0), xc)
    L = _fit(sys.left(xc, 0.0), xc)
    W = R[..., :, :, None] * L[..., None, :, :]  # (B, N, r, i, n)
    return np.ascontiguousarray(np.moveaxis(W, -2, 1))


def _matvec(M: np.ndarray, v: np.ndarray) -> np.ndarray:
    return np.einsum("...ab,...b->...a", M, v)


class _Geometry:
    """Family meshes at a fixed time offset ``s = T_target - tau`` from a target."""

    def __init__(self, mesh: Mesh1D, nu: np.ndarray, s: float, nq: int):
        self.nodes = mesh.nodes - s * nu
        self.widths = np.diff(self.nodes, axis=-1)
        check_widths(self.widths, what="traced")
        self.overlap = Overlap(mesh.nodes, self.nodes, mesh.length)
        self.sq = self.overlap.quadrature(nq)


class _FaceVolume:
    """Flux and volume tables of the family meshes with the given nodes at time ``tau``."""

    def __init__(self, eng: "StepEngine", nodes: np.ndarray, tau: float):
        sys, nu, n = eng.sys, eng.nu, eng.sys.n
        self.widths = np.diff(nodes, axis=-1)
        # interface j+1/2 of family i sits at node j+1
        xi = nodes[..., 1:]
        A = _fit(sys.flux_matrix(xi, tau), xi)
        lam = sys.eigenvalues(xi, tau)
        nu_nodes = np.moveaxis(nu[..., 1:], 1, -1)[:, None]
        alpha = np.max(np.abs(lam - nu_nodes), axis=-1)
        self.half_a = 0.5 * (A - nu[..., 1:, None, None] * np.eye(n))
        self.half_alpha = 0.5 * alpha[..., None]
        self.w_face = family_weights(sys, xi, tau) if eng.variant.conservative else None

        xc = nodes[..., :-1, None] + 0.5 * (eng.xg + 1.0) * self.widths[..., None]
        self.xc = xc
        Ac = _fit(sys.flux_matrix(xc, tau), xc)
        ac = nu[..., :-1, None] + 0.5 * (eng.xg + 1.0) * (nu[..., 1:, None] - nu[..., :-1, None])
        if eng.variant.conservative:
            Wc = family_weights(sys, xc, tau)
        else:
            Wc = eng.nmc_weights[..., None, :, :]
        self.w_vol = Wc
        self.vol = np.einsum("...rn,...nb->...rb", Wc, Ac - ac[..., None, None] * np.eye(n))


class _Prepared:
    """Tables for the family meshes at offset ``s`` (and time ``tau`` if not autonomous)."""

    def __init__(self, eng: "StepEngine", s: float, tau: float):
        self.geo = geo = eng.geometry(s)
        sq = geo.sq
        self.p_src = legendre_table(eng.k, sq.xi_src)
        self.wp_dst = sq.w[..., None] * legendre_table(eng.k, sq.xi_dst)
        self.fv = _FaceVolume(eng, geo.nodes, tau)
        self.corr = None
        if eng.variant.conservative and not eng.sys.constant_pair:
            dW = family_weights_dx(eng.sys, sq.x, tau, eng.fd_h)
            A = _fit(eng.sys.flux_matrix(sq.x, tau), sq.x)
            self.corr = np.einsum("...rn,...nb->...rb", dW, A)

    def eval_source(self, U: np.ndarray) -> np.ndarray:
        """Background field ``(B, N, n, K)`` at the subinterval points."""
        ov = self.geo.overlap
        if U.shape[0] == 1:
            sub = U[0][ov.src]
        elif ov.src.shape[0] == 1:
            sub = U[:, ov.src[0]]
        else:
            sub = U[np.arange(U.shape[0])[:, None, None], ov.src]
        return np.einsum("...sck,...sqk->...sqc", sub, self.p_src)

    def moments(self, vals: np.ndarray) -> np.ndarray:
        """``vals`` is ``batch + (S, nq, c)``; returns ``batch + (N, c, K)``."""
        per_sub = np.einsum("...sqc,...sqk->...sck", vals, self.wp_dst)
        return self.geo.overlap.reduce(per_sub)


class StepEngine:
    """Geometry and right-hand sides for one set of frozen node velocities."""

    def __init__(self, mesh: Mesh1D, sys: CharSystem, variant: SchemeVariant, k: int,
                 nu: np.ndarray, nmc_weights: np.ndarray | None = None):
        self.mesh, self.sys, self.variant, self.k = mesh, sys, variant, k
        self.nu = nu
        self.nq = n_quad(k)
        # a varying eigenvector pair makes the subinterval integrands non-polynomial;
        # families integrate them on different pieces, so extra points keep the
        # family sum (and hence mass) exact to round-off
        self.nq_sub = self.nq if sys.constant_pair else self.nq + 4
        self.xg, self.wg = _gauss(self.nq)
        self.Pg = legendre_table(k, self.xg)
        self.wPg = self.wg[:, None] * self.Pg
        self.wdPg = self.wg[:, None] * legendre_dtable(k, self.xg)
        self.sign = (-1.0) ** np.arange(k + 1)
        self.fd_h = 1e-6 * mesh.dx
        if not variant.conservative and nmc_weights is None:
            nmc_weights = nmc_cell_weights(mesh, sys)
        self.nmc_weights = nmc_weights
        self._geo: dict = {}
        self._prep: dict = {}
        self._mass_w: dict = {}

    def geometry(self, s: float) -> _Geometry:
        g = self._geo.get(s)
        if g is None:
            g = self._geo[s] = _Geometry(self.mesh, self.nu, s, self.nq_sub)
        return g

    def _key(self, s, tau):
        return s if self.sys.autonomous else (s, tau)

    def prepared(self, s: float, tau: float) -> _Prepared:
        key = self._key(s, tau)
        p = self._prep.get(key)
        if p is None:
            p = self._prep[key] = _Prepared(self, s, tau)
        return p

    def mass(self, U: np.ndarray, s: float, t: float) -> np.ndarray:
        """Integrals of ``W[:, i] U`` against the traced test functions, per family."""
        prep = self.prepared(s, t)
        key = self._key(s, t)
        W = self._mass_w.get(key)
        if W is None:
            sq = prep.geo.sq
            if self.variant.conservative:
                W = family_weights(self.sys, sq.x, t)
            else:
                dst = sq.ov.dst
                Wc = self.nmc_weights
                b = np.arange(Wc.shape[0])[:, None, None] if Wc.shape[0] > 1 else 0
                W = Wc[b, np.arange(Wc.shape[1])[None, :, None], dst][..., None, :, :]
            self._mass_w[key] = W
        return prep.moments(_matvec(W, prep.eval_source(U)))

    def residual(self, U: np.ndarray, tau: float, s: float, source: bool = True) -> np.ndarray:
        """Family right-hand sides ``(B, m, N, n, K)`` on the meshes at offset ``s``."""
        prep = self.prepared(s, tau)
        Ub = prep.eval_source(U)
        Ut = moments_to_coeffs(prep.moments(Ub), prep.geo.widths[..., None, None])
        out = self.face_volume_terms(Ut, prep.fv, tau, source)
        if prep.corr is not None:
            out = out + prep.moments(_matvec(prep.corr, Ub))
        return out

    def source_terms(self, tau: float, s: float) -> np.ndarray:
        """Source contribution ``(B', m, N, n, K)`` alone."""
        fv = self.prepared(s, tau).fv
        sf = _matvec(fv.w_vol, self.sys.source(fv.xc, tau))
        return 0.5 * fv.widths[..., None, None] * np.einsum("...qr,qk->...rk", sf, self.wPg)

    def face_volume_terms(self, Ut: np.ndarray, fv: _FaceVolume, tau: float,
                          source: bool = True) -> np.ndarray:
        """Flux, volume and source terms for fields already on the family meshes."""
        Uminus = Ut.sum(axis=-1)
        Uplus = np.roll(Ut @ self.sign, -1, axis=2)
        G = _matvec(fv.half_a, Uplus + Uminus) - fv.half_alpha * (Uplus - Uminus)
        if fv.w_face is not None:
            Fr = _matvec(fv.w_face, G)
            Fl = np.roll(Fr, 1, axis=2)
        else:
            Wc = self.nmc_weights
            Fr = _matvec(Wc, G)
            Fl = _matvec(Wc, np.roll(G, 1, axis=2))
        res = Fl[..., None] * self.sign - Fr[..., None]
        Uc = np.einsum("...ck,qk->...qc", Ut, self.Pg)
        res = res + np.einsum("...qr,qk->...rk", _matvec(fv.vol, Uc), self.wdPg)
        if source and self.sys.source is not None:
            sf = _matvec(fv.w_vol, self.sys.source(fv.xc, tau))
            res = res + 0.5 * fv.widths[..., None, None] * np.einsum("...qr,qk->...rk", sf, self.wPg)
        return res

    # family-summed forms used by the steppers

    def mass_sum(self, U: np.ndarray, s: float, t: float) -> np.ndarray:
        return self.mass(U, s, t).sum(axis=1)

    def residual_sum(self, U: np.ndarray, tau: float, s: float) -> np.ndarray:
        return self.residual(U, tau, s).sum(axis=1)

    def stencil_radius(self, s: float) -> int:
        """Bound on how many cells away a background cell can influence an update."""
        ov = self.geometry(s).overlap
        N = self.mesh.n_cells
        live = ov.hi > ov.lo
        d = (ov.src + ov.shift * N - ov.dst)[live]
        return int(np.max(np.abs(d))) + 1


class BandOperator:
    """Sparse form of a linear map between background coefficient arrays.

    Built by probing ``apply`` with periodic colourings of unit modes: with
    colour period ``P >= 2 r + 1`` (a divisor of ``N``) no two probed cells
    reach the same output cell, so every response entry maps to exactly one
    input cell.
    """

    def __init__(self, apply: Callable, N: int, n: int, K: int, radius: int, lines: int):
        P = next(p for p in range(min(2 * radius + 1, N), N + 1) if N % p == 0)
        nk = n * K
        probes = np.zeros((P, n, K, N, n, K))
        for c in range(P):
            for a in range(n):
                for m in range(K):
                    probes[c, a, m, c::P, a, m] = 1.0
        probes = probes.reshape(P * nk, N, n, K)
        if lines == 1:
            resp = apply(probes)[None]  # (1, Q, N, n, K)
        else:
            resp = np.stack([apply(np.broadcast_to(q, (lines,) + q.shape)) for q in probes], axis=1)
        resp = resp.reshape(lines, P, nk, N, nk)
        i = np.arange(N)
        c = np.arange(P)
        d = np.mod(c[None, :] - i[:, None], P)
        d = np.where(d <= radius, d, d - P)
        j = np.mod(i[:, None] + d, N)  # (N, P) input cell per output cell and colour
        g = np.arange(lines)[:, None, None, None, None]
        rows = ((g * N + i[None, :, None, None, None]) * nk + np.arange(nk)[None, None, None, None, :])
        cols = ((g * N + j[None, :, :, None, None]) * nk + np.arange(nk)[None, None, None, :, None])
        vals = resp.transpose(0, 3, 1, 2, 4)  # (g, i, c, in, out)
        shape = (lines * N * nk,) * 2
        rows, cols = np.broadcast_arrays(rows, cols)
        self.matrix = sparse.csr_matrix((vals.ravel(), (rows.ravel(), cols.ravel())), shape=shape)
        self.matrix.eliminate_zeros()
        self.lines = lines
        self.shape = (N, n, K)

    def __call__(self, U: np.ndarray) -> np.ndarray:
        B = U.shape[0]
        if self.lines == 1:
            flat = U.reshape(B, -1).T
            return (self.matrix @ flat).T.reshape(U.shape)
        if B != self.lines:
            raise ValueError(f"operator built for {self.lines} lines, got {B}")
        return (self.matrix @ U.reshape(-1)).reshape(U.shape)


class LinearEngine:
    """Family-summed mass and residual maps of an autonomous engine as sparse operators."""

    def __init__(self, eng: StepEngine):
        self.eng = eng
        self.lines = eng.nu.shape[0]
        self._ops: dict = {}
        self._src: dict = {}

    def _op(self, kind: str, s: float, t: float) -> BandOperator:
        key = (kind, s)
        op = self._ops.get(key)
        if op is None:
            eng = self.eng
            N = eng.mesh.n_cells
            n, K = eng.sys.n, eng.k + 1
            if kind == "mass":
                fn = lambda U: eng.mass(U, s, t).sum(axis=1)
            else:
                fn = lambda U: eng.residual(U, t, s, source=False).sum(axis=1)
            op = self._ops[key] = BandOperator(fn, N, n, K, eng.stencil_radius(s), self.lines)
        return op

    def mass_sum(self, U: np.ndarray, s: float, t: float) -> np.ndarray:
        if s == 0.0:
            return U * (self.eng.mesh.widths[:, None, None] / (2 * np.arange(self.eng.k + 1) + 1))
        return self._op("mass", s, t)(U)

    def residual_sum(self, U: np.ndarray, tau: float, s: float) -> np.ndarray:
        out = self._op("rhs", s, tau)(U)
        if self.eng.sys.source is not None:
            out = out + self.eng.source_terms(tau, s).sum(axis=1)
        return out


class Stepper:
    """EL-RK time stepper for a batch of lines sharing a background mesh.

    Geometry and coefficient tables are cached per step size (and per start
    time when the system is not autonomous), so repeated steps with the same
    ``dt`` only redo the field-dependent work.
    """

    def __init__(self, mesh: Mesh1D, sys: CharSystem, degree: int,
                 variant: SchemeVariant = CONSERVATIVE, tableau="rk4",
                 limiter: Callable | None = None, cache_size: int = 4, linearize: bool = True):
        self.mesh, self.sys, self.k = mesh, sys, degree
        self.linearize = linearize and sys.autonomous
        self.variant = variant
        self.tableau = get_tableau(tableau)
        self.limiter = limiter
        self.cache_size = cache_size
        self._engines: dict = {}
        self._nmc = None if variant.conservative else nmc_cell_weights(mesh, sys)

    def engine(self, t: float, dt: float):
        key = dt if self.sys.autonomous else (t, dt)
        eng = self._engines.pop(key, None)
        if eng is None:
            nu = node_velocities(self.mesh, self.sys, t + dt, self.variant)
            # every stage mesh lies between the background and the full-step upstream mesh
            check_widths(self.mesh.widths - dt * np.diff(nu, axis=-1), what="upstream")
            eng = StepEngine(self.mesh, self.sys, self.variant, self.k, nu, self._nmc)
            if self.linearize:
                eng = LinearEngine(eng)
        self._engines[key] = eng
        while len(self._engines) > self.cache_size:
            self._engines.pop(next(iter(self._engines)))
        return eng

    def step(self, U: np.ndarray, t: float, dt: float) -> np.ndarray:
        """Advance coefficients ``U`` (``(B, N, n, K)``) from ``t`` to ``t + dt``.

        Every intermediate stage lives on the background mesh: stage ``l`` is
        assembled on auxiliary family meshes that end on the background cells
        at the stage time, and the final update integrates the stage
        right-hand sides over the family meshes of the full step with
        weights ``b``.
        """
        U = np.asarray(U, dtype=float)
        if U.ndim != 4 or U.shape[2] != self.sys.n or U.shape[-1] != self.k + 1:
            raise ValueError(f"coefficients {U.shape} do not match the system/degree")
        if dt == 0:
            return U.copy()
        eng = self.engine(t, dt)
        tab, limiter, mesh = self.tableau, self.limiter, self.mesh
        h = mesh.widths[:, None, None]
        c = tab.c
        masses: dict[float, np.ndarray] = {}
        resid: dict[tuple[int, float], np.ndarray] = {}
        stages = [U]

        def assemble(cl, coeffs):
            mom = masses.get(cl)
            if mom is None:
                mom = masses[cl] = eng.mass_sum(U, cl * dt, t)
            for p, a in enumerate(coeffs):
                if a != 0.0:
                    key = (p, cl - c[p])
                    r = resid.get(key)
                    if r is None:
                        r = resid[key] = eng.residual_sum(stages[p], t + c[p] * dt, key[1] * dt)
                    mom = mom + (dt * a) * r
            return moments_to_coeffs(mom, h)

        for l in range(1, tab.stages):
            Ul = assemble(c[l], tab.a[l, :l])
            if limiter is not None:
                Ul = limiter(Ul, mesh)
            stages.append(Ul)
        out = assemble(1.0, tab.b)
        if limiter is not None:
            out = limiter(out, mesh)
        return out


def el_rk_step(U: np.ndarray, t: float, dt: float, mesh: Mesh1D, sys: CharSystem,
               variant: SchemeVariant = CONSERVATIVE, tableau="rk4",
               limiter: Callable | None = None) -> np.ndarray:
    """One step of batched coefficients ``(B, N, n, K)``; see :class:`Stepper`."""
    U = np.asarray(U, dtype=float)
    if U.ndim == 4 and U.shape[2] != sys.n:
        raise ValueError(f"field has {U.shape[2]} components, system has {sys.n}")
    return Stepper(mesh, sys, U.shape[-1] - 1, variant, tableau, limiter,
                   linearize=False).step(U, t, dt)


def forward_euler_step(U_n: DGField, dt: float, sys: CharSystem,
                       variant: SchemeVariant = CONSERVATIVE) -> DGField:
    c = el_rk_step(U_n.coeffs[None], U_n.time, dt, U_n.mesh, sys, variant, "fe")[0]
    return U_n.copy(c, U_n.time + dt)


def step_field(U_n: DGField, dt: float, sys: CharSystem, variant: SchemeVariant = CONSERVATIVE,
               tableau="rk4", limiter=None) -> DGField:
    c = el_rk_step(U_n.coeffs[None], U_n.time, dt, U_n.mesh, sys, variant, tableau, limiter)[0]
    return U_n.copy(c, U_n.time + dt)


def system_rhs(fields: list[DGField], meshes: list[UpstreamMesh], t: float, sys: CharSystem,
               variant: SchemeVariant = CONSERVATIVE, background: DGField | None = None) -> np.ndarray:
    """Family right-hand sides ``(m, N, n, K)`` for fields given on the family meshes at ``t``.

    ``fields[i]`` lives on ``meshes[i].nodes_at(t)``. The eigenvector
    correction integral uses ``background`` when given (the conservative
    scheme evaluates it with the background-mesh solution), else the family
    field itself.
    """
    mesh = meshes[0].source_mesh
    nu = np.stack([np.asarray(m.node_velocities, float) for m in meshes])[None]
    eng = StepEngine(mesh, sys, variant, fields[0].degree, nu)
    nodes = np.stack([m.nodes_at(t) for m in meshes])[None]
    Ut = np.stack([f.coeffs for f in fields])[None]
    fv = _FaceVolume(eng, nodes, t)
    res = eng.face_volume_terms(Ut, fv, t)
    if variant.conservative and not sys.constant_pair:
        if background is not None:
            prep = eng.prepared(meshes[0].t_end - t, t)
            res = res + prep.moments(_matvec(prep.corr, prep.eval_source(background.coeffs[None])))
        else:
            dW = family_weights_dx(sys, fv.xc, t, eng.fd_h)
            dWA = np.einsum("...rn,...nb->...rb", dW, _fit(sys.flux_matrix(fv.xc, t), fv.xc))
            v = _matvec(dWA, np.einsum("...ck,qk->...qc", Ut, eng.Pg))
            res = res + 0.5 * fv.widths[..., None, None] * np.einsum("...qr,qk->...rk", v, eng.wPg)
    return res[0]


def total_mass(U: DGField) -> np.ndarray:
    """Per-component integral over the domain, from the cell means."""
    return np.einsum("jc,j->c", U.coeffs[:, :, 0], U.mesh.widths)
