"""Independent reference implementations used as oracles by the tests."""

import numpy as np
import pytest
from numpy.polynomial import legendre as npleg


def leg(k, xi):
    """Legendre values P_0..P_k at xi via numpy's own series evaluation."""
    xi = np.asarray(xi, float)
    return np.stack([npleg.legval(xi, np.eye(k + 1)[m]) for m in range(k + 1)], axis=-1)


def dleg(k, xi):
    xi = np.asarray(xi, float)
    return np.stack([npleg.legval(xi, npleg.legder(np.eye(k + 1)[m])) if m else 0 * xi
                     for m in range(k + 1)], axis=-1)


def rkdg_rhs(U, nodes, A, lam, src, t, nq):
    """Classical modal DG right-hand side of U_t + (A U)_x = F with a Lax-Friedrichs flux.

    ``U`` is ``(N, n, K)``; ``A(x)``, ``lam(x)``, ``src(x, t)`` act on 1D arrays.
    Written cell by cell with no shared code from the package.
    """
    N, n, K = U.shape
    k = K - 1
    xg, wg = npleg.leggauss(nq)
    out = np.zeros_like(U)
    ends_r = np.ones(K)
    ends_l = (-1.0) ** np.arange(K)
    Ph, dPh = leg(k, xg), dleg(k, xg)
    flux = np.zeros((N, n))
    for j in range(N):
        jp = (j + 1) % N
        um = U[j] @ ends_r
        up = U[jp] @ ends_l
        xf = nodes[j + 1]
        Af = A(np.array([xf]))[0]
        alpha = np.max(np.abs(lam(np.array([xf]))[0]))
        flux[j] = 0.5 * (Af @ (up + um) - alpha * (up - um))
    for j in range(N):
        w = nodes[j + 1] - nodes[j]
        xq = 0.5 * (nodes[j] + nodes[j + 1]) + 0.5 * w * xg
        Uq = np.einsum("ck,qk->qc", U[j], Ph)
        AU = np.einsum("qab,qb->qa", A(xq), Uq)
        vol = np.einsum("q,qc,qk->ck", wg, AU, dPh)
        r = vol - np.outer(flux[j], ends_r) + np.outer(flux[j - 1], ends_l)
        if src is not None:
            r += 0.5 * w * np.einsum("q,qc,qk->ck", wg, src(xq, t), Ph)
        out[j] = r / (w / (2 * np.arange(K) + 1))
    return out


def rkdg_step(U, t, dt, tab, rhs):
    """Explicit Butcher step Y_l = U + dt sum_p a_lp L(Y_p, t + c_p dt)."""
    ks = []
    for l in range(tab.stages):
        Y = U + dt * sum(tab.a[l, p] * ks[p] for p in range(l))
        ks.append(rhs(Y, t + tab.c[l] * dt))
    return U + dt * sum(b * kk for b, kk in zip(tab.b, ks))


def brute_project(src_nodes, src_coeffs, dst_nodes, k, panels=50, pts=6):
    """Weak-form projection by dense composite quadrature and a dense solve.

    Breakpoints come from every periodic image of the source nodes that falls
    inside a destination cell; each piece gets ``panels`` Gauss panels.
    """
    L = src_nodes[-1] - src_nodes[0]
    Ns = src_nodes.size - 1
    xg, wg = npleg.leggauss(pts)
    out = []
    for j in range(dst_nodes.size - 1):
        a, b = dst_nodes[j], dst_nodes[j + 1]
        cuts = [a, b]
        for p in range(-3, 4):
            for x in src_nodes + p * L:
                if a < x < b:
                    cuts.append(x)
        cuts = np.unique(cuts)
        M = np.zeros((k + 1, k + 1))
        rhs = np.zeros((src_coeffs.shape[1], k + 1))
        for lo, hi in zip(cuts[:-1], cuts[1:]):
            edges = np.linspace(lo, hi, panels + 1)
            for pl, ph in zip(edges[:-1], edges[1:]):
                x = 0.5 * (pl + ph) + 0.5 * (ph - pl) * xg
                w = 0.5 * (ph - pl) * wg
                phi = leg(k, 2 * (x - a) / (b - a) - 1)
                M += np.einsum("q,qa,qb->ab", w, phi, phi)
                r = src_nodes[0] + np.mod(x - src_nodes[0], L)
                s = np.clip(np.searchsorted(src_nodes, 0.5 * (r.min() + r.max()), side="right") - 1,
                            0, Ns - 1)
                xi = 2 * (r - src_nodes[s]) / (src_nodes[s + 1] - src_nodes[s]) - 1
                v = np.einsum("ck,qk->qc", src_coeffs[s], leg(src_coeffs.shape[-1] - 1, xi))
                rhs += np.einsum("q,qc,qa->ca", w, v, phi)
        out.append(np.linalg.solve(M, rhs.T).T)
    return np.array(out)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE: dict[int, str] = {}


def record_criterion(number: int, ok: bool, detail: str) -> str:
    """Store (and return) the one-line verdict of an acceptance criterion."""
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'} {detail}"
    ACCEPTANCE[number] = line
    print(line)
    return line


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.write_sep("=", "acceptance criteria")
        for n in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[n])
