import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from eldg.characteristics import wave_system
from eldg.harness import build_system_1d
from eldg.mesh import build_uniform_mesh, trace_upstream
from eldg.problems import get_problem
from eldg.projection import DGField, project_function
from eldg.system import (EULERIAN, TABLEAUS, ButcherTableau, SchemeVariant, Stepper, el_rk_step,
                         forward_euler_step, get_tableau, node_velocities, system_rhs, total_mass)

from conftest import rkdg_rhs, rkdg_step


def _oracle_parts(sys):
    A = lambda x: sys.flux_matrix(x[None], 0.0)[0]
    lam = lambda x: sys.eigenvalues(x[None], 0.0)[0]
    src = None if sys.source is None else (lambda x, t: sys.source(x[None], t)[0])
    return A, lam, src


def test_tableaus_are_consistent():
    for tab in TABLEAUS.values():
        assert tab.b.sum() == pytest.approx(1.0)
        np.testing.assert_allclose(tab.a.sum(axis=1), tab.c)
    with pytest.raises(ValueError):
        ButcherTableau("bad", [[0, 0], [0.5, 0]], [0.5, 0.5], [0, 1])
    with pytest.raises(ValueError):
        get_tableau("rk7")


def test_total_mass_examples():
    m = build_uniform_mesh(0, 2 * np.pi, 40)
    assert abs(total_mass(project_function(m, np.sin, 2))[0]) <= 1e-13
    c = project_function(m, lambda x: 3.0 + 0 * x, 1)
    assert total_mass(c)[0] == pytest.approx(3.0 * 2 * np.pi, rel=1e-14)
    m = build_uniform_mesh(0, 2 * np.pi, 200)
    step = get_problem("wave-step").initial
    u = project_function(m, step, 0)
    assert total_mass(u)[0] == pytest.approx(0.5 * 2 * np.pi + 0.5 * 0.1 * np.pi, rel=1e-12)


@pytest.mark.parametrize("k", [1, 2])
def test_eulerian_rhs_matches_rkdg(k, rng):
    p = get_problem("wave-variable")
    mesh = build_uniform_mesh(*p.domain, 8)
    sys, variant = build_system_1d(p, "rkdg", mesh.dx)
    U = rng.normal(size=(8, 2, k + 1))
    meshes = [trace_upstream(mesh, np.zeros(9), 0.1, t_end=0.4) for _ in range(2)]
    got = system_rhs([DGField(mesh, U)] * 2, meshes, 0.3, sys, variant).sum(axis=0)
    got = got / (mesh.widths[:, None, None] / (2 * np.arange(k + 1) + 1))
    ref = rkdg_rhs(U, mesh.nodes, *_oracle_parts(sys), 0.3, max(k + 3, 5))
    np.testing.assert_allclose(got, ref, atol=1e-12 * np.max(np.abs(ref)))


@pytest.mark.parametrize("tag", sorted(TABLEAUS))
@pytest.mark.parametrize("k", [1, 2])
def test_eulerian_step_matches_rkdg(tag, k, rng):
    p = get_problem("wave-variable")
    mesh = build_uniform_mesh(*p.domain, 8)
    sys, variant = build_system_1d(p, "rkdg", mesh.dx)
    U = rng.normal(size=(8, 2, k + 1))
    dt = 0.05 * mesh.dx
    A, lam, src = _oracle_parts(sys)
    rhs = lambda V, t: rkdg_rhs(V, mesh.nodes, A, lam, src, t, max(k + 3, 5))
    for linearize in (False, True):
        st_ = Stepper(mesh, sys, k, variant, tag, linearize=linearize)
        got, ref, t = U[None], U, 0.2
        for _ in range(3):
            got = st_.step(got, t, dt)
            ref = rkdg_step(ref, t, dt, TABLEAUS[tag], rhs)
            t += dt
        np.testing.assert_allclose(got[0], ref, atol=1e-12)


def test_scalar_eulerian_step_matches_rkdg(rng):
    from eldg.characteristics import scalar_system
    sys = scalar_system(lambda x: 1 + 0.5 * np.sin(x))
    mesh = build_uniform_mesh(0, 2 * np.pi, 8)
    U = rng.normal(size=(8, 1, 3))
    dt = 0.1 * mesh.dx
    got = el_rk_step(U[None], 0.0, dt, mesh, sys, EULERIAN, "rk4")[0]
    rhs = lambda V, t: rkdg_rhs(V, mesh.nodes, *_oracle_parts(sys), t, 5)
    np.testing.assert_allclose(got, rkdg_step(U, 0.0, dt, TABLEAUS["rk4"], rhs), atol=1e-12)


def _smooth_data(mesh, k):
    f = lambda x: np.stack([np.sin(x) + 0.3 * np.cos(3 * x) + 0.2, np.cos(2 * x) - 0.1], axis=-1)
    return project_function(mesh, f, k)


@settings(max_examples=12, deadline=None)
@given(st.sampled_from(["eldg", "eldg1", "eldg2", "eldg3"]), st.sampled_from(sorted(TABLEAUS)),
       st.integers(1, 2), st.floats(0.1, 1.5))
def test_conservation_any_perturbation(scheme, tag, k, cfl):
    p = get_problem("wave-sin")
    mesh = build_uniform_mesh(*p.domain, 24)
    sys, variant = build_system_1d(p, scheme, mesh.dx)
    U = _smooth_data(mesh, k).coeffs[None]
    m0 = np.einsum("jck,j->c", U[0, :, :, :1], mesh.widths)
    scale = np.einsum("jc,j->c", np.abs(U[0, :, :, 0]), mesh.widths)
    st_ = Stepper(mesh, sys, k, variant, tag)
    t, dt = 0.0, cfl * mesh.dx
    for _ in range(4):
        U = st_.step(U, t, dt)
        t += dt
    m1 = np.einsum("jck,j->c", U[0, :, :, :1], mesh.widths)
    assert np.all(np.abs(m1 - m0) <= 1e-12 * scale)


def test_conservation_variable_pair_and_nu():
    """A perturbed continuous eigenvector pair still conserves mass."""
    a = lambda x: 2 + np.sin(x)
    mesh = build_uniform_mesh(0, 2 * np.pi, 32)
    bump = lambda x: np.sin(x) * mesh.dx
    sys = wave_system(a, speed_p=lambda x: a(x) + bump(x),
                      speed_p_dx=lambda x: np.cos(x) + np.cos(x) * mesh.dx)
    nu = lambda x, t, lam: lam + np.sign(lam) * bump(x)[..., None]
    U = _smooth_data(mesh, 2).coeffs[None]
    m0 = total_mass(DGField(mesh, U[0]))
    st_ = Stepper(mesh, sys, 2, SchemeVariant(node_velocity=nu), "rk4")
    for i in range(10):
        U = st_.step(U, i * 0.3 * mesh.dx, 0.3 * mesh.dx)
    assert np.all(np.abs(total_mass(DGField(mesh, U[0])) - m0) <= 1e-12 * 2 * np.pi)


def test_nmc_variant_drifts():
    p = get_problem("wave-sin")
    mesh = build_uniform_mesh(*p.domain, 160)
    sys, variant = build_system_1d(p, "nmc-eldg2", mesh.dx)
    assert not variant.conservative
    U = project_function(mesh, p.initial, 1).coeffs[None]
    m0 = total_mass(DGField(mesh, U[0]))
    st_ = Stepper(mesh, sys, 1, variant, "rk4")
    dt = 0.1 * mesh.dx
    n = int(round(1.0 / dt))
    for i in range(n):
        U = st_.step(U, i * dt, 1.0 / n)
    assert np.max(np.abs(total_mass(DGField(mesh, U[0])) - m0)) > 1e-8


@pytest.mark.parametrize("scheme", ["eldg", "eldg3", "nmc-eldg3"])
def test_operator_path_matches_direct(scheme, rng):
    p = get_problem("wave-variable")
    mesh = build_uniform_mesh(*p.domain, 16)
    sys, variant = build_system_1d(p, scheme, mesh.dx)
    U = rng.normal(size=(1, 16, 2, 3))
    fast = Stepper(mesh, sys, 2, variant, "rk4", linearize=True)
    slow = Stepper(mesh, sys, 2, variant, "rk4", linearize=False)
    a, b = U, U
    for i in range(3):
        a = fast.step(a, 0.1 * i, 0.7 * mesh.dx)
        b = slow.step(b, 0.1 * i, 0.7 * mesh.dx)
    np.testing.assert_allclose(a, b, atol=1e-12 * np.max(np.abs(b)))


def test_exact_tracking_scalar_is_pure_transport(rng):
    from eldg.characteristics import scalar_system
    sys = scalar_system(1.0)
    mesh = build_uniform_mesh(0, 2 * np.pi, 10)
    up = trace_upstream(mesh, np.ones(11), 0.3, t_end=0.3)
    f = DGField(up.as_mesh(0.1), rng.normal(size=(10, 1, 3)))
    rhs = system_rhs([f], [up], 0.1, sys)
    np.testing.assert_allclose(rhs, 0.0, atol=1e-14)


def test_forward_euler_is_shift_of_projection(rng):
    from eldg.characteristics import scalar_system
    from eldg.projection import l2_project, overlap_decompose
    from eldg.mesh import Mesh1D
    mesh = build_uniform_mesh(0, 2 * np.pi, 12)
    f = DGField(mesh, rng.normal(size=(12, 1, 3)))
    dt = 0.37 * mesh.dx
    out = forward_euler_step(f, dt, scalar_system(1.0))
    ref = l2_project(f, overlap_decompose(mesh, Mesh1D(mesh.nodes - dt)))
    np.testing.assert_allclose(out.coeffs, ref.coeffs, atol=1e-13)


def test_zero_and_tiny_steps_are_identity(rng):
    p = get_problem("wave-variable")
    mesh = build_uniform_mesh(*p.domain, 8)
    sys, variant = build_system_1d(p, "eldg3", mesh.dx)
    U = rng.normal(size=(1, 8, 2, 2))
    np.testing.assert_array_equal(el_rk_step(U, 0.0, 0.0, mesh, sys, variant), U)
    out = forward_euler_step(DGField(mesh, U[0]), 1e-15, wave_system(1.0))
    np.testing.assert_allclose(out.coeffs, U[0], atol=1e-12)


def test_zero_field_gives_source_only():
    from numpy.polynomial import legendre as npleg
    p = get_problem("wave-variable")
    mesh = build_uniform_mesh(*p.domain, 8)
    sys, variant = build_system_1d(p, "eldg", mesh.dx)
    nu = node_velocities(mesh, sys, 0.5, variant)[0]
    meshes = [trace_upstream(mesh, nu[i], 0.1, t_end=0.5) for i in range(2)]
    zero = [DGField(mesh, np.zeros((8, 2, 2)))] * 2
    t = 0.45
    rhs = system_rhs(zero, meshes, t, sys, variant)
    xg, wg = npleg.leggauss(5)
    for i, up in enumerate(meshes):
        nodes = up.nodes_at(t)
        for j in range(8):
            lo, hi = nodes[j], nodes[j + 1]
            x = 0.5 * (lo + hi) + 0.5 * (hi - lo) * xg
            W = sys.right(x[None], t)[0][:, :, i][:, :, None] * sys.left(x[None], t)[0][:, i][:, None, :]
            F = sys.source(x[None], t)[0]
            ref = 0.5 * (hi - lo) * np.einsum("q,qrn,qn,qk->rk", wg, W, F,
                                              np.stack([np.ones(5), xg], axis=-1))
            np.testing.assert_allclose(rhs[i, j], ref, atol=1e-13)


def test_wrong_shape_rejected():
    mesh = build_uniform_mesh(0, 1, 4)
    with pytest.raises(ValueError):
        Stepper(mesh, wave_system(1.0), 1).step(np.zeros((1, 4, 3, 2)), 0.0, 0.1)


def test_rk4_temporal_order_with_moving_meshes():
    from eldg.harness import RunConfig, solve
    from eldg.norms import error_norms
    errs = []
    for cfl in (1.0, 2.0):
        cfg = RunConfig("wave-variable", scheme="eldg", degree=2, nx=(40,), cfl=(cfl,), tfinal=1.0)
        r = solve(cfg, 40, cfl)
        errs.append(error_norms(r.field, cfg.spec.exact).linf[0])
    assert 3.5 <= np.log2(errs[1] / errs[0]) <= 5.0
