import numpy as np
import pytest

from eldg.characteristics import constant_system
from eldg.harness import RunConfig, build_systems_2d, solve
from eldg.mesh import build_uniform_mesh
from eldg.norms import error_norms
from eldg.problems import get_problem
from eldg.splitting import (TRIPLE_JUMP, Field2D, Splitter, project_2d, strang_step, sweep_x,
                            sweep_y)


def test_triple_jump_weights():
    g1, g2, g3 = TRIPLE_JUMP
    assert g1 + g2 + g3 == pytest.approx(1.0, abs=1e-15)
    assert g1 == g3 and g2 < 0
    assert g1 ** 3 + g2 ** 3 + g3 ** 3 == pytest.approx(0.0, abs=1e-13)


@pytest.mark.parametrize("k", [1, 2, 3])
def test_nodal_modal_round_trip(k, rng):
    mx, my = build_uniform_mesh(0, 1, 3), build_uniform_mesh(0, 2, 4)
    poly = lambda x, y: np.stack([1 + x - 2 * y + x ** k * y ** k, x * y], axis=-1)
    f = project_2d(mx, my, poly, k)
    x, y = f.node_coordinates()
    X, Y = np.broadcast_arrays(x[:, None, :, None], y[None, :, None, :])
    np.testing.assert_allclose(f.values, poly(X, Y), atol=1e-13)
    vals = rng.normal(size=f.values.shape)
    g = Field2D(mx, my, vals)
    xg = np.polynomial.legendre.leggauss(k + 1)[0]
    np.testing.assert_allclose(g.evaluate_local(xg, xg), vals, atol=1e-13)


def test_commuting_sweeps():
    mx, my = build_uniform_mesh(0, 2 * np.pi, 8), build_uniform_mesh(0, 2 * np.pi, 6)
    sx, sy = constant_system([[1.0]]), constant_system([[-0.6]])
    f = project_2d(mx, my, lambda x, y: np.sin(x) * np.cos(2 * y) + np.cos(x + y), 2)
    dt = 0.21
    a = sweep_y(sweep_x(f, dt, sx, t=0.0), dt, sy, t=0.0)
    b = sweep_x(sweep_y(f, dt, sy, t=0.0), dt, sx, t=0.0)
    np.testing.assert_allclose(a.values, b.values, atol=1e-13)


@pytest.mark.parametrize("split", ["strang_step", "fourth_order_step"])
def test_mass_conservation_2d(split):
    p = get_problem("wave2d-variable")
    mx, my = build_uniform_mesh(0, 2 * np.pi, 10), build_uniform_mesh(0, 2 * np.pi, 10)
    sp = Splitter(mx, my, *build_systems_2d(p), 2)
    f = project_2d(mx, my, p.initial, 2)
    m0 = f.total_mass()
    scale = np.sum(np.abs(f.cell_means()), axis=(0, 1)) * mx.dx * my.dx
    for _ in range(3):
        f = getattr(sp, split)(f, 0.4 * mx.dx)
    assert np.all(np.abs(f.total_mass() - m0) <= 1e-12 * scale)


def test_module_level_strang_matches_splitter():
    p = get_problem("wave2d-constant")
    mx = my = build_uniform_mesh(0, 2 * np.pi, 6)
    sx, sy = build_systems_2d(p)
    f = project_2d(mx, my, p.initial, 1)
    a = strang_step(f, 0.1, sx, sy)
    b = Splitter(mx, my, sx, sy, 1).strang_step(f, 0.1)
    np.testing.assert_allclose(a.values, b.values, atol=1e-14)
    assert a.time == pytest.approx(0.1)


def _l1(split, cfl, n=20, k=2):
    cfg = RunConfig("wave2d-constant", degree=k, nx=(n,), cfl=(cfl,), split=split)
    r = solve(cfg, n, cfl)
    return error_norms(r.field, cfg.spec.exact).l1[0]


def test_strang_second_order_in_time():
    ratio = _l1("strang", 1.0) / _l1("strang", 0.5)
    assert 3.5 <= ratio <= 4.6


def test_fourth_order_splitting_in_time():
    ratio = _l1("fourth", 2.0) / _l1("fourth", 1.0)
    assert 11 <= ratio <= 20


def test_fourth_order_splitting_spatial_orders():
    """The configuration behind the published 2D constant-coefficient table."""
    q1 = [_l1("fourth", 0.1, n, 1) for n in (20, 40)]
    q2 = [_l1("fourth", 0.1, n, 2) for n in (20, 40)]
    assert abs(np.log2(q1[0] / q1[1]) - 2.0) <= 0.15
    assert abs(np.log2(q2[0] / q2[1]) - 2.95) <= 0.15
    assert q2[1] == pytest.approx(2.21e-5, rel=0.2)


def test_field_shape_checked():
    m = build_uniform_mesh(0, 1, 3)
    with pytest.raises(ValueError):
        Field2D(m, m, np.zeros((3, 2, 2, 2, 1)))
