import numpy as np
import pytest

from sharplab.interface import Curve, circle_curve, hausdorff
from sharplab.nonlinearity import SystemCoupling, fhn_coupling, mobility_constant
from sharplab.pde import ScalarField
from sharplab.sharp import (
    BOUNDARY,
    INSIDE,
    OUTSIDE,
    CurveFlowError,
    constant_limit_forcing,
    coupling_integral_table,
    evolve_curve,
    evolve_radial,
    evolve_rd_limit,
    inside_outside,
)


def ellipse_curve(a, b, n):
    th = 2 * np.pi * np.arange(n) / n
    return Curve(np.column_stack([a * np.cos(th), b * np.sin(th)]), closed=True)


# ------------------------------------------------------------- radial ODE

def test_radial_unforced_exact_n2():
    traj = evolve_radial(0.5, 2, None, 0.05, 1e-5)
    exact = np.sqrt(0.25 - 2 * 1 * 0.05)
    assert abs(traj.rs[-1] - exact) / exact <= 1e-8


def test_radial_unforced_exact_n3():
    traj = evolve_radial(0.5, 3, None, 0.03, 1e-5)
    exact = np.sqrt(0.25 - 2 * 2 * 0.03)
    assert abs(traj.rs[-1] - exact) / exact <= 1e-8


def test_radial_equilibrium():
    # F = (N-1)/R0 exactly balances curvature at R0
    traj = evolve_radial(0.5, 2, constant_limit_forcing(2.0), 0.1, 1e-4)
    assert np.all(traj.rs == 0.5)


def test_radial_extinction_reported():
    traj = evolve_radial(0.1, 2, None, 1.0, 1e-5)
    assert traj.extinct
    lo, hi = traj.extinction_bracket
    assert lo <= 0.1**2 / 2 <= hi + 1e-5


def test_radial_sample_times():
    traj = evolve_radial(0.5, 2, None, 0.05, 1e-4, sample_times=(0.01, 0.02))
    assert traj.radius_at(0.02) == pytest.approx(np.sqrt(0.25 - 0.04), rel=1e-8)
    with pytest.raises(KeyError):
        traj.radius_at(0.017)


def test_radial_rejects_bad_input():
    with pytest.raises(ValueError):
        evolve_radial(-0.5, 2, None, 0.05, 1e-5)
    with pytest.raises(ValueError):
        evolve_radial(0.5, 2, None, 0.05, -1e-5)


# ------------------------------------------------------------- curve flow

def test_curve_flow_circle_oracle():
    c = circle_curve((0.0, 0.0), 0.5, 256)
    dt = 0.5 * np.min(c.segment_lengths()) ** 2 / 4
    traj = evolve_curve(c, None, 0.05, dt)
    radii = np.hypot(*traj.final.points.T)
    assert np.max(np.abs(radii - np.sqrt(0.15))) <= 1e-3


def test_curve_flow_area_decay_rate():
    # embedded closed curves lose area at exactly 2 pi under curvature flow
    c = circle_curve((0.0, 0.0), 0.5, 256)
    dt = 0.5 * np.min(c.segment_lengths()) ** 2 / 4
    traj = evolve_curve(c, None, 0.05, dt)
    rate = (traj.curves[0].enclosed_area() - traj.final.enclosed_area()) / 0.05
    assert abs(rate - 2 * np.pi) <= 0.01 * 2 * np.pi


def test_curve_flow_circularity_preserved():
    c = circle_curve((0.0, 0.0), 0.5, 256)
    dt = 0.5 * np.min(c.segment_lengths()) ** 2 / 4
    traj = evolve_curve(c, None, 0.05, dt, snapshot_times=np.linspace(0.01, 0.04, 7))
    for snap in traj.curves:
        r = np.hypot(*snap.points.T)
        assert (np.max(r) - np.min(r)) / np.mean(r) <= 1e-3


def test_curve_flow_huge_circle_barely_moves():
    big = circle_curve((0.0, 0.0), 1e6, 256)
    traj = evolve_curve(big, None, 0.01, 0.01)
    disp = np.max(np.hypot(*(traj.final.points - big.points).T))
    assert disp <= 1.1e-8


def test_curve_flow_ellipse_self_convergence():
    coarse = ellipse_curve(0.5, 0.3, 128)
    fine = ellipse_curve(0.5, 0.3, 256)
    dt = 0.4 * np.min(coarse.segment_lengths()) ** 2 / 4
    t1 = evolve_curve(coarse, None, 0.02, dt)
    t2 = evolve_curve(fine, None, 0.02, dt / 4)
    assert hausdorff(t1.final, t2.final) <= 1e-3


def test_curve_flow_rejects_large_dt():
    c = circle_curve((0.0, 0.0), 0.5, 64)
    with pytest.raises(CurveFlowError, match="parabolic bound"):
        evolve_curve(c, None, 0.01, 1.0)


def test_curve_flow_rejects_open_curve():
    c = Curve(np.column_stack([np.linspace(0, 1, 32), np.zeros(32)]), closed=False)
    with pytest.raises(CurveFlowError, match="closed"):
        evolve_curve(c, None, 0.01, 1e-6)


def test_curve_flow_forced_equilibrium():
    # constant outward forcing balancing curvature keeps the circle steady
    c = circle_curve((0.0, 0.0), 0.5, 256)
    dt = 0.5 * np.min(c.segment_lengths()) ** 2 / 4
    traj = evolve_curve(c, constant_limit_forcing(2.0), 0.02, dt)
    radii = np.hypot(*traj.final.points.T)
    assert np.max(np.abs(radii - 0.5)) <= 1e-6


# ------------------------------------------------------------- rd limit

def zero_coupling(D=1.0):
    zero = lambda u, v: 0.0 * np.asarray(u) * np.asarray(v)
    return SystemCoupling(f1=zero, f2=zero, h=zero, D=D)


def test_rd_limit_decoupled_matches_curve_flow(cubic):
    c0 = mobility_constant(cubic)
    v0 = ScalarField.from_function(
        (-1, 1, -1, 1), 0.02, lambda X, Y: np.full_like(X, 0.1)
    )
    start = circle_curve((0.0, 0.0), 0.35, 192)
    dt = min(
        0.4 * np.min(start.segment_lengths()) ** 2 / 4,
        0.9 * 0.02**2 / (4 * 1.01),
    )
    limit = evolve_rd_limit(start, v0, zero_coupling(), cubic, c0, 0.02, dt)
    pure = evolve_curve(start, None, 0.02, dt)
    assert np.max(np.abs(limit.final[0].points - pure.final.points)) <= 1e-12
    assert np.max(np.abs(limit.final[1].values - 0.1)) == 0.0


def test_rd_limit_fhn_forcing_coefficient(cubic):
    # FHN coupling with zero f1-part: the node forcing is -c0 (a+ - a-) v
    coup = fhn_coupling(alpha=1.0, beta=1.0, D=1.0)
    table = coupling_integral_table(coup, cubic, (-1.0, 1.0))
    v = np.linspace(-0.8, 0.8, 9)
    assert np.max(np.abs(table(v) - 2.0 * v)) < 1e-12
    c0 = mobility_constant(cubic)
    assert c0 * 2.0 == pytest.approx(3.0 / np.sqrt(2.0), abs=1e-9)


def test_rd_limit_zero_v_follows_unforced_flow(cubic):
    c0 = mobility_constant(cubic)
    v0 = ScalarField.from_function(
        (-1, 1, -1, 1), 0.02, lambda X, Y: np.zeros_like(X)
    )
    coup = fhn_coupling(alpha=0.0, beta=1.0, D=1.0)
    start = circle_curve((0.0, 0.0), 0.35, 192)
    dt = min(
        0.4 * np.min(start.segment_lengths()) ** 2 / 4,
        0.9 * 0.02**2 / (4 * 1.01),
    )
    limit = evolve_rd_limit(start, v0, coup, cubic, c0, 0.015, dt)
    pure = evolve_curve(start, None, 0.015, dt)
    assert np.max(np.abs(limit.final[1].values)) == 0.0
    assert np.max(np.abs(limit.final[0].points - pure.final.points)) <= 1e-12


def test_rd_limit_coupled_shrinks_faster(cubic):
    # positive v forces the interface inward on top of curvature
    c0 = mobility_constant(cubic)
    v0 = ScalarField.from_function(
        (-1, 1, -1, 1), 0.02, lambda X, Y: np.full_like(X, 0.1)
    )
    coup = fhn_coupling(alpha=1.0, beta=1.0, D=1.0)
    start = circle_curve((0.0, 0.0), 0.35, 192)
    dt = min(
        0.4 * np.min(start.segment_lengths()) ** 2 / 4,
        0.9 * 0.02**2 / (4 * 1.01),
    )
    coupled = evolve_rd_limit(start, v0, coup, cubic, c0, 0.015, dt)
    pure = evolve_curve(start, None, 0.015, dt)
    r_coupled = np.mean(np.hypot(*coupled.final[0].points.T))
    r_pure = np.mean(np.hypot(*pure.final.points.T))
    assert r_coupled < r_pure


def test_rd_limit_rejects_curve_escape(cubic):
    c0 = mobility_constant(cubic)
    v0 = ScalarField.from_function(
        (-0.2, 0.2, -0.2, 0.2), 0.02, lambda X, Y: np.zeros_like(X)
    )
    start = circle_curve((0.0, 0.0), 0.35, 128)  # larger than the v-grid box
    dt = 0.4 * np.min(start.segment_lengths()) ** 2 / 4
    with pytest.raises(CurveFlowError, match="exited"):
        evolve_rd_limit(start, v0, zero_coupling(), cubic, c0, 0.01, dt)


# ------------------------------------------------------------- inside/outside

def test_inside_outside_circle():
    c = circle_curve((0.0, 0.0), 0.5, 256)
    assert inside_outside(c, (0.0, 0.0)) == INSIDE
    assert inside_outside(c, (1.0, 0.0)) == OUTSIDE
    assert inside_outside(c, tuple(c.points[41])) == BOUNDARY


def test_inside_outside_random_points(rng):
    c = circle_curve((0.0, 0.0), 0.5, 1024)
    for _ in range(300):
        p = rng.uniform(-0.9, 0.9, 2)
        r = np.hypot(*p)
        if abs(r - 0.5) < 1e-3:
            continue
        expected = INSIDE if r < 0.5 else OUTSIDE
        assert inside_outside(c, p) == expected
