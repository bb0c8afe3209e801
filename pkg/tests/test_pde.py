import numpy as np
import pytest
from scipy.integrate import solve_ivp

from sharplab.nonlinearity import constant_forcing, fhn_coupling
from sharplab.pde import (
    ACParams,
    BlowUpError,
    InvariantRectangleError,
    RDState,
    ScalarField,
    energy,
    fhn_rectangle,
    laplacian_neumann,
    radial_initial_data,
    simulate_ac,
    simulate_rd,
    stable_dt,
    stable_dt_rd,
    step_allen_cahn,
    step_rd,
)

BOX = (-1.0, 1.0, -1.0, 1.0)


def const_field(value, h=0.1, box=BOX):
    return ScalarField.from_function(box, h, lambda X, Y: np.full_like(X, value))


# ---------------------------------------------------------------- laplacian

def test_laplacian_constant_is_zero():
    f = const_field(3.0)
    assert np.max(np.abs(laplacian_neumann(f).values)) == 0.0


def test_laplacian_x_squared_interior():
    h = 1.0 / 64
    f = ScalarField.from_function((0, 1, 0, 1), h, lambda X, Y: X**2)
    lap = laplacian_neumann(f)
    # second differences of a quadratic are exact in the interior
    assert np.max(np.abs(lap.values[1:-1, 1:-1] - 2.0)) < 1e-10
    # boundary rows follow the mirror rule: (2 u_1 - 2 u_0) / h^2 + interior y-part
    expected_row0 = (2 * f.values[1, 1:-1] - 2 * f.values[0, 1:-1]) / h**2
    assert np.allclose(lap.values[0, 1:-1], expected_row0, atol=1e-12)


def test_laplacian_neumann_eigenfunction():
    # cos(pi x) cos(pi y) mirrors exactly at the walls: the discrete operator
    # reproduces its eigenvalue 2(cos(pi h) - 1)/h^2 to roundoff everywhere,
    # and that eigenvalue is within O(h^2) of -2 pi^2
    h = 1.0 / 64
    f = ScalarField.from_function(
        (0, 1, 0, 1), h, lambda X, Y: np.cos(np.pi * X) * np.cos(np.pi * Y)
    )
    lap = laplacian_neumann(f)
    lam = 2.0 * (2.0 * np.cos(np.pi * h) - 2.0) / h**2
    assert np.max(np.abs(lap.values - lam * f.values)) < 1e-10
    assert abs(lam + 2 * np.pi**2) < np.pi**4 * h**2 / 5.0


def test_laplacian_rejects_tiny_grid():
    f = ScalarField(np.zeros((2, 5)), 0.1)
    with pytest.raises(ValueError):
        laplacian_neumann(f)


# ---------------------------------------------------------------- stepping

def test_equilibria_are_fixed(cubic):
    for value in (1.0, 0.0, -1.0):
        f = const_field(value)
        p = ACParams(eps=0.1, nl=cubic, dt=stable_dt(f.h, 0.1, cubic))
        out = step_allen_cahn(f, p)
        assert np.array_equal(out.values, f.values)


def test_constant_field_matches_scalar_ode(cubic):
    # diffusion vanishes for constant fields; forward Euler with a small dt
    # must track a high-order integration of u' = f(u)/eps^2
    eps = 0.08
    f = const_field(0.01, h=0.05)
    p = ACParams(eps=eps, nl=cubic, dt=1e-6)
    v = f
    for _ in range(100):
        v = step_allen_cahn(v, p)
    sol = solve_ivp(
        lambda t, y: cubic.evaluate(y) / eps**2,
        (0.0, p.t),
        [0.01],
        rtol=1e-12,
        atol=1e-14,
    )
    assert abs(v.values[0, 0] - sol.y[0, -1]) / abs(sol.y[0, -1]) <= 1e-4


def test_step_advances_time(cubic):
    f = const_field(0.5)
    p = ACParams(eps=0.1, nl=cubic, dt=1e-5)
    step_allen_cahn(f, p)
    assert p.t == pytest.approx(1e-5)


def test_stability_bound_enforced(cubic):
    f = const_field(0.5, h=0.01)
    p = ACParams(eps=0.1, nl=cubic, dt=1.0)
    with pytest.raises(ValueError, match="stability bound"):
        step_allen_cahn(f, p)


def test_blowup_detected(cubic):
    f = const_field(9.9, h=0.1)
    p = ACParams(eps=0.05, nl=cubic, dt=stable_dt(f.h, 0.05, cubic))
    with pytest.raises(BlowUpError):
        # f(9.9) is hugely negative: the update overshoots the bound
        step_allen_cahn(f, p)


def test_simulate_noop(cubic):
    f = const_field(0.3)
    p = ACParams(eps=0.1, nl=cubic, dt=1e-5, t=0.5)
    out = simulate_ac(f, p, 0.5)
    assert np.array_equal(out.values, f.values)


def test_simulate_hits_observer_times(cubic):
    f = const_field(0.3)
    p = ACParams(eps=0.1, nl=cubic, dt=1e-4)
    seen = []
    simulate_ac(f, p, 0.01, [(t, lambda tt, ff: seen.append(tt)) for t in (0.003, 0.007)])
    assert seen == pytest.approx([0.003, 0.007], abs=1e-14)
    assert p.t == pytest.approx(0.01, abs=1e-14)


def test_forcing_enters_with_minus_eps(cubic):
    # u_t = lap u + (f(u) - eps g)/eps^2 with f(0) = 0 and g = delta:
    # one step from u = a moves by -dt*delta/eps exactly
    eps, delta, dt = 0.1, 0.2, 1e-6
    f = const_field(0.0, h=0.05)
    p = ACParams(eps=eps, nl=cubic, forcing=constant_forcing(delta), dt=dt)
    out = step_allen_cahn(f, p)
    assert np.allclose(out.values, -dt * delta / eps, rtol=1e-12)


# ---------------------------------------------------------------- energy

def test_energy_constant_state(cubic):
    f = const_field(1.0, h=0.05)
    eps = 0.1
    # zero gradient: energy is |domain| * W(a+) / eps = 4 * (-1/4) / eps
    assert energy(f, eps, cubic) == pytest.approx(-1.0 / eps, rel=1e-12)


def test_energy_monotone_along_flow(cubic):
    eps = 0.1
    h = eps / 8
    u0 = radial_initial_data(BOX, h, 0.35, 5.0, cubic)
    p = ACParams(eps=eps, nl=cubic, dt=stable_dt(h, eps, cubic))
    values = []
    times = np.linspace(0.001, 0.02, 10)
    simulate_ac(u0, p, 0.02, [(t, lambda tt, ff: values.append(energy(ff, eps, cubic))) for t in times])
    assert np.all(np.diff(values) <= 1e-12)


def test_energy_surface_tension_identity(cubic, cubic_profile):
    # straight layer through the middle: energy ~ length / c0 + |domain| W(a-)/eps
    eps = 0.02
    h = eps / 8
    f = ScalarField.from_function(
        BOX, h, lambda X, Y: cubic_profile.evaluate(X / eps)
    )
    e = energy(f, eps, cubic)
    c0 = 3.0 / (2.0 * np.sqrt(2.0))
    expected = 2.0 / c0 + 4.0 * (-0.25) / eps
    # compare the interface contribution after removing the bulk offset
    assert e - 4.0 * (-0.25) / eps == pytest.approx(2.0 / c0, rel=0.05)


# ---------------------------------------------------------------- properties

def test_maximum_principle_exact(cubic):
    eps = 0.1
    h = eps / 8
    u0 = radial_initial_data(BOX, h, 0.35, 5.0, cubic)
    assert u0.values.min() >= -1.0 and u0.values.max() <= 1.0
    p = ACParams(eps=eps, nl=cubic, dt=stable_dt(h, eps, cubic))
    out = simulate_ac(u0, p, 0.01)
    assert out.values.min() >= -1.0
    assert out.values.max() <= 1.0


def test_comparison_principle(cubic):
    eps = 0.1
    h = eps / 8
    lo = radial_initial_data(BOX, h, 0.4, 5.0, cubic)
    hi = lo.with_values(np.minimum(lo.values + 0.1, 1.0))
    p1 = ACParams(eps=eps, nl=cubic, dt=stable_dt(h, eps, cubic))
    p2 = ACParams(eps=eps, nl=cubic, dt=p1.dt)
    out_lo = simulate_ac(lo, p1, 0.01)
    out_hi = simulate_ac(hi, p2, 0.01)
    assert np.all(out_hi.values >= out_lo.values)


def test_grid_refinement_second_order(cubic):
    # fixed eps, h halved repeatedly with dt following the bound; errors at
    # probe nodes against the finest grid shrink ~4x per halving, so the
    # coarse/mid error ratio sits in [3, 5].  Probes must sit on the
    # coarsest grid so every refinement samples the same physical points.
    eps = 0.16
    box = (-0.5, 0.5, -0.5, 0.5)
    probes = [(0.16, 0.0), (0.0, -0.2), (0.1, 0.1), (0.24, 0.04)]
    results = []
    for divisor in (8, 16, 32, 64):
        h = eps / divisor
        u0 = radial_initial_data(box, h, 0.2, 5.0, cubic)
        p = ACParams(eps=eps, nl=cubic, dt=stable_dt(h, eps, cubic))
        out = simulate_ac(u0, p, 0.005)
        idx = [
            (int(round((x - box[0]) / h)), int(round((y - box[2]) / h)))
            for x, y in probes
        ]
        results.append(np.array([out.values[i, j] for i, j in idx]))
    errs = [np.max(np.abs(r - results[-1])) for r in results[:-1]]
    assert errs[0] > errs[1] > errs[2]
    assert 3.0 <= errs[0] / errs[1] <= 5.0


# ---------------------------------------------------------------- rd system

def test_rd_reduces_to_allen_cahn_bitwise(cubic):
    eps = 0.08
    h = eps / 8
    u0 = radial_initial_data(BOX, h, 0.35, 5.0, cubic)
    v0 = u0.with_values(np.zeros_like(u0.values))
    coup = fhn_coupling(alpha=0.0, beta=0.0, D=1.0)
    dt = stable_dt_rd(h, eps, cubic, coup)
    s = RDState(u=u0, v=v0, coupling=coup, nl=cubic, rect=(2.0, 2.0))
    s1 = step_rd(s, eps, dt)
    p = ACParams(eps=eps, nl=cubic, dt=dt)
    u1 = step_allen_cahn(u0, p)
    assert np.array_equal(s1.u.values, u1.values)
    assert np.all(s1.v.values == 0.0)


def test_rd_constant_fields_match_ode_oracle(cubic):
    eps = 0.08
    coup = fhn_coupling(alpha=1.0, beta=1.0, D=1.0)
    u = const_field(0.3, h=0.05)
    v = const_field(0.1, h=0.05)
    s = RDState(u=u, v=v, coupling=coup, nl=cubic, rect=(2.0, 2.0))
    for _ in range(100):
        s = step_rd(s, eps, 1e-6)

    def rhs(t, y):
        uu, vv = y
        return [(cubic.evaluate(uu) + eps * vv) / eps**2, uu - vv]

    sol = solve_ivp(rhs, (0, s.t), [0.3, 0.1], rtol=1e-12, atol=1e-14)
    assert abs(s.u.values[0, 0] - sol.y[0, -1]) / abs(sol.y[0, -1]) <= 1e-4
    assert abs(s.v.values[0, 0] - sol.y[1, -1]) / abs(sol.y[1, -1]) <= 1e-4


def test_rd_invariant_rectangle_holds(cubic):
    eps = 0.1
    h = eps / 8
    coup = fhn_coupling(alpha=1.0, beta=1.0, D=1.0)
    u0 = radial_initial_data(BOX, h, 0.35, 5.0, cubic)
    v0 = u0.with_values(np.full_like(u0.values, 0.1))
    rect = fhn_rectangle(coup, 0.1)
    assert rect == (2.0, 2.0)
    s = RDState(u=u0, v=v0, coupling=coup, nl=cubic, rect=rect)
    dt = stable_dt_rd(h, eps, cubic, coup)
    out = simulate_rd(s, eps, dt, 0.01)
    assert np.max(np.abs(out.u.values)) <= 2.0
    assert np.max(np.abs(out.v.values)) <= 2.0


def test_rd_rectangle_violation_is_distinct(cubic):
    coup = fhn_coupling(alpha=1.0, beta=1.0, D=1.0)
    u = const_field(0.5, h=0.05)
    v = const_field(0.1, h=0.05)
    s = RDState(u=u, v=v, coupling=coup, nl=cubic, rect=(0.4, 2.0))
    with pytest.raises(InvariantRectangleError):
        step_rd(s, 0.1, 1e-6)


def test_rd_geometry_mismatch_rejected(cubic):
    coup = fhn_coupling()
    u = const_field(0.5, h=0.05)
    v = const_field(0.1, h=0.1)
    with pytest.raises(ValueError):
        RDState(u=u, v=v, coupling=coup, nl=cubic)


# ---------------------------------------------------------------- initial data

def test_radial_initial_data_shape(cubic):
    h = 0.01
    u0 = radial_initial_data(BOX, h, 0.35, 5.0, cubic)
    X, Y = u0.meshgrid()
    r = np.hypot(X, Y)
    assert np.all(np.sign(u0.values) == np.sign(r - 0.35))
    # farthest node (the corner) is within 1e-3 of a+
    corner_gap = abs(u0.values[0, 0] - 1.0)
    assert corner_gap < 1e-3
    # no developed layer: the gradient scale is steepness, not 1/eps
    assert np.max(np.abs(np.gradient(u0.values, h)[0])) < 10.0


def test_radial_initial_data_rejects_tight_circle(cubic):
    with pytest.raises(ValueError, match="boundary"):
        radial_initial_data(BOX, 0.01, 0.99, 5.0, cubic)
