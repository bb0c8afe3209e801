"""Explicit finite-difference solvers for the diffuse-interface problems.

Uniform 2-D grid, homogeneous Neumann walls via mirror ghosts, forward Euler
in time.  The reaction is stiff (it carries a 1/eps^2 factor), so the time
step obeys both the diffusive bound h^2/(2*dim) and the reaction bound
eps^2/max|f'|, each with a 1% guard; the drivers default to 0.9x the bound.

Everything here is plain numpy: updates are elementwise, reductions use
numpy's fixed left-to-right pairwise order, so runs are bit-reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .nonlinearity import BistableNonlinearity, Forcing, SystemCoupling

__all__ = [
    "ScalarField",
    "ACParams",
    "RDState",
    "BlowUpError",
    "InvariantRectangleError",
    "laplacian_neumann",
    "step_allen_cahn",
    "simulate_ac",
    "step_rd",
    "simulate_rd",
    "energy",
    "radial_initial_data",
    "stable_dt",
    "stable_dt_rd",
]

BLOWUP_BOUND = 10.0  # generous diagnostic bound; solutions provably stay small


class BlowUpError(RuntimeError):
    """A field value left the diagnostic bound or became non-finite."""


class InvariantRectangleError(RuntimeError):
    """The (u, v) pair left the configured invariant rectangle."""


@dataclass(frozen=True)
class ScalarField:
    """Values on a uniform nx-by-ny grid; values[i, j] sits at
    (origin[0] + i*h, origin[1] + j*h)."""

    values: np.ndarray
    h: float
    origin: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2:
            raise ValueError("values must be a 2-D array")
        if not np.all(np.isfinite(v)):
            raise ValueError("field values must be finite")
        if self.h <= 0:
            raise ValueError("grid spacing must be positive")
        object.__setattr__(self, "values", v)

    @property
    def nx(self) -> int:
        return self.values.shape[0]

    @property
    def ny(self) -> int:
        return self.values.shape[1]

    @property
    def box(self) -> tuple[float, float, float, float]:
        """(x0, x1, y0, y1) of the covered rectangle."""
        x0, y0 = self.origin
        return (x0, x0 + self.h * (self.nx - 1), y0, y0 + self.h * (self.ny - 1))

    def xs(self) -> np.ndarray:
        return self.origin[0] + self.h * np.arange(self.nx)

    def ys(self) -> np.ndarray:
        return self.origin[1] + self.h * np.arange(self.ny)

    def meshgrid(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.xs(), self.ys(), indexing="ij")

    def with_values(self, values: np.ndarray) -> "ScalarField":
        return ScalarField(values, self.h, self.origin)

    @classmethod
    def from_function(
        cls,
        box: tuple[float, float, float, float],
        h: float,
        fn: Callable[[np.ndarray, np.ndarray], np.ndarray],
    ) -> "ScalarField":
        """Sample fn(x, y) on the grid covering ``box`` with spacing ~h.

        nx, ny are chosen so the box is covered exactly; h is adjusted to the
        nearest value dividing each side into a whole number of cells.
        """
        x0, x1, y0, y1 = box
        nx = int(round((x1 - x0) / h)) + 1
        ny = int(round((y1 - y0) / h)) + 1
        hx = (x1 - x0) / (nx - 1)
        hy = (y1 - y0) / (ny - 1)
        if abs(hx - hy) > 1e-12 * max(abs(hx), abs(hy)):
            raise ValueError(f"box {box} is not compatible with uniform spacing {h}")
        X, Y = np.meshgrid(
            x0 + hx * np.arange(nx), y0 + hx * np.arange(ny), indexing="ij"
        )
        return cls(fn(X, Y), hx, (x0, y0))

    def sample_bilinear(self, points: np.ndarray) -> np.ndarray:
        """Bilinear interpolation at points, an (m, 2) array inside the box."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        fx = (pts[:, 0] - self.origin[0]) / self.h
        fy = (pts[:, 1] - self.origin[1]) / self.h
        i = np.clip(np.floor(fx).astype(int), 0, self.nx - 2)
        j = np.clip(np.floor(fy).astype(int), 0, self.ny - 2)
        tx = fx - i
        ty = fy - j
        v = self.values
        return (
            v[i, j] * (1 - tx) * (1 - ty)
            + v[i + 1, j] * tx * (1 - ty)
            + v[i, j + 1] * (1 - tx) * ty
            + v[i + 1, j + 1] * tx * ty
        )


def _mirror_ghost(values: np.ndarray, out: np.ndarray) -> None:
    """Fill out (nx+2, ny+2) with values and mirror-reflected ghosts."""
    out[1:-1, 1:-1] = values
    out[0, 1:-1] = values[1]
    out[-1, 1:-1] = values[-2]
    out[1:-1, 0] = values[:, 1]
    out[1:-1, -1] = values[:, -2]


def _laplacian(values: np.ndarray, h: float, ghost: np.ndarray, out: np.ndarray) -> None:
    np.add(ghost[:-2, 1:-1], ghost[2:, 1:-1], out=out)
    np.add(out, ghost[1:-1, :-2], out=out)
    np.add(out, ghost[1:-1, 2:], out=out)
    out -= 4.0 * values
    out /= h * h


def laplacian_neumann(f: ScalarField) -> ScalarField:
    """5-point Laplacian with second-order zero-flux walls (mirror ghosts)."""
    if f.nx < 3 or f.ny < 3:
        raise ValueError("grid must be at least 3x3")
    ghost = np.empty((f.nx + 2, f.ny + 2))
    out = np.empty_like(f.values)
    _mirror_ghost(f.values, ghost)
    _laplacian(f.values, f.h, ghost, out)
    return f.with_values(out)


def stable_dt(
    h: float, eps: float, nl: BistableNonlinearity, safety: float = 0.9
) -> float:
    """Default time step: ``safety`` times the explicit-Euler bound."""
    bound = min(
        h * h / (2.0 * 2 * 1.01), eps * eps / (1.01 * nl.max_abs_derivative())
    )
    return safety * bound


def stable_dt_rd(
    h: float,
    eps: float,
    nl: BistableNonlinearity,
    coupling: SystemCoupling,
    safety: float = 0.9,
) -> float:
    """Time step honouring both the u-bound and the v diffusion bound."""
    return min(stable_dt(h, eps, nl, safety), safety * h * h / (2.0 * 2 * coupling.D * 1.01))


@dataclass
class ACParams:
    """Parameters of one diffuse-interface run; ``t`` advances with the steps."""

    eps: float
    nl: BistableNonlinearity
    forcing: Forcing | None = None
    dt: float = 0.0
    t: float = 0.0

    def __post_init__(self):
        if self.eps <= 0:
            raise ValueError("eps must be positive")
        if self.dt <= 0:
            raise ValueError("dt must be positive")

    def check_stability(self, h: float) -> None:
        bound = min(
            h * h / (2.0 * 2 * 1.01),
            self.eps**2 / (1.01 * self.nl.max_abs_derivative()),
        )
        if self.dt > bound * (1.0 + 1e-12):
            raise ValueError(
                f"dt = {self.dt:.3e} violates the stability bound {bound:.3e} "
                f"(h = {h:.3e}, eps = {self.eps:.3e})"
            )


class _ACStepper:
    """Preallocated-buffer forward-Euler stepper (the hot loop)."""

    def __init__(self, field_: ScalarField, p: ACParams):
        p.check_stability(field_.h)
        self.h = field_.h
        self.p = p
        self.ghost = np.empty((field_.nx + 2, field_.ny + 2))
        self.lap = np.empty_like(field_.values)
        self.react = np.empty_like(field_.values)
        if p.forcing is not None:
            self.X, self.Y = field_.meshgrid()

    def step(self, v: np.ndarray, dt: float) -> np.ndarray:
        p = self.p
        _mirror_ghost(v, self.ghost)
        _laplacian(v, self.h, self.ghost, self.lap)
        self.react[...] = p.nl.evaluate(v)
        if p.forcing is not None:
            self.react -= p.eps * p.forcing.evaluate(self.X, self.Y, p.t, v)
        self.react /= p.eps * p.eps
        self.lap += self.react
        self.lap *= dt
        out = v + self.lap
        p.t += dt
        return out


def _check_bounds(v: np.ndarray, t: float, label: str = "u") -> None:
    m = float(np.max(np.abs(v)))
    if not np.isfinite(m) or m > BLOWUP_BOUND:
        raise BlowUpError(f"{label} reached |{label}| = {m:.3g} at t = {t:.6g}")


def step_allen_cahn(u: ScalarField, p: ACParams) -> ScalarField:
    """One forward-Euler step of u_t = lap(u) + (f(u) - eps*g(x,t,u))/eps^2.

    Advances p.t by p.dt and returns the new field; raises BlowUpError if any
    value leaves the diagnostic bound.
    """
    stepper = _ACStepper(u, p)
    out = stepper.step(u.values, p.dt)
    _check_bounds(out, p.t)
    return u.with_values(out)


def _advance(
    stepper: _ACStepper,
    v: np.ndarray,
    t_target: float,
    check_every: int = 25,
) -> np.ndarray:
    p = stepper.p
    k = 0
    while p.t < t_target - 1e-14 * max(1.0, abs(t_target)):
        dt = min(p.dt, t_target - p.t)
        v = stepper.step(v, dt)
        k += 1
        if k % check_every == 0:
            _check_bounds(v, p.t)
    p.t = t_target
    return v


def simulate_ac(
    u0: ScalarField,
    p: ACParams,
    t_end: float,
    observers: Sequence[tuple[float, Callable[[float, ScalarField], None]]] = (),
) -> ScalarField:
    """Step from p.t to t_end, landing exactly on every observer time.

    ``observers`` is a list of (time, callback); callbacks receive
    (t, ScalarField).  Observer times at or before the current time fire
    immediately; times beyond t_end are ignored.
    """
    if t_end < p.t:
        raise ValueError("t_end is before the current time")
    stepper = _ACStepper(u0, p)
    v = u0.values
    pending = sorted(
        (max(t, p.t), cb) for t, cb in observers if t <= t_end + 1e-14 * max(1.0, t_end)
    )
    for t_obs, cb in pending:
        v = _advance(stepper, v, min(t_obs, t_end))
        _check_bounds(v, p.t)
        cb(p.t, u0.with_values(v.copy()))
    v = _advance(stepper, v, t_end)
    _check_bounds(v, p.t)
    return u0.with_values(v)


def energy(u: ScalarField, eps: float, nl: BistableNonlinearity) -> float:
    """Lyapunov functional int eps*|grad u|^2/2 + W(u)/eps dx (trapezoid rule).

    Gradients are central in the interior and one-sided (second order) at
    the walls; along unforced trajectories the recorded values decrease.
    """
    gx, gy = np.gradient(u.values, u.h, edge_order=2)
    dens = 0.5 * eps * (gx * gx + gy * gy) + nl.potential(u.values) / eps
    return float(np.trapezoid(np.trapezoid(dens, dx=u.h, axis=1), dx=u.h))


@dataclass
class RDState:
    """State of the two-component system, with the invariant rectangle.

    ``rect`` = (L, M1): the run must keep |u| <= L and |v| <= M1.  For the
    FHN recovery term h = alpha*u - beta*v the standard choice is
    M1 = max(max|v0|, alpha*L/beta).
    """

    u: ScalarField
    v: ScalarField
    coupling: SystemCoupling
    nl: BistableNonlinearity
    t: float = 0.0
    rect: tuple[float, float] = (2.0, 2.0)

    def __post_init__(self):
        if self.u.values.shape != self.v.values.shape or self.u.h != self.v.h:
            raise ValueError("u and v must share grid geometry")

    def check_rectangle(self) -> None:
        L, M1 = self.rect
        mu = float(np.max(np.abs(self.u.values)))
        mv = float(np.max(np.abs(self.v.values)))
        if mu > L or mv > M1:
            raise InvariantRectangleError(
                f"(u, v) left [-{L}, {L}]x[-{M1}, {M1}]: "
                f"max|u| = {mu:.3g}, max|v| = {mv:.3g} at t = {self.t:.6g}"
            )


def fhn_rectangle(
    coupling: SystemCoupling, v0_bound: float, L: float = 2.0
) -> tuple[float, float]:
    """Invariant rectangle for FHN couplings: M1 = max(max|v0|, alpha*L/beta)."""
    if coupling.fhn_constants is None:
        return (L, max(v0_bound, L))
    alpha, beta, _ = coupling.fhn_constants
    m1 = max(v0_bound, alpha * L / beta) if beta > 0 else max(v0_bound, L)
    return (L, m1)


class _RDStepper:
    def __init__(self, s: RDState, eps: float, dt: float):
        h = s.u.h
        bound_u = min(
            h * h / (2.0 * 2 * 1.01), eps**2 / (1.01 * s.nl.max_abs_derivative())
        )
        bound_v = h * h / (2.0 * 2 * s.coupling.D * 1.01)
        if dt > min(bound_u, bound_v) * (1.0 + 1e-12):
            raise ValueError(
                f"dt = {dt:.3e} violates the stability bounds "
                f"(u: {bound_u:.3e}, v: {bound_v:.3e})"
            )
        self.h = h
        self.eps = eps
        self.ghost = np.empty((s.u.nx + 2, s.u.ny + 2))
        self.lap_u = np.empty_like(s.u.values)
        self.lap_v = np.empty_like(s.u.values)

    def step(self, s: RDState, u: np.ndarray, v: np.ndarray, dt: float):
        eps = self.eps
        _mirror_ghost(u, self.ghost)
        _laplacian(u, self.h, self.ghost, self.lap_u)
        _mirror_ghost(v, self.ghost)
        _laplacian(v, self.h, self.ghost, self.lap_v)
        react = s.nl.evaluate(u)
        react += eps * s.coupling.f1(u, v)
        react += (eps * eps) * s.coupling.f2(u, v)
        react /= eps * eps
        u_new = u + dt * (self.lap_u + react)
        v_new = v + dt * (s.coupling.D * self.lap_v + s.coupling.h(u, v))
        return u_new, v_new


def step_rd(s: RDState, eps: float, dt: float) -> RDState:
    """One simultaneous forward-Euler step of the coupled system.

    Both components use the time-t fields on the right-hand side.  Raises
    BlowUpError on runaway values and InvariantRectangleError (distinct)
    when (u, v) leaves the configured rectangle.
    """
    stepper = _RDStepper(s, eps, dt)
    u_new, v_new = stepper.step(s, s.u.values, s.v.values, dt)
    out = RDState(
        u=s.u.with_values(u_new),
        v=s.v.with_values(v_new),
        coupling=s.coupling,
        nl=s.nl,
        t=s.t + dt,
        rect=s.rect,
    )
    _check_bounds(u_new, out.t, "u")
    _check_bounds(v_new, out.t, "v")
    out.check_rectangle()
    return out


def simulate_rd(
    s0: RDState,
    eps: float,
    dt: float,
    t_end: float,
    observers: Sequence[tuple[float, Callable[[float, RDState], None]]] = (),
    check_every: int = 25,
) -> RDState:
    """Driver for the coupled system, landing exactly on observer times."""
    if t_end < s0.t:
        raise ValueError("t_end is before the current time")
    stepper = _RDStepper(s0, eps, dt)
    u, v, t = s0.u.values, s0.v.values, s0.t

    def make_state(u, v, t):
        return RDState(s0.u.with_values(u), s0.v.with_values(v), s0.coupling, s0.nl, t, s0.rect)

    def advance(u, v, t, target):
        k = 0
        while t < target - 1e-14 * max(1.0, abs(target)):
            step_dt = min(dt, target - t)
            u, v = stepper.step(s0, u, v, step_dt)
            t += step_dt
            k += 1
            if k % check_every == 0:
                _check_bounds(u, t, "u")
                _check_bounds(v, t, "v")
                make_state(u, v, t).check_rectangle()
        return u, v, target

    pending = sorted(
        (max(tt, t), cb) for tt, cb in observers if tt <= t_end + 1e-14 * max(1.0, t_end)
    )
    for t_obs, cb in pending:
        u, v, t = advance(u, v, t, min(t_obs, t_end))
        state = make_state(u.copy(), v.copy(), t)
        _check_bounds(u, t, "u")
        _check_bounds(v, t, "v")
        state.check_rectangle()
        cb(t, state)
    u, v, t = advance(u, v, t, t_end)
    final = make_state(u, v, t)
    _check_bounds(u, t, "u")
    _check_bounds(v, t, "v")
    final.check_rectangle()
    return final


def radial_initial_data(
    box: tuple[float, float, float, float],
    h: float,
    R0: float,
    steepness: float,
    nl: BistableNonlinearity,
    center: tuple[float, float] | None = None,
) -> ScalarField:
    """Smooth eps-independent initial data whose a-level set is a circle.

    u0 = a + (a+ - a) tanh(steepness (r - R0)) outside the circle and
    a + (a - a-) tanh(steepness (r - R0)) inside, so u0 < a exactly in the
    enclosed region.  The steepness is O(1): the data carries no developed
    layer.  Rejects circles closer than 4h to the walls.
    """
    x0, x1, y0, y1 = box
    cx, cy = center if center is not None else (0.5 * (x0 + x1), 0.5 * (y0 + y1))
    margin = min(cx - x0, x1 - cx, cy - y0, y1 - cy) - R0
    if margin < 4 * h:
        raise ValueError(
            f"circle of radius {R0} is within {margin:.3g} < 4h of the boundary"
        )
    am, a, ap = nl.zeros

    def fn(X, Y):
        r = np.hypot(X - cx, Y - cy)
        t = np.tanh(steepness * (r - R0))
        return a + np.where(r > R0, (ap - a) * t, (a - am) * t)

    return ScalarField.from_function(box, h, fn)
