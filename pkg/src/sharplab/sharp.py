"""Sharp-interface limit solvers.

Three movers live here: the radial reduction of forced mean curvature flow
(an ODE in the radius, any ambient dimension), a parametric front tracker
for general planar curves, and the coupled limit system where the curve's
forcing is fed by a diffusing field that sees only the step function built
from the curve's inside/outside partition.

Front tracking is justified because the limit flow stays smooth on the time
windows used here; no topology changes are expected and self-intersection is
an error, not an event.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.interpolate import CubicSpline

from .interface import Curve, points_in_polygon
from .nonlinearity import BistableNonlinearity, Forcing, SystemCoupling
from .pde import ScalarField, _laplacian, _mirror_ghost

__all__ = [
    "RadialState",
    "RadialTrajectory",
    "LimitForcing",
    "CurveTrajectory",
    "RDLimitTrajectory",
    "CurveFlowError",
    "evolve_radial",
    "evolve_curve",
    "evolve_rd_limit",
    "inside_outside",
    "limit_forcing_from",
    "coupling_integral_table",
]

INSIDE, OUTSIDE, BOUNDARY = -1, 1, 0


class CurveFlowError(RuntimeError):
    """Front tracking failed (self-intersection, grid exit, step too large)."""


@dataclass(frozen=True)
class RadialState:
    """Radius of a spherical interface in R^N at one time."""

    R: float
    t: float
    N: int

    def __post_init__(self):
        if self.R <= 0:
            raise ValueError(f"radius must be positive, got {self.R}")
        if self.N < 2:
            raise ValueError("ambient dimension must be >= 2")


@dataclass(frozen=True)
class LimitForcing:
    """Normal-velocity forcing of the limit flow: the mobility constant times
    the integral of the perturbation over the reaction range.

    ``evaluate(points, t)`` accepts an (m, 2) array (or a scalar radius for
    radial use) and returns the forcing per point."""

    evaluate: Callable[..., np.ndarray]
    name: str = "custom"


def limit_forcing_from(
    forcing: Forcing, nl: BistableNonlinearity, c0: float, n_quad: int = 64
) -> LimitForcing:
    """Build c0 * int_{a-}^{a+} g(x, t, r) dr from a perturbation g.

    The quadrature in r uses Gauss-Legendre; g is evaluated with the point
    coordinates broadcast against each quadrature node.
    """
    am, _, ap = nl.zeros
    x, w = leggauss(n_quad)
    r_nodes = 0.5 * (ap - am) * x + 0.5 * (ap + am)
    r_weights = 0.5 * (ap - am) * w

    def evaluate(points, t):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        acc = np.zeros(pts.shape[0])
        for rk, wk in zip(r_nodes, r_weights):
            acc += wk * np.asarray(
                forcing.limit_evaluate(pts[:, 0], pts[:, 1], t, rk)
            )
        out = c0 * acc
        return out

    return LimitForcing(evaluate=evaluate, name=f"c0*int({forcing.name})")


def constant_limit_forcing(value: float) -> LimitForcing:
    def evaluate(points, t):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return np.full(pts.shape[0], float(value))

    return LimitForcing(evaluate=evaluate, name=f"constant({value})")


@dataclass(frozen=True)
class RadialTrajectory:
    """Sampled radius history; ``extinct`` reports collapse before t_end,
    with the bracketing step recorded in ``extinction_bracket``."""

    ts: np.ndarray
    rs: np.ndarray
    N: int
    extinct: bool = False
    extinction_bracket: tuple[float, float] | None = None

    def radius_at(self, t: float) -> float:
        idx = np.searchsorted(self.ts, t)
        if idx < len(self.ts) and abs(self.ts[idx] - t) <= 1e-12 * max(1.0, abs(t)):
            return float(self.rs[idx])
        if idx > 0 and abs(self.ts[idx - 1] - t) <= 1e-12 * max(1.0, abs(t)):
            return float(self.rs[idx - 1])
        raise KeyError(f"time {t} was not a sample time; pass it via sample_times")

    @property
    def final(self) -> RadialState:
        return RadialState(float(self.rs[-1]), float(self.ts[-1]), self.N)


def evolve_radial(
    R0: float,
    N: int,
    F: LimitForcing | None,
    t_end: float,
    dt: float,
    sample_times: Sequence[float] = (),
) -> RadialTrajectory:
    """Integrate dR/dt = -(N-1)/R + F(R, t) with classical Runge-Kutta.

    Steps land exactly on requested sample times and on t_end.  If any stage
    would push the radius through zero the run halts and the trajectory is
    marked extinct with the offending step as the extinction bracket.
    """
    if R0 <= 0:
        raise ValueError("R0 must be positive")
    if dt <= 0:
        raise ValueError("dt must be positive")

    class _Extinct(Exception):
        pass

    def rhs(R, t):
        if R <= 0:
            raise _Extinct()
        drift = -(N - 1) / R
        if F is not None:
            drift += float(F.evaluate(np.array([[R, 0.0]]), t)[0])
        return drift

    events = sorted(set(float(t) for t in sample_times if 0.0 < t <= t_end)) + [t_end]
    ts = [0.0]
    rs = [float(R0)]
    t, R = 0.0, float(R0)
    for target in events:
        while t < target - 1e-15 * max(1.0, target):
            step = min(dt, target - t)
            try:
                k1 = rhs(R, t)
                k2 = rhs(R + 0.5 * step * k1, t + 0.5 * step)
                k3 = rhs(R + 0.5 * step * k2, t + 0.5 * step)
                k4 = rhs(R + step * k3, t + step)
                R_new = R + step / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
            except _Extinct:
                R_new = -1.0
            if R_new <= 0 or not np.isfinite(R_new):
                return RadialTrajectory(
                    np.asarray(ts), np.asarray(rs), N,
                    extinct=True, extinction_bracket=(t, t + step),
                )
            t, R = t + step, R_new
        t = target
        ts.append(t)
        rs.append(R)
    return RadialTrajectory(np.asarray(ts), np.asarray(rs), N)


# ---------------------------------------------------------------------------
# front tracking

def _ccw_points(c: Curve) -> np.ndarray:
    pts = np.asarray(c.points, dtype=float).copy()
    if c.signed_area() < 0:
        pts = pts[::-1].copy()
    return pts


def _menger_curvature(pts: np.ndarray) -> np.ndarray:
    """Signed circumscribed-circle curvature at each node of a closed CCW
    polyline; positive for a circle with outward normal."""
    prev_ = np.roll(pts, 1, axis=0)
    next_ = np.roll(pts, -1, axis=0)
    u = pts - prev_
    v = next_ - pts
    w = next_ - prev_
    cross = u[:, 0] * v[:, 1] - u[:, 1] * v[:, 0]
    lu = np.hypot(*u.T)
    lv = np.hypot(*v.T)
    lw = np.hypot(*w.T)
    return 2.0 * cross / np.maximum(lu * lv * lw, 1e-300)


def _outward_normals_ccw(pts: np.ndarray) -> np.ndarray:
    tang = np.roll(pts, -1, axis=0) - np.roll(pts, 1, axis=0)
    tang /= np.hypot(*tang.T)[:, None]
    return np.column_stack([tang[:, 1], -tang[:, 0]])


def _resample_closed(pts: np.ndarray, m: int) -> np.ndarray:
    """Redistribute nodes to uniform arclength with a periodic cubic spline
    (linear resampling would bleed area at every remesh)."""
    closed = np.vstack([pts, pts[:1]])
    seg = np.hypot(*np.diff(closed, axis=0).T)
    s = np.concatenate([[0.0], np.cumsum(seg)])
    total = s[-1]
    spl_x = CubicSpline(s, closed[:, 0], bc_type="periodic")
    spl_y = CubicSpline(s, closed[:, 1], bc_type="periodic")
    s_new = total * np.arange(m) / m
    return np.column_stack([spl_x(s_new), spl_y(s_new)])


def _check_simple(pts: np.ndarray, context: str) -> None:
    curve = Curve(pts, closed=True)
    if curve.self_intersects():
        raise CurveFlowError(f"{context}: curve self-intersected")


class _FrontTracker:
    """Shared node-advection machinery for the limit flows."""

    def __init__(self, c: Curve, dt: float, remesh_every: int, target_spacing: float | None):
        if not c.closed:
            raise CurveFlowError("front tracking requires a closed curve")
        self.pts = _ccw_points(c)
        self.dt_nominal = dt
        self.remesh_every = remesh_every
        spacing = float(np.mean(Curve(self.pts, closed=True).segment_lengths()))
        self.target = target_spacing if target_spacing is not None else spacing
        self.steps_taken = 0
        self._check_dt(dt)

    def _check_dt(self, dt) -> None:
        min_seg = float(np.min(Curve(self.pts, closed=True).segment_lengths()))
        if dt > min_seg**2 / 4.0 * (1.0 + 1e-12):
            raise CurveFlowError(
                f"dt = {dt:.3e} exceeds the parabolic bound (min segment)^2/4 "
                f"= {min_seg**2 / 4.0:.3e}"
            )

    def normal_velocity_step(self, forcing_values: np.ndarray, dt: float) -> None:
        kappa = _menger_curvature(self.pts)
        normals = _outward_normals_ccw(self.pts)
        self.pts = self.pts + dt * ((-kappa + forcing_values))[:, None] * normals
        self.steps_taken += 1
        if self.steps_taken % self.remesh_every == 0:
            self.remesh()

    def remesh(self) -> None:
        m = self.pts.shape[0]
        length = float(Curve(self.pts, closed=True).length)
        spacing = length / m
        if spacing < 0.5 * self.target or spacing > 1.5 * self.target:
            m = max(8, int(round(length / self.target)))
        self.pts = _resample_closed(self.pts, m)
        _check_simple(self.pts, "remesh")
        self._check_dt(self.dt_nominal)

    def curve(self) -> Curve:
        return Curve(self.pts.copy(), closed=True, interior_left=True)


@dataclass(frozen=True)
class CurveTrajectory:
    times: tuple[float, ...]
    curves: tuple[Curve, ...]

    def curve_at(self, t: float) -> Curve:
        for tt, c in zip(self.times, self.curves):
            if abs(tt - t) <= 1e-12 * max(1.0, abs(t)):
                return c
        raise KeyError(f"time {t} was not a snapshot time")

    @property
    def final(self) -> Curve:
        return self.curves[-1]


def evolve_curve(
    c: Curve,
    F: LimitForcing | None,
    t_end: float,
    dt: float,
    snapshot_times: Sequence[float] = (),
    remesh_every: int = 5,
    target_spacing: float | None = None,
) -> CurveTrajectory:
    """Front-track V_n = -kappa + F along the outward normal.

    Node curvature comes from the circumscribed circle through node triples,
    normals from rotated centered tangents; every ``remesh_every`` steps the
    nodes are redistributed to uniform arclength and the node count adapts to
    keep spacing within [0.5, 1.5] of the target.  Self-intersection is
    checked at each remesh and raises CurveFlowError.
    """
    tracker = _FrontTracker(c, dt, remesh_every, target_spacing)
    times = [0.0]
    curves = [tracker.curve()]
    events = sorted(set(float(t) for t in snapshot_times if 0.0 < t < t_end)) + [t_end]
    t = 0.0
    for target in events:
        while t < target - 1e-15 * max(1.0, target):
            step = min(dt, target - t)
            fv = (
                F.evaluate(tracker.pts, t)
                if F is not None
                else np.zeros(tracker.pts.shape[0])
            )
            tracker.normal_velocity_step(np.asarray(fv), step)
            t += step
        t = target
        times.append(t)
        curves.append(tracker.curve())
    return CurveTrajectory(tuple(times), tuple(curves))


# ---------------------------------------------------------------------------
# coupled limit system

def inside_outside(c: Curve, q) -> int:
    """-1 inside the closed curve, +1 outside, 0 on the curve itself."""
    q = np.asarray(q, dtype=float)
    a, b = c.segment_endpoints()
    d = q[None, :] - a
    e = b - a
    le2 = np.maximum(np.einsum("ij,ij->i", e, e), 1e-300)
    t = np.clip(np.einsum("ij,ij->i", d, e) / le2, 0.0, 1.0)
    feet = a + t[:, None] * e
    dist = np.min(np.hypot(*(q[None, :] - feet).T))
    if dist <= 1e-14 * max(1.0, float(np.max(np.abs(c.points)))):
        return BOUNDARY
    return INSIDE if bool(points_in_polygon(q[None, :], c)[0]) else OUTSIDE


def _inside_mask(curve_pts: np.ndarray, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Boolean (nx, ny) inside mask by horizontal-line crossing parity.

    One pass over grid rows; each row gathers the x-crossings of the curve
    with its horizontal line and fills parity intervals by searchsorted.
    """
    a = curve_pts
    b = np.roll(curve_pts, -1, axis=0)
    mask = np.zeros((xs.size, ys.size), dtype=bool)
    ay, by = a[:, 1], b[:, 1]
    ax, bx = a[:, 0], b[:, 0]
    for j, y in enumerate(ys):
        straddle = (ay > y) != (by > y)
        if not np.any(straddle):
            continue
        with np.errstate(divide="ignore", invalid="ignore"):
            xc = ax[straddle] + (y - ay[straddle]) * (bx[straddle] - ax[straddle]) / (
                by[straddle] - ay[straddle]
            )
        xc = np.sort(xc)
        counts = xc.size - np.searchsorted(xc, xs, side="right")
        mask[:, j] = counts % 2 == 1
    return mask


def coupling_integral_table(
    coupling: SystemCoupling,
    nl: BistableNonlinearity,
    v_range: tuple[float, float],
    spacing: float = 1e-3,
    n_quad: int = 64,
):
    """Tabulate I(v) = int_{a-}^{a+} f1(r, v) dr on a v-grid, cubic-interpolated.

    The integral is evaluated once per step per curve node, so it is
    precomputed on a grid of spacing ~1e-3 and interpolated.
    """
    am, _, ap = nl.zeros
    x, w = leggauss(n_quad)
    r_nodes = 0.5 * (ap - am) * x + 0.5 * (ap + am)
    r_weights = 0.5 * (ap - am) * w
    lo, hi = v_range
    pad = 0.1 * max(1.0, hi - lo)
    vs = np.arange(lo - pad, hi + pad + spacing, spacing)
    table = np.zeros_like(vs)
    for rk, wk in zip(r_nodes, r_weights):
        table += wk * np.asarray(coupling.f1(rk, vs))
    spline = CubicSpline(vs, table)
    v_lo, v_hi = vs[0], vs[-1]

    def integral(v):
        return spline(np.clip(v, v_lo, v_hi))

    return integral


@dataclass(frozen=True)
class RDLimitTrajectory:
    times: tuple[float, ...]
    curves: tuple[Curve, ...]
    v_fields: tuple[ScalarField, ...]

    def at(self, t: float) -> tuple[Curve, ScalarField]:
        for tt, c, v in zip(self.times, self.curves, self.v_fields):
            if abs(tt - t) <= 1e-12 * max(1.0, abs(t)):
                return c, v
        raise KeyError(f"time {t} was not a snapshot time")

    @property
    def final(self) -> tuple[Curve, ScalarField]:
        return self.curves[-1], self.v_fields[-1]


def evolve_rd_limit(
    c: Curve,
    v: ScalarField,
    coupling: SystemCoupling,
    nl: BistableNonlinearity,
    c0: float,
    t_end: float,
    dt: float,
    snapshot_times: Sequence[float] = (),
    remesh_every: int = 5,
    target_spacing: float | None = None,
    v_bound: float = 5.0,
) -> RDLimitTrajectory:
    """Operator-split limit system: step-function source, diffusing v,
    curve forced by -c0 * I(v at node).

    Each step (1) builds the step function (a- inside the curve, a+ outside)
    on the v-grid, (2) Euler-steps v_t = D lap v + h(step, v) with Neumann
    walls, (3) moves the curve by -kappa - c0*I(v(p, t)) along the outward
    normal, with v interpolated bilinearly at the nodes before its update.
    The r-integral I(v) is precomputed by ``coupling_integral_table``.
    """
    h = v.h
    bound_v = h * h / (2.0 * 2 * coupling.D * 1.01)
    if dt > bound_v * (1.0 + 1e-12):
        raise CurveFlowError(
            f"dt = {dt:.3e} exceeds the v-diffusion bound {bound_v:.3e}"
        )
    tracker = _FrontTracker(c, dt, remesh_every, target_spacing)
    box = v.box
    vmax0 = float(np.max(np.abs(v.values)))
    integral = coupling_integral_table(
        coupling, nl, (-(vmax0 + v_bound), vmax0 + v_bound)
    )
    am, _, ap = nl.zeros
    xs, ys = v.xs(), v.ys()
    ghost = np.empty((v.nx + 2, v.ny + 2))
    lap = np.empty_like(v.values)
    vv = v.values.copy()

    def check_in_box(pts):
        if (
            pts[:, 0].min() < box[0] or pts[:, 0].max() > box[1]
            or pts[:, 1].min() < box[2] or pts[:, 1].max() > box[3]
        ):
            raise CurveFlowError("curve exited the v-grid domain")

    times = [0.0]
    curves = [tracker.curve()]
    fields = [v.with_values(vv.copy())]
    events = sorted(set(float(t) for t in snapshot_times if 0.0 < t < t_end)) + [t_end]
    t = 0.0
    vfield = v
    for target in events:
        while t < target - 1e-15 * max(1.0, target):
            step = min(dt, target - t)
            inside = _inside_mask(tracker.pts, xs, ys)
            u_tilde = np.where(inside, am, ap)
            v_at_nodes = vfield.with_values(vv).sample_bilinear(tracker.pts)
            _mirror_ghost(vv, ghost)
            _laplacian(vv, h, ghost, lap)
            vv = vv + step * (coupling.D * lap + coupling.h(u_tilde, vv))
            if not np.all(np.isfinite(vv)):
                raise CurveFlowError(f"v blew up at t = {t:.6g}")
            forcing = -c0 * np.asarray(integral(v_at_nodes))
            tracker.normal_velocity_step(forcing, step)
            check_in_box(tracker.pts)
            t += step
        t = target
        times.append(t)
        curves.append(tracker.curve())
        fields.append(v.with_values(vv.copy()))
    return RDLimitTrajectory(tuple(times), tuple(curves), tuple(fields))
