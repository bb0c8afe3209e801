"""Bistable reaction terms, double-well potentials and derived constants.

The reaction term f has three zeros a- < a < a+ with f'(a-) < 0, f'(a+) < 0
and f'(a) > 0, and is balanced: the integral of f between the two stable
zeros vanishes, equivalently the double-well potential
W(s) = -int_a^s f(r) dr has equal depth at a- and a+.  The default instance
is the cubic f(u) = u - u**3, for which every derived quantity has a closed
form usable as a test oracle.

All callables stored on the dataclasses below must accept numpy arrays
(broadcasting like numpy ufuncs); the solvers evaluate them on whole grids.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from numpy.polynomial.legendre import leggauss

__all__ = [
    "BistableNonlinearity",
    "AdmissibilityReport",
    "Forcing",
    "SystemCoupling",
    "make_cubic",
    "make_cubic_general",
    "check_admissible",
    "mobility_constant",
    "constant_forcing",
    "linear_forcing",
    "no_forcing",
    "fhn_coupling",
    "check_forcing_bound",
]


@dataclass(frozen=True)
class BistableNonlinearity:
    """A balanced bistable reaction term together with its potential.

    ``zeros`` are stored, never root-found at use sites; ``potential`` is
    W(s) = -int_a^s f(r) dr with the anchor a = zeros[1], so W(a) = 0.
    """

    evaluate: Callable[[np.ndarray], np.ndarray]
    derivative: Callable[[np.ndarray], np.ndarray]
    zeros: tuple[float, float, float]
    potential: Callable[[np.ndarray], np.ndarray]
    name: str = "custom"

    @property
    def stable_interval(self) -> tuple[float, float]:
        return (self.zeros[0], self.zeros[2])

    def well_depth(self) -> float:
        """W(a-), the common potential value at the stable zeros."""
        return float(self.potential(self.zeros[0]))

    def max_abs_derivative(self, n_sample: int = 4097) -> float:
        """max |f'| over [a-, a+], by dense sampling (endpoints included)."""
        s = np.linspace(self.zeros[0], self.zeros[2], n_sample)
        return float(np.max(np.abs(self.derivative(s))))


def make_cubic() -> BistableNonlinearity:
    """The canonical cubic f(u) = u - u**3 with zeros (-1, 0, 1).

    W(s) = s**4/4 - s**2/2, so W(-1) = W(1) = -1/4.
    """
    return BistableNonlinearity(
        evaluate=lambda u: u - u**3,
        derivative=lambda u: 1.0 - 3.0 * u**2,
        zeros=(-1.0, 0.0, 1.0),
        potential=lambda s: s**4 / 4.0 - s**2 / 2.0,
        name="cubic",
    )


def make_cubic_general(
    zeros: tuple[float, float, float], scale: float = 1.0
) -> BistableNonlinearity:
    """Cubic f(u) = -scale*(u - z0)(u - z1)(u - z2) with the given zeros.

    Bistability needs scale > 0 and z0 < z1 < z2; balance additionally needs
    z1 = (z0 + z2)/2.  Imbalanced choices are accepted here and rejected by
    ``check_admissible`` so that tests can exercise the failure path.
    """
    z0, z1, z2 = (float(z) for z in zeros)
    if not z0 < z1 < z2:
        raise ValueError(f"zeros must be increasing, got {zeros}")
    if scale <= 0:
        raise ValueError(f"scale must be positive, got {scale}")
    c = float(scale)

    def f(u):
        return -c * (u - z0) * (u - z1) * (u - z2)

    def fprime(u):
        return -c * (
            (u - z1) * (u - z2) + (u - z0) * (u - z2) + (u - z0) * (u - z1)
        )

    # W(s) = -int_{z1}^{s} f: expand once, integrate the monomials exactly.
    b2 = -(z0 + z1 + z2)
    b1 = z0 * z1 + z0 * z2 + z1 * z2
    b0 = -z0 * z1 * z2

    def antiderivative(s):
        return c * (s**4 / 4.0 + b2 * s**3 / 3.0 + b1 * s**2 / 2.0 + b0 * s)

    w_anchor = antiderivative(z1)

    def potential(s):
        return antiderivative(s) - w_anchor

    return BistableNonlinearity(
        evaluate=f,
        derivative=fprime,
        zeros=(z0, z1, z2),
        potential=potential,
        name=f"cubic({z0},{z1},{z2})x{c}",
    )


@dataclass(frozen=True)
class AdmissibilityReport:
    """Residuals of the bistability/balance conditions, and a verdict."""

    zero_residuals: tuple[float, float, float]
    derivative_signs: tuple[float, float, float]  # f'(a-), f'(a), f'(a+)
    balance_residual: float
    well_depth_residual: float
    tol: float

    @property
    def ok(self) -> bool:
        rm, ra, rp = self.zero_residuals
        dm, da, dp = self.derivative_signs
        return (
            max(abs(rm), abs(ra), abs(rp)) <= self.tol
            and dm < 0 and dp < 0 and da > 0
            and abs(self.balance_residual) <= self.tol
            and abs(self.well_depth_residual) <= self.tol
        )

    def describe(self) -> str:
        lines = [
            f"zero residuals: {self.zero_residuals}",
            f"f' at (a-, a, a+): {self.derivative_signs} (want -, +, -)",
            f"balance integral: {self.balance_residual:.3e}",
            f"W(a+) - W(a-): {self.well_depth_residual:.3e}",
            f"tolerance: {self.tol:.1e}",
            f"verdict: {'pass' if self.ok else 'fail'}",
        ]
        return "\n".join(lines)


def check_admissible(nl: BistableNonlinearity, tol: float = 1e-12) -> AdmissibilityReport:
    """Report-style check of the bistability and balance conditions."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    am, a, ap = nl.zeros
    zero_res = tuple(float(nl.evaluate(z)) for z in (am, a, ap))
    dsigns = tuple(float(nl.derivative(z)) for z in (am, a, ap))
    # Balance integral of f over [a-, a+] by Gauss-Legendre; the integrand is
    # smooth so 128 nodes is far past convergence for any reasonable f.
    x, w = leggauss(128)
    s = 0.5 * (ap - am) * x + 0.5 * (ap + am)
    balance = float(0.5 * (ap - am) * np.sum(w * nl.evaluate(s)))
    depth = float(nl.potential(ap) - nl.potential(am))
    return AdmissibilityReport(zero_res, dsigns, balance, depth, tol)


def require_admissible(nl: BistableNonlinearity, tol: float = 1e-10) -> None:
    report = check_admissible(nl, tol)
    if not report.ok:
        raise ValueError(f"nonlinearity is not admissible:\n{report.describe()}")


def mobility_constant(nl: BistableNonlinearity, n_quad: int = 512) -> float:
    """The constant converting the forcing integral into normal velocity.

    c0 = [sqrt(2) * int_{a-}^{a+} sqrt(W(s) - W(a-)) ds]^(-1).

    The integrand has sqrt-type degeneracy at both endpoints; substituting
    s = a- + (a+ - a-) sin^2(phi) makes it analytic in phi on [0, pi/2], so
    plain Gauss-Legendre in phi converges geometrically.
    """
    if n_quad < 16:
        raise ValueError("n_quad must be at least 16")
    am, _, ap = nl.zeros
    floor = nl.well_depth()
    x, w = leggauss(int(n_quad))
    phi = 0.25 * np.pi * (x + 1.0)
    s = am + (ap - am) * np.sin(phi) ** 2
    height = nl.potential(s) - floor
    scale = max(abs(floor), 1.0)
    if np.min(height) < -1e-12 * scale:
        raise ValueError(
            "W(s) - W(a-) is negative between the stable zeros; "
            "the nonlinearity is not a balanced double well"
        )
    height = np.maximum(height, 0.0)
    ds_dphi = (ap - am) * np.sin(2.0 * phi)
    integral = 0.25 * np.pi * np.sum(w * np.sqrt(height) * ds_dphi)
    return float(1.0 / (np.sqrt(2.0) * integral))


@dataclass(frozen=True)
class Forcing:
    """A small perturbation g_eps(x, t, u) of the balanced reaction term.

    ``evaluate`` is the perturbation actually fed to the solver;
    ``limit_evaluate`` is its eps -> 0 limit g(x, t, u), used to build the
    forcing of the limit interface motion.  Both are called with broadcastable
    arrays (x1, x2, t, u).  ``bound`` is the constant C in the closeness
    requirement |evaluate - limit_evaluate| <= C * eps.
    """

    evaluate: Callable[..., np.ndarray]
    limit_evaluate: Callable[..., np.ndarray]
    bound: float
    name: str = "custom"


def no_forcing() -> None:
    """Placeholder spelling for g == 0 (solver treats None as unforced)."""
    return None


def constant_forcing(delta: float) -> Forcing:
    """g(x, t, u) = delta, independent of eps (so the C*eps bound is slack)."""

    def g(x1, x2, t, u):
        return np.broadcast_to(
            np.float64(delta), np.broadcast_shapes(np.shape(x1), np.shape(x2), np.shape(u))
        )

    return Forcing(evaluate=g, limit_evaluate=g, bound=1.0, name=f"constant({delta})")


def linear_forcing(delta: float) -> Forcing:
    """g(x, t, u) = delta * x1, linear in the first coordinate."""

    def g(x1, x2, t, u):
        return delta * x1 + 0.0 * np.asarray(u)

    return Forcing(evaluate=g, limit_evaluate=g, bound=1.0, name=f"linear_x({delta})")


def check_forcing_bound(
    forcing: Forcing,
    eps: float,
    domain: tuple[float, float, float, float] = (-1.0, 1.0, -1.0, 1.0),
    t_max: float = 1.0,
    u_range: tuple[float, float] = (-1.0, 1.0),
) -> float:
    """Max sampled |g_eps - g| - C*eps on a 10x10x5 lattice of (x, t, u).

    Nonpositive return means the closeness bound holds on the sample.
    """
    x0, x1, y0, y1 = domain
    xs = np.linspace(x0, x1, 10)
    ys = np.linspace(y0, y1, 10)
    ts = np.linspace(0.0, t_max, 10)
    us = np.linspace(u_range[0], u_range[1], 5)
    worst = -np.inf
    for t in ts:
        for u in us:
            X, Y = np.meshgrid(xs, ys, indexing="ij")
            gap = np.abs(
                forcing.evaluate(X, Y, t, u) - forcing.limit_evaluate(X, Y, t, u)
            )
            worst = max(worst, float(np.max(gap)))
    return worst - forcing.bound * eps


@dataclass(frozen=True)
class SystemCoupling:
    """Coupling terms of the two-component reaction-diffusion system.

    The u-equation reads u_t = lap(u) + (f(u) + eps*f1(u,v) + eps^2*f2(u,v))/eps^2
    and the v-equation v_t = D*lap(v) + h(u,v).  In FitzHugh-Nagumo mode the
    constructor ties f1(u,v) = f1_u(u) + v and h(u,v) = alpha*u - beta*v, so
    the system is the FHN special case of the general coupling.
    """

    f1: Callable[[np.ndarray, np.ndarray], np.ndarray]
    f2: Callable[[np.ndarray, np.ndarray], np.ndarray]
    h: Callable[[np.ndarray, np.ndarray], np.ndarray]
    D: float
    fhn_constants: tuple[float, float, Callable] | None = None

    def __post_init__(self):
        if self.D <= 0:
            raise ValueError(f"diffusivity D must be positive, got {self.D}")


def _zero2(u, v):
    return np.zeros(np.broadcast_shapes(np.shape(u), np.shape(v)))


def fhn_coupling(
    alpha: float = 1.0,
    beta: float = 1.0,
    f1_u: Callable[[np.ndarray], np.ndarray] | None = None,
    D: float = 1.0,
) -> SystemCoupling:
    """FitzHugh-Nagumo coupling: f1(u,v) = f1_u(u) + v, h(u,v) = alpha*u - beta*v."""
    if alpha < 0 or beta < 0:
        raise ValueError("alpha and beta must be nonnegative")
    fu = f1_u if f1_u is not None else (lambda u: 0.0 * np.asarray(u))

    def f1(u, v):
        return fu(u) + v

    def h(u, v):
        return alpha * np.asarray(u) - beta * np.asarray(v)

    return SystemCoupling(f1=f1, f2=_zero2, h=h, D=D, fhn_constants=(alpha, beta, fu))
