"""Output writers: 16-bit PGM snapshots and the CSV formats.

Floats are rendered with repr (shortest round-trip form), so identical runs
produce byte-identical files.
"""

from __future__ import annotations

import os

import numpy as np

from .interface import Curve
from .pde import ScalarField

__all__ = [
    "write_pgm",
    "write_curves_csv",
    "read_curve_csv",
    "write_theta_csv",
    "write_profile_csv",
]


def write_pgm(field: ScalarField, path: str) -> None:
    """16-bit binary PGM, values scaled to [0, 65535]; the true min/max go to
    a ``<path>.minmax.txt`` sidecar so the scaling is invertible."""
    v = field.values
    vmin, vmax = float(v.min()), float(v.max())
    if vmax > vmin:
        scaled = np.round((v - vmin) / (vmax - vmin) * 65535.0)
    else:
        scaled = np.zeros_like(v)
    # image rows top-to-bottom = decreasing y; columns = increasing x
    img = scaled.T[::-1, :].astype(">u2")
    with open(path, "wb") as fh:
        fh.write(f"P5\n{img.shape[1]} {img.shape[0]}\n65535\n".encode())
        fh.write(img.tobytes())
    with open(path + ".minmax.txt", "w", encoding="utf-8") as fh:
        fh.write(f"min {vmin!r}\nmax {vmax!r}\n")


def write_curves_csv(curves, path: str) -> None:
    """One x,y row per vertex, one blank line between components; closed
    curves do not repeat their first vertex."""
    if isinstance(curves, Curve):
        curves = [curves]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("x,y\n")
        for k, c in enumerate(curves):
            if k:
                fh.write("\n")
            for x, y in c.points:
                fh.write(f"{float(x)!r},{float(y)!r}\n")


def read_curve_csv(path: str) -> Curve:
    """Read a single closed component written by ``write_curves_csv``."""
    pts = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("x,"):
                continue
            x, y = line.split(",")
            pts.append((float(x), float(y)))
    return Curve(np.asarray(pts), closed=True)


def write_theta_csv(arclength, theta, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("arclength,theta\n")
        for s, th in zip(arclength, theta):
            fh.write(f"{float(s)!r},{float(th)!r}\n")


def write_profile_csv(profile, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("z,u\n")
        for z, u in zip(profile.z_samples, profile.u_samples):
            fh.write(f"{float(z)!r},{float(u)!r}\n")


def ensure_dir(path: str) -> str:
    os.makedirs(path, exist_ok=True)
    return path
