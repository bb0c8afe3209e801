"""Level-set extraction and interface error statistics.

The a-level set of a grid field is polygonized by marching squares with
linear edge interpolation; segments are oriented so the sub-level region
(u < level) lies on the left of the travel direction, hence a closed contour
around a sub-level blob is counter-clockwise.  Signed distances follow the
enclosed-side-negative convention, matching u < a inside in every experiment
run here.

Distance queries against polylines are exact point-to-segment minimizations;
grid-scale queries go through a dense-sample KD-tree prefilter that selects
candidate segments before the exact minimization.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .pde import ScalarField
from .profile import LayerProfile

__all__ = [
    "Curve",
    "SignedDistanceResult",
    "GraphResult",
    "extract_level_set",
    "signed_distance",
    "hausdorff",
    "layer_error",
    "graph_over",
    "transversality",
    "circle_curve",
    "points_in_polygon",
]


@dataclass(frozen=True)
class Curve:
    """Oriented polyline; for closed curves the last point connects to the
    first (no repeated vertex).  ``interior_left`` records whether the
    enclosed region lies left of the travel direction (i.e. the curve is
    counter-clockwise); curves from ``extract_level_set`` have the sub-level
    region on the left, so interior_left means u < level inside."""

    points: np.ndarray
    closed: bool = True
    interior_left: bool = True

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 2:
            raise ValueError("points must be an (m, 2) array with m >= 2")
        object.__setattr__(self, "points", pts)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    def segment_endpoints(self) -> tuple[np.ndarray, np.ndarray]:
        pts = self.points
        if self.closed:
            return pts, np.roll(pts, -1, axis=0)
        return pts[:-1], pts[1:]

    def segment_lengths(self) -> np.ndarray:
        a, b = self.segment_endpoints()
        return np.hypot(*(b - a).T)

    @property
    def length(self) -> float:
        return float(np.sum(self.segment_lengths()))

    def signed_area(self) -> float:
        """Shoelace area; positive for counter-clockwise closed curves."""
        if not self.closed:
            raise ValueError("signed area needs a closed curve")
        x, y = self.points.T
        xn, yn = np.roll(x, -1), np.roll(y, -1)
        return 0.5 * float(np.sum(x * yn - xn * y))

    def enclosed_area(self) -> float:
        return abs(self.signed_area())

    def centroid(self) -> np.ndarray:
        return self.points.mean(axis=0)

    def outward_normals(self) -> np.ndarray:
        """Unit normals at vertices pointing away from the enclosed region,
        from centered tangents."""
        if not self.closed:
            raise ValueError("outward normals need a closed curve")
        pts = self.points
        tang = np.roll(pts, -1, axis=0) - np.roll(pts, 1, axis=0)
        tang /= np.hypot(*tang.T)[:, None]
        ccw = self.signed_area() > 0
        if ccw:
            return np.column_stack([tang[:, 1], -tang[:, 0]])
        return np.column_stack([-tang[:, 1], tang[:, 0]])

    def segment_outward_normals(self) -> np.ndarray:
        a, b = self.segment_endpoints()
        tang = b - a
        tang /= np.hypot(*tang.T)[:, None]
        ccw = self.closed and self.signed_area() > 0
        if ccw:
            return np.column_stack([tang[:, 1], -tang[:, 0]])
        return np.column_stack([-tang[:, 1], tang[:, 0]])

    def self_intersects(self) -> bool:
        """Exact proper-crossing test over all non-adjacent segment pairs."""
        a, b = self.segment_endpoints()
        m = a.shape[0]

        def orient(p, q, r):
            return (q[..., 0] - p[..., 0]) * (r[..., 1] - p[..., 1]) - (
                q[..., 1] - p[..., 1]
            ) * (r[..., 0] - p[..., 0])

        idx_i, idx_j = np.triu_indices(m, k=2)
        if self.closed:
            keep = ~((idx_i == 0) & (idx_j == m - 1))
            idx_i, idx_j = idx_i[keep], idx_j[keep]
        p1, p2 = a[idx_i], b[idx_i]
        q1, q2 = a[idx_j], b[idx_j]
        d1 = orient(q1, q2, p1)
        d2 = orient(q1, q2, p2)
        d3 = orient(p1, p2, q1)
        d4 = orient(p1, p2, q2)
        crossing = (d1 * d2 < 0) & (d3 * d4 < 0)
        return bool(np.any(crossing))

    def validate(self) -> None:
        """Raise unless the curve is closed, has >= 8 points and is simple."""
        if not self.closed:
            raise ValueError("curve is not closed")
        if self.n < 8:
            raise ValueError(f"curve has only {self.n} points (need >= 8)")
        if self.self_intersects():
            raise ValueError("curve is self-intersecting")

    def reversed(self) -> "Curve":
        return Curve(self.points[::-1].copy(), self.closed, self.interior_left)


def circle_curve(center: tuple[float, float], radius: float, n: int = 256) -> Curve:
    """Counter-clockwise polygonal circle (interior on the left)."""
    th = 2.0 * np.pi * np.arange(n) / n
    pts = np.column_stack([center[0] + radius * np.cos(th), center[1] + radius * np.sin(th)])
    return Curve(pts, closed=True, interior_left=True)


# ---------------------------------------------------------------------------
# marching squares

def _cell_gradient(v00, v10, v01, v11, s, t, h):
    gx = ((v10 - v00) * (1 - t) + (v11 - v01) * t) / h
    gy = ((v01 - v00) * (1 - s) + (v11 - v10) * s) / h
    return gx, gy


def extract_level_set(f: ScalarField, level: float) -> list[Curve]:
    """Polygonize {u = level} by marching squares with linear interpolation.

    Saddle cells are split by the cell-center average.  Closed contours come
    back as closed curves with the sub-level side on the left; contours that
    exit the domain are returned unclosed (flagged by ``closed=False``) and
    the validity statistics refuse to use them.  Returns [] when the level
    does not separate the field values.
    """
    v = f.values
    lv = float(level)
    if not (v.min() < lv < v.max()):
        return []
    h = f.h
    x0, y0 = f.origin

    # Nodes (numerically) on the level collapse edge crossings onto grid
    # nodes, which produces sub-roundoff segments and breaks chaining; nudge
    # them off by a relative epsilon (moves vertices by O(1e-11), below the
    # 1e-10 residual tolerance on extracted curves).
    scale = max(float(v.max() - v.min()), abs(lv), 1e-300)
    near = np.abs(v - lv) < 1e-12 * scale
    if np.any(near):
        v = np.where(near, lv + 1e-11 * scale, v)

    above = v > lv
    mixed = np.zeros((f.nx - 1, f.ny - 1), dtype=bool)
    a00 = above[:-1, :-1]
    a10 = above[1:, :-1]
    a01 = above[:-1, 1:]
    a11 = above[1:, 1:]
    s = a00.astype(np.int8) + a10 + a01 + a11
    mixed = (s > 0) & (s < 4)
    cells = np.argwhere(mixed)

    points: dict[tuple, np.ndarray] = {}
    succ: dict[tuple, tuple] = {}
    indeg: dict[tuple, int] = {}

    def edge_point(key):
        pt = points.get(key)
        if pt is not None:
            return pt
        axis, i, j = key
        if axis == 0:  # horizontal edge between (i, j) and (i+1, j)
            va, vb = v[i, j], v[i + 1, j]
            t = (lv - va) / (vb - va)
            pt = np.array([x0 + (i + t) * h, y0 + j * h])
        else:  # vertical edge between (i, j) and (i, j+1)
            va, vb = v[i, j], v[i, j + 1]
            t = (lv - va) / (vb - va)
            pt = np.array([x0 + i * h, y0 + (j + t) * h])
        points[key] = pt
        return pt

    def emit(cell, key_a, key_b, corners):
        pa = edge_point(key_a)
        pb = edge_point(key_b)
        d = pb - pa
        if float(np.hypot(*d)) < 1e-13 * h:
            return
        mid = 0.5 * (pa + pb)
        i, j = cell
        sloc = (mid[0] - (x0 + i * h)) / h
        tloc = (mid[1] - (y0 + j * h)) / h
        gx, gy = _cell_gradient(*corners, sloc, tloc, h)
        if d[0] * (-gy) + d[1] * gx < 0.0:
            key_a, key_b = key_b, key_a
        if key_a in succ:
            raise RuntimeError(
                f"unchainable level-set segment at cell {cell}: edge {key_a} "
                "already has a successor (degenerate field values)"
            )
        succ[key_a] = key_b
        indeg[key_b] = indeg.get(key_b, 0) + 1
        indeg.setdefault(key_a, indeg.get(key_a, 0))

    for i, j in cells:
        v00, v10, v01, v11 = v[i, j], v[i + 1, j], v[i, j + 1], v[i + 1, j + 1]
        corners = (v00, v10, v01, v11)
        b = (v00 > lv, v10 > lv, v01 > lv, v11 > lv)
        eS = (0, i, j)
        eN = (0, i, j + 1)
        eW = (1, i, j)
        eE = (1, i + 1, j)
        crossed = []
        if b[0] != b[1]:
            crossed.append(eS)
        if b[2] != b[3]:
            crossed.append(eN)
        if b[0] != b[2]:
            crossed.append(eW)
        if b[1] != b[3]:
            crossed.append(eE)
        if len(crossed) == 2:
            emit((i, j), crossed[0], crossed[1], corners)
        elif len(crossed) == 4:
            center_above = (v00 + v10 + v01 + v11) / 4.0 > lv
            adjacent = {0: (eS, eW), 1: (eS, eE), 2: (eN, eW), 3: (eN, eE)}
            for c in range(4):
                if b[c] != center_above:  # isolated minority corner
                    emit((i, j), adjacent[c][0], adjacent[c][1], corners)

    # chain directed segments into polylines
    curves: list[Curve] = []
    visited: set[tuple] = set()

    def walk(start):
        chain = [start]
        visited.add(start)
        cur = start
        while True:
            nxt = succ.get(cur)
            if nxt is None:
                return chain, False
            if nxt == start:
                return chain, True
            if nxt in visited:
                return chain, False
            chain.append(nxt)
            visited.add(nxt)
            cur = nxt

    open_starts = [k for k in succ if indeg.get(k, 0) == 0]
    for start in open_starts:
        chain, closed = walk(start)
        pts = np.array([points[k] for k in chain])
        curves.append(Curve(pts, closed=False, interior_left=False))
    for start in succ:
        if start in visited:
            continue
        chain, closed = walk(start)
        pts = np.array([points[k] for k in chain])
        if not closed:
            curves.append(Curve(pts, closed=False, interior_left=False))
            continue
        k0 = int(np.lexsort((pts[:, 1], pts[:, 0]))[0])
        pts = np.roll(pts, -k0, axis=0)
        area2 = float(np.sum(pts[:, 0] * np.roll(pts[:, 1], -1) - np.roll(pts[:, 0], -1) * pts[:, 1]))
        curves.append(Curve(pts, closed=True, interior_left=area2 > 0))

    curves.sort(key=lambda c: (c.points[0, 0], c.points[0, 1], c.n))
    return curves


# ---------------------------------------------------------------------------
# distances

def _min_distance_exact(points: np.ndarray, curve: Curve, block: int = 1024):
    """Exact min distance from each point to the polyline, with foot points."""
    q = np.atleast_2d(points)
    a, b = curve.segment_endpoints()
    best = np.full(q.shape[0], np.inf)
    best_foot = np.zeros_like(q)
    best_seg = np.zeros(q.shape[0], dtype=int)
    for lo in range(0, a.shape[0], block):
        A = a[lo : lo + block]
        E = b[lo : lo + block] - A
        L2 = np.maximum(np.einsum("ij,ij->i", E, E), 1e-300)
        D = q[:, None, :] - A[None, :, :]
        t = np.clip(np.einsum("kmj,mj->km", D, E) / L2, 0.0, 1.0)
        F = A[None, :, :] + t[..., None] * E[None, :, :]
        d2 = np.einsum("kmj,kmj->km", q[:, None, :] - F, q[:, None, :] - F)
        idx = np.argmin(d2, axis=1)
        rows = np.arange(q.shape[0])
        dmin = np.sqrt(d2[rows, idx])
        upd = dmin < best
        best[upd] = dmin[upd]
        best_foot[upd] = F[rows[upd], idx[upd]]
        best_seg[upd] = idx[upd] + lo
    return best, best_foot, best_seg


class CurveDistancer:
    """KD-tree accelerated exact distances from many points to polylines.

    Segments are densified at ``spacing``; a k-nearest query on the dense
    samples nominates candidate segments and the exact point-to-segment
    minimization runs on those.  With k >= 8 the result is exact except
    within ``spacing``/2 of the medial axis, far from any use here.
    """

    def __init__(self, curves, spacing: float, k: int = 8):
        if isinstance(curves, Curve):
            curves = [curves]
        self.curves = list(curves)
        self.k = k
        samples = []
        owner_a = []
        owner_b = []
        owner_normal = []
        for c in self.curves:
            a, b = c.segment_endpoints()
            normals = c.segment_outward_normals() if c.closed else None
            lens = np.hypot(*(b - a).T)
            for i in range(a.shape[0]):
                nseg = max(1, int(np.ceil(lens[i] / spacing)))
                ts = np.arange(nseg) / nseg
                pts = a[i] + ts[:, None] * (b[i] - a[i])
                samples.append(pts)
                owner_a.append(np.repeat(a[i][None, :], nseg, axis=0))
                owner_b.append(np.repeat(b[i][None, :], nseg, axis=0))
                nrm = normals[i] if normals is not None else np.array([0.0, 0.0])
                owner_normal.append(np.repeat(nrm[None, :], nseg, axis=0))
        self.samples = np.concatenate(samples)
        self.seg_a = np.concatenate(owner_a)
        self.seg_b = np.concatenate(owner_b)
        self.seg_normal = np.concatenate(owner_normal)
        self.tree = cKDTree(self.samples)

    def query(self, points: np.ndarray):
        """Exact distances, feet and outward normals of the nearest segment."""
        q = np.atleast_2d(points)
        k = min(self.k, self.samples.shape[0])
        _, nn = self.tree.query(q, k=k)
        nn = np.atleast_2d(nn)
        A = self.seg_a[nn]          # (m, k, 2)
        B = self.seg_b[nn]
        E = B - A
        L2 = np.maximum(np.einsum("mkj,mkj->mk", E, E), 1e-300)
        D = q[:, None, :] - A
        t = np.clip(np.einsum("mkj,mkj->mk", D, E) / L2, 0.0, 1.0)
        F = A + t[..., None] * E
        diff = q[:, None, :] - F
        d2 = np.einsum("mkj,mkj->mk", diff, diff)
        idx = np.argmin(d2, axis=1)
        rows = np.arange(q.shape[0])
        return (
            np.sqrt(d2[rows, idx]),
            F[rows, idx],
            self.seg_normal[nn[rows, idx]],
        )


@dataclass(frozen=True)
class SignedDistanceResult:
    """Signed distance of one query point: negative inside (the u < a side)."""

    query: np.ndarray
    distance: float
    foot: np.ndarray


def points_in_polygon(points: np.ndarray, curve: Curve) -> np.ndarray:
    """Ray-casting parity test (half-open rule, equivalent to nudging the
    horizontal ray off any vertex it would hit exactly)."""
    q = np.atleast_2d(points)
    a, b = curve.segment_endpoints()
    ay, by = a[:, 1][None, :], b[:, 1][None, :]
    ax, bx = a[:, 0][None, :], b[:, 0][None, :]
    inside = np.empty(q.shape[0], dtype=bool)
    block = max(1, (1 << 22) // a.shape[0])
    for lo in range(0, q.shape[0], block):
        qx = q[lo : lo + block, 0][:, None]
        qy = q[lo : lo + block, 1][:, None]
        straddle = (ay > qy) != (by > qy)
        with np.errstate(divide="ignore", invalid="ignore"):
            xint = ax + (qy - ay) * (bx - ax) / (by - ay)
        hits = straddle & (xint > qx)
        inside[lo : lo + block] = np.sum(hits, axis=1) % 2 == 1
    return inside


def signed_distance(q, c: Curve) -> SignedDistanceResult:
    """Brute-force signed distance; the enclosed side is negative."""
    q = np.asarray(q, dtype=float)
    d, foot, _ = _min_distance_exact(q[None, :], c)
    dist = float(d[0])
    if c.closed and bool(points_in_polygon(q[None, :], c)[0]):
        dist = -dist
    return SignedDistanceResult(query=q, distance=dist, foot=foot[0])


def _sample_polyline(curve: Curve, spacing: float, max_per_segment: int = 16) -> np.ndarray:
    a, b = curve.segment_endpoints()
    lens = np.hypot(*(b - a).T)
    pieces = []
    for i in range(a.shape[0]):
        nseg = int(np.clip(np.ceil(lens[i] / spacing), 1, max_per_segment))
        ts = np.arange(nseg) / nseg
        pieces.append(a[i] + ts[:, None] * (b[i] - a[i]))
    if not curve.closed:
        pieces.append(b[-1][None, :])
    return np.concatenate(pieces)


def hausdorff(a: Curve, b: Curve) -> float:
    """Symmetric Hausdorff distance via dense vertex/segment sampling.

    Sample spacing is half the smaller median segment length of the two
    curves (capped per segment), and sampled points are measured exactly
    against the other polyline's segments, so the result is symmetric by
    construction and accurate to O(spacing^2 * curvature).
    """
    med_a = float(np.median(a.segment_lengths()))
    med_b = float(np.median(b.segment_lengths()))
    spacing = 0.5 * min(med_a, med_b)
    pa = _sample_polyline(a, spacing)
    pb = _sample_polyline(b, spacing)
    d_ab, _, _ = _min_distance_exact(pa, b)
    d_ba, _, _ = _min_distance_exact(pb, a)
    return max(float(d_ab.max()), float(d_ba.max()))


# ---------------------------------------------------------------------------
# validity statistics

def _closed_components(curves: list[Curve], context: str) -> list[Curve]:
    if not curves:
        raise ValueError(f"{context}: the level set is empty")
    open_parts = [c for c in curves if not c.closed]
    if open_parts:
        raise ValueError(
            f"{context}: {len(open_parts)} contour(s) exit the domain; "
            "validity statistics need compact level sets"
        )
    return curves


def layer_error(u: ScalarField, p: LayerProfile, eps: float) -> float:
    """sup over grid nodes of |u(x) - U0(d_eps(x)/eps)|.

    d_eps is the distance to the extracted a-level set, signed by u - a
    (negative where u < a).  Nodes farther than (z_max+1)*eps from the level
    set use the clamped profile tails, so only a band around the interface
    needs exact distances.
    """
    a = p.anchor
    curves = _closed_components(extract_level_set(u, a), "layer_error")
    band = (p.z_max + 1.0) * eps
    far_z = p.z_max + 1.0

    xs, ys = u.xs(), u.ys()
    z = np.full(u.values.shape, far_z)
    lo = np.array([c.points.min(axis=0) for c in curves]).min(axis=0) - band
    hi = np.array([c.points.max(axis=0) for c in curves]).max(axis=0) + band
    isel = np.nonzero((xs >= lo[0]) & (xs <= hi[0]))[0]
    jsel = np.nonzero((ys >= lo[1]) & (ys <= hi[1]))[0]
    if isel.size and jsel.size:
        II, JJ = np.meshgrid(isel, jsel, indexing="ij")
        pts = np.column_stack([xs[II.ravel()], ys[JJ.ravel()]])
        distancer = CurveDistancer(curves, spacing=0.5 * u.h)
        d, _, _ = distancer.query(pts)
        z_band = np.minimum(d / eps, far_z)
        z[II.ravel(), JJ.ravel()] = z_band
    sign = np.where(u.values > a, 1.0, -1.0)
    predicted = p.evaluate(sign * z)
    return float(np.max(np.abs(u.values - predicted)))


@dataclass(frozen=True)
class GraphResult:
    """Outcome of expressing a target curve as a normal graph over a reference.

    ``offsets[i]`` is the signed distance along the outward normal from
    reference vertex i to the unique target intersection; ``ok`` is False
    when any vertex saw zero or multiple intersections (listed in
    ``failures`` as (vertex index, hit count))."""

    ok: bool
    offsets: np.ndarray
    points: np.ndarray
    failures: tuple[tuple[int, int], ...]


def graph_over(reference: Curve, target: Curve, tube: float) -> GraphResult:
    """Intersect outward-normal rays of length +-tube with the target curve.

    Success requires exactly one intersection per reference vertex; the
    returned offsets divided by eps are the layer-shift values theta.
    """
    if tube <= 0:
        raise ValueError("tube must be positive")
    p = reference.points
    n = reference.outward_normals()
    a, b = target.segment_endpoints()
    e = b - a  # (m, 2)

    # Solve p + s*n = a + w*e for each (vertex, segment) pair (Cramer).
    det = e[None, :, 0] * n[:, None, 1] - e[None, :, 1] * n[:, None, 0]
    rhs = a[None, :, :] - p[:, None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        s = (e[None, :, 0] * rhs[:, :, 1] - e[None, :, 1] * rhs[:, :, 0]) / det
        w = (n[:, None, 0] * rhs[:, :, 1] - n[:, None, 1] * rhs[:, :, 0]) / det
    valid = (np.abs(det) > 1e-14) & (w >= 0.0) & (w < 1.0) & (np.abs(s) <= tube)
    counts = valid.sum(axis=1)
    failures = tuple(
        (int(i), int(counts[i])) for i in np.nonzero(counts != 1)[0]
    )
    offsets = np.where(counts == 1, np.where(valid, s, 0.0).sum(axis=1), np.nan)
    return GraphResult(
        ok=len(failures) == 0,
        offsets=offsets,
        points=p,
        failures=failures,
    )


def transversality(u: ScalarField, reference: Curve, tube: float) -> float:
    """Min over tube nodes of grad u . n(foot), n the outward reference normal.

    Central-difference gradients at grid nodes within ``tube`` of the
    reference curve; a positive return certifies the level set is crossed
    transversally (a flipped layer gives a negative value, a constant field
    gives zero information and returns 0).
    """
    if tube <= 0:
        raise ValueError("tube must be positive")
    xs, ys = u.xs(), u.ys()
    lo = reference.points.min(axis=0) - tube
    hi = reference.points.max(axis=0) + tube
    isel = np.nonzero((xs >= lo[0]) & (xs <= hi[0]))[0]
    jsel = np.nonzero((ys >= lo[1]) & (ys <= hi[1]))[0]
    if not (isel.size and jsel.size):
        raise ValueError("no grid nodes inside the tube")
    II, JJ = np.meshgrid(isel, jsel, indexing="ij")
    pts = np.column_stack([xs[II.ravel()], ys[JJ.ravel()]])
    distancer = CurveDistancer(reference, spacing=0.5 * u.h)
    d, _, normals = distancer.query(pts)
    mask = d <= tube
    if not np.any(mask):
        raise ValueError("no grid nodes inside the tube")
    gx, gy = np.gradient(u.values, u.h, edge_order=2)
    gxv = gx[II.ravel(), JJ.ravel()][mask]
    gyv = gy[II.ravel(), JJ.ravel()][mask]
    dots = gxv * normals[mask, 0] + gyv * normals[mask, 1]
    return float(np.min(dots))
