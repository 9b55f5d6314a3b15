"""Discrete closed curves on the unit sphere and their pointwise geometry.

A curve is a cyclic polygon whose vertices sit on S^2 (unit vectors in R^3).
Segment "arclength" is chordal polygon length; for vertices on a smooth
curve this underestimates the true arclength by O(ds^2) relative, which all
downstream tolerances absorb.

Frame convention: with unit tangent T and position gamma, the unit normal N
is fixed by gamma = N x T, so that gamma_ss = -kappa*N - gamma and the
signed geodesic curvature is kappa = -<gamma_ss + gamma, N>. The space
curvature then satisfies kappa_bar^2 = 1 + kappa^2 by construction.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import CoincidentPoints, DegenerateSegment, TooFewVertices

ON_SPHERE_TOL = 1e-12
MIN_VERTICES = 8


def _unit_rows(points: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(points, axis=1, keepdims=True)
    if np.any(norms == 0.0) or not np.all(np.isfinite(norms)):
        raise DegenerateSegment("zero or non-finite vertex cannot be projected to the sphere")
    # leave already-unit rows untouched so ingest/serialise round-trips are
    # bitwise stable (dividing by 1 +/- 1 ulp would still flip low bits)
    needs = np.abs(norms - 1.0) > 1e-13
    return np.where(needs, points / norms, points)


@dataclass(frozen=True)
class DiscreteCurve:
    """Closed polygonal curve with vertices on the unit sphere.

    points has shape (n, 3); row i+1 follows row i, and the last row
    connects back to the first (the closing vertex is not repeated).
    """

    points: np.ndarray

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @cached_property
    def seg_lengths(self) -> np.ndarray:
        """ds_i = |p_{i+1} - p_i| with cyclic wrap, shape (n,)."""
        diffs = np.roll(self.points, -1, axis=0) - self.points
        return np.linalg.norm(diffs, axis=1)

    @cached_property
    def cum_lengths(self) -> np.ndarray:
        """Cumulative arclength S_0 = 0, ..., S_n = L, shape (n+1,)."""
        out = np.empty(self.n + 1)
        out[0] = 0.0
        np.cumsum(self.seg_lengths, out=out[1:])
        return out

    @property
    def length(self) -> float:
        return float(self.cum_lengths[-1])

    @cached_property
    def vertex_weights(self) -> np.ndarray:
        """Trapezoidal quadrature weight per vertex: (ds_{i-1} + ds_i)/2."""
        ds = self.seg_lengths
        return 0.5 * (np.roll(ds, 1) + ds)


@dataclass(frozen=True)
class FrameField:
    """Per-vertex tangent/normal frame and curvatures of a DiscreteCurve."""

    tangent: np.ndarray      # (n, 3) unit, orthogonal to the position vector
    normal: np.ndarray       # (n, 3) unit, gamma = N x T
    kappa: np.ndarray        # (n,) signed geodesic curvature
    kappa_bar: np.ndarray    # (n,) space curvature, sqrt(1 + kappa^2)
    ds: np.ndarray           # (n,) segment lengths ds_i = |p_{i+1} - p_i|


@dataclass(frozen=True)
class ChordData:
    """Chord between two curve vertices.

    d is the Euclidean chordlength, rho the spherical (great-circle)
    distance, w = (x - y)/|x - y| the unit chord direction, and ell the
    shorter-arc polygon length between the vertices.
    """

    d: float
    rho: float
    w: np.ndarray
    ell: float


def make_curve(points) -> DiscreteCurve:
    """Build a DiscreteCurve, projecting every vertex onto the unit sphere.

    Raises TooFewVertices for n < 8 and DegenerateSegment if consecutive
    vertices coincide after projection.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise DegenerateSegment(f"expected (n, 3) vertex array, got shape {pts.shape}")
    if pts.shape[0] < MIN_VERTICES:
        raise TooFewVertices(f"need at least {MIN_VERTICES} vertices, got {pts.shape[0]}")
    pts = _unit_rows(pts)
    gaps = np.linalg.norm(np.roll(pts, -1, axis=0) - pts, axis=1)
    if np.any(gaps < 1e-14):
        bad = int(np.argmin(gaps))
        raise DegenerateSegment(f"vertices {bad} and {(bad + 1) % pts.shape[0]} coincide")
    pts = pts.copy()
    pts.flags.writeable = False
    return DiscreteCurve(points=pts)


def frame_field(curve: DiscreteCurve) -> FrameField:
    """Tangent, normal and curvature estimates from centered differences.

    The tangent is the centered arclength difference projected onto the
    sphere's tangent plane; the normal follows the gamma = N x T
    orientation; kappa comes from the N-component of gamma_ss + gamma.
    Second order accurate on smoothly-spaced vertices, exact on uniformly
    sampled circles.
    """
    p = curve.points
    ds = curve.seg_lengths
    p_next = np.roll(p, -1, axis=0)
    p_prev = np.roll(p, 1, axis=0)
    ds_prev = np.roll(ds, 1)

    t_raw = p_next - p_prev
    t_raw = t_raw - np.sum(t_raw * p, axis=1, keepdims=True) * p
    t_norm = np.linalg.norm(t_raw, axis=1, keepdims=True)
    if np.any(t_norm < 1e-14):
        raise DegenerateSegment("tangent stencil collapsed (coincident neighbours)")
    tangent = t_raw / t_norm

    normal = np.cross(tangent, p)

    # 3-point second derivative on nonuniform spacing, then add gamma.
    inv = 2.0 / (ds_prev + ds)
    gamma_ss = (inv[:, None]) * ((p_next - p) / ds[:, None] - (p - p_prev) / ds_prev[:, None])
    kappa = -np.sum((gamma_ss + p) * normal, axis=1)
    kappa_bar = np.sqrt(1.0 + kappa * kappa)

    for arr in (tangent, normal, kappa, kappa_bar):
        arr.flags.writeable = False
    return FrameField(tangent=tangent, normal=normal, kappa=kappa, kappa_bar=kappa_bar, ds=ds)


def chord_data(curve: DiscreteCurve, i: int, j: int) -> ChordData:
    """Chord between vertices i and j (i != j)."""
    n = curve.n
    i %= n
    j %= n
    if i == j:
        raise CoincidentPoints("chord endpoints must be distinct vertices")
    x = curve.points[i]
    y = curve.points[j]
    diff = x - y
    d = float(np.linalg.norm(diff))
    if d < 1e-14:
        raise CoincidentPoints(f"vertices {i} and {j} coincide (d={d:.3e})")
    rho = float(np.arccos(np.clip(np.dot(x, y), -1.0, 1.0)))
    w = diff / d
    s = curve.cum_lengths
    arc = abs(float(s[j] - s[i]))
    ell = min(arc, curve.length - arc)
    w = w.copy()
    w.flags.writeable = False
    return ChordData(d=d, rho=rho, w=w, ell=ell)


def reparametrize_uniform(curve: DiscreteCurve, n_out: int) -> DiscreteCurve:
    """Resample to n_out vertices at equal polygon-arclength spacing.

    New vertices are linearly interpolated along the polygon (anchored at
    vertex 0) and re-projected onto the sphere. Projection perturbs the
    spacing at O(ds^2), so the resample iterates to its fixed point.
    Idempotent on already uniform curves; length is preserved to O(n^-2).
    """
    out_curve = curve
    for _ in range(10):
        ds = out_curve.seg_lengths
        if out_curve.n == n_out and (ds.max() - ds.min()) <= 1e-12 * ds.mean():
            return out_curve
        s = out_curve.cum_lengths
        closed = np.vstack([out_curve.points, out_curve.points[:1]])
        targets = np.arange(n_out) * (out_curve.length / n_out)
        pts = np.empty((n_out, 3))
        for k in range(3):
            pts[:, k] = np.interp(targets, s, closed[:, k])
        out_curve = make_curve(pts)
    return out_curve


def _arc_intersections(a, b, c, d) -> np.ndarray:
    """Whether minor great-circle arcs (a->b) and (c->d) intersect, rowwise."""
    n1 = np.cross(a, b)
    n2 = np.cross(c, d)
    g = np.cross(n1, n2)
    gn = np.linalg.norm(g, axis=1)
    scale = np.linalg.norm(n1, axis=1) * np.linalg.norm(n2, axis=1)
    generic = gn > 1e-12 * np.maximum(scale, 1e-300)

    hit = np.zeros(a.shape[0], dtype=bool)

    if np.any(generic):
        t = g[generic] / gn[generic, None]
        for cand in (t, -t):
            on1 = (np.sum(np.cross(a[generic], cand) * n1[generic], axis=1) >= -1e-15) & (
                np.sum(np.cross(cand, b[generic]) * n1[generic], axis=1) >= -1e-15
            )
            on2 = (np.sum(np.cross(c[generic], cand) * n2[generic], axis=1) >= -1e-15) & (
                np.sum(np.cross(cand, d[generic]) * n2[generic], axis=1) >= -1e-15
            )
            hit[generic] |= on1 & on2

    # Coplanar arcs: conservatively flag if any endpoint lies on the other arc.
    cop = ~generic
    if np.any(cop):
        for p, seg_a, seg_b, nrm in (
            (c, a, b, n1), (d, a, b, n1), (a, c, d, n2), (b, c, d, n2),
        ):
            inplane = np.abs(np.sum(p[cop] * nrm[cop], axis=1)) < 1e-10
            between = (np.sum(np.cross(seg_a[cop], p[cop]) * nrm[cop], axis=1) >= -1e-15) & (
                np.sum(np.cross(p[cop], seg_b[cop]) * nrm[cop], axis=1) >= -1e-15
            )
            hit[cop] |= inplane & between
    return hit


def validate_simple(curve: DiscreteCurve) -> bool:
    """True iff no two non-adjacent segments (as minor great arcs) intersect.

    All-pairs test with a midpoint-distance prefilter; adjacent segments
    (sharing a vertex) are skipped.
    """
    p = curve.points
    n = curve.n
    q = np.roll(p, -1, axis=0)
    mids = 0.5 * (p + q)
    ds = curve.seg_lengths

    # Pairs closer than the sum of half-lengths (plus slack) can intersect.
    d2 = np.sum((mids[:, None, :] - mids[None, :, :]) ** 2, axis=2)
    reach = 0.5 * (ds[:, None] + ds[None, :]) + 1e-9
    ii, jj = np.nonzero(d2 <= reach * reach)
    keep = ii < jj
    ii, jj = ii[keep], jj[keep]
    gap = jj - ii
    nonadj = (gap >= 2) & (gap <= n - 2)
    ii, jj = ii[nonadj], jj[nonadj]
    if ii.size == 0:
        return True
    hits = _arc_intersections(p[ii], q[ii], p[jj], q[jj])
    return not bool(np.any(hits))


def orthonormal_basis(axis) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Right-handed orthonormal (e1, e2, e3) with e3 along axis, deterministic."""
    e3 = np.asarray(axis, dtype=float)
    norm = np.linalg.norm(e3)
    if norm < 1e-14:
        raise DegenerateSegment("axis must be a nonzero vector")
    e3 = e3 / norm
    helper = np.zeros(3)
    helper[int(np.argmin(np.abs(e3)))] = 1.0
    e1 = np.cross(e3, helper)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(e3, e1)
    return e1, e2, e3


def curvature_sq_integral(curve: DiscreteCurve, frame: FrameField | None = None) -> float:
    """Trapezoidal integral of kappa^2 ds over the closed curve."""
    if frame is None:
        frame = frame_field(curve)
    return float(np.sum(frame.kappa ** 2 * curve.vertex_weights))


def total_space_curvature(curve: DiscreteCurve, frame: FrameField | None = None) -> float:
    """Integral of |kappa_bar| ds, with per-segment chord-to-arc correction.

    Plain chordal quadrature underestimates by ~2*pi*(pi^2/6)/n^2, which at
    coarse n exceeds the tolerance of the total-curvature (Fenchel) check;
    replacing each chord ds by (2/kb)*arcsin(kb*ds/2) is exact on circles.
    """
    if frame is None:
        frame = frame_field(curve)
    kb = frame.kappa_bar
    ds = curve.seg_lengths
    kb_seg = 0.5 * (kb + np.roll(kb, -1))
    half = np.clip(0.5 * kb_seg * ds, 0.0, 1.0)
    ds_arc = np.where(kb_seg > 0, 2.0 * np.arcsin(half) / np.maximum(kb_seg, 1e-300), ds)
    return float(np.sum(0.5 * (kb + np.roll(kb, -1)) * ds_arc))
