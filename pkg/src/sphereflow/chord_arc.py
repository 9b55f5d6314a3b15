"""Chord-arc profile of a discrete curve and the gap to the comparison profile.

For vertices x, y at shorter-arc separation ell, the profile records the
minimum Euclidean chord d at each normalised separation z = ell/L in
(0, 1/2]. The auxiliary gap

    Z(x, y) = d(x, y) - L * phi(ell/L; a_eff)

measures clearance above the comparison profile; its minimum over vertex
pairs (cyclic index distance >= 2, where the polygon chord stops degenerating
to the arc) is the quantity the flow is supposed to keep nonnegative.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import barrier
from .errors import InsufficientData, NotAdmissible, PreconditionViolation
from .sphere_geometry import DiscreteCurve

ADMISSIBLE_A_CAP = 1e6


@dataclass(frozen=True)
class ChordArcProfile:
    """Binned minimum chord per normalised arclength bin over (0, 1/2].

    psi is NaN on empty bins (reported, never fatal); pair_i/pair_j give the
    vertex pair achieving each bin minimum and pair_z its exact separation.
    """

    z_centers: np.ndarray
    psi: np.ndarray
    pair_i: np.ndarray
    pair_j: np.ndarray
    pair_z: np.ndarray
    L: float
    mean_spacing: float

    @property
    def n_bins(self) -> int:
        return self.z_centers.size

    @property
    def empty_bins(self) -> np.ndarray:
        return np.isnan(self.psi)


@dataclass(frozen=True)
class ZReport:
    """Minimum of the gap Z over admissible vertex pairs."""

    min_value: float
    pair: tuple[int, int]
    a_eff: float


def _pair_data(curve: DiscreteCurve):
    """(i, j, d, z) over all vertex pairs i < j."""
    p = curve.points
    n = curve.n
    gram = p @ p.T
    ii, jj = np.triu_indices(n, k=1)
    d = np.sqrt(np.clip(2.0 - 2.0 * gram[ii, jj], 0.0, 4.0))
    s = curve.cum_lengths
    arc = s[jj] - s[ii]
    length = curve.length
    ell = np.minimum(arc, length - arc)
    return ii, jj, d, ell / length


def profile(curve: DiscreteCurve, n_bins: int) -> ChordArcProfile:
    """Exact pairwise minimum chord per z-bin, bins (k/2m, (k+1)/2m]."""
    if n_bins < 16:
        raise PreconditionViolation(f"need at least 16 bins, got {n_bins}")
    ii, jj, d, z = _pair_data(curve)
    edges = np.linspace(0.0, 0.5, n_bins + 1)
    idx = np.searchsorted(edges, z, side="left") - 1
    keep = (idx >= 0) & (idx < n_bins)
    ii, jj, d, z, idx = ii[keep], jj[keep], d[keep], z[keep], idx[keep]

    psi = np.full(n_bins, np.nan)
    pair_i = np.full(n_bins, -1, dtype=int)
    pair_j = np.full(n_bins, -1, dtype=int)
    pair_z = np.full(n_bins, np.nan)

    order = np.lexsort((d, idx))
    bins_sorted = idx[order]
    first = np.concatenate(([True], bins_sorted[1:] != bins_sorted[:-1]))
    sel = order[first]
    psi[idx[sel]] = d[sel]
    pair_i[idx[sel]] = ii[sel]
    pair_j[idx[sel]] = jj[sel]
    pair_z[idx[sel]] = z[sel]

    centers = 0.5 * (edges[:-1] + edges[1:])
    for arr in (psi, pair_i, pair_j, pair_z, centers):
        arr.flags.writeable = False
    return ChordArcProfile(z_centers=centers, psi=psi, pair_i=pair_i, pair_j=pair_j,
                           pair_z=pair_z, L=curve.length,
                           mean_spacing=curve.length / curve.n)


def _gap_minimiser(curve: DiscreteCurve):
    """Precompute pair data for repeated min-Z evaluations on one curve."""
    ii, jj, d, z = _pair_data(curve)
    n = curve.n
    gap = jj - ii
    keep = (gap >= 2) & (gap <= n - 2)
    ii, jj, d, z = ii[keep], jj[keep], d[keep], z[keep]
    c = np.sin(np.pi * z) / np.pi
    length = curve.length

    def evaluate(a_eff: float):
        prof = c if a_eff == 0.0 else np.arctan(a_eff * c) / a_eff
        gaps = d - length * prof
        k = int(np.argmin(gaps))
        return float(gaps[k]), (int(ii[k]), int(jj[k]))

    return evaluate


def min_Z(curve: DiscreteCurve, params: barrier.BarrierParams) -> ZReport:
    """Minimum gap d - L*phi(ell/L; a_eff) over pairs at cyclic distance >= 2."""
    a_eff = params.a_eff
    value, pair = _gap_minimiser(curve)(a_eff)
    return ZReport(min_value=value, pair=pair, a_eff=a_eff)


def admissible_a(curve: DiscreteCurve, tol: float = 1e-3) -> float:
    """Smallest a >= 0 (to relative tol) with min_Z(curve, (a, 0)) >= 0.

    min_Z is nondecreasing in a (phi is strictly decreasing in a), so plain
    bisection applies after geometric bracket expansion. Raises
    NotAdmissible if even a = 1e6 fails, which at discrete resolution
    signals a curve too close to self-touching.
    """
    evaluate = _gap_minimiser(curve)
    if evaluate(0.0)[0] >= 0.0:
        return 0.0
    hi = 1.0
    while evaluate(hi)[0] < 0.0:
        hi *= 2.0
        if hi > ADMISSIBLE_A_CAP:
            raise NotAdmissible(
                f"no admissible barrier parameter up to {ADMISSIBLE_A_CAP:.0e}")
    lo = hi / 2.0 if hi > 1.0 else 0.0
    while hi - lo > tol * hi:
        mid = 0.5 * (lo + hi)
        if evaluate(mid)[0] >= 0.0:
            hi = mid
        else:
            lo = mid
    return hi


def cubic_fit(prof: ChordArcProfile, min_spacings: float = 16.0) -> float:
    """Least-squares cubic coefficient of the small-separation profile.

    Fits psi(ell) = ell - c*ell^3 over (roughly) the smallest decade of ell
    and returns c, the quantity to compare with (max kappa^2 + 1)/24. Bins
    closer to the diagonal than ~16 mean vertex spacings are skipped: there
    the polygon chord equals the polygon arc by construction (exactly, for
    adjacent vertices) and would bias c towards zero. The window is capped
    at z = 1/4 to keep the neglected ell^5 term small.
    """
    valid = ~prof.empty_bins
    if int(np.count_nonzero(valid)) < 8:
        raise InsufficientData("profile has fewer than 8 nonempty bins")
    ell = prof.pair_z[valid] * prof.L
    psi = prof.psi[valid]
    lo = max(float(np.min(ell)), min_spacings * prof.mean_spacing)
    hi = min(10.0 * lo, 0.25 * prof.L)
    sel = (ell >= lo) & (ell <= hi)
    if int(np.count_nonzero(sel)) < 8:
        raise InsufficientData(
            f"only {int(np.count_nonzero(sel))} bins in the fit window [{lo:.3g}, {hi:.3g}]")
    x = ell[sel]
    y = psi[sel]
    return float(np.sum(x ** 3 * (x - y)) / np.sum(x ** 6))
