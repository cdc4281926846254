"""Physical quantities read off closed circuits.

Surface arcs give entanglement and mutual information, top-bottom arcs give
the residual entropy and spanning length, probe ancillas give loop
connectivity between space-time points (watermelon and Poisson-Dirichlet
statistics), and closed-loop histograms give bulk length distributions.
Entropies are in bits: every arc leaving a region contributes half a bit.
"""
from __future__ import annotations

import itertools
import math
from typing import Iterable, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from .errors import ArgumentError, FitError
from .lattice import Geometry, LatticeSpec, _A1, _A2
from .loopstate import Closure, ClosureResult, LoopHistogram, SurfaceRecord

AXES = ("x", "y")


def _axis_index(axis: str) -> int:
    if axis not in AXES:
        raise ArgumentError(f"axis must be 'x' or 'y', got {axis!r}")
    return AXES.index(axis)


# ----------------------------------------------------------------------------
# arc geometry


def arc_displacements(rec: SurfaceRecord) -> np.ndarray:
    """Signed minimal-image cell displacement (dx, dy) of every surface arc."""
    spec = rec.spec
    if not rec.n_pairs:
        return np.zeros((0, 2), dtype=np.int64)
    d = spec.cell[rec.pairs[:, 1]] - spec.cell[rec.pairs[:, 0]]
    ext = np.array([spec.L_x, spec.L_y])
    d = (d + ext // 2) % ext - ext // 2
    return d.astype(np.int64)


def surface_lengths(rec: SurfaceRecord, axis: str) -> np.ndarray:
    """Projected surface length min(|l|, L - |l|) of every arc along ``axis``."""
    k = _axis_index(axis)
    ext = rec.spec.extent(axis)
    if not rec.n_pairs:
        return np.zeros(0, dtype=np.int64)
    d = np.abs(rec.spec.cell[rec.pairs[:, 1], k] - rec.spec.cell[rec.pairs[:, 0], k]) % ext
    return np.minimum(d, ext - d).astype(np.int64)


def surface_distribution(rec: SurfaceRecord, axis: str) -> np.ndarray:
    """Normalized distribution of projected surface lengths, indexed 0..L/2.

    An empty record gives an empty array.
    """
    ell = surface_lengths(rec, axis)
    if not len(ell):
        return np.zeros(0)
    counts = np.bincount(ell, minlength=rec.spec.extent(axis) // 2 + 1).astype(float)
    return counts / counts.sum()


def _supercell(spec: LatticeSpec) -> Tuple[np.ndarray, np.ndarray]:
    if spec.geometry is Geometry.CARDY_L3D or spec.geometry is Geometry.CUSTOM:
        return np.array([1.0, 0.0]), np.array([0.0, 1.0])
    return _A1, _A2


def radial_displacements(rec: SurfaceRecord) -> np.ndarray:
    """Euclidean minimal-image distance between the ends of each arc."""
    spec = rec.spec
    if not rec.n_pairs:
        return np.zeros(0)
    a1, a2 = _supercell(spec)
    T = np.stack([spec.L_x * a1, spec.L_y * a2], axis=1)
    d = spec.position[rec.pairs[:, 1]] - spec.position[rec.pairs[:, 0]]
    frac = np.linalg.solve(T, d.T).T
    frac -= np.round(frac)
    best = np.full(len(d), np.inf)
    for i in (-1, 0, 1):
        for j in (-1, 0, 1):
            v = (frac + [i, j]) @ T.T
            best = np.minimum(best, np.hypot(v[:, 0], v[:, 1]))
    return best


def radial_distribution(records: Iterable[SurfaceRecord], r_max: Optional[float] = None, bin_width: float = 1.0):
    """Arc-number density P(r) per unit r pooled over records.

    Returns (bin centers, density, Poisson standard error).
    """
    rs = [radial_displacements(r) for r in records]
    r = np.concatenate(rs) if rs else np.zeros(0)
    if not len(r):
        raise ArgumentError("no arcs to histogram")
    top = r.max() if r_max is None else r_max
    edges = np.arange(0.0, top + bin_width, bin_width)
    counts, _ = np.histogram(r, bins=edges)
    norm = len(r) * bin_width
    centers = 0.5 * (edges[1:] + edges[:-1])
    return centers, counts / norm, np.sqrt(np.maximum(counts, 1)) / norm


# ----------------------------------------------------------------------------
# entanglement


def _in_cylinder(spec: LatticeSpec, axis: str, ell: int, start: int = 0) -> np.ndarray:
    k = _axis_index(axis)
    ext = spec.extent(axis)
    return (spec.cell[:, k] - start) % ext < ell


def region_entropy(rec: SurfaceRecord, region: np.ndarray) -> float:
    """S = (arcs leaving the region + unpaired sites inside) / 2, in bits."""
    mask = np.asarray(region)
    if mask.dtype != np.bool_:
        m = np.zeros(rec.spec.n_sites, dtype=bool)
        m[mask] = True
        mask = m
    crossing = 0
    if rec.n_pairs:
        crossing = int(np.count_nonzero(mask[rec.pairs[:, 0]] != mask[rec.pairs[:, 1]]))
    unpaired = int(np.count_nonzero(mask[rec.unpaired])) if len(rec.unpaired) else 0
    return 0.5 * (crossing + unpaired)


def entanglement_cylinder(rec: SurfaceRecord, axis: str, ell: int, start: int = 0) -> float:
    """Entropy of the cylinder of ``ell`` unit cells along ``axis`` beginning at ``start``."""
    ext = rec.spec.extent(axis)
    if not 0 <= ell <= ext:
        raise ArgumentError(f"ell must lie in [0, {ext}]")
    return region_entropy(rec, _in_cylinder(rec.spec, axis, ell, start))


def entanglement_profile(rec: SurfaceRecord, axis: str) -> np.ndarray:
    """Cylinder entropy averaged over all cut positions, for ell = 0..L.

    An arc of surface length d is cut by 2 min(ell, d, L - ell) of the L
    windows, so the average is (1/L) sum over arcs of min(ell, d, L - ell)
    plus half a bit per unpaired site times the covered fraction.
    """
    ext = rec.spec.extent(axis)
    ell = np.arange(ext + 1)
    d = surface_lengths(rec, axis)
    counts = np.bincount(d, minlength=ext // 2 + 1)
    dvals = np.arange(len(counts))
    cut = np.minimum(np.minimum(ell[:, None], ext - ell[:, None]), dvals[None, :])
    s = (cut * counts[None, :]).sum(axis=1) / ext
    s = s + 0.5 * len(rec.unpaired) * ell / ext
    return s.astype(float)


def entanglement_from_distribution(P: np.ndarray, n_arcs: float, L: int, ell: Sequence[int]) -> np.ndarray:
    """Average cut entropy implied by a surface distribution P(d), d = 0..L/2.

    S(ell) = (n_arcs / L) sum_d min(ell, L - ell, d) P(d); with n_arcs = N/2
    on a honeycomb torus the prefactor is L_y.
    """
    ell = np.asarray(ell)
    d = np.arange(len(P))
    cut = np.minimum(np.minimum(ell[:, None], L - ell[:, None]), d[None, :])
    return n_arcs / L * (cut * np.asarray(P)[None, :]).sum(axis=1)


def chord_length(ell, L: int):
    """Conformal chord distance (L / pi) sin(pi ell / L)."""
    return L / np.pi * np.sin(np.pi * np.asarray(ell, dtype=float) / L)


# ----------------------------------------------------------------------------
# mutual information


def _site_mask(n: int, sites) -> np.ndarray:
    m = np.zeros(n, dtype=bool)
    m[np.asarray(list(sites), dtype=np.int64)] = True
    return m


def mutual_information(rec: SurfaceRecord, A, B) -> int:
    """Number of arcs joining A and B; I2 in half-bits."""
    n = rec.spec.n_sites
    a = _site_mask(n, A)
    b = _site_mask(n, B)
    if np.any(a & b):
        raise ArgumentError("regions overlap")
    if not rec.n_pairs:
        return 0
    u, v = rec.pairs[:, 0], rec.pairs[:, 1]
    return int(np.count_nonzero((a[u] & b[v]) | (b[u] & a[v])))


def tripartite(rec: SurfaceRecord, A, B, C) -> float:
    """I3(A:B:C) assembled from the seven region entropies."""
    n = rec.spec.n_sites
    a, b, c = (_site_mask(n, X) for X in (A, B, C))
    if np.any(a & b) or np.any(a & c) or np.any(b & c):
        raise ArgumentError("regions overlap")
    S = lambda m: region_entropy(rec, m)  # noqa: E731
    return S(a) + S(b) + S(c) - S(a | b) - S(a | c) - S(b | c) + S(a | b | c)


# ----------------------------------------------------------------------------
# spanning arcs


class SpanningStats(NamedTuple):
    n_s: int
    entropy: float
    M: int


def spanning_stats(result: ClosureResult) -> SpanningStats:
    """Spanning number, residual entropy n_s / 2 and summed spanning length."""
    if result.policy is not Closure.MIXED_BOTTOM:
        raise ArgumentError("spanning statistics need the mixed-bottom closure")
    return SpanningStats(result.spanning, 0.5 * result.spanning, result.spanning_length)


# ----------------------------------------------------------------------------
# probes


def probe_components(rec: SurfaceRecord) -> np.ndarray:
    """Loop label of every probe; probes on one loop share a label.

    Probe c owns ancillas 2c and 2c + 1 (the two ends of the severed strand).
    """
    partner = rec.ancilla_partner
    n_probe = len(partner) // 2
    parent = list(range(n_probe))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for k, j in enumerate(partner):
        if j >= 0:
            ra, rb = find(k // 2), find(int(j) // 2)
            if ra != rb:
                parent[max(ra, rb)] = min(ra, rb)
    return np.array([find(c) for c in range(n_probe)], dtype=np.int64)


def probes_connected(rec: SurfaceRecord, probes: Sequence[int]) -> bool:
    labels = probe_components(rec)
    if len(probes) and max(probes) >= len(labels):
        raise ArgumentError("probe index out of range")
    return len({int(labels[p]) for p in probes}) <= 1


def g2_sample(rec: SurfaceRecord, a: int = 0, b: int = 1) -> int:
    """1 if probes a and b lie on one loop (both arcs from a end on b), else 0."""
    if a == b:
        return 1
    return int(probes_connected(rec, (a, b)))


class Estimate(NamedTuple):
    value: float
    stderr: float
    n: int


def _mean(values: Sequence[float]) -> Estimate:
    v = np.asarray(values, dtype=float)
    if not len(v):
        raise ArgumentError("no samples")
    err = float(v.std(ddof=1) / math.sqrt(len(v))) if len(v) > 1 else float("nan")
    return Estimate(float(v.mean()), err, len(v))


def watermelon_G2(records: Iterable[SurfaceRecord], a: int = 0, b: int = 1) -> Estimate:
    """Trajectory average of :func:`g2_sample`."""
    return _mean([g2_sample(r, a, b) for r in records])


class PDRatios(NamedTuple):
    P2: Estimate
    P3: Estimate
    P4: Estimate
    r22_4: float
    r23_32: float
    r22_4_err: float
    r23_32_err: float


def pd_sample(rec: SurfaceRecord, n_probes: int = 4) -> Tuple[float, float, float]:
    """Per-trajectory P2, P3, P4 averaged over all probe pairs, triples, quadruples."""
    labels = probe_components(rec)
    if len(labels) < n_probes or n_probes < 4:
        raise ArgumentError("the ratio scheme needs four probes")
    labels = labels[:n_probes]
    out = []
    for m in (2, 3, 4):
        subsets = list(itertools.combinations(range(n_probes), m))
        out.append(sum(len(set(labels[list(s)])) == 1 for s in subsets) / len(subsets))
    return out[0], out[1], out[2]


def pd_ratios(samples: Sequence[Tuple[float, float, float]]) -> PDRatios:
    """Ratios P2^2/P4 and P2^3/P3^2 with delta-method errors.

    ``samples`` holds per-trajectory (P2, P3, P4) from :func:`pd_sample`.
    """
    arr = np.asarray(samples, dtype=float).reshape(-1, 3)
    if len(arr) < 2:
        raise ArgumentError("need at least two samples")
    n = len(arr)
    mu = arr.mean(axis=0)
    if mu[1] <= 0 or mu[2] <= 0:
        raise FitError("no connected triples or quadruples were observed")
    cov = np.cov(arr, rowvar=False) / n
    p2, p3, p4 = mu
    r1 = p2 * p2 / p4
    r2 = p2**3 / (p3 * p3)
    g1 = np.array([2 * p2 / p4, 0.0, -p2 * p2 / p4**2])
    g2 = np.array([3 * p2 * p2 / p3**2, -2 * p2**3 / p3**3, 0.0])
    err = np.sqrt(np.diag(cov))
    return PDRatios(
        Estimate(p2, err[0], n),
        Estimate(p3, err[1], n),
        Estimate(p4, err[2], n),
        float(r1),
        float(r2),
        float(math.sqrt(max(g1 @ cov @ g1, 0.0))),
        float(math.sqrt(max(g2 @ cov @ g2, 0.0))),
    )


# ----------------------------------------------------------------------------
# bulk quantities


class DiffusionFit(NamedTuple):
    D: float
    D_err: float
    amplitude: float
    chi2_r: float
    poor_fit: bool


def fit_diffusion(
    r: np.ndarray,
    P: np.ndarray,
    sigma: Optional[np.ndarray] = None,
    window: Optional[Tuple[float, float]] = None,
    projected: bool = False,
    chi2_limit: float = 3.0,
    L: Optional[int] = None,
) -> DiffusionFit:
    """Fit P(r) = A / r^2 and convert the amplitude to a diffusion constant.

    Radial data: A = sqrt(2 D).  Axis-projected data (``projected``):
    A = 2 sqrt(2 D) / pi.  ``poor_fit`` flags chi^2_r above ``chi2_limit``.
    The default window is [4, L/8] when ``L`` is given, else [4, max r].
    """
    r = np.asarray(r, dtype=float)
    P = np.asarray(P, dtype=float)
    s = np.ones_like(P) if sigma is None else np.asarray(sigma, dtype=float)
    if window is None:
        window = (4.0, L / 8.0) if L is not None else (4.0, float(r.max()))
    lo, hi = window
    sel = (r >= lo) & (r <= hi) & (s > 0)
    if sel.sum() < 3:
        raise ArgumentError("fewer than three points inside the fit window")
    x = 1.0 / r[sel] ** 2
    w = 1.0 / s[sel] ** 2
    A = float(np.sum(w * x * P[sel]) / np.sum(w * x * x))
    A_err = float(1.0 / math.sqrt(np.sum(w * x * x)))
    chi2 = float(np.sum(w * (P[sel] - A * x) ** 2))
    dof = max(int(sel.sum()) - 1, 1)
    chi2_r = chi2 / dof
    scale = math.pi / 2.0 if projected else 1.0
    root = A * scale
    D = root * root / 2.0
    D_err = abs(root) * scale * A_err
    if sigma is None:
        chi2_r = float("nan")
        poor = False
    else:
        poor = chi2_r > chi2_limit
    return DiffusionFit(D, D_err, A, chi2_r, poor)


def occupied_fraction(closed: LoopHistogram, n_ops: int) -> float:
    """Fraction of space-time links lying on loops that closed inside the bulk.

    ``closed`` is the histogram of a block before any temporal closure and
    ``n_ops`` its number of length-carrying operations (two links each).
    """
    if n_ops <= 0:
        return 0.0
    return closed.total_length / (2.0 * n_ops)
