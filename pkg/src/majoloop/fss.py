"""Finite-size scaling fits.

``collapse_fit`` finds (K_c, nu, ...) such that data from several sizes fall
on one cubic B-spline f(x) with x = L^{1/nu}(K - K_c)(1 + alpha (K - K_c)).
For fixed outer parameters the spline coefficients follow from a weighted
linear least-squares solve, so the outer search only sees a handful of
parameters.  Uncertainties are read off the chi^2 = chi^2_min + 4 contour.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import optimize
from scipy.interpolate import BSpline

from . import theory
from .errors import ArgumentError, FitError
from .loopstate import LoopHistogram

DELTA_CHI2 = 4.0


@dataclass(frozen=True)
class SamplePoint:
    L: int
    K: float
    y: float
    sigma: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise ArgumentError(f"sigma must be positive, got {self.sigma!r}")


@dataclass(frozen=True)
class SplineConfig:
    """Knot layout for the scaling function.

    ``paper`` puts knots every 0.1 on [-0.5, 1.5] and every 1 on [2, 5],
    keeping those inside the data range; ``uniform`` spreads ``n_knots``
    interior knots evenly.  ``paper`` falls back to ``uniform`` when fewer
    than ``min_interior`` of its knots fall inside the data.
    """

    mode: str = "uniform"
    n_knots: int = 6
    degree: int = 3
    min_interior: int = 3

    def interior(self, lo: float, hi: float) -> np.ndarray:
        if self.mode == "paper":
            layout = np.concatenate([np.round(np.arange(-0.5, 1.5001, 0.1), 10), np.arange(2.0, 5.001, 1.0)])
            inner = layout[(layout > lo) & (layout < hi)]
            if len(inner) >= self.min_interior:
                return inner
        elif self.mode != "uniform":
            raise ArgumentError(f"unknown knot mode {self.mode!r}")
        return np.linspace(lo, hi, self.n_knots + 2)[1:-1]

    def doubled(self) -> "SplineConfig":
        return SplineConfig("uniform", 2 * self.n_knots + 1, self.degree, self.min_interior)


@dataclass
class ScalingFit:
    params: Dict[str, float]
    errors: Dict[str, float]
    chi2: float
    dof: int
    knots: np.ndarray
    coefficients: np.ndarray
    n_points: int
    model: str = "linear"
    warnings: List[str] = field(default_factory=list)

    @property
    def chi2_r(self) -> float:
        return self.chi2 / max(self.dof, 1)

    def __getattr__(self, name):
        params = self.__dict__.get("params", {})
        if name in params:
            return params[name]
        raise AttributeError(name)

    @property
    def K_c(self) -> float:
        return self.params.get("K_c", float("nan"))

    @property
    def nu(self) -> float:
        return self.params.get("nu", float("nan"))

    def scaling_function(self) -> BSpline:
        return BSpline(self.knots, self.coefficients, 3, extrapolate=True)


# ----------------------------------------------------------------------------
# inner linear solve


def _design(x: np.ndarray, cfg: SplineConfig) -> Tuple[np.ndarray, np.ndarray]:
    lo, hi = float(x.min()), float(x.max())
    if not hi > lo:
        raise FitError("scaling variable collapsed to a point")
    pad = 1e-9 * (hi - lo)
    lo, hi = lo - pad, hi + pad
    k = cfg.degree
    t = np.concatenate([[lo] * (k + 1), cfg.interior(lo, hi), [hi] * (k + 1)])
    B = BSpline.design_matrix(x, t, k).toarray()
    return B, t


def _spline_chi2(x, y, s, amp, cfg: SplineConfig):
    """Best spline through (x, y / amp) in the chi^2 sense; returns (chi2, knots, coef, rank_ok)."""
    B, t = _design(x, cfg)
    A = (B * amp[:, None]) / s[:, None]
    rhs = y / s
    coef, _, rank, _ = np.linalg.lstsq(A, rhs, rcond=None)
    r = A @ coef - rhs
    return float(r @ r), t, coef, rank == A.shape[1]


# ----------------------------------------------------------------------------
# generic collapse


@dataclass(frozen=True)
class _Problem:
    L: np.ndarray
    K: np.ndarray
    y: np.ndarray
    s: np.ndarray
    names: Tuple[str, ...]
    fixed: Dict[str, float]
    transform: Callable  # (params dict, L, K, y, s) -> (x, y', s', amp)
    cfg: SplineConfig

    def chi2(self, vec: Sequence[float], detail: bool = False):
        p = dict(self.fixed)
        p.update(zip(self.names, vec))
        if "nu" in p and not p["nu"] > 0.05:
            return (np.inf, None, None, True) if detail else np.inf
        try:
            x, y, s, amp = self.transform(p, self.L, self.K, self.y, self.s)
            out = _spline_chi2(x, y, s, amp, self.cfg)
        except (FitError, ValueError, FloatingPointError):
            return (np.inf, None, None, True) if detail else np.inf
        if not np.isfinite(out[0]):
            return (np.inf, None, None, True) if detail else np.inf
        return out if detail else out[0]


def _scaling_x(p, L, K):
    d = K - p["K_c"]
    x = L ** (1.0 / p["nu"]) * d
    if "alpha" in p:
        x = x * (1.0 + p["alpha"] * d)
    return x


def _standard_transform(p, L, K, y, s):
    amp = np.ones_like(y)
    if "beta_irr" in p:
        amp = 1.0 + p["beta_irr"] * L ** p["y_irr"]
    return _scaling_x(p, L, K), y, s, amp


def _arrays(data: Sequence[SamplePoint]):
    pts = sorted(data, key=lambda d: (d.L, d.K, d.y, d.sigma))
    L = np.array([d.L for d in pts], dtype=float)
    K = np.array([d.K for d in pts], dtype=float)
    y = np.array([d.y for d in pts], dtype=float)
    s = np.array([d.sigma for d in pts], dtype=float)
    return L, K, y, s


def _contour_errors(prob: _Problem, best: np.ndarray, chi_min: float, scales: np.ndarray) -> Dict[str, float]:
    """Half-widths of the chi^2_min + 4 contour, from a local quadratic model.

    Falls back to one-dimensional bracketing along each axis when the
    numerical Hessian is not positive definite.
    """
    n = len(best)
    h = scales * 1e-2
    H = np.zeros((n, n))
    f0 = chi_min
    for i in range(n):
        for j in range(i, n):
            if i == j:
                e = np.zeros(n)
                e[i] = h[i]
                fp, fm = prob.chi2(best + e), prob.chi2(best - e)
                H[i, i] = (fp - 2 * f0 + fm) / h[i] ** 2
            else:
                ei = np.zeros(n)
                ej = np.zeros(n)
                ei[i] = h[i]
                ej[j] = h[j]
                fpp = prob.chi2(best + ei + ej)
                fpm = prob.chi2(best + ei - ej)
                fmp = prob.chi2(best - ei + ej)
                fmm = prob.chi2(best - ei - ej)
                H[i, j] = H[j, i] = (fpp - fpm - fmp + fmm) / (4 * h[i] * h[j])
    out = {}
    try:
        if not np.all(np.isfinite(H)):
            raise np.linalg.LinAlgError
        cov = np.linalg.inv(H)
        if np.any(np.diag(cov) <= 0):
            raise np.linalg.LinAlgError
        for i, name in enumerate(prob.names):
            out[name] = math.sqrt(2.0 * DELTA_CHI2 * cov[i, i])
        return out
    except np.linalg.LinAlgError:
        pass
    for i, name in enumerate(prob.names):
        widths = []
        for sign in (1.0, -1.0):
            step = scales[i] * 1e-2
            e = np.zeros(n)
            while step < scales[i] * 1e3:
                e[i] = sign * step
                if prob.chi2(best + e) > chi_min + DELTA_CHI2:
                    break
                step *= 2.0
            lo, hi = 0.0, step
            for _ in range(40):
                mid = 0.5 * (lo + hi)
                e[i] = sign * mid
                if prob.chi2(best + e) > chi_min + DELTA_CHI2:
                    hi = mid
                else:
                    lo = mid
            widths.append(0.5 * (lo + hi))
        out[name] = 0.5 * sum(widths)
    return out


def _minimize(prob: _Problem, start: Dict[str, float], grid: Optional[Dict[str, np.ndarray]] = None):
    names = prob.names
    x0 = np.array([start[n] for n in names], dtype=float)
    if grid:
        axes = [grid.get(n, np.array([start[n]])) for n in names]
        best, best_v = x0, prob.chi2(x0)
        for combo in np.array(np.meshgrid(*axes, indexing="ij")).reshape(len(names), -1).T:
            v = prob.chi2(combo)
            if v < best_v:
                best, best_v = combo, v
        x0 = best
    scales = np.array([max(abs(v) * 0.05, 0.01) for v in x0])
    simplex = np.vstack([x0] + [x0 + np.eye(len(x0))[i] * scales[i] for i in range(len(x0))])
    res = optimize.minimize(
        prob.chi2,
        x0,
        method="Nelder-Mead",
        options={"initial_simplex": simplex, "xatol": 1e-7, "fatol": 1e-8, "maxiter": 4000, "maxfev": 8000},
    )
    # one restart from the optimum shakes off premature simplex collapse
    simplex = np.vstack([res.x] + [res.x + np.eye(len(x0))[i] * scales[i] * 0.2 for i in range(len(x0))])
    res2 = optimize.minimize(
        prob.chi2,
        res.x,
        method="Nelder-Mead",
        options={"initial_simplex": simplex, "xatol": 1e-8, "fatol": 1e-9, "maxiter": 4000, "maxfev": 8000},
    )
    if res2.fun <= res.fun:
        res = res2
    if not np.isfinite(res.fun):
        raise FitError("collapse fit did not find a finite chi^2")
    return res, scales


def _run(prob: _Problem, start, grid, model, n_params_outer) -> ScalingFit:
    res, scales = _minimize(prob, start, grid)
    chi2, knots, coef, rank_ok = prob.chi2(res.x, detail=True)
    notes = []
    if not rank_ok:
        smaller = SplineConfig("uniform", max(1, prob.cfg.n_knots // 2), prob.cfg.degree, prob.cfg.min_interior)
        warnings.warn("spline system is rank deficient; refitting with fewer knots", RuntimeWarning, stacklevel=3)
        notes.append("refit with fewer knots")
        prob = _Problem(prob.L, prob.K, prob.y, prob.s, prob.names, prob.fixed, prob.transform, smaller)
        res, scales = _minimize(prob, dict(zip(prob.names, res.x)), None)
        chi2, knots, coef, rank_ok = prob.chi2(res.x, detail=True)
    if not res.success:
        notes.append(f"optimizer: {res.message}")
    errors = _contour_errors(prob, res.x, chi2, np.maximum(np.abs(res.x) * 0.05, 0.01))
    params = dict(prob.fixed)
    params.update(zip(prob.names, map(float, res.x)))
    dof = len(prob.y) - len(coef) - n_params_outer
    return ScalingFit(params, errors, float(chi2), int(dof), knots, coef, len(prob.y), model, notes)


MODELS = ("linear", "nonlinear", "with_irrelevant")


def collapse_fit(
    data: Sequence[SamplePoint],
    model: str = "linear",
    window: Optional[Tuple[float, float]] = None,
    spline: Optional[SplineConfig] = None,
    start: Optional[Dict[str, float]] = None,
    grid: Optional[Dict[str, np.ndarray]] = None,
    fixed: Optional[Dict[str, float]] = None,
) -> ScalingFit:
    """Collapse y(L, K) onto f(L^{1/nu}(K - K_c)(1 + alpha (K - K_c))).

    ``model`` is ``linear`` (alpha = 0), ``nonlinear`` (alpha free) or
    ``with_irrelevant`` (alpha free and an amplitude factor
    1 + beta_irr L^{y_irr}).  ``window`` restricts K.  ``fixed`` pins
    parameters by name.
    """
    if model not in MODELS:
        raise ArgumentError(f"model must be one of {MODELS}")
    pts = list(data)
    if window is not None:
        pts = [d for d in pts if window[0] <= d.K <= window[1]]
    if len({d.L for d in pts}) < 3:
        raise ArgumentError("need at least three distinct sizes")
    L, K, y, s = _arrays(pts)
    start = dict(start or {})
    start.setdefault("K_c", float(np.median(K)))
    start.setdefault("nu", 1.0)
    names = ["K_c", "nu"]
    if model in ("nonlinear", "with_irrelevant"):
        start.setdefault("alpha", 0.0)
        names.append("alpha")
    if model == "with_irrelevant":
        start.setdefault("beta_irr", 0.0)
        start.setdefault("y_irr", -1.0)
        names += ["beta_irr", "y_irr"]
    fixed = dict(fixed or {})
    names = [n for n in names if n not in fixed]
    if grid is None:
        grid = {
            "K_c": np.linspace(K.min(), K.max(), 21),
            "nu": np.linspace(0.5, 2.0, 16),
        }
    prob = _Problem(L, K, y, s, tuple(names), fixed, _standard_transform, spline or SplineConfig())
    return _run(prob, start, grid, model, len(names))


def landscape(
    data: Sequence[SamplePoint],
    K_c_grid: np.ndarray,
    nu_grid: np.ndarray,
    spline: Optional[SplineConfig] = None,
    fixed: Optional[Dict[str, float]] = None,
    normalize: bool = True,
) -> np.ndarray:
    """chi^2 over a (K_c, nu) grid with other parameters held fixed.

    Rows follow ``K_c_grid``; with ``normalize`` the array is divided by its
    minimum.
    """
    L, K, y, s = _arrays(data)
    prob = _Problem(L, K, y, s, ("K_c", "nu"), dict(fixed or {}), _standard_transform, spline or SplineConfig())
    out = np.array([[prob.chi2((kc, nu)) for nu in nu_grid] for kc in K_c_grid])
    if normalize:
        out = out / np.min(out[np.isfinite(out)])
    return out


def spanning_length_collapse(
    data: Sequence[SamplePoint],
    nu: Optional[float] = None,
    eta: Optional[float] = None,
    K_c: Optional[float] = None,
    window: Optional[Tuple[float, float]] = None,
    spline: Optional[SplineConfig] = None,
    start: Optional[Dict[str, float]] = None,
) -> ScalingFit:
    """Collapse M L^{-(5 - eta)/2} = f(L^{1/nu}(K - K_c)); free (nu, eta) unless fixed."""
    pts = list(data)
    if window is not None:
        pts = [d for d in pts if window[0] <= d.K <= window[1]]
    if len({d.L for d in pts}) < 3:
        raise ArgumentError("need at least three distinct sizes")
    L, K, y, s = _arrays(pts)
    fixed = {k: v for k, v in (("nu", nu), ("eta", eta), ("K_c", K_c)) if v is not None}
    st = {"K_c": float(np.median(K)), "nu": 1.0, "eta": 0.0}
    st.update(start or {})
    names = tuple(n for n in ("K_c", "nu", "eta") if n not in fixed)

    def transform(p, L, K, y, s):
        scale = L ** (-(5.0 - p["eta"]) / 2.0)
        return _scaling_x(p, L, K), y * scale, s * scale, np.ones_like(y)

    prob = _Problem(L, K, y, s, names, fixed, transform, spline or SplineConfig())
    grid = {"K_c": np.linspace(K.min(), K.max(), 11), "nu": np.linspace(0.6, 1.6, 6), "eta": np.linspace(-0.4, 0.4, 9)}
    return _run(prob, st, grid, "spanning-length", len(names))


def beta_collapse(
    data: Sequence[SamplePoint],
    K_c: float,
    nu: float,
    window: Optional[Tuple[float, float]] = None,
    spline: Optional[SplineConfig] = None,
    start: Optional[Dict[str, float]] = None,
) -> ScalingFit:
    """Collapse G2 L^{2 beta / nu} = f((K - K_c) L^{1/nu} (1 + A (K - K_c))) at fixed K_c, nu."""
    pts = list(data)
    if window is not None:
        pts = [d for d in pts if window[0] <= d.K <= window[1]]
    if len({d.L for d in pts}) < 3:
        raise ArgumentError("need at least three distinct sizes")
    L, K, y, s = _arrays(pts)
    st = {"beta": 0.45, "A": 0.0}
    st.update(start or {})

    def transform(p, L, K, y, s):
        scale = L ** (2.0 * p["beta"] / p["nu"])
        q = dict(p)
        q["alpha"] = p["A"]
        return _scaling_x(q, L, K), y * scale, s * scale, np.ones_like(y)

    prob = _Problem(L, K, y, s, ("beta", "A"), {"K_c": K_c, "nu": nu}, transform, spline or SplineConfig())
    grid = {"beta": np.linspace(0.2, 0.8, 13), "A": np.array([0.0])}
    return _run(prob, st, grid, "beta", 2)


# ----------------------------------------------------------------------------
# power laws


class PowerLawFit:
    __slots__ = ("exponent", "error", "n_bins", "chi2_r", "window")

    def __init__(self, exponent, error, n_bins, chi2_r, window):
        self.exponent = exponent
        self.error = error
        self.n_bins = n_bins
        self.chi2_r = chi2_r
        self.window = window

    def __iter__(self):
        return iter((self.exponent, self.error))

    def __repr__(self):
        return f"PowerLawFit(exponent={self.exponent:.4f}, error={self.error:.4f}, n_bins={self.n_bins}, chi2_r={self.chi2_r:.3f})"


def default_window(L: int) -> Tuple[float, float]:
    return 10**2.5, 1e-2 * float(L) ** 3


def powerlaw_fit(
    hist: LoopHistogram,
    window: Optional[Tuple[float, float]] = None,
    L: Optional[int] = None,
    min_bins: int = 8,
    method: str = "wls",
) -> PowerLawFit:
    """Exponent tau of a density P(l) ~ l^{-tau} from a log-binned histogram.

    Bins lying entirely inside ``window`` (default [10^2.5, 10^-2 L^3]) and
    holding at least one count enter the fit.  ``method="wls"`` is weighted
    least squares of log density against log bin center with Poisson
    weights; ``method="poisson"`` maximises a multinomial likelihood in which
    each bin's expectation is the power law summed over its integer lengths.
    Errors are inflated by sqrt(chi2_r) when that exceeds one, since loops
    from reused pool blocks are not independent.
    """
    if method not in ("wls", "poisson"):
        raise ArgumentError(f"unknown method {method!r}")
    if window is None:
        if L is None:
            raise ArgumentError("give a window or the linear size L")
        window = default_window(L)
    lo_w, hi_w = window
    lo = hist.bin_low.astype(float)
    hi = hist.bin_high.astype(float)  # exclusive upper integer
    n = hist.counts.astype(float)
    sel = (lo >= lo_w) & (hi - 1 <= hi_w) & (hi > lo) & (n > 0)
    if sel.sum() < min_bins:
        raise ArgumentError(f"only {int(sel.sum())} populated bins in the window; need {min_bins}")
    a, b, n = lo[sel], hi[sel], n[sel]
    total = n.sum()
    if method == "wls":
        width = b - a
        center = np.sqrt(a * (b - 1))
        dens = n / width
        tau, err, _, chi2_r = powerlaw_fit_xy(center, dens, dens / np.sqrt(n))
        return PowerLawFit(tau, err * math.sqrt(max(chi2_r, 1.0)), int(sel.sum()), chi2_r, (lo_w, hi_w))

    def mass(tau):
        # integral of l^{-tau} over [a - 1/2, b - 1/2] approximates the integer sum
        u, v = a - 0.5, b - 0.5
        if abs(tau - 1.0) < 1e-12:
            return np.log(v / u)
        return (v ** (1 - tau) - u ** (1 - tau)) / (1 - tau)

    def nll(tau):
        m = mass(tau)
        p = m / m.sum()
        return -float(np.sum(n * np.log(p)))

    res = optimize.minimize_scalar(nll, bounds=(-3.0, 8.0), method="bounded", options={"xatol": 1e-10})
    tau = float(res.x)
    h = 1e-4
    curv = (nll(tau + h) - 2 * nll(tau) + nll(tau - h)) / h**2
    err = float(1.0 / math.sqrt(curv)) if curv > 0 else float("nan")
    m = mass(tau)
    expect = total * m / m.sum()
    chi2_r = float(np.sum((n - expect) ** 2 / expect)) / max(len(n) - 1, 1)
    return PowerLawFit(tau, err * math.sqrt(max(chi2_r, 1.0)), int(sel.sum()), chi2_r, (lo_w, hi_w))


def powerlaw_fit_xy(x: np.ndarray, y: np.ndarray, sigma: np.ndarray) -> Tuple[float, float, float, float]:
    """Weighted least squares of log y = c - p log x; returns (p, p_err, c, chi2_r)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    s = np.asarray(sigma, dtype=float)
    keep = (x > 0) & (y > 0) & (s > 0)
    if keep.sum() < 3:
        raise ArgumentError("need three positive points")
    lx, ly, ls = np.log(x[keep]), np.log(y[keep]), s[keep] / y[keep]
    A = np.column_stack([np.ones_like(lx), -lx]) / ls[:, None]
    coef, *_ = np.linalg.lstsq(A, ly / ls, rcond=None)
    cov = np.linalg.inv(A.T @ A)
    r = A @ coef - ly / ls
    return float(coef[1]), float(math.sqrt(cov[1, 1])), float(coef[0]), float(r @ r / max(keep.sum() - 2, 1))


# ----------------------------------------------------------------------------
# entanglement profile fits


@dataclass(frozen=True)
class Profile:
    L: int
    ell: np.ndarray
    S: np.ndarray
    sigma: np.ndarray


@dataclass
class ProfileFit:
    a: float
    b: float
    chi2: float
    dof: int
    lam: Optional[float] = None
    lam_err: Optional[float] = None

    @property
    def chi2_r(self) -> float:
        return self.chi2 / max(self.dof, 1)


def _stack(profiles: Sequence[Profile]):
    rows = []
    for p in profiles:
        ell = np.asarray(p.ell, dtype=float)
        keep = (ell > 0) & (ell < p.L)
        for e, S, s in zip(ell[keep], np.asarray(p.S)[keep], np.asarray(p.sigma)[keep]):
            rows.append((p.L, e, S, s))
    if not rows:
        raise ArgumentError("no interior points in the profiles")
    arr = np.array(rows, dtype=float)
    if np.any(arr[:, 3] <= 0):
        raise ArgumentError("sigma must be positive")
    return arr[:, 0], arr[:, 1], arr[:, 2], arr[:, 3]


def _linear2(f1, f2, y, s):
    A = np.column_stack([f1, f2]) / s[:, None]
    coef, *_ = np.linalg.lstsq(A, y / s, rcond=None)
    r = A @ coef - y / s
    return coef, float(r @ r)


def lifshitz_fit(profiles: Sequence[Profile], lam_bounds: Tuple[float, float] = (0.2, 30.0)) -> ProfileFit:
    """Fit S(l, L) = a L + b J(l / L, lambda) jointly over all profiles."""
    L, ell, S, s = _stack(profiles)
    u = ell / L

    def chi2(lam):
        J = np.array([theory.lifshitz_J(float(v), lam) for v in u])
        return _linear2(L, J, S, s)

    grid = np.geomspace(lam_bounds[0], lam_bounds[1], 40)
    vals = [chi2(g)[1] for g in grid]
    k = int(np.argmin(vals))
    lo = grid[max(k - 1, 0)]
    hi = grid[min(k + 1, len(grid) - 1)]
    res = optimize.minimize_scalar(lambda g: chi2(g)[1], bounds=(lo, hi), method="bounded", options={"xatol": 1e-8})
    lam = float(res.x)
    coef, c2 = chi2(lam)
    # chi^2 + 4 interval in lambda with (a, b) re-solved at every step
    target = c2 + DELTA_CHI2
    f = lambda g: chi2(g)[1] - target  # noqa: E731
    bounds = []
    for edge in (lam_bounds[0], lam_bounds[1]):
        if f(edge) > 0:
            bounds.append(optimize.brentq(f, min(lam, edge), max(lam, edge), xtol=1e-10))
        else:
            bounds.append(edge)
    lam_err = 0.5 * (bounds[1] - bounds[0])
    if not res.success:
        raise FitError("lambda search did not converge")
    return ProfileFit(float(coef[0]), float(coef[1]), c2, len(S) - 3, lam, lam_err)


def cft_arc_fit(profiles: Sequence[Profile]) -> ProfileFit:
    """Fit S(l, L) = a L log R + b L with chord length R = (L / pi) sin(pi l / L)."""
    L, ell, S, s = _stack(profiles)
    f1 = L * np.log(L / np.pi * np.sin(np.pi * ell / L))
    coef, c2 = _linear2(f1, L, S, s)
    return ProfileFit(float(coef[0]), float(coef[1]), c2, len(S) - 2)
