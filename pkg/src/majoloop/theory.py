"""Closed-form reference formulas.

Microscopic diffusion constants of loop endpoints, the critical contour they
imply, the quantum Lifshitz entanglement shape, Poisson-Dirichlet loop laws,
exponent relations and reference power-law densities.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Dict, NamedTuple, Optional, Tuple, Union

import numpy as np

from .errors import ArgumentError, DomainError
from .lattice import Geometry

D_CRITICAL = 3.0 / 16.0
_NORM_TOL = 1e-9


def _check_simplex(*w: float) -> None:
    if any(v < -_NORM_TOL for v in w):
        raise ArgumentError("probabilities must be nonnegative")
    if abs(sum(w) - 1.0) > _NORM_TOL:
        raise ArgumentError(f"probabilities must sum to 1, got {sum(w)!r}")


class HoneycombDiffusion(NamedTuple):
    D_z: float
    D_perp: float
    D: float


def d_mic_honeycomb(K_x: float, K_y: float, K_z: float) -> HoneycombDiffusion:
    """Diffusion constants of a loop endpoint on the honeycomb circuit."""
    _check_simplex(K_x, K_y, K_z)
    d_z = 9.0 / 8.0 * K_z * (K_x + K_y)
    d_perp = (2.0 * d_z + 9.0 * K_x * K_y) / 6.0
    return HoneycombDiffusion(d_z, d_perp, 0.5 * (d_z + d_perp))


def d_mic_kekule(K_r: float, K_g: float, K_b: float) -> float:
    """Cell-averaged diffusion constant on the Kekule circuit."""
    _check_simplex(K_r, K_g, K_b)
    gr = K_g * K_r
    return 0.375 * (
        gr * (2.0 - 3.0 * gr)
        + K_b * (K_g + K_r) * (2.0 + gr)
        - 3.0 * K_b**2 * (K_g**2 - gr + K_r**2)
    )


def _default_cut(geometry: Geometry) -> Callable[[float], Tuple[float, float, float]]:
    return lambda K: (K, 0.5 * (1.0 - K), 0.5 * (1.0 - K))


class ContourPoint(NamedTuple):
    K: float
    found: bool
    iterations: int


def critical_contour(
    geometry: Union[Geometry, str] = Geometry.HONEYCOMB,
    cut: Optional[Callable[[float], Tuple[float, float, float]]] = None,
    bracket: Tuple[float, float] = (1.0 / 3.0, 1.0),
    tol: float = 1e-10,
) -> ContourPoint:
    """Point on ``cut`` where the microscopic diffusion constant equals 3/16.

    ``cut`` maps the control parameter to three normalized probabilities,
    (K_x, K_y, K_z) on the honeycomb or (K_r, K_g, K_b) on the Kekule lattice.
    The default cut is K_x = K, K_y = K_z = (1 - K)/2.  Returns
    ``found=False`` when D - 3/16 does not change sign over ``bracket``.
    """
    geometry = Geometry.parse(geometry)
    if geometry is Geometry.HONEYCOMB:
        d = lambda w: d_mic_honeycomb(*w).D
    elif geometry is Geometry.KEKULE:
        d = lambda w: d_mic_kekule(*w)
    else:
        raise ArgumentError(f"no diffusion formula for {geometry.value}")
    cut = cut or _default_cut(geometry)
    lo, hi = float(bracket[0]), float(bracket[1])
    f_lo = d(cut(lo)) - D_CRITICAL
    f_hi = d(cut(hi)) - D_CRITICAL
    if f_lo == 0.0:
        return ContourPoint(lo, True, 0)
    if f_hi == 0.0:
        return ContourPoint(hi, True, 0)
    if f_lo * f_hi > 0:
        return ContourPoint(float("nan"), False, 0)
    it = 0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        f_mid = d(cut(mid)) - D_CRITICAL
        it += 1
        if f_mid == 0.0:
            return ContourPoint(mid, True, it)
        if (f_mid > 0) == (f_lo > 0):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
    return ContourPoint(0.5 * (lo + hi), True, it)


# ----------------------------------------------------------------------------
# Lifshitz scaling function

_SERIES_EPS = 1e-15


def _log_theta3_imag(y: float) -> float:
    """log theta3(i y) = log(1 + 2 sum_n q^{n^2}) with q = exp(-pi y)."""
    s = 0.0
    n = 1
    while True:
        term = math.exp(-math.pi * y * n * n)
        s += term
        if term < _SERIES_EPS * (1.0 + 2.0 * s):
            break
        n += 1
    return math.log1p(2.0 * s)


def _log_eta_imag(y: float) -> float:
    """log eta(i y) = -pi y / 12 + sum_n log(1 - q^n) with q = exp(-2 pi y)."""
    acc = -math.pi * y / 12.0
    n = 1
    while True:
        qn = math.exp(-2.0 * math.pi * y * n)
        acc += math.log1p(-qn)
        if qn < _SERIES_EPS:
            break
        n += 1
    return acc


def lifshitz_J(u: float, lam: float) -> float:
    """Entanglement shape J(u) of the quantum Lifshitz theory at aspect u = l/L."""
    if not 0.0 < u < 1.0:
        raise DomainError("u must lie strictly between 0 and 1")
    if not lam > 0.0:
        raise DomainError("lambda must be positive")
    v = 1.0 - u
    return (
        _log_theta3_imag(lam * u)
        + _log_theta3_imag(lam * v)
        - _log_eta_imag(2.0 * u)
        - _log_eta_imag(2.0 * v)
    )


def lifshitz_profile(ell: np.ndarray, L: float, lam: float) -> np.ndarray:
    return np.array([lifshitz_J(float(x) / L, lam) for x in np.ravel(ell)])


# ----------------------------------------------------------------------------
# Poisson-Dirichlet statistics


def pd_pm(m: int, theta: float, f: float = 1.0) -> float:
    """Probability that m random points lie on one macroscopic loop."""
    if m < 2 or int(m) != m:
        raise ArgumentError("m must be an integer >= 2")
    if not theta > 0:
        raise ArgumentError("theta must be positive")
    if not 0 < f <= 1:
        raise ArgumentError("f must lie in (0, 1]")
    return math.exp(m * math.log(f) + math.lgamma(1 + theta) + math.lgamma(m) - math.lgamma(m + theta))


def pd_ratios(theta: float) -> Tuple[float, float]:
    """(P2^2 / P4, P2^3 / P3^2); the macroscopic fraction cancels."""
    p2, p3, p4 = (pd_pm(m, theta) for m in (2, 3, 4))
    return p2 * p2 / p4, p2**3 / (p3 * p3)


def pd_density(ell: float, total: float, theta: float, f: float = 1.0) -> float:
    """Length density P(l) of macroscopic loops with total length ``total``."""
    if not theta > 0 or not 0 < f <= 1 or not total > 0:
        raise ArgumentError("need theta > 0, 0 < f <= 1 and total > 0")
    cap = f * total
    if not 0 < ell < cap:
        raise ArgumentError("ell must lie in (0, f * total)")
    return theta / (total * ell) * (1.0 - ell / cap) ** (theta - 1.0)


# ----------------------------------------------------------------------------
# exponent relations


@dataclass(frozen=True)
class Exponents:
    nu: Optional[float]
    eta: float
    tau: float
    d_f: float
    beta: Optional[float]
    beta_alt: Optional[float]
    theta: Optional[float] = None
    cls: Optional[str] = None


def hyperscaling(
    tau: Optional[float] = None,
    eta: Optional[float] = None,
    nu: Optional[float] = None,
    cls: Optional[str] = None,
) -> Exponents:
    """Complete a set of exponents from tau or eta, and nu when known."""
    if (tau is None) == (eta is None):
        raise ArgumentError("give exactly one of tau or eta")
    if tau is not None:
        if not tau > 1:
            raise DomainError("tau must exceed 1")
        eta = 5.0 - 6.0 / (tau - 1.0)
    else:
        if not eta < 5:
            raise DomainError("eta must be below 5")
        tau = (11.0 - eta) / (5.0 - eta)
    d_f = 3.0 / (tau - 1.0)
    beta = beta_alt = None
    if nu is not None:
        if not nu > 0:
            raise DomainError("nu must be positive")
        beta = nu * (eta + 1.0) / 2.0
        beta_alt = 3.0 * nu * (tau - 2.0) / (tau - 1.0)
    theta = {"BDI": 1.0, "D": 0.5}.get(cls) if cls else None
    return Exponents(nu=nu, eta=eta, tau=tau, d_f=d_f, beta=beta, beta_alt=beta_alt, theta=theta, cls=cls)


# ----------------------------------------------------------------------------
# reference densities


@dataclass(frozen=True)
class ReferenceForm:
    kind: str
    exponent: float
    decay: float = 0.0

    def __call__(self, ell, amplitude: float = 1.0):
        ell = np.asarray(ell, dtype=float)
        return amplitude * ell ** (-self.exponent) * np.exp(-self.decay * ell)


_FORMS: Dict[str, float] = {
    "first-passage": 1.5,
    "bulk-liquid": 2.5,
    "surface-critical": 3.0,
    "surface-liquid": 2.0,
    "open-boundary": 2.5,
}


def reference_forms(kind: str, decay: float = 0.0) -> ReferenceForm:
    """Power-law reference density for fit seeding; ``decay`` only for open-boundary."""
    if kind not in _FORMS:
        raise ArgumentError(f"unknown form {kind!r}; choose from {sorted(_FORMS)}")
    return ReferenceForm(kind, _FORMS[kind], decay if kind == "open-boundary" else 0.0)
