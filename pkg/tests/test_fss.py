import numpy as np
import pytest

from majoloop import fss, theory
from majoloop.errors import ArgumentError
from majoloop.fss import Profile, SamplePoint, SplineConfig
from majoloop.loopstate import LoopHistogram

SIZES = (16, 32, 64, 128)
KS = np.linspace(0.60, 0.70, 11)


def _synthetic(K_c=0.652, nu=1.0, noise=0.01, seed=3, amp=None):
    rng = np.random.default_rng(seed)
    pts = []
    for L in SIZES:
        for K in KS:
            x = L ** (1 / nu) * (K - K_c)
            scale = 1.0 if amp is None else amp(L)
            y = scale * (2.0 / (1.0 + np.exp(0.5 * x)) + noise * rng.standard_normal())
            pts.append(SamplePoint(L, float(K), float(y), noise * scale))
    return pts


def test_collapse_recovers_parameters():
    fit = fss.collapse_fit(_synthetic())
    assert abs(fit.K_c - 0.652) < fit.errors["K_c"]
    assert abs(fit.nu - 1.0) < fit.errors["nu"]
    assert 0.5 < fit.chi2_r < 1.6
    assert fit.errors["K_c"] > 0 and fit.errors["nu"] > 0


def test_collapse_ignores_input_order():
    pts = _synthetic()
    shuffled = [pts[i] for i in np.random.default_rng(0).permutation(len(pts))]
    a, b = fss.collapse_fit(pts), fss.collapse_fit(shuffled)
    assert a.params == b.params and a.chi2 == b.chi2


def test_collapse_stable_under_knot_doubling():
    pts = _synthetic()
    base = fss.collapse_fit(pts, spline=SplineConfig("uniform", 6))
    dense = fss.collapse_fit(pts, spline=SplineConfig("uniform", 6).doubled())
    assert abs(base.K_c - dense.K_c) < base.errors["K_c"]
    assert abs(base.nu - dense.nu) < base.errors["nu"]


def test_collapse_nonlinear_and_fixed():
    fit = fss.collapse_fit(_synthetic(), model="nonlinear")
    assert fit.K_c == pytest.approx(0.652, abs=0.003)
    assert abs(fit.alpha) < 5
    pinned = fss.collapse_fit(_synthetic(), fixed={"nu": 1.0})
    assert pinned.nu == 1.0 and "nu" not in pinned.errors


def test_collapse_window_and_size_checks():
    pts = _synthetic()
    with pytest.raises(ArgumentError):
        fss.collapse_fit([p for p in pts if p.L < 64])
    with pytest.raises(ArgumentError):
        fss.collapse_fit(pts, model="cubic")
    fit = fss.collapse_fit(pts, window=(0.62, 0.68))
    assert fit.n_points == 7 * len(SIZES)
    with pytest.raises(ArgumentError):
        SamplePoint(16, 0.6, 1.0, 0.0)


def test_paper_knot_layout_falls_back():
    cfg = SplineConfig("paper")
    assert len(cfg.interior(-0.3, 0.3)) == 5
    assert np.allclose(cfg.interior(10.0, 11.0), np.linspace(10, 11, 8)[1:-1])


def test_landscape_minimum_near_fit():
    pts = _synthetic()
    kc = np.linspace(0.64, 0.66, 11)
    nu = np.linspace(0.9, 1.1, 11)
    grid = fss.landscape(pts, kc, nu)
    i, j = np.unravel_index(np.argmin(grid), grid.shape)
    assert grid.min() == pytest.approx(1.0)
    assert abs(kc[i] - 0.652) <= 0.004 and abs(nu[j] - 1.0) <= 0.04


def test_spanning_length_collapse_recovers_eta():
    eta = 0.08
    fit = fss.spanning_length_collapse(_synthetic(amp=lambda L: L ** ((5 - eta) / 2)))
    assert abs(fit.params["eta"] - eta) < fit.errors["eta"]
    assert abs(fit.K_c - 0.652) < fit.errors["K_c"]


def test_beta_collapse_recovers_beta():
    beta, nu = 0.45, 1.0
    fit = fss.beta_collapse(_synthetic(amp=lambda L: L ** (-2 * beta / nu)), K_c=0.652, nu=nu)
    assert abs(fit.params["beta"] - beta) < fit.errors["beta"]


# -- power laws --------------------------------------------------------------


def _pareto_lengths(tau, n, seed=0, lo=1.0):
    u = np.random.default_rng(seed).random(n)
    return np.floor(lo * (1 - u) ** (-1 / (tau - 1))).astype(np.int64)


@pytest.mark.parametrize("method", ["wls", "poisson"])
def test_powerlaw_round_trip(method):
    hist = LoopHistogram.from_lengths(_pareto_lengths(2.5, 200_000, lo=10.0))
    fit = fss.powerlaw_fit(hist, window=(20, 20_000), method=method)
    assert fit.exponent == pytest.approx(2.5, abs=0.03)
    assert fit.n_bins >= 8 and fit.error > 0


def test_flat_density_gives_zero():
    hist = LoopHistogram.from_lengths(np.random.default_rng(1).integers(1, 100_000, 400_000))
    fit = fss.powerlaw_fit(hist, window=(100, 50_000))
    assert fit.exponent == pytest.approx(0.0, abs=0.03)


def test_powerlaw_needs_bins():
    hist = LoopHistogram.from_lengths(_pareto_lengths(2.5, 1000))
    with pytest.raises(ArgumentError):
        fss.powerlaw_fit(hist, window=(10, 40))
    with pytest.raises(ArgumentError):
        fss.powerlaw_fit(hist)
    with pytest.raises(ArgumentError):
        fss.powerlaw_fit(hist, window=(10, 1000), method="mle")


def test_default_window():
    assert fss.default_window(100) == pytest.approx((10**2.5, 1e4))


def test_powerlaw_fit_xy_exact_line():
    x = np.geomspace(1, 100, 10)
    tau, err, c, chi2_r = fss.powerlaw_fit_xy(x, 3.0 * x**-1.7, 0.01 * x**-1.7)
    assert tau == pytest.approx(1.7, abs=1e-10) and c == pytest.approx(np.log(3.0), abs=1e-10)
    assert chi2_r == pytest.approx(0.0, abs=1e-12)


# -- entanglement profiles ---------------------------------------------------


def _profiles(fn, noise=0.01, seed=5):
    rng = np.random.default_rng(seed)
    out = []
    for L in (32, 64, 128):
        ell = np.arange(L // 16, L // 2 + 1, max(1, L // 32))
        S = fn(L, ell) + noise * rng.standard_normal(len(ell))
        out.append(Profile(L, ell, S, np.full(len(ell), noise)))
    return out


def test_lifshitz_fit_recovers_lambda():
    J = lambda L, ell: np.array([theory.lifshitz_J(e / L, 3.4) for e in ell])  # noqa: E731
    fit = fss.lifshitz_fit(_profiles(lambda L, ell: 0.1 * L + 0.5 * J(L, ell), noise=0.001))
    assert fit.lam == pytest.approx(3.4, abs=0.05)
    assert fit.a == pytest.approx(0.1, abs=1e-3)
    assert fit.b == pytest.approx(0.5, abs=0.02)
    assert fit.lam_err > 0


def test_cft_arc_fit_exact():
    chord = lambda L, ell: L * np.log(L / np.pi * np.sin(np.pi * ell / L))  # noqa: E731
    fit = fss.cft_arc_fit(_profiles(lambda L, ell: 0.2 * chord(L, ell) + 0.05 * L, noise=1e-9))
    assert fit.a == pytest.approx(0.2, abs=1e-6) and fit.b == pytest.approx(0.05, abs=1e-6)
    assert fit.chi2_r < 2


def test_profile_stack_rejects_empty():
    with pytest.raises(ArgumentError):
        fss.cft_arc_fit([Profile(8, np.array([0, 8]), np.zeros(2), np.ones(2))])
