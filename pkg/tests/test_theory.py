import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st

from majoloop import oracle, theory
from majoloop.errors import ArgumentError, DomainError


def test_honeycomb_diffusion_values():
    iso = theory.d_mic_honeycomb(1 / 3, 1 / 3, 1 / 3)
    assert iso.D == pytest.approx(0.25, abs=1e-15)
    assert iso.D_z == pytest.approx(0.25, abs=1e-15)
    assert iso.D_perp == pytest.approx(0.25, abs=1e-15)
    assert theory.d_mic_honeycomb(0.5, 0.5, 0.0).D == pytest.approx(3 / 16, abs=1e-15)
    assert theory.d_mic_honeycomb(1.0, 0.0, 0.0).D == 0.0


def test_kekule_diffusion_values():
    assert theory.d_mic_kekule(1 / 3, 1 / 3, 1 / 3) == pytest.approx(25 / 108, abs=1e-15)
    assert theory.d_mic_kekule(0.5, 0.5, 0.0) == pytest.approx(15 / 128, abs=1e-15)
    assert theory.d_mic_kekule(0.0, 0.0, 1.0) == 0.0


def test_unnormalized_input_rejected():
    with pytest.raises(ArgumentError):
        theory.d_mic_honeycomb(0.5, 0.5, 0.5)
    with pytest.raises(ArgumentError):
        theory.d_mic_kekule(-0.1, 0.6, 0.5)


@given(st.floats(0.0, 2 * math.pi), st.floats(0.0, 2 * math.pi), st.floats(0.0, 0.2))
def test_diffusion_rotation_invariant(phi1, phi2, r):
    # in-plane orthonormal basis of the simplex around (1/3, 1/3, 1/3)
    e1 = np.array([1.0, -1.0, 0.0]) / math.sqrt(2)
    e2 = np.array([1.0, 1.0, -2.0]) / math.sqrt(6)
    c = np.full(3, 1 / 3)
    w1 = c + r * (math.cos(phi1) * e1 + math.sin(phi1) * e2)
    w2 = c + r * (math.cos(phi2) * e1 + math.sin(phi2) * e2)
    assert abs(theory.d_mic_honeycomb(*w1).D - theory.d_mic_honeycomb(*w2).D) < 1e-12


def test_contour_on_default_cut():
    pt = theory.critical_contour()
    assert pt.found
    # (3/4)(K(1-K) + (1-K)^2/4) = 3/16 solved in closed form
    assert pt.K == pytest.approx(2 / 3, abs=1e-9)
    assert abs(pt.K - 0.6523817) / 0.6523817 < 0.03


def test_contour_percolation_edge():
    pt = theory.critical_contour(cut=lambda K: (K, 1 - K, 0.0), bracket=(0.5, 1.0))
    assert pt.found and pt.K == pytest.approx(0.5, abs=1e-9)


def test_contour_not_found():
    pt = theory.critical_contour(bracket=(0.05, 0.3))
    assert not pt.found and math.isnan(pt.K)


def test_contour_kekule():
    pt = theory.critical_contour("kekule")
    assert pt.found
    assert theory.d_mic_kekule(pt.K, (1 - pt.K) / 2, (1 - pt.K) / 2) == pytest.approx(3 / 16, abs=1e-9)


@pytest.mark.parametrize("u", [0.05, 0.2, 0.5, 0.77, 0.95])
@pytest.mark.parametrize("lam", [0.3, 1.0, 3.4, 12.0])
def test_lifshitz_matches_qseries(u, lam):
    assert abs(theory.lifshitz_J(u, lam) - float(oracle.lifshitz_reference(u, lam))) < 1e-12


def test_lifshitz_symmetric_and_domain():
    assert theory.lifshitz_J(0.3, 3.4) == pytest.approx(theory.lifshitz_J(0.7, 3.4), abs=1e-13)
    for u in (0.0, 1.0, 1.5):
        with pytest.raises(DomainError):
            theory.lifshitz_J(u, 3.4)


def test_lifshitz_large_lambda_limit():
    u = 0.4
    eta_only = -float(mpmath.log(oracle.qseries("eta", 2j * u)) + mpmath.log(oracle.qseries("eta", 2j * (1 - u))))
    assert theory.lifshitz_J(u, 200.0) == pytest.approx(eta_only, abs=1e-12)


def test_pd_ratios():
    assert theory.pd_ratios(1.0) == pytest.approx((1.0, 9 / 8), abs=1e-12)
    assert theory.pd_ratios(0.5) == pytest.approx((35 / 36, 25 / 24), abs=1e-12)


def test_pd_flat_tail_at_theta_one():
    total = 1000.0
    vals = [ell * theory.pd_density(ell, total, 1.0) for ell in (10.0, 100.0, 900.0)]
    assert vals == pytest.approx([1 / total] * 3)


def test_pd_density_normalized():
    from scipy import integrate

    for theta in (0.5, 1.0, 2.0):
        # length-weighted density integrates to the macroscopic fraction f
        for f in (1.0, 0.6):
            val, _ = integrate.quad(lambda x: x * theory.pd_density(x, 1.0, theta, f), 0, f)
            assert val == pytest.approx(f, rel=1e-8)


def test_pd_rejects():
    with pytest.raises(ArgumentError):
        theory.pd_pm(1, 1.0)
    with pytest.raises(ArgumentError):
        theory.pd_density(2.0, 1.0, 1.0)


def test_hyperscaling_examples():
    e = theory.hyperscaling(tau=2.1819, nu=1.0)
    assert e.eta == pytest.approx(-0.0766, abs=5e-5)
    assert e.d_f == pytest.approx(2.5383, abs=5e-5)
    assert e.beta == pytest.approx(e.beta_alt, abs=1e-12)
    with pytest.raises(DomainError):
        theory.hyperscaling(tau=1.0)
    with pytest.raises(ArgumentError):
        theory.hyperscaling()


@given(st.floats(1.05, 4.0))
def test_hyperscaling_round_trip(tau):
    e = theory.hyperscaling(tau=tau, nu=0.9)
    back = theory.hyperscaling(eta=e.eta)
    assert back.tau == pytest.approx(tau, abs=1e-12)
    assert abs(e.beta - e.beta_alt) < 1e-12


def test_reference_forms():
    assert theory.reference_forms("bulk-liquid").exponent == 2.5
    assert theory.reference_forms("surface-critical").exponent == 3.0
    assert theory.reference_forms("surface-liquid").exponent == 2.0
    f = theory.reference_forms("open-boundary", decay=0.1)
    assert f(10.0) == pytest.approx(10.0**-2.5 * math.exp(-1.0))
    assert theory.reference_forms("bulk-liquid", decay=0.1).decay == 0.0
    with pytest.raises(ArgumentError):
        theory.reference_forms("nope")
