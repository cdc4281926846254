import mpmath
import numpy as np
import pytest

from majoloop import oracle
from majoloop.errors import ArgumentError, DomainError
from majoloop.lattice import build_lattice, custom_lattice, set_weights
from majoloop.loopstate import close_boundary, compose_chain, make_layer
from majoloop.rng import stream


def _chain():
    spec = custom_lattice(4, [(0, 1), (1, 2), (2, 3)], colors=["x", "y", "x"])
    return set_weights(spec, {"x": 0.6, "y": 0.4})


def test_empty_stream_leaves_every_site_spanning():
    spec = build_lattice("honeycomb", 4)
    res = oracle.replay(spec, np.zeros((0, 3), dtype=np.int64))
    assert res.spanning == spec.n_sites
    assert res.pairs == [] and res.loop_lengths == []


@pytest.mark.parametrize("k", [1, 2, 5])
def test_repeated_bond_closes_length_two_loops(k):
    res = oracle.replay(_chain(), np.array([[0, 1, 0]] * k))
    assert res.pairs == [(0, 1, 1)]
    assert res.loop_lengths == [2] * (k - 1)
    assert res.spanning == 2


def test_pure_bottom_start_has_no_spanning():
    spec = build_lattice("honeycomb", 4)
    res = oracle.replay(spec, np.zeros((0, 3), dtype=np.int64), policy="pure-bottom")
    assert res.spanning == 0 and len(res.pairs) == spec.n_sites // 2


def test_seam_cuts_need_periodic():
    with pytest.raises(ArgumentError):
        oracle.replay(_chain(), np.zeros((0, 3), dtype=np.int64), policy="mixed-bottom", seam_cuts=[0])


def test_enumeration_is_normalized():
    e = oracle.enumerate_small(_chain(), 2)
    assert e.total_probability == pytest.approx(1.0, abs=1e-12)
    assert sum(e.spanning.values()) == pytest.approx(1.0, abs=1e-12)
    assert set(e.spanning) <= {0, 2, 4}
    assert e.support == [((0, 1),), ((1, 2),), ((2, 3),)]
    assert e.mean_entropy == pytest.approx(0.5 * e.mean_spanning)


def test_enumeration_single_bond_purifies():
    spec = custom_lattice(2, [(0, 1)])
    e = oracle.enumerate_small(spec, 3)
    assert e.spanning == {0: pytest.approx(1.0)}


def test_enumeration_matches_sampling():
    spec = _chain()
    exact = oracle.enumerate_small(spec, 2)
    draws = np.array(
        [
            close_boundary(compose_chain([make_layer(spec, stream(s, i)) for i in range(2)], [(0, 0)]), "mixed-bottom").spanning
            for s in range(3000)
        ]
    )
    err = draws.std(ddof=1) / np.sqrt(len(draws))
    assert abs(draws.mean() - exact.mean_spanning) < 5 * err


def test_enumeration_limits():
    with pytest.raises(ArgumentError):
        oracle.enumerate_small(build_lattice("honeycomb", 2), 1)
    with pytest.raises(ArgumentError):
        oracle.enumerate_small(_chain(), 4)


def test_qseries_leading_terms():
    # theta3(iy) = 1 + 2 q + ..., eta(iy) = q^{1/24} (1 - q^{24/24}...) with q = exp(-2 pi y)
    y = 3.0
    th = oracle.qseries("theta3", 1j * y, terms=1)
    assert float(th) == pytest.approx(1 + 2 * np.exp(-np.pi * y), rel=1e-15)
    eta = oracle.qseries("eta", 1j * y, terms=1)
    assert float(eta) == pytest.approx(np.exp(-np.pi * y / 12) * (1 - np.exp(-2 * np.pi * y)), rel=1e-15)


@pytest.mark.parametrize("name", ["theta3", "eta"])
@pytest.mark.parametrize("y", [0.4, 1.0, 2.0])
def test_qseries_converged_by_forty_terms(name, y):
    a = oracle.qseries(name, 1j * y, terms=40)
    b = oracle.qseries(name, 1j * y, terms=50)
    assert abs(a - b) < mpmath.mpf(10) ** -12 * abs(b)


def test_qseries_rejects_bad_arguments():
    with pytest.raises(DomainError):
        oracle.qseries("eta", 0.5 + 1j)
    with pytest.raises(DomainError):
        oracle.qseries("eta", -1j)
    with pytest.raises(ArgumentError):
        oracle.qseries("zeta", 1j)


def test_eta_modular_identity():
    # eta(i/y) = sqrt(y) eta(iy); 1/y passes through a double
    y = mpmath.mpf("0.7")
    lhs = oracle.qseries("eta", 1j / float(y), terms=60)
    rhs = mpmath.sqrt(y) * oracle.qseries("eta", 1j * float(y), terms=60)
    assert abs(lhs - rhs) < 1e-14
