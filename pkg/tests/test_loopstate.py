import numpy as np
import pytest
from hypothesis import given, strategies as st

from majoloop.errors import ArgumentError, CompositionError
from majoloop.lattice import build_lattice, custom_lattice, set_weights
from majoloop.loopstate import (
    OPEN,
    Closure,
    LoopHistogram,
    PairingState,
    audit_involution,
    block_from_ops,
    close_boundary,
    compose,
    compose_chain,
    identity_block,
    make_layer,
    measure,
)
from majoloop.rng import stream

GEOMETRIES = ["honeycomb", "honeycomb-nnn", "yao-kivelson", "cardy-l3d", "kekule"]


def _spec(geometry, L=6):
    return build_lattice(geometry, L)


# -- measure ----------------------------------------------------------------


def test_measure_joins_two_arcs():
    k, l, m, n = 0, 1, 2, 3
    st_ = PairingState(4, [(k, l), (m, n)])
    st_.length[[k, l]] = 3
    st_.length[[m, n]] = 5
    measure(st_, (l, m))
    assert st_.arc(k) == (n, 9)
    assert st_.arc(l) == (m, 1)


def test_measure_closes_loop():
    st_ = PairingState(2, [(0, 1)])
    st_.length[:] = 4
    measure(st_, (0, 1))
    assert st_.closed.total_loops == 1 and st_.closed.total_length == 5
    assert st_.arc(0) == (1, 1)


def test_measure_two_open_nodes():
    st_ = PairingState.mixed(4)
    measure(st_, (1, 2))
    assert st_.arc(1) == (2, 1)
    assert st_.n_open == 2


def test_measure_one_open_end():
    st_ = PairingState(3, [(0, 1)])
    st_.length[[0, 1]] = 2
    measure(st_, (1, 2))
    assert st_.partner[0] == OPEN and st_.length[0] == 3


def test_measure_rejects_self_pair():
    with pytest.raises(ArgumentError):
        measure(PairingState.mixed(2), (1, 1))


@given(st.lists(st.tuples(st.integers(0, 7), st.integers(0, 7)).filter(lambda b: b[0] != b[1]), max_size=60))
def test_measure_keeps_involution(bonds):
    st_ = PairingState.from_dimers(np.arange(8) ^ 1)
    for b in bonds:
        measure(st_, b)
        st_.check()


def test_audit_detects_broken_pairing():
    with pytest.raises(AssertionError):
        audit_involution(np.array([1, 2, 0]))
    with pytest.raises(AssertionError):
        audit_involution(np.array([0, 1]))
    audit_involution(np.array([1, 0, -1, -1]), allow_open=True)


# -- histogram --------------------------------------------------------------


def test_histogram_bookkeeping():
    h = LoopHistogram.from_lengths([1, 2, 2, 5, 100, 0])
    assert h.total_loops == 6 and h.total_length == 110 and h.n_zero == 1
    assert h.counts.sum() == 5
    with pytest.raises(ArgumentError):
        h.add(-1)


@given(st.lists(st.integers(0, 10**6), max_size=30), st.lists(st.integers(0, 10**6), max_size=30))
def test_histogram_merge_is_additive_and_commutative(a, b):
    ha, hb = LoopHistogram.from_lengths(a), LoopHistogram.from_lengths(b)
    assert ha.merge(hb) == hb.merge(ha) == LoopHistogram.from_lengths(a + b)


def test_histogram_bins_cover_integers_once():
    h = LoopHistogram()
    assert np.all(h.bin_width >= 0)
    assert h.bin_low[0] == 1
    for ell in (1, 2, 3, 9, 10, 11, 316, 317, 10**5):
        k = int(np.nonzero((h.bin_low <= ell) & (ell < h.bin_high))[0][0])
        g = LoopHistogram.from_lengths([ell])
        assert g.counts[k] == 1


# -- blocks -----------------------------------------------------------------


def test_empty_layer_is_identity():
    spec = _spec("honeycomb", 4)
    blk = make_layer(spec, stream(0), n_measurements=0)
    ident = identity_block(spec)
    assert np.array_equal(blk.partner, ident.partner) and blk.closed == ident.closed
    assert blk.depth == 1 and np.all(blk.length == 0)


def test_two_site_layer():
    spec = custom_lattice(2, [(0, 1)])
    blk = block_from_ops(spec, np.array([[0, 1, 0]]))
    # bottom pair (b0, b1) and top pair (t0, t1), one link each
    assert blk.arcs() == [(0, 1, 1), (2, 3, 1)]
    blk.audit()


def test_same_seed_same_block():
    spec = _spec("honeycomb", 2)
    a, b = make_layer(spec, stream(9, 1)), make_layer(spec, stream(9, 1))
    assert a.same_as(b)


@pytest.mark.parametrize("geometry", GEOMETRIES)
def test_layer_audit(geometry):
    spec = _spec(geometry)
    for s in range(5):
        make_layer(spec, stream(s)).audit()


def test_compose_identity_law():
    spec = _spec("honeycomb", 4)
    b = make_layer(spec, stream(3))
    assert compose(identity_block(spec), b).same_as(b)
    assert compose(b, identity_block(spec)).same_as(b)


def test_compose_depth_additivity():
    spec = _spec("honeycomb", 4)
    layers = [make_layer(spec, stream(4, i)) for i in range(16)]
    left = compose_chain(layers[:8], [(0, 0)] * 7)
    right = compose_chain(layers[8:], [(0, 0)] * 7)
    assert left.depth == 8 and compose(left, right).depth == 16


def test_compose_four_site_chain_matches_sequential():
    spec = custom_lattice(4, [(0, 1), (1, 2), (2, 3)])
    ops1 = np.array([[0, 1, 0], [2, 3, 0], [1, 2, 0]])
    ops2 = np.array([[1, 2, 0], [0, 1, 0], [2, 3, 0]])
    glued = compose(block_from_ops(spec, ops1), block_from_ops(spec, ops2))
    direct = block_from_ops(spec, np.vstack([ops1, ops2]), depth=2)
    assert glued.same_as(direct)


def test_compose_rejects_other_lattice():
    a = make_layer(_spec("honeycomb", 4), stream(0))
    b = make_layer(_spec("honeycomb", 6), stream(0))
    with pytest.raises(CompositionError):
        compose(a, b)


@pytest.mark.parametrize("geometry", ["honeycomb", "honeycomb-nnn", "yao-kivelson", "cardy-l3d"])
@given(seed=st.integers(0, 2**32), shifts=st.lists(st.tuples(st.integers(0, 5), st.integers(0, 5)), min_size=2, max_size=2))
def test_compose_associative(geometry, seed, shifts):
    spec = _spec(geometry)
    if spec.kekule_shift:
        return
    A, B, C = (make_layer(spec, stream(seed, i)) for i in range(3))
    (d1x, d1y), (d2x, d2y) = shifts
    left = compose(compose(A, B, d1x, d1y), C, d1x + d2x, d1y + d2y)
    right = compose(A, compose(B, C, d2x, d2y), d1x, d1y)
    assert left.same_as(right)
    left.audit()


@pytest.mark.parametrize("geometry", GEOMETRIES)
@given(seed=st.integers(0, 2**32))
def test_length_identity_after_composition(geometry, seed):
    spec = _spec(geometry)
    rng = np.random.default_rng(seed)
    blocks = [make_layer(spec, stream(seed, i)) for i in range(4)]
    shifts = [tuple(spec.shifts()[rng.integers(len(spec.shifts()))]) for _ in range(3)]
    blk = compose_chain(blocks, shifts)
    blk.audit()
    for policy in Closure:
        res = close_boundary(blk, policy)
        arcs = int(res.surface.lengths.sum()) + res.spanning_length
        if res.policy is Closure.MIXED_BOTTOM:
            # bottom-bottom arcs stay open and are not reported by the closure
            n = spec.n_sites
            bb = (blk.partner[:n] >= 0) & (blk.partner[:n] < n)
            arcs += int(blk.length[:n][bb].sum()) // 2
        assert arcs + res.closed.total_length == 2 * blk.n_ops


# -- closure ----------------------------------------------------------------


def test_identity_mixed_bottom():
    spec = _spec("honeycomb", 4)
    res = close_boundary(identity_block(spec), "mixed-bottom")
    assert res.spanning == spec.n_sites
    assert res.spanning_length == 0


def test_identity_periodic():
    spec = _spec("honeycomb", 4)
    res = close_boundary(identity_block(spec), Closure.PERIODIC_TIME)
    assert res.closed.total_loops == spec.n_sites
    assert res.closed.n_zero == spec.n_sites


def test_pure_both_closes_everything():
    spec = _spec("honeycomb", 4)
    blk = make_layer(spec, stream(1))
    res = close_boundary(blk, "pure-both")
    assert res.surface.n_pairs == 0 and res.spanning == 0


def test_pure_bottom_surface_is_perfect_matching():
    spec = _spec("honeycomb", 6)
    blk = compose(make_layer(spec, stream(1)), make_layer(spec, stream(2)), 2, 3)
    res = close_boundary(blk, "pure-bottom")
    assert 2 * res.surface.n_pairs == spec.n_sites
    audit_involution(res.surface.partner_table())


@given(st.integers(0, 2**32))
def test_spanning_is_even(seed):
    spec = _spec("honeycomb", 4)
    blk = compose(make_layer(spec, stream(seed, 0)), make_layer(spec, stream(seed, 1)), 1, 1)
    assert close_boundary(blk, "mixed-bottom").spanning % 2 == 0


def test_area_law_purifies():
    spec = set_weights(_spec("honeycomb", 8), {"x": 0.02, "y": 0.02, "z": 0.96})
    blk = make_layer(spec, stream(0))
    for i in range(1, 32):
        blk = compose(blk, make_layer(spec, stream(0, i)))
    assert close_boundary(blk, "mixed-bottom").spanning <= 4


def test_seam_cuts_need_periodic():
    spec = _spec("honeycomb", 4)
    with pytest.raises(ArgumentError):
        close_boundary(identity_block(spec), "pure-bottom", seam_cuts=[0])


def test_cut_adds_ancillas():
    spec = _spec("honeycomb", 4)
    a, b = make_layer(spec, stream(0)), make_layer(spec, stream(1))
    blk = compose(a, b, cuts=[0, 5])
    assert blk.n_ancilla == 4
    blk.audit()
    with pytest.raises(ArgumentError):
        compose(a, b, cuts=[0, 0])
