import numpy as np
import pytest
from hypothesis import given, strategies as st

from majoloop.errors import ConfigurationError
from majoloop.lattice import (
    Geometry,
    build_lattice,
    coordination,
    custom_lattice,
    frustration_graph,
    frustration_graph_from_bonds,
    is_orientable,
    set_weights,
    weights_for_cut,
)

GEOMETRIES = ["honeycomb", "kekule", "honeycomb-nnn", "yao-kivelson", "cardy-l3d"]


def test_honeycomb_two_by_two():
    spec = build_lattice("honeycomb", 2, 2)
    assert spec.n_sites == 8
    assert spec.n_bonds == 12
    assert spec.color_counts() == {"x": 4, "y": 4, "z": 4}


def test_yao_kivelson_two_by_two():
    assert build_lattice("yao-kivelson", 2, 2).n_sites == 24


def test_below_minimum_size():
    with pytest.raises(ConfigurationError):
        build_lattice("honeycomb", 1, 1)


@pytest.mark.parametrize(
    "geometry, L",
    [("kekule", 4), ("honeycomb-nnn", 2), ("cardy-l3d", (4, 6)), ("nonsense", 4)],
)
def test_unsupported_combinations(geometry, L):
    Lx, Ly = L if isinstance(L, tuple) else (L, L)
    with pytest.raises(ConfigurationError):
        build_lattice(geometry, Lx, Ly)


def test_geometry_aliases():
    assert Geometry.parse("YK") is Geometry.YAO_KIVELSON
    assert Geometry.parse("l_lattice") is Geometry.CARDY_L3D


@pytest.mark.parametrize("geometry", GEOMETRIES)
def test_site_counts_and_dimer(geometry):
    L = 6
    spec = build_lattice(geometry, L)
    per_cell = {"honeycomb": 2, "kekule": 2, "honeycomb-nnn": 2, "yao-kivelson": 6, "cardy-l3d": 4}[geometry]
    assert spec.n_sites == per_cell * L * L
    d = spec.dimer
    assert np.all(d[d] == np.arange(spec.n_sites))
    assert np.all(d != np.arange(spec.n_sites))


@pytest.mark.parametrize("geometry", ["honeycomb", "kekule", "yao-kivelson"])
def test_dimer_is_a_lattice_bond(geometry):
    spec = build_lattice(geometry, 6)
    bonds = {tuple(sorted(b)) for b in spec.bonds.tolist()}
    assert all(tuple(sorted((s, int(spec.dimer[s])))) in bonds for s in range(spec.n_sites))


def test_set_weights_examples():
    spec = build_lattice("honeycomb", 4)
    assert set_weights(spec, {"x": 1, "y": 1, "z": 1}).weights == pytest.approx({"x": 1 / 3, "y": 1 / 3, "z": 1 / 3})
    assert set_weights(spec, {"x": 1, "y": 1, "z": 0}).weights == pytest.approx({"x": 0.5, "y": 0.5, "z": 0.0})
    nnn = build_lattice("honeycomb-nnn", 4)
    assert set_weights(nnn, {"x": 2, "y": 1, "z": 1, "j": 0}).weights == pytest.approx({"x": 0.5, "y": 0.25, "z": 0.25, "j": 0.0})


@pytest.mark.parametrize("raw", [{"x": 0, "y": 0, "z": 0}, {"x": -1, "y": 1}, {"q": 1.0}, {"x": float("nan")}])
def test_set_weights_rejects(raw):
    with pytest.raises(ConfigurationError):
        set_weights(build_lattice("honeycomb", 4), raw)


@given(st.lists(st.floats(0.0, 10.0), min_size=3, max_size=3).filter(lambda w: sum(w) > 1e-6))
def test_set_weights_normalizes(w):
    spec = set_weights(build_lattice("honeycomb", 2), dict(zip("xyz", w)))
    assert sum(spec.weights.values()) == pytest.approx(1.0)
    assert all(v >= 0 for v in spec.weights.values())


def test_frustration_degrees():
    honey = build_lattice("honeycomb", 4)
    assert set(frustration_graph(honey).degrees().tolist()) == {4}
    nnn = build_lattice("honeycomb-nnn", 4)
    assert set(frustration_graph(nnn, colors=["j"]).degrees().tolist()) == {10}
    single = frustration_graph_from_bonds(4, np.array([[0, 1]]))
    assert single.degrees().tolist() == [0]


def test_coordination():
    assert set(coordination(build_lattice("honeycomb", 4)).tolist()) == {3}
    assert set(coordination(build_lattice("honeycomb-nnn", 4), ["j"]).tolist()) == {6}


def test_orientability():
    honey = build_lattice("honeycomb", 4)
    assert is_orientable(honey)
    nnn = set_weights(build_lattice("honeycomb-nnn", 4), weights_for_cut("honeycomb-nnn", 0.5))
    assert not is_orientable(nnn)
    nnn_off = set_weights(build_lattice("honeycomb-nnn", 4), {"x": 1, "y": 1, "z": 1, "j": 0})
    assert is_orientable(nnn_off)
    cardy = build_lattice("cardy-l3d", 4)
    assert is_orientable(set_weights(cardy, {"p": 0.0, "q": 0.0}))
    assert not is_orientable(set_weights(cardy, {"p": 0.3, "q": 0.3}))


def test_cut_weights_sum_to_one():
    for geo in ("honeycomb", "kekule"):
        w = weights_for_cut(geo, 0.6)
        assert sum(w.values()) == pytest.approx(1.0)
    assert weights_for_cut("honeycomb", 0.6)["x"] == pytest.approx(0.6)


def test_nnn_cut_ratios():
    # raw weights are relative; set_weights normalizes them
    w = weights_for_cut("honeycomb-nnn", 0.7)
    assert w["y"] == w["z"] == pytest.approx(0.1)
    assert w["j"] == pytest.approx(2 * w["y"])
    spec = set_weights(build_lattice("honeycomb-nnn", 4), w)
    assert sum(spec.weights.values()) == pytest.approx(1.0)


@pytest.mark.parametrize("geometry", GEOMETRIES)
def test_translations_preserve_colored_bonds(geometry):
    spec = build_lattice(geometry, 6)
    table = {(min(a, b), max(a, b)): c for (a, b), c in zip(spec.bonds.tolist(), spec.bond_color.tolist())}
    for dx, dy in spec.shifts()[:: max(1, len(spec.shifts()) // 7)]:
        perm = spec.translation(int(dx), int(dy))
        assert sorted(perm.tolist()) == list(range(spec.n_sites))
        for (a, b), c in table.items():
            key = (min(perm[a], perm[b]), max(perm[a], perm[b]))
            assert table[key] == c


def test_kekule_rejects_bad_shift():
    spec = build_lattice("kekule", 6)
    with pytest.raises(ConfigurationError):
        spec.translation(1, 0)
    spec.translation(1, 1)


def test_custom_lattice():
    spec = custom_lattice(4, [(0, 1), (1, 2), (2, 3)])
    assert spec.n_sites == 4 and spec.n_bonds == 3
    with pytest.raises(ConfigurationError):
        custom_lattice(3, [(0, 0)])
