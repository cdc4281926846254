"""Circuit geometries: sites, colored bond tables and measurement weights.

All lattices are periodic in both spatial directions.  Sites are indexed
row-major over unit cells with a fixed intra-cell order,

    site = (j * L_x + i) * n_sub + c,

so a translation by whole unit cells is pure index arithmetic.
"""
from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass, field, replace
from typing import Dict, Iterable, Mapping, Optional, Sequence, Tuple

import numpy as np

from .errors import ConfigurationError

COLORS: Tuple[str, ...] = ("x", "y", "z", "j", "r", "g", "b", "p", "q")
COLOR_INDEX: Dict[str, int] = {c: k for k, c in enumerate(COLORS)}

# vertex resolutions on the 3D L-lattice
RESOLVE_TURN, RESOLVE_PASS, RESOLVE_CROSS = 0, 2, 1


class Geometry(str, enum.Enum):
    HONEYCOMB = "honeycomb"
    KEKULE = "kekule"
    HONEYCOMB_NNN = "honeycomb-nnn"
    YAO_KIVELSON = "yao-kivelson"
    CARDY_L3D = "cardy-l3d"
    CUSTOM = "custom"

    @classmethod
    def parse(cls, value: "Geometry | str") -> "Geometry":
        if isinstance(value, Geometry):
            return value
        key = str(value).strip().lower().replace("_", "-")
        aliases = {
            "kekule-honeycomb": "kekule",
            "kekulehoneycomb": "kekule",
            "nnn": "honeycomb-nnn",
            "honeycombnnn": "honeycomb-nnn",
            "yk": "yao-kivelson",
            "yaokivelson": "yao-kivelson",
            "l-lattice": "cardy-l3d",
            "cardyl3d": "cardy-l3d",
        }
        key = aliases.get(key, key)
        try:
            return cls(key)
        except ValueError:
            raise ConfigurationError(f"unknown geometry {value!r}") from None


GEOMETRY_COLORS: Dict[Geometry, Tuple[str, ...]] = {
    Geometry.HONEYCOMB: ("x", "y", "z"),
    Geometry.KEKULE: ("r", "g", "b"),
    Geometry.HONEYCOMB_NNN: ("x", "y", "z", "j"),
    Geometry.YAO_KIVELSON: ("x", "y", "z", "r", "g", "b"),
    Geometry.CARDY_L3D: ("p", "q"),
}

# honeycomb lattice vectors and the A->B bond vectors (unit bond length)
_S3 = np.sqrt(3.0)
_DELTA = np.array([[0.0, 1.0], [-_S3 / 2, -0.5], [_S3 / 2, -0.5]])  # z, x, y
_A1 = _DELTA[0] - _DELTA[1]
_A2 = _DELTA[0] - _DELTA[2]


@dataclass(frozen=True, eq=False)
class LatticeSpec:
    """Immutable description of one circuit geometry.

    ``bonds`` holds site pairs, ``bond_color`` indexes into :data:`COLORS`.
    ``dimer`` is the fixed perfect matching used for pure temporal
    boundaries.  For the L-lattice the bonds are four-leg vertices and
    ``schedule`` lists them in the order they act within one time step.
    """

    geometry: Geometry
    L_x: int
    L_y: int
    n_sub: int
    cell: np.ndarray
    sublattice: np.ndarray
    position: np.ndarray
    bonds: np.ndarray
    bond_color: np.ndarray
    dimer: np.ndarray
    weights: Mapping[str, float] = field(default_factory=dict)
    schedule: Optional[Tuple[np.ndarray, ...]] = None
    shift_period: Tuple[int, int] = (1, 1)
    kekule_shift: bool = False

    @property
    def n_sites(self) -> int:
        return int(self.cell.shape[0])

    @property
    def n_bonds(self) -> int:
        return int(self.bonds.shape[0])

    @property
    def colors(self) -> Tuple[str, ...]:
        return GEOMETRY_COLORS.get(self.geometry, tuple(sorted(set(COLORS[c] for c in self.bond_color))))

    @property
    def is_vertex_model(self) -> bool:
        return self.schedule is not None

    def extent(self, axis: str) -> int:
        return self.L_x if axis == "x" else self.L_y

    def site_index(self, i: int, j: int, c: int = 0) -> int:
        return ((j % self.L_y) * self.L_x + (i % self.L_x)) * self.n_sub + c

    def color_counts(self) -> Dict[str, int]:
        counts = np.bincount(self.bond_color, minlength=len(COLORS))
        return {COLORS[k]: int(counts[k]) for k in range(len(COLORS)) if counts[k]}

    def bond_probabilities(self) -> np.ndarray:
        """Per-bond sampling probability: color weight spread uniformly over its bonds."""
        if self.is_vertex_model:
            raise ConfigurationError("vertex lattices have no bond sampling distribution")
        counts = np.bincount(self.bond_color, minlength=len(COLORS)).astype(float)
        w = np.array([self.weights.get(c, 0.0) for c in COLORS])
        per = np.divide(w, counts, out=np.zeros_like(w), where=counts > 0)
        return per[self.bond_color]

    def resolution_probabilities(self) -> Tuple[float, float, float]:
        """(turn, cross, pass) probabilities for the L-lattice vertices."""
        p = float(self.weights.get("p", 0.0))
        q = float(self.weights.get("q", 0.0))
        return 1.0 - p - q, p, q

    def is_valid_shift(self, dx: int, dy: int) -> bool:
        if self.kekule_shift:
            return (dx - dy) % 3 == 0
        return dx % self.shift_period[0] == 0 and dy % self.shift_period[1] == 0

    def shifts(self) -> np.ndarray:
        """All translations (dx, dy) that map the colored lattice onto itself."""
        dx, dy = np.meshgrid(np.arange(self.L_x), np.arange(self.L_y), indexing="ij")
        dx, dy = dx.ravel(), dy.ravel()
        if self.kekule_shift:
            keep = (dx - dy) % 3 == 0
        else:
            keep = (dx % self.shift_period[0] == 0) & (dy % self.shift_period[1] == 0)
        return np.stack([dx[keep], dy[keep]], axis=1).astype(np.int64)

    def translation(self, dx: int, dy: int) -> np.ndarray:
        """Site permutation for a translation by (dx, dy) unit cells."""
        if not self.is_valid_shift(dx, dy):
            raise ConfigurationError(f"({dx}, {dy}) is not a symmetry translation of {self.geometry.value}")
        n = self.n_sites
        s = np.arange(n)
        c = s % self.n_sub
        cellidx = s // self.n_sub
        i = cellidx % self.L_x
        j = cellidx // self.L_x
        return ((((j + dy) % self.L_y) * self.L_x + (i + dx) % self.L_x) * self.n_sub + c).astype(np.int64)


@dataclass(frozen=True)
class FrustrationGraph:
    """Bonds as nodes; two bonds are adjacent when they share a site."""

    n_nodes: int
    edges: np.ndarray

    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.n_nodes, dtype=np.int64)
        if len(self.edges):
            np.add.at(deg, self.edges[:, 0], 1)
            np.add.at(deg, self.edges[:, 1], 1)
        return deg


def _cells(L_x: int, L_y: int, n_sub: int) -> Tuple[np.ndarray, np.ndarray]:
    s = np.arange(L_x * L_y * n_sub)
    cellidx = s // n_sub
    cell = np.stack([cellidx % L_x, cellidx // L_x], axis=1)
    return cell.astype(np.int64), (s % n_sub).astype(np.int64)


def _honeycomb_tables(L_x: int, L_y: int):
    """A(i,j)=2c, B(i,j)=2c+1; bond directions z, x, y from every A site."""
    idx = lambda i, j, c: ((j % L_y) * L_x + (i % L_x)) * 2 + c  # noqa: E731
    bonds, direction, cellij = [], [], []
    for j in range(L_y):
        for i in range(L_x):
            a = idx(i, j, 0)
            bonds.append((a, idx(i, j, 1)))
            bonds.append((a, idx(i - 1, j, 1)))
            bonds.append((a, idx(i, j - 1, 1)))
            direction.extend([0, 1, 2])
            cellij.extend([(i, j)] * 3)
    return np.array(bonds, dtype=np.int64), np.array(direction), np.array(cellij)


def _check_size(L_x: int, L_y: int, minimum: int = 2) -> None:
    if int(L_x) != L_x or int(L_y) != L_y:
        raise ConfigurationError("linear dimensions must be integers")
    if L_x < minimum or L_y < minimum:
        raise ConfigurationError(f"linear dimensions must be >= {minimum}, got ({L_x}, {L_y})")


def build_lattice(geometry: "Geometry | str", L_x: int, L_y: Optional[int] = None) -> LatticeSpec:
    """Construct the periodic lattice for ``geometry`` with L_x x L_y unit cells."""
    geometry = Geometry.parse(geometry)
    L_y = L_x if L_y is None else L_y
    if geometry is Geometry.CUSTOM:
        raise ConfigurationError("use custom_lattice() for hand-made bond tables")
    if geometry is Geometry.HONEYCOMB_NNN:
        # L = 2 would put two copies of the same next-nearest bond on the torus
        _check_size(L_x, L_y, 3)
    else:
        _check_size(L_x, L_y, 2)

    if geometry in (Geometry.HONEYCOMB, Geometry.KEKULE, Geometry.HONEYCOMB_NNN):
        return _build_honeycomb_family(geometry, L_x, L_y)
    if geometry is Geometry.YAO_KIVELSON:
        return _build_yao_kivelson(L_x, L_y)
    if L_x != L_y:
        raise ConfigurationError("the L-lattice is built with unit aspect ratio (L_x == L_y)")
    return _build_l_lattice(L_x)


def _build_honeycomb_family(geometry: Geometry, L_x: int, L_y: int) -> LatticeSpec:
    if geometry is Geometry.KEKULE and (L_x % 3 or L_y % 3):
        raise ConfigurationError("the Kekule pattern needs L_x and L_y divisible by 3")
    cell, sub = _cells(L_x, L_y, 2)
    position = cell[:, :1] * _A1 + cell[:, 1:] * _A2 + sub[:, None] * _DELTA[0]
    bonds, direction, cellij = _honeycomb_tables(L_x, L_y)
    if geometry is Geometry.KEKULE:
        # proper 3-edge coloring with a sqrt(3) x sqrt(3) superstructure
        color_idx = (direction + cellij[:, 0] - cellij[:, 1]) % 3
        colors = np.array([COLOR_INDEX[c] for c in ("r", "g", "b")])[color_idx]
    else:
        colors = np.array([COLOR_INDEX[c] for c in ("z", "x", "y")])[direction]
    if geometry is Geometry.HONEYCOMB_NNN:
        idx = lambda i, j, c: ((j % L_y) * L_x + (i % L_x)) * 2 + c  # noqa: E731
        extra = []
        for j in range(L_y):
            for i in range(L_x):
                for c in (0, 1):
                    s = idx(i, j, c)
                    extra.append((s, idx(i + 1, j, c)))
                    extra.append((s, idx(i, j + 1, c)))
                    extra.append((s, idx(i + 1, j - 1, c)))
        bonds = np.vstack([bonds, np.array(extra, dtype=np.int64)])
        colors = np.concatenate([colors, np.full(len(extra), COLOR_INDEX["j"])])
    if geometry is Geometry.KEKULE:
        dimer_color = COLOR_INDEX["b"]
    else:
        dimer_color = COLOR_INDEX["z"]
    dimer = _dimer_from_color(len(cell), bonds, colors, dimer_color)
    names = GEOMETRY_COLORS[geometry]
    weights = {c: 1.0 / len(names) for c in names}
    return LatticeSpec(
        geometry=geometry,
        L_x=L_x,
        L_y=L_y,
        n_sub=2,
        cell=cell,
        sublattice=sub.astype(np.int8),
        position=position,
        bonds=bonds,
        bond_color=colors.astype(np.int8),
        dimer=dimer,
        weights=weights,
        kekule_shift=geometry is Geometry.KEKULE,
    )


def _build_yao_kivelson(L_x: int, L_y: int) -> LatticeSpec:
    # intra-cell order: triangle around A with corners pointing z, x, y (0..2),
    # then triangle around B (3..5); corner d of A couples to corner d of B.
    cell, sub = _cells(L_x, L_y, 6)
    corner = sub % 3
    is_b = sub >= 3
    base = cell[:, :1] * _A1 + cell[:, 1:] * _A2 + is_b[:, None] * _DELTA[0]
    offset = np.where(is_b[:, None], -1.0, 1.0) * _DELTA[corner] / 3.0
    position = base + offset
    idx = lambda i, j, c: ((j % L_y) * L_x + (i % L_x)) * 6 + c  # noqa: E731
    bonds, colors = [], []
    link_color = ("z", "x", "y")
    tri_color = ("r", "g", "b")  # named after the corner opposite the edge
    for j in range(L_y):
        for i in range(L_x):
            for t in (0, 3):
                for opp in range(3):
                    u, v = [k for k in range(3) if k != opp]
                    bonds.append((idx(i, j, t + u), idx(i, j, t + v)))
                    colors.append(COLOR_INDEX[tri_color[opp]])
            bonds.append((idx(i, j, 0), idx(i, j, 3)))
            bonds.append((idx(i, j, 1), idx(i - 1, j, 4)))
            bonds.append((idx(i, j, 2), idx(i, j - 1, 5)))
            colors.extend(COLOR_INDEX[c] for c in link_color)
    bonds = np.array(bonds, dtype=np.int64)
    colors = np.array(colors, dtype=np.int8)
    # triangles are odd cycles, so the pure boundary pairs sites along the
    # inter-triangle links, which form a perfect matching
    dimer = np.full(len(cell), -1, dtype=np.int64)
    for (a, b), c in zip(bonds, colors):
        if COLORS[c] in link_color:
            dimer[a], dimer[b] = b, a
    return LatticeSpec(
        geometry=Geometry.YAO_KIVELSON,
        L_x=L_x,
        L_y=L_y,
        n_sub=6,
        cell=cell,
        sublattice=(is_b).astype(np.int8),
        position=position,
        bonds=bonds,
        bond_color=colors,
        dimer=dimer,
        weights=yao_kivelson_weights(0.5),
    )


def _build_l_lattice(L: int) -> LatticeSpec:
    # strands on a 2L x 2L grid, 2 x 2 per unit cell: c = 2*dy + dx.
    cell, sub = _cells(L, L, 4)
    X = 2 * cell[:, 0] + sub % 2
    Y = 2 * cell[:, 1] + sub // 2
    position = np.stack([X, Y], axis=1).astype(float) / 2.0
    checker = ((X + Y) % 2).astype(np.int8)

    def strand(x: int, y: int) -> int:
        x %= 2 * L
        y %= 2 * L
        return ((y // 2) * L + x // 2) * 4 + 2 * (y % 2) + (x % 2)

    sublayers = []
    for dx, dy, parity in ((1, 0, 0), (0, 1, 0), (1, 0, 1), (0, 1, 1)):
        pairs = []
        for y in range(2 * L):
            for x in range(2 * L):
                coord = x if dx else y
                if coord % 2 == parity:
                    pairs.append((strand(x, y), strand(x + dx, y + dy)))
        sublayers.append(np.array(pairs, dtype=np.int64))
    bonds = np.vstack(sublayers)
    offsets = np.cumsum([0] + [len(s) for s in sublayers])
    schedule = tuple(np.arange(offsets[k], offsets[k + 1]) for k in range(4))
    dimer = np.empty(len(cell), dtype=np.int64)
    dimer[sublayers[0][:, 0]] = sublayers[0][:, 1]
    dimer[sublayers[0][:, 1]] = sublayers[0][:, 0]
    return LatticeSpec(
        geometry=Geometry.CARDY_L3D,
        L_x=L,
        L_y=L,
        n_sub=4,
        cell=cell,
        sublattice=checker,
        position=position,
        bonds=bonds,
        bond_color=np.full(len(bonds), COLOR_INDEX["p"], dtype=np.int8),
        dimer=dimer,
        weights={"p": 1.0 / 3.0, "q": 1.0 / 3.0},
        schedule=schedule,
    )


def custom_lattice(
    n_sites: int,
    bonds: Sequence[Tuple[int, int]],
    colors: Optional[Sequence[str]] = None,
    dimer: Optional[Sequence[int]] = None,
) -> LatticeSpec:
    """Small hand-made lattice (chain coordinates, no translations), for tests."""
    bonds_arr = np.array(bonds, dtype=np.int64).reshape(-1, 2)
    if len(bonds_arr) and (np.any(bonds_arr[:, 0] == bonds_arr[:, 1]) or bonds_arr.max() >= n_sites or bonds_arr.min() < 0):
        raise ConfigurationError("bonds must connect two distinct existing sites")
    colors = list(colors) if colors is not None else ["x"] * len(bonds_arr)
    color_idx = np.array([COLOR_INDEX[c] for c in colors], dtype=np.int8)
    if dimer is None:
        dimer_arr = np.arange(n_sites, dtype=np.int64) ^ 1
        if n_sites % 2:
            raise ConfigurationError("default dimer covering needs an even number of sites")
    else:
        dimer_arr = np.asarray(dimer, dtype=np.int64)
    cell = np.stack([np.arange(n_sites), np.zeros(n_sites, dtype=np.int64)], axis=1)
    used = sorted(set(colors))
    return LatticeSpec(
        geometry=Geometry.CUSTOM,
        L_x=n_sites,
        L_y=1,
        n_sub=1,
        cell=cell,
        sublattice=(np.arange(n_sites) % 2).astype(np.int8),
        position=cell.astype(float),
        bonds=bonds_arr,
        bond_color=color_idx,
        dimer=dimer_arr,
        weights={c: 1.0 / len(used) for c in used},
        shift_period=(n_sites, 1),
    )


def _dimer_from_color(n: int, bonds: np.ndarray, colors: np.ndarray, color: int) -> np.ndarray:
    dimer = np.full(n, -1, dtype=np.int64)
    sel = bonds[colors == color]
    dimer[sel[:, 0]] = sel[:, 1]
    dimer[sel[:, 1]] = sel[:, 0]
    if np.any(dimer < 0):
        raise ConfigurationError("dimer color does not cover every site")
    return dimer


def yao_kivelson_weights(K: float) -> Dict[str, float]:
    """Inter-triangle links share weight K, the three triangle colors share 1 - K."""
    J = 1.0 - K
    return {"x": K, "y": K, "z": K, "r": J, "g": J, "b": J}


def set_weights(spec: LatticeSpec, raw: Mapping[str, float]) -> LatticeSpec:
    """Return a copy of ``spec`` with normalized color weights.

    For the L-lattice the weights are the vertex-resolution probabilities
    p (crossing) and q (pass-through); the remaining 1 - p - q turns.
    """
    allowed = set(spec.colors)
    unknown = set(raw) - allowed
    if unknown:
        raise ConfigurationError(f"colors {sorted(unknown)} do not exist on {spec.geometry.value}")
    vals = {c: float(raw.get(c, 0.0)) for c in spec.colors}
    if any(not np.isfinite(v) or v < 0 for v in vals.values()):
        raise ConfigurationError("weights must be finite and non-negative")
    if spec.is_vertex_model:
        if vals["p"] + vals["q"] > 1.0 + 1e-12:
            raise ConfigurationError("resolution probabilities need p + q <= 1")
        return replace(spec, weights=vals)
    total = sum(vals.values())
    if total <= 0:
        raise ConfigurationError("at least one weight must be positive")
    return replace(spec, weights={c: v / total for c, v in vals.items()})


def weights_for_cut(geometry: "Geometry | str", K: float) -> Dict[str, float]:
    """Weights along the one-parameter cuts used for the transitions.

    honeycomb: K_x = K, K_y = K_z = (1 - K)/2.
    honeycomb-nnn: K_x = K, K_y = K_z = J = (1 - K)/3 with J the weight of
    each of the two next-nearest sublattice classes, so the j color carries
    2J in total.
    yao-kivelson: links K, triangles 1 - K.
    cardy-l3d: p = q = K.
    """
    geometry = Geometry.parse(geometry)
    if geometry is Geometry.HONEYCOMB:
        return {"x": K, "y": (1 - K) / 2, "z": (1 - K) / 2}
    if geometry is Geometry.HONEYCOMB_NNN:
        return {"x": K, "y": (1 - K) / 3, "z": (1 - K) / 3, "j": 2 * (1 - K) / 3}
    if geometry is Geometry.KEKULE:
        return {"r": K, "g": (1 - K) / 2, "b": (1 - K) / 2}
    if geometry is Geometry.YAO_KIVELSON:
        return yao_kivelson_weights(K)
    if geometry is Geometry.CARDY_L3D:
        return {"p": K, "q": K}
    raise ConfigurationError(f"no parameter cut defined for {geometry.value}")


def _active_bonds(spec: LatticeSpec) -> np.ndarray:
    if spec.is_vertex_model:
        return spec.bonds
    w = np.array([spec.weights.get(COLORS[c], 0.0) for c in spec.bond_color])
    return spec.bonds[w > 0]


def two_coloring(n_sites: int, bonds: np.ndarray) -> Optional[np.ndarray]:
    """BFS 2-coloring of the bond graph; None when an odd cycle exists."""
    adj = [[] for _ in range(n_sites)]
    for a, b in bonds:
        adj[a].append(b)
        adj[b].append(a)
    color = np.full(n_sites, -1, dtype=np.int64)
    for start in range(n_sites):
        if color[start] >= 0:
            continue
        color[start] = 0
        queue = deque([start])
        while queue:
            u = queue.popleft()
            for v in adj[u]:
                if color[v] < 0:
                    color[v] = 1 - color[u]
                    queue.append(v)
                elif color[v] == color[u]:
                    return None
    return color


def is_orientable(spec: LatticeSpec) -> bool:
    """True when the loops admit a consistent orientation."""
    if spec.is_vertex_model and spec.weights.get("p", 0.0) > 0:
        return False
    return two_coloring(spec.n_sites, _active_bonds(spec)) is not None


def frustration_graph(spec: LatticeSpec, colors: Optional[Iterable[str]] = None) -> FrustrationGraph:
    """Graph whose nodes are bonds, linked when two bonds share a site."""
    bonds = spec.bonds
    if colors is not None:
        keep = np.isin(spec.bond_color, [COLOR_INDEX[c] for c in colors])
        bonds = bonds[keep]
    return frustration_graph_from_bonds(spec.n_sites, bonds)


def frustration_graph_from_bonds(n_sites: int, bonds: np.ndarray) -> FrustrationGraph:
    incident = [[] for _ in range(n_sites)]
    for k, (a, b) in enumerate(np.asarray(bonds).reshape(-1, 2)):
        incident[a].append(k)
        incident[b].append(k)
    edges = set()
    for lst in incident:
        for x in range(len(lst)):
            for y in range(x + 1, len(lst)):
                u, v = lst[x], lst[y]
                edges.add((min(u, v), max(u, v)))
    arr = np.array(sorted(edges), dtype=np.int64).reshape(-1, 2)
    return FrustrationGraph(n_nodes=len(bonds), edges=arr)


def coordination(spec: LatticeSpec, colors: Optional[Iterable[str]] = None) -> np.ndarray:
    bonds = spec.bonds
    if colors is not None:
        bonds = bonds[np.isin(spec.bond_color, [COLOR_INDEX[c] for c in colors])]
    return np.bincount(bonds.ravel(), minlength=spec.n_sites)
