"""Loop-model engine: pairing states, transfer-matrix blocks and closures.

A measurement of the pair (l, m) re-pairs world lines: with prior arcs
(k, l, a) and (m, n, b) it produces (k, n, a + b + 1) and (l, m, 1); when
l and m are already paired with length a it closes a loop of length a + 1.
Only measurement links carry length.

A :class:`CircuitBlock` stores the connectivity between the N bottom and N
top nodes of a slab of circuit as an involution over node indices
(bottom s -> s, top s -> N + s, ancillas from 2N on) with one length per arc
stored on both endpoints.
"""
from __future__ import annotations

import enum
import functools
from dataclasses import dataclass, field
from typing import List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from . import _kernels as K
from .errors import ArgumentError, CompositionError, ConfigurationError
from .lattice import COLORS, LatticeSpec

OPEN = -1
INDEX = np.int32


class Closure(str, enum.Enum):
    PURE_BOTTOM = "pure-bottom"
    PURE_BOTH = "pure-both"
    MIXED_BOTTOM = "mixed-bottom"
    PERIODIC_TIME = "periodic-time"

    @classmethod
    def parse(cls, value: "Closure | str") -> "Closure":
        if isinstance(value, Closure):
            return value
        key = str(value).strip().lower().replace("_", "-")
        compact = {"purebottom": "pure-bottom", "pureboth": "pure-both", "mixedbottom": "mixed-bottom", "periodictime": "periodic-time"}
        key = compact.get(key.replace("-", ""), key)
        try:
            return cls(key)
        except ValueError:
            raise ConfigurationError(f"unknown closure policy {value!r}") from None


# ----------------------------------------------------------------------------
# histograms


@dataclass
class LoopHistogram:
    """Closed-loop lengths in base-10^(1/8) bins with integer edges.

    Loops of length zero (world lines never touched by a measurement that
    close on themselves) are counted in ``n_zero`` and kept out of the bins.
    """

    counts: np.ndarray = field(default_factory=lambda: np.zeros(K.N_BINS, dtype=np.int64))
    total_loops: int = 0
    total_length: int = 0
    n_zero: int = 0

    edges = K.BIN_EDGES

    @classmethod
    def from_lengths(cls, lengths: Sequence[int]) -> "LoopHistogram":
        h = cls()
        for ell in lengths:
            h.add(int(ell))
        return h

    def add(self, ell: int, count: int = 1) -> None:
        if ell < 0:
            raise ArgumentError("loop lengths are non-negative")
        self.total_loops += count
        self.total_length += ell * count
        if ell == 0:
            self.n_zero += count
        else:
            self.counts[K.bin_index(ell, K.BIN_EDGES)] += count

    def merge(self, other: "LoopHistogram") -> "LoopHistogram":
        return LoopHistogram(
            self.counts + other.counts,
            self.total_loops + other.total_loops,
            self.total_length + other.total_length,
            self.n_zero + other.n_zero,
        )

    __add__ = merge

    def copy(self) -> "LoopHistogram":
        return LoopHistogram(self.counts.copy(), self.total_loops, self.total_length, self.n_zero)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, LoopHistogram):
            return NotImplemented
        return (
            np.array_equal(self.counts, other.counts)
            and self.total_loops == other.total_loops
            and self.total_length == other.total_length
            and self.n_zero == other.n_zero
        )

    @property
    def bin_low(self) -> np.ndarray:
        return K.BIN_EDGES[:-1]

    @property
    def bin_high(self) -> np.ndarray:
        return K.BIN_EDGES[1:]

    @property
    def bin_width(self) -> np.ndarray:
        """Number of integer lengths in each bin (zero for degenerate bins)."""
        return K.BIN_EDGES[1:] - K.BIN_EDGES[:-1]

    @property
    def bin_center(self) -> np.ndarray:
        lo = K.BIN_EDGES[:-1].astype(float)
        hi = K.BIN_EDGES[1:].astype(float) - 1.0
        return np.sqrt(lo * np.maximum(hi, lo))

    def density(self) -> np.ndarray:
        """Probability per unit length in each bin (over binned loops)."""
        n = self.counts.sum()
        width = self.bin_width
        out = np.zeros(K.N_BINS)
        ok = width > 0
        if n:
            out[ok] = self.counts[ok] / (width[ok] * n)
        return out


def merge_histograms(hists: Sequence[LoopHistogram]) -> LoopHistogram:
    out = LoopHistogram()
    for h in hists:
        out = out.merge(h)
    return out


# ----------------------------------------------------------------------------
# sequential pairing state


class PairingState:
    """Pairing of n nodes with per-arc lengths; OPEN nodes lead to the initial boundary.

    ``length[a]`` is the length of the arc ending at a (also for OPEN ends).
    Two OPEN ends joined by a measurement form an arc with both ends on the
    initial boundary; those are tallied in ``boundary_arcs``.
    """

    def __init__(self, n_nodes: int, pairs: Optional[Sequence[Tuple[int, int]]] = None):
        self.partner = np.full(n_nodes, OPEN, dtype=np.int64)
        self.length = np.zeros(n_nodes, dtype=np.int64)
        self.closed = LoopHistogram()
        self.boundary_arcs: List[int] = []
        self.n_measurements = 0
        for a, b in pairs or ():
            self.partner[a], self.partner[b] = b, a

    @classmethod
    def mixed(cls, n_nodes: int) -> "PairingState":
        return cls(n_nodes)

    @classmethod
    def from_dimers(cls, dimer: np.ndarray) -> "PairingState":
        st = cls(len(dimer))
        st.partner[:] = dimer
        return st

    def arc(self, a: int) -> Tuple[int, int]:
        return int(self.partner[a]), int(self.length[a])

    @property
    def n_open(self) -> int:
        return int(np.sum(self.partner == OPEN))

    def pairs(self) -> List[Tuple[int, int, int]]:
        out = []
        for a, b in enumerate(self.partner):
            if b > a:
                out.append((a, int(b), int(self.length[a])))
        return out

    def check(self) -> None:
        audit_involution(self.partner, allow_open=True)


def measure(state: PairingState, bond: Tuple[int, int]) -> PairingState:
    """Apply one parity measurement on the pair ``bond`` in place (O(1))."""
    l, m = int(bond[0]), int(bond[1])
    if l == m:
        raise ArgumentError("a measurement needs two distinct nodes")
    p, ln = state.partner, state.length
    k, n = int(p[l]), int(p[m])
    state.n_measurements += 1
    if k == m:
        state.closed.add(int(ln[l]) + 1)
    else:
        merged = int(ln[l] + ln[m] + 1)
        if k == OPEN and n == OPEN:
            state.boundary_arcs.append(merged)
        elif k == OPEN:
            p[n] = OPEN
            ln[n] = merged
        elif n == OPEN:
            p[k] = OPEN
            ln[k] = merged
        else:
            p[k], p[n] = n, k
            ln[k] = ln[n] = merged
        p[l], p[m] = m, l
    ln[l] = ln[m] = 1
    return state


def audit_involution(partner: np.ndarray, allow_open: bool = False) -> None:
    """Raise AssertionError unless ``partner`` is a fixed-point-free involution."""
    partner = np.asarray(partner)
    idx = np.arange(len(partner))
    paired = partner >= 0
    if not allow_open and not np.all(paired):
        raise AssertionError("unpaired nodes in a perfect matching")
    q = partner[paired]
    if np.any(q >= len(partner)):
        raise AssertionError("partner index out of range")
    if np.any(q == idx[paired]):
        raise AssertionError("fixed point in pairing")
    if np.any(partner[q] != idx[paired]):
        raise AssertionError("pairing is not an involution")


# ----------------------------------------------------------------------------
# blocks


@dataclass(frozen=True, eq=False)
class CircuitBlock:
    """Transfer matrix of a circuit slab (immutable after construction)."""

    spec: LatticeSpec
    depth: int
    partner: np.ndarray
    length: np.ndarray
    closed: LoopHistogram
    n_ops: int
    n_ancilla: int = 0
    seed_record: Tuple = ()
    ops: Optional[np.ndarray] = None

    @property
    def n_sites(self) -> int:
        return self.spec.n_sites

    @property
    def n_boundary(self) -> int:
        return 2 * self.spec.n_sites

    def arcs(self) -> List[Tuple[int, int, int]]:
        return [(a, int(b), int(self.length[a])) for a, b in enumerate(self.partner) if b > a]

    def arc_length_total(self) -> int:
        return int(self.length[self.partner >= 0].sum() // 2)

    def audit(self) -> None:
        """Involution audit plus the length bookkeeping identity."""
        audit_involution(self.partner)
        if self.arc_length_total() + self.closed.total_length != 2 * self.n_ops:
            raise AssertionError("arc and loop lengths do not add up to two per measurement")

    def same_as(self, other: "CircuitBlock") -> bool:
        return (
            self.depth == other.depth
            and np.array_equal(self.partner, other.partner)
            and np.array_equal(self.length, other.length)
            and self.closed == other.closed
        )


def identity_block(spec: LatticeSpec, record: bool = False) -> CircuitBlock:
    n = spec.n_sites
    partner = np.concatenate([np.arange(n, 2 * n), np.arange(n)]).astype(INDEX)
    return CircuitBlock(
        spec=spec,
        depth=0,
        partner=partner,
        length=np.zeros(2 * n, dtype=np.int64),
        closed=LoopHistogram(),
        n_ops=0,
        ops=np.zeros((0, 3), dtype=np.int64) if record else None,
    )


@functools.lru_cache(maxsize=32)
def _bond_sampler(spec: LatticeSpec):
    order = np.argsort(spec.bond_color, kind="stable")
    bonds = spec.bonds[order]
    colors = spec.bond_color[order]
    active = [c for c in spec.colors if spec.weights.get(c, 0.0) > 0]
    idx = np.array([COLORS.index(c) for c in active])
    start = np.searchsorted(colors, idx, side="left")
    stop = np.searchsorted(colors, idx, side="right")
    w = np.array([spec.weights[c] for c in active], dtype=float)
    return bonds, start, stop - start, w / w.sum()


def sample_layer_ops(spec: LatticeSpec, rng: np.random.Generator, n_measurements: Optional[int] = None) -> np.ndarray:
    """Draw one layer of operations as rows (l, m, kind)."""
    if spec.is_vertex_model:
        turn, cross, _ = spec.resolution_probabilities()
        rows = []
        for sub in spec.schedule:
            u = rng.random(len(sub))
            kind = np.where(u < turn, K.OP_MEASURE, np.where(u < turn + cross, K.OP_CROSS, K.OP_PASS))
            b = spec.bonds[sub]
            rows.append(np.column_stack([b, kind]))
        return np.vstack(rows).astype(np.int64)
    n = spec.n_sites if n_measurements is None else int(n_measurements)
    bonds, start, count, prob = _bond_sampler(spec)
    if not len(prob):
        raise ConfigurationError("no color has positive weight")
    cls = rng.choice(len(prob), size=n, p=prob)
    u = rng.random(n)
    j = start[cls] + np.minimum((u * count[cls]).astype(np.int64), count[cls] - 1)
    b = bonds[j]
    return np.column_stack([b, np.zeros(n, dtype=np.int64)])


def block_from_ops(spec: LatticeSpec, ops: np.ndarray, depth: int = 1, seed_record: Tuple = (), record: bool = False) -> CircuitBlock:
    """Apply operation rows (l, m, kind) in order to an identity block."""
    n = spec.n_sites
    partner = np.concatenate([np.arange(n, 2 * n), np.arange(n)]).astype(INDEX)
    length = np.zeros(2 * n, dtype=np.int64)
    hist = np.zeros(K.N_BINS, dtype=np.int64)
    ops = np.asarray(ops, dtype=np.int64).reshape(-1, 3)
    loops, loop_len, n_ops = K.apply_ops(partner, length, hist, K.BIN_EDGES, n, ops[:, 0].copy(), ops[:, 1].copy(), ops[:, 2].copy())
    closed = LoopHistogram(hist, int(loops), int(loop_len), 0)
    return CircuitBlock(
        spec=spec,
        depth=depth,
        partner=partner,
        length=length,
        closed=closed,
        n_ops=int(n_ops),
        seed_record=tuple(seed_record),
        ops=ops.copy() if record else None,
    )


def make_layer(
    spec: LatticeSpec,
    rng: np.random.Generator,
    record: bool = False,
    seed_record: Tuple = (),
    n_measurements: Optional[int] = None,
) -> CircuitBlock:
    """Depth-1 block from one layer of N measurements drawn i.i.d. by weight."""
    ops = sample_layer_ops(spec, rng, n_measurements)
    return block_from_ops(spec, ops, depth=1, seed_record=seed_record, record=record)


def _check_pair(a: CircuitBlock, b: CircuitBlock) -> None:
    if a.spec is b.spec:
        return
    if a.n_sites != b.n_sites or (a.spec.L_x, a.spec.L_y, a.spec.n_sub) != (b.spec.L_x, b.spec.L_y, b.spec.n_sub):
        raise CompositionError("blocks live on different lattices")


def _translation(spec: LatticeSpec, dx: int, dy: int) -> Tuple[np.ndarray, np.ndarray]:
    perm = spec.translation(dx, dy)
    inv = np.empty_like(perm)
    inv[perm] = np.arange(len(perm))
    return perm, inv


def compose(a: CircuitBlock, b: CircuitBlock, dx: int = 0, dy: int = 0, cuts: Sequence[int] = ()) -> CircuitBlock:
    """Glue a's top to the bottom of b translated by (dx, dy) unit cells.

    Sites listed in ``cuts`` are severed at the interface; each cut adds two
    ancilla terminals (a side first), which is how probes are inserted.
    Cut sites are labels of the glued (a-side) lattice.
    """
    _check_pair(a, b)
    spec = a.spec
    n = spec.n_sites
    perm, inv = _translation(spec, dx, dy)
    cut_sites = np.asarray(cuts, dtype=np.int64).reshape(-1)
    if len(set(cut_sites.tolist())) != len(cut_sites) or np.any((cut_sites < 0) | (cut_sites >= n)):
        raise ArgumentError("cut sites must be distinct valid sites")
    cut_of = np.full(n, -1, dtype=np.int64)
    cut_of[cut_sites] = np.arange(len(cut_sites))
    p, ln, hist, loops, loop_len, zeros = K.compose_blocks(
        a.partner, a.length, a.n_ancilla, b.partner, b.length, b.n_ancilla, n, perm, inv, cut_of, cut_sites, K.BIN_EDGES
    )
    interface = LoopHistogram(hist, int(loops), int(loop_len), int(zeros))
    ops = None
    if a.ops is not None and b.ops is not None:
        bo = b.ops.copy()
        bo[:, 0] = perm[bo[:, 0]]
        bo[:, 1] = perm[bo[:, 1]]
        cut_rows = np.column_stack([cut_sites, cut_sites, np.full(len(cut_sites), K.OP_CUT)]).astype(np.int64)
        ops = np.vstack([a.ops, cut_rows, bo])
    return CircuitBlock(
        spec=spec,
        depth=a.depth + b.depth,
        partner=p,
        length=ln,
        closed=a.closed.merge(b.closed).merge(interface),
        n_ops=a.n_ops + b.n_ops,
        n_ancilla=a.n_ancilla + b.n_ancilla + 2 * len(cut_sites),
        seed_record=(a.seed_record, b.seed_record, (int(dx), int(dy))),
        ops=ops,
    )


def compose_chain(blocks: Sequence[CircuitBlock], shifts: Sequence[Tuple[int, int]], cuts: Sequence[Sequence[int]] = ()) -> CircuitBlock:
    """Left fold of :func:`compose`; ``shifts[k]`` is applied to ``blocks[k + 1]``.

    Shifts are cumulative in the frame of the first block.
    """
    out = blocks[0]
    cuts = list(cuts) + [()] * (len(blocks) - 1 - len(cuts))
    for k, blk in enumerate(blocks[1:]):
        dx, dy = shifts[k]
        out = compose(out, blk, dx, dy, cuts[k])
    return out


# ----------------------------------------------------------------------------
# closures


@dataclass(frozen=True, eq=False)
class SurfaceRecord:
    """Final-time pairing: top-site arcs with bulk lengths, open sites, probe arcs.

    ``unpaired`` lists top sites whose arc runs to the initial boundary.
    ``ancilla_partner[k]`` is the ancilla paired with ancilla k, or -1 when
    k is paired with a boundary node.
    """

    spec: LatticeSpec
    pairs: np.ndarray
    lengths: np.ndarray
    unpaired: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    ancilla_partner: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    ancilla_length: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))

    @property
    def n_pairs(self) -> int:
        return int(len(self.pairs))

    def partner_table(self) -> np.ndarray:
        table = np.full(self.spec.n_sites, -1, dtype=np.int64)
        if len(self.pairs):
            table[self.pairs[:, 0]] = self.pairs[:, 1]
            table[self.pairs[:, 1]] = self.pairs[:, 0]
        return table

    def canonical(self) -> List[Tuple[int, int, int]]:
        return sorted((int(min(a, b)), int(max(a, b)), int(ell)) for (a, b), ell in zip(self.pairs, self.lengths))


class ClosureResult(NamedTuple):
    surface: SurfaceRecord
    closed: LoopHistogram
    spanning: int
    spanning_length: int
    policy: Closure = Closure.MIXED_BOTTOM


def _glue_map(block: CircuitBlock, policy: Closure, seam_cuts: np.ndarray) -> np.ndarray:
    n = block.n_sites
    glue = np.full(2 * n + block.n_ancilla, -1, dtype=np.int64)
    dimer = block.spec.dimer
    if policy in (Closure.PURE_BOTTOM, Closure.PURE_BOTH):
        glue[:n] = dimer
    if policy is Closure.PURE_BOTH:
        glue[n : 2 * n] = n + dimer
    if policy is Closure.PERIODIC_TIME:
        glue[:n] = np.arange(n, 2 * n)
        glue[n : 2 * n] = np.arange(n)
        for c, s in enumerate(seam_cuts):
            glue[n + s] = -2 - 2 * c
            glue[s] = -2 - (2 * c + 1)
    return glue


def close_boundary(block: CircuitBlock, policy: "Closure | str", seam_cuts: Sequence[int] = ()) -> ClosureResult:
    """Impose temporal boundary conditions on a block.

    pure-bottom pairs the bottom nodes along the lattice's dimer covering;
    mixed-bottom leaves them open so top-bottom arcs are spanning;
    pure-both also pairs the top nodes; periodic-time glues top to bottom.
    ``seam_cuts`` (periodic-time only) sever sites at the glued seam and
    append probe terminals after the block's own ancillas.
    """
    policy = Closure.parse(policy)
    n = block.n_sites
    seam = np.asarray(seam_cuts, dtype=np.int64).reshape(-1)
    if len(seam) and policy is not Closure.PERIODIC_TIME:
        raise ArgumentError("seam cuts need the periodic-time closure")
    glue = _glue_map(block, policy, seam)
    p, ln, hist, loops, loop_len, zeros = K.glue_close(block.partner, block.length, glue, 2 * len(seam), K.BIN_EDGES)
    closed = block.closed.merge(LoopHistogram(hist, int(loops), int(loop_len), int(zeros)))

    top = np.arange(n, 2 * n)
    tp = p[n : 2 * n].astype(np.int64)
    tl = ln[n : 2 * n]
    mask_pair = (tp >= n) & (tp < 2 * n) & (tp > top)
    pairs = np.stack([top[mask_pair] - n, tp[mask_pair] - n], axis=1)
    lengths = tl[mask_pair].astype(np.int64)
    open_mask = (tp >= 0) & (tp < n)
    unpaired = top[open_mask] - n
    spanning = int(open_mask.sum())
    spanning_length = int(tl[open_mask].sum())

    anc = p[2 * n :].astype(np.int64)
    anc_len = ln[2 * n :].astype(np.int64)
    anc_partner = np.where(anc >= 2 * n, anc - 2 * n, -1)
    surface = SurfaceRecord(
        spec=block.spec,
        pairs=pairs.astype(np.int64),
        lengths=lengths,
        unpaired=unpaired.astype(np.int64),
        ancilla_partner=anc_partner,
        ancilla_length=anc_len,
    )
    return ClosureResult(surface, closed, spanning, spanning_length, policy)
