"""Independent reference implementations for tests.

``replay`` evolves one sequential pairing state bond by bond and closes the
temporal boundaries by gluing node pairs one at a time.  It shares the
measurement rule with the engine but none of the block composition or
closure code.  ``enumerate_small`` computes exact expectations over all
measurement sequences of tiny instances, and ``qseries`` evaluates theta and
eta functions by direct multiprecision summation.
"""
from __future__ import annotations

import os
from collections import defaultdict
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import mpmath
import numpy as np

from .errors import ArgumentError, DomainError
from .lattice import COLORS, LatticeSpec
from .loopstate import Closure, LoopHistogram

OP_CUT = 3

_pure = os.environ.get("MAJOLOOP_PURE", "").strip().lower() not in ("", "0", "false", "no")
try:
    from numba import njit as _njit
except ImportError:  # pragma: no cover
    _njit = None


def _maybe_jit(fn):
    if _njit is None or _pure:
        return fn
    return _njit(cache=True)(fn)


@_maybe_jit
def _sequential(P, L, n_sites, ops, loops_out):
    """Run the op stream on node table P (sites first); returns loops closed."""
    n_loops = 0
    n_cut = 0
    for r in range(ops.shape[0]):
        l = ops[r, 0]
        m = ops[r, 1]
        kind = ops[r, 2]
        if kind == 2:
            continue
        if kind == 3:
            # sever the world line of site l: old end -> ancilla 2c, new start -> 2c+1
            x = 2 * n_sites + 2 * n_cut
            y = x + 1
            n_cut += 1
            k = P[l]
            P[k] = x
            P[x] = k
            L[x] = L[l]
            L[k] = L[l]
            P[l] = y
            P[y] = l
            L[l] = 0
            L[y] = 0
            continue
        k = P[l]
        n = P[m]
        if kind == 0:
            if k == m:
                loops_out[n_loops] = L[l] + 1
                n_loops += 1
            else:
                tot = L[l] + L[m] + 1
                P[k] = n
                P[n] = k
                L[k] = tot
                L[n] = tot
                P[l] = m
                P[m] = l
            L[l] = 1
            L[m] = 1
        else:
            if k == m:
                L[l] += 2
                L[m] += 2
            else:
                a = L[l] + 1
                b = L[m] + 1
                P[k] = m
                P[m] = k
                L[k] = a
                L[m] = a
                P[n] = l
                P[l] = n
                L[n] = b
                L[l] = b
    return n_loops


@dataclass
class ReplayResult:
    pairs: List[Tuple[int, int, int]]
    closed: LoopHistogram
    spanning: int
    spanning_length: int
    ancilla_partner: np.ndarray
    ancilla_length: np.ndarray
    loop_lengths: List[int]


class SequentialState:
    """Node table over sites (0..N-1), bottom ends (N..2N-1) and ancillas."""

    def __init__(self, spec: LatticeSpec, policy: "Closure | str", n_ancilla: int = 0):
        self.spec = spec
        self.policy = Closure.parse(policy)
        n = spec.n_sites
        self.n = n
        self.P = np.full(2 * n + n_ancilla, -1, dtype=np.int64)
        self.L = np.zeros(2 * n + n_ancilla, dtype=np.int64)
        if self.policy in (Closure.PURE_BOTTOM, Closure.PURE_BOTH):
            self.P[:n] = spec.dimer
        else:
            self.P[:n] = np.arange(n, 2 * n)
            self.P[n : 2 * n] = np.arange(n)
        self.loop_lengths: List[int] = []
        self.log: List[Tuple[int, int, int]] = []

    def run(self, ops: np.ndarray) -> None:
        ops = np.asarray(ops, dtype=np.int64).reshape(-1, 3)
        buf = np.zeros(max(1, len(ops)), dtype=np.int64)
        k = _sequential(self.P, self.L, self.n, ops, buf)
        self.loop_lengths.extend(int(v) for v in buf[:k])
        self.log.extend(map(tuple, ops.tolist()))

    def _glue(self, u: int, v: int) -> None:
        P, L = self.P, self.L
        if P[u] == v:
            self.loop_lengths.append(int(L[u]))
        else:
            k, n = int(P[u]), int(P[v])
            tot = int(L[u] + L[v])
            P[k], P[n] = n, k
            L[k] = L[n] = tot
        P[u] = P[v] = -1

    def finish(self, seam_cuts: Sequence[int] = ()) -> ReplayResult:
        n = self.n
        P, L = self.P, self.L
        n_anc_before = len(P) - 2 * n
        seam = list(seam_cuts)
        if seam:
            if self.policy is not Closure.PERIODIC_TIME:
                raise ArgumentError("seam cuts need the periodic-time closure")
            grow = 2 * len(seam)
            self.P = P = np.concatenate([P, np.full(grow, -1, dtype=np.int64)])
            self.L = L = np.concatenate([L, np.zeros(grow, dtype=np.int64)])
            for c, s in enumerate(seam):
                x = 2 * n + n_anc_before + 2 * c
                for old, new in ((s, x), (n + s, x + 1)):
                    k = P[old]
                    P[k], P[new] = new, k
                    L[new] = L[old]
                    P[old] = -1
        if self.policy is Closure.PURE_BOTH:
            for s in range(n):
                d = int(self.spec.dimer[s])
                if s < d:
                    self._glue(s, d)
        elif self.policy is Closure.PERIODIC_TIME:
            for s in range(n):
                if s not in seam:
                    self._glue(s, n + s)
        pairs, spanning, span_len = [], 0, 0
        for s in range(n):
            t = int(P[s])
            if t < 0:
                continue
            if t < n and s < t:
                pairs.append((s, t, int(L[s])))
            elif n <= t < 2 * n:
                spanning += 1
                span_len += int(L[s])
        anc = P[2 * n :]
        anc_partner = np.where(anc >= 2 * n, anc - 2 * n, -1)
        return ReplayResult(
            pairs=sorted(pairs),
            closed=LoopHistogram.from_lengths(self.loop_lengths),
            spanning=spanning,
            spanning_length=span_len,
            ancilla_partner=anc_partner.astype(np.int64),
            ancilla_length=L[2 * n :].copy(),
            loop_lengths=list(self.loop_lengths),
        )


def replay(
    spec: LatticeSpec,
    ops: np.ndarray,
    policy: "Closure | str" = Closure.MIXED_BOTTOM,
    seam_cuts: Sequence[int] = (),
) -> ReplayResult:
    """Apply an explicit operation stream sequentially, then close the boundaries.

    Rows of ``ops`` are (l, m, kind) with kind 0 = measure, 1 = crossing,
    2 = pass, 3 = cut site l (probe insertion).
    """
    ops = np.asarray(ops, dtype=np.int64).reshape(-1, 3)
    n_cuts = int(np.sum(ops[:, 2] == OP_CUT))
    st = SequentialState(spec, policy, n_ancilla=2 * n_cuts)
    st.run(ops)
    return st.finish(seam_cuts)


# ----------------------------------------------------------------------------
# exhaustive enumeration


@dataclass
class SmallEnumeration:
    spanning: Dict[int, float]
    total_probability: float
    mean_spanning: float
    mean_entropy: float
    support: List[Tuple[Tuple[int, int], ...]]


def enumerate_small(spec: LatticeSpec, depth: int, n_measurements: Optional[int] = None) -> SmallEnumeration:
    """Exact distribution of the spanning number from a mixed start.

    Every layer measures ``n_measurements`` (default N) bonds drawn i.i.d.
    with the lattice weights; identical intermediate states are merged, so
    the result equals the sum over all bond sequences weighted by their
    product probabilities.
    """
    if spec.n_bonds > 6 or depth > 3:
        raise ArgumentError("enumeration is limited to 6 bonds and depth 3")
    if spec.is_vertex_model:
        raise ArgumentError("enumeration covers bond-sampled lattices only")
    n = spec.n_sites
    per_layer = n if n_measurements is None else n_measurements
    counts = np.bincount(spec.bond_color, minlength=len(COLORS))
    probs = []
    for (a, b), c in zip(spec.bonds, spec.bond_color):
        w = spec.weights.get(COLORS[c], 0.0) / counts[c]
        probs.append(((int(a), int(b)), w))
    start = tuple(range(n, 2 * n)) + tuple(range(n))
    dist: Dict[Tuple[int, ...], float] = {start: 1.0}
    used = set()
    for _ in range(depth * per_layer):
        nxt: Dict[Tuple[int, ...], float] = defaultdict(float)
        for state, pr in dist.items():
            for (l, m), w in probs:
                if w == 0.0:
                    continue
                used.add((l, m))
                P = list(state)
                k, q = P[l], P[m]
                if k != m:
                    P[k], P[q] = q, k
                    P[l], P[m] = m, l
                nxt[tuple(P)] += pr * w
        dist = dict(nxt)
    spanning: Dict[int, float] = defaultdict(float)
    for state, pr in dist.items():
        s = sum(1 for a in range(n) if n <= state[a] < 2 * n)
        spanning[s] += pr
    total = float(sum(dist.values()))
    mean = sum(k * v for k, v in spanning.items())
    return SmallEnumeration(
        spanning=dict(spanning),
        total_probability=total,
        mean_spanning=mean,
        mean_entropy=0.5 * mean,
        support=sorted((b,) for b in used),
    )


# ----------------------------------------------------------------------------
# multiprecision q-series


def qseries(function: str, argument: complex, terms: int = 50, dps: int = 50) -> mpmath.mpf:
    """theta3 or Dedekind eta at a purely imaginary argument by direct summation.

    theta3(t) = sum_n exp(i pi t n^2); eta(t) = exp(i pi t / 12) prod_n (1 - exp(2 pi i n t)).
    """
    if terms < 1:
        raise ArgumentError("need at least one term")
    arg = complex(argument)
    if abs(arg.real) > 0 or arg.imag <= 0:
        raise DomainError("argument must be purely imaginary with positive imaginary part")
    with mpmath.workdps(dps):
        y = mpmath.mpf(arg.imag)
        if function == "theta3":
            q = mpmath.exp(-mpmath.pi * y)
            total = mpmath.mpf(1)
            prev = None
            for k in range(1, terms + 1):
                term = 2 * q ** (k * k)
                if prev is not None and term > prev:
                    raise DomainError("series terms are not decreasing")
                total += term
                prev = term
            return +total
        if function in ("dedekind_eta", "eta"):
            q = mpmath.exp(-2 * mpmath.pi * y)
            prod = mpmath.exp(-mpmath.pi * y / 12)
            for k in range(1, terms + 1):
                prod *= 1 - q**k
            return +prod
    raise ArgumentError(f"unknown function {function!r}")


def lifshitz_reference(u: float, lam: float, terms: int = 50, dps: int = 50) -> mpmath.mpf:
    """The Lifshitz scaling function assembled from :func:`qseries`."""
    if not 0 < u < 1:
        raise DomainError("u must lie strictly between 0 and 1")
    with mpmath.workdps(dps):
        num = qseries("theta3", 1j * lam * u, terms, dps) * qseries("theta3", 1j * lam * (1 - u), terms, dps)
        den = qseries("dedekind_eta", 2j * u, terms, dps) * qseries("dedekind_eta", 2j * (1 - u), terms, dps)
        return mpmath.log(num / den)
