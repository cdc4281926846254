"""Hot loops of the loop engine.

Every kernel is plain Python over numpy arrays.  When numba is importable
and ``MAJOLOOP_PURE`` is not set to a true value, the same functions are
compiled with ``@njit``; otherwise the interpreter runs them unchanged.

Node layout of a block over N sites with A ancillas:
    bottom of site s -> s, top of site s -> N + s, ancilla k -> 2N + k.
"""
from __future__ import annotations

import os

import numpy as np

_FLAG = os.environ.get("MAJOLOOP_PURE", "").strip().lower()
FORCE_PURE = _FLAG not in ("", "0", "false", "no")

try:
    from numba import njit

    numba_available = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba_available = False

USE_NUMBA = numba_available and not FORCE_PURE
BACKEND = "numba" if USE_NUMBA else "python"


def _jit(fn):
    if USE_NUMBA:
        return njit(cache=True, nogil=True)(fn)
    return fn


# base-10^(1/8) length bins with integer edges; bin k holds [EDGES[k], EDGES[k+1])
BINS_PER_DECADE = 8
N_BINS = 8 * 16
BIN_EDGES = np.array(
    [int(np.ceil(10.0 ** (k / BINS_PER_DECADE) - 1e-9)) for k in range(N_BINS + 1)], dtype=np.int64
)

OP_MEASURE = 0
OP_CROSS = 1
OP_PASS = 2
OP_CUT = 3  # probe insertion; only meaningful in recorded streams


@_jit
def bin_index(length, edges):
    lo = 0
    hi = edges.shape[0] - 1
    # largest k with edges[k] <= length
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if edges[mid] <= length:
            lo = mid
        else:
            hi = mid
    return lo


@_jit
def apply_ops(partner, length, hist, edges, n_sites, site_l, site_m, kind):
    """Apply a sequence of vertex operations to the top nodes of a block.

    Returns (closed loops, their total length, number of length-carrying ops).
    """
    loops = 0
    loop_len = 0
    n_ops = 0
    for k in range(site_l.shape[0]):
        op = kind[k]
        if op >= 2:
            continue
        u = n_sites + site_l[k]
        v = n_sites + site_m[k]
        a = partner[u]
        b = partner[v]
        n_ops += 1
        if op == 0:
            if a == v:
                ell = length[u] + 1
                if ell > 0:
                    hist[bin_index(ell, edges)] += 1
                loops += 1
                loop_len += ell
                length[u] = 1
                length[v] = 1
            else:
                merged = length[u] + length[v] + 1
                partner[a] = b
                partner[b] = a
                length[a] = merged
                length[b] = merged
                partner[u] = v
                partner[v] = u
                length[u] = 1
                length[v] = 1
        else:
            if a == v:
                length[u] += 2
                length[v] += 2
            else:
                la = length[u] + 1
                lb = length[v] + 1
                partner[a] = v
                partner[v] = a
                length[a] = la
                length[v] = la
                partner[b] = u
                partner[u] = b
                length[b] = lb
                length[u] = lb
    return loops, loop_len, n_ops


@_jit
def compose_blocks(pa, la, na_anc, pb, lb, nb_anc, n_sites, perm, inv, cut_of, cut_sites, edges):
    """Glue the top of block a to the bottom of block b translated by ``perm``.

    ``perm[s]`` is where b's site s lands; ``inv`` is its inverse.  A site s
    with ``cut_of[s] >= 0`` is cut at the interface: a's top node of s
    becomes ancilla 2c and b's matching bottom node ancilla 2c + 1.
    Result ancillas are ordered a's, then the new cuts, then b's, which is
    the order a sequential replay creates them in.
    """
    N = n_sites
    n_cut = cut_sites.shape[0]
    off_cut = 2 * N + na_anc
    off_b = off_cut + 2 * n_cut
    size = off_b + nb_anc
    p = np.full(size, -1, dtype=pa.dtype)
    ln = np.zeros(size, dtype=la.dtype)
    hist = np.zeros(edges.shape[0] - 1, dtype=np.int64)
    seen = np.zeros(N, dtype=np.bool_)  # interface sites walked through
    zero_loops = 0
    loops = 0
    loop_len = 0
    n_start = N + na_anc + N + nb_anc + 2 * n_cut
    for t in range(n_start):
        # enumerate result terminals and locate the walk start in a or b
        if t < N:
            r0 = t
            side = 0
            node = t
        elif t < N + na_anc:
            r0 = 2 * N + (t - N)
            side = 0
            node = 2 * N + (t - N)
        elif t < 2 * N + na_anc:
            s = t - N - na_anc  # b's top site
            r0 = N + perm[s]
            side = 1
            node = N + s
        elif t < 2 * N + na_anc + nb_anc:
            k = t - 2 * N - na_anc
            r0 = off_b + k
            side = 1
            node = 2 * N + k
        else:
            k = t - 2 * N - na_anc - nb_anc
            c = k // 2
            r0 = off_cut + k
            s = cut_sites[c]
            if k % 2 == 0:
                side = 0
                node = N + s
            else:
                side = 1
                node = inv[s]
            seen[s] = True
        if p[r0] >= 0:
            continue
        acc = 0
        r1 = -1
        while True:
            if side == 0:
                x = pa[node]
                acc += la[node]
                if x < N:
                    r1 = x
                    break
                if x >= 2 * N:
                    r1 = x
                    break
                s = x - N
                seen[s] = True
                if cut_of[s] >= 0:
                    r1 = off_cut + 2 * cut_of[s]
                    break
                side = 1
                node = inv[s]
            else:
                y = pb[node]
                acc += lb[node]
                if y >= 2 * N:
                    r1 = off_b + (y - 2 * N)
                    break
                if y >= N:
                    r1 = N + perm[y - N]
                    break
                s = perm[y]
                seen[s] = True
                if cut_of[s] >= 0:
                    r1 = off_cut + 2 * cut_of[s] + 1
                    break
                side = 0
                node = N + s
        p[r0] = r1
        p[r1] = r0
        ln[r0] = acc
        ln[r1] = acc
    # whatever is left at the interface forms closed loops
    for s0 in range(N):
        if seen[s0]:
            continue
        acc = 0
        s = s0
        while True:
            seen[s] = True
            node = N + s
            x = pa[node]
            acc += la[node]
            s = x - N
            seen[s] = True
            y = pb[inv[s]]
            acc += lb[inv[s]]
            s = perm[y]
            if s == s0:
                break
        loops += 1
        loop_len += acc
        if acc > 0:
            hist[bin_index(acc, edges)] += 1
        else:
            zero_loops += 1
    return p, ln, hist, loops, loop_len, zero_loops


@_jit
def glue_close(partner, length, glue, n_new, edges):
    """Close a block by gluing node pairs with zero-length boundary links.

    ``glue[u] >= 0`` names the node u is glued to; ``glue[u] == -1`` keeps u
    as a terminal; ``glue[u] <= -2`` turns u into new terminal
    ``size + (-2 - glue[u])`` (used for cuts at the periodic seam).
    Returns the reduced matching over terminals (-1 on glued nodes).
    """
    size = partner.shape[0]
    total = size + n_new
    p = np.full(total, -1, dtype=partner.dtype)
    ln = np.zeros(total, dtype=length.dtype)
    visited = np.zeros(size, dtype=np.bool_)
    hist = np.zeros(edges.shape[0] - 1, dtype=np.int64)
    loops = 0
    loop_len = 0
    zero_loops = 0
    for u0 in range(size):
        if glue[u0] >= 0 or visited[u0]:
            continue
        r0 = u0 if glue[u0] == -1 else size + (-2 - glue[u0])
        visited[u0] = True
        node = u0
        acc = 0
        while True:
            x = partner[node]
            acc += length[node]
            visited[x] = True
            g = glue[x]
            if g == -1:
                r1 = x
                break
            if g <= -2:
                r1 = size + (-2 - g)
                break
            visited[g] = True
            node = g
        p[r0] = r1
        p[r1] = r0
        ln[r0] = acc
        ln[r1] = acc
    for u0 in range(size):
        if visited[u0]:
            continue
        node = u0
        acc = 0
        while True:
            visited[node] = True
            x = partner[node]
            acc += length[node]
            visited[x] = True
            node = glue[x]
            if node == u0:
                break
        loops += 1
        loop_len += acc
        if acc > 0:
            hist[bin_index(acc, edges)] += 1
        else:
            zero_loops += 1
    return p, ln, hist, loops, loop_len, zero_loops
