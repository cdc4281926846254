"""Campaign orchestration: pools, doubling, sampling, persistence.

A pool starts as ``pool_size`` independent one-layer blocks.  Each doubling
round replaces the pool by compositions of random pairs of its members under
random lattice translations, so after k rounds it holds depth-2^k blocks.  A
depth-T sample is the composition of two random depth-T/2 members.  Every
draw uses its own counter-based stream keyed by (seed, pool, round, index),
so output does not depend on thread scheduling.
"""
from __future__ import annotations

import csv
import dataclasses
import datetime as _dt
import hashlib
import io
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from . import __version__
from . import observables as obs
from .errors import ConfigurationError
from .lattice import Geometry, LatticeSpec, build_lattice, set_weights, weights_for_cut
from .loopstate import (
    CircuitBlock,
    Closure,
    ClosureResult,
    LoopHistogram,
    close_boundary,
    compose,
    compose_chain,
    make_layer,
)
from .rng import derive_seed, stream

OBSERVABLES = ("spanning", "spanning_length", "entropy", "surface", "bulk", "rho", "g2", "pd")
CSV_COLUMNS = (
    "config_hash",
    "geometry",
    "Lx",
    "Ly",
    "depth",
    "closure",
    "weights",
    "observable",
    "key",
    "pool",
    "value",
    "stderr",
    "n",
    "seed",
    "version",
)
AGGREGATE = -1
_SAMPLE_ROUND = 1 << 20
_INDEPENDENT_ROUND = 1 << 21


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return "%.17g" % float(v)


def default_pool_size(L: int) -> int:
    """Pool size shrinking from 120 at L <= 128 to 20 at L = 4096."""
    if L <= 128:
        return 120
    frac = (math.log2(L) - 7.0) / 5.0
    return int(round(120 - 100 * min(frac, 1.0)))


@dataclass(frozen=True)
class CampaignConfig:
    geometry: str = "honeycomb"
    L_x: int = 8
    L_y: Optional[int] = None
    weights: Optional[Mapping[str, float]] = None
    K: Optional[float] = None
    depth: int = 8
    pool_size: int = 8
    pools: int = 1
    samples: int = 16
    closure: str = "mixed-bottom"
    observables: Tuple[str, ...] = ("spanning",)
    seed: int = 0
    mode: str = "pool"
    g2_separation: int = 1
    threads: int = 1
    out: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "observables", tuple(self.observables))
        if self.weights is not None:
            object.__setattr__(self, "weights", dict(sorted(dict(self.weights).items())))
        self.validate()

    def validate(self) -> None:
        T = self.depth
        if int(T) != T or T < 1 or (T & (T - 1)):
            raise ConfigurationError(f"depth must be a power of two, got {T!r}")
        if self.pool_size < 1:
            raise ConfigurationError("pool_size must be >= 1")
        if T > 1 and self.pool_size < 2:
            raise ConfigurationError("pool_size must be >= 2 once compositions are needed")
        if self.samples < 1 or self.pools < 1:
            raise ConfigurationError("samples and pools must be >= 1")
        if self.threads < 1:
            raise ConfigurationError("threads must be >= 1")
        if self.mode not in ("pool", "independent"):
            raise ConfigurationError(f"unknown mode {self.mode!r}")
        unknown = set(self.observables) - set(OBSERVABLES)
        if unknown:
            raise ConfigurationError(f"unknown observables {sorted(unknown)}")
        closure = Closure.parse(self.closure)
        if ("spanning" in self.observables or "spanning_length" in self.observables) and closure is not Closure.MIXED_BOTTOM:
            raise ConfigurationError("spanning observables need the mixed-bottom closure")
        if ("entropy" in self.observables or "surface" in self.observables) and closure not in (
            Closure.PURE_BOTTOM,
            Closure.MIXED_BOTTOM,
        ):
            raise ConfigurationError("surface observables need an open top boundary")
        if "pd" in self.observables:
            if closure is not Closure.PERIODIC_TIME:
                raise ConfigurationError("pd ratios use the periodic-time closure")
            if T < 2 or self.mode != "pool":
                raise ConfigurationError("pd probes need depth >= 2 in pool mode")
        if "g2" in self.observables:
            if "pd" in self.observables:
                raise ConfigurationError("g2 and pd use different probe layouts")
            t = self.g2_separation
            if T < 2 or self.mode != "pool" or t < 1 or (t & (t - 1)) or t > max(T // 2, 1):
                raise ConfigurationError("g2 needs pool mode, depth >= 2 and a power-of-two separation <= depth / 2")
            if closure in (Closure.MIXED_BOTTOM,):
                raise ConfigurationError("g2 needs a closure without open boundary ends")
        self.lattice()

    # -- derived ----------------------------------------------------------
    @property
    def Ly(self) -> int:
        return self.L_x if self.L_y is None else self.L_y

    def resolved_weights(self) -> Optional[Dict[str, float]]:
        if self.weights is not None:
            return dict(self.weights)
        if self.K is not None:
            return weights_for_cut(self.geometry, self.K)
        return None

    def lattice(self) -> LatticeSpec:
        return _lattice(self.geometry, self.L_x, self.Ly, _freeze(self.resolved_weights()))

    def identity(self) -> Dict:
        d = dataclasses.asdict(self)
        for k in ("threads", "out"):
            d.pop(k)
        d["L_y"] = self.Ly
        d["observables"] = list(self.observables)
        d["closure"] = Closure.parse(self.closure).value
        d["geometry"] = Geometry.parse(self.geometry).value
        return d

    def config_hash(self) -> str:
        blob = json.dumps(self.identity(), sort_keys=True, default=str).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def replace(self, **kw) -> "CampaignConfig":
        return dataclasses.replace(self, **kw)


def _freeze(w: Optional[Mapping[str, float]]):
    return None if w is None else tuple(sorted(w.items()))


_LATTICES: Dict = {}


def _lattice(geometry: str, L_x: int, L_y: int, weights) -> LatticeSpec:
    key = (Geometry.parse(geometry), L_x, L_y, weights)
    spec = _LATTICES.get(key)
    if spec is None:
        spec = build_lattice(geometry, L_x, L_y)
        if weights is not None:
            spec = set_weights(spec, dict(weights))
        if len(_LATTICES) > 64:
            _LATTICES.clear()
        _LATTICES[key] = spec
    return spec


# ----------------------------------------------------------------------------
# pool protocol


def _random_pair(rng: np.random.Generator, n: int) -> Tuple[int, int]:
    if n < 2:
        return 0, 0
    i = int(rng.integers(n))
    j = int(rng.integers(n - 1))
    return i, j + (j >= i)


def _random_shift(rng: np.random.Generator, spec: LatticeSpec) -> Tuple[int, int]:
    shifts = spec.shifts()
    dx, dy = shifts[int(rng.integers(len(shifts)))]
    return int(dx), int(dy)


def build_pool(cfg: CampaignConfig, pool: int, keep_levels: bool = False, record: bool = False) -> List[List[CircuitBlock]]:
    """Pool levels: level k holds ``pool_size`` blocks of depth 2^k, up to depth T/2.

    With ``keep_levels`` false only the top level is returned (as a
    one-element list).
    """
    spec = cfg.lattice()
    n_p = cfg.pool_size
    level = [make_layer(spec, stream(cfg.seed, pool, 0, i), record=record, seed_record=(pool, 0, i)) for i in range(n_p)]
    levels = [level]
    n_rounds = max(int(math.log2(cfg.depth)) - 1, 0)
    for r in range(1, n_rounds + 1):
        nxt = []
        for i in range(n_p):
            rng = stream(cfg.seed, pool, r, i)
            a, b = _random_pair(rng, n_p)
            dx, dy = _random_shift(rng, spec)
            nxt.append(compose(level[a], level[b], dx, dy))
        level = nxt
        if keep_levels:
            levels.append(level)
        else:
            levels = [level]
    return levels


def _probe_sites(spec: LatticeSpec) -> Tuple[List[int], List[int]]:
    hx, hy = spec.L_x // 2, spec.L_y // 2
    mid = [spec.site_index(0, 0), spec.site_index(hx, 0)]
    seam = [spec.site_index(0, hy), spec.site_index(hx, hy)]
    return mid, seam


@dataclass
class Sample:
    pool: int
    index: int
    block: CircuitBlock
    result: ClosureResult


def iter_samples(cfg: CampaignConfig, pool: int, record: bool = False) -> Iterator[Sample]:
    """Yield the closed samples of one pool in draw order."""
    spec = cfg.lattice()
    closure = Closure.parse(cfg.closure)
    T = cfg.depth
    if cfg.mode == "independent":
        for j in range(cfg.samples):
            rng = stream(cfg.seed, pool, _INDEPENDENT_ROUND, j)
            block = make_layer(spec, rng, record=record)
            for _ in range(T - 1):
                layer = make_layer(spec, rng, record=record)
                block = compose(block, layer, *_random_shift(rng, spec))
            yield Sample(pool, j, block, close_boundary(block, closure))
        return
    g2 = "g2" in cfg.observables
    levels = build_pool(cfg, pool, keep_levels=g2, record=record)
    top = levels[-1]
    mid, seam = _probe_sites(spec)
    pd = "pd" in cfg.observables
    for j in range(cfg.samples):
        rng = stream(cfg.seed, pool, _SAMPLE_ROUND, j)
        if T == 1:
            block = top[int(rng.integers(len(top)))]
            yield Sample(pool, j, block, close_boundary(block, closure))
            continue
        a, b = _random_pair(rng, len(top))
        if g2:
            middle = levels[int(math.log2(cfg.g2_separation))]
            c = int(rng.integers(len(middle)))
            s1, s2 = _random_shift(rng, spec), _random_shift(rng, spec)
            block = compose_chain([top[a], middle[c], top[b]], [s1, s2], cuts=[[mid[0]], [mid[0]]])
            yield Sample(pool, j, block, close_boundary(block, closure))
            continue
        dx, dy = _random_shift(rng, spec)
        if pd:
            block = compose(top[a], top[b], dx, dy, cuts=mid)
            yield Sample(pool, j, block, close_boundary(block, closure, seam_cuts=seam))
        else:
            block = compose(top[a], top[b], dx, dy)
            yield Sample(pool, j, block, close_boundary(block, closure))


# ----------------------------------------------------------------------------
# observable evaluation


@dataclass
class PoolData:
    pool: int
    scalars: Dict[str, Dict[str, List[float]]] = field(default_factory=dict)
    histogram: LoopHistogram = field(default_factory=LoopHistogram)
    pd_samples: List[Tuple[float, float, float]] = field(default_factory=list)

    def add(self, name: str, key: str, value: float) -> None:
        self.scalars.setdefault(name, {}).setdefault(key, []).append(float(value))


def _evaluate(cfg: CampaignConfig, sample: Sample, data: PoolData) -> None:
    res = sample.result
    for name in cfg.observables:
        if name == "spanning":
            data.add(name, "n_s", res.spanning)
        elif name == "spanning_length":
            data.add(name, "M", res.spanning_length)
        elif name == "entropy":
            prof = obs.entanglement_profile(res.surface, "x")
            for ell, s in enumerate(prof):
                data.add(name, str(ell), s)
        elif name == "surface":
            for axis in ("x", "y"):
                counts = np.bincount(obs.surface_lengths(res.surface, axis), minlength=res.surface.spec.extent(axis) // 2 + 1)
                for ell, c in enumerate(counts):
                    data.add(name, f"{axis}{ell}", c)
        elif name == "bulk":
            data.histogram = data.histogram.merge(res.closed)
        elif name == "rho":
            data.add(name, "rho", obs.occupied_fraction(sample.block.closed, sample.block.n_ops))
        elif name == "g2":
            data.add(name, "G2", obs.g2_sample(res.surface, 0, 1))
        elif name == "pd":
            p = obs.pd_sample(res.surface)
            data.pd_samples.append(p)
            for k, v in zip(("P2", "P3", "P4"), p):
                data.add(name, k, v)


def run_pool(cfg: CampaignConfig, pool: int) -> PoolData:
    data = PoolData(pool)
    for sample in iter_samples(cfg, pool):
        _evaluate(cfg, sample, data)
    return data


def _stats(values: Sequence[float]) -> Tuple[float, float, int]:
    v = np.asarray(values, dtype=float)
    n = len(v)
    err = float(v.std(ddof=1) / math.sqrt(n)) if n > 1 else float("nan")
    return float(v.mean()), err, n


@dataclass
class CampaignResult:
    config: CampaignConfig
    rows: List[Dict]
    pools: List[PoolData]

    def value(self, observable: str, key: str, pool: int = AGGREGATE) -> Tuple[float, float, int]:
        for r in self.rows:
            if r["observable"] == observable and r["key"] == key and r["pool"] == pool:
                return r["value"], r["stderr"], r["n"]
        raise KeyError((observable, key, pool))

    def histogram(self) -> LoopHistogram:
        out = LoopHistogram()
        for p in self.pools:
            out = out.merge(p.histogram)
        return out

    def samples(self, observable: str, key: str) -> np.ndarray:
        return np.concatenate([np.asarray(p.scalars.get(observable, {}).get(key, []), dtype=float) for p in self.pools])

    def pd(self) -> obs.PDRatios:
        return obs.pd_ratios([s for p in self.pools for s in p.pd_samples])

    def csv_text(self) -> str:
        return rows_to_csv(self.rows)


def _make_rows(cfg: CampaignConfig, pools: List[PoolData]) -> List[Dict]:
    spec = cfg.lattice()
    base = {
        "config_hash": cfg.config_hash(),
        "geometry": spec.geometry.value,
        "Lx": spec.L_x,
        "Ly": spec.L_y,
        "depth": cfg.depth,
        "closure": Closure.parse(cfg.closure).value,
        "weights": ";".join(f"{c}={_fmt(w)}" for c, w in sorted(spec.weights.items())),
        "seed": cfg.seed,
        "version": __version__,
    }
    rows: List[Dict] = []

    def row(observable, key, pool, value, stderr, n):
        r = dict(base)
        r.update(observable=observable, key=str(key), pool=pool, value=value, stderr=stderr, n=n)
        rows.append(r)

    for name in cfg.observables:
        if name == "bulk":
            total = LoopHistogram()
            for p in pools:
                total = total.merge(p.histogram)
            entries = [(p.pool, p.histogram, cfg.samples) for p in pools]
            entries.append((AGGREGATE, total, cfg.samples * len(pools)))
            for pool_id, h, n in entries:
                for k in np.nonzero(h.counts)[0]:
                    row(name, f"bin{int(k)}", pool_id, int(h.counts[k]), math.sqrt(h.counts[k]), n)
                row(name, "total_loops", pool_id, h.total_loops, 0.0, n)
                row(name, "total_length", pool_id, h.total_length, 0.0, n)
            continue
        keys = list(pools[0].scalars.get(name, {}).keys())
        for key in keys:
            means = []
            for p in pools:
                m, e, n = _stats(p.scalars[name][key])
                means.append(m)
                row(name, key, p.pool, m, e, n)
            all_vals = np.concatenate([p.scalars[name][key] for p in pools])
            if len(pools) > 1:
                m = float(np.mean(means))
                e = float(np.std(means, ddof=1) / math.sqrt(len(means)))
            else:
                m, e, _ = _stats(all_vals)
            row(name, key, AGGREGATE, m, e, int(len(all_vals)))
        if name == "pd":
            samples = [s for p in pools for s in p.pd_samples]
            try:
                ratios = obs.pd_ratios(samples)
                row(name, "P2^2/P4", AGGREGATE, ratios.r22_4, ratios.r22_4_err, len(samples))
                row(name, "P2^3/P3^2", AGGREGATE, ratios.r23_32, ratios.r23_32_err, len(samples))
            except Exception:  # no connected triples yet: ratios undefined
                pass
    return rows


def rows_to_csv(rows: Sequence[Dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        w.writerow([_fmt(r[c]) if isinstance(r[c], (float, int, np.floating, np.integer)) else r[c] for c in CSV_COLUMNS])
    return buf.getvalue()


def read_csv(path: str) -> List[Dict]:
    out = []
    with open(path, newline="") as fh:
        for r in csv.DictReader(fh):
            for k in ("Lx", "Ly", "depth", "pool", "n", "seed"):
                r[k] = int(r[k])
            for k in ("value", "stderr"):
                r[k] = float(r[k])
            out.append(r)
    return out


def sidecar(cfg: CampaignConfig, extra: Optional[Dict] = None) -> Dict:
    meta = {
        "config": cfg.identity(),
        "config_hash": cfg.config_hash(),
        "seed": cfg.seed,
        "version": __version__,
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(),
        "complete": True,
    }
    meta.update(extra or {})
    return meta


def run_campaign(cfg: CampaignConfig) -> CampaignResult:
    """Run all pools (in parallel when ``threads > 1``) and collect result rows."""
    if cfg.threads > 1 and cfg.pools > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as ex:
            pools = list(ex.map(lambda p: run_pool(cfg, p), range(cfg.pools)))
    else:
        pools = [run_pool(cfg, p) for p in range(cfg.pools)]
    result = CampaignResult(cfg, _make_rows(cfg, pools), pools)
    if cfg.out:
        write_result(result, cfg.out)
    return result


def write_result(result: CampaignResult, out_dir: str, stem: Optional[str] = None) -> Tuple[str, str]:
    cfg = result.config
    stem = stem or cfg.config_hash()
    os.makedirs(out_dir, exist_ok=True)
    csv_path = os.path.join(out_dir, stem + ".csv")
    json_path = os.path.join(out_dir, stem + ".json")
    try:
        with open(csv_path, "w", newline="") as fh:
            fh.write(result.csv_text())
        with open(json_path, "w") as fh:
            json.dump(sidecar(cfg, {"rows": len(result.rows)}), fh, indent=2, sort_keys=True)
    except OSError as exc:
        raise RuntimeError(f"failed to write results for {stem}: {exc}; rows in memory: {len(result.rows)}") from exc
    return csv_path, json_path


# ----------------------------------------------------------------------------
# sweeps


def cell_seed(master: int, coords: Mapping) -> int:
    return derive_seed(master, sorted((k, repr(v)) for k, v in coords.items()))


def sweep_cells(template: CampaignConfig, grid: Mapping[str, Sequence]) -> List[Tuple[Dict, CampaignConfig]]:
    """Cartesian product of ``grid`` over config fields, each with its own sub-seed."""
    names = sorted(grid)
    cells = []
    for combo in np.array(np.meshgrid(*[np.arange(len(grid[n])) for n in names], indexing="ij")).reshape(len(names), -1).T:
        coords = {n: grid[n][int(i)] for n, i in zip(names, combo)}
        coords = {k: (v.item() if hasattr(v, "item") else v) for k, v in coords.items()}
        cfg = template.replace(seed=cell_seed(template.seed, coords), **coords)
        cells.append((coords, cfg))
    return cells


def sweep(template: CampaignConfig, grid: Mapping[str, Sequence], out_dir: Optional[str] = None) -> List[CampaignResult]:
    """Run every grid cell; with ``out_dir`` finished cells are skipped on rerun."""
    results = []
    for coords, cfg in sweep_cells(template, grid):
        if out_dir:
            stem = "cell-" + cfg.config_hash()
            meta = os.path.join(out_dir, stem + ".json")
            csv_path = os.path.join(out_dir, stem + ".csv")
            if os.path.exists(meta) and os.path.exists(csv_path):
                with open(meta) as fh:
                    if json.load(fh).get("complete"):
                        results.append(CampaignResult(cfg, read_csv(csv_path), []))
                        continue
            res = run_campaign(cfg.replace(out=None))
            write_result(res, out_dir, stem)
        else:
            res = run_campaign(cfg)
        results.append(res)
    return results


# ----------------------------------------------------------------------------
# oracle comparison


def oracle_check(cfg: CampaignConfig) -> List[str]:
    """Replay every sample's recorded operations sequentially and list mismatches."""
    from . import oracle

    closure = Closure.parse(cfg.closure)
    spec = cfg.lattice()
    _, seam = _probe_sites(spec)
    problems = []
    for pool in range(cfg.pools):
        for s in iter_samples(cfg, pool, record=True):
            s.block.audit()
            seam_cuts = seam if "pd" in cfg.observables else ()
            ref = oracle.replay(spec, s.block.ops, closure, seam_cuts)
            r = s.result
            checks = {
                "pairs": r.surface.canonical() == ref.pairs,
                "closed": r.closed == ref.closed,
                "spanning": r.spanning == ref.spanning,
                "spanning_length": r.spanning_length == ref.spanning_length,
                "ancilla": np.array_equal(r.surface.ancilla_partner, ref.ancilla_partner)
                and np.array_equal(r.surface.ancilla_length, ref.ancilla_length),
            }
            bad = [k for k, ok in checks.items() if not ok]
            if bad:
                problems.append(f"pool {pool} sample {s.index}: {', '.join(bad)}")
    return problems
