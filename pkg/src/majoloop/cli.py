"""Command line entry point: ``majoloop <command>``."""
from __future__ import annotations

import json
import sys
from typing import Dict, List, Optional

import click
import numpy as np

from . import fss, theory
from .errors import ArgumentError, ConfigurationError, DomainError
from .harness import CampaignConfig, oracle_check, read_csv, run_campaign, sweep

EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def _weights(opts: Dict[str, Optional[float]]) -> Optional[Dict[str, float]]:
    w = {k: v for k, v in opts.items() if v is not None}
    return w or None


def _config(**kw) -> CampaignConfig:
    weights = _weights(
        {
            "x": kw.pop("Kx"),
            "y": kw.pop("Ky"),
            "z": kw.pop("Kz"),
            "j": kw.pop("J"),
            "r": kw.pop("Kr"),
            "g": kw.pop("Kg"),
            "b": kw.pop("Kb"),
            "p": kw.pop("p"),
            "q": kw.pop("q"),
        }
    )
    obs = tuple(o.strip() for o in kw.pop("observables").split(",") if o.strip())
    return CampaignConfig(
        geometry=kw["geometry"],
        L_x=kw["lx"],
        L_y=kw["ly"],
        weights=weights,
        K=kw["k"],
        depth=kw["depth"],
        pool_size=kw["pool_size"],
        pools=kw["pools"],
        samples=kw["samples"],
        closure=kw["closure"],
        observables=obs,
        seed=kw["seed"],
        mode=kw["mode"],
        g2_separation=kw["g2_separation"],
        threads=kw["threads"],
        out=kw["out"],
    )


def _campaign_options(f):
    opts = [
        click.option("--geometry", default="honeycomb", show_default=True),
        click.option("--Lx", "lx", type=int, default=8, show_default=True),
        click.option("--Ly", "ly", type=int, default=None),
        click.option("--K", "k", type=float, default=None, help="position on the geometry's standard cut"),
        click.option("--Kx", "Kx", type=float),
        click.option("--Ky", "Ky", type=float),
        click.option("--Kz", "Kz", type=float),
        click.option("--J", "J", type=float),
        click.option("--Kr", "Kr", type=float),
        click.option("--Kg", "Kg", type=float),
        click.option("--Kb", "Kb", type=float),
        click.option("--p", "p", type=float),
        click.option("--q", "q", type=float),
        click.option("--depth", type=int, default=8, show_default=True),
        click.option("--pool-size", type=int, default=8, show_default=True),
        click.option("--pools", type=int, default=1, show_default=True),
        click.option("--samples", type=int, default=16, show_default=True),
        click.option("--seed", type=int, default=0, show_default=True),
        click.option(
            "--closure",
            type=click.Choice(["pure-bottom", "pure-both", "mixed-bottom", "periodic-time"]),
            default="mixed-bottom",
            show_default=True,
        ),
        click.option("--observables", default="spanning", show_default=True, help="comma separated"),
        click.option("--mode", type=click.Choice(["pool", "independent"]), default="pool", show_default=True),
        click.option("--g2-separation", type=int, default=1, show_default=True),
        click.option("--threads", type=int, default=1, show_default=True),
    ]
    for o in reversed(opts):
        f = o(f)
    return f


class _Group(click.Group):
    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except (ConfigurationError, ArgumentError, DomainError) as exc:
            click.echo(f"error: {exc}", err=True)
            ctx.exit(EXIT_CONFIG)
        except click.exceptions.Exit:
            raise
        except click.ClickException:
            raise
        except Exception as exc:  # anything else is a runtime failure
            click.echo(f"runtime failure: {exc}", err=True)
            ctx.exit(EXIT_RUNTIME)


@click.group(cls=_Group)
def main():
    """Loop-model simulator for measurement-only Majorana circuits."""


@main.command()
@_campaign_options
@click.option("--out", type=click.Path(file_okay=False), default=None, help="directory for CSV + JSON output")
def simulate(**kw):
    """Run one campaign; prints the CSV when --out is not given."""
    cfg = _config(**kw)
    res = run_campaign(cfg)
    if not cfg.out:
        click.echo(res.csv_text(), nl=False)
    else:
        click.echo(f"wrote {len(res.rows)} rows to {cfg.out}/{cfg.config_hash()}.csv")


@main.command("sweep")
@_campaign_options
@click.option("--out", type=click.Path(file_okay=False), required=True)
@click.option("--grid", multiple=True, required=True, help="field=v1,v2,... (repeatable), e.g. K=0.6,0.65 or L_x=16,32")
def sweep_cmd(grid, **kw):
    """Cartesian sweep with per-cell seeds; finished cells are skipped."""
    cfg = _config(**kw)
    parsed = {}
    for g in grid:
        if "=" not in g:
            raise ArgumentError(f"bad grid entry {g!r}")
        name, values = g.split("=", 1)
        conv = int if name in ("L_x", "L_y", "depth", "pool_size", "samples", "pools") else float
        parsed[name] = [conv(v) for v in values.split(",")]
    results = sweep(cfg.replace(out=None), parsed, out_dir=cfg.out)
    click.echo(f"{len(results)} cells in {cfg.out}")


@main.command("fss")
@click.argument("csv_files", nargs=-1, required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--observable", default="spanning", show_default=True)
@click.option("--key", default="n_s", show_default=True)
@click.option("--model", type=click.Choice(list(fss.MODELS)), default="linear", show_default=True)
@click.option("--knots", type=int, default=6, show_default=True)
@click.option("--landscape", "landscape_out", type=click.Path(dir_okay=False), default=None, help="CSV file for the chi^2 landscape")
def fss_cmd(csv_files, observable, key, model, knots, landscape_out):
    """Collapse fit over aggregate rows of harness CSV files (K read from the weights column)."""
    points: List[fss.SamplePoint] = []
    for path in csv_files:
        for r in read_csv(path):
            if r["observable"] == observable and r["key"] == key and r["pool"] == -1:
                weights = dict(kv.split("=") for kv in r["weights"].split(";"))
                K = float(weights["x"]) if "x" in weights else float(max(weights.values(), key=float))
                points.append(fss.SamplePoint(r["Lx"], K, r["value"], max(r["stderr"], 1e-12)))
    fit = fss.collapse_fit(points, model=model, spline=fss.SplineConfig("uniform", knots))
    report = {"params": fit.params, "errors": fit.errors, "chi2_r": fit.chi2_r, "dof": fit.dof, "notes": fit.warnings}
    click.echo(json.dumps(report, indent=2, sort_keys=True))
    if landscape_out:
        kc = np.linspace(fit.K_c - 5 * fit.errors.get("K_c", 0.01), fit.K_c + 5 * fit.errors.get("K_c", 0.01), 21)
        nu = np.linspace(fit.nu * 0.8, fit.nu * 1.2, 21)
        grid = fss.landscape(points, kc, nu, spline=fss.SplineConfig("uniform", knots), fixed={k: v for k, v in fit.params.items() if k not in ("K_c", "nu")})
        with open(landscape_out, "w") as fh:
            fh.write("K_c,nu,chi2_rel\n")
            for i, a in enumerate(kc):
                for j, b in enumerate(nu):
                    fh.write("%.17g,%.17g,%.17g\n" % (a, b, grid[i, j]))


@main.command("theory")
@click.argument("what", type=click.Choice(["diffusion", "contour", "lifshitz", "pd", "exponents"]))
@click.option("--K", "k", type=float, multiple=True, help="probabilities (three values) for diffusion")
@click.option("--lam", type=float, default=3.4, show_default=True)
@click.option("--tau", type=float, default=None)
@click.option("--nu", type=float, default=None)
@click.option("--points", type=int, default=19, show_default=True)
def theory_cmd(what, k, lam, tau, nu, points):
    """Print reference values as CSV."""
    if what == "diffusion":
        if len(k) != 3:
            raise ArgumentError("give three --K values")
        d = theory.d_mic_honeycomb(*k)
        click.echo("D_z,D_perp,D\n%.17g,%.17g,%.17g" % d)
    elif what == "contour":
        c = theory.critical_contour()
        click.echo("K_c,found\n%.17g,%d" % (c.K, c.found))
    elif what == "lifshitz":
        click.echo("u,J")
        for u in np.linspace(0, 1, points + 2)[1:-1]:
            click.echo("%.17g,%.17g" % (u, theory.lifshitz_J(float(u), lam)))
    elif what == "pd":
        click.echo("theta,P2^2/P4,P2^3/P3^2")
        for th in (1.0, 0.5):
            click.echo("%.17g,%.17g,%.17g" % ((th,) + theory.pd_ratios(th)))
    else:
        if tau is None:
            raise ArgumentError("--tau is required")
        e = theory.hyperscaling(tau=tau, nu=nu)
        click.echo("tau,eta,d_f,beta,beta_alt")
        click.echo(",".join("%.17g" % v if v is not None else "" for v in (e.tau, e.eta, e.d_f, e.beta, e.beta_alt)))


@main.command("oracle-check")
@click.option("--seeds", type=int, default=20, show_default=True)
@click.option("--geometries", default="honeycomb,honeycomb-nnn,yao-kivelson,cardy-l3d", show_default=True)
@click.option("--sizes", default="4,8", show_default=True)
@click.option("--depths", default="4,16,64", show_default=True)
def oracle_check_cmd(seeds, geometries, sizes, depths):
    """Compare composed blocks against sequential replay; exit 3 on any mismatch."""
    failures = []
    n = 0
    for geo in geometries.split(","):
        for L in map(int, sizes.split(",")):
            for T in map(int, depths.split(",")):
                for seed in range(seeds):
                    cfg = CampaignConfig(geometry=geo, L_x=L, depth=T, pool_size=2, samples=1, seed=seed, closure="mixed-bottom")
                    bad = oracle_check(cfg)
                    n += 1
                    failures += [f"{geo} L={L} T={T} seed={seed}: {b}" for b in bad]
    for f in failures:
        click.echo(f, err=True)
    click.echo(f"{n - len(failures)}/{n} configurations agree")
    if failures:
        sys.exit(EXIT_RUNTIME)


if __name__ == "__main__":  # pragma: no cover
    main()
