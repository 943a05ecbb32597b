"""Command line entry point: ``scatden <command> ...``.

Exit codes: 0 success, 1 configuration or input error, 2 partial failure
(flagged sweep rows, failed bank checks, degenerate decay runs).
"""
import argparse
import csv
import json
import math
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import bench
from .datagen import GeoImageParams, sample_geometric_image
from .denoisers import SolverParams, variational_denoise
from .energies import EnergyParams
from .io import load_image, save_image, write_pgm
from .wavelet_bank import build_bank, check_littlewood_paley, check_vanishing_moments

EXIT_OK, EXIT_CONFIG, EXIT_PARTIAL = 0, 1, 2


class ConfigError(Exception):
    pass


def _load_config(path):
    if not path:
        return {}
    try:
        cfg = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as err:
        raise ConfigError(f"cannot read config {path}: {err}") from err
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(cfg) - {"energy", "solver", "sweep", "schema_version"}
    if unknown:
        raise ConfigError(f"unknown config sections: {sorted(unknown)}")
    return cfg


def _print(obj):
    print(json.dumps(obj, indent=1, default=float))


# ---------------------------------------------------------------------------

def cmd_generate(args, cfg):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for i in range(args.n):
        p = GeoImageParams(N=args.N, alpha=args.alpha, seed=args.seed + i,
                           constant_regions=args.constant_regions)
        img = sample_geometric_image(p)
        name = f"img_{i:04d}"
        save_image(out / name, img.values, alpha=p.alpha, seed=p.seed, stats=img.stats,
                   params={k: v for k, v in asdict(p).items()})
        if args.pgm:
            write_pgm(out / f"{name}.pgm", img.values)
        rows.append({"file": name, "seed": p.seed, **img.stats})
    with open(out / "manifest.csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]))
        w.writeheader()
        w.writerows(rows)
    print(f"wrote {len(rows)} images to {out}")
    return EXIT_OK


def cmd_denoise(args, cfg):
    try:
        g, side = load_image(args.inp)
    except (OSError, ValueError, KeyError) as err:
        raise ConfigError(f"cannot read image {args.inp}: {err}") from err
    sigma = args.sigma
    energy_over = dict(cfg.get("energy", {}))
    if args.j_M is not None:
        energy_over["j_M"] = args.j_M
    ok = True
    if args.estimator in ("dyadic", "scattering"):
        if args.estimator == "dyadic":
            energy_over.setdefault("mode", "wavelet")
        energy = EnergyParams.from_dict(energy_over)
        solver = SolverParams(**cfg.get("solver", {}))
        res = variational_denoise(g, sigma, build_bank(g.shape[0]), energy, solver)
        h, ok = res.image, res.converged or not res.warnings
        info = {"objective": res.objective, "iterations": res.iterations,
                "message": res.message}
    else:
        h, _ = bench.denoise(args.estimator, g, sigma)
        info = {}
    stem = save_image(args.out, h, estimator=args.estimator, sigma=sigma, source=str(args.inp),
                      **info)
    if args.pgm:
        write_pgm(Path(str(stem) + ".pgm"), h)
    _print({"out": str(stem), **info})
    return EXIT_OK if ok else EXIT_PARTIAL


def _sweep_config(args, cfg):
    d = dict(cfg.get("sweep", {}))
    for key, val in (("alphas", args.alpha), ("estimator", args.estimator), ("N", args.N),
                     ("realizations", args.realizations), ("sigma2", args.sigma2),
                     ("seed", args.seed)):
        if val is not None:
            d[key] = val
    if "energy" in cfg:
        d["energy"] = {**d.get("energy", {}), **cfg["energy"]}
    if "solver" in cfg:
        d["solver"] = {**d.get("solver", {}), **cfg["solver"]}
    return bench.SweepConfig.from_dict(d)


def cmd_sweep(args, cfg):
    config = _sweep_config(args, cfg)
    rows = bench.run_noise_sweep(config, args.out, workers=args.workers,
                                 log=lambda r: print(json.dumps(r, default=float), flush=True))
    fits = bench.fit_sweep(rows)
    _print({str(a): f.to_dict() for a, f in fits.items()})
    return EXIT_PARTIAL if any(int(float(r["flagged"])) for r in rows) else EXIT_OK


def cmd_decay(args, cfg):
    res = bench.run_decay_experiment(args.alpha, args.N, args.seeds, args.seed, out_csv=args.out)
    with open(args.out, newline="") as fh:
        sys.stdout.write(fh.read())
    if res.fit is None:
        print("degenerate: all profiles vanish")
        return EXIT_PARTIAL
    _print({"alpha": args.alpha, "fit_scales": res.fit_scales, **res.fit.to_dict(),
            "degenerate_seeds": res.degenerate})
    return EXIT_PARTIAL if res.degenerate else EXIT_OK


def cmd_check_bank(args, cfg):
    j_range = () if args.j_min is None else (args.j_min, args.j_max)
    bank = build_bank(args.N, *j_range)
    lo, hi = check_littlewood_paley(bank)
    mom = check_vanishing_moments(bank)
    ok = all(v["ok"] for v in mom.values())
    report = {"N": bank.N, "scales": list(bank.scales), "lp_lower": lo, "lp_upper": hi,
              "max_dc": max(v["dc"] for v in mom.values()),
              "max_dc_gradient": max(v["dc_gradient"] for v in mom.values()),
              "max_cone": max(v["cone_max"] for v in mom.values()),
              "moments_ok": ok}
    _print(report)
    return EXIT_OK if lo > 0 and ok else EXIT_PARTIAL


def cmd_fit(args, cfg):
    try:
        rows = bench.load_sweep(args.csv)
    except OSError as err:
        raise ConfigError(str(err)) from err
    fits = bench.fit_sweep(rows)
    out = {}
    for a, f in fits.items():
        out[str(a)] = {**f.to_dict(), "minimax_exponent": bench.minimax_exponent(a)}
    _print(out)
    return EXIT_OK


# ---------------------------------------------------------------------------

def build_parser():
    p = argparse.ArgumentParser(prog="scatden", description=__doc__.splitlines()[0])
    p.add_argument("--config", help="JSON config with energy/solver/sweep sections")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="sample geometric test images")
    g.add_argument("--alpha", type=float, default=2.0)
    g.add_argument("--n", type=int, default=1)
    g.add_argument("--N", type=int, default=128)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.add_argument("--constant-regions", action="store_true")
    g.add_argument("--pgm", action="store_true", help="also write 16-bit PGM previews")
    g.set_defaults(func=cmd_generate)

    d = sub.add_parser("denoise", help="denoise one image")
    d.add_argument("--in", dest="inp", required=True)
    d.add_argument("--sigma", type=float, required=True)
    d.add_argument("--estimator", choices=bench.ESTIMATORS, default="scattering")
    d.add_argument("--j-M", dest="j_M", type=int)
    d.add_argument("--out", required=True)
    d.add_argument("--pgm", action="store_true")
    d.set_defaults(func=cmd_denoise)

    s = sub.add_parser("sweep", help="MSE against noise level, resumable CSV")
    s.add_argument("--alpha", type=float, action="append")
    s.add_argument("--estimator", choices=bench.ESTIMATORS)
    s.add_argument("--N", type=int)
    s.add_argument("--realizations", type=int)
    s.add_argument("--sigma2", type=float, nargs="+")
    s.add_argument("--seed", type=int)
    s.add_argument("--workers", type=int, help=f"default: ${bench.WORKERS_ENV} or 1")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_sweep)

    c = sub.add_parser("decay", help="second-order norm decay across scales")
    c.add_argument("--alpha", type=float, default=2.0)
    c.add_argument("--N", type=int, default=256)
    c.add_argument("--seeds", type=int, default=20)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--out", required=True)
    c.set_defaults(func=cmd_decay)

    b = sub.add_parser("check-bank", help="frame bounds and vanishing moments")
    b.add_argument("--N", type=int, default=128)
    b.add_argument("--j-min", type=int)
    b.add_argument("--j-max", type=int)
    b.set_defaults(func=cmd_check_bank)

    f = sub.add_parser("fit", help="re-fit slopes from a sweep CSV")
    f.add_argument("csv")
    f.set_defaults(func=cmd_fit)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        cfg = _load_config(args.config)
        return args.func(args, cfg)
    except (ConfigError, ValueError, TypeError, KeyError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
