"""Limit laws, generating functions and simulations for small-drift random walks.

Subcommands: ``law`` (CSV tables of the limit laws), ``gf`` (ladder and
occupation generating functions as JSON), ``mc`` (simulation reports),
``verify`` (acceptance suite) and ``sparre`` (the rearrangement demo).

Exit codes: 0 ok, 1 acceptance failure, 2 usage, 3 domain, 4 unsupported family.
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import hashlib
import json
import math
import os
import sys

import numpy as np

from . import _backend, acceptance, fluctuation as fl, limitlaw, mc, sparre, stats
from .limitlaw import DomainError

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_DOMAIN, EXIT_UNSUPPORTED = 0, 1, 2, 3, 4

LAWS = ("A", "gamma_half", "arcsine", "last_exit", "first_passage", "occupation", "joint_zero")


class UsageError(Exception):
    pass


# -- shared helpers ---------------------------------------------------------------


def parse_grid(text: str) -> np.ndarray:
    """``a:b:n`` -> ``n`` evenly spaced points from ``a`` to ``b`` inclusive."""
    try:
        a, b, n = text.split(":")
        a, b, n = float(a), float(b), int(n)
    except ValueError:
        raise UsageError(f"grid must look like a:b:n, got {text!r}") from None
    if n < 1:
        raise UsageError("grid needs n >= 1")
    return np.linspace(a, b, n)


def _fmt(v) -> str:
    return f"{float(v):.17g}"


def _write_csv(rows, header, out):
    w = csv.writer(out, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])


def _open_out(path):
    if path in (None, "-"):
        return sys.stdout, False
    return open(path, "w", newline=""), True


def _emit_json(obj, path):
    text = json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n"
    out, close = _open_out(path)
    out.write(text)
    if close:
        out.close()


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(type(o).__name__)


def _resolve_seed(value):
    if value is not None:
        return int(value)
    env = os.environ.get("FLUCTUA_SEED")
    return int(env) if env else 0


# -- law --------------------------------------------------------------------------


def _law_object(args):
    lid = args.law
    if lid == "A":
        return limitlaw.LawA()
    if lid == "gamma_half":
        return limitlaw.GammaHalf(args.rate)
    if lid == "arcsine":
        return limitlaw.ArcsineLaw()
    if lid == "last_exit":
        return limitlaw.LastExitLaw(args.delta, math.sqrt(args.sigma2), args.horizon)
    if lid == "first_passage":
        return limitlaw.FirstPassageLaw(args.z, args.delta, args.sigma2)
    if lid == "occupation":
        return limitlaw.OccupationLaw(args.z, args.delta, args.sigma2)
    raise UsageError(f"unknown law {lid!r}")


def cmd_law(args) -> int:
    grid = parse_grid(args.grid)
    out, close = _open_out(args.out)
    try:
        if args.law == "joint_zero":
            tgrid = parse_grid(args.tgrid) if args.tgrid else grid
            y, t = np.meshgrid(grid, tgrid, indexing="ij")
            dens = limitlaw.joint_zero_density(y.ravel(), t.ravel())
            _write_csv(zip(y.ravel(), t.ravel(), dens), ["y", "t", "pdf"], out)
        else:
            law = _law_object(args)
            _write_csv(zip(grid, law.pdf(grid), law.cdf(grid)), ["x", "pdf", "cdf"], out)
    finally:
        if close:
            out.close()
    return EXIT_OK


# -- gf ---------------------------------------------------------------------------


def _step_law(args) -> fl.LatticeStepLaw:
    if args.offsets is not None or args.probs is not None:
        if args.offsets is None or args.probs is None:
            raise UsageError("--family.offsets and --family.probs go together")
        return fl.LatticeStepLaw(tuple(args.offsets), tuple(args.probs))
    if args.p is None:
        raise UsageError("give --family.p or --family.offsets/--family.probs")
    return fl.LatticeStepLaw.simple(args.p)


def cmd_gf(args) -> int:
    law = _step_law(args)
    K = args.order
    N = args.horizon or max(K, 2000)
    prov = fl.sign_probs(law, N)
    lad = fl.ladder_series(prov, K)
    report = {
        "config": {"family.offsets": list(law.offsets), "family.probs": list(law.probs),
                   "order": K, "horizon": N},
        "r": lad.r.coef,
        "a": lad.a.coef,
        "duality_residual": lad.duality_residual(),
        "tail_bound": prov.exponent_tail_bound(),
        "r1": lad.r1,
    }
    if not args.no_occupation:
        occ = fl.occupation_gf(prov, K)
        report["occupation_pmf"] = occ.coef
    _emit_json(report, args.out)
    return EXIT_OK


# -- mc ---------------------------------------------------------------------------

# flat config keys, shared by JSON files and flags
MC_KEYS = {
    "family.kind": str, "family.base": str, "family.p": float, "family.delta": float,
    "family.width": float, "family.offsets": list, "family.probs": list,
    "functional": str, "n_paths": int, "seed": int, "workers": int,
    "rule.epsilon": float, "rule.cap": int, "level": float, "horizon": int,
}
MC_DEFAULTS = {"family.kind": "lattice", "family.base": "lattice", "functional": "Z0",
               "n_paths": 10_000, "workers": 1, "rule.epsilon": 1e-9, "rule.cap": 100_000_000,
               "level": 0.0, "horizon": 0}


def _load_config(path) -> dict:
    with open(path) as fh:
        data = json.load(fh)
    if "config" in data and isinstance(data["config"], dict):
        data = data["config"]  # a previous report
    unknown = set(data) - set(MC_KEYS)
    if unknown:
        raise UsageError(f"unknown config keys: {sorted(unknown)}")
    return data


def resolve_mc_config(args) -> dict:
    cfg = dict(MC_DEFAULTS)
    if args.config:
        cfg.update(_load_config(args.config))
    for key in MC_KEYS:
        val = getattr(args, key.replace(".", "_"), None)
        if val is not None:
            cfg[key] = val
    cfg["seed"] = _resolve_seed(cfg.get("seed"))
    return cfg


def build_family(cfg: dict) -> mc.StepFamily:
    kind, base = cfg["family.kind"], cfg.get("family.base", "lattice")
    if kind == "lattice":
        if cfg.get("family.offsets") is not None:
            law = fl.LatticeStepLaw(tuple(cfg["family.offsets"]), tuple(cfg["family.probs"]))
        elif cfg.get("family.p") is not None:
            law = fl.LatticeStepLaw.simple(cfg["family.p"])
        else:
            raise UsageError("lattice family needs family.p or family.offsets/probs")
        return mc.StepFamily.from_lattice(law)
    if kind == "shift":
        if cfg.get("family.delta") is None:
            raise UsageError("shift family needs family.delta")
        return mc.StepFamily.shift(base, cfg["family.delta"], cfg.get("family.width") or 1.0)
    if kind == "tilted":
        lattice = None
        if base == "lattice":
            lattice = fl.LatticeStepLaw(tuple(cfg["family.offsets"]), tuple(cfg["family.probs"]))
        p = cfg.get("family.p")
        if p is None:
            if cfg.get("family.delta") is None:
                raise UsageError("tilted family needs family.p or family.delta")
            b = "lattice" if base == "rademacher" else base
            lat = fl.LatticeStepLaw((-1, 1), (0.5, 0.5)) if base == "rademacher" else lattice
            if base == "uniform":
                raise mc.UnsupportedFamilyError("no exact sampler for a tilted uniform base")
            p = mc.tilt_for_drift(b, cfg["family.delta"], lat)
        return mc.StepFamily.tilted(base, p, lattice)
    raise mc.UnsupportedFamilyError(f"unknown family kind {kind!r}")


def _report_digest(report: dict) -> str:
    body = {k: v for k, v in report.items() if k not in ("timestamp", "report_digest")}
    blob = json.dumps(body, sort_keys=True, default=_json_default).encode()
    return hashlib.sha256(blob).hexdigest()


def cmd_mc(args) -> int:
    cfg = resolve_mc_config(args)
    fam = build_family(cfg)
    sim = mc.SimulationConfig(fam, cfg["functional"], cfg["n_paths"], cfg["seed"], cfg["workers"],
                              cfg["rule.epsilon"], cfg["rule.cap"], cfg["level"], cfg["horizon"])
    res = mc.simulate(sim)
    factor, target = mc.default_scaling(fam, cfg["functional"], cfg["level"], cfg["horizon"])
    sample = res.sample(factor)
    mean, se = stats.moment_report(sample)
    ks = stats.ks_against(sample, target.cdf)
    report = {
        "config": cfg,
        "family": fam.describe(),
        "n": sample.n,
        "scale": factor,
        "target": type(target).__name__,
        "mean": mean,
        "se": se,
        "raw_mean": float(res.values.mean()),
        "ks": ks.as_dict(),
        "capped": res.n_capped,
        "flagged": res.flagged,
        "stop_threshold": res.threshold if math.isfinite(res.threshold) else None,
        "residual_bound": res.residual_bound,
        "sample_digest": res.digest(),
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(),
    }
    if cfg["functional"] == "min":
        xs = np.round(np.arange(1, 21) * 0.1, 10)
        report["survival_gap"] = stats.survival_gap(sample, target.sf if hasattr(target, "sf")
                                                    else lambda x: 1 - target.cdf(x), xs)
    report["report_digest"] = _report_digest(report)
    if args.raw:
        with open(args.raw, "w", newline="") as fh:
            stats.write_ecdf_csv(sample, target.cdf, fh, max_rows=None)
    _emit_json(report, args.out)
    return EXIT_FAIL if res.flagged else EXIT_OK


# -- verify -----------------------------------------------------------------------


def cmd_verify(args) -> int:
    suite = acceptance.Suite(n_paths=args.n_paths, seed=_resolve_seed(args.seed),
                             workers=args.workers, epsilon=args.rule_epsilon)
    for key in args.only or ():
        if key not in acceptance.CRITERIA:
            raise UsageError(f"unknown criterion {key!r}; choose from {', '.join(acceptance.CRITERIA)}")
    print(f"backend: {_backend.name}, workers: {suite.workers}, seed: {suite.seed}", flush=True)
    results = acceptance.run_suite(args.only, suite, echo=lambda s: print(s, flush=True))
    failed = [r.key for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} criteria passed", flush=True)
    if args.json:
        _emit_json({"seed": suite.seed, "results": [r.as_dict() for r in results]}, args.json)
    return EXIT_FAIL if failed else EXIT_OK


# -- sparre -----------------------------------------------------------------------


def cmd_sparre(args) -> int:
    text = " ".join(args.values) if args.values else sys.stdin.read()
    try:
        seq = [float(v) for v in text.split()]
    except ValueError:
        raise UsageError("sequence must be whitespace-separated numbers") from None
    if not seq:
        raise UsageError("empty sequence")
    out = sparre.inverse_transform(seq) if args.inverse else sparre.transform(seq)
    print(" ".join(f"{v:.17g}" for v in out))
    neg = sparre.negative_partial_sum_indices(seq)
    print(f"negative partial sums: {len(neg)}")
    print(f"first minimum position: {sparre.first_minimum_position(out)}")
    return EXIT_OK


# -- parser -----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fluctua", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("law", help="tabulate a limit law as CSV")
    p.add_argument("law", choices=LAWS)
    p.add_argument("--grid", default="0.01:5:200", help="a:b:n (for joint_zero: the y grid)")
    p.add_argument("--tgrid", help="t grid for joint_zero (defaults to --grid)")
    p.add_argument("--z", type=float, default=0.0)
    p.add_argument("--delta", type=float, default=1.0)
    p.add_argument("--sigma2", type=float, default=1.0)
    p.add_argument("--horizon", type=float, default=1.0)
    p.add_argument("--rate", type=float, default=1.0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_law)

    p = sub.add_parser("gf", help="ladder and occupation generating functions as JSON")
    p.add_argument("--family.p", dest="p", type=float)
    p.add_argument("--family.offsets", dest="offsets", type=int, nargs="+")
    p.add_argument("--family.probs", dest="probs", type=float, nargs="+")
    p.add_argument("--order", type=int, default=60)
    p.add_argument("--horizon", type=int, help="terms of the sign-probability sums")
    p.add_argument("--no-occupation", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_gf)

    p = sub.add_parser("mc", help="simulate a functional and report against its limit law")
    p.add_argument("--config", help="JSON file with flat dotted keys (or a previous report)")
    for key, typ in MC_KEYS.items():
        dest = key.replace(".", "_")
        if typ is list:
            elem = int if key == "family.offsets" else float
            p.add_argument(f"--{key}", dest=dest, type=elem, nargs="+")
        else:
            p.add_argument(f"--{key}", dest=dest, type=typ)
    p.add_argument("--out")
    p.add_argument("--raw", help="write x,ecdf,cdf_target CSV of the rescaled sample")
    p.set_defaults(func=cmd_mc)

    p = sub.add_parser("verify", help="run the acceptance suite")
    p.add_argument("--only", nargs="+", metavar="CRITERION")
    p.add_argument("--n-paths", type=int, default=100_000)
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--rule.epsilon", dest="rule_epsilon", type=float, default=1e-9)
    p.add_argument("--json", help="also write the results as JSON")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("sparre", help="rearrange a sequence (reads stdin without arguments)")
    p.add_argument("values", nargs="*")
    p.add_argument("--inverse", action="store_true")
    p.set_defaults(func=cmd_sparre)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except mc.UnsupportedFamilyError as exc:
        print(f"unsupported family: {exc}", file=sys.stderr)
        return EXIT_UNSUPPORTED
    except (DomainError, fl.ResourceError) as exc:
        print(f"domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except (OSError, json.JSONDecodeError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
