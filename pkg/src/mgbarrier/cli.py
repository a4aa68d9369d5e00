"""Command-line front end.

Exit codes: 0 success, 1 reproduction outside tolerance, 2 invalid
input, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
import time
from pathlib import Path
from dataclasses import replace

import numpy as np

from . import presets
from .config import ConfigError, Setup, load_config
from .convergence import predicted_bound, run_study
from .genbuild import validate
from .matexp import ExpmConfig
from .pricer import Payoff, greeks, price_contract, price_knockout

EXIT_OK, EXIT_MISMATCH, EXIT_INVALID, EXIT_NUMERIC = 0, 1, 2, 3

log = logging.getLogger("mgbarrier")


def _sig(v, digits=9):
    if isinstance(v, float):
        if not math.isfinite(v):
            return str(v)
        return float(f"{v:.{digits}g}")
    if isinstance(v, dict):
        return {k: _sig(x, digits) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_sig(x, digits) for x in v]
    if isinstance(v, np.generic):
        return _sig(v.item(), digits)
    return v


def _dump(obj, path=None):
    s = json.dumps(_sig(obj), indent=2, sort_keys=False)
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(s + "\n")
    else:
        print(s)


def _apply_flags(setup: Setup, args) -> Setup:
    if getattr(args, "builder", None):
        setup = replace(setup, builder=args.builder)
    if getattr(args, "expm", None):
        setup = replace(setup, expm=ExpmConfig(args.expm, setup.expm.tol, setup.expm.max_terms))
    return setup


def cmd_price(args) -> int:
    setup, raw = load_config(args.config)
    setup = _apply_flags(setup, args)
    t0 = time.perf_counter()
    grid = setup.grid(None if setup.counts else setup.N)
    if setup.schedule:
        surf = setup._schedule_surface(None, setup.builder)
        diag = None
    else:
        G = setup.generator(grid=grid)
        diag = validate(G)
        surf = price_contract(setup.contract, G, setup.expm)
    if not np.all(np.isfinite(surf.values)):
        raise FloatingPointError("non-finite prices")
    out = {"config": raw, "builder": setup.builder, "expm": setup.expm.method,
           "n_points": len(grid), "spot": setup.spot, "spot_price": surf.spot_price}
    try:
        out["greeks"] = greeks(surf)
    except ValueError:
        pass
    if diag is not None:
        out["diagnostics"] = diag.to_dict()
        out["bound"] = predicted_bound(setup.model, grid)
    out["seconds"] = time.perf_counter() - t0
    fmt = args.format
    if args.out and fmt in ("csv", "both"):
        surf.to_csv(_with_suffix(args.out, ".csv"))
    if fmt in ("json", "both") or not args.out:
        _dump(out, _with_suffix(args.out, ".json") if args.out else None)
    return EXIT_OK


def _with_suffix(path, suffix):
    return str(Path(path).with_suffix(suffix))


PRESET_STUDIES = {
    "fig3": lambda: (presets.fig3_setup(), presets.FIG3_REFERENCE, "stored chain value, N=3000",
                     presets.FIG3_SIZES),
    "fig5-put": lambda: (presets.table2_setup(100, "put"), presets.FIG5_REFERENCE[0],
                         "stored chain value, N=6400", presets.FIG5_SIZES),
    "fig5-dnt": lambda: (presets.table2_setup(100, "dnt"), presets.FIG5_REFERENCE[1],
                         "stored chain value, N=6400", presets.FIG5_SIZES),
    "fig6": lambda: (presets.fig6_setup(), presets.FIG6_REFERENCE, "stored chain value, N=5000",
                     presets.FIG6_SIZES),
}


def _parse_sizes(s):
    try:
        sizes = [int(x) for x in s.split(",") if x.strip()]
    except ValueError:
        raise ConfigError(f"--sizes: expected comma-separated integers, got {s!r}") from None
    return sizes


def cmd_converge(args) -> int:
    if args.preset:
        setup, ref, src, sizes = PRESET_STUDIES[args.preset]()
        raw = {"preset": args.preset}
    else:
        if not args.config:
            raise ConfigError("converge needs --config or --preset")
        setup, raw = load_config(args.config)
        ref, src, sizes = None, None, None
    setup = _apply_flags(setup, args)
    if args.sizes:
        sizes = _parse_sizes(args.sizes)
    if not sizes or len(sizes) < 3:
        raise ConfigError("--sizes: a convergence study needs at least 3 sizes")
    if args.reference is not None:
        ref, src = args.reference, "user supplied"
    elif args.reference_n:
        ref, src = setup.price(args.reference_n), f"self-reference, N={args.reference_n}"
    if ref is None:
        raise ConfigError("converge needs --reference or --reference-n")
    rep = run_study(setup.price, sizes, ref, src, tol=setup.expm.tol,
                    predicted=predicted_bound(setup.model, setup.grid(sizes[-1])))
    if args.out:
        rep.to_csv(_with_suffix(args.out, ".csv"))
        _dump({"config": raw, **rep.to_dict()}, _with_suffix(args.out, ".json"))
    else:
        _dump({"config": raw, **rep.to_dict()})
    return EXIT_OK


def _reproduce_t1():
    for k, col in enumerate(presets.TABLE1_COLUMNS):
        s = presets.table1_setup(k)
        yield (s.name, col[5], s.price(), 2e-5, False)


def _reproduce_t2():
    for pct, put, dnt in presets.TABLE2_ROWS:
        sp = presets.table2_setup(pct, "put")
        G = sp.generator()
        v = price_knockout(G, [Payoff("put", 3500.0), 1.0], 0.1, 0.03, 2800.0, 4200.0, sp.expm)
        i = G.grid.index_of(sp.spot)
        yield (f"t2-{pct}-put", put, float(v[i, 0]), presets.TABLE2_PUT_RTOL, True)
        yield (f"t2-{pct}-dnt", dnt, float(v[i, 1]), presets.TABLE2_DNT_ATOL, False)


def _reproduce_t3():
    for beta, lam, v400, v800, v1200, _ in presets.TABLE3_ROWS:
        for N, ref in zip(presets.TABLE3_SIZES, (v400, v800, v1200)):
            s = presets.table3_setup(beta, lam, N)
            yield (f"{s.name}-N{N}", ref, s.price(), presets.TABLE3_TOL, False)


REPRODUCERS = {"t1": _reproduce_t1, "t2": _reproduce_t2, "t3": _reproduce_t3}


def cmd_reproduce(args) -> int:
    rows = []
    bad = 0
    for name, ref, val, tol, rel in REPRODUCERS[args.table]():
        diff = abs(val - ref)
        ok = diff <= (tol * abs(ref) if rel else tol)
        bad += not ok
        rows.append((name, ref, val, diff, ok))
        print(f"{name:24s} reference {ref:<12.7g} computed {val:<14.9g} |diff| {diff:.3e} "
              f"{'ok' if ok else 'OUT OF TOLERANCE'}", flush=True)
    if args.out:
        with open(args.out, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["config", "reference", "computed", "abs_diff", "within_tolerance"])
            for r in rows:
                w.writerow([r[0], repr(r[1]), f"{r[2]:.9g}", f"{r[3]:.3e}", r[4]])
    return EXIT_MISMATCH if bad else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mgbarrier", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="cmd", required=True)

    def common(sp):
        sp.add_argument("--out", help="output path (suffix chooses .json/.csv)")
        sp.add_argument("--builder", choices=("mm", "fd"))
        sp.add_argument("--expm", choices=("pade", "uniformization", "auto"))

    sp = sub.add_parser("price", help="price one contract from a JSON job file")
    sp.add_argument("--config", required=True)
    sp.add_argument("--format", choices=("json", "csv", "both"), default="both")
    common(sp)
    sp.set_defaults(func=cmd_price)

    sp = sub.add_parser("converge", help="convergence study over grid sizes")
    sp.add_argument("--config")
    sp.add_argument("--preset", choices=sorted(PRESET_STUDIES))
    sp.add_argument("--sizes", help="comma-separated grid sizes, e.g. 200,400,800")
    sp.add_argument("--reference", type=float)
    sp.add_argument("--reference-n", type=int, help="use the price at this size as reference")
    common(sp)
    sp.set_defaults(func=cmd_converge)

    sp = sub.add_parser("reproduce", help="rerun a built-in table against its stored reference values")
    sp.add_argument("table", choices=sorted(REPRODUCERS))
    sp.add_argument("--out", help="comparison CSV")
    sp.set_defaults(func=cmd_reproduce)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "out", None):
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID
    except (FloatingPointError, np.linalg.LinAlgError) as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, KeyError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
