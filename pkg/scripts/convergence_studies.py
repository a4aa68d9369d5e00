"""Grid-refinement studies for the built-in setups.

Writes one JSON and one CSV per study into the output directory. The
``fig5`` study prices the knock-out put and the no-touch at once and uses
the N=6400 chain as reference (about 1.5 GB of memory, a few minutes).

Usage: python3 scripts/convergence_studies.py [--out results] [fig3 fig5 fig6]
"""

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from mgbarrier import presets
from mgbarrier.convergence import ConvergenceReport, fit_slope, predicted_bound, run_study
from mgbarrier.oracle import gbm_double_barrier
from mgbarrier.pricer import Payoff, price_knockout


def fig3(out: Path):
    exact = gbm_double_barrier(95.0, 100.0, 90.0, 140.0, 1.0, 0.1, 0.25)
    s = presets.fig3_setup()
    rep = run_study(s.price, presets.FIG3_SIZES, exact, "analytic series",
                    predicted=predicted_bound(s.model, s.grid(presets.FIG3_SIZES[-1])))
    return {"fig3": rep}


def fig5(out: Path):
    def pair(N):
        s = presets.table2_setup(100, "put", N)
        G = s.generator()
        v = price_knockout(G, [Payoff("put", 3500.0), 1.0], 0.1, 0.03, 2800.0, 4200.0, s.expm)
        return v[G.grid.index_of(s.spot)]

    sizes = list(presets.FIG5_SIZES)
    ref = pair(presets.FIG5_REFERENCE_N)
    vals = np.array([pair(N) for N in sizes])
    src = f"self-reference, N={presets.FIG5_REFERENCE_N}"
    reps = {}
    for j, name in enumerate(("fig5-put", "fig5-dnt")):
        err = np.abs(vals[:, j] - ref[j])
        slope, icpt, use = fit_slope(sizes, err)
        reps[name] = ConvergenceReport(sizes, vals[:, j].tolist(), err.tolist(), slope, icpt,
                                       float(ref[j]), src, use.tolist())
    return reps


def fig6(out: Path):
    s = presets.fig6_setup()
    ref = s.price(presets.FIG6_REFERENCE_N)
    rep = run_study(s.price, presets.FIG6_SIZES, ref, f"self-reference, N={presets.FIG6_REFERENCE_N}")
    return {"fig6": rep}


STUDIES = {"fig3": fig3, "fig5": fig5, "fig6": fig6}


def run(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("studies", nargs="*", default=list(STUDIES))
    p.add_argument("--out", default="results")
    args = p.parse_args(argv)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for name in args.studies:
        for key, rep in STUDIES[name](out).items():
            rep.to_json(out / f"{key}.json")
            rep.to_csv(out / f"{key}.csv")
            print(f"{key:10s} slope {rep.slope:+.3f}  reference {rep.reference:.8g} ({rep.reference_source})")
            print("   " + json.dumps(dict(zip(rep.sizes, [f"{v:.9g}" for v in rep.values]))))
    return 0


if __name__ == "__main__":
    sys.exit(run())
