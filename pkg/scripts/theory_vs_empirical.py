"""Bound curves (K_bound against angle) next to measured mean-angle curves."""

import logging

from _common import parser, run_and_save
from tanlab import experiments as ex


def main():
    p = parser(__doc__)
    p.add_argument("--families", nargs="+", default=["quadratic", "smooth2_sin"])
    args = p.parse_args()
    for family in args.families:
        cfg = ex.ExperimentConfig("theory_vs_empirical", family=family, m=5, n=100, kmax=10.0,
                                  trials=args.trials, seed=args.seed)
        rows = run_and_save(cfg, args.out_dir, f"theory_vs_empirical_{family}")
        for c in cfg.c_grid:
            theory = [r for r in rows if r["trial"] == ex.BOUND and r["c"] == c]
            if not theory:
                continue
            k, a = ex.aggregate_curve(rows, c=c, series="empirical")
            print(f"{family:13s} c={c:<4g} bound: {theory[0]['angle_deg']:.2f}..{theory[-1]['angle_deg']:.2f} deg "
                  f"for K {theory[-1]['k_bound']:.3g}..{theory[0]['k_bound']:.3g}; "
                  f"measured {a[0]:.3f} -> {a[-1]:.3f} deg")


if __name__ == "__main__":
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    main()
