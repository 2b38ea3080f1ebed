"""Largest width meeting a 5 degree mean angle, against n and against kmax."""

import logging

from _common import parser, run_and_save
from tanlab import experiments as ex


def main():
    args = parser(__doc__).parse_args()
    common = dict(m=5, k_fixed=2000, theta_bound_deg=5.0, trials=args.trials, seed=args.seed)
    rows = run_and_save(ex.ExperimentConfig("max_nu_vs_n", n=tuple(range(100, 1001, 100)), kmax=10.0, **common),
                        args.out_dir, "max_nu_vs_n")
    slope = ex.loglog_slope([r["n"] for r in rows], [r["max_nu"] for r in rows])
    gam = [r["gamma"] for r in rows]
    print(f"max nu vs n: log-log slope {slope:.3f}, gamma {min(gam):.2f}..{max(gam):.2f}")
    kmax = (0.5, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0)
    rows = run_and_save(ex.ExperimentConfig("max_nu_vs_kmax", n=100, kmax=kmax, **common),
                        args.out_dir, "max_nu_vs_kmax")
    slope = ex.loglog_slope([r["kmax"] for r in rows], [r["max_nu"] for r in rows])
    print(f"max nu vs kmax: log-log slope {slope:.3f}")


if __name__ == "__main__":
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    main()
