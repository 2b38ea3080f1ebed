"""Smallest K meeting a 5 degree mean angle at a frozen width, against n and against kmax."""

import logging

from _common import parser, run_and_save
from tanlab import experiments as ex


def main():
    p = parser(__doc__)
    p.add_argument("--k-cap", type=int, default=10_000)
    args = p.parse_args()
    common = dict(theta_bound_deg=5.0, trials=args.trials, seed=args.seed, k_cap=args.k_cap)
    rows = run_and_save(ex.ExperimentConfig("min_k_vs_n", m=(5, 10, 15), n=tuple(range(100, 1001, 100)),
                                            kmax=10.0, **common), args.out_dir, "min_k_vs_n")
    for m in (5, 10, 15):
        ks = [r["min_k"] for r in rows if r["m"] == m]
        print(f"min K vs n, m={m}: {ks}")
    rows = run_and_save(ex.ExperimentConfig("min_k_vs_kmax", m=5, n=100, kmax=(1.0, 2.0, 4.0, 6.0, 8.0, 10.0),
                                            **common), args.out_dir, "min_k_vs_kmax")
    print("min K vs kmax:", [(r["kmax"], r["min_k"]) for r in rows])


if __name__ == "__main__":
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    main()
