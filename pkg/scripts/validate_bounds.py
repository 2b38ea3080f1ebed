"""Monte-Carlo frequencies of the three spectral bad events against their tail bounds."""

import argparse
import os

from tanlab import experiments as ex
from tanlab.concentration import append_validation_csv


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--out-dir", default="results")
    p.add_argument("--reps", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--gamma", type=float, nargs="+", default=[0.5, 1.0])
    args = p.parse_args()
    cfg = ex.ExperimentConfig("validate_bounds", m=5, n=100, kmax=10.0, k_fixed=2000, reps=args.reps,
                              gamma=tuple(args.gamma), seed=args.seed)
    results = ex.run_validate_bounds(cfg)
    os.makedirs(args.out_dir, exist_ok=True)
    path = os.path.join(args.out_dir, "validate_bounds.csv")
    if os.path.exists(path):
        os.remove(path)
    append_validation_csv(results, path)
    for r in results:
        q = r.query
        verdict = "ok" if r.is_sound() else "VIOLATED"
        print(f"nu={q.nu:.4g} {q.kind:15s} empirical {r.empirical_frequency:.4f}  bound {r.theoretical_bound:.4g}  {verdict}")


if __name__ == "__main__":
    main()
