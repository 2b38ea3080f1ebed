"""Mean angle against K for every germ family at several width multipliers."""

import logging

from _common import parser, run_and_save
from tanlab import experiments as ex
from tanlab.manifold import FAMILIES


def main():
    p = parser(__doc__)
    p.add_argument("--n", type=int, nargs="+", default=[100])
    args = p.parse_args()
    for family in FAMILIES:
        cfg = ex.ExperimentConfig("angle_vs_k", family=family, m=5, n=tuple(args.n), kmax=10.0,
                                  trials=args.trials, seed=args.seed)
        rows = run_and_save(cfg, args.out_dir, f"angle_vs_k_{family}")
        for gamma in cfg.gamma:
            k, a = ex.aggregate_curve(rows, gamma=gamma, n=cfg.n[0])
            print(f"{family:13s} gamma={gamma:<4g} K={k[0]}: {a[0]:6.2f} deg  K={k[-1]}: {a[-1]:6.2f} deg  "
                  f"spearman {ex.spearman(k, a):+.2f}")


if __name__ == "__main__":
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    main()
