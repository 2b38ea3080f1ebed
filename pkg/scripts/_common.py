import argparse
import logging
import os

from tanlab import experiments as ex
from tanlab.cli import chart


def parser(description):
    p = argparse.ArgumentParser(description=description)
    p.add_argument("--out-dir", default="results")
    p.add_argument("--trials", type=int, default=25)
    p.add_argument("--seed", type=int, default=42)
    return p


def run_and_save(cfg: ex.ExperimentConfig, out_dir: str, stem: str) -> list[dict]:
    os.makedirs(out_dir, exist_ok=True)
    columns, rows = ex.run(cfg)
    path = os.path.join(out_dir, stem + ".csv")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(ex.rows_to_csv(columns, rows))
    with open(os.path.join(out_dir, stem + ".svg"), "w", encoding="utf-8") as fh:
        fh.write(chart(cfg, rows))
    logging.info("wrote %s (%d rows)", path, len(rows))
    return rows
