"""Experiment harness: angle-vs-K curves, theory vs empirical, width and density sweeps.

Each trial owns one random germ and one unit-width cloud, both drawn from
streams keyed by (seed, grid index, trial index).  Widths are applied by
scaling the unit cloud and sample counts by taking prefixes, so every
curve uses common random numbers along its abscissa.
"""

from __future__ import annotations

import csv
import io
import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from .bounds import BoundParams, angle_bound, k_bounds, nu_bound_quad, s3_bound, smooth_terms, smooth_width_terms
from .concentration import KINDS, TailBoundQuery, validate_tail_bounds, validation_row, VALIDATION_HEADER
from .estimator import FactoredPCA, estimate_angle, prefix_angles
from .manifold import FAMILIES, envelope_spec, estimate_cs, generate_embedding, polynomial_features
from .rng import EMBEDDING
from .sampling import embed_coords, sample_cloud

log = logging.getLogger(__name__)

EXPERIMENTS = ("angle_vs_k", "theory_vs_empirical", "max_nu_vs_n", "max_nu_vs_kmax",
               "min_k_vs_n", "min_k_vs_kmax", "validate_bounds")
DEFAULT_GAMMAS = (0.5, 1.2, 2.0, 4.0)
QUAD_C_GRID = (0.2, 0.4, 0.6, 0.8)
SMOOTH_C_GRID = (0.1, 0.2, 0.3, 0.4)
TAU_GRID = tuple(round(0.01 * i, 2) for i in range(1, 21))
S1, S2, P_FAIL = 0.5, 2 * math.e, 0.01
AGGREGATE = "AGGREGATE"
BOUND = "BOUND"

ANGLE_COLUMNS = ["experiment", "family", "m", "n", "kmax", "structure", "gamma", "nu", "K", "trial", "angle_deg"]
THEORY_COLUMNS = ANGLE_COLUMNS + ["series", "c", "tau", "s3", "cs", "k_bound"]
MAX_NU_COLUMNS = ["experiment", "family", "m", "n", "kmax", "structure", "theta_bound_deg", "K",
                  "nu_bound_quad", "max_nu", "gamma", "steps", "censored"]
MIN_K_COLUMNS = ["experiment", "family", "m", "n", "kmax", "structure", "theta_bound_deg", "nu",
                 "min_k", "censored"]


class ConfigError(ValueError):
    pass


def _tuple(v, cast) -> tuple:
    if isinstance(v, (str, bytes)) or not isinstance(v, Sequence) and not isinstance(v, np.ndarray):
        return (cast(v),)
    return tuple(cast(x) for x in v)


@dataclass
class ExperimentConfig:
    experiment: str
    family: str = "quadratic"
    m: int | tuple[int, ...] = 5
    n: int | tuple[int, ...] = 100
    kmax: float | tuple[float, ...] = 10.0
    gamma: tuple[float, ...] = DEFAULT_GAMMAS
    k_grid: tuple[int, ...] = tuple(range(100, 2001, 100))
    trials: int = 25
    theta_bound_deg: float | tuple[float, ...] = 5.0
    seed: int = 42
    structure: str = "dense"
    c_grid: tuple[float, ...] | None = None  # None: family default
    tau_grid: tuple[float, ...] = TAU_GRID
    k_fixed: int = 2000  # max-nu sweeps
    k_cap: int = 10_000  # min-K sweeps
    nu_decay: float = 0.95
    max_steps: int = 200
    aggregate: str = "mean"
    # validate_bounds
    kinds: tuple[str, ...] = KINDS
    reps: int = 500
    s3: float | None = None
    out: str | None = None
    svg: str | None = None
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}; expected one of {EXPERIMENTS}")
        if self.family not in FAMILIES:
            raise ConfigError(f"unknown family {self.family!r}; expected one of {FAMILIES}")
        self.m = _tuple(self.m, int)
        self.n = _tuple(self.n, int)
        self.kmax = _tuple(self.kmax, float)
        self.gamma = _tuple(self.gamma, float)
        self.k_grid = _tuple(self.k_grid, int)
        self.theta_bound_deg = _tuple(self.theta_bound_deg, float)
        self.tau_grid = _tuple(self.tau_grid, float)
        self.kinds = _tuple(self.kinds, str)
        if self.c_grid is None:
            self.c_grid = QUAD_C_GRID if self.family == "quadratic" else SMOOTH_C_GRID
        self.c_grid = _tuple(self.c_grid, float)
        for name in ("m", "n", "kmax", "gamma", "k_grid", "theta_bound_deg", "tau_grid", "c_grid"):
            grid = getattr(self, name)
            if not grid:
                raise ConfigError(f"{name} grid is empty")
            if any(b <= a for a, b in zip(grid, grid[1:])):
                raise ConfigError(f"{name} grid must be strictly increasing")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if min(self.m) < 1 or any(m >= min(self.n) for m in self.m):
            raise ConfigError("need 1 <= m < n for every grid point")
        if min(self.kmax) < 0:
            raise ConfigError("kmax must be non-negative")
        if min(self.gamma) <= 0 or min(self.k_grid) < 1:
            raise ConfigError("gamma values and K values must be positive")
        if not 0 < self.nu_decay < 1 or self.max_steps < 1:
            raise ConfigError("nu_decay must lie in (0, 1) and max_steps be >= 1")
        if any(not 0 < t <= 90 for t in self.theta_bound_deg):
            raise ConfigError("theta_bound_deg values must lie in (0, 90]")
        if self.structure not in ("dense", "diagonal"):
            raise ConfigError("structure must be dense or diagonal")
        if self.aggregate not in ("mean", "median"):
            raise ConfigError("aggregate must be mean or median")
        if any(k not in KINDS for k in self.kinds):
            raise ConfigError(f"kinds must be drawn from {KINDS}")


class TrialEngine:
    """One germ plus one unit-width cloud; angles at any (nu, K prefix)."""

    def __init__(self, spec, unit_coords: np.ndarray):
        self.spec = spec
        self.unit = unit_coords
        pf = polynomial_features(spec)
        self.fast = pf is not None
        self._cache: dict = {}
        if self.fast:
            self.pca = FactoredPCA(spec.m, pf.coef)
            self.phi = np.hstack([unit_coords, pf.features(unit_coords)])
            self.deg = np.concatenate([np.ones(spec.m), pf.degrees])

    @classmethod
    def build(cls, family, m, n, kmax, K, seed, grid_index, trial):
        spec = generate_embedding(family, m, n, kmax, (seed, *grid_index, trial, EMBEDDING))
        unit = sample_cloud(m, 1.0, K, seed, trial, grid_index).coords
        return cls(spec, unit)

    def _unit_gram(self, K: int) -> np.ndarray:
        g = self._cache.get(K)
        if g is None:
            p = self.phi[:K]
            g = self._cache[K] = (p.T @ p) / K
        return g

    def _data(self, nu: float) -> np.ndarray:
        hit = self._cache.get("x")
        if hit is None or hit[0] != nu:
            hit = self._cache["x"] = (nu, embed_coords(self.spec, nu * self.unit))
        return hit[1]

    def angle(self, nu: float, K: int) -> float:
        """Radians."""
        if self.fast:
            scale = nu ** self.deg
            return self.pca.angle(self._unit_gram(K) * np.outer(scale, scale))
        return estimate_angle(self._data(nu)[:, :K], self.spec.m)

    def angles(self, nu: float, k_list) -> np.ndarray:
        if self.fast:
            return np.array([self.angle(nu, K) for K in k_list])
        return prefix_angles(self._data(nu), self.spec.m, k_list)


def _reference_width(m, n, kmax, structure) -> float:
    """nu_bound_quad, or 1 for a flat germ where any width is admissible."""
    return nu_bound_quad(m, n, kmax, structure) if kmax > 0 else 1.0


def _center(values, how: str) -> float:
    return float(np.median(values) if how == "median" else np.mean(values))


def _engines(cfg, m, n, kmax, K, grid_index):
    return [TrialEngine.build(cfg.family, m, n, kmax, K, cfg.seed, grid_index, t) for t in range(cfg.trials)]


def _angle_rows(cfg, experiment, m, n, kmax, gamma, nu, engines, k_list, extra=None) -> list[dict]:
    per_trial = np.degrees(np.array([e.angles(nu, k_list) for e in engines]))
    rows = []
    base = {"experiment": experiment, "family": cfg.family, "m": m, "n": n, "kmax": kmax,
            "structure": cfg.structure, "gamma": gamma, "nu": nu}
    for ki, K in enumerate(k_list):
        for t in range(len(engines)):
            rows.append({**base, "K": K, "trial": t, "angle_deg": float(per_trial[t, ki]), **(extra or {})})
        rows.append({**base, "K": K, "trial": AGGREGATE,
                     "angle_deg": _center(per_trial[:, ki], cfg.aggregate), **(extra or {})})
    return rows


def run_angle_vs_k(cfg: ExperimentConfig) -> list[dict]:
    """Mean angle against K for every (n, kmax, gamma), with nu = gamma * nu_bound_quad."""
    rows = []
    m = cfg.m[0]
    for ni, n in enumerate(cfg.n):
        for ki, kmax in enumerate(cfg.kmax):
            ref = _reference_width(m, n, kmax, cfg.structure)
            for gi, gamma in enumerate(cfg.gamma):
                engines = _engines(cfg, m, n, kmax, max(cfg.k_grid), (ni, ki, gi))
                rows += _angle_rows(cfg, "angle_vs_k", m, n, kmax, gamma, gamma * ref, engines, cfg.k_grid)
    return rows


def smooth_cs(family: str, m: int, kmax: float, nu: float) -> float:
    """C_s valid for every random germ of ``family`` on [-nu, nu]^m (worst-case envelope)."""
    if family == "quadratic":
        return 0.0
    return estimate_cs(envelope_spec(family, m, kmax), nu).cs


def theory_curve(family, m, n, kmax, c, structure="dense", tau_grid=TAU_GRID):
    """(nu, gamma, cs, [(tau, s3, k_bound, angle_rad)]) for one scale parameter c."""
    ref = nu_bound_quad(m, n, kmax, structure)
    if family == "quadratic":
        cs = 0.0
        nu = c * math.sqrt(S1 / S2) * ref
        case = "quad"
    else:
        cs = smooth_cs(family, m, kmax, ref)
        nu = c * smooth_width_terms(BoundParams(m, n, kmax, ref, cs=cs, structure=structure))[4]
        case = "smooth"
    base = BoundParams(m, n, kmax, nu, cs=cs, s1=S1, s2=S2, p1=P_FAIL, p2=P_FAIL, p3=P_FAIL, structure=structure)
    sigma_f = smooth_terms(base).sigma_f if case == "smooth" else 0.0
    points = []
    for tau in tau_grid:
        p = base.with_(tau=tau)
        s3 = 0.99 * s3_bound(p, case)
        try:
            ang = angle_bound(tau, m, sigma_f)
        except ValueError:
            continue
        points.append((tau, s3, k_bounds(p, s3).k_bound, ang))
    return nu, nu / ref, cs, points


def run_theory_vs_empirical(cfg: ExperimentConfig) -> list[dict]:
    rows = []
    m = cfg.m[0]
    for ni, n in enumerate(cfg.n):
        for ki, kmax in enumerate(cfg.kmax):
            for ci, c in enumerate(cfg.c_grid):
                try:
                    nu, gamma, cs, points = theory_curve(cfg.family, m, n, kmax, c, cfg.structure, cfg.tau_grid)
                except ValueError as exc:
                    log.warning("skipping c=%g (n=%d, kmax=%g): %s", c, n, kmax, exc)
                    continue
                base = {"experiment": "theory_vs_empirical", "family": cfg.family, "m": m, "n": n,
                        "kmax": kmax, "structure": cfg.structure, "gamma": gamma, "nu": nu}
                for tau, s3, kb, ang in points:
                    rows.append({**base, "K": math.ceil(kb), "trial": BOUND, "angle_deg": math.degrees(ang),
                                 "series": "theory", "c": c, "tau": tau, "s3": s3, "cs": cs, "k_bound": kb})
                engines = _engines(cfg, m, n, kmax, max(cfg.k_grid), (ni, ki, ci))
                extra = {"series": "empirical", "c": c, "tau": "", "s3": "", "cs": cs, "k_bound": ""}
                rows += _angle_rows(cfg, "theory_vs_empirical", m, n, kmax, gamma, nu, engines, cfg.k_grid, extra)
    return rows


def _passes(engines, nu: float, K: int, theta_deg: float) -> bool:
    """Mean angle over trials < theta; stops as soon as failure is certain."""
    limit = len(engines) * math.radians(theta_deg)
    total = 0.0
    for e in engines:
        total += e.angle(nu, K)
        if total >= limit:
            return False
    return True


def _passes_median(engines, nu, K, theta_deg) -> bool:
    return float(np.median([e.angle(nu, K) for e in engines])) < math.radians(theta_deg)


def _grid_points(cfg):
    """(grid index, m, n, kmax) over the swept axis and any fixed axes."""
    out = []
    for mi, m in enumerate(cfg.m):
        for ni, n in enumerate(cfg.n):
            for ki, kmax in enumerate(cfg.kmax):
                out.append(((mi, ni, ki), m, n, kmax))
    return out


def run_max_nu_sweep(cfg: ExperimentConfig) -> list[dict]:
    """Largest width (geometric schedule from 3 nu_bound_quad) whose mean angle is below theta."""
    if cfg.experiment not in ("max_nu_vs_n", "max_nu_vs_kmax"):
        raise ConfigError("run_max_nu_sweep needs experiment max_nu_vs_n or max_nu_vs_kmax")
    if min(cfg.kmax) <= 0:
        raise ConfigError("max-nu sweeps need kmax > 0 (a flat germ admits any width)")
    check = _passes_median if cfg.aggregate == "median" else _passes
    rows = []
    for grid, m, n, kmax in _grid_points(cfg):
        ref = nu_bound_quad(m, n, kmax, cfg.structure)
        engines = _engines(cfg, m, n, kmax, cfg.k_fixed, grid)
        for theta in cfg.theta_bound_deg:
            nu, censored = 3.0 * ref, True
            for step in range(cfg.max_steps):
                nu = 3.0 * ref * cfg.nu_decay ** step
                if check(engines, nu, cfg.k_fixed, theta):
                    censored = False
                    break
            rows.append({"experiment": cfg.experiment, "family": cfg.family, "m": m, "n": n, "kmax": kmax,
                         "structure": cfg.structure, "theta_bound_deg": theta, "K": cfg.k_fixed,
                         "nu_bound_quad": ref, "max_nu": nu, "gamma": nu / ref, "steps": step + 1,
                         "censored": censored})
    return rows


def run_min_k_sweep(cfg: ExperimentConfig) -> list[dict]:
    """Smallest K on the grid whose mean angle is below theta at a frozen width.

    The width is nu_bound_quad evaluated at the largest n and kmax of the grids.
    """
    if cfg.experiment not in ("min_k_vs_n", "min_k_vs_kmax"):
        raise ConfigError("run_min_k_sweep needs experiment min_k_vs_n or min_k_vs_kmax")
    check = _passes_median if cfg.aggregate == "median" else _passes
    k_grid = [K for K in range(100, cfg.k_cap + 1, 100)]
    rows = []
    for grid, m, n, kmax in _grid_points(cfg):
        k_large = max(cfg.kmax)
        nu = _reference_width(m, max(cfg.n), k_large, cfg.structure)
        engines = _engines(cfg, m, n, kmax, cfg.k_cap, grid)
        for theta in cfg.theta_bound_deg:
            found, censored = cfg.k_cap, True
            for K in k_grid:
                if K < m:
                    continue
                if check(engines, nu, K, theta):
                    found, censored = K, False
                    break
            rows.append({"experiment": cfg.experiment, "family": cfg.family, "m": m, "n": n, "kmax": kmax,
                         "structure": cfg.structure, "theta_bound_deg": theta, "nu": nu,
                         "min_k": found, "censored": censored})
    return rows


def default_bernstein_s3(m, n, kmax, nu, K, structure="dense", target=0.05) -> float:
    """s3 at which the Bernstein tail bound equals ``target`` (bisection in log s3)."""
    from .concentration import bernstein_tail
    lo, hi = 1e-300, 1e300
    for _ in range(200):
        mid = math.sqrt(lo * hi)
        if bernstein_tail(m, n, kmax, nu, K, mid, structure) > target:
            lo = mid
        else:
            hi = mid
    return hi


def run_validate_bounds(cfg: ExperimentConfig) -> list:
    """Tail-bound soundness check at nu = gamma * nu_bound_quad, K = k_fixed, for each gamma."""
    out = []
    m, n, kmax = cfg.m[0], cfg.n[0], cfg.kmax[0]
    ref = _reference_width(m, n, kmax, cfg.structure)
    for gamma in cfg.gamma:
        nu = gamma * ref
        for kind in cfg.kinds:
            if kind == "chernoff_lower":
                t = S1
            elif kind == "chernoff_upper":
                t = S2
            else:
                t = cfg.s3 if cfg.s3 is not None else default_bernstein_s3(m, n, kmax, nu, cfg.k_fixed, cfg.structure)
            q = TailBoundQuery(kind, m, n, kmax, nu, cfg.k_fixed, t, cfg.structure)
            out.append(validate_tail_bounds(q, cfg.reps, cfg.seed))
    return out


COLUMNS = {
    "angle_vs_k": ANGLE_COLUMNS,
    "theory_vs_empirical": THEORY_COLUMNS,
    "max_nu_vs_n": MAX_NU_COLUMNS,
    "max_nu_vs_kmax": MAX_NU_COLUMNS,
    "min_k_vs_n": MIN_K_COLUMNS,
    "min_k_vs_kmax": MIN_K_COLUMNS,
}


def run(cfg: ExperimentConfig):
    """Dispatch on ``cfg.experiment``; returns (columns, rows)."""
    e = cfg.experiment
    if e == "angle_vs_k":
        return ANGLE_COLUMNS, run_angle_vs_k(cfg)
    if e == "theory_vs_empirical":
        return THEORY_COLUMNS, run_theory_vs_empirical(cfg)
    if e.startswith("max_nu"):
        return MAX_NU_COLUMNS, run_max_nu_sweep(cfg)
    if e.startswith("min_k"):
        return MIN_K_COLUMNS, run_min_k_sweep(cfg)
    results = run_validate_bounds(cfg)
    return VALIDATION_HEADER, [dict(zip(VALIDATION_HEADER, validation_row(r))) for r in results]


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def rows_to_csv(columns, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(r.get(c, "")) for c in columns])
    return buf.getvalue()


def aggregate_curve(rows, **match) -> tuple[np.ndarray, np.ndarray]:
    """(K, aggregate angle) for AGGREGATE rows matching ``match``."""
    sel = [r for r in rows if r["trial"] == AGGREGATE and all(r.get(k) == v for k, v in match.items())]
    sel.sort(key=lambda r: r["K"])
    return np.array([r["K"] for r in sel]), np.array([r["angle_deg"] for r in sel])


def loglog_slope(x, y) -> float:
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


def spearman(x, y) -> float:
    from scipy.stats import spearmanr
    return float(spearmanr(x, y).statistic)
