"""Matrix concentration tail bounds for the blocks of M = X X^T / K, and a Monte-Carlo check.

With M partitioned as [[A, B], [B^T, D]] (A is m x m), the three controlled
bad events are

``chernoff_lower``  lambda_m(M) <= s1 nu^2 / 3
``chernoff_upper``  rho(D) >= s2 R L nu^4
``bernstein``       ||B|| > s3
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import asdict, dataclass

import numpy as np

from .bounds import BoundParams, correlation_r, l_const, sample_constants
from .manifold import generate_embedding, normal_part
from .rng import AUX, make_rng

KINDS = ("chernoff_lower", "chernoff_upper", "bernstein")


def _clamp(p: float) -> float:
    return min(1.0, max(0.0, p))


def _constants(m, n, kmax, nu, structure="dense") -> dict[str, float]:
    return sample_constants(BoundParams(m, n, kmax, nu, structure=structure))


def chernoff_lower_tail(m: int, n: int, kmax: float, nu: float, K: int, s1: float) -> float:
    """P(lambda_m(M) <= s1 nu^2/3) <= (n-m+1) exp(-(1-s1)^2 K / (6 R_M))."""
    if not 0 < s1 < 1:
        raise ValueError("s1 must lie in (0, 1)")
    r_m = m + 0.25 * (n - m) * m * m * nu * nu * kmax * kmax
    return _clamp((n - m + 1) * math.exp(-(1 - s1) ** 2 * K / (6.0 * r_m)))


def chernoff_upper_tail(m: int, n: int, kmax: float, nu: float, K: int, s2: float,
                        structure: str = "dense") -> float:
    """P(rho(D) >= s2 R L nu^4) <= (n-m) (e/s2)^(s2 R L K / R_D); free of nu."""
    if not s2 > math.e:
        raise ValueError("s2 must exceed e")
    if kmax == 0:
        return 0.0
    rl = correlation_r(structure, m, n) * l_const(m, kmax)
    r_d = 0.25 * (n - m) * m * m * kmax * kmax
    return _clamp((n - m) * math.exp(s2 * rl * K / r_d * (1.0 - math.log(s2))))


def bernstein_tail(m: int, n: int, kmax: float, nu: float, K: int, s3: float,
                   structure: str = "dense") -> float:
    """P(||B|| > s3) <= n exp(-(s3^2/2) K / (nu^6 R_sigma + R_B nu^3 s3 / 3))."""
    if not s3 > 0:
        raise ValueError("s3 must be positive")
    if kmax == 0 or nu == 0:
        return 0.0
    c = _constants(m, n, kmax, nu, structure)
    var = nu ** 6 * c["R_sigma"] + c["R_B"] * nu ** 3 * s3 / 3.0
    return _clamp(n * math.exp(-(s3 * s3 / 2.0) * K / var))


@dataclass(frozen=True)
class TailBoundQuery:
    kind: str
    m: int
    n: int
    kmax: float
    nu: float
    K: int
    threshold: float  # s1, s2 or s3 depending on kind
    structure: str = "dense"
    p: float = 0.01

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown kind {self.kind!r}; expected one of {KINDS}")
        if not 1 <= self.m < self.n:
            raise ValueError("need 1 <= m < n")
        if self.K < 1 or self.nu <= 0 or self.kmax < 0:
            raise ValueError("need K >= 1, nu > 0 and kmax >= 0")
        correlation_r(self.structure, self.m, self.n)
        t = self.threshold
        if self.kind == "chernoff_lower" and not 0 < t < 1:
            raise ValueError("s1 must lie in (0, 1)")
        if self.kind == "chernoff_upper" and not t > math.e:
            raise ValueError("s2 must exceed e")
        if self.kind == "bernstein" and not t > 0:
            raise ValueError("s3 must be positive")

    def theoretical_bound(self) -> float:
        args = (self.m, self.n, self.kmax, self.nu, self.K, self.threshold)
        if self.kind == "chernoff_lower":
            return chernoff_lower_tail(*args)
        if self.kind == "chernoff_upper":
            return chernoff_upper_tail(*args, self.structure)
        return bernstein_tail(*args, self.structure)


@dataclass(frozen=True)
class ValidationResult:
    query: TailBoundQuery
    theoretical_bound: float
    empirical_frequency: float
    hits: int
    reps: int
    seed: int

    def slack(self, sigmas: float = 3.0) -> float:
        """Binomial allowance sigmas * sqrt(b (1 - b) / reps) around the bound b."""
        b = self.theoretical_bound
        return sigmas * math.sqrt(b * (1.0 - b) / self.reps)

    def is_sound(self, sigmas: float = 3.0) -> bool:
        return self.empirical_frequency <= self.theoretical_bound + self.slack(sigmas)


def block_partition(M: np.ndarray, m: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    return M[:m, :m], M[:m, m:], M[m:, m:]


def _bad_event(q: TailBoundQuery, x: np.ndarray) -> bool:
    K = x.shape[1]
    m = q.m
    if q.kind == "chernoff_lower":
        M = (x @ x.T) / K
        lam = np.linalg.eigvalsh(M)[::-1]
        return bool(lam[m - 1] <= q.threshold * q.nu ** 2 / 3.0)
    if q.kind == "chernoff_upper":
        y = x[m:]
        D = (y @ y.T) / K
        rho = float(np.linalg.eigvalsh(D)[-1]) if D.size else 0.0
        rl = correlation_r(q.structure, m, q.n) * l_const(m, q.kmax)
        return bool(rho >= q.threshold * rl * q.nu ** 4) if q.kmax > 0 else False
    B = (x[:m] @ x[m:].T) / K
    return bool(np.linalg.norm(B, 2) > q.threshold)


def validate_tail_bounds(q: TailBoundQuery, reps: int = 500, seed: int = 0) -> ValidationResult:
    """Frequency of the bad event over ``reps`` independent quadratic germs and clouds."""
    if reps < 100:
        raise ValueError("reps must be >= 100")
    hits = 0
    for rep in range(reps):
        spec = generate_embedding("quadratic", q.m, q.n, q.kmax, (seed, rep, AUX))
        rng = make_rng((seed, rep, AUX + 1))
        coords = q.nu * (2.0 * rng.random((q.K, q.m)) - 1.0)
        x = np.empty((q.n, q.K))
        x[:q.m] = coords.T
        x[q.m:] = normal_part(spec, coords).T
        hits += _bad_event(q, x)
    return ValidationResult(q, q.theoretical_bound(), hits / reps, hits, reps, seed)


VALIDATION_HEADER = ["kind", "m", "n", "kmax", "nu", "K", "threshold", "structure",
                     "theoretical", "empirical", "reps", "seed"]


def validation_row(r: ValidationResult) -> list:
    q = asdict(r.query)
    return [q["kind"], q["m"], q["n"], repr(float(q["kmax"])), repr(float(q["nu"])), q["K"],
            repr(float(q["threshold"])), q["structure"], repr(r.theoretical_bound),
            repr(r.empirical_frequency), r.reps, r.seed]


def append_validation_csv(results, path) -> None:
    """Append rows, writing the header when the file is new or empty."""
    fresh = not os.path.exists(path) or os.path.getsize(path) == 0
    with open(path, "a", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if fresh:
            w.writerow(VALIDATION_HEADER)
        for r in results:
            w.writerow(validation_row(r))
